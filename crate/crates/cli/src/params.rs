//! Count parameters shared by the `count` flags, manifest entries and the
//! `params` object of emitted records.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use rpnm_core::counting::{count, CountQuery, DeltaVec, Membership, Mode, View};
use rpnm_core::geometry::{builtin, BuiltinParams, Manifold, Region};
use rpnm_core::numtheory::ExactRational;

use crate::error::{CliError, CliResult};
use crate::manifold_file;

/// A tolerance as written by the user: a decimal (`0.25`) or a fraction
/// (`1/4`). Its exact value is the written one, not the nearest double.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaToken(pub String);

impl DeltaToken {
    pub fn value(&self) -> CliResult<ExactRational> {
        parse_rational(&self.0)
    }
}

impl Serialize for DeltaToken {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for DeltaToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Num(x) => DeltaToken(format!("{x}")),
            Raw::Text(t) => DeltaToken(t),
        })
    }
}

/// Parses `p/q` or a plain decimal into an exact rational.
pub fn parse_rational(text: &str) -> CliResult<ExactRational> {
    let t = text.trim();
    let bad = || CliError::usage(format!("cannot parse `{text}` as a decimal or fraction"));
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        return ExactRational::new(p, q).map_err(|_| bad());
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
        || frac.len() > 18
    {
        return Err(bad());
    }
    let digits: i128 = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let den = 10i128.pow(frac.len() as u32);
    let num = if neg { -digits } else { digits };
    ExactRational::new(num, den).map_err(|_| bad())
}

/// Splits a comma list of tolerances.
pub fn delta_list(text: &str) -> Vec<DeltaToken> {
    text.split(',')
        .map(|t| DeltaToken(t.trim().to_string()))
        .collect()
}

fn default_true() -> bool {
    true
}

fn default_shape() -> String {
    "box".into()
}

fn default_membership() -> String {
    "graph".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "default_shape")]
    pub shape: String,
    #[serde(default = "default_true")]
    pub strict: bool,
}

impl WindowSpec {
    /// Parses `"c1,…,cn;r"`.
    pub fn parse(text: &str, shape: &str, strict: bool) -> CliResult<Self> {
        let (center, radius) = text.split_once(';').ok_or_else(|| {
            CliError::usage(format!("window `{text}` must look like `c1,...,cn;r`"))
        })?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("window `{text}`: `{s}` is not a number")))
        };
        Ok(WindowSpec {
            center: center.split(',').map(num).collect::<CliResult<_>>()?,
            radius: num(radius)?,
            shape: shape.to_string(),
            strict,
        })
    }

    pub fn region(&self) -> CliResult<Region> {
        Ok(Region::new(
            self.center.clone(),
            self.radius,
            manifold_file::parse_shape(&self.shape)?,
            self.strict,
        )?)
    }
}

/// Everything that determines a count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<String>,
    #[serde(rename = "Q")]
    pub q: u64,
    pub delta: Vec<DeltaToken>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub witnesses: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<f64>,
    #[serde(default = "default_membership")]
    pub membership: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub full_index: bool,
}

/// A count ready to run.
pub struct PreparedCount {
    pub params: CountParams,
    pub manifold: Manifold,
    pub view: View,
    pub query: CountQuery,
}

impl PreparedCount {
    pub fn run(&self) -> rpnm_core::Result<rpnm_core::counting::CountResult> {
        count(&self.manifold, self.view, &self.query)
    }
}

pub fn resolve_manifold(
    name: Option<&str>,
    file: Option<&str>,
    dim: Option<usize>,
    radius: Option<f64>,
) -> CliResult<Manifold> {
    match (name, file) {
        (Some(name), None) => Ok(builtin(name, BuiltinParams { dim, radius })?),
        (None, Some(path)) => {
            if dim.is_some() || radius.is_some() {
                return Err(CliError::usage(
                    "`dim` and `radius` apply to builtin manifolds only",
                ));
            }
            manifold_file::load(Path::new(path))
        }
        _ => Err(CliError::usage(
            "give exactly one of `manifold` or `manifold_file`",
        )),
    }
}

impl CountParams {
    /// Resolves the manifold and query, then validates them with a dry run
    /// at `Q = 0`, so every configuration error surfaces before any counting.
    pub fn prepare(mut self, jobs: Option<usize>) -> CliResult<PreparedCount> {
        let manifold = resolve_manifold(
            self.manifold.as_deref(),
            self.manifold_file.as_deref(),
            self.dim,
            self.radius,
        )?;
        let view = match &self.view {
            Some(v) => View::parse(v)?,
            None => match manifold {
                Manifold::Real(_) => View::Real,
                Manifold::Holomorphic(_) => View::Gaussian,
            },
        };
        self.view = Some(view.as_str().to_string());
        let deltas = self
            .delta
            .iter()
            .map(DeltaToken::value)
            .collect::<CliResult<Vec<_>>>()?;
        let mut query = CountQuery::new(self.q, DeltaVec::rational(deltas)?)
            .mode(if self.exact { Mode::Exact } else { Mode::Float })
            .witnesses(self.witnesses);
        if let Some(w) = &self.window {
            query = query.window(w.region()?);
        }
        if let Some(g) = self.guard {
            query = query.guard(g);
        }
        query = query.membership(match self.membership.as_str() {
            "graph" => {
                if self.lipschitz.is_some() {
                    return Err(CliError::usage(
                        "`lipschitz` applies to the dist membership only",
                    ));
                }
                Membership::Graph
            }
            "dist" => Membership::Dist {
                lipschitz: self.lipschitz,
            },
            other => {
                return Err(CliError::usage(format!(
                    "unknown membership `{other}` (graph or dist)"
                )))
            }
        });
        if self.full_index {
            query = query.full_index(true);
        }
        if let Some(j) = jobs {
            query = query.jobs(j);
        }
        let mut dry = query.clone();
        dry.q_max = 0;
        count(&manifold, view, &dry)?;
        Ok(PreparedCount {
            params: self,
            manifold,
            view,
            query,
        })
    }
}
