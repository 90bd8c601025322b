//! JSON manifold definitions:
//! `{kind, n | m, R, coefficients: [{exponents, re, im, component}], domain}`.

use std::path::Path;

use serde::Deserialize;

use rpnm_core::geometry::{
    builtin, BuiltinParams, ComplexPoly, HolomorphicGraphManifold, Manifold, RealGraphManifold,
    RealPoly, Region, Shape,
};
use rpnm_core::numtheory::{ComplexRational, ExactRational};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Coefficient {
    exponents: Vec<u32>,
    re: i64,
    #[serde(default)]
    im: i64,
    #[serde(default)]
    component: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default)]
    pub strict: Option<bool>,
    #[serde(default)]
    pub shape: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldFile {
    kind: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    m: Option<usize>,
    #[serde(rename = "R", default)]
    r: Option<usize>,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    coefficients: Vec<Coefficient>,
    #[serde(default)]
    domain: Option<DomainSpec>,
}

pub fn parse_shape(s: &str) -> CliResult<Shape> {
    match s {
        "box" => Ok(Shape::Box),
        "ball" => Ok(Shape::Ball),
        other => Err(CliError::usage(format!(
            "unknown shape `{other}` (expected box or ball)"
        ))),
    }
}

impl DomainSpec {
    fn region(&self) -> CliResult<Region> {
        let shape = parse_shape(self.shape.as_deref().unwrap_or("box"))?;
        Ok(Region::new(
            self.center.clone(),
            self.radius,
            shape,
            self.strict.unwrap_or(true),
        )?)
    }
}

fn missing(key: &str, kind: &str) -> CliError {
    CliError::usage(format!(
        "manifold file: `{key}` is required for kind `{kind}`"
    ))
}

pub fn load(path: &Path) -> CliResult<Manifold> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse(&text).map_err(|e| match e {
        CliError::Usage(msg) => CliError::usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> CliResult<Manifold> {
    let spec: ManifoldFile =
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("manifold file: {e}")))?;
    let name = spec.name.clone().unwrap_or_else(|| spec.kind.clone());
    match spec.kind.as_str() {
        "builtin" => {
            let name = spec
                .name
                .as_deref()
                .ok_or_else(|| missing("name", "builtin"))?;
            if !spec.coefficients.is_empty() || spec.domain.is_some() {
                return Err(CliError::usage(
                    "manifold file: builtin manifolds take no `coefficients` or `domain`",
                ));
            }
            let params = BuiltinParams {
                dim: spec.n.or(spec.m),
                radius: spec.radius,
            };
            Ok(builtin(name, params)?)
        }
        "real-poly" => {
            let n = spec.n.ok_or_else(|| missing("n", "real-poly"))?;
            let r = spec.r.unwrap_or(1);
            let domain = spec
                .domain
                .as_ref()
                .ok_or_else(|| missing("domain", "real-poly"))?
                .region()?;
            let mut comps: Vec<Vec<(Vec<u32>, ExactRational)>> = vec![Vec::new(); r];
            for (i, c) in spec.coefficients.iter().enumerate() {
                if c.im != 0 {
                    return Err(CliError::usage(format!(
                        "manifold file: coefficients[{i}].im must be 0 for a real manifold"
                    )));
                }
                if c.component >= r {
                    return Err(CliError::usage(format!(
                        "manifold file: coefficients[{i}].component = {} but R = {r}",
                        c.component
                    )));
                }
                comps[c.component].push((c.exponents.clone(), ExactRational::from_integer(c.re)));
            }
            let polys = comps
                .into_iter()
                .map(|terms| RealPoly::new(n, terms))
                .collect::<rpnm_core::Result<Vec<_>>>()?;
            Ok(Manifold::Real(RealGraphManifold::from_polys(
                name, polys, domain,
            )?))
        }
        "complex-poly" => {
            let m = spec.m.ok_or_else(|| missing("m", "complex-poly"))?;
            if spec.r.is_some_and(|r| r != 1) {
                return Err(CliError::usage(
                    "manifold file: complex-poly manifolds have R = 1",
                ));
            }
            let domain = spec
                .domain
                .as_ref()
                .ok_or_else(|| missing("domain", "complex-poly"))?
                .region()?;
            let mut terms = Vec::new();
            for (i, c) in spec.coefficients.iter().enumerate() {
                if c.component != 0 {
                    return Err(CliError::usage(format!(
                        "manifold file: coefficients[{i}].component must be 0 for a complex manifold"
                    )));
                }
                terms.push((
                    c.exponents.clone(),
                    ComplexRational::new(
                        ExactRational::from_integer(c.re),
                        ExactRational::from_integer(c.im),
                    ),
                ));
            }
            let poly = ComplexPoly::new(m, terms)?;
            Ok(Manifold::Holomorphic(HolomorphicGraphManifold::from_poly(
                name, poly, domain,
            )?))
        }
        other => Err(CliError::usage(format!(
            "manifold file: unknown kind `{other}` (expected real-poly, complex-poly or builtin)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_parabola_from_file() {
        let m = parse(
            r#"{"kind": "real-poly", "n": 1, "coefficients": [{"exponents": [2], "re": 1}],
                "domain": {"center": [0.5], "radius": 0.5}}"#,
        )
        .unwrap();
        let real = m.as_real().unwrap();
        assert_eq!(real.n(), 1);
        assert!(real.exact_poly().is_some());
    }

    #[test]
    fn complex_parabola_from_file() {
        let m = parse(
            r#"{"kind": "complex-poly", "m": 1, "coefficients": [{"exponents": [2], "re": 1, "im": 0}],
                "domain": {"center": [0, 0], "radius": 1}}"#,
        )
        .unwrap();
        assert_eq!(m.as_holomorphic().unwrap().m(), 1);
    }

    #[test]
    fn rejects_bad_shapes() {
        let cases = [
            (
                r#"{"kind": "real-poly", "n": 1, "coefficients": [{"exponents": [2, 1], "re": 1}], "domain": {"center": [0.5], "radius": 0.5}}"#,
                "exponents",
            ),
            (
                r#"{"kind": "real-poly", "n": 1, "coefficients": [{"exponents": [2], "re": 1, "im": 3}], "domain": {"center": [0.5], "radius": 0.5}}"#,
                "im",
            ),
            (
                r#"{"kind": "real-poly", "n": 1, "coefficients": []}"#,
                "domain",
            ),
            (r#"{"kind": "real-poly", "n": 1, "colour": 1}"#, "colour"),
            (r#"{"kind": "torus"}"#, "torus"),
        ];
        for (text, key) in cases {
            let err = parse(text).unwrap_err().to_string();
            assert!(err.contains(key), "{err}");
        }
    }

    #[test]
    fn builtin_by_file() {
        let m = parse(r#"{"kind": "builtin", "name": "complex-sphere", "m": 2, "radius": 0.2}"#)
            .unwrap();
        assert_eq!(m.as_holomorphic().unwrap().m(), 2);
    }
}
