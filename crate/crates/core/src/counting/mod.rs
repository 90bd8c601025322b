//! Brute-force evaluation of the counting functions.
//!
//! Four views are supported: rational points `a/q` near a real graph
//! ([`count_real`]), Gaussian rationals near a holomorphic graph
//! ([`count_gaussian`]), and the two dual counts against Legendre transforms
//! ([`count_dual_real`], [`count_dual_gaussian`]). All of them enumerate
//! denominators in parallel and merge per-denominator subtotals in a fixed
//! order, so results do not depend on the worker count.

mod driver;
mod dual;
mod gaussian;
mod real;
mod witness;

use std::fmt;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::geometry::{BumpWeight, Manifold, Region};
use crate::numtheory::{ExactRational, Gaussian};

pub use dual::{count_dual_gaussian, count_dual_real};
pub use gaussian::count_gaussian;
pub(crate) use gaussian::gaussian_denominators;
pub use real::{count_real, count_weighted, gradient_bound};
pub use witness::{verify_witness_gaussian, verify_witness_real};

/// Default half-width of the float-mode ambiguity band around thresholds.
pub const DEFAULT_GUARD: f64 = 1e-9;

/// Default number of witnesses kept per result.
pub const DEFAULT_WITNESS_CAP: usize = 16;

/// Tolerances `δ_1..δ_R` (or `(δ_ℜ, δ_ℑ)`), each in `[0, 1/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVec {
    values: Vec<f64>,
    exact: Vec<ExactRational>,
}

impl DeltaVec {
    /// From doubles; the exact form is the exact binary value of each entry.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let exact = values
            .iter()
            .map(|v| ExactRational::from_f64(*v))
            .collect::<Result<Vec<_>>>()?;
        Self::checked(values, exact)
    }

    /// From exact rationals.
    pub fn rational(exact: Vec<ExactRational>) -> Result<Self> {
        let values = exact.iter().map(|e| e.to_f64()).collect();
        Self::checked(values, exact)
    }

    /// `R` copies of `δ`.
    pub fn uniform(r: usize, delta: f64) -> Result<Self> {
        Self::new(vec![delta; r])
    }

    fn checked(values: Vec<f64>, exact: Vec<ExactRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("delta vector is empty".into()));
        }
        let half = ExactRational::new(1, 2)?;
        for e in &exact {
            if *e < ExactRational::zero() || *e > half {
                return Err(Error::InvalidParameter(format!(
                    "delta {e} outside [0, 1/2]"
                )));
            }
        }
        Ok(DeltaVec { values, exact })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact(&self) -> &[ExactRational] {
        &self.exact
    }

    /// `𝛅^× = Π δ_r`.
    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }

    /// `𝛅^∧ = min δ_r`.
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `𝛅^∨ = max δ_r`.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn small_exact(&self) -> Option<Vec<(i128, i128)>> {
        self.exact
            .iter()
            .map(|e| Some((e.numer().to_i128()?, e.denom().to_i128()?)))
            .collect()
    }
}

/// Arithmetic used for the residue tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Integer arithmetic; requires polynomial manifolds.
    Exact,
    /// Double precision with a guard band around each threshold.
    #[default]
    Float,
}

/// Which counting function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    Real,
    Gaussian,
    DualReal,
    DualGaussian,
}

impl View {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(View::Real),
            "gaussian" => Ok(View::Gaussian),
            "dual-real" => Ok(View::DualReal),
            "dual-gaussian" => Ok(View::DualGaussian),
            other => Err(Error::InvalidParameter(format!("unknown view `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            View::Real => "real",
            View::Gaussian => "gaussian",
            View::DualReal => "dual-real",
            View::DualGaussian => "dual-gaussian",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, View::Gaussian | View::DualGaussian)
    }
}

/// How a float-mode residue is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Membership {
    /// `‖q f_r(a/q)‖ ≤ δ_r`.
    #[default]
    Graph,
    /// Slack bracket for the distance-based count: accept at `≤ δ`, reject
    /// above `(1 + L)δ`, ambiguous in between. `None` estimates `L` from the
    /// gradient on a grid of the window.
    Dist { lipschitz: Option<f64> },
}

/// A counting request.
#[derive(Debug, Clone, PartialEq)]
pub struct CountQuery {
    /// `Q` (or `Q*` for the dual views).
    pub q_max: u64,
    pub deltas: DeltaVec,
    /// Replaces the manifold's domain as the admissible set for `a/q`.
    pub window: Option<Region>,
    pub mode: Mode,
    pub guard: f64,
    pub witness_cap: usize,
    /// Worker threads; `None` uses the global default.
    pub jobs: Option<usize>,
    pub membership: Membership,
    /// Dual real view only: sum over `ℤ^R \ {0}` instead of `ℕ₀^R \ {0}`.
    pub full_index: bool,
    /// Multiply each hit by this weight (or its dual transform).
    pub weight: Option<BumpWeight>,
}

impl CountQuery {
    pub fn new(q_max: u64, deltas: DeltaVec) -> Self {
        CountQuery {
            q_max,
            deltas,
            window: None,
            mode: Mode::Float,
            guard: DEFAULT_GUARD,
            witness_cap: DEFAULT_WITNESS_CAP,
            jobs: None,
            membership: Membership::Graph,
            full_index: false,
            weight: None,
        }
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn window(mut self, window: Region) -> Self {
        self.window = Some(window);
        self
    }

    pub fn guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn witnesses(mut self, cap: usize) -> Self {
        self.witness_cap = cap;
        self
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = Some(jobs);
        self
    }

    pub fn membership(mut self, membership: Membership) -> Self {
        self.membership = membership;
        self
    }

    pub fn full_index(mut self, full: bool) -> Self {
        self.full_index = full;
        self
    }

    pub fn weight(mut self, weight: BumpWeight) -> Self {
        self.weight = Some(weight);
        self
    }

    pub(crate) fn validate(&self, codim: usize) -> Result<()> {
        if self.deltas.len() != codim {
            return Err(Error::InvalidParameter(format!(
                "expected {codim} delta components, got {}",
                self.deltas.len()
            )));
        }
        if !(self.guard >= 0.0 && self.guard.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "guard {} must be finite and >= 0",
                self.guard
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        if self.q_max > i32::MAX as u64 {
            return Err(Error::InvalidParameter(format!(
                "Q = {} is too large",
                self.q_max
            )));
        }
        Ok(())
    }
}

/// A denominator: a positive integer, or a nonzero Gaussian integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Denominator {
    Int(i64),
    Gaussian(Gaussian<i64>),
}

impl fmt::Display for Denominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Denominator::Int(q) => write!(f, "{q}"),
            Denominator::Gaussian(g) => {
                if g.im < 0 {
                    write!(f, "{}-{}i", g.re, -g.im)
                } else {
                    write!(f, "{}+{}i", g.re, g.im)
                }
            }
        }
    }
}

/// Integer numerators of a witness.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Numerators {
    Int(Vec<i64>),
    Gaussian(Vec<Gaussian<i64>>),
}

/// An explicit member of a counting set.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub numerators: Numerators,
    pub denominator: Denominator,
    /// Dual views: the index vector `j` (its ℓ∞ norm is the denominator).
    pub index: Option<Vec<i64>>,
    /// Residues `‖q f_r(a/q)‖` (or their dual analogues).
    pub residuals: Vec<f64>,
}

/// Count attached to one denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCount {
    pub q: Denominator,
    pub count: u64,
    pub lower: u64,
    pub weight: f64,
}

/// Sum of weights over the accepted points (`lower`) and over accepted plus
/// ambiguous points (`upper`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightedCount {
    pub total: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of a count.
///
/// In float mode, points whose residue falls within the guard band of a
/// threshold are counted in `upper` but not in `lower`; `total` is the
/// guard-inclusive count `upper`. In exact mode `lower = total = upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub total: u64,
    pub lower: u64,
    pub upper: u64,
    pub per_q: Vec<QCount>,
    pub witnesses: Vec<Witness>,
    pub weighted: Option<WeightedCount>,
    pub elapsed: Duration,
}

impl CountResult {
    pub fn is_ambiguous(&self) -> bool {
        self.lower != self.upper
    }

    /// Histogram as CSV with header `q,count` (or `q_re,q_im,count`).
    pub fn to_csv(&self) -> String {
        let gaussian = matches!(
            self.per_q.first().map(|p| p.q),
            Some(Denominator::Gaussian(_))
        );
        let mut out = String::from(if gaussian {
            "q_re,q_im,count\n"
        } else {
            "q,count\n"
        });
        for row in &self.per_q {
            match row.q {
                Denominator::Int(q) => out.push_str(&format!("{q},{}\n", row.count)),
                Denominator::Gaussian(g) => {
                    out.push_str(&format!("{},{},{}\n", g.re, g.im, row.count))
                }
            }
        }
        out
    }
}

/// Per-point decision in float mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Verdict {
    Accept,
    Ambiguous,
    Reject,
}

impl Verdict {
    pub(crate) fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Reject, _) | (_, Verdict::Reject) => Verdict::Reject,
            (Verdict::Ambiguous, _) | (_, Verdict::Ambiguous) => Verdict::Ambiguous,
            _ => Verdict::Accept,
        }
    }
}

/// Float-mode comparison of a residue with `δ`: `slack` is the Lipschitz
/// factor of the distance bracket (0 for the graph test).
pub(crate) fn classify(residue: f64, delta: f64, guard: f64, slack: f64) -> Verdict {
    if residue <= delta - guard {
        Verdict::Accept
    } else if residue > (1.0 + slack) * delta + guard {
        Verdict::Reject
    } else {
        Verdict::Ambiguous
    }
}

/// Exact test `‖num/den‖ ≤ δ` (`den > 0`).
pub(crate) fn exact_within(
    num: i128,
    den: i128,
    delta: &(i128, i128),
    delta_big: &ExactRational,
) -> bool {
    match crate::numtheory::ratio_dist_le_i128(num, den, delta.0, delta.1) {
        Some(b) => b,
        None => {
            crate::numtheory::ratio_dist_le_big(&BigInt::from(num), &BigInt::from(den), delta_big)
        }
    }
}

/// Dispatches a query to the counting function for `view`.
pub fn count(manifold: &Manifold, view: View, query: &CountQuery) -> Result<CountResult> {
    match (view, manifold) {
        (View::Real, Manifold::Real(m)) => count_real(m, query),
        (View::Real, Manifold::Holomorphic(h)) => count_real(&crate::geometry::realify(h), query),
        (View::Gaussian, Manifold::Holomorphic(h)) => count_gaussian(h, query),
        (View::DualReal, Manifold::Real(m)) => count_dual_real(m, query),
        (View::DualReal, Manifold::Holomorphic(h)) => {
            count_dual_real(&crate::geometry::realify(h), query)
        }
        (View::DualGaussian, Manifold::Holomorphic(h)) => count_dual_gaussian(h, query),
        (v, Manifold::Real(m)) => Err(Error::InvalidParameter(format!(
            "view `{}` needs a holomorphic manifold, `{}` is real",
            v.as_str(),
            m.name()
        ))),
    }
}
