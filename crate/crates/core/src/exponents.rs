//! Exponent bookkeeping: the table of known counting exponents, the real and
//! complex self-improvement recursions, the choice of iteration depth,
//! envelope evaluation and power-law fitting.

use std::fmt;

use crate::error::{Error, Result};
use crate::numtheory::ExactRational;

fn ratio(num: i64, den: i64) -> ExactRational {
    ExactRational::new(num, den).expect("nonzero denominator")
}

/// One row of [`exponent_table`]; `value` is `None` when the bound does not
/// apply to the given `(n, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub name: &'static str,
    pub formula: &'static str,
    pub value: Option<ExactRational>,
    pub note: Option<String>,
}

impl TableRow {
    pub fn is_applicable(&self) -> bool {
        self.value.is_some()
    }
}

/// Known lower bounds for the counting exponent `𝔢(n, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentTable {
    pub n: u32,
    pub r: u32,
    pub rows: Vec<TableRow>,
}

impl ExponentTable {
    pub fn get(&self, name: &str) -> Option<&TableRow> {
        self.rows.iter().find(|row| row.name == name)
    }

    /// Value of the named row, if the row exists and applies.
    pub fn value(&self, name: &str) -> Option<&ExactRational> {
        self.get(name).and_then(|row| row.value.as_ref())
    }

    /// Largest applicable bound.
    pub fn best(&self) -> &TableRow {
        self.rows
            .iter()
            .filter(|row| row.value.is_some())
            .max_by(|a, b| a.value.cmp(&b.value))
            .expect("the trivial row always applies")
    }
}

impl fmt::Display for ExponentTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "e(n = {}, R = {})", self.n, self.r)?;
        for row in &self.rows {
            let value = match &row.value {
                Some(v) => format!("{v} ({:.6})", v.to_f64()),
                None => "n/a".to_string(),
            };
            let note = row.note.as_deref().unwrap_or("");
            writeln!(
                f,
                "  {:<14} {:<26} {:<22} {}",
                row.name, row.formula, value, note
            )?;
        }
        Ok(())
    }
}

/// Lower bounds for `𝔢(n, R)`, with inapplicable rows flagged.
pub fn exponent_table(n: u32, r: u32) -> Result<ExponentTable> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} and R = {r} must be positive"
        )));
    }
    let (ni, ri) = (n as i64, r as i64);
    let row = |name, formula, value: Option<ExactRational>, note: Option<String>| TableRow {
        name,
        formula,
        value,
        note,
    };
    let high_den = ni * ni + 2 * (ri - 1) * ni - 4;
    let rows = vec![
        row("trivial", "0", Some(ExactRational::zero()), None),
        row(
            "hypersurface",
            "1",
            (r == 1).then(|| ExactRational::from_integer(1)),
            (r != 1).then(|| "applies to R = 1 only".to_string()),
        ),
        row(
            "prior_general",
            "nR/(n+2(R-1))",
            Some(ratio(ni * ri, ni + 2 * (ri - 1))),
            None,
        ),
        row(
            "low_codim",
            "(n+2)R/(n+2R)",
            (r <= 2).then(|| ratio((ni + 2) * ri, ni + 2 * ri)),
            (r > 2).then(|| "applies to R <= 2 only".to_string()),
        ),
        row(
            "high_codim",
            "n^2 R/(n^2+2(R-1)n-4)",
            (r >= 3 && high_den > 0).then(|| ratio(ni * ni * ri, high_den)),
            if r < 3 {
                Some("applies to R >= 3 only".to_string())
            } else if high_den <= 0 {
                Some(format!("denominator {high_den} is not positive"))
            } else {
                None
            },
        ),
        row(
            "refined",
            "(n+2)R/(n+2R)",
            Some(ratio((ni + 2) * ri, ni + 2 * ri)),
            None,
        ),
    ];
    Ok(ExponentTable { n, r, rows })
}

/// Which recursion produced an [`ExponentSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Real { n: u32, r: u32 },
    Complex { m: u32 },
}

/// Iterates of a self-improvement recursion with its limit and a per-step
/// bound on `β_j - limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSequence {
    pub kind: SequenceKind,
    pub beta: Vec<f64>,
    /// `α_j` for the real recursion (`α_0` is undefined and stored as NaN);
    /// empty for the complex one.
    pub alpha: Vec<f64>,
    /// `γ_j` for the complex recursion; empty for the real one, whose log
    /// powers are not tracked.
    pub gamma: Vec<f64>,
    /// The value the exponents are meant to approach.
    pub limit: ExactRational,
    /// The fixed point the iterates from `β_0` actually approach.
    pub attractor: ExactRational,
    /// `certificate[j]` is the claimed bound on `β_j - limit`.
    pub certificate: Vec<f64>,
}

impl ExponentSequence {
    pub fn steps(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn last_beta(&self) -> f64 {
        *self.beta.last().expect("sequence starts with beta_0")
    }

    /// Index of the first step whose certificate inequality fails.
    pub fn certificate_failure(&self) -> Option<usize> {
        let limit = self.limit.to_f64();
        (0..self.beta.len()).find(|&j| self.beta[j] - limit > self.certificate[j] + 1e-14)
    }

    /// Checks the range and monotonicity invariants of the iterates.
    /// Certificates are reported separately by [`Self::certificate_failure`].
    pub fn check_invariants(&self) -> Result<()> {
        let limit = self.attractor.to_f64();
        let tol = 8.0 * f64::EPSILON * limit.max(1.0);
        let fail = |what: String| Err(Error::Degenerate(what));
        let (lo, hi) = match self.kind {
            SequenceKind::Real { n, r } => {
                let (n, r) = (n as f64, r as f64);
                let a_lo = n * (n + r + 1.0) / (n + 2.0);
                let a_limit = n + r - n / (2.0 * limit - n);
                for (j, a) in self.alpha.iter().enumerate().skip(1) {
                    let converged = (a - a_limit).abs() <= 8.0 * f64::EPSILON * a_limit;
                    if !((*a > a_lo || converged) && *a <= n + r) {
                        return fail(format!("alpha_{j} = {a} outside ({a_lo}, {}]", n + r));
                    }
                }
                (n * (n + r + 1.0) / (n + 2.0 * r), n + 1.0)
            }
            SequenceKind::Complex { m } => {
                if let Some(j) = self.gamma.iter().position(|g| *g < 0.0) {
                    return fail(format!("gamma_{j} is negative"));
                }
                (2.0 * m as f64, 2.0 * m as f64 + 2.0)
            }
        };
        for (j, b) in self.beta.iter().enumerate() {
            let converged = (b - limit).abs() <= tol;
            if !((*b > lo || converged) && *b <= hi) {
                return fail(format!("beta_{j} = {b} outside ({lo}, {hi}]"));
            }
        }
        for j in 1..self.beta.len() {
            let settled = self.beta[j - 1] - limit <= tol;
            if !settled && self.beta[j] >= self.beta[j - 1] {
                return fail(format!("beta is not decreasing at step {j}"));
            }
        }
        Ok(())
    }
}

/// One step of the real recursion: `(α_{j+1}, β_{j+1})` from `β_j`.
pub fn real_step(n: f64, r: f64, beta: f64) -> (f64, f64) {
    let alpha = n + r - n / (2.0 * beta - n);
    (alpha, n + 1.0 - n * r / (2.0 * alpha - n))
}

/// Exact counterpart of [`real_step`].
pub fn real_step_exact(
    n: u32,
    r: u32,
    beta: &ExactRational,
) -> Result<(ExactRational, ExactRational)> {
    let n = ExactRational::from_integer(n);
    let r = ExactRational::from_integer(r);
    let two = ExactRational::from_integer(2);
    let alpha = &(&n + &r) - &n.checked_div(&(&(&two * beta) - &n))?;
    let beta = &(&n + &ExactRational::from_integer(1))
        - &(&n * &r).checked_div(&(&(&two * &alpha) - &n))?;
    Ok((alpha, beta))
}

/// `n + 1 - (n+2)R/(n+2R) = n(n+R+1)/(n+2R)`.
pub fn real_limit(n: u32, r: u32) -> ExactRational {
    let (n, r) = (n as i64, r as i64);
    ratio(n * (n + r + 1), n + 2 * r)
}

/// Fixed points of the real recursion: the limit `n(n+R+1)/(n+2R)` and
/// `1 + n/2`. They coincide when `n² = 4R`.
pub fn real_fixed_points(n: u32, r: u32) -> (ExactRational, ExactRational) {
    (real_limit(n, r), ratio(n as i64 + 2, 2))
}

/// The larger fixed point, which the iterates from `β_0 = n + 1` approach.
/// It equals [`real_limit`] exactly when `n² ≥ 4R`.
pub fn real_attractor(n: u32, r: u32) -> ExactRational {
    let (a, b) = real_fixed_points(n, r);
    a.max(b)
}

/// Iterates the real recursion from `β_0 = n + 1`.
pub fn real_recursion(n: u32, r: u32, steps: usize) -> Result<ExponentSequence> {
    if n == 0 || r == 0 || steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "n = {n}, R = {r} and steps = {steps} must be positive"
        )));
    }
    let (nf, rf) = (n as f64, r as f64);
    let mut beta = vec![nf + 1.0];
    let mut alpha = vec![f64::NAN];
    for j in 0..steps {
        let (a, b) = real_step(nf, rf, beta[j]);
        alpha.push(a);
        beta.push(b);
    }
    let certificate = (0..=steps).map(|j| 0.8f64.powi(j as i32) * rf).collect();
    Ok(ExponentSequence {
        kind: SequenceKind::Real { n, r },
        beta,
        alpha,
        gamma: Vec::new(),
        limit: real_limit(n, r),
        attractor: real_attractor(n, r),
        certificate,
    })
}

/// `β ↦ 2m + 2 - 2m/(β - m)`.
pub fn complex_step(m: f64, beta: f64) -> f64 {
    2.0 * m + 2.0 - 2.0 * m / (beta - m)
}

/// Exact counterpart of [`complex_step`].
pub fn complex_step_exact(m: u32, beta: &ExactRational) -> Result<ExactRational> {
    let mf = ExactRational::from_integer(m);
    let two_m = ExactRational::from_integer(2 * m as i64);
    let shifted = beta - &mf;
    Ok(&ExactRational::from_integer(2 * m as i64 + 2) - &two_m.checked_div(&shifted)?)
}

/// Attracting fixed point of the complex recursion: `max(2m, m + 2)`.
pub fn complex_limit(m: u32) -> ExactRational {
    ExactRational::from_integer((2 * m).max(m + 2))
}

/// Per-step bound on `β_j - limit`: `(1/2)^j` for `m = 1`, `2/(j+1)` for
/// `m = 2` and `2 (2/m)^j` for `m ≥ 3`.
pub fn complex_certificate(m: u32, j: usize) -> f64 {
    match m {
        1 => 0.5f64.powi(j as i32),
        2 => 2.0 / (j as f64 + 1.0),
        _ => 2.0 * (2.0 / m as f64).powi(j as i32),
    }
}

/// Iterates the complex recursion from `β_0 = 2m + 2`, `γ_0 = 0`.
pub fn complex_recursion(m: u32, steps: usize) -> Result<ExponentSequence> {
    if m == 0 || steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "m = {m} and steps = {steps} must be positive"
        )));
    }
    let mf = m as f64;
    let mut beta = vec![2.0 * mf + 2.0];
    let mut gamma = vec![0.0];
    for j in 0..steps {
        beta.push(complex_step(mf, beta[j]));
        gamma.push(2.0 * (gamma[j] + 2.0) / mf);
    }
    Ok(ExponentSequence {
        kind: SequenceKind::Complex { m },
        beta,
        alpha: Vec::new(),
        gamma,
        limit: complex_limit(m),
        attractor: complex_limit(m),
        certificate: (0..=steps).map(|j| complex_certificate(m, j)).collect(),
    })
}

/// Result of [`choose_n`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationDepth {
    pub n: u32,
    /// `(4/5)^N R`.
    pub value: f64,
    /// The window `[ν/4, ν/2)`.
    pub window: (f64, f64),
    /// Whether `ν/4 ≤ (4/5)^N R` holds as well.
    pub in_window: bool,
}

/// Smallest `N ≥ 1` with `(4/5)^N R < ν/2`.
pub fn choose_n(nu: f64, r: u32) -> Result<IterationDepth> {
    let rf = r as f64;
    if r == 0 || !(nu > 0.0 && nu < 2.0 * rf) {
        return Err(Error::InvalidParameter(format!(
            "nu = {nu} must lie in (0, 2R) with R = {r} >= 1"
        )));
    }
    let (lo, hi) = (nu / 4.0, nu / 2.0);
    let mut n = 1u32;
    let mut value = 0.8 * rf;
    while value >= hi {
        n += 1;
        value = 0.8f64.powi(n as i32) * rf;
    }
    Ok(IterationDepth {
        n,
        value,
        window: (lo, hi),
        in_window: lo <= value,
    })
}

/// Which displayed envelope [`envelope`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `δ^× Q^{2m+2} + Q^{2m} ℰ(Q)`, and `δ^× Q^4 + Q^3 log^κ Q` for `m = 1`.
    ComplexTheorem { m: u32 },
    /// `δ^× Q^{2m+1} + Q^{2m-1+ε}`.
    ComplexConjecture { m: u32, epsilon: f64 },
    /// `δ^× Q^{n+1} + δ^× (δ^∧)^{-R} Q^{n+1-(n+2)R/(n+2R)+ν}`.
    RealAnisotropic { n: u32, r: u32, nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    pub regime: Regime,
    pub kappa: f64,
}

impl EnvelopeParams {
    /// Uses the default `κ`: 4 for `m = 1` and `m ≥ 3`, 2 for `m = 2`.
    pub fn new(regime: Regime) -> Self {
        let kappa = match regime {
            Regime::ComplexTheorem { m: 2 } => 2.0,
            _ => 4.0,
        };
        EnvelopeParams { regime, kappa }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa = {kappa} must be >= 1"
            )));
        }
        self.kappa = kappa;
        Ok(self)
    }
}

/// `ℰ(Q)`: `log^κ Q` for `m ≠ 2` and `e^{κ √(log Q log log Q)}` for `m = 2`,
/// with `log log Q` taken as 0 for `Q ≤ 3`.
pub fn log_factor(m: u32, kappa: f64, q: f64) -> f64 {
    let lq = q.ln().max(0.0);
    if m == 2 {
        let llq = if q <= 3.0 { 0.0 } else { lq.ln() };
        (kappa * (lq * llq).sqrt()).exp()
    } else {
        lq.powf(kappa)
    }
}

/// Evaluates the selected envelope at `Q` for the tolerance vector `deltas`
/// (a single entry stands for an isotropic vector).
pub fn envelope(params: &EnvelopeParams, q: f64, deltas: &[f64]) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("Q = {q} must be >= 1")));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter(
            "deltas must be nonempty and nonnegative".into(),
        ));
    }
    let product = |len: usize| -> Result<f64> {
        match deltas.len() {
            1 => Ok(deltas[0].powi(len as i32)),
            k if k == len => Ok(deltas.iter().product()),
            k => Err(Error::InvalidParameter(format!(
                "{k} deltas given, expected 1 or {len}"
            ))),
        }
    };
    match params.regime {
        Regime::ComplexTheorem { m } | Regime::ComplexConjecture { m, .. } if m == 0 => {
            Err(Error::InvalidParameter("m must be positive".into()))
        }
        Regime::ComplexTheorem { m: 1 } => {
            Ok(product(2)? * q.powi(4) + q.powi(3) * log_factor(1, params.kappa, q))
        }
        Regime::ComplexTheorem { m } => {
            let mf = m as f64;
            Ok(product(2)? * q.powf(2.0 * mf + 2.0)
                + q.powf(2.0 * mf) * log_factor(m, params.kappa, q))
        }
        Regime::ComplexConjecture { m, epsilon } => {
            if !(epsilon > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon = {epsilon} must be positive"
                )));
            }
            let mf = m as f64;
            Ok(product(2)? * q.powf(2.0 * mf + 1.0) + q.powf(2.0 * mf - 1.0 + epsilon))
        }
        Regime::RealAnisotropic { n, r, nu } => {
            if n == 0 || r == 0 || !(nu > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "n = {n}, R = {r}, nu = {nu} must be positive"
                )));
            }
            let times = product(r as usize)?;
            let isotropic = deltas.iter().all(|d| *d == deltas[0]);
            let wedge = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
            let shape = if isotropic {
                1.0
            } else if wedge == 0.0 {
                return Err(Error::InvalidParameter(
                    "anisotropic deltas need a positive minimum".into(),
                ));
            } else {
                times / wedge.powi(r as i32)
            };
            let (nf, rf) = (n as f64, r as f64);
            let e = (nf + 2.0) * rf / (nf + 2.0 * rf);
            Ok(times * q.powf(nf + 1.0) + shape * q.powf(nf + 1.0 - e + nu))
        }
    }
}

/// How [`fit_scaling`] weights the log-log samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight each sample by its count, the inverse variance of a Poisson
    /// count on the log scale.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub weighting: Weighting,
    /// Discard samples with `Q < 10 Q_min`.
    pub drop_smallest_decade: bool,
}

/// Least-squares line through `(log Q, log count)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// `max |count / (e^intercept Q^slope) - 1|` over the fitted samples.
    pub max_residual: f64,
    pub samples: usize,
}

/// Fits `count ≈ e^intercept Q^slope`.
pub fn fit_scaling(samples: &[(f64, f64)], options: FitOptions) -> Result<FitResult> {
    if let Some((q, c)) = samples
        .iter()
        .find(|(q, c)| !(*q > 0.0 && *c > 0.0 && q.is_finite() && c.is_finite()))
    {
        return Err(Error::InvalidParameter(format!(
            "sample (Q = {q}, count = {c}) must be positive"
        )));
    }
    let mut used: Vec<(f64, f64)> = samples.to_vec();
    if options.drop_smallest_decade {
        let q_min = used.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        used.retain(|s| s.0 >= 10.0 * q_min);
    }
    if used.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "{} samples to fit, need at least 3",
            used.len()
        )));
    }
    let pts: Vec<(f64, f64, f64)> = used
        .iter()
        .map(|(q, c)| {
            let w = match options.weighting {
                Weighting::Uniform => 1.0,
                Weighting::Count => *c,
            };
            (q.ln(), c.ln(), w)
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let spread = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if spread < 1e-9 || sxx <= 0.0 {
        return Err(Error::Degenerate("all samples share the same Q".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = pts
        .iter()
        .map(|p| ((p.1 - intercept - slope * p.0).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(FitResult {
        slope,
        intercept,
        max_residual,
        samples: pts.len(),
    })
}

/// Worst case of the closure property: for `β` above the real limit,
/// `α = n + R - n/(2β - n)` exceeds `n(n+R+1)/(n+2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureReport {
    pub checked: usize,
    pub failures: usize,
    /// `min (α - n(n+R+1)/(n+2))` over the grid.
    pub worst_margin: f64,
}

/// Checks the closure property on `points` values of `β` spread over
/// `(limit, n + 1]`, using exact arithmetic.
pub fn closure_check(n: u32, r: u32, points: usize) -> Result<ClosureReport> {
    if n == 0 || r == 0 || points == 0 {
        return Err(Error::InvalidParameter(
            "n, R and points must be positive".into(),
        ));
    }
    let limit = real_limit(n, r);
    let top = ExactRational::from_integer(n as i64 + 1);
    let span = &top - &limit;
    let threshold = ratio((n * (n + r + 1)) as i64, n as i64 + 2);
    let nq = ExactRational::from_integer(n);
    let two = ExactRational::from_integer(2);
    let mut report = ClosureReport {
        checked: 0,
        failures: 0,
        worst_margin: f64::INFINITY,
    };
    for k in 1..=points {
        let beta = &limit + &(&span * &ratio(k as i64, points as i64));
        let alpha =
            &(&nq + &ExactRational::from_integer(r)) - &nq.checked_div(&(&(&two * &beta) - &nq))?;
        let margin = &alpha - &threshold;
        report.checked += 1;
        if margin <= ExactRational::zero() {
            report.failures += 1;
        }
        report.worst_margin = report.worst_margin.min(margin.to_f64());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_rows() {
        let t = exponent_table(2, 2).unwrap();
        assert_eq!(t.value("refined"), Some(&ratio(4, 3)));
        assert_eq!(t.value("prior_general"), Some(&ratio(1, 1)));
        assert_eq!(t.value("low_codim"), Some(&ratio(4, 3)));
        assert!(!t.get("hypersurface").unwrap().is_applicable());
        assert!(!t.get("high_codim").unwrap().is_applicable());
        assert_eq!(t.best().value, Some(ratio(4, 3)));
        for m in 1..8i64 {
            let t = exponent_table(2 * m as u32, 2).unwrap();
            assert_eq!(
                t.value("refined").unwrap(),
                &(&ratio(1, 1) + &ratio(m, m + 2))
            );
        }
        for n in 1..10 {
            let t = exponent_table(n, 1).unwrap();
            for name in ["hypersurface", "prior_general", "refined"] {
                assert_eq!(t.value(name), Some(&ratio(1, 1)), "{name}");
            }
        }
        assert_eq!(
            exponent_table(1, 3).unwrap().value("high_codim"),
            Some(&ratio(3, 1))
        );
        assert_eq!(
            exponent_table(4, 3).unwrap().value("high_codim"),
            Some(&ratio(48, 28))
        );
        assert!(exponent_table(0, 1).is_err());
    }

    #[test]
    fn real_first_step_and_limit() {
        let s = real_recursion(2, 2, 1).unwrap();
        assert!((s.alpha[1] - 3.5).abs() < 1e-15);
        assert!((s.beta[1] - 2.2).abs() < 1e-15);
        assert_eq!(s.limit, ratio(5, 3));
        assert!(s.beta[1] - 5.0 / 3.0 <= s.certificate[1]);
        let (a, b) = real_step_exact(2, 2, &ratio(3, 1)).unwrap();
        assert_eq!((a, b), (ratio(7, 2), ratio(11, 5)));
    }

    #[test]
    fn real_limits_and_certificates() {
        for n in 1..=10 {
            for r in 1..=4 {
                let s = real_recursion(n, r, 200).unwrap();
                s.check_invariants().unwrap();
                let limit = real_limit(n, r);
                assert_eq!(
                    limit,
                    &ratio(n as i64 + 1, 1) - &ratio((n as i64 + 2) * r as i64, (n + 2 * r) as i64)
                );
                let (a, b) = real_fixed_points(n, r);
                assert_eq!(real_step_exact(n, r, &a).unwrap().1, a);
                assert_eq!(real_step_exact(n, r, &b).unwrap().1, b);
                let gap = (s.last_beta() - limit.to_f64()).abs();
                let square = (n * n) as i64 - 4 * r as i64;
                if square > 0 {
                    assert!(gap < 1e-10, "({n}, {r})");
                    let expect_cert = if (n, r) == (3, 2) { Some(32) } else { None };
                    assert_eq!(s.certificate_failure(), expect_cert, "({n}, {r})");
                } else if square < 0 {
                    assert!((s.last_beta() - b.to_f64()).abs() < 1e-10, "({n}, {r})");
                    assert!(s.certificate_failure().is_some());
                } else {
                    assert_eq!(a, b);
                    assert!(gap > 1e-4 && gap < 0.1, "({n}, {r}): {gap}");
                }
            }
        }
    }

    #[test]
    fn complex_closed_forms() {
        let s = complex_recursion(2, 50).unwrap();
        s.check_invariants().unwrap();
        for j in 0..=50 {
            assert!((s.beta[j] - (4.0 + 2.0 / (j as f64 + 1.0))).abs() <= 1e-12);
            assert_eq!(s.gamma[j], 2.0 * j as f64);
        }
        let mut b = ratio(6, 1);
        for j in 1..=20i64 {
            b = complex_step_exact(2, &b).unwrap();
            assert_eq!(b, ratio(4 * j + 6, j + 1));
        }
    }

    #[test]
    fn complex_m1_fixed_point() {
        assert_eq!(complex_step_exact(1, &ratio(3, 1)).unwrap(), ratio(3, 1));
        assert_eq!(complex_step_exact(1, &ratio(4, 1)).unwrap(), ratio(10, 3));
        let s = complex_recursion(1, 60).unwrap();
        s.check_invariants().unwrap();
        assert_eq!(s.limit, ratio(3, 1));
        assert!(s.beta.windows(2).all(|w| w[1] <= w[0]));
        assert!((s.last_beta() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn complex_contraction() {
        for m in 3..10 {
            let s = complex_recursion(m, 80).unwrap();
            s.check_invariants().unwrap();
            assert_eq!(s.limit, ratio(2 * m as i64, 1));
            assert!(s.gamma.iter().skip(1).all(|g| *g >= 0.0 && *g <= 4.0));
        }
        let s = complex_recursion(3, 40).unwrap();
        for (j, b) in s.beta.iter().enumerate() {
            assert!((b - 6.0).abs() <= 2.0 * (2.0f64 / 3.0).powi(j as i32) + 1e-15);
        }
    }

    #[test]
    fn iteration_depth() {
        let d = choose_n(0.1, 2).unwrap();
        assert_eq!(d.n, 17);
        assert!(d.in_window);
        assert!(0.8f64.powi(16) * 2.0 >= 0.05);
        assert!(choose_n(4.0 - 1e-9, 2).unwrap().n < 10);
        for nu in [0.01, 0.1, 0.5, 1.0] {
            let a = choose_n(nu, 1).unwrap().n;
            let b = choose_n(nu, 2).unwrap().n;
            assert!((3..=4).contains(&(b - a)), "{nu}: {a} {b}");
        }
        assert!(choose_n(0.0, 2).is_err());
        assert!(choose_n(4.0, 2).is_err());
    }

    #[test]
    fn envelopes() {
        let q = std::f64::consts::E.powf(std::f64::consts::E);
        let p = EnvelopeParams::new(Regime::ComplexTheorem { m: 2 })
            .with_kappa(1.0)
            .unwrap();
        let v = envelope(&p, q, &[0.0]).unwrap();
        let expect = q.powi(4) * std::f64::consts::E.sqrt().exp();
        assert!((v / expect - 1.0).abs() < 1e-12);
        assert_eq!(
            EnvelopeParams::new(Regime::ComplexTheorem { m: 2 }).kappa,
            2.0
        );
        assert_eq!(
            EnvelopeParams::new(Regime::ComplexTheorem { m: 5 }).kappa,
            4.0
        );
        assert_eq!(log_factor(2, 3.0, 2.5), 1.0);

        let m1 = EnvelopeParams::new(Regime::ComplexTheorem { m: 1 });
        let v = envelope(&m1, 100.0, &[0.01]).unwrap();
        assert!((v - (1e-4 * 1e8 + 1e6 * 100f64.ln().powi(4))).abs() < 1e-9 * v);

        let real = EnvelopeParams::new(Regime::RealAnisotropic {
            n: 2,
            r: 2,
            nu: 0.1,
        });
        let iso = envelope(&real, 50.0, &[0.1]).unwrap();
        let expect = 0.01 * 50f64.powi(3) + 50f64.powf(3.0 - 4.0 / 3.0 + 0.1);
        assert!((iso / expect - 1.0).abs() < 1e-12);
        let aniso = envelope(&real, 50.0, &[0.1, 0.4]).unwrap();
        let expect = 0.04 * 50f64.powi(3) + 4.0 * 50f64.powf(3.0 - 4.0 / 3.0 + 0.1);
        assert!((aniso / expect - 1.0).abs() < 1e-12);
        assert!(envelope(&real, 50.0, &[0.0, 0.4]).is_err());
        assert!(envelope(&real, 50.0, &[0.1, 0.1, 0.1]).is_err());
        assert!(EnvelopeParams::new(Regime::ComplexTheorem { m: 2 })
            .with_kappa(0.5)
            .is_err());
    }

    #[test]
    fn dominant_term_crossover() {
        for m in [3u32, 4] {
            let p = EnvelopeParams::new(Regime::ComplexTheorem { m });
            for q in [10.0, 100.0, 1000.0] {
                let e = log_factor(m, p.kappa, q);
                let cross = e.sqrt() / q;
                for scale in [0.5, 2.0] {
                    let d = cross * scale;
                    let main = d * d * q.powf(2.0 * m as f64 + 2.0);
                    let err = q.powf(2.0 * m as f64) * e;
                    assert_eq!(main >= err, scale > 1.0);
                }
            }
        }
    }

    #[test]
    fn fits() {
        let s: Vec<(f64, f64)> = (1..8)
            .map(|k| (k as f64 * 10.0, 5.0 * (k as f64 * 10.0).powi(3)))
            .collect();
        let f = fit_scaling(&s, FitOptions::default()).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-10);
        assert!(f.max_residual < 1e-10);
        let s: Vec<(f64, f64)> = (0..=20)
            .map(|k| {
                let q = 10f64.powf(2.0 + k as f64 / 10.0);
                (q, q * q + q)
            })
            .collect();
        let f = fit_scaling(&s, FitOptions::default()).unwrap();
        assert!(f.slope > 1.99 && f.slope < 2.01);
        let w = fit_scaling(
            &s,
            FitOptions {
                weighting: Weighting::Count,
                drop_smallest_decade: true,
            },
        )
        .unwrap();
        assert!(w.samples < s.len());
        assert!(w.slope > 1.99 && w.slope < 2.01);
        assert!(fit_scaling(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)], FitOptions::default()).is_err());
        assert!(fit_scaling(&[(5.0, 1.0)], FitOptions::default()).is_err());
        assert!(fit_scaling(&[(5.0, 1.0), (6.0, 0.0), (7.0, 1.0)], FitOptions::default()).is_err());
    }

    #[test]
    fn closure_on_grid() {
        for n in 1..=6 {
            for r in 1..=4 {
                let c = closure_check(n, r, 1000).unwrap();
                assert_eq!(c.failures, 0, "({n}, {r})");
                assert!(c.worst_margin > 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn real_step_preserves_range(n in 1u32..12, r in 1u32..6, t in 0.0f64..1.0) {
            let (nf, rf) = (n as f64, r as f64);
            let lo = nf * (nf + rf + 1.0) / (nf + 2.0 * rf);
            let beta = lo + (nf + 1.0 - lo) * (1e-6 + (1.0 - 1e-6) * t);
            let (a, b) = real_step(nf, rf, beta);
            prop_assert!(a > nf * (nf + rf + 1.0) / (nf + 2.0) && a <= nf + rf);
            prop_assert!(b > lo);
            let attractor = real_attractor(n, r).to_f64();
            if beta >= attractor {
                prop_assert!(b >= attractor - 1e-12 && b <= beta + 1e-12);
            }
        }

        #[test]
        fn complex_step_preserves_range(m in 1u32..12, t in 0.0f64..1.0) {
            let mf = m as f64;
            let limit = complex_limit(m).to_f64();
            let beta = limit + (2.0 * mf + 2.0 - limit) * t;
            let next = complex_step(mf, beta);
            prop_assert!(next >= limit - 1e-12 && next <= beta + 1e-12);
        }
    }
}
