//! Numerical checks of the Fejér minorant and of the summation-by-parts
//! bound for exponential sums with smooth symbols.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numtheory::nearest_int_dist_unchecked;

/// Below this distance to the nearest integer, [`fejer`] sums coefficients.
pub const FEJER_SINGULAR: f64 = 1e-8;

/// Relative allowance for rounding in the exponential-sum comparison.
pub const SBP_ROUNDING: f64 = 1e-12;

/// Fejér kernel `𝓕_D(θ) = (sin(πDθ) / (D sin(πθ)))²`.
pub fn fejer(d: u64, theta: f64) -> f64 {
    assert!(d >= 1, "D must be positive");
    if nearest_int_dist_unchecked(theta) < FEJER_SINGULAR {
        return fejer_coefficients(d, theta);
    }
    let df = d as f64;
    let r = (PI * df * theta).sin() / (df * (PI * theta).sin());
    r * r
}

/// `𝓕_D(θ) = Σ_{|k| < D} (D - |k|) e(kθ) / D²`, evaluated term by term.
pub fn fejer_coefficients(d: u64, theta: f64) -> f64 {
    assert!(d >= 1, "D must be positive");
    let df = d as f64;
    let mut s = df;
    for k in 1..d {
        s += 2.0 * (df - k as f64) * (2.0 * PI * k as f64 * theta).cos();
    }
    s / (df * df)
}

/// Outcome of [`fejer_minorant_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerReport {
    pub d: u64,
    pub trials: usize,
    pub failures: usize,
    /// `min (π²/4) 𝓕_D(θ) - 1` over the samples.
    pub worst_margin: f64,
    pub worst_theta: f64,
}

impl FejerReport {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Samples `θ` with `‖θ‖ ≤ δ` and checks `(π²/4) 𝓕_D(θ) ≥ 1` for
/// `D = ⌊1/(2δ)⌋`. The endpoints `θ = ±δ` and `θ = 0` are always included.
pub fn fejer_minorant_check(delta: f64, trials: usize, rng: &mut impl Rng) -> Result<FejerReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, 1/2)"
        )));
    }
    let d = (1.0 / (2.0 * delta)).floor() as u64;
    let mut report = FejerReport {
        d,
        trials: 0,
        failures: 0,
        worst_margin: f64::INFINITY,
        worst_theta: 0.0,
    };
    let test = |theta: f64, report: &mut FejerReport| {
        let margin = PI * PI / 4.0 * fejer(d, theta) - 1.0;
        report.trials += 1;
        if margin < 0.0 {
            report.failures += 1;
        }
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_theta = theta;
        }
    };
    for theta in [0.0, delta, -delta] {
        test(theta, &mut report);
    }
    for _ in 0..trials {
        let shift = rng.random_range(-3i32..=3) as f64;
        let theta = rng.random_range(-delta..=delta) + shift;
        test(theta, &mut report);
    }
    Ok(report)
}

/// One-variable factor `g(t) = t^k e^{-ct}` of a product symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub power: u32,
    pub rate: f64,
}

impl Factor {
    pub fn new(power: u32, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) || power > 16 {
            return Err(Error::InvalidParameter(format!(
                "factor t^{power} e^(-{rate} t) out of range"
            )));
        }
        Ok(Factor { power, rate })
    }

    pub fn value(&self, t: f64) -> f64 {
        t.powi(self.power as i32) * (-self.rate * t).exp()
    }

    /// `g'(t) = e^{-ct} (k t^{k-1} - c t^k)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let k = self.power as i32;
        let lead = if k == 0 {
            0.0
        } else {
            k as f64 * t.powi(k - 1)
        };
        (-self.rate * t).exp() * (lead - self.rate * t.powi(k))
    }

    /// Critical points of `g` and `g'` (`k/c` and `(k ± √k)/c`).
    fn critical_points(&self) -> Vec<f64> {
        if self.rate == 0.0 {
            return Vec::new();
        }
        let k = self.power as f64;
        vec![
            k / self.rate,
            (k - k.sqrt()) / self.rate,
            (k + k.sqrt()) / self.rate,
        ]
    }

    /// `(sup |g|, sup |g'|)` over `[a, b]`, from the endpoints and the closed-form
    /// critical points.
    pub fn sups(&self, a: f64, b: f64) -> (f64, f64) {
        let mut pts = vec![a, b];
        pts.extend(
            self.critical_points()
                .into_iter()
                .filter(|t| *t >= a && *t <= b),
        );
        let s0 = pts.iter().map(|t| self.value(*t).abs()).fold(0.0, f64::max);
        let s1 = pts
            .iter()
            .map(|t| self.derivative(*t).abs())
            .fold(0.0, f64::max);
        (s0, s1)
    }
}

/// A product symbol `𝔞(u) = A ∏_s g_s(u_s/λ)` on an integer box `J ⊆ [0, λ]ⁿ`
/// with its bound `B ≥ Σ_{α ∈ {0,1}ⁿ} λ^{|α|} sup_J |∂^α 𝔞|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSpec {
    pub lambda: f64,
    pub j: Vec<(i64, i64)>,
    pub amplitude: f64,
    pub factors: Vec<Factor>,
    /// Declared `B`.
    pub bound: f64,
}

/// Grid estimate of the symbol norm against the declared bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCheck {
    pub estimate: f64,
    /// `1.1 ×` the grid estimate.
    pub inflated: f64,
    pub declared: f64,
}

impl GridCheck {
    /// The inflated estimate exceeds `B`: the declared bound may be tight.
    pub fn is_tight(&self) -> bool {
        self.inflated > self.declared
    }
}

impl SymbolSpec {
    /// Builds the spec with `B` computed from the closed-form derivatives.
    pub fn new(
        lambda: f64,
        j: Vec<(i64, i64)>,
        amplitude: f64,
        factors: Vec<Factor>,
    ) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} must be >= 1"
            )));
        }
        if j.is_empty() || j.len() != factors.len() {
            return Err(Error::InvalidParameter(
                "box and factor lists must have equal nonzero length".into(),
            ));
        }
        for &(lo, hi) in &j {
            if lo < 0 || lo > hi || hi as f64 > lambda {
                return Err(Error::InvalidParameter(format!(
                    "interval [{lo}, {hi}] not inside [0, {lambda}]"
                )));
            }
        }
        if !amplitude.is_finite() {
            return Err(Error::InvalidParameter("amplitude must be finite".into()));
        }
        let mut spec = SymbolSpec {
            lambda,
            j,
            amplitude,
            factors,
            bound: 0.0,
        };
        spec.bound = spec.exact_bound() * (1.0 + SBP_ROUNDING);
        Ok(spec)
    }

    /// Replaces `B` by a declared value, rejecting it when the grid estimate
    /// already exceeds it.
    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        self.bound = bound;
        self.check_grid(32)?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.j.len()
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        self.partial(&vec![false; self.n()], u)
    }

    /// `∂^α 𝔞(u)` for `α ∈ {0,1}ⁿ`.
    pub fn partial(&self, alpha: &[bool], u: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for ((g, &a), &us) in self.factors.iter().zip(alpha).zip(u) {
            let t = us / self.lambda;
            v *= if a {
                g.derivative(t) / self.lambda
            } else {
                g.value(t)
            };
        }
        v
    }

    /// `Σ_α λ^{|α|} sup_J |∂^α 𝔞| = |A| ∏_s (sup |g_s| + sup |g_s'|)`.
    pub fn exact_bound(&self) -> f64 {
        let mut b = self.amplitude.abs();
        for (g, &(lo, hi)) in self.factors.iter().zip(&self.j) {
            let (s0, s1) = g.sups(lo as f64 / self.lambda, hi as f64 / self.lambda);
            b *= s0 + s1;
        }
        b
    }

    /// Grid estimate of the symbol norm from `per_axisⁿ` points of `J`.
    pub fn grid_estimate(&self, per_axis: usize) -> f64 {
        let n = self.n();
        let per_axis = per_axis.max(2);
        let axes: Vec<Vec<f64>> = self
            .j
            .iter()
            .map(|&(lo, hi)| {
                (0..per_axis)
                    .map(|i| lo as f64 + (hi - lo) as f64 * i as f64 / (per_axis - 1) as f64)
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        for mask in 0..(1usize << n) {
            let alpha: Vec<bool> = (0..n).map(|s| mask >> s & 1 == 1).collect();
            let scale = self
                .lambda
                .powi(alpha.iter().filter(|a| **a).count() as i32);
            let mut sup: f64 = 0.0;
            let mut idx = vec![0usize; n];
            loop {
                let u: Vec<f64> = (0..n).map(|s| axes[s][idx[s]]).collect();
                sup = sup.max(self.partial(&alpha, &u).abs());
                let mut k = 0;
                while k < n {
                    idx[k] += 1;
                    if idx[k] < per_axis {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
            total += scale * sup;
        }
        total
    }

    /// Compares the grid estimate with `B`; errors when the estimate exceeds
    /// `B`, since a grid supremum never exceeds the true one.
    pub fn check_grid(&self, per_axis: usize) -> Result<GridCheck> {
        let estimate = self.grid_estimate(per_axis);
        if estimate > self.bound {
            return Err(Error::SymbolBound {
                estimate,
                declared: self.bound,
            });
        }
        Ok(GridCheck {
            estimate,
            inflated: 1.1 * estimate,
            declared: self.bound,
        })
    }

    /// A random spec from the product family: `n` factors `t^k e^{-ct}` with
    /// `k ≤ 3`, `c ∈ [0, 4]`, and a box inside `[1, λ]ⁿ`.
    pub fn random(rng: &mut impl Rng, n: usize, lambda: u64) -> Result<Self> {
        let mut j = Vec::with_capacity(n);
        let mut factors = Vec::with_capacity(n);
        for _ in 0..n {
            let lo = rng.random_range(1..=lambda as i64);
            let hi = rng.random_range(lo..=lambda as i64);
            j.push((lo, hi));
            factors.push(Factor::new(
                rng.random_range(0..=3),
                rng.random_range(0.0..=4.0),
            )?);
        }
        let amplitude = rng.random_range(0.5..=2.0);
        Self::new(lambda as f64, j, amplitude, factors)
    }
}

/// `S_𝔞(x, J) = Σ_{j ∈ J ∩ ℕ₀ⁿ} 𝔞(j) e(j·x)` by direct summation.
pub fn exponential_sum(spec: &SymbolSpec, x: &[f64]) -> Complex64 {
    let n = spec.n();
    let (lo0, hi0) = spec.j[0];
    (lo0..=hi0)
        .into_par_iter()
        .map(|first| {
            let mut idx: Vec<i64> = spec.j.iter().map(|r| r.0).collect();
            idx[0] = first;
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let u: Vec<f64> = idx.iter().map(|v| *v as f64).collect();
                let phase: f64 = idx.iter().zip(x).map(|(j, xs)| *j as f64 * xs).sum();
                acc +=
                    spec.value(&u) * Complex64::from_polar(1.0, 2.0 * PI * phase.rem_euclid(1.0));
                let mut k = n;
                loop {
                    if k == 1 {
                        return acc;
                    }
                    k -= 1;
                    if idx[k] < spec.j[k].1 {
                        idx[k] += 1;
                        break;
                    }
                    idx[k] = spec.j[k].0;
                }
            }
        })
        .sum()
}

/// `B ∏_s min{λ, 1/‖x_s‖}`.
pub fn sbp_bound(spec: &SymbolSpec, x: &[f64]) -> f64 {
    x.iter().fold(spec.bound, |acc, xs| {
        let d = nearest_int_dist_unchecked(*xs);
        acc * if d == 0.0 {
            spec.lambda
        } else {
            spec.lambda.min(1.0 / d)
        }
    })
}

/// Outcome of one [`sbp_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbpOutcome {
    pub s_abs: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Evaluates `|S_𝔞(x, J)|` directly and compares it with the
/// summation-by-parts bound. Requires `J ⊆ [1, λ]ⁿ`.
pub fn sbp_bound_check(spec: &SymbolSpec, x: &[f64]) -> Result<SbpOutcome> {
    if x.len() != spec.n() {
        return Err(Error::InvalidParameter(format!(
            "x has {} coordinates, expected {}",
            x.len(),
            spec.n()
        )));
    }
    if let Some(&(lo, _)) = spec.j.iter().find(|r| r.0 < 1) {
        return Err(Error::InvalidParameter(format!(
            "interval starting at {lo}: the bound is checked on boxes inside [1, lambda]^n"
        )));
    }
    spec.check_grid(32)?;
    let s_abs = exponential_sum(spec, x).norm();
    let bound = sbp_bound(spec, x);
    let terms: f64 = spec.j.iter().map(|(lo, hi)| (hi - lo + 1) as f64).product();
    let pass = s_abs <= bound + SBP_ROUNDING * terms * spec.amplitude.abs().max(1.0);
    Ok(SbpOutcome { s_abs, bound, pass })
}

/// One randomized trial: a random spec over `n` and `λ` and a random `x`
/// (half of the time a rational with small denominator).
pub fn sbp_random_trial(
    rng: &mut impl Rng,
    n: usize,
    lambda: u64,
) -> Result<(SymbolSpec, Vec<f64>, SbpOutcome)> {
    let spec = SymbolSpec::random(rng, n, lambda)?;
    let x: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                let q = rng.random_range(1..=12) as f64;
                rng.random_range(0..12) as f64 / q
            } else {
                rng.random_range(0.0..1.0)
            }
        })
        .collect();
    let out = sbp_bound_check(&spec, &x)?;
    Ok((spec, x, out))
}
