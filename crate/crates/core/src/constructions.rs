//! Explicit lower-bound constructions on the complex parabola and exact
//! representation counts for the complex sphere.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::counting::{Denominator, Numerators};
use crate::error::{Error, Result};
use crate::numtheory::{ExactRational, Gaussian};

/// Default memory budget for the representation-count hash tables.
pub const DEFAULT_BUDGET_BYTES: u64 = 2 << 30;

/// Approximate footprint of one hash-table entry.
const ENTRY_BYTES: u64 = 48;

/// The two rational-point families on `w = z²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Construction {
    /// `(a/u, b/u, (a²-b²)/u², 2ab/u²)` with denominator `u²`.
    ParabolaReal,
    /// `(z, z²)` with `z = (a+ib)/(u+iv)` and denominator `(u+iv)²`.
    ParabolaGaussian,
}

impl Construction {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "parabola-real" => Ok(Construction::ParabolaReal),
            "parabola-gaussian" => Ok(Construction::ParabolaGaussian),
            other => Err(Error::InvalidParameter(format!(
                "unknown construction `{other}`"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Construction::ParabolaReal => "parabola-real",
            Construction::ParabolaGaussian => "parabola-gaussian",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One member of a construction: its parameters `(a, b, u)` or
/// `(a, b, u, v)`, integer numerators and denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionWitness {
    pub params: Vec<i64>,
    pub numerators: Numerators,
    pub denominator: Denominator,
}

impl ConstructionWitness {
    fn real(a: i64, b: i64, u: i64) -> Self {
        ConstructionWitness {
            params: vec![a, b, u],
            numerators: Numerators::Int(vec![a * u, b * u, a * a - b * b, 2 * a * b]),
            denominator: Denominator::Int(u * u),
        }
    }

    fn gaussian(a: i64, b: i64, u: i64, v: i64) -> Self {
        let z = Gaussian::new(a, b);
        let w = Gaussian::new(u, v);
        ConstructionWitness {
            params: vec![a, b, u, v],
            numerators: Numerators::Gaussian(vec![z * w, z * z]),
            denominator: Denominator::Gaussian(w * w),
        }
    }

    /// Checks in integer arithmetic that the numerators and denominator match
    /// the parameters, that the denominator bound holds and that the point
    /// lies on `w = z²`.
    pub fn verify(&self, q_max: u64) -> bool {
        let q_max = q_max as i128;
        match (&self.numerators, self.denominator, self.params.as_slice()) {
            (Numerators::Int(p), Denominator::Int(q), &[a, b, u]) => {
                if *self != Self::real(a, b, u) || p.len() != 4 {
                    return false;
                }
                let (q, p): (i128, Vec<i128>) = (q as i128, p.iter().map(|v| *v as i128).collect());
                let params_ok = 1 <= a && a < u && 1 <= b && b < u;
                params_ok
                    && 1 <= q
                    && q <= q_max
                    && 0 < p[0]
                    && p[0] < q
                    && 0 < p[1]
                    && p[1] < q
                    && p[0] * p[0] - p[1] * p[1] == q * p[2]
                    && 2 * p[0] * p[1] == q * p[3]
            }
            (Numerators::Gaussian(p), Denominator::Gaussian(q), &[a, b, u, v]) => {
                if *self != Self::gaussian(a, b, u, v) || p.len() != 2 {
                    return false;
                }
                let wide = |g: Gaussian<i64>| Gaussian::new(g.re as i128, g.im as i128);
                let (q, n1, n2) = (wide(q), wide(p[0]), wide(p[1]));
                let linf = q.re.abs().max(q.im.abs());
                let params_ok = 1 <= a
                    && a < u
                    && 1 <= b
                    && b < v
                    && 2 * u * u <= q_max as i64
                    && 2 * v * v <= q_max as i64;
                params_ok && 0 < linf && linf <= q_max && n1 * n1 == q * n2
            }
            _ => false,
        }
    }

    /// The rational point `numerators / denominator` in real coordinates.
    pub fn point(&self) -> Vec<ExactRational> {
        match (&self.numerators, self.denominator) {
            (Numerators::Int(p), Denominator::Int(q)) => p
                .iter()
                .map(|v| ExactRational::new(*v, q).expect("positive denominator"))
                .collect(),
            (Numerators::Gaussian(p), Denominator::Gaussian(q)) => {
                let norm = (q.re as i128).pow(2) + (q.im as i128).pow(2);
                let mut re = Vec::new();
                let mut im = Vec::new();
                for n in p {
                    let t = Gaussian::new(n.re as i128, n.im as i128)
                        * Gaussian::new(q.re as i128, -(q.im as i128));
                    re.push(
                        ExactRational::new(BigInt::from(t.re), BigInt::from(norm))
                            .expect("nonzero norm"),
                    );
                    im.push(
                        ExactRational::new(BigInt::from(t.im), BigInt::from(norm))
                            .expect("nonzero norm"),
                    );
                }
                re.extend(im);
                re
            }
            _ => unreachable!("witness kinds are constructed consistently"),
        }
    }
}

/// Members of a construction up to a denominator bound. Witnesses are
/// generated lazily by [`WitnessSet::iter`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSet {
    pub construction: Construction,
    pub q_max: u64,
    pub count: u64,
}

impl WitnessSet {
    /// Largest `u` admitted by the denominator bound.
    fn u_max(&self) -> i64 {
        let mut u = 0i64;
        let fits = |u: i64| match self.construction {
            Construction::ParabolaReal => (u as u128).pow(2) <= self.q_max as u128,
            Construction::ParabolaGaussian => 2 * (u as u128).pow(2) <= self.q_max as u128,
        };
        while fits(u + 1) {
            u += 1;
        }
        u
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = ConstructionWitness> + '_> {
        let top = self.u_max();
        match self.construction {
            Construction::ParabolaReal => Box::new((1..=top).flat_map(|u| {
                (1..u).flat_map(move |a| (1..u).map(move |b| ConstructionWitness::real(a, b, u)))
            })),
            Construction::ParabolaGaussian => Box::new((1..=top).flat_map(move |u| {
                (1..=top).flat_map(move |v| {
                    (1..u).flat_map(move |a| {
                        (1..v).map(move |b| ConstructionWitness::gaussian(a, b, u, v))
                    })
                })
            })),
        }
    }

    /// The first `cap` witnesses.
    pub fn witnesses(&self, cap: usize) -> Vec<ConstructionWitness> {
        self.iter().take(cap).collect()
    }
}

fn check_q(q_max: u64) -> Result<()> {
    if q_max == 0 {
        return Err(Error::InvalidParameter("Q must be at least 1".into()));
    }
    if q_max > 1 << 40 {
        return Err(Error::InvalidParameter(format!("Q = {q_max} is too large")));
    }
    Ok(())
}

/// Triples `1 ≤ a, b < u` with `u² ≤ Q`; the count is `Σ_{u ≤ ⌊√Q⌋} (u-1)²`.
pub fn lb_parabola_real(q_max: u64) -> Result<WitnessSet> {
    check_q(q_max)?;
    let mut set = WitnessSet {
        construction: Construction::ParabolaReal,
        q_max,
        count: 0,
    };
    set.count = (1..=set.u_max() as u64).map(|u| (u - 1) * (u - 1)).sum();
    Ok(set)
}

/// Quadruples `1 ≤ a < u`, `1 ≤ b < v` with `u, v ≤ √(Q/2)`; the count is
/// `(Σ_{u ≤ ⌊√(Q/2)⌋} (u-1))²`.
pub fn lb_parabola_gaussian(q_max: u64) -> Result<WitnessSet> {
    check_q(q_max)?;
    let mut set = WitnessSet {
        construction: Construction::ParabolaGaussian,
        q_max,
        count: 0,
    };
    let s: u64 = (1..=set.u_max() as u64).map(|u| u - 1).sum();
    set.count = s * s;
    Ok(set)
}

/// Gaussian integers `λ` with `|λ|² ≤ r|ν|`, decided exactly for the binary
/// value of `r`.
pub(crate) fn ball_candidates(nu: Gaussian<i64>, r: f64) -> Result<Vec<Gaussian<i64>>> {
    let re = ExactRational::from_f64(r)?;
    let (rn, rd) = (re.numer().clone(), re.denom().clone());
    let m2 = BigInt::from(nu.re as i128 * nu.re as i128 + nu.im as i128 * nu.im as i128);
    let rhs = &rn * &rn * &m2;
    let bound = (r * ((nu.re as f64).hypot(nu.im as f64))).sqrt().ceil() as i64 + 1;
    let mut out = Vec::new();
    for x in -bound..=bound {
        for y in -bound..=bound {
            let n = BigInt::from(x * x + y * y) * &rd;
            if &n * &n <= rhs {
                out.push(Gaussian::new(x, y));
            }
        }
    }
    Ok(out)
}

/// Distinct squares of the candidates with their multiplicities, sorted.
fn square_multiset(cands: &[Gaussian<i64>]) -> Vec<((i64, i64), u64)> {
    let mut map: HashMap<(i64, i64), u64> = HashMap::new();
    for l in cands {
        let s = *l * *l;
        *map.entry((s.re, s.im)).or_default() += 1;
    }
    let mut v: Vec<_> = map.into_iter().collect();
    v.sort_unstable();
    v
}

/// Adds every `k`-fold sum of the given squares (weighted by multiplicity)
/// into `table`, optionally fixing the first summand.
fn accumulate(
    squares: &[((i64, i64), u64)],
    k: usize,
    acc: (i64, i64),
    weight: u64,
    table: &mut HashMap<(i64, i64), u64>,
) {
    if k == 0 {
        *table.entry(acc).or_default() += weight;
        return;
    }
    for &((sr, si), mult) in squares {
        accumulate(
            squares,
            k - 1,
            (acc.0 + sr, acc.1 + si),
            weight * mult,
            table,
        );
    }
}

/// Sums `Σ weight · table[ν - t]` over all `k`-fold sums `t`.
fn probe(
    squares: &[((i64, i64), u64)],
    k: usize,
    acc: (i64, i64),
    weight: u64,
    nu: (i64, i64),
    table: &HashMap<(i64, i64), u64>,
) -> u64 {
    if k == 0 {
        return table
            .get(&(nu.0 - acc.0, nu.1 - acc.1))
            .map_or(0, |c| c * weight);
    }
    squares
        .iter()
        .map(|&((sr, si), mult)| {
            probe(
                squares,
                k - 1,
                (acc.0 + sr, acc.1 + si),
                weight * mult,
                nu,
                table,
            )
        })
        .sum()
}

/// `A_m(ν) = #{λ ∈ ℤ[i]^m : Σ λ_j² = ν, |λ_j|² ≤ r|ν|}` with the default
/// memory budget.
pub fn rep_count(m: usize, nu: Gaussian<i64>, r: f64) -> Result<u64> {
    rep_count_with_budget(m, nu, r, DEFAULT_BUDGET_BYTES)
}

/// [`rep_count`] by meet-in-the-middle: sums of `⌈m/2⌉` squares are tabulated
/// (in shards keyed by the first summand when the table would exceed
/// `budget` bytes) and joined against sums of the remaining squares.
pub fn rep_count_with_budget(m: usize, nu: Gaussian<i64>, r: f64, budget: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if nu.is_zero() {
        return Err(Error::InvalidParameter("nu must be nonzero".into()));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "r = {r} must lie in (0, 1]"
        )));
    }
    if nu.linf() > 1 << 24 {
        return Err(Error::InvalidParameter(format!(
            "|nu| too large: {}",
            nu.linf()
        )));
    }
    let squares = square_multiset(&ball_candidates(nu, r)?);
    let d = squares.len() as u64;
    let h1 = m.div_ceil(2);
    let h2 = m - h1;
    let nu = (nu.re, nu.im);

    let rest_entries = d.saturating_pow(h1 as u32 - 1);
    let shard_bytes = rest_entries.saturating_mul(ENTRY_BYTES);
    if shard_bytes > budget {
        return Err(Error::Resource {
            shards: d,
            shard_bytes,
            budget,
        });
    }
    let per_shard = ((budget / shard_bytes.max(1)).max(1) as usize).min(squares.len().max(1));

    let mut total = 0u64;
    for chunk in squares.chunks(per_shard) {
        let mut table = HashMap::new();
        for &((sr, si), mult) in chunk {
            accumulate(&squares, h1 - 1, (sr, si), mult, &mut table);
        }
        total += if h2 == 0 {
            table.get(&nu).copied().unwrap_or(0)
        } else {
            squares
                .par_iter()
                .map(|&((sr, si), mult)| probe(&squares, h2 - 1, (sr, si), mult, nu, &table))
                .sum::<u64>()
        };
    }
    Ok(total)
}

/// Which denominators [`sphere_count_exact`] sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SphereMode {
    /// `1 ≤ q ≤ Q`.
    Real,
    /// `q ∈ ℤ[i]`, `0 < |q|∞ ≤ Q`.
    Gaussian,
}

impl SphereMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(SphereMode::Real),
            "gaussian" => Ok(SphereMode::Gaussian),
            other => Err(Error::InvalidParameter(format!(
                "unknown sphere mode `{other}`"
            ))),
        }
    }
}

/// `Σ_q A_{m+1}(q²)` over the denominators selected by `mode`.
pub fn sphere_count_exact(m: usize, q_max: u64, r: f64, mode: SphereMode) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let b = q_max as i64;
    let qs: Vec<Gaussian<i64>> = match mode {
        SphereMode::Real => (1..=b).map(|q| Gaussian::new(q, 0)).collect(),
        SphereMode::Gaussian => crate::counting::gaussian_denominators(q_max),
    };
    qs.iter()
        .map(|q| rep_count(m + 1, *q * *q, r))
        .sum::<Result<u64>>()
}
