use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::driver::{self, grid_per_axis, BoxIter, Slice};
use super::gaussian::gaussian_denominators;
use super::{
    classify, CountQuery, CountResult, Denominator, Membership, Mode, Numerators, Verdict, Witness,
};
use crate::error::{Error, Result};
use crate::geometry::{
    invert_complex_gradient, to_complex, to_real, BumpWeight, ComplexJet, HolomorphicGraphManifold,
    LegendreCache, RealGraphManifold, RealJet, Region, SINGULAR_DET,
};
use crate::numtheory::{nearest_int_dist_unchecked, Gaussian};

const GRID_BUDGET: usize = 4096;

fn check_float(query: &CountQuery) -> Result<()> {
    if query.mode == Mode::Exact {
        return Err(Error::ExactUnsupported(
            "dual counts evaluate Legendre transforms numerically; use float mode".into(),
        ));
    }
    if query.membership != Membership::Graph {
        return Err(Error::InvalidParameter(
            "the distance bracket applies to the real view only".into(),
        ));
    }
    Ok(())
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

struct DualRealCtx<'a> {
    m: &'a RealGraphManifold,
    window: Region,
    grid: Vec<Vec<f64>>,
    jets: Vec<RealJet>,
    cell: f64,
    delta: f64,
    guard: f64,
    cap: usize,
    weight: Option<&'a BumpWeight>,
}

/// Index vectors `j` with `0 < |j|∞ ≤ Q*`, in `ℕ₀^R` (or `ℤ^R` when `full`),
/// in lexicographic order.
fn dual_indices(r: usize, q_max: u64, full: bool) -> Vec<Vec<i64>> {
    let b = q_max as i64;
    let lo = if full { -b } else { 0 };
    let mut it = BoxIter::new(&vec![(lo, b); r]);
    let mut out = Vec::new();
    while let Some(j) = it.next_point() {
        if j.iter().any(|v| *v != 0) {
            out.push(j.to_vec());
        }
        it.advance();
    }
    out
}

/// Dual count `#{(a, j) : 0 < |j|∞ ≤ Q*, ‖s f*_θ(a/s)‖ ≤ δ*}` with
/// `s = |j|∞`, `θ = j/s` and `a/s` in the gradient image `∇f_θ(window)`.
///
/// Membership in the gradient image is decided by solving `∇f_θ(x) = a/s`
/// and checking `x ∈ window`. With a weight `w` each hit contributes
/// `w(x) / |det f_θ''(x)|`. The histogram is keyed by `s`.
pub fn count_dual_real(m: &RealGraphManifold, query: &CountQuery) -> Result<CountResult> {
    check_float(query)?;
    if query.deltas.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "the dual real count takes one delta, got {}",
            query.deltas.len()
        )));
    }
    query.validate(1)?;
    let started = Instant::now();
    let window = query.window.clone().unwrap_or_else(|| m.domain().clone());
    if window.dim() != m.n() {
        return Err(Error::InvalidParameter(format!(
            "window has dimension {}, manifold has n = {}",
            window.dim(),
            m.n()
        )));
    }
    let per_axis = grid_per_axis(m.n(), GRID_BUDGET);
    let grid = window.grid(per_axis);
    let jets = grid.iter().map(|x| m.jet(x)).collect::<Result<Vec<_>>>()?;
    let ctx = DualRealCtx {
        m,
        cell: 2.0 * window.radius / per_axis as f64,
        window,
        grid,
        jets,
        delta: query.deltas.values()[0],
        guard: query.guard,
        cap: query.witness_cap,
        weight: query.weight.as_ref(),
    };
    let js = dual_indices(m.codim(), query.q_max, query.full_index);
    let slices = driver::run(query.jobs, &js, |j| dual_real_slice(&ctx, j))?;
    Ok(driver::merge(
        slices,
        query.witness_cap,
        query.weight.is_some(),
        true,
        started,
    ))
}

fn dual_real_slice(ctx: &DualRealCtx<'_>, j: &[i64]) -> Result<Slice> {
    let n = ctx.m.n();
    let s = j.iter().map(|v| v.abs()).max().unwrap_or(0);
    let sf = s as f64;
    let theta: Vec<f64> = j.iter().map(|v| *v as f64 / sf).collect();
    let mut slice = Slice::new(Denominator::Int(s));
    let solver_err = |reason: String| Error::Solver {
        theta: theta.clone(),
        reason,
    };

    let center_jet = ctx
        .m
        .jet(&ctx.window.center)
        .map_err(|e| solver_err(format!("window center rejected: {e}")))?;
    let det = center_jet.hess_theta(&theta).determinant();
    if !(det.abs() >= SINGULAR_DET) {
        return Err(solver_err(format!(
            "Hessian of f_theta is singular at the window center (det {det:e})"
        )));
    }

    let grads: Vec<Vec<f64>> = ctx
        .jets
        .iter()
        .map(|jet| jet.grad_theta(&theta).as_slice().to_vec())
        .collect();
    let lip = ctx
        .jets
        .iter()
        .map(|jet| inf_norm(&jet.hess_theta(&theta)))
        .fold(0.0, f64::max);
    let margin = 2.0 * lip * ctx.cell;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for g in &grads {
        for i in 0..n {
            lo[i] = lo[i].min(g[i]);
            hi[i] = hi[i].max(g[i]);
        }
    }
    if grads.is_empty() {
        return Ok(slice);
    }
    let ranges: Vec<(i64, i64)> = (0..n)
        .map(|i| {
            (
                ((lo[i] - margin) * sf).floor() as i64,
                ((hi[i] + margin) * sf).ceil() as i64,
            )
        })
        .collect();

    let mut cache = LegendreCache::default();
    let mut it = BoxIter::new(&ranges);
    let mut a = vec![0i64; n];
    while let Some(cur) = it.next_point() {
        a.copy_from_slice(cur);
        it.advance();
        let y: Vec<f64> = a.iter().map(|v| *v as f64 / sf).collect();
        let attempt = cache.invert(ctx.m, &theta, &y, || ctx.grid[nearest(&grads, &y)].clone());
        let (verdict, value, weight) = match attempt {
            Ok(p) => {
                if !ctx.window.contains(&p.x) {
                    continue;
                }
                let fstar = -p.f_theta + p.x.iter().zip(&y).map(|(xi, yi)| xi * yi).sum::<f64>();
                let value = sf * fstar;
                let v = classify(nearest_int_dist_unchecked(value), ctx.delta, ctx.guard, 0.0);
                let w = ctx
                    .weight
                    .map_or(0.0, |w| w.value(&p.x) / p.hess.determinant().abs());
                (v, value, w)
            }
            Err(Error::Singular { .. }) => (Verdict::Ambiguous, f64::NAN, 0.0),
            Err(_) => continue,
        };
        if verdict == Verdict::Reject {
            continue;
        }
        slice.record(verdict, weight, ctx.cap, || Witness {
            numerators: Numerators::Int(a.clone()),
            denominator: Denominator::Int(s),
            index: Some(j.to_vec()),
            residuals: vec![nearest_int_dist_unchecked(value)],
        });
    }
    Ok(slice)
}

fn nearest(points: &[Vec<f64>], y: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = p
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

struct DualGaussCtx<'a> {
    h: &'a HolomorphicGraphManifold,
    window: Region,
    grid: Vec<Vec<Complex64>>,
    grads: Vec<Vec<f64>>,
    image: Vec<(f64, f64)>,
    deltas: [f64; 2],
    guard: f64,
    cap: usize,
    weight: Option<&'a BumpWeight>,
}

/// Dual Gaussian count `#{(k, j) : j ∈ ℤ[i]∖0, |j|∞ ≤ Q*, k ∈ ℤ[i]^m,
/// ‖ℜ j̄ f*(k̄/j̄)‖ ≤ δ*_ℜ, ‖ℑ j̄ f*(k̄/j̄)‖ ≤ δ*_ℑ}` with `k̄/j̄` in the
/// gradient image `∂f(window)`.
///
/// With a weight `w` each hit contributes `w(z) / |det f''(z)|^{1/2}` where
/// `∂f(z) = k̄/j̄`.
pub fn count_dual_gaussian(
    h: &HolomorphicGraphManifold,
    query: &CountQuery,
) -> Result<CountResult> {
    check_float(query)?;
    query.validate(2)?;
    let started = Instant::now();
    let m = h.m();
    let window = query.window.clone().unwrap_or_else(|| h.domain().clone());
    if window.dim() != 2 * m {
        return Err(Error::InvalidParameter(format!(
            "window has dimension {}, expected 2m = {}",
            window.dim(),
            2 * m
        )));
    }
    let solver_err = |reason: String| Error::Solver {
        theta: window.center.clone(),
        reason,
    };
    let center = to_complex(&window.center);
    let cj = h
        .jet(&center)
        .map_err(|e| solver_err(format!("window center rejected: {e}")))?;
    let det = cj.hess.determinant().norm();
    if !(det >= SINGULAR_DET) {
        return Err(solver_err(format!(
            "complex Hessian is singular at the window center (|det| {det:e})"
        )));
    }
    let per_axis = grid_per_axis(2 * m, GRID_BUDGET);
    let cell = 2.0 * window.radius / per_axis as f64;
    let grid: Vec<Vec<Complex64>> = window
        .grid(per_axis)
        .iter()
        .map(|x| to_complex(x))
        .collect();
    let jets = grid
        .iter()
        .map(|z| h.jet(z))
        .collect::<Result<Vec<ComplexJet>>>()?;
    let grads: Vec<Vec<f64>> = jets
        .iter()
        .map(|jet| to_real(jet.grad.as_slice()))
        .collect();
    let lip = jets
        .iter()
        .map(|jet| {
            jet.hess
                .row_iter()
                .map(|r| r.iter().map(|c| c.re.abs() + c.im.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let margin = 2.0 * lip * cell;
    let mut image = vec![(f64::INFINITY, f64::NEG_INFINITY); 2 * m];
    for g in &grads {
        for (b, v) in image.iter_mut().zip(g) {
            b.0 = b.0.min(*v - margin);
            b.1 = b.1.max(*v + margin);
        }
    }
    let d = query.deltas.values();
    let ctx = DualGaussCtx {
        h,
        window,
        grid,
        grads,
        image,
        deltas: [d[0], d[1]],
        guard: query.guard,
        cap: query.witness_cap,
        weight: query.weight.as_ref(),
    };
    let js = gaussian_denominators(query.q_max);
    let slices = driver::run(query.jobs, &js, |j| dual_gaussian_slice(&ctx, *j))?;
    Ok(driver::merge(
        slices,
        query.witness_cap,
        query.weight.is_some(),
        false,
        started,
    ))
}

/// Bounds of `t·x` for `x ∈ [lo, hi]`.
fn scale_interval(t: f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    if t >= 0.0 {
        (t * lo, t * hi)
    } else {
        (t * hi, t * lo)
    }
}

fn dual_gaussian_slice(ctx: &DualGaussCtx<'_>, j: Gaussian<i64>) -> Result<Slice> {
    let m = ctx.h.m();
    let mut slice = Slice::new(Denominator::Gaussian(j));
    if ctx.grid.is_empty() {
        return Ok(slice);
    }
    let (jr, ji) = (j.re as f64, j.im as f64);
    let norm = jr * jr + ji * ji;
    // k = conj(w)·j: ℜk = w_r j_r + w_i j_i, ℑk = w_r j_i − w_i j_r
    let mut ranges = vec![(0i64, 0i64); 2 * m];
    for c in 0..m {
        let (wr, wi) = (ctx.image[c], ctx.image[m + c]);
        let (a0, a1) = scale_interval(jr, wr);
        let (b0, b1) = scale_interval(ji, wi);
        ranges[c] = ((a0 + b0).floor() as i64, (a1 + b1).ceil() as i64);
        let (c0, c1) = scale_interval(ji, wr);
        let (d0, d1) = scale_interval(-jr, wi);
        ranges[m + c] = ((c0 + d0).floor() as i64, (c1 + d1).ceil() as i64);
    }
    let jc = Complex64::new(jr, ji);
    let mut warm: Option<Vec<Complex64>> = None;
    let mut it = BoxIter::new(&ranges);
    let mut flat = vec![0i64; 2 * m];
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    while let Some(cur) = it.next_point() {
        flat.copy_from_slice(cur);
        it.advance();
        let mut inside = true;
        for c in 0..m {
            // w = conj(k / j) = conj(k)·j / |j|²
            let k = Complex64::new(flat[c] as f64, flat[m + c] as f64);
            w[c] = k.conj() * jc / norm;
            let (re, im) = (ctx.image[c], ctx.image[m + c]);
            if w[c].re < re.0 || w[c].re > re.1 || w[c].im < im.0 || w[c].im > im.1 {
                inside = false;
                break;
            }
        }
        if !inside {
            continue;
        }
        let attempt = match warm
            .as_ref()
            .map(|start| invert_complex_gradient(ctx.h, &w, start))
        {
            Some(Ok(sol)) => Ok(sol),
            _ => invert_complex_gradient(ctx.h, &w, &ctx.grid[nearest(&ctx.grads, &to_real(&w))]),
        };
        let (verdict, value, weight) = match attempt {
            Ok((z, jet)) => {
                let x = to_real(&z);
                if !ctx.window.contains(&x) {
                    continue;
                }
                let fstar = -jet.value + z.iter().zip(&w).map(|(a, b)| a * b).sum::<Complex64>();
                let value = jc.conj() * fstar;
                let v = classify(
                    nearest_int_dist_unchecked(value.re),
                    ctx.deltas[0],
                    ctx.guard,
                    0.0,
                )
                .and(classify(
                    nearest_int_dist_unchecked(value.im),
                    ctx.deltas[1],
                    ctx.guard,
                    0.0,
                ));
                let wt = ctx
                    .weight
                    .map_or(0.0, |b| b.value(&x) / jet.hess.determinant().norm().sqrt());
                warm = Some(z);
                (v, value, wt)
            }
            Err(Error::Singular { .. }) => {
                (Verdict::Ambiguous, Complex64::new(f64::NAN, f64::NAN), 0.0)
            }
            Err(_) => continue,
        };
        if verdict == Verdict::Reject {
            continue;
        }
        slice.record(verdict, weight, ctx.cap, || Witness {
            numerators: Numerators::Gaussian(
                (0..m)
                    .map(|c| Gaussian::new(flat[c], flat[m + c]))
                    .collect(),
            ),
            denominator: Denominator::Gaussian(j),
            index: Some(vec![j.re, j.im]),
            residuals: vec![
                nearest_int_dist_unchecked(value.re),
                nearest_int_dist_unchecked(value.im),
            ],
        });
    }
    Ok(slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::DeltaVec;
    use crate::geometry::{builtin_holomorphic, BuiltinParams, RealPoly};
    use crate::numtheory::ExactRational;

    fn half_square() -> RealGraphManifold {
        let p = RealPoly::new(1, [(vec![2], ExactRational::new(1, 2).unwrap())]).unwrap();
        RealGraphManifold::from_polys(
            "half-square",
            vec![p],
            Region::open_box(vec![0.0], 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn indices() {
        assert_eq!(dual_indices(1, 2, false), vec![vec![1], vec![2]]);
        assert_eq!(dual_indices(2, 1, false).len(), 3);
        assert_eq!(dual_indices(2, 1, true).len(), 8);
        assert!(dual_indices(2, 0, false).is_empty());
    }

    #[test]
    fn self_dual_golden() {
        let d = DeltaVec::new(vec![0.0]).unwrap();
        let r = count_dual_real(&half_square(), &CountQuery::new(2, d.clone())).unwrap();
        assert_eq!(r.total, 2);
        assert_eq!(r.per_q.len(), 2);
        assert_eq!(
            count_dual_real(&half_square(), &CountQuery::new(0, d))
                .unwrap()
                .total,
            0
        );
    }

    #[test]
    fn self_dual_matches_direct_enumeration() {
        let delta = 0.21;
        let qstar = 12i64;
        let mut expect = 0u64;
        for s in 1..=qstar {
            for a in -s + 1..s {
                let r = (a * a).rem_euclid(2 * s);
                if 100 * r.min(2 * s - r) <= 21 * 2 * s {
                    expect += 1;
                }
            }
        }
        let r = count_dual_real(
            &half_square(),
            &CountQuery::new(qstar as u64, DeltaVec::new(vec![delta]).unwrap()),
        )
        .unwrap();
        assert_eq!(r.lower, expect);
        assert_eq!(r.total, expect);
    }

    #[test]
    fn exact_mode_rejected() {
        let d = DeltaVec::new(vec![0.0]).unwrap();
        let q = CountQuery::new(2, d).mode(Mode::Exact);
        assert!(matches!(
            count_dual_real(&half_square(), &q),
            Err(Error::ExactUnsupported(_))
        ));
    }

    #[test]
    fn zero_frequency_always_hits() {
        let h = builtin_holomorphic("complex-sphere", BuiltinParams::default()).unwrap();
        let d = DeltaVec::new(vec![0.0, 0.0]).unwrap();
        let r = count_dual_gaussian(&h, &CountQuery::new(1, d)).unwrap();
        assert!(r.total >= 8, "{r:?}");
    }
}
