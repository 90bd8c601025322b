use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;

use super::driver::{self, BoxIter, Slice};
use super::{
    classify, exact_within, CountQuery, CountResult, Denominator, Mode, Numerators, Verdict,
    Witness,
};
use crate::error::{Error, Result};
use crate::geometry::{
    to_real, BumpWeight, CompiledPoly, ExactRegion, HolomorphicGraphManifold, Region,
};
use crate::numtheory::{
    nearest_int_dist_unchecked, ratio_dist_f64, ratio_dist_le_big, ExactRational, Gaussian,
    GaussianInt,
};

struct GaussCtx<'a> {
    h: &'a HolomorphicGraphManifold,
    window: ExactRegion,
    float_window: Region,
    exact: Option<CompiledPoly<Gaussian<i128>>>,
    deltas: [f64; 2],
    deltas_exact: [ExactRational; 2],
    deltas_small: Option<Vec<(i128, i128)>>,
    guard: f64,
    cap: usize,
    weight: Option<&'a BumpWeight>,
}

/// All nonzero Gaussian integers with `|q|∞ ≤ Q`, ordered by `(re, im)`.
pub(crate) fn gaussian_denominators(q_max: u64) -> Vec<Gaussian<i64>> {
    let b = q_max as i64;
    let mut out = Vec::with_capacity(((2 * b + 1) * (2 * b + 1)) as usize);
    for re in -b..=b {
        for im in -b..=b {
            if re != 0 || im != 0 {
                out.push(Gaussian::new(re, im));
            }
        }
    }
    out
}

/// `#{(a, q) : q ∈ ℤ[i]∖0, |q|∞ ≤ Q, a ∈ ℤ[i]^m, a/q ∈ window,
/// ‖ℜ q f(a/q)‖ ≤ δ_ℜ, ‖ℑ q f(a/q)‖ ≤ δ_ℑ}`.
///
/// The window lives in `ℝ^{2m}` with coordinates `(ℜz_1..ℜz_m, ℑz_1..ℑz_m)`.
pub fn count_gaussian(h: &HolomorphicGraphManifold, query: &CountQuery) -> Result<CountResult> {
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
    if query.membership != super::Membership::Graph {
        return Err(Error::InvalidParameter(
            "the distance bracket applies to the real view only".into(),
        ));
    }
    let exact = match query.mode {
        Mode::Exact => {
            let poly = h.exact_poly().ok_or_else(|| {
                Error::ExactUnsupported(format!("`{}` has no polynomial representation", h.name()))
            })?;
            Some(poly.compile())
        }
        Mode::Float => None,
    };
    let d = query.deltas.values();
    let de = query.deltas.exact();
    let ctx = GaussCtx {
        h,
        window: window.exact()?,
        float_window: window,
        exact,
        deltas: [d[0], d[1]],
        deltas_exact: [de[0].clone(), de[1].clone()],
        deltas_small: query.deltas.small_exact(),
        guard: query.guard,
        cap: query.witness_cap,
        weight: query.weight.as_ref(),
    };
    let qs = gaussian_denominators(query.q_max);
    let slices = driver::run(query.jobs, &qs, |q| gaussian_slice(&ctx, *q))?;
    Ok(driver::merge(
        slices,
        query.witness_cap,
        query.weight.is_some(),
        false,
        started,
    ))
}

/// Integer ranges for `ℜa_k` and `ℑa_k` containing every `a` with `a/q` in
/// the window's bounding box.
fn numerator_ranges(window: &Region, m: usize, q: Gaussian<i64>) -> Vec<(i64, i64)> {
    let (qr, qi) = (q.re as f64, q.im as f64);
    let spread = window.radius * (qr.abs() + qi.abs());
    let mut re = Vec::with_capacity(m);
    let mut im = Vec::with_capacity(m);
    for k in 0..m {
        let (cr, ci) = (window.center[k], window.center[m + k]);
        let (pr, pi) = (qr * cr - qi * ci, qr * ci + qi * cr);
        re.push((
            (pr - spread).floor() as i64 - 1,
            (pr + spread).ceil() as i64 + 1,
        ));
        im.push((
            (pi - spread).floor() as i64 - 1,
            (pi + spread).ceil() as i64 + 1,
        ));
    }
    re.extend(im);
    re
}

fn gaussian_slice(ctx: &GaussCtx<'_>, q: Gaussian<i64>) -> Result<Slice> {
    let m = ctx.h.m();
    let mut slice = Slice::new(Denominator::Gaussian(q));
    let ranges = numerator_ranges(&ctx.float_window, m, q);
    let norm = (q.re as i128).pow(2) + (q.im as i128).pow(2);
    let qc = Complex64::new(q.re as f64, q.im as f64);
    let mut it = BoxIter::new(&ranges);
    let mut flat = vec![0i64; 2 * m];
    let mut a = vec![Gaussian::new(0i64, 0i64); m];
    let mut p = vec![0i128; 2 * m];
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    while let Some(cur) = it.next_point() {
        flat.copy_from_slice(cur);
        it.advance();
        for k in 0..m {
            a[k] = Gaussian::new(flat[k], flat[m + k]);
            // a·conj(q)
            let (ar, ai) = (a[k].re as i128, a[k].im as i128);
            p[k] = ar * q.re as i128 + ai * q.im as i128;
            p[m + k] = ai * q.re as i128 - ar * q.im as i128;
        }
        if !ctx.window.contains_frac(&p, norm) {
            continue;
        }
        for k in 0..m {
            z[k] = Complex64::new(p[k] as f64 / norm as f64, p[m + k] as f64 / norm as f64);
        }
        let verdict = match &ctx.exact {
            Some(poly) => {
                if exact_accepts(ctx, poly, &a, q) {
                    Verdict::Accept
                } else {
                    Verdict::Reject
                }
            }
            None => {
                let t = qc * ctx.h.value(&z)?;
                if !(t.re.is_finite() && t.im.is_finite()) {
                    return Err(Error::Evaluation {
                        point: to_real(&z),
                        reason: "non-finite value".into(),
                    });
                }
                classify(
                    nearest_int_dist_unchecked(t.re),
                    ctx.deltas[0],
                    ctx.guard,
                    0.0,
                )
                .and(classify(
                    nearest_int_dist_unchecked(t.im),
                    ctx.deltas[1],
                    ctx.guard,
                    0.0,
                ))
            }
        };
        if verdict == Verdict::Reject {
            continue;
        }
        let weight = ctx.weight.map_or(0.0, |w| w.value(&to_real(&z)));
        slice.record(verdict, weight, ctx.cap, || Witness {
            numerators: Numerators::Gaussian(a.clone()),
            denominator: Denominator::Gaussian(q),
            index: None,
            residuals: residuals(ctx, &a, q, &z),
        });
    }
    Ok(slice)
}

/// Splits `num/den` over ℤ[i] into `(ℜ, ℑ)` numerators over `|den|²`.
fn split_small(num: Gaussian<i128>, den: Gaussian<i128>) -> Option<(i128, i128, i128)> {
    let re = num
        .re
        .checked_mul(den.re)?
        .checked_add(num.im.checked_mul(den.im)?)?;
    let im = num
        .im
        .checked_mul(den.re)?
        .checked_sub(num.re.checked_mul(den.im)?)?;
    let n = den
        .re
        .checked_mul(den.re)?
        .checked_add(den.im.checked_mul(den.im)?)?;
    Some((re, im, n))
}

pub(crate) fn split_big(num: &GaussianInt, den: &GaussianInt) -> (BigInt, BigInt, BigInt) {
    let re = &num.re * &den.re + &num.im * &den.im;
    let im = &num.im * &den.re - &num.re * &den.im;
    let n = &den.re * &den.re + &den.im * &den.im;
    (re, im, n)
}

fn exact_accepts(
    ctx: &GaussCtx<'_>,
    poly: &CompiledPoly<Gaussian<i128>>,
    a: &[Gaussian<i64>],
    q: Gaussian<i64>,
) -> bool {
    let small = poly
        .residue_i128(a, q)
        .and_then(|(num, den)| split_small(num, den));
    if let (Some((re, im, n)), Some(ds)) = (small, &ctx.deltas_small) {
        return exact_within(re, n, &ds[0], &ctx.deltas_exact[0])
            && exact_within(im, n, &ds[1], &ctx.deltas_exact[1]);
    }
    let (num, den) = poly.residue_big(a, q);
    let (re, im, n) = split_big(&num, &den);
    ratio_dist_le_big(&re, &n, &ctx.deltas_exact[0])
        && ratio_dist_le_big(&im, &n, &ctx.deltas_exact[1])
}

fn residuals(
    ctx: &GaussCtx<'_>,
    a: &[Gaussian<i64>],
    q: Gaussian<i64>,
    z: &[Complex64],
) -> Vec<f64> {
    match &ctx.exact {
        Some(poly) => {
            let (num, den) = poly.residue_big(a, q);
            let (re, im, n) = split_big(&num, &den);
            vec![ratio_dist_f64(&re, &n), ratio_dist_f64(&im, &n)]
        }
        None => match ctx.h.value(z) {
            Ok(v) => {
                let t = Complex64::new(q.re as f64, q.im as f64) * v;
                vec![
                    nearest_int_dist_unchecked(t.re),
                    nearest_int_dist_unchecked(t.im),
                ]
            }
            Err(_) => vec![f64::NAN; 2],
        },
    }
}
