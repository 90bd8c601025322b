use std::time::Instant;

use super::driver::{self, BoxIter, Slice};
use super::{
    classify, exact_within, CountQuery, CountResult, Denominator, Membership, Mode, Numerators,
    Verdict, WeightedCount, Witness,
};
use crate::error::{Error, Result};
use crate::geometry::{BumpWeight, CompiledPoly, ExactRegion, RealGraphManifold, Region, Shape};
use crate::numtheory::{
    nearest_int_dist_unchecked, ratio_dist_f64, ratio_dist_le_big, ExactRational,
};

struct RealCtx<'a> {
    m: &'a RealGraphManifold,
    window: ExactRegion,
    ball: bool,
    exact: Option<Vec<CompiledPoly<i128>>>,
    deltas: Vec<f64>,
    deltas_exact: Vec<ExactRational>,
    deltas_small: Option<Vec<(i128, i128)>>,
    guard: f64,
    slack: f64,
    cap: usize,
    weight: Option<&'a BumpWeight>,
}

/// `#{(a, q) : 1 ≤ q ≤ Q, a ∈ ℤⁿ, a/q ∈ window, ‖q f_r(a/q)‖ ≤ δ_r ∀r}`.
///
/// The window defaults to the manifold's domain. Membership of `a/q` in the
/// window is always decided exactly; residues are compared exactly in
/// [`Mode::Exact`] (polynomial manifolds only) and with a guard band in
/// [`Mode::Float`].
pub fn count_real(m: &RealGraphManifold, query: &CountQuery) -> Result<CountResult> {
    query.validate(m.codim())?;
    let started = Instant::now();
    let window = query.window.clone().unwrap_or_else(|| m.domain().clone());
    if window.dim() != m.n() {
        return Err(Error::InvalidParameter(format!(
            "window has dimension {}, manifold has n = {}",
            window.dim(),
            m.n()
        )));
    }
    let exact = match query.mode {
        Mode::Exact => {
            if query.membership != Membership::Graph {
                return Err(Error::InvalidParameter(
                    "the distance bracket is float-only".into(),
                ));
            }
            let polys = m.exact_poly().ok_or_else(|| {
                Error::ExactUnsupported(format!("`{}` has no polynomial representation", m.name()))
            })?;
            Some(polys.iter().map(|p| p.compile()).collect())
        }
        Mode::Float => None,
    };
    let slack = match query.membership {
        Membership::Graph => 0.0,
        Membership::Dist { lipschitz: Some(l) } => l,
        Membership::Dist { lipschitz: None } => gradient_bound(m, &window)?,
    };
    let ctx = RealCtx {
        m,
        ball: window.shape == Shape::Ball,
        window: window.exact()?,
        exact,
        deltas: query.deltas.values().to_vec(),
        deltas_exact: query.deltas.exact().to_vec(),
        deltas_small: query.deltas.small_exact(),
        guard: query.guard,
        slack,
        cap: query.witness_cap,
        weight: query.weight.as_ref(),
    };
    let qs: Vec<i64> = (1..=query.q_max as i64).collect();
    let slices = driver::run(query.jobs, &qs, |&q| real_slice(&ctx, q))?;
    Ok(driver::merge(
        slices,
        query.witness_cap,
        query.weight.is_some(),
        false,
        started,
    ))
}

/// Weighted count `Σ w(a/q)` over the index set of [`count_real`].
pub fn count_weighted(
    m: &RealGraphManifold,
    w: &BumpWeight,
    query: &CountQuery,
) -> Result<WeightedCount> {
    let q = query.clone().weight(w.clone());
    let r = count_real(m, &q)?;
    Ok(r.weighted.unwrap_or_default())
}

fn real_slice(ctx: &RealCtx<'_>, q: i64) -> Result<Slice> {
    let n = ctx.m.n();
    let r = ctx.m.codim();
    let mut slice = Slice::new(Denominator::Int(q));
    let ranges: Vec<(i64, i64)> = (0..n).map(|i| ctx.window.axis_range(i, q)).collect();
    let mut it = BoxIter::new(&ranges);
    let mut a = vec![0i64; n];
    let mut p = vec![0i128; n];
    let mut x = vec![0.0; n];
    let mut vals = vec![0.0; r];
    let mut scratch = Vec::new();
    let qf = q as f64;
    while let Some(cur) = it.next_point() {
        a.copy_from_slice(cur);
        it.advance();
        if ctx.ball {
            for (pi, ai) in p.iter_mut().zip(&a) {
                *pi = *ai as i128;
            }
            if !ctx.window.contains_frac(&p, q as i128) {
                continue;
            }
        }
        for (xi, ai) in x.iter_mut().zip(&a) {
            *xi = *ai as f64 / qf;
        }
        let verdict = match &ctx.exact {
            Some(polys) => {
                let mut ok = true;
                for (l, poly) in polys.iter().enumerate() {
                    let within = match (poly.residue_i128(&a, q, &mut scratch), &ctx.deltas_small) {
                        (Some((num, den)), Some(ds)) => {
                            exact_within(num, den, &ds[l], &ctx.deltas_exact[l])
                        }
                        _ => {
                            let (num, den) = poly.residue_big(&a, q);
                            ratio_dist_le_big(&num, &den, &ctx.deltas_exact[l])
                        }
                    };
                    if !within {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    Verdict::Accept
                } else {
                    Verdict::Reject
                }
            }
            None => {
                ctx.m.value(&x, &mut vals)?;
                let mut v = Verdict::Accept;
                for (&val, &delta) in vals.iter().zip(&ctx.deltas).take(r) {
                    let t = qf * val;
                    if !t.is_finite() {
                        return Err(Error::Evaluation {
                            point: x.clone(),
                            reason: "non-finite value".into(),
                        });
                    }
                    v = v.and(classify(
                        nearest_int_dist_unchecked(t),
                        delta,
                        ctx.guard,
                        ctx.slack,
                    ));
                    if v == Verdict::Reject {
                        break;
                    }
                }
                v
            }
        };
        if verdict == Verdict::Reject {
            continue;
        }
        let weight = ctx.weight.map_or(0.0, |w| w.value(&x));
        slice.record(verdict, weight, ctx.cap, || Witness {
            numerators: Numerators::Int(a.clone()),
            denominator: Denominator::Int(q),
            index: None,
            residuals: residuals(ctx, &a, q),
        });
    }
    Ok(slice)
}

fn residuals(ctx: &RealCtx<'_>, a: &[i64], q: i64) -> Vec<f64> {
    match &ctx.exact {
        Some(polys) => polys
            .iter()
            .map(|p| {
                let (num, den) = p.residue_big(a, q);
                ratio_dist_f64(&num, &den)
            })
            .collect(),
        None => {
            let x: Vec<f64> = a.iter().map(|v| *v as f64 / q as f64).collect();
            let mut vals = vec![0.0; ctx.m.codim()];
            match ctx.m.value(&x, &mut vals) {
                Ok(()) => vals
                    .iter()
                    .map(|v| nearest_int_dist_unchecked(q as f64 * v))
                    .collect(),
                Err(_) => vec![f64::NAN; ctx.m.codim()],
            }
        }
    }
}

/// Largest Euclidean gradient norm of any component over a grid of `window`.
pub fn gradient_bound(m: &RealGraphManifold, window: &Region) -> Result<f64> {
    let per_axis = driver::grid_per_axis(m.n(), 4096);
    let mut best: f64 = 0.0;
    for x in window.grid(per_axis) {
        let jet = m.jet(&x)?;
        for l in 0..m.codim() {
            let g = jet.grad.row(l).norm();
            best = best.max(g);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::DeltaVec;
    use crate::geometry::{builtin_holomorphic, builtin_real, realify, BuiltinParams};

    fn parabola() -> RealGraphManifold {
        builtin_real("real-parabola", BuiltinParams::default()).unwrap()
    }

    #[test]
    fn parabola_golden() {
        let q = CountQuery::new(4, DeltaVec::new(vec![0.25]).unwrap()).mode(Mode::Exact);
        let r = count_real(&parabola(), &q).unwrap();
        assert_eq!(r.total, 3);
        let ws: Vec<_> = r
            .witnesses
            .iter()
            .map(|w| (w.numerators.clone(), w.denominator))
            .collect();
        assert_eq!(
            ws,
            vec![
                (Numerators::Int(vec![1]), Denominator::Int(4)),
                (Numerators::Int(vec![2]), Denominator::Int(4)),
                (Numerators::Int(vec![3]), Denominator::Int(4)),
            ]
        );
        assert_eq!(r.per_q.iter().map(|p| p.count).sum::<u64>(), 3);
    }

    #[test]
    fn q_one_open_window_is_empty() {
        let q = CountQuery::new(1, DeltaVec::new(vec![0.25]).unwrap()).mode(Mode::Exact);
        assert_eq!(count_real(&parabola(), &q).unwrap().total, 0);
    }

    #[test]
    fn exact_mode_needs_polynomial() {
        let s = builtin_real("real-sphere", BuiltinParams::default()).unwrap();
        let q = CountQuery::new(3, DeltaVec::new(vec![0.1]).unwrap()).mode(Mode::Exact);
        assert!(matches!(
            count_real(&s, &q),
            Err(Error::ExactUnsupported(_))
        ));
    }

    #[test]
    fn float_bracket_contains_exact() {
        let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        let m = realify(&h);
        for delta in [0.0, 0.125, 0.25] {
            let d = DeltaVec::new(vec![delta, delta]).unwrap();
            let ex = count_real(&m, &CountQuery::new(12, d.clone()).mode(Mode::Exact)).unwrap();
            let fl = count_real(&m, &CountQuery::new(12, d)).unwrap();
            assert!(
                fl.lower <= ex.total && ex.total <= fl.upper,
                "{delta}: {ex:?} {fl:?}"
            );
        }
    }

    #[test]
    fn dist_bracket_is_wider() {
        let d = DeltaVec::new(vec![0.1]).unwrap();
        let g = count_real(&parabola(), &CountQuery::new(30, d.clone())).unwrap();
        let dist = count_real(
            &parabola(),
            &CountQuery::new(30, d).membership(Membership::Dist { lipschitz: None }),
        )
        .unwrap();
        assert_eq!(g.lower, dist.lower);
        assert!(dist.upper >= g.upper);
    }
}
