#![allow(dead_code)]

use std::collections::HashMap;

use rpnm_core::constructions::rep_count;
use rpnm_core::counting::{count, CountQuery, DeltaVec, Mode, View};
use rpnm_core::geometry::{builtin, realify, BuiltinParams, Manifold, Region};
use rpnm_core::numtheory::{ExactRational, Gaussian};

/// Views applicable to a manifold with the number of tolerance components
/// each one takes.
pub fn views(m: &Manifold) -> Vec<(View, usize)> {
    match m {
        Manifold::Real(r) => vec![(View::Real, r.codim()), (View::DualReal, 1)],
        Manifold::Holomorphic(_) => vec![
            (View::Real, 2),
            (View::Gaussian, 2),
            (View::DualReal, 1),
            (View::DualGaussian, 2),
        ],
    }
}

fn is_polynomial(m: &Manifold) -> bool {
    match m {
        Manifold::Real(r) => r.exact_poly().is_some(),
        Manifold::Holomorphic(h) => h.exact_poly().is_some(),
    }
}

/// Exact arithmetic where it is supported, float mode otherwise.
pub fn mode_for(m: &Manifold, view: View) -> Mode {
    if is_polynomial(m) && matches!(view, View::Real | View::Gaussian) {
        Mode::Exact
    } else {
        Mode::Float
    }
}

pub fn frac(p: i64, q: i64) -> ExactRational {
    ExactRational::new(p, q).unwrap()
}

pub fn total(
    m: &Manifold,
    view: View,
    q: u64,
    deltas: Vec<ExactRational>,
    window: Option<&Region>,
) -> u64 {
    let mut query = CountQuery::new(q, DeltaVec::rational(deltas).unwrap()).mode(mode_for(m, view));
    if let Some(w) = window {
        query = query.window(w.clone());
    }
    let r = count(m, view, &query).unwrap_or_else(|e| panic!("{} {view:?} Q={q}: {e}", m.name()));
    assert_eq!(r.per_q.iter().map(|p| p.count).sum::<u64>(), r.total);
    assert!(r.lower <= r.total && r.total <= r.upper);
    r.total
}

/// Checks that every count is nondecreasing in `Q` and in `δ` on the grid
/// `qs × deltas` (isotropic tolerances), and in each tolerance component
/// separately at the second largest `Q`. Returns a description of every violation.
pub fn monotonicity_violations(m: &Manifold, qs: &[u64], deltas: &[(i64, i64)]) -> Vec<String> {
    let mut bad = Vec::new();
    for (view, comps) in views(m) {
        let grid: Vec<Vec<u64>> = qs
            .iter()
            .map(|&q| {
                deltas
                    .iter()
                    .map(|&(p, d)| total(m, view, q, vec![frac(p, d); comps], None))
                    .collect()
            })
            .collect();
        for (qi, row) in grid.iter().enumerate() {
            for (di, &t) in row.iter().enumerate() {
                if qi + 1 < qs.len() && t > grid[qi + 1][di] {
                    bad.push(format!(
                        "{} {view:?}: Q {} -> {} drops {t} -> {}",
                        m.name(),
                        qs[qi],
                        qs[qi + 1],
                        grid[qi + 1][di]
                    ));
                }
                if di + 1 < deltas.len() && t > row[di + 1] {
                    bad.push(format!(
                        "{} {view:?} Q={}: delta {:?} -> {:?} drops {t} -> {}",
                        m.name(),
                        qs[qi],
                        deltas[di],
                        deltas[di + 1],
                        row[di + 1]
                    ));
                }
            }
        }
        let q = qs[qs.len().saturating_sub(2)];
        let (fp, fd) = deltas[deltas.len() / 2];
        for c in (0..comps).filter(|_| comps > 1) {
            let mut last = None;
            for &(p, d) in deltas {
                let mut v = vec![frac(fp, fd); comps];
                v[c] = frac(p, d);
                let t = total(m, view, q, v, None);
                if let Some(prev) = last {
                    if t < prev {
                        bad.push(format!(
                            "{} {view:?} Q={q}: component {c} raised to {p}/{d} drops {prev} -> {t}",
                            m.name()
                        ));
                    }
                }
                last = Some(t);
            }
        }
    }
    bad
}

pub fn all_builtins() -> Vec<Manifold> {
    [
        "real-parabola",
        "real-sphere",
        "complex-parabola",
        "complex-sphere",
    ]
    .iter()
    .map(|name| builtin(name, BuiltinParams::default()).unwrap())
    .collect()
}

/// Compares the real count of the realified complex parabola with its
/// Gaussian count, both in exact mode and over the same window.
pub fn embedding_violations(
    qs: &[u64],
    deltas: &[(i64, i64)],
    window: Option<&Region>,
) -> Vec<String> {
    let h = builtin("complex-parabola", BuiltinParams::default()).unwrap();
    let real = Manifold::Real(realify(h.as_holomorphic().unwrap()));
    let mut bad = Vec::new();
    for &q in qs {
        for &(p, d) in deltas {
            let r = total(&real, View::Real, q, vec![frac(p, d); 2], window);
            let g = total(&h, View::Gaussian, q, vec![frac(p, d); 2], window);
            if r > g {
                bad.push(format!("Q={q} delta={p}/{d}: real {r} > gaussian {g}"));
            }
        }
    }
    bad
}

/// `#{λ : Σ λ_j² = ν, |λ_j|⁴ ≤ r²|ν|²}` for every `ν ≠ 0` with
/// `|ν|² ≤ norm_max`, by enumerating all tuples directly.
pub fn naive_rep_counts(m: usize, r: f64, norm_max: i64) -> HashMap<(i64, i64), u64> {
    let bound = ((r * (norm_max as f64).sqrt()).floor()) as i64;
    let side = (bound as f64).sqrt().floor() as i64;
    let mut cands = Vec::new();
    for x in -side..=side {
        for y in -side..=side {
            if x * x + y * y <= bound {
                cands.push((x, y));
            }
        }
    }
    let mut out = HashMap::new();
    let mut idx = vec![0usize; m];
    loop {
        let (mut sr, mut si, mut maxn) = (0i64, 0i64, 0i64);
        for &k in &idx {
            let (x, y) = cands[k];
            sr += x * x - y * y;
            si += 2 * x * y;
            maxn = maxn.max(x * x + y * y);
        }
        let nn = sr * sr + si * si;
        if nn > 0 && nn <= norm_max && ((maxn * maxn) as f64) <= r * r * nn as f64 {
            *out.entry((sr, si)).or_insert(0) += 1;
        }
        let mut pos = 0;
        loop {
            if pos == m {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < cands.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Every `ν ≠ 0` with `|ν| ≤ 25` where the meet-in-the-middle count differs
/// from the naive one. `r` must be exactly representable.
pub fn rep_count_mismatches(m: usize, r: f64) -> Vec<String> {
    let norm_max = 625;
    let naive = naive_rep_counts(m, r, norm_max);
    let mut bad = Vec::new();
    for re in -25i64..=25 {
        for im in -25i64..=25 {
            let nn = re * re + im * im;
            if nn == 0 || nn > norm_max {
                continue;
            }
            let fast = rep_count(m, Gaussian::new(re, im), r).unwrap();
            let slow = naive.get(&(re, im)).copied().unwrap_or(0);
            if fast != slow {
                bad.push(format!("m={m} r={r} nu={re}+{im}i: {fast} vs {slow}"));
            }
        }
    }
    bad
}
