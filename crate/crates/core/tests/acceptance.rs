//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit
//! status if any criterion deviates from its recorded outcome.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rpnm_core::analysis::{fejer_minorant_check, sbp_random_trial};
use rpnm_core::constructions::{
    lb_parabola_gaussian, lb_parabola_real, rep_count, sphere_count_exact, SphereMode,
};
use rpnm_core::counting::{count_gaussian, count_real, CountQuery, DeltaVec, Mode};
use rpnm_core::exponents::{
    complex_limit, complex_recursion, complex_step_exact, exponent_table, fit_scaling, real_limit,
    real_recursion, FitOptions,
};
use rpnm_core::geometry::{
    builtin, builtin_holomorphic, builtin_real, implicit_cc_residual, implicit_cc_residual_at,
    legendre_check, nd_vs_cnd_residual, realify, sphere_normalized_bordered_det, to_complex,
    BuiltinParams, ImplicitSurface,
};
use rpnm_core::numtheory::{ExactRational, Gaussian};

use common::{
    all_builtins, embedding_violations, frac, monotonicity_violations, rep_count_mismatches,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn params(dim: usize) -> BuiltinParams {
    BuiltinParams {
        dim: Some(dim),
        radius: None,
    }
}

fn exact_query(q: u64, deltas: Vec<ExactRational>) -> CountQuery {
    CountQuery::new(q, DeltaVec::rational(deltas).unwrap()).mode(Mode::Exact)
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn golden_counts() -> Outcome {
    let start = Instant::now();
    let parabola = builtin_real("real-parabola", params(1)).unwrap();
    let cp = builtin_holomorphic("complex-parabola", params(1)).unwrap();
    let values = [
        (
            "count_real(real-parabola, 4, 1/4)",
            count_real(&parabola, &exact_query(4, vec![frac(1, 4)]))
                .unwrap()
                .total,
            3,
        ),
        (
            "count_gaussian(complex-parabola, 1, 0)",
            count_gaussian(&cp, &exact_query(1, vec![frac(0, 1); 2]))
                .unwrap()
                .total,
            8,
        ),
        (
            "lb_parabola_real(16)",
            lb_parabola_real(16).unwrap().count,
            14,
        ),
        (
            "lb_parabola_gaussian(8)",
            lb_parabola_gaussian(8).unwrap().count,
            1,
        ),
        (
            "A_2(2, 0.9)",
            rep_count(2, Gaussian::new(2, 0), 0.9).unwrap(),
            4,
        ),
        (
            "A_1(4, 1)",
            rep_count(1, Gaussian::new(4, 0), 1.0).unwrap(),
            2,
        ),
        (
            "sphere_count_exact(1, 2, 1)",
            sphere_count_exact(1, 2, 1.0, SphereMode::Real).unwrap(),
            8,
        ),
    ];
    let elapsed = start.elapsed();
    let wrong: Vec<String> = values
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name} = {got}, expected {want}"))
        .collect();
    let pass = wrong.is_empty() && within(elapsed, 1.0);
    Outcome::new(
        pass,
        format!(
            "{} of 7 values match, {:.3} s {}",
            7 - wrong.len(),
            elapsed.as_secs_f64(),
            wrong.join("; ")
        ),
    )
}

fn realification_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for name in ["complex-parabola", "complex-sphere"] {
        for m in [1, 2] {
            let h = builtin_holomorphic(name, params(m)).unwrap();
            for _ in 0..1000 {
                let z = to_complex(&h.domain().sample_interior(&mut rng, 0.999));
                let theta = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                worst = worst.max(nd_vs_cnd_residual(&h, &z, theta).unwrap());
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-8 && within(elapsed, 10.0),
        format!(
            "max residual {worst:.2e} over 4000 samples, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn legendre_duality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = [
        ("real-parabola", 1, 1e-8),
        ("real-parabola", 2, 1e-8),
        ("complex-parabola", 1, 1e-8),
        ("complex-parabola", 2, 1e-8),
        ("real-sphere", 2, 1e-6),
        ("complex-sphere", 1, 1e-6),
        ("complex-sphere", 2, 1e-6),
    ];
    let mut failing = Vec::new();
    let mut worst_poly: f64 = 0.0;
    let mut worst_sphere: f64 = 0.0;
    for (name, dim, tol) in cases {
        let m = builtin(name, params(dim)).unwrap();
        let report = legendre_check(&m, 100, 16, &mut rng).unwrap();
        let worst = report.max_involution.max(report.max_hessian);
        if tol < 1e-7 {
            worst_poly = worst_poly.max(worst);
        } else {
            worst_sphere = worst_sphere.max(worst);
        }
        if !report.passes(tol) {
            failing.push(format!(
                "{name}({dim}): {worst:.2e}, {} solver failures",
                report.failures
            ));
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failing.is_empty() && within(elapsed, 30.0),
        format!(
            "polynomial max {worst_poly:.2e}, sphere max {worst_sphere:.2e}, {:.2} s {}",
            elapsed.as_secs_f64(),
            failing.join("; ")
        ),
    )
}

fn implicit_curvature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let surfaces = [
        ImplicitSurface::parabola(),
        ImplicitSurface::real_sphere(2, 0.3).unwrap(),
        ImplicitSurface::complex_sphere_pair(1, 0.3).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for s in &surfaces {
        let graph = s.graph().unwrap();
        for _ in 0..100 {
            let x = graph.domain().sample_interior(&mut rng, 0.95);
            let dir: Vec<f64> = (0..s.codim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let u = s.lift(&x).unwrap();
            worst = worst
                .max(implicit_cc_residual(s, &x, &dir).unwrap())
                .max(implicit_cc_residual_at(s, &u, &dir).unwrap());
        }
    }
    let mut worst_det: f64 = 0.0;
    for m in [1, 2] {
        for _ in 0..100 {
            let z: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)))
                .collect();
            let zz: Complex64 = z.iter().map(|w| w * w).sum();
            let mut zeta = z.clone();
            zeta.push((Complex64::new(1.0, 0.0) - zz).sqrt());
            let det = sphere_normalized_bordered_det(m, &zeta).unwrap();
            worst_det = worst_det.max((det - Complex64::new(-1.0, 0.0)).norm());
        }
    }
    Outcome::new(
        worst <= 1e-6 && worst_det <= 1e-9,
        format!(
            "graph/implicit residual {worst:.2e}, bordered determinant |det + 1| {worst_det:.2e}"
        ),
    )
}

fn fejer_minorant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let delta = rng.random_range(1e-3..0.5);
        let report = fejer_minorant_check(delta, 1, &mut rng).unwrap();
        failures += report.failures;
        worst = worst.min(report.worst_margin);
    }
    Outcome::new(
        failures == 0,
        format!("{failures} failures over 10^4 random (delta, theta), min margin {worst:.3e}"),
    )
}

fn summation_by_parts() -> Outcome {
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for i in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(6_000 + i);
        let n = 1 + (i % 3) as usize;
        let lambda = [8, 16, 32][rng.random_range(0..3)];
        let (spec, _, out) = sbp_random_trial(&mut rng, n, lambda).unwrap();
        assert!(spec
            .j
            .iter()
            .all(|&(lo, hi)| 1 <= lo && hi <= lambda as i64));
        if !out.pass {
            violations += 1;
        }
        if out.bound > 0.0 {
            worst_ratio = worst_ratio.max(out.s_abs / out.bound);
        }
    }
    Outcome::new(
        violations == 0,
        format!("{violations} violations in 500 trials, max |S|/bound {worst_ratio:.4}"),
    )
}

/// Pairs `(n, R)` with `n ≤ 10`, `R ≤ 4` whose real iterates miss the stated
/// limit or break the `(4/5)^N R` certificate.
fn real_recursion_deviations() -> BTreeSet<(u32, u32)> {
    let steps = 200;
    let mut out = BTreeSet::new();
    for n in 1..=10u32 {
        for r in 1..=4u32 {
            let (nf, rf) = (n as i64, r as i64);
            let stated =
                ExactRational::new((nf + 1) * (nf + 2 * rf) - (nf + 2) * rf, nf + 2 * rf).unwrap();
            assert_eq!(real_limit(n, r), stated);
            let seq = real_recursion(n, r, steps).unwrap();
            let limit = stated.to_f64();
            let limit_ok = (seq.last_beta() - limit).abs() <= 1e-10;
            let certificate_ok = seq
                .beta
                .iter()
                .enumerate()
                .all(|(j, b)| b - limit <= 0.8f64.powi(j as i32) * r as f64 + 1e-14);
            if !(limit_ok && certificate_ok) {
                out.insert((n, r));
            }
        }
    }
    out
}

fn documented_real_deviations() -> BTreeSet<(u32, u32)> {
    let mut s: BTreeSet<(u32, u32)> = (1..=4).flat_map(|r| [(1, r), (2, r)]).collect();
    s.extend([(3, 2), (3, 3), (3, 4), (4, 4)]);
    s
}

/// Returns the outcome and whether it matches the recorded deviation.
fn exponent_recursions() -> (Outcome, bool) {
    let seq = complex_recursion(2, 50).unwrap();
    let closed_ok = (0..=50).all(|j| {
        (seq.beta[j] - (4.0 + 2.0 / (j as f64 + 1.0))).abs() <= 1e-12
            && (seq.gamma[j] - 2.0 * j as f64).abs() <= 1e-12
    });
    let three = ExactRational::from_integer(3);
    let fixed_ok = complex_limit(1) == three && complex_step_exact(1, &three).unwrap() == three;
    let table_ok = exponent_table(2, 2).unwrap().value("refined") == Some(&frac(4, 3));
    let deviations = real_recursion_deviations();
    let real_ok = deviations.is_empty();
    let listed: Vec<String> = deviations
        .iter()
        .map(|(n, r)| format!("({n},{r})"))
        .collect();
    let outcome = Outcome::new(
        closed_ok && fixed_ok && table_ok && real_ok,
        format!(
            "complex m=2 closed forms {}, m=1 fixed point {}, refined(2,2) = 4/3 {}, real limit and certificate fail for {} of 40 pairs: {}",
            ok(closed_ok),
            ok(fixed_ok),
            ok(table_ok),
            deviations.len(),
            listed.join(" ")
        ),
    );
    let as_recorded =
        closed_ok && fixed_ok && table_ok && deviations == documented_real_deviations();
    (outcome, as_recorded)
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn gaussian_construction_oracle(q: u64) -> u64 {
    let u = ((q / 2) as f64).sqrt().floor() as u64;
    let pairs = u * u.saturating_sub(1) / 2;
    pairs * pairs
}

/// Returns the outcome and whether it matches the recorded deviation: the
/// real slope is in range, while the Gaussian slope on the dyadic grid sits
/// above 2.1 and only the full integer range brings it back inside.
fn construction_growth() -> (Outcome, bool) {
    let start = Instant::now();
    let slope = |qs: &[u64], f: &dyn Fn(u64) -> u64| {
        let samples: Vec<(f64, f64)> = qs.iter().map(|&q| (q as f64, f(q) as f64)).collect();
        fit_scaling(&samples, FitOptions::default()).unwrap().slope
    };
    let dyadic: Vec<u64> = (6..=14).map(|k| 1 << k).collect();
    let real = |q| lb_parabola_real(q).unwrap().count;
    let gaussian = |q| lb_parabola_gaussian(q).unwrap().count;
    let sr = slope(&dyadic, &real);
    let sg = slope(&dyadic, &gaussian);
    let elapsed = start.elapsed();
    let full: Vec<u64> = (64..=16384).collect();
    let sg_full = slope(&full, &gaussian);
    let oracle_ok = full
        .iter()
        .all(|&q| gaussian(q) == gaussian_construction_oracle(q));
    let real_ok = (1.45..=1.55).contains(&sr);
    let gaussian_ok = (1.9..=2.1).contains(&sg);
    let outcome = Outcome::new(
        real_ok && gaussian_ok && within(elapsed, 5.0),
        format!(
            "dyadic slopes real {sr:.4}, gaussian {sg:.4}, {:.2} s; gaussian slope over every integer Q in [64, 16384] is {sg_full:.4}",
            elapsed.as_secs_f64()
        ),
    );
    let as_recorded = real_ok
        && oracle_ok
        && within(elapsed, 5.0)
        && (2.1..2.12).contains(&sg)
        && (1.9..=2.1).contains(&sg_full);
    (outcome, as_recorded)
}

fn main_term_scaling() -> Outcome {
    let h = builtin_holomorphic("complex-parabola", params(1)).unwrap();
    let real = realify(&h);
    let qs = [50u64, 100, 200, 400];
    let sweep = |jobs: usize| {
        let start = Instant::now();
        let totals: Vec<u64> = qs
            .iter()
            .map(|&q| {
                count_real(&real, &exact_query(q, vec![frac(1, 4); 2]).jobs(jobs))
                    .unwrap()
                    .total
            })
            .collect();
        (totals, start.elapsed())
    };
    let (parallel, t8) = sweep(8);
    let (serial, t1) = sweep(1);
    let samples: Vec<(f64, f64)> = qs
        .iter()
        .zip(&parallel)
        .map(|(&q, &c)| (q as f64, c as f64))
        .collect();
    let slope = fit_scaling(&samples, FitOptions::default()).unwrap().slope;
    let identical = parallel == serial;
    Outcome::new(
        (2.5..=3.5).contains(&slope) && identical && within(t8, 60.0) && within(t1, 300.0),
        format!(
            "slope {slope:.4}, totals {parallel:?} identical across 1 and 8 workers: {identical}, {:.1} s at 8 workers, {:.1} s at 1",
            t8.as_secs_f64(),
            t1.as_secs_f64()
        ),
    )
}

fn counting_invariants() -> Outcome {
    let qs = [1, 2, 5, 10, 20];
    let deltas = [(0, 1), (1, 32), (1, 16), (1, 8), (1, 4)];
    let mut bad = Vec::new();
    for m in all_builtins() {
        bad.extend(monotonicity_violations(&m, &qs, &deltas));
    }
    let all_q: Vec<u64> = (1..=20).collect();
    bad.extend(embedding_violations(
        &all_q,
        &[(0, 1), (1, 16), (1, 4)],
        None,
    ));
    for m in 1..=3 {
        for r in [1.0, 0.75, 0.5] {
            bad.extend(rep_count_mismatches(m, r));
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "{} exceptions over monotonicity (4 builtins, all views), embedding (Q <= 20) and rep_count vs naive (m <= 3, |nu| <= 25) {}",
            bad.len(),
            bad.iter().take(5).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn report(k: usize, o: &Outcome) {
    println!(
        "criterion {k:>2}: {} {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
}

fn main() {
    let mut unexpected = Vec::new();
    let checks: [(usize, fn() -> Outcome); 6] = [
        (1, golden_counts),
        (2, realification_identity),
        (3, legendre_duality),
        (4, implicit_curvature),
        (5, fejer_minorant),
        (6, summation_by_parts),
    ];
    for (k, check) in checks {
        let o = check();
        report(k, &o);
        if !o.pass {
            unexpected.push(k);
        }
    }
    let (seven, as_recorded) = exponent_recursions();
    report(7, &seven);
    if as_recorded {
        println!("criterion  7: the deviation is exactly the recorded unattainable set of the real recursion");
    } else {
        unexpected.push(7);
    }
    let (eight, as_recorded) = construction_growth();
    report(8, &eight);
    if as_recorded {
        println!("criterion  8: the deviation is exactly the recorded dyadic-grid excess of the Gaussian construction");
    } else {
        unexpected.push(8);
    }
    let checks: [(usize, fn() -> Outcome); 2] = [(9, main_term_scaling), (10, counting_invariants)];
    for (k, check) in checks {
        let o = check();
        report(k, &o);
        if !o.pass {
            unexpected.push(k);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
