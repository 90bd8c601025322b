use std::io::Read;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rpnm_core::analysis::{fejer_minorant_check, sbp_random_trial};
use rpnm_core::constructions::{
    lb_parabola_gaussian, lb_parabola_real, rep_count, sphere_count_exact, Construction,
    ConstructionWitness, SphereMode,
};
use rpnm_core::counting::{CountResult, Denominator, Numerators, Witness};
use rpnm_core::exponents::{
    choose_n, complex_recursion, envelope, exponent_table, fit_scaling, real_recursion,
    EnvelopeParams, ExponentSequence, FitOptions, Regime, Weighting,
};
use rpnm_core::geometry::{cc_defect, complex_cc_defect, legendre_check, Manifold};
use rpnm_core::numtheory::{ExactRational, Gaussian};

use crate::args::{
    BatchArgs, Cli, Command, CountArgs, CurvatureArgs, ExponentsCommand, FejerArgs, FitArgs,
    Format, LegendreArgs, LowerboundArgs, ManifoldArgs, RepcountArgs, SbpArgs, SpherecountArgs,
};
use crate::error::{CliError, CliResult};
use crate::params::{delta_list, resolve_manifold, CountParams, PreparedCount, WindowSpec};
use crate::record::Sink;

pub fn run(cli: Cli) -> CliResult<()> {
    let jobs = jobs(cli.jobs)?;
    check_format(&cli.command, cli.format)?;
    let mut sink = Sink::open(cli.out.as_deref(), !cli.no_timing)?;
    let ctx = Context {
        format: cli.format,
        jobs,
        seed: cli.seed,
        strict: cli.strict,
    };
    let outcome = match &cli.command {
        Command::Count(a) => ctx.count(a, &mut sink),
        Command::Curvature(a) => curvature(a, &mut sink),
        Command::LegendreCheck(a) => ctx.legendre(a, &mut sink),
        Command::Exponents(a) => ctx.exponents(&a.command, &mut sink),
        Command::Lowerbound(a) => lowerbound(a, &mut sink),
        Command::Repcount(a) => repcount(a, &mut sink),
        Command::Spherecount(a) => spherecount(a, &mut sink),
        Command::Fejer(a) => ctx.fejer(a, &mut sink),
        Command::SbpCheck(a) => ctx.sbp(a, &mut sink),
        Command::Fit(a) => fit(a, &mut sink),
        Command::Batch(a) => ctx.batch(a, &mut sink),
    };
    let flushed = sink.finish();
    outcome?;
    flushed
}

struct Context {
    format: Format,
    jobs: Option<usize>,
    seed: u64,
    strict: bool,
}

fn jobs(flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("RPNM_JOBS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(format!("RPNM_JOBS = `{v}` is not a thread count"))),
        _ => Ok(None),
    }
}

fn check_format(command: &Command, format: Format) -> CliResult<()> {
    let ok = match format {
        Format::Jsonl => true,
        Format::Csv => matches!(command, Command::Count(_)),
        Format::Table => matches!(command, Command::Exponents(_)),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(
            "--format csv applies to count and --format table to exponents; other commands emit jsonl",
        ))
    }
}

fn manifold(a: &ManifoldArgs) -> CliResult<Manifold> {
    resolve_manifold(
        a.manifold.as_deref(),
        a.manifold_file.as_deref(),
        a.dim,
        a.radius,
    )
}

fn manifold_params(a: &ManifoldArgs) -> Value {
    json!({
        "manifold": a.manifold,
        "manifold_file": a.manifold_file,
        "dim": a.dim,
        "radius": a.radius,
    })
}

fn denominator_json(q: Denominator) -> Value {
    match q {
        Denominator::Int(q) => json!(q),
        Denominator::Gaussian(g) => json!([g.re, g.im]),
    }
}

fn numerators_json(p: &Numerators) -> Value {
    match p {
        Numerators::Int(v) => json!(v),
        Numerators::Gaussian(v) => json!(v.iter().map(|g| [g.re, g.im]).collect::<Vec<_>>()),
    }
}

fn rational_json(x: &ExactRational) -> Value {
    json!(x.to_string())
}

/// NaN and infinities become `null`.
fn float_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn witness_json(w: &Witness) -> Value {
    let mut v = json!({
        "a": numerators_json(&w.numerators),
        "q": denominator_json(w.denominator),
        "residuals": w.residuals,
    });
    if let Some(j) = &w.index {
        v["j"] = json!(j);
    }
    v
}

fn count_json(r: &CountResult) -> Value {
    let mut v = json!({
        "total": r.total,
        "lower": r.lower,
        "upper": r.upper,
        "ambiguous": r.is_ambiguous(),
        "per_q": r.per_q.iter().map(|p| json!({
            "q": denominator_json(p.q),
            "count": p.count,
            "lower": p.lower,
        })).collect::<Vec<_>>(),
        "witnesses": r.witnesses.iter().map(witness_json).collect::<Vec<_>>(),
    });
    if let Some(w) = r.weighted {
        v["weighted"] = json!({"total": w.total, "lower": w.lower, "upper": w.upper});
    }
    v
}

fn construction_witness_json(w: &ConstructionWitness, q_max: u64) -> Value {
    json!({
        "params": w.params,
        "a": numerators_json(&w.numerators),
        "q": denominator_json(w.denominator),
        "verified": w.verify(q_max),
    })
}

fn sequence_json(s: &ExponentSequence) -> Value {
    json!({
        "beta": s.beta.iter().copied().map(float_json).collect::<Vec<_>>(),
        "alpha": s.alpha.iter().copied().map(float_json).collect::<Vec<_>>(),
        "gamma": s.gamma.iter().copied().map(float_json).collect::<Vec<_>>(),
        "limit": rational_json(&s.limit),
        "attractor": rational_json(&s.attractor),
        "certificate": s.certificate.iter().copied().map(float_json).collect::<Vec<_>>(),
        "certificate_failure": s.certificate_failure(),
    })
}

fn sequence_table(s: &ExponentSequence) -> String {
    let mut out = format!("limit {}  attractor {}\n", s.limit, s.attractor);
    out.push_str("j\tbeta\talpha\tgamma\tcertificate\n");
    let cell = |v: &[f64], j: usize| v.get(j).map_or("-".to_string(), |x| format!("{x:.12}"));
    for j in 0..s.beta.len() {
        out.push_str(&format!(
            "{j}\t{}\t{}\t{}\t{}\n",
            cell(&s.beta, j),
            cell(&s.alpha, j),
            cell(&s.gamma, j),
            cell(&s.certificate, j)
        ));
    }
    out
}

impl Context {
    fn run_prepared(
        &self,
        cmd: &str,
        prepared: &PreparedCount,
        sink: &mut Sink,
    ) -> CliResult<bool> {
        let start = Instant::now();
        let result = prepared.run()?;
        let elapsed = start.elapsed();
        if self.format == Format::Csv {
            sink.text(&result.to_csv())?;
        } else {
            let params = serde_json::to_value(&prepared.params).expect("params serialize");
            sink.record(cmd, params, count_json(&result), elapsed)?;
        }
        Ok(result.is_ambiguous())
    }

    fn count(&self, a: &CountArgs, sink: &mut Sink) -> CliResult<()> {
        let window = a
            .window
            .as_deref()
            .map(|w| WindowSpec::parse(w, &a.window_shape, a.strict_window))
            .transpose()?;
        let params = CountParams {
            manifold: a.manifold.manifold.clone(),
            manifold_file: a.manifold.manifold_file.clone(),
            dim: a.manifold.dim,
            radius: a.manifold.radius,
            view: a.view.clone(),
            q: a.q,
            delta: delta_list(&a.delta),
            window,
            exact: a.exact,
            witnesses: a.witnesses,
            guard: a.guard,
            membership: a.membership.clone(),
            lipschitz: a.lipschitz,
            full_index: a.full_index,
        };
        let prepared = params.prepare(self.jobs)?;
        if self.run_prepared("count", &prepared, sink)? && self.strict {
            return Err(CliError::Ambiguous(1));
        }
        Ok(())
    }

    fn batch(&self, a: &BatchArgs, sink: &mut Sink) -> CliResult<()> {
        let prepared = load_manifest(&a.manifest, self.jobs)?;
        let mut ambiguous = 0;
        for p in &prepared {
            if self.run_prepared("count", p, sink)? {
                ambiguous += 1;
            }
        }
        if ambiguous > 0 && self.strict {
            return Err(CliError::Ambiguous(ambiguous));
        }
        Ok(())
    }

    fn legendre(&self, a: &LegendreArgs, sink: &mut Sink) -> CliResult<()> {
        let m = manifold(&a.manifold)?;
        let polynomial = match &m {
            Manifold::Real(r) => r.exact_poly().is_some(),
            Manifold::Holomorphic(h) => h.exact_poly().is_some(),
        };
        let tol = a.tol.unwrap_or(if polynomial { 1e-8 } else { 1e-6 });
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let start = Instant::now();
        let report = legendre_check(&m, a.points, a.directions, &mut rng)?;
        let mut params = manifold_params(&a.manifold);
        params["points"] = json!(a.points);
        params["directions"] = json!(a.directions);
        params["tol"] = json!(tol);
        params["seed"] = json!(self.seed);
        let result = json!({
            "evaluations": report.evaluations,
            "max_involution": report.max_involution,
            "max_hessian": report.max_hessian,
            "failures": report.failures,
            "pass": report.passes(tol),
        });
        sink.record("legendre-check", params, result, start.elapsed())
    }

    fn exponents(&self, c: &ExponentsCommand, sink: &mut Sink) -> CliResult<()> {
        let start = Instant::now();
        let table = self.format == Format::Table;
        match c {
            ExponentsCommand::Table { n, r } => {
                let t = exponent_table(*n, *r)?;
                if table {
                    return sink.text(&t.to_string());
                }
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|row| {
                        json!({
                            "name": row.name,
                            "formula": row.formula,
                            "value": row.value.as_ref().map(rational_json),
                            "value_f64": row.value.as_ref().map(ExactRational::to_f64),
                            "note": row.note,
                        })
                    })
                    .collect();
                let result = json!({"rows": rows, "best": t.best().name});
                sink.record(
                    "exponents-table",
                    json!({"n": n, "R": r}),
                    result,
                    start.elapsed(),
                )
            }
            ExponentsCommand::Recursion {
                kind,
                n,
                r,
                m,
                steps,
            } => {
                let (seq, params) = match kind.as_str() {
                    "real" => {
                        let (n, r) = n.zip(*r).ok_or_else(|| {
                            CliError::usage("the real recursion needs --n and --R")
                        })?;
                        (
                            real_recursion(n, r, *steps)?,
                            json!({"kind": kind, "n": n, "R": r, "steps": steps}),
                        )
                    }
                    "complex" => {
                        let m =
                            m.ok_or_else(|| CliError::usage("the complex recursion needs --m"))?;
                        (
                            complex_recursion(m, *steps)?,
                            json!({"kind": kind, "m": m, "steps": steps}),
                        )
                    }
                    other => {
                        return Err(CliError::usage(format!(
                            "unknown recursion `{other}` (real or complex)"
                        )))
                    }
                };
                if table {
                    return sink.text(&sequence_table(&seq));
                }
                sink.record(
                    "exponents-recursion",
                    params,
                    sequence_json(&seq),
                    start.elapsed(),
                )
            }
            ExponentsCommand::ChooseN { nu, r } => {
                let d = choose_n(*nu, *r)?;
                if table {
                    return sink.text(&format!(
                        "N = {}  (4/5)^N R = {:.12}  window [{}, {})  in_window {}\n",
                        d.n, d.value, d.window.0, d.window.1, d.in_window
                    ));
                }
                let result = json!({
                    "N": d.n,
                    "value": d.value,
                    "window": [d.window.0, d.window.1],
                    "in_window": d.in_window,
                });
                sink.record(
                    "exponents-choose-n",
                    json!({"nu": nu, "R": r}),
                    result,
                    start.elapsed(),
                )
            }
            ExponentsCommand::Envelope {
                regime,
                m,
                n,
                r,
                nu,
                epsilon,
                kappa,
                q,
                delta,
            } => {
                let need = |v: Option<u32>, flag: &str| {
                    v.ok_or_else(|| CliError::usage(format!("regime `{regime}` needs --{flag}")))
                };
                let regime_value = match regime.as_str() {
                    "complex" => Regime::ComplexTheorem { m: need(*m, "m")? },
                    "conjecture" => Regime::ComplexConjecture {
                        m: need(*m, "m")?,
                        epsilon: epsilon.ok_or_else(|| {
                            CliError::usage("regime `conjecture` needs --epsilon")
                        })?,
                    },
                    "real" => Regime::RealAnisotropic {
                        n: need(*n, "n")?,
                        r: need(*r, "R")?,
                        nu: nu.ok_or_else(|| CliError::usage("regime `real` needs --nu"))?,
                    },
                    other => {
                        return Err(CliError::usage(format!(
                            "unknown regime `{other}` (complex, conjecture or real)"
                        )))
                    }
                };
                let mut params = EnvelopeParams::new(regime_value);
                if let Some(k) = kappa {
                    params = params.with_kappa(*k)?;
                }
                let deltas = delta_list(delta)
                    .iter()
                    .map(|d| d.value().map(|x| x.to_f64()))
                    .collect::<CliResult<Vec<_>>>()?;
                let value = envelope(&params, *q, &deltas)?;
                if table {
                    return sink.text(&format!("{value:e}\n"));
                }
                let record_params = json!({
                    "regime": regime, "m": m, "n": n, "R": r, "nu": nu, "epsilon": epsilon,
                    "kappa": params.kappa, "Q": q, "delta": deltas,
                });
                sink.record(
                    "exponents-envelope",
                    record_params,
                    json!({"value": value}),
                    start.elapsed(),
                )
            }
        }
    }

    fn fejer(&self, a: &FejerArgs, sink: &mut Sink) -> CliResult<()> {
        for token in delta_list(&a.delta) {
            let delta = token.value()?.to_f64();
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let start = Instant::now();
            let report = fejer_minorant_check(delta, a.trials, &mut rng)?;
            let result = json!({
                "D": report.d,
                "trials": report.trials,
                "failures": report.failures,
                "worst_margin": report.worst_margin,
                "worst_theta": report.worst_theta,
                "pass": report.pass(),
            });
            let params = json!({"delta": token.0, "trials": a.trials, "seed": self.seed});
            sink.record("fejer", params, result, start.elapsed())?;
        }
        Ok(())
    }

    fn sbp(&self, a: &SbpArgs, sink: &mut Sink) -> CliResult<()> {
        const LAMBDAS: [u64; 4] = [8, 16, 32, 64];
        for i in 0..a.trials {
            let seed = self.seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = a.n.unwrap_or_else(|| rng.random_range(1..=3));
            let lambda = a
                .lambda
                .unwrap_or_else(|| LAMBDAS[rng.random_range(0..LAMBDAS.len())]);
            let start = Instant::now();
            let (_, _, outcome) = sbp_random_trial(&mut rng, n, lambda)?;
            let result =
                json!({"S_abs": outcome.s_abs, "bound": outcome.bound, "pass": outcome.pass});
            let params = json!({"seed": seed, "n": n, "lambda": lambda});
            sink.record("sbp-check", params, result, start.elapsed())?;
        }
        Ok(())
    }
}

/// Parses and validates every manifest entry before anything runs.
pub fn load_manifest(path: &Path, jobs: Option<usize>) -> CliResult<Vec<PreparedCount>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let entries = match value {
        Value::Array(items) => items,
        Value::Object(mut map) if map.len() == 1 && map.contains_key("queries") => {
            match map.remove("queries") {
                Some(Value::Array(items)) => items,
                _ => {
                    return Err(CliError::usage(format!(
                        "{}: `queries` must be a list",
                        path.display()
                    )))
                }
            }
        }
        _ => {
            return Err(CliError::usage(format!(
                "{}: expected a list of count parameters or {{\"queries\": [...]}}",
                path.display()
            )))
        }
    };
    entries
        .into_iter()
        .enumerate()
        .map(|(i, entry)| {
            let tag = |e: CliError| match e {
                CliError::Usage(msg) => CliError::usage(format!("entry {i}: {msg}")),
                CliError::Core(e) => CliError::usage(format!("entry {i}: {e}")),
                other => other,
            };
            let params: CountParams = serde_json::from_value(entry)
                .map_err(|e| CliError::usage(format!("entry {i}: {e}")))?;
            params.prepare(jobs).map_err(tag)
        })
        .collect()
}

fn curvature(a: &CurvatureArgs, sink: &mut Sink) -> CliResult<()> {
    let m = manifold(&a.manifold)?;
    let start = Instant::now();
    let report = match &m {
        Manifold::Real(r) => cc_defect(r, a.grid, a.theta_grid)?,
        Manifold::Holomorphic(h) => complex_cc_defect(h, a.grid)?,
    };
    let mut params = manifold_params(&a.manifold);
    params["grid"] = json!(a.grid);
    params["theta_grid"] = json!(a.theta_grid);
    let result = json!({
        "defect": report.defect,
        "holds": report.holds,
        "argmin_x": report.argmin_x,
        "argmin_theta": report.argmin_theta,
    });
    sink.record("curvature", params, result, start.elapsed())
}

fn lowerbound(a: &LowerboundArgs, sink: &mut Sink) -> CliResult<()> {
    let start = Instant::now();
    let set = match Construction::parse(&a.construction)? {
        Construction::ParabolaReal => lb_parabola_real(a.q)?,
        Construction::ParabolaGaussian => lb_parabola_gaussian(a.q)?,
    };
    let witnesses: Vec<Value> = set
        .witnesses(a.witnesses)
        .iter()
        .map(|w| construction_witness_json(w, a.q))
        .collect();
    let params = json!({"construction": a.construction, "Q": a.q, "witnesses": a.witnesses});
    let result = json!({"count": set.count, "witnesses": witnesses});
    sink.record("lowerbound", params, result, start.elapsed())
}

fn parse_gaussian(text: &str) -> CliResult<Gaussian<i64>> {
    let bad = || CliError::usage(format!("`{text}` is not a Gaussian integer `re,im`"));
    let (re, im) = text.split_once(',').unwrap_or((text, "0"));
    Ok(Gaussian::new(
        re.trim().parse().map_err(|_| bad())?,
        im.trim().parse().map_err(|_| bad())?,
    ))
}

fn repcount(a: &RepcountArgs, sink: &mut Sink) -> CliResult<()> {
    let nu = parse_gaussian(&a.nu)?;
    let start = Instant::now();
    let count = rep_count(a.m, nu, a.r)?;
    let params = json!({"m": a.m, "nu": [nu.re, nu.im], "r": a.r});
    sink.record("repcount", params, json!({"count": count}), start.elapsed())
}

fn spherecount(a: &SpherecountArgs, sink: &mut Sink) -> CliResult<()> {
    let mode = SphereMode::parse(&a.mode)?;
    let start = Instant::now();
    let count = sphere_count_exact(a.m, a.q, a.r, mode)?;
    let params = json!({"m": a.m, "Q": a.q, "r": a.r, "mode": a.mode});
    sink.record(
        "spherecount",
        params,
        json!({"count": count}),
        start.elapsed(),
    )
}

/// `(Q, count)` from a count record (`result.total`) or a lowerbound record
/// (`result.count`).
fn fit_sample(record: &Value) -> Option<(f64, f64)> {
    let q = record.get("params")?.get("Q")?.as_f64()?;
    let result = record.get("result")?;
    let c = result
        .get("total")
        .or_else(|| result.get("count"))?
        .as_f64()?;
    Some((q, c))
}

fn fit(a: &FitArgs, sink: &mut Sink) -> CliResult<()> {
    let text = if a.input == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::io("stdin", e))?;
        s
    } else {
        std::fs::read_to_string(&a.input).map_err(|e| CliError::io(a.input.clone(), e))?
    };
    let weighting = match a.weighting.as_str() {
        "uniform" => Weighting::Uniform,
        "count" => Weighting::Count,
        other => {
            return Err(CliError::usage(format!(
                "unknown weighting `{other}` (uniform or count)"
            )))
        }
    };
    let mut samples = Vec::new();
    let mut skipped_zero = 0;
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let record: Value = serde_json::from_str(line)
            .map_err(|e| CliError::usage(format!("{} line {}: {e}", a.input, i + 1)))?;
        let (q, c) = fit_sample(&record).ok_or_else(|| {
            CliError::usage(format!(
                "{} line {}: expected params.Q with result.total or result.count",
                a.input,
                i + 1
            ))
        })?;
        if c == 0.0 {
            skipped_zero += 1;
        } else {
            samples.push((q, c));
        }
    }
    let start = Instant::now();
    let options = FitOptions {
        weighting,
        drop_smallest_decade: a.drop_smallest_decade,
    };
    let f = fit_scaling(&samples, options)?;
    let params = json!({
        "input": a.input,
        "weighting": a.weighting,
        "drop_smallest_decade": a.drop_smallest_decade,
    });
    let result = json!({
        "slope": f.slope,
        "intercept": f.intercept,
        "max_residual": f.max_residual,
        "samples": f.samples,
        "skipped_zero": skipped_zero,
    });
    sink.record("fit", params, result, start.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::parse_rational;

    #[test]
    fn gaussian_tokens() {
        assert_eq!(parse_gaussian("3,-4").unwrap(), Gaussian::new(3, -4));
        assert_eq!(parse_gaussian("5").unwrap(), Gaussian::new(5, 0));
        assert!(parse_gaussian("a,b").is_err());
    }

    #[test]
    fn fit_samples_from_records() {
        let count = json!({"params": {"Q": 8}, "result": {"total": 12}});
        let lb = json!({"params": {"Q": 16}, "result": {"count": 14}});
        assert_eq!(fit_sample(&count), Some((8.0, 12.0)));
        assert_eq!(fit_sample(&lb), Some((16.0, 14.0)));
        assert_eq!(fit_sample(&json!({"params": {}})), None);
    }

    #[test]
    fn rational_rendering() {
        assert_eq!(rational_json(&parse_rational("0.5").unwrap()), json!("1/2"));
        assert_eq!(float_json(f64::NAN), Value::Null);
    }
}
