use serde::Serialize;
use serde_json::{json, Value};
use tempered_ld::conjugate::{kappa_star_closed, legendre_numeric, ConjugateOptions, RateFn};
use tempered_ld::ldp::{
    plain_tail_estimator, rate_i, rate_j, scaled_log_mgf, scaled_sample, spans,
    theta_invariance_check, tilted_tail_estimator,
};
use tempered_ld::mlf::log_mittag_leffler;
use tempered_ld::simulate::{
    par_map_indexed, sample_increments, sample_passages, sample_time_changed_many, simulate_path,
    PassageOptions, RngStream,
};
use tempered_ld::stats::{mean, std_error};
use tempered_ld::timechange::{h_rate, h_zero, HRateFn};
use tempered_ld::{CumulantFn, ExtReal, ParamSet};

use crate::config::{Experiment, ExperimentConfig, RateKindConfig, SimTask, TailMethod};
use crate::{fmt_f64, CliError, DataFile, RunOutput};

const INVARIANCE_TOL: f64 = 1e-12;

fn fmt_ext(v: ExtReal<f64>) -> String {
    match v {
        ExtReal::Finite(x) => fmt_f64(x),
        ExtReal::PosInf => "inf".into(),
        ExtReal::NegInf => "-inf".into(),
    }
}

/// `f64` view of an extended real; infinities serialize as JSON `null`.
fn ext_f64(v: ExtReal<f64>) -> f64 {
    v.to_float()
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> DataFile {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    DataFile::Csv(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv"))
}

fn ndjson<T: Serialize>(records: impl IntoIterator<Item = T>) -> DataFile {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
    }
    DataFile::Ndjson(out)
}

fn sample_summary(xs: &[f64]) -> Value {
    json!({ "n": xs.len(), "mean": mean(xs), "std_error": std_error(xs) })
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    match config {
        ExperimentConfig::Rate {
            params, kind, x, ..
        } => rate(params, *kind, &x.points()?),
        ExperimentConfig::Conjugate { params, x, .. } => conjugate(params, &x.points()?),
        ExperimentConfig::Mlf { gamma, x, .. } => mlf(*gamma, &x.points()?),
        ExperimentConfig::Simulate {
            params,
            task,
            n,
            seed,
            ..
        } => simulate(params, task, *n, seed.expect("checked")),
        ExperimentConfig::Verify {
            experiment, seed, ..
        } => verify(experiment, *seed),
        ExperimentConfig::Timechange {
            params, levy, x, ..
        } => {
            let h = HRateFn::new(*params, levy.exponent())
                .map_err(CliError::upstream("time-change rate"))?;
            let mut rows = Vec::new();
            for &xi in &x.points()? {
                let v = h_rate(&h, xi, ConjugateOptions::default())
                    .map_err(CliError::upstream(format!("H({xi})")))?;
                rows.push(vec![fmt_f64(xi), fmt_ext(v)]);
            }
            Ok(RunOutput {
                data: csv_table(&["x", "h"], rows),
                summary: json!({ "h_zero": h_zero(&h), "theta_regime": format!("{:?}", h.theta_regime) }),
            })
        }
    }
}

fn rate(p: &ParamSet<f64>, kind: RateKindConfig, xs: &[f64]) -> Result<RunOutput, CliError> {
    let f = match kind {
        RateKindConfig::KappaStar => RateFn::kappa_star(*p),
        RateKindConfig::Psi => RateFn::psi(*p),
        RateKindConfig::LambdaInv => RateFn::lambda_inv(*p).map_err(CliError::upstream("Λ"))?,
    };
    let mut rows = Vec::new();
    for &x in xs {
        let v = f
            .value(x)
            .map_err(CliError::upstream(format!("rate at {x}")))?;
        rows.push(vec![fmt_f64(x), fmt_ext(v)]);
    }
    Ok(RunOutput {
        data: csv_table(&["x", "value"], rows),
        summary: json!({ "points": xs.len(), "zero": f.zero() }),
    })
}

fn conjugate(p: &ParamSet<f64>, xs: &[f64]) -> Result<RunOutput, CliError> {
    let k = CumulantFn::new(*p);
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for &x in xs {
        let closed =
            kappa_star_closed(p, x).map_err(CliError::upstream(format!("closed κ* at {x}")))?;
        let numeric = legendre_numeric(&k, x, ConjugateOptions::default())
            .map_err(CliError::upstream(format!("numeric κ* at {x}")))?
            .value;
        let (abs, rel) = match (closed, numeric) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (
                (a - b).abs(),
                (a - b).abs() / a.abs().max(f64::MIN_POSITIVE),
            ),
            (a, b) if a == b => (0.0, 0.0),
            _ => (f64::INFINITY, f64::INFINITY),
        };
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
        rows.push(vec![
            fmt_f64(x),
            fmt_ext(closed),
            fmt_ext(numeric),
            fmt_f64(abs),
            fmt_f64(rel),
        ]);
    }
    Ok(RunOutput {
        data: csv_table(&["x", "closed", "numeric", "abs_err", "rel_err"], rows),
        summary: json!({ "max_abs_err": max_abs, "max_rel_err": max_rel }),
    })
}

fn mlf(gamma: f64, xs: &[f64]) -> Result<RunOutput, CliError> {
    let mut rows = Vec::new();
    for &x in xs {
        let e =
            log_mittag_leffler(gamma, x).map_err(CliError::upstream(format!("E_{gamma}({x})")))?;
        rows.push(vec![
            fmt_f64(x),
            fmt_f64(e.log_value),
            format!("{:?}", e.branch).to_lowercase(),
        ]);
    }
    Ok(RunOutput {
        data: csv_table(&["x", "log_value", "branch"], rows),
        summary: json!({ "points": xs.len() }),
    })
}

fn passage_opts(factor: Option<f64>) -> PassageOptions {
    factor.map_or_else(PassageOptions::default, |horizon_factor| PassageOptions {
        horizon_factor,
    })
}

fn column(xs: &[f64]) -> DataFile {
    csv_table(&["value"], xs.iter().map(|&x| vec![fmt_f64(x)]))
}

fn simulate(p: &ParamSet<f64>, task: &SimTask, n: usize, seed: u64) -> Result<RunOutput, CliError> {
    let sim = |what: &str| CliError::upstream(format!("simulate {what}"));
    match task {
        SimTask::Increments { dt } => {
            let xs = sample_increments(p, *dt, n, seed).map_err(sim("increments"))?;
            Ok(RunOutput {
                summary: sample_summary(&xs),
                data: column(&xs),
            })
        }
        SimTask::Path { horizon, step } => {
            #[derive(Serialize)]
            struct Rec {
                replicate: u64,
                #[serde(flatten)]
                path: tempered_ld::PathSample,
            }
            let paths: Result<Vec<Rec>, _> = par_map_indexed(n, |i| {
                simulate_path(p, *horizon, *step, &mut RngStream::replicate(seed, i, 0))
                    .map(|path| Rec { replicate: i, path })
            })
            .into_iter()
            .collect();
            let paths = paths.map_err(sim("path"))?;
            let ends: Vec<f64> = paths
                .iter()
                .map(|r| *r.path.values.last().unwrap())
                .collect();
            Ok(RunOutput {
                summary: sample_summary(&ends),
                data: ndjson(paths),
            })
        }
        SimTask::Passage {
            t,
            step,
            horizon_factor,
        } => {
            let rs = sample_passages(p, *t, *step, n, seed, passage_opts(*horizon_factor))
                .map_err(sim("passage"))?;
            let ts: Vec<f64> = rs.iter().map(|r| r.t_hat).collect();
            Ok(RunOutput {
                summary: sample_summary(&ts),
                data: ndjson(rs),
            })
        }
        SimTask::TimeChanged {
            levy,
            t,
            step,
            horizon_factor,
        } => {
            let xs = sample_time_changed_many(
                &levy.exponent(),
                p,
                *t,
                *step,
                n,
                seed,
                passage_opts(*horizon_factor),
            )
            .map_err(sim("time change"))?;
            let scaled: Vec<f64> = xs.iter().map(|x| x / t).collect();
            Ok(RunOutput {
                summary: json!({ "over_t": sample_summary(&scaled) }),
                data: column(&xs),
            })
        }
        SimTask::Scaled {
            scaling,
            theta,
            times,
        } => {
            let spec = scaling.resolve(p.gamma())?;
            spans(times).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
            let rows: Result<Vec<Vec<f64>>, _> = par_map_indexed(n, |i| {
                scaled_sample(
                    &spec,
                    p,
                    *theta,
                    times,
                    &mut RngStream::replicate(seed, i, 0),
                )
            })
            .into_iter()
            .collect();
            let rows = rows.map_err(CliError::upstream("simulate scaled increments"))?;
            let header: Vec<String> = (1..=times.len()).map(|i| format!("y{i}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            Ok(RunOutput {
                summary: json!({ "n": n, "spec": spec, "speed": spec.speed(*theta) }),
                data: csv_table(
                    &header,
                    rows.into_iter()
                        .map(|r| r.into_iter().map(fmt_f64).collect()),
                ),
            })
        }
    }
}

fn verify(experiment: &Experiment, seed: Option<u64>) -> Result<RunOutput, CliError> {
    let ldp = |what: &str| CliError::upstream(format!("verify {what}"));
    match experiment {
        Experiment::Invariance {
            gamma,
            lambda,
            thetas,
            ys,
            times,
        } => {
            let mut recs = Vec::new();
            let mut worst = 0.0f64;
            for &theta in thetas {
                let r = theta_invariance_check(*gamma, *lambda, &[theta], ys, times)
                    .map_err(ldp("invariance"))?;
                worst = worst.max(r);
                recs.push(json!({
                    "experiment": "invariance", "gamma": gamma, "lambda": lambda, "theta": theta,
                    "residual": r, "pass": r <= INVARIANCE_TOL,
                }));
            }
            Ok(RunOutput {
                data: ndjson(recs),
                summary: json!({ "max_residual": worst, "pass": worst <= INVARIANCE_TOL }),
            })
        }
        Experiment::RateI {
            gamma,
            lambda,
            times,
            xs,
        } => {
            let mut recs = Vec::new();
            for x in xs {
                let i = rate_i(*gamma, *lambda, times, x).map_err(ldp("rate I"))?;
                let j = rate_j(*gamma, *lambda, times, x).map_err(ldp("rate J"))?;
                recs.push(json!({ "experiment": "rate-i", "x": x, "rate_i": ext_f64(i), "rate_j": ext_f64(j) }));
            }
            Ok(RunOutput {
                data: ndjson(recs),
                summary: json!({ "points": xs.len() }),
            })
        }
        Experiment::Tail {
            params,
            t,
            x,
            n,
            method,
        } => {
            let seed = seed.expect("checked");
            let target = RateFn::kappa_star(*params)
                .value(*x)
                .map_err(CliError::upstream("κ*"))?;
            let mut recs = Vec::new();
            let mut push = |name: &str, est: tempered_ld::LdpEstimate| {
                let rel = (est.emp_rate - target.to_float()).abs() / target.to_float().abs();
                recs.push(
                    json!({ "experiment": "tail", "method": name, "estimate": est,
                                  "kappa_star": ext_f64(target), "rel_err": rel }),
                );
            };
            if matches!(method, TailMethod::Tilted | TailMethod::Both) {
                push(
                    "tilted",
                    tilted_tail_estimator(params, *t, *x, *n, seed).map_err(ldp("tilted tail"))?,
                );
            }
            if matches!(method, TailMethod::Plain | TailMethod::Both) {
                // Independent of the tilted run.
                let s = seed.wrapping_add(1);
                push(
                    "plain",
                    plain_tail_estimator(params, *t, *x, *n, s).map_err(ldp("plain tail"))?,
                );
            }
            Ok(RunOutput {
                data: ndjson(recs),
                summary: json!({ "kappa_star": ext_f64(target) }),
            })
        }
        Experiment::Moderate {
            params,
            scaling,
            thetas,
            ys,
            times,
        } => {
            let spec = scaling.resolve(params.gamma())?;
            let unit = params
                .with_theta(1.0)
                .map_err(CliError::upstream("θ = 1 parameters"))?;
            let k1 = CumulantFn::new(unit);
            let dts = spans(times).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
            let mut recs = Vec::new();
            let mut worst = 0.0f64;
            for &theta in thetas {
                for y in ys {
                    let got = scaled_log_mgf(&spec, params, theta, times, y)
                        .map_err(ldp("scaled log-MGF"))?;
                    let want: ExtReal<f64> =
                        dts.iter().zip(y).fold(ExtReal::zero(), |acc, (dt, &yi)| {
                            acc.add(k1.kappa(yi).scale(*dt))
                        });
                    let r = match (got, want) {
                        (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                            (a - b).abs() / b.abs().max(1.0)
                        }
                        (a, b) if a == b => 0.0,
                        _ => f64::INFINITY,
                    };
                    worst = worst.max(r);
                    recs.push(json!({
                        "experiment": "moderate", "theta": theta, "y": y, "speed": spec.speed(theta),
                        "scaled_log_mgf": ext_f64(got), "limit": ext_f64(want), "residual": r,
                    }));
                }
            }
            Ok(RunOutput {
                data: ndjson(recs),
                summary: json!({ "spec": spec, "max_residual": worst }),
            })
        }
    }
}
