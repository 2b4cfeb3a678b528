//! Subcommand implementations. Each returns the aggregate status of its run.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use wfgem::constants::{
    gamma_quadratic_bound, gamma_series, harnack_exponent_1d, k_ab, kernel_rate, log_beta_from_gamma, s_min, C0,
};
use wfgem::gem::{product_kernel, sample_gem_many, simulate_gem_path, CubePoint, SimplexPoint};
use wfgem::sim::{coupling_summaries, girsanov_bound, girsanov_moment, simulate_coupling, simulate_path_stream};
use wfgem::spectral::OrthoBasis;
use wfgem::stats::{lin_grid, EstimateCI};
use wfgem::verify::{suite_checks, CheckReport, Status};
use wfgem::{Error, ParamSequence};

use crate::config::{config_error, RunConfig};
use crate::output::{fmt, params_hash, Output};

/// Parameter-like core errors are configuration errors; the rest are run failures.
pub fn core_err(e: Error) -> anyhow::Error {
    match e {
        Error::InvalidParameter { .. } | Error::Domain { .. } | Error::Hypothesis(_) => config_error(e.to_string()),
        other => other.into(),
    }
}

fn bases(seq: &ParamSequence, n: usize, degree: usize) -> anyhow::Result<Vec<OrthoBasis>> {
    (1..=n)
        .map(|i| {
            let p = seq
                .param(i)
                .ok_or_else(|| config_error(format!("sequence: has only {} entries, need {n}", seq.len())))?;
            OrthoBasis::new(p, degree).map_err(core_err)
        })
        .collect()
}

pub fn constants(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<Status> {
    let p = cfg.wf_params()?;
    let k = k_ab(p);
    let mut rows: Vec<[String; 3]> = Vec::new();
    let mut row = |q: &str, arg: String, v: String| rows.push([q.to_string(), arg, v]);
    row("a", String::new(), fmt(p.a()));
    row("b", String::new(), fmt(p.b()));
    row("K", String::new(), fmt(k));
    row("spectral_gap", String::new(), fmt(p.spectral_gap()));
    row("stationary_mean", String::new(), fmt(p.stationary_mean()));
    row("short_time_exponent", String::new(), fmt(p.short_time_exponent()));
    row("harnack_regime", String::new(), p.harnack_regime().to_string());
    row("rho_0_1", String::new(), fmt(PI));
    row("c0", String::new(), fmt(C0));
    row("s0", String::new(), s_min(p).map(fmt).unwrap_or_else(|_| "n/a".into()));
    for &t in &cfg.numerics.times {
        row("kernel_rate", fmt(t), fmt(kernel_rate(k, t)));
        let h = harnack_exponent_1d(cfg.numerics.p, t, PI, k).map_err(core_err)?;
        row("harnack_exponent_diameter", fmt(t), fmt(h.value));
    }
    let seq = cfg.param_sequence()?;
    row("lambda_inf", String::new(), fmt(seq.lambda_inf()));
    let gamma = |t: f64| gamma_series(&seq, t, 1e-10).map(|g| g.upper());
    for &t in &cfg.numerics.times {
        row("gamma", fmt(t), gamma(t).map(fmt).unwrap_or_else(|e| format!("n/a: {e}")));
    }
    let c_gamma = gamma_quadratic_bound(&seq);
    row(
        "c_gamma",
        String::new(),
        c_gamma.as_ref().map(|&c| fmt(c)).unwrap_or_else(|e| format!("n/a: {e}")),
    );
    // Below t = 1e-2 the series needs ~1/t terms; c_γ/t² is a certified upper bound there,
    // so the infimum stays an upper bound for β.
    let c_gamma = c_gamma.ok();
    let gamma_upper = |t: f64| match c_gamma {
        Some(c) if t < 1e-2 => c / (t * t),
        _ => gamma(t).unwrap_or(f64::INFINITY),
    };
    for &r in &cfg.numerics.r {
        let lb = log_beta_from_gamma(r, 1.0, C0, gamma_upper);
        row("log_beta", fmt(r), fmt(lb));
    }
    for [q, arg, v] in &rows {
        if arg.is_empty() {
            println!("{q} = {v}");
        } else {
            println!("{q}({arg}) = {v}");
        }
    }
    let header = ["quantity", "arg", "value"].map(String::from);
    out.csv("constants.csv", "constants/1", &header, rows)?;
    Ok(Status::Pass)
}

pub fn kernel(cfg: &RunConfig, product: bool, out: &mut Output) -> anyhow::Result<Status> {
    let num = &cfg.numerics;
    let xs = lin_grid(0.0, 1.0, num.grid);
    let mut rows = Vec::new();
    if product {
        let seq = cfg.param_sequence()?;
        let n = cfg.sequence.n.max(1);
        let bs = bases(&seq, n, num.n_basis)?;
        for &t in &num.times {
            for &x in &xs {
                for &y in &xs {
                    let xp = CubePoint::new(vec![x; n]).map_err(core_err)?;
                    let yp = CubePoint::new(vec![y; n]).map_err(core_err)?;
                    let k = product_kernel(t, &xp, &yp, &seq, &bs).map_err(core_err)?;
                    let err = (k.log_upper.exp() - k.value).max(k.value - k.log_lower.exp());
                    rows.push([fmt(t), fmt(x), fmt(y), fmt(k.value), fmt(err)]);
                }
            }
        }
    } else {
        let basis = OrthoBasis::new(cfg.wf_params()?, num.n_basis).map_err(core_err)?;
        for &t in &num.times {
            for &x in &xs {
                for &y in &xs {
                    let k = basis.heat_kernel_tol(t, x, y, num.kernel_tol).map_err(core_err)?;
                    rows.push([fmt(t), fmt(x), fmt(y), fmt(k.value), fmt(k.truncation_error)]);
                }
            }
        }
    }
    let header = ["t", "x", "y", "value", "trunc_err"].map(String::from);
    let path = out.csv("kernel.csv", "kernel/1", &header, rows)?;
    println!("wrote {}", path.display());
    Ok(Status::Pass)
}

pub fn simulate(cfg: &RunConfig, gem: bool, out: &mut Output) -> anyhow::Result<Status> {
    let num = &cfg.numerics;
    if gem {
        let seq = cfg.param_sequence()?;
        let n = cfg.sequence.n.max(1);
        let share = 1.0 / (n + 1) as f64;
        let s0 = SimplexPoint::new(vec![share; n], share).map_err(core_err)?;
        let path = simulate_gem_path(&s0, &seq, num.horizon, num.dt, n, cfg.seed, num.scheme, num.stride)
            .map_err(core_err)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("mass_{i}")));
        header.push("remainder".into());
        let rows = path.times.iter().zip(&path.points).map(|(t, s)| {
            let mut r = vec![fmt(*t)];
            r.extend(s.masses().iter().map(|m| fmt(*m)));
            r.push(fmt(s.remainder()));
            r
        });
        let p = out.csv("gem_path.csv", "gem-path/1", &header, rows)?;
        println!("wrote {}", p.display());
        return Ok(Status::Pass);
    }
    let p = cfg.wf_params()?;
    let paths = (0..num.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path_stream(num.x0, num.horizon, num.dt, p, cfg.seed, i, num.scheme))
        .collect::<wfgem::Result<Vec<_>>>()
        .map_err(core_err)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..paths.len()).map(|i| format!("x_{i}")));
    let steps = paths[0].times.len();
    let rows = (0..steps).map(|k| {
        let mut r = vec![fmt(paths[0].times[k])];
        r.extend(paths.iter().map(|s| fmt(s.states[k])));
        r
    });
    let file = out.csv("paths.csv", "path/1", &header, rows)?;
    let finals: Vec<f64> = paths.iter().map(|s| *s.states.last().expect("nonempty path")).collect();
    let est = EstimateCI::from_samples(&finals, cfg.seed);
    let record = json!({
        "f": "x",
        "t": num.horizon,
        "mean": est.mean,
        "se": est.std_error,
        "n": est.n,
        "seed": est.seed,
        "dt": paths[0].dt,
        "scheme": num.scheme,
        "params": p,
        "clamp_count": paths.iter().map(|s| s.clamp_count).sum::<usize>(),
    });
    out.json("mc.json", "mc-record/1", &record)?;
    println!("wrote {}", file.display());
    println!("E x(T) = {:.6} ± {:.6} over {} paths", est.mean, est.std_error, est.n);
    Ok(Status::Pass)
}

pub fn couple(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<Status> {
    let num = &cfg.numerics;
    let p = cfg.wf_params()?;
    let path = simulate_coupling(num.x0, num.y0, num.horizon, num.dt, p, cfg.seed, num.scheme).map_err(core_err)?;
    let header = ["t", "x", "y"].map(String::from);
    let rows = (0..path.times.len()).map(|k| [fmt(path.times[k]), fmt(path.x[k]), fmt(path.y[k])]);
    let file = out.csv("coupling_path.csv", "coupling-path/1", &header, rows)?;

    let (control, sums) =
        coupling_summaries(num.x0, num.y0, num.horizon, num.dt, p, num.n_paths, cfg.seed, num.scheme)
            .map_err(core_err)?;
    let coupled = sums.iter().filter(|s| s.coupled()).count() as f64 / sums.len() as f64;
    let points: usize = sums.iter().map(|s| s.points).sum();
    let violations: usize = sums.iter().map(|s| s.envelope_violations).sum();
    let q = num.p / (num.p - 1.0);
    let bound = girsanov_bound(num.p, k_ab(p), control.rho0, num.horizon);
    let moment = girsanov_moment(&sums, q, cfg.seed).ok();
    let summary = json!({
        "params": p,
        "x0": num.x0,
        "y0": num.y0,
        "horizon": num.horizon,
        "dt": num.dt,
        "scheme": num.scheme,
        "seed": cfg.seed,
        "n_paths": sums.len(),
        "control": control,
        "coupled_fraction": coupled,
        "violation_fraction": violations as f64 / points.max(1) as f64,
        "order_violations": sums.iter().map(|s| s.order_violations).sum::<usize>(),
        "q": q,
        "girsanov_bound": bound,
        "girsanov_moment": moment,
        "stored_path": {"tau": path.tau, "girsanov_log": path.girsanov_log, "swapped": path.swapped},
    });
    out.json("coupling_summary.json", "coupling-summary/1", &summary)?;
    println!("wrote {}", file.display());
    println!("coupled fraction {coupled:.4}; E R^{q} bound {bound:.4}");
    if let Some(m) = moment {
        println!("E R^{q} = {:.4} ± {:.4}", m.estimate.mean, m.estimate.std_error);
    }
    Ok(Status::Pass)
}

pub fn gem_sample(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<Status> {
    let seq = cfg.param_sequence()?;
    let n = cfg.sequence.n.max(1);
    let draws = sample_gem_many(&seq, n, cfg.numerics.count, cfg.seed).map_err(core_err)?;
    let mut header = vec!["i".to_string()];
    header.extend((1..=n).map(|i| format!("mass_{i}")));
    header.push("remainder".into());
    let rows = draws.iter().enumerate().map(|(i, d)| {
        let mut r = vec![i.to_string()];
        r.extend(d.point.masses().iter().map(|m| fmt(*m)));
        r.push(fmt(d.point.remainder()));
        r
    });
    let file = out.csv("gem_samples.csv", "gem-samples/1", &header, rows)?;
    let mean_rem = draws.iter().map(|d| d.point.remainder()).sum::<f64>() / draws.len() as f64;
    println!("wrote {}", file.display());
    println!(
        "mean remainder {mean_rem:.6} (expected {:.6}) over {} draws",
        draws[0].expected_remainder,
        draws.len()
    );
    Ok(Status::Pass)
}

/// Normalises a check name: `harnack1d` and dashed spellings map to report names.
fn check_names(name: &str) -> anyhow::Result<Vec<&'static str>> {
    let all: Vec<&'static str> = suite_checks().into_iter().map(|(n, _)| n).collect();
    if name == "all" {
        return Ok(all);
    }
    let key = name.replace('-', "_");
    let key = match key.as_str() {
        "harnack1d" => "harnack_1d".to_string(),
        _ => key,
    };
    all.iter()
        .find(|n| **n == key)
        .map(|n| vec![*n])
        .ok_or_else(|| config_error(format!("unknown check `{name}`; available: all, {}", all.join(", "))))
}

pub struct VerifyOverrides {
    pub harnack_params: bool,
    pub p: Option<f64>,
    pub t: Option<Vec<f64>>,
}

pub fn verify(cfg: &RunConfig, name: &str, ov: &VerifyOverrides, out: &mut Output) -> anyhow::Result<Status> {
    let names = check_names(name)?;
    let mut suite = cfg.suite.clone();
    if ov.harnack_params {
        suite.harnack.params = vec![cfg.wf_params()?];
    }
    if let Some(p) = ov.p {
        suite.harnack.p = vec![p];
    }
    if let Some(t) = &ov.t {
        suite.harnack.t = t.clone();
    }
    let checks = suite_checks();
    let mut reports: Vec<CheckReport> = Vec::new();
    for n in names {
        let (_, check) = checks.iter().find(|(k, _)| *k == n).expect("name resolved above");
        let start = Instant::now();
        let report = check(&suite);
        out.runtime(n, start.elapsed().as_secs_f64());
        println!("{:<13} {:<26} margin {:.3e}", report.status.to_string().to_uppercase(), report.name, report.margin);
        for f in report.failures.iter().take(3) {
            println!("    {f}");
        }
        reports.push(report);
    }
    out.json("reports.json", "check-reports/1", &reports)?;
    let header = ["check", "params_hash", "margin", "status"].map(String::from);
    let rows = reports
        .iter()
        .map(|r| [r.name.clone(), params_hash(&r.params), fmt(r.margin), r.status.to_string()]);
    out.csv("summary.csv", "report-summary/1", &header, rows)?;
    Ok(reports.iter().fold(Status::Pass, |s, r| s.worst(r.status)))
}
