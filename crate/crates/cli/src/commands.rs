//! The six commands. Each writes `<command>.csv` (validate: `validate.txt`)
//! and `<command>.json` into the output directory.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use bubble_forge::constants::{derive_table, ConstantsTable, Normalization};
use bubble_forge::diagnostics::{fit_lk_rows, lk_norm_at, LkNormRow};
use bubble_forge::fit::FitReport;
use bubble_forge::geometry::Configuration;
use bubble_forge::lattice::{fit_error_order, sum_report, SumKind};
use bubble_forge::quadrature::energy_total;
use bubble_forge::reduced::{f1_eval, solve_critical};
use bubble_forge::validation::{
    remainder_budget, render_report, run_suite, ValidationContext, CRITERIA,
};

use crate::config::RunConfig;
use crate::output::{flag, num, write_csv, write_json, Table};
use crate::CliError;

pub const SUMS_K: [usize; 6] = [32, 64, 128, 256, 512, 1024];
pub const ENERGY_K: [usize; 1] = [12];
pub const SOLVE_K: [usize; 5] = [16, 32, 64, 128, 256];
pub const ERRNORM_K: [usize; 5] = [8, 16, 32, 64, 128];

/// Exit status when every row failed.
pub const EXIT_NO_ROWS: i32 = 3;
/// Exit status when validation criteria failed.
pub const EXIT_CRITERIA: i32 = 4;

fn ks(cfg: &RunConfig, default: &[usize]) -> Vec<usize> {
    cfg.k_list.clone().unwrap_or_else(|| default.to_vec())
}

fn table(cfg: &RunConfig, norm: Normalization) -> Result<ConstantsTable, CliError> {
    derive_table(&cfg.params, norm, cfg.const_tol).map_err(CliError::Compute)
}

fn status<T>(r: &Result<T, bubble_forge::Error>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}"),
    }
}

fn row_exit(ok_rows: usize) -> i32 {
    if ok_rows > 0 {
        0
    } else {
        EXIT_NO_ROWS
    }
}

fn fit_json(f: &FitReport) -> Value {
    json!({
        "slope": f.slope,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "expected": f.expected,
        "log_corrected_slope": f.log_corrected.map(|l| l.slope),
        "monotone": f.monotone,
        "flags": f.flags,
    })
}

fn table_json(t: &ConstantsTable) -> Value {
    let mut m = Map::new();
    for (name, v) in t.entries() {
        m.insert(name.into(), json!({ "value": v, "err": t.err.get(name).copied().unwrap_or(0.0) }));
    }
    Value::Object(m)
}

pub fn constants(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let other = match cfg.normalization {
        Normalization::Paper => Normalization::Bubble,
        Normalization::Bubble => Normalization::Paper,
    };
    let main = table(cfg, cfg.normalization)?;
    let alt = table(cfg, other)?;
    let mut csv = Table::new(&["name", "value", "err", "normalization"]);
    for t in [&main, &alt] {
        for (name, v) in t.entries() {
            let e = t.err.get(name).copied().unwrap_or(0.0);
            csv.push(vec![name.into(), num(v), num(e), t.normalization.to_string()]);
        }
    }
    write_csv(&cfg.out_dir.join("constants.csv"), &csv, None)?;
    let j = json!({
        "command": "constants",
        "N": cfg.params.n,
        "m": cfg.params.m,
        "normalization": main.normalization.to_string(),
        "constants": table_json(&main),
        "alternate": { "normalization": alt.normalization.to_string(), "constants": table_json(&alt) },
    });
    write_json(&cfg.out_dir.join("constants.json"), &j)?;
    for (name, v) in main.entries() {
        writeln!(out, "{name} = {}", num(v))?;
    }
    Ok(0)
}

pub fn sums(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let t = table(cfg, cfg.normalization)?;
    let k_list = ks(cfg, &SUMS_K);
    let n = cfg.params.n;
    let jobs: Vec<(SumKind, f64, usize)> = [(SumKind::Ring, cfg.sums_ring_h), (SumKind::Cross, cfg.sums_h)]
        .iter()
        .flat_map(|&(kind, h)| k_list.iter().map(move |&k| (kind, h, k)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(kind, h, k)| sum_report(kind, 1.0, h, k, n, &t))
        .collect();
    let mut csv = Table::new(&["kind", "k", "r", "h", "exact", "asymptotic", "ratio", "status"]);
    let mut rows = Vec::new();
    let mut ok = 0;
    for (&(kind, h, k), r) in jobs.iter().zip(&results) {
        let st = status(r);
        match r {
            Ok(s) => {
                ok += 1;
                csv.push(vec![kind.to_string(), k.to_string(), num(1.0), num(h), num(s.exact), num(s.asymptotic), num(s.ratio), st.clone()]);
                rows.push(json!({"kind": kind.to_string(), "k": k, "r": 1.0, "h": h, "exact": s.exact, "asymptotic": s.asymptotic, "ratio": s.ratio, "status": st}));
            }
            Err(_) => {
                csv.push(vec![kind.to_string(), k.to_string(), num(1.0), num(h), String::new(), String::new(), String::new(), st.clone()]);
                rows.push(json!({"kind": kind.to_string(), "k": k, "r": 1.0, "h": h, "status": st}));
            }
        }
    }
    let mut foot = Table::new(&["fit_kind", "slope", "intercept", "r_squared", "expected", "log_corrected_slope", "monotone", "status"]);
    let mut fits = Vec::new();
    for (kind, h) in [(SumKind::Ring, cfg.sums_ring_h), (SumKind::Cross, cfg.sums_h)] {
        match fit_error_order(kind, n, h, &k_list, &t) {
            Ok((f, _)) => {
                let lc = f.log_corrected.map(|l| num(l.slope)).unwrap_or_default();
                foot.push(vec![
                    kind.to_string(),
                    num(f.slope),
                    num(f.intercept),
                    num(f.r_squared),
                    f.expected.map(num).unwrap_or_default(),
                    lc,
                    flag(f.monotone),
                    "ok".into(),
                ]);
                writeln!(out, "{kind}: fitted error slope {:.4} (expected {:?})", f.slope, f.expected)?;
                let mut j = fit_json(&f);
                j["kind"] = json!(kind.to_string());
                fits.push(j);
            }
            Err(e) => {
                let mut row = vec![kind.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!("error: {e}"));
                foot.push(row);
                fits.push(json!({"kind": kind.to_string(), "status": format!("error: {e}")}));
            }
        }
    }
    write_csv(&cfg.out_dir.join("sums.csv"), &csv, Some(&foot))?;
    write_json(&cfg.out_dir.join("sums.json"), &json!({"command": "sums", "N": n, "rows": rows, "fits": fits}))?;
    Ok(row_exit(ok))
}

pub fn energy(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    // energies are integrals of true bubbles, so F1 uses the bubble normalisation
    let t = table(cfg, Normalization::Bubble)?;
    let header = [
        "k", "r", "h", "lambda", "energy", "stderr", "gradient_part", "potential_part", "f1", "diff",
        "remainder_budget", "status",
    ];
    let mut csv = Table::new(&header);
    let mut rows = Vec::new();
    let mut ok = 0;
    for k in ks(cfg, &ENERGY_K) {
        let p = cfg.params.at_k(k);
        let res = (|| {
            let c = Configuration::new(p.rhat(), t.hhat(k), t.lambda0, p)?;
            let e = energy_total(&c, &cfg.quad)?;
            let f = f1_eval(&c, &t)?;
            let b = remainder_budget(&c, &t)?;
            Ok::<_, bubble_forge::Error>((c, e, f, b))
        })();
        let st = status(&res);
        match res {
            Ok((c, e, f, b)) => {
                ok += 1;
                let d = e.total - f.total;
                csv.push(vec![
                    k.to_string(), num(c.r), num(c.h), num(c.lambda), num(e.total), num(e.stderr),
                    num(e.gradient_part), num(e.potential_part), num(f.total), num(d), num(b), st.clone(),
                ]);
                rows.push(json!({
                    "k": k, "r": c.r, "h": c.h, "lambda": c.lambda, "energy": e.total, "stderr": e.stderr,
                    "gradient_part": e.gradient_part, "potential_part": e.potential_part, "f1": f.total,
                    "diff": d, "remainder_budget": b, "warning": e.warning, "status": st,
                }));
                writeln!(out, "k={k}: energy {} F1 {} diff {:.3e} stderr {:.3e}", num(e.total), num(f.total), d, e.stderr)?;
            }
            Err(_) => {
                let mut row = vec![k.to_string()];
                row.extend(std::iter::repeat_n(String::new(), header.len() - 2));
                row.push(st.clone());
                csv.push(row);
                rows.push(json!({"k": k, "status": st}));
            }
        }
    }
    write_csv(&cfg.out_dir.join("energy.csv"), &csv, None)?;
    write_json(&cfg.out_dir.join("energy.json"), &json!({"command": "energy", "rows": rows}))?;
    Ok(row_exit(ok))
}

pub fn solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let t = table(cfg, cfg.normalization)?;
    let k_list = ks(cfg, &SOLVE_K);
    let results: Vec<_> = k_list
        .par_iter()
        .map(|&k| solve_critical(k, &cfg.params, &t, &cfg.solver))
        .collect();
    let header = [
        "k", "r_star", "h_star", "lambda_star", "residual_norm", "iterations", "converged", "in_box",
        "fell_back", "h_scaled", "bprime", "lambda0", "status",
    ];
    let mut csv = Table::new(&header);
    let mut rows = Vec::new();
    let mut ok = 0;
    let n = cfg.params.n;
    for (&k, r) in k_list.iter().zip(&results) {
        let st = status(r);
        match r {
            Ok(c) => {
                ok += 1;
                csv.push(vec![
                    k.to_string(), num(c.r_star), num(c.h_star), num(c.lambda_star), num(c.residual_norm),
                    c.iterations.to_string(), flag(c.converged), flag(c.in_box), flag(c.fell_back),
                    num(c.h_scaled(n)), num(t.bprime), num(t.lambda0), st.clone(),
                ]);
                rows.push(json!({
                    "k": k, "r_star": c.r_star, "h_star": c.h_star, "lambda_star": c.lambda_star,
                    "residual_norm": c.residual_norm, "iterations": c.iterations, "converged": c.converged,
                    "in_box": c.in_box, "fell_back": c.fell_back, "h_scaled": c.h_scaled(n),
                    "bprime": t.bprime, "lambda0": t.lambda0, "status": st,
                }));
                writeln!(out, "k={k}: h*k^((N-3)/(N-1)) {:.6} Lambda* {:.6} in_box {}", c.h_scaled(n), c.lambda_star, c.in_box)?;
            }
            Err(_) => {
                let mut row = vec![k.to_string()];
                row.extend(std::iter::repeat_n(String::new(), header.len() - 2));
                row.push(st.clone());
                csv.push(row);
                rows.push(json!({"k": k, "status": st}));
            }
        }
    }
    write_csv(&cfg.out_dir.join("solve.csv"), &csv, None)?;
    write_json(&cfg.out_dir.join("solve.json"), &json!({"command": "solve", "rows": rows}))?;
    Ok(row_exit(ok))
}

pub fn errnorm(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let t = table(cfg, cfg.normalization)?;
    let k_list = ks(cfg, &ERRNORM_K);
    let results: Vec<_> = k_list.iter().map(|&k| lk_norm_at(&cfg.params, &t, k)).collect();
    let mut csv = Table::new(&["k", "norm_starstar", "samples", "status"]);
    let mut rows = Vec::new();
    let mut good: Vec<LkNormRow> = Vec::new();
    for (&k, r) in k_list.iter().zip(&results) {
        let st = status(r);
        match r {
            Ok(row) => {
                good.push(*row);
                csv.push(vec![k.to_string(), num(row.norm), row.samples.to_string(), st.clone()]);
                rows.push(json!({"k": k, "norm_starstar": row.norm, "samples": row.samples, "status": st}));
            }
            Err(_) => {
                csv.push(vec![k.to_string(), String::new(), String::new(), st.clone()]);
                rows.push(json!({"k": k, "status": st}));
            }
        }
    }
    let mut foot = Table::new(&["slope", "expected", "relative_deviation", "r_squared", "monotone", "status"]);
    let fit = fit_lk_rows(&cfg.params, &good);
    let fit_j = match &fit {
        Ok(f) => {
            foot.push(vec![
                num(f.slope),
                f.expected.map(num).unwrap_or_default(),
                f.relative_deviation().map(num).unwrap_or_default(),
                num(f.r_squared),
                flag(f.monotone),
                "ok".into(),
            ]);
            writeln!(out, "decay slope {:.4} vs {:?}", f.slope, f.expected)?;
            fit_json(f)
        }
        Err(e) => {
            foot.push(vec![String::new(), String::new(), String::new(), String::new(), String::new(), format!("error: {e}")]);
            json!({"status": format!("error: {e}")})
        }
    };
    write_csv(&cfg.out_dir.join("errnorm.csv"), &csv, Some(&foot))?;
    write_json(&cfg.out_dir.join("errnorm.json"), &json!({"command": "errnorm", "rows": rows, "fit": fit_j}))?;
    Ok(row_exit(good.len()))
}

pub fn list(out: &mut dyn Write) -> Result<i32, CliError> {
    for (id, title) in CRITERIA {
        writeln!(out, "{id} {title}")?;
    }
    Ok(0)
}

pub fn validate(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = ValidationContext {
        params: cfg.params,
        quad: cfg.quad,
        solver: cfg.solver,
        tol: cfg.const_tol,
        fault: cfg.fault.clone(),
    };
    let ids: Vec<&str> = match &cfg.criteria {
        Some(c) => c.iter().map(String::as_str).collect(),
        None => CRITERIA.iter().map(|(i, _)| *i).collect(),
    };
    let outcomes = run_suite(&ctx, &ids).map_err(CliError::Compute)?;
    let report = render_report(&outcomes);
    std::fs::write(cfg.out_dir.join("validate.txt"), &report)?;
    let j = json!({
        "command": "validate",
        "all_passed": outcomes.iter().all(|o| o.passed),
        "criteria": outcomes.iter().map(|o| json!({"id": o.id, "title": o.title, "passed": o.passed, "detail": o.detail})).collect::<Vec<_>>(),
    });
    write_json(&cfg.out_dir.join("validate.json"), &j)?;
    out.write_all(report.as_bytes())?;
    for o in &outcomes {
        writeln!(err, "{} took {:.2} s", o.id, o.seconds)?;
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        writeln!(err, "failed: {}", failed.join(", "))?;
        Ok(EXIT_CRITERIA)
    }
}
