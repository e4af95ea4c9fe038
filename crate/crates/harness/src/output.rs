//! On-disk artifacts of an experiment.
//!
//! * `config.toml`: the resolved configuration echo.
//! * `run_NNN.csv`: one time series per successful run, columns
//!   `t,mass,linf_gap,u_linf,min_u,min_v,gradv_L{q}...,u_L{r}...`.
//! * `summary.json`: config echo, per-run summaries, kind-specific analysis
//!   and a manifest with the SHA-256 of every other file.
//!
//! Non-finite numbers (an infinite regime threshold, say) appear as `null`.

use crate::config::fmt_f64;
use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentReport, KindAnalysis, RunRecord};
use kssim_core::analysis::DiagnosticsRow;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Column label for a norm exponent: `2`, `1.5`, `inf`.
pub fn exponent_label(q: f64) -> String {
    if q.is_finite() && q.fract() == 0.0 && q.abs() < 1e15 {
        format!("{}", q as i64)
    } else {
        fmt_f64(q)
    }
}

pub fn csv_header(q_list: &[f64], r_list: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["t", "mass", "linf_gap", "u_linf", "min_u", "min_v"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(q_list.iter().map(|&q| format!("gradv_L{}", exponent_label(q))));
    h.extend(r_list.iter().map(|&r| format!("u_L{}", exponent_label(r))));
    h
}

fn csv_record(row: &DiagnosticsRow<f64>) -> Vec<String> {
    let mut rec = vec![
        fmt_f64(row.t),
        fmt_f64(row.mass),
        fmt_f64(row.linf_gap),
        fmt_f64(row.u_linf),
        fmt_f64(row.min_u),
        fmt_f64(row.min_v),
    ];
    rec.extend(row.gradv_q_norms.iter().map(|&(_, g)| fmt_f64(g)));
    rec.extend(row.u_r_norms.iter().map(|&(_, u)| fmt_f64(u)));
    rec
}

/// Renders a run's diagnostics as CSV text.
pub fn render_csv(rows: &[DiagnosticsRow<f64>], q_list: &[f64], r_list: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(q_list, r_list))?;
    for row in rows {
        w.write_record(csv_record(row))?;
    }
    w.into_inner().map_err(|e| HarnessError::io("<csv buffer>", e.into_error()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn run_json(r: &RunRecord, csv: Option<&str>) -> Value {
    let job = &r.job;
    let mut v = json!({
        "index": job.index,
        "label": job.label,
        "cells": job.grid.cells,
        "chi": num(job.params.chi),
        "p": num(job.params.p),
        "theta": num(job.params.theta),
        "epsilon": num(job.params.epsilon),
        "mass": num(job.mass),
        "dt_max": num(job.solver.dt_max),
        "csv": csv,
    });
    let obj = v.as_object_mut().expect("object literal");
    match &r.outcome {
        Ok(o) => {
            let s = &o.summary;
            obj.insert("status".into(), json!(s.status.as_str()));
            obj.insert("regime".into(), json!(s.regime.as_str()));
            obj.insert("regime_threshold".into(), opt(s.regime_threshold));
            obj.insert("u_bar".into(), num(s.u_bar));
            obj.insert("mass_drift".into(), num(s.mass_drift));
            obj.insert("gap_initial".into(), num(s.gap_initial));
            obj.insert("gap_sup".into(), opt(s.gap_sup));
            obj.insert("gap_final".into(), num(s.gap_final));
            obj.insert("boundedness".into(), json!(s.boundedness));
            obj.insert(
                "gradv".into(),
                Value::Array(
                    s.gradv
                        .iter()
                        .map(|g| {
                            json!({
                                "q": exponent_label(g.q),
                                "sup_after_floor": num(g.sup_after_floor),
                                "final": num(g.final_value),
                            })
                        })
                        .collect(),
                ),
            );
            obj.insert("steps".into(), json!(s.steps));
            obj.insert("t_final".into(), num(s.t_final));
        }
        Err(e) => {
            obj.insert("status".into(), json!("Failed"));
            obj.insert("error".into(), json!(e.to_string()));
        }
    }
    v
}

fn analysis_json(a: &KindAnalysis) -> Value {
    let err = |e: &String| json!({ "error": e });
    match a {
        KindAnalysis::None => Value::Null,
        KindAnalysis::MassSweep { fit, gradv } => json!({
            "fit": match fit {
                Ok(f) => json!({
                    "points": f.points.iter().map(|&(m, g)| json!([num(m), num(g)])).collect::<Vec<_>>(),
                    "slope": num(f.slope),
                    "intercept": num(f.intercept),
                    "predicted_exponent": opt(f.predicted_exponent),
                    "residuals": f.residuals.iter().map(|&r| num(r)).collect::<Vec<_>>(),
                }),
                Err(e) => err(e),
            },
            "gradv_bound": gradv.iter().map(|(q, r)| match r {
                Ok(b) => json!({
                    "q": exponent_label(*q),
                    "ratios": b.ratios.iter().map(|&(m, r)| json!([num(m), num(r)])).collect::<Vec<_>>(),
                    "spread": num(b.spread),
                }),
                Err(e) => json!({ "q": exponent_label(*q), "error": e }),
            }).collect::<Vec<_>>(),
        }),
        KindAnalysis::Atlas(cells) => json!({
            "cells": cells.iter().map(|c| json!({
                "p": num(c.p),
                "theta": num(c.theta),
                "predicted": c.predicted.as_str(),
                "threshold": opt(c.threshold),
                "empirical": c.empirical,
            })).collect::<Vec<_>>(),
        }),
        KindAnalysis::Epsilon(r) => match r {
            Ok(e) => json!({
                "epsilons": e.epsilons.iter().map(|&x| num(x)).collect::<Vec<_>>(),
                "differences": e.differences.iter().map(|&x| num(x)).collect::<Vec<_>>(),
                "non_increasing": e.non_increasing,
            }),
            Err(e) => err(e),
        },
        KindAnalysis::Refinement(levels) => json!({
            "levels": levels.iter().map(|l| {
                let mut v = json!({ "level": l.level, "cells": l.cells, "dt": num(l.dt) });
                let obj = v.as_object_mut().expect("object literal");
                match &l.residual {
                    Ok(r) => {
                        obj.insert("residual_u".into(), num(r.u));
                        obj.insert("residual_v".into(), num(r.v));
                    }
                    Err(e) => {
                        obj.insert("error".into(), json!(e));
                    }
                }
                v
            }).collect::<Vec<_>>(),
        }),
        KindAnalysis::Variation(rows) => json!({
            "rows": rows.iter().map(|r| json!({
                "amplitude": num(r.amplitude),
                "gap_initial": num(r.gap_initial),
                "gap_sup": opt(r.gap_sup),
                "contained": r.contained,
            })).collect::<Vec<_>>(),
        }),
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8], manifest: &mut Vec<ManifestEntry>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
    manifest.push(ManifestEntry {
        file: name.to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    });
    Ok(())
}

pub fn csv_name(index: usize) -> String {
    format!("run_{index:03}.csv")
}

/// Writes every artifact into `dir` and returns the manifest.
pub fn persist(report: &ExperimentReport, dir: &Path) -> Result<Vec<ManifestEntry>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let cfg = &report.config;
    let echo = cfg.echo();
    let mut manifest = Vec::new();
    write(dir, CONFIG_FILE, echo.as_bytes(), &mut manifest)?;

    let mut runs = Vec::with_capacity(report.runs.len());
    for r in &report.runs {
        let name = match r.output() {
            Some(o) => {
                let name = csv_name(r.job.index);
                let bytes = render_csv(&o.trajectory.rows, &cfg.analysis.q_list, &cfg.analysis.r_list)?;
                write(dir, &name, &bytes, &mut manifest)?;
                Some(name)
            }
            None => None,
        };
        runs.push(run_json(r, name.as_deref()));
    }
    let failures: Vec<Value> = report
        .failures()
        .map(|(run, e)| json!({ "run": run, "error": e.to_string() }))
        .collect();

    let summary = json!({
        "kind": cfg.kind.as_str(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": echo,
        "lambda1": num(cfg.lambda1()),
        "t1": num(cfg.analysis.t1),
        "t_floor": num(cfg.analysis.t_floor),
        "runs": runs,
        "analysis": analysis_json(&report.analysis),
        "failures": failures,
        "manifest": manifest,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    let path: PathBuf = dir.join(SUMMARY_FILE);
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}
