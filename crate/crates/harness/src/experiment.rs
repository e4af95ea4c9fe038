use crate::config::{ExperimentConfig, ExperimentKind, GridSpec, InitShape, SignalInit};
use crate::error::{HarnessError, Result};
use crate::init::{initial_density, initial_signal};
use kssim_core::analysis::{
    boundedness_check, check_gradv_bound, epsilon_continuation, fit_power_law, gap_series, mass_drift, weak_residual,
    BoundFit, DiagnosticsSpec, EpsilonContinuation, GradvBound, TestFunction, WeakResidual,
};
use kssim_core::model::classify_regime;
use kssim_core::solver::run;
use kssim_core::{KsError, ModelParams, RegimeTag, RunStatus, SnapshotPolicy, SolverConfig, Trajectory};
use rayon::prelude::*;
use std::time::Instant;

/// Everything needed to reproduce one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunJob {
    pub index: usize,
    pub label: String,
    pub grid: GridSpec,
    pub params: ModelParams<f64>,
    pub solver: SolverConfig<f64>,
    pub shape: InitShape,
    pub mass: f64,
    pub signal: SignalInit,
}

/// Per-run `‖∇v‖_{L^q}` statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct GradvStat {
    pub q: f64,
    /// Supremum over sampled rows with `t ≥ t_floor`.
    pub sup_after_floor: f64,
    pub final_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub regime: RegimeTag,
    pub regime_threshold: Option<f64>,
    pub u_bar: f64,
    pub mass_drift: f64,
    pub gap_initial: f64,
    /// `sup_{t ≥ t1} ‖u - ū‖_∞`; absent when the run stopped before `t1`.
    pub gap_sup: Option<f64>,
    pub gap_final: f64,
    pub boundedness: &'static str,
    pub gradv: Vec<GradvStat>,
    pub status: RunStatus,
    pub steps: usize,
    pub t_final: f64,
    /// Not persisted: it would break byte-identical reruns.
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory<f64>,
    pub summary: RunSummary,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub job: RunJob,
    pub outcome: std::result::Result<RunOutput, KsError>,
}

impl RunRecord {
    pub fn output(&self) -> Option<&RunOutput> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtlasCell {
    pub p: f64,
    pub theta: f64,
    pub predicted: RegimeTag,
    pub threshold: Option<f64>,
    /// `Bounded`, `Growing` or `BlowUpSuspected`; descriptive only.
    pub empirical: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementLevel {
    pub level: usize,
    pub cells: Vec<usize>,
    pub dt: f64,
    pub residual: std::result::Result<WeakResidual<f64>, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationRow {
    pub amplitude: f64,
    pub gap_initial: f64,
    pub gap_sup: Option<f64>,
    /// The gap after `t1` stays below the initial gap.
    pub contained: Option<bool>,
}

#[derive(Clone, Debug)]
pub enum KindAnalysis {
    None,
    MassSweep {
        fit: std::result::Result<BoundFit<f64>, String>,
        gradv: Vec<(f64, std::result::Result<GradvBound<f64>, String>)>,
    },
    Atlas(Vec<AtlasCell>),
    Epsilon(std::result::Result<EpsilonContinuation<f64>, String>),
    Refinement(Vec<RefinementLevel>),
    Variation(Vec<VariationRow>),
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub analysis: KindAnalysis,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &KsError)> {
        self.runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().err().map(|e| (r.job.index, e)))
    }

    pub fn first_failure(&self) -> Option<HarnessError> {
        self.failures().next().map(|(run, e)| HarnessError::Numerical {
            run,
            source: e.clone(),
        })
    }
}

fn model_with(cfg: &ExperimentConfig, p: f64, theta: f64, epsilon: f64) -> Result<ModelParams<f64>> {
    ModelParams::new(cfg.model.chi, p, theta, epsilon).map_err(HarnessError::Analysis)
}

/// Expands a configuration into its runs, in persistence order.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<RunJob>> {
    let base_params = || model_with(cfg, cfg.model.p, cfg.model.theta, cfg.model.epsilon);
    let job = |index, label: String, params, mass| RunJob {
        index,
        label,
        grid: cfg.grid.clone(),
        params,
        solver: cfg.solver.config(),
        shape: cfg.init.shape,
        mass,
        signal: cfg.init.signal,
    };
    let mass = cfg.init.mass.unwrap_or(f64::NAN);
    let sweep = &cfg.sweep;
    let jobs = match cfg.kind {
        ExperimentKind::Single => vec![job(0, "single".into(), base_params()?, mass)],
        ExperimentKind::MassSweep => sweep
            .masses
            .iter()
            .enumerate()
            .map(|(i, &m)| Ok(job(i, format!("m={m:?}"), base_params()?, m)))
            .collect::<Result<_>>()?,
        ExperimentKind::RegimeAtlas => {
            let mut jobs = Vec::new();
            for &p in &sweep.p_list {
                for &theta in &sweep.theta_list {
                    let params = model_with(cfg, p, theta, cfg.model.epsilon)?;
                    jobs.push(job(jobs.len(), format!("p={p:?},theta={theta:?}"), params, mass));
                }
            }
            jobs
        }
        ExperimentKind::EpsilonStudy => sweep
            .epsilons
            .iter()
            .enumerate()
            .map(|(i, &eps)| {
                let params = model_with(cfg, cfg.model.p, cfg.model.theta, eps)?;
                Ok(job(i, format!("epsilon={eps:?}"), params, mass))
            })
            .collect::<Result<_>>()?,
        ExperimentKind::RefinementStudy => (0..sweep.levels)
            .map(|level| {
                let mut j = job(level, format!("level={level}"), base_params()?, mass);
                j.grid = cfg.grid.refined(level);
                j.solver.dt_max = cfg.solver.dt_max / 4f64.powi(level as i32);
                j.solver.snapshots = SnapshotPolicy::EveryStep;
                Ok(j)
            })
            .collect::<Result<_>>()?,
        ExperimentKind::VariationStability => sweep
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &amplitude)| {
                let mut j = job(i, format!("amplitude={amplitude:?}"), base_params()?, mass);
                j.shape = InitShape::CosineBump { amplitude };
                Ok(j)
            })
            .collect::<Result<_>>()?,
    };
    Ok(jobs)
}

fn diagnostics(cfg: &ExperimentConfig) -> DiagnosticsSpec<f64> {
    DiagnosticsSpec {
        q_list: cfg.analysis.q_list.clone(),
        r_list: cfg.analysis.r_list.clone(),
    }
}

/// Runs one job and summarizes it.
pub fn execute_job(cfg: &ExperimentConfig, job: &RunJob) -> std::result::Result<RunOutput, KsError> {
    let started = Instant::now();
    let grid = job.grid.build()?;
    let u0 = initial_density(&grid, &job.shape, job.mass)?;
    let v0 = initial_signal(&u0, job.params.theta, job.signal)?;
    let traj = run(&u0, &v0, &job.params, &job.solver, &diagnostics(cfg), cfg.analysis.t1)?;
    let regime = classify_regime(job.params.p, job.params.theta, grid.dim())?;
    let t_floor = cfg.analysis.t_floor;
    let gradv = cfg
        .analysis
        .q_list
        .iter()
        .map(|&q| {
            let column = traj.rows.iter().filter_map(|r| r.gradv_norm(q).map(|g| (r.t, g)));
            let mut sup = 0.0f64;
            let mut last = 0.0;
            for (t, g) in column {
                if t >= t_floor {
                    sup = sup.max(g);
                }
                last = g;
            }
            GradvStat {
                q,
                sup_after_floor: sup,
                final_value: last,
            }
        })
        .collect();
    let rows = &traj.rows;
    let summary = RunSummary {
        regime: regime.tag,
        regime_threshold: regime.threshold,
        u_bar: traj.u_bar,
        mass_drift: mass_drift(&traj)?,
        gap_initial: rows[0].linf_gap,
        gap_sup: gap_series(&traj, cfg.analysis.t1).ok().map(|g| g.supremum),
        gap_final: rows[rows.len() - 1].linf_gap,
        boundedness: match traj.status {
            RunStatus::BlowUpSuspected => "BlowUpSuspected",
            RunStatus::Completed => boundedness_check(&traj).as_str(),
        },
        gradv,
        status: traj.status,
        steps: traj.steps,
        t_final: traj.final_state.t,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    log::info!(
        "run {} ({}) {} in {:.2}s, {} steps",
        job.index,
        job.label,
        traj.status.as_str(),
        summary.wall_clock_s,
        traj.steps
    );
    Ok(RunOutput {
        trajectory: traj,
        summary,
    })
}

/// Test function used by refinement studies: `η(t)(1 + ½ Π cos(π x_a/L_a))`,
/// flat on `[0, T/4]` and gone by `3T/4`.
pub fn refinement_test_function(t_end: f64) -> kssim_core::Result<TestFunction<f64>> {
    TestFunction::new(vec![(1.0, [0, 0]), (0.5, [1, 1])], 0.25 * t_end, 0.75 * t_end)
}

/// Runs every job of the experiment concurrently, then the kind-specific analysis.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let jobs = plan(cfg)?;
    let runs: Vec<RunRecord> = jobs
        .into_par_iter()
        .map(|job| {
            let outcome = execute_job(cfg, &job);
            if let Err(e) = &outcome {
                log::error!("run {} ({}) failed: {e}", job.index, job.label);
            }
            RunRecord { job, outcome }
        })
        .collect();
    let analysis = analyze(cfg, &runs)?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        runs,
        analysis,
    })
}

fn analyze(cfg: &ExperimentConfig, runs: &[RunRecord]) -> Result<KindAnalysis> {
    let ok: Vec<&RunOutput> = runs.iter().filter_map(|r| r.output()).collect();
    let all_ok = ok.len() == runs.len();
    let incomplete = || "one or more runs failed".to_string();
    Ok(match cfg.kind {
        ExperimentKind::Single => KindAnalysis::None,
        ExperimentKind::MassSweep => {
            let fit = if all_ok {
                let points: Option<Vec<(f64, f64)>> = runs
                    .iter()
                    .zip(&ok)
                    .map(|(r, o)| o.summary.gap_sup.map(|g| (r.job.mass, g)))
                    .collect();
                match points {
                    None => Err("a run stopped before t1".to_string()),
                    Some(points) => fit_power_law(&points)
                        .and_then(|f| f.with_prediction(cfg.model.p, cfg.model.theta))
                        .map_err(|e| e.to_string()),
                }
            } else {
                Err(incomplete())
            };
            let trajs: Vec<Trajectory<f64>> = ok.iter().map(|o| o.trajectory.clone()).collect();
            let gradv = cfg
                .analysis
                .q_list
                .iter()
                .map(|&q| {
                    let r = if all_ok {
                        check_gradv_bound(&trajs, q, cfg.model.theta, cfg.analysis.t_floor).map_err(|e| e.to_string())
                    } else {
                        Err(incomplete())
                    };
                    (q, r)
                })
                .collect();
            KindAnalysis::MassSweep { fit, gradv }
        }
        ExperimentKind::RegimeAtlas => KindAnalysis::Atlas(
            runs.iter()
                .map(|r| {
                    let regime = classify_regime(r.job.params.p, r.job.params.theta, cfg.grid.dim)?;
                    Ok(AtlasCell {
                        p: r.job.params.p,
                        theta: r.job.params.theta,
                        predicted: regime.tag,
                        threshold: regime.threshold,
                        empirical: r.output().map(|o| o.summary.boundedness),
                    })
                })
                .collect::<kssim_core::Result<_>>()?,
        ),
        ExperimentKind::EpsilonStudy => KindAnalysis::Epsilon(if all_ok {
            let finals: Vec<(f64, kssim_core::State<f64>)> = runs
                .iter()
                .zip(&ok)
                .map(|(r, o)| (r.job.params.epsilon, o.trajectory.final_state.clone()))
                .collect();
            epsilon_continuation(&finals).map_err(|e| e.to_string())
        } else {
            Err(incomplete())
        }),
        ExperimentKind::RefinementStudy => {
            let phi = refinement_test_function(cfg.solver.t_end)?;
            KindAnalysis::Refinement(
                runs.iter()
                    .map(|r| RefinementLevel {
                        level: r.job.index,
                        cells: r.job.grid.cells.clone(),
                        dt: r.job.solver.dt_max,
                        residual: match &r.outcome {
                            Ok(o) => weak_residual(&o.trajectory, &phi).map_err(|e| e.to_string()),
                            Err(e) => Err(e.to_string()),
                        },
                    })
                    .collect(),
            )
        }
        ExperimentKind::VariationStability => KindAnalysis::Variation(
            runs.iter()
                .map(|r| {
                    let amplitude = match r.job.shape {
                        InitShape::CosineBump { amplitude } => amplitude,
                        _ => f64::NAN,
                    };
                    match r.output() {
                        Some(o) => VariationRow {
                            amplitude,
                            gap_initial: o.summary.gap_initial,
                            gap_sup: o.summary.gap_sup,
                            contained: o.summary.gap_sup.map(|g| g <= o.summary.gap_initial),
                        },
                        None => VariationRow {
                            amplitude,
                            gap_initial: f64::NAN,
                            gap_sup: None,
                            contained: None,
                        },
                    }
                })
                .collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(extra: &str) -> ExperimentConfig {
        parse_config(&format!(
            "grid.dim = 1\ngrid.cells = [32]\nmodel.p = 2.0\nmodel.theta = 0.5\nsolver.t_end = 1.5\nsolver.dt_max = 1e-3\nanalysis.t1 = 0.5\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn equilibrium_single_run() {
        let c = cfg("init.type = \"constant\"\ninit.mass = 0.3\n");
        let report = execute(&c).unwrap();
        let s = &report.runs[0].output().unwrap().summary;
        assert_eq!(s.status, RunStatus::Completed);
        assert!(s.gap_sup.unwrap() <= 1e-10);
        assert_eq!(s.boundedness, "Bounded");
        assert!(s.mass_drift <= 1e-12);
    }

    #[test]
    fn refinement_plan_scales_mesh_and_step() {
        let c = cfg("experiment.kind = \"refinement-study\"\ninit.mass = 1.0\n");
        let jobs = plan(&c).unwrap();
        assert_eq!(jobs.len(), 3);
        assert_eq!(jobs[2].grid.cells, vec![128]);
        assert!((jobs[2].solver.dt_max - 1e-3 / 16.0).abs() < 1e-18);
        assert_eq!(jobs[1].solver.snapshots, SnapshotPolicy::EveryStep);
    }

    #[test]
    fn atlas_orders_p_outer() {
        let c = cfg(
            "experiment.kind = \"regime-atlas\"\nexperiment.p_list = [2.0, 3.0]\nexperiment.theta_list = [0.5, 1.0]\ninit.mass = 0.1\n",
        );
        let jobs = plan(&c).unwrap();
        let pairs: Vec<(f64, f64)> = jobs.iter().map(|j| (j.params.p, j.params.theta)).collect();
        assert_eq!(pairs, vec![(2.0, 0.5), (2.0, 1.0), (3.0, 0.5), (3.0, 1.0)]);
    }

    #[test]
    fn chi_zero_sweep_is_linear_in_mass() {
        let c = cfg("experiment.kind = \"mass-sweep\"\nexperiment.masses = [0.01, 0.1, 1.0]\nmodel.chi = 0.0\n");
        let report = execute(&c).unwrap();
        let KindAnalysis::MassSweep { fit, gradv } = &report.analysis else {
            panic!("wrong analysis kind");
        };
        // With χ = 0 the gap is exactly proportional to the mass.
        let fit = fit.as_ref().unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-9, "{}", fit.slope);
        assert_eq!(fit.predicted_exponent, Some(1.5));
        assert!(gradv[0].1.is_ok());
    }
}
