use crate::error::{KsError, Result};
use crate::model::{admissible_q_sup, classify_regime, RegimeTag};
use crate::scalar::Real;
use crate::solver::{RunStatus, State, Trajectory};

/// Largest relative deviation of the mass column from its initial value.
pub fn mass_drift<T: Real>(traj: &Trajectory<T>) -> Result<T> {
    let first = traj.rows.first().ok_or(KsError::EmptyTrajectory)?;
    let m0 = first.mass;
    Ok(traj
        .rows
        .iter()
        .fold(T::zero(), |acc, r| acc.max((r.mass - m0).abs() / m0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapSeries<T> {
    /// `(t, ‖u - ū‖_∞)` for sampled rows with `t ≥ t1`.
    pub points: Vec<(T, T)>,
    pub supremum: T,
}

/// Equilibrium gap restricted to `t ≥ t1`, sampled rows only.
pub fn gap_series<T: Real>(traj: &Trajectory<T>, t1: T) -> Result<GapSeries<T>> {
    let t_last = traj.t_last().ok_or(KsError::EmptyTrajectory)?;
    if !(t1 < t_last) {
        return Err(KsError::TransientOutOfRange {
            t1: t1.as_f64(),
            t_end: t_last.as_f64(),
        });
    }
    let points: Vec<(T, T)> = traj
        .rows
        .iter()
        .filter(|r| r.t >= t1)
        .map(|r| (r.t, r.linf_gap))
        .collect();
    let supremum = points.iter().fold(T::zero(), |acc, p| acc.max(p.1));
    Ok(GapSeries { points, supremum })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradvBound<T> {
    /// `(m, sup_{t ≥ t_floor} ‖∇v‖_{L^q} / m^θ)` per run.
    pub ratios: Vec<(T, T)>,
    /// `max R / min R`; 1 when every ratio vanishes.
    pub spread: T,
}

/// Checks that `‖∇v‖_{L^q}` scales like `m^θ` across runs of one shape at different masses.
///
/// Refuses `q` outside the admissible range for `(θ, n)`.
pub fn check_gradv_bound<T: Real>(runs: &[Trajectory<T>], q: T, theta: T, t_floor: T) -> Result<GradvBound<T>> {
    let first = runs
        .first()
        .ok_or_else(|| KsError::MismatchedRuns("no runs given".into()))?;
    let n = first.grid.dim();
    if !admissible_q_sup(theta, n)?.admits(q) {
        return Err(KsError::InadmissibleExponent {
            q: q.as_f64(),
            theta: theta.as_f64(),
            n,
        });
    }
    let mut ratios = Vec::with_capacity(runs.len());
    for traj in runs {
        if traj.grid.dim() != n {
            return Err(KsError::MismatchedRuns("runs differ in dimension".into()));
        }
        let m = traj.rows.first().ok_or(KsError::EmptyTrajectory)?.mass;
        let mut sup = T::zero();
        for row in traj.rows.iter().filter(|r| r.t >= t_floor) {
            let g = row
                .gradv_norm(q)
                .ok_or_else(|| KsError::MismatchedRuns(format!("q = {} not recorded", q.as_f64())))?;
            sup = sup.max(g);
        }
        ratios.push((m, sup / m.powf(theta)));
    }
    let max = ratios.iter().fold(T::zero(), |acc, r| acc.max(r.1));
    let min = ratios.iter().fold(T::infinity(), |acc, r| acc.min(r.1));
    let spread = if max == T::zero() {
        T::one()
    } else if min == T::zero() {
        T::infinity()
    } else {
        max / min
    };
    Ok(GradvBound { ratios, spread })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundedness {
    Bounded,
    Growing,
}

impl Boundedness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundedness::Bounded => "Bounded",
            Boundedness::Growing => "Growing",
        }
    }
}

/// `Bounded` when `max ‖u‖_∞` over the second half of the run stays within 5% of the first half.
pub fn boundedness_check<T: Real>(traj: &Trajectory<T>) -> Boundedness {
    if let Ok(regime) = classify_regime(traj.params.p, traj.params.theta, traj.grid.dim()) {
        if regime.tag == RegimeTag::Supercritical {
            log::warn!("boundedness check on supercritical parameters; result is descriptive only");
        }
    }
    if traj.status == RunStatus::BlowUpSuspected {
        return Boundedness::Growing;
    }
    let Some(t_last) = traj.t_last() else {
        return Boundedness::Bounded;
    };
    let half = t_last / T::lit(2.0);
    let early = traj
        .rows
        .iter()
        .filter(|r| r.t <= half)
        .fold(T::zero(), |acc, r| acc.max(r.u_linf));
    let late = traj
        .rows
        .iter()
        .filter(|r| r.t >= half)
        .fold(T::zero(), |acc, r| acc.max(r.u_linf));
    if late <= T::lit(1.05) * early {
        Boundedness::Bounded
    } else {
        Boundedness::Growing
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonContinuation<T> {
    pub epsilons: Vec<T>,
    /// `d_k = ‖u_{ε_k} - u_{ε_{k+1}}‖_∞`.
    pub differences: Vec<T>,
    /// `d_{k+1} ≤ 1.1 d_k` for every `k`.
    pub non_increasing: bool,
}

/// Successive differences of final states over a strictly decreasing ε sequence.
pub fn epsilon_continuation<T: Real>(results: &[(T, State<T>)]) -> Result<EpsilonContinuation<T>> {
    if results.len() < 2 {
        return Err(KsError::MismatchedRuns(format!(
            "need at least two runs, got {}",
            results.len()
        )));
    }
    let (_, first) = &results[0];
    for w in results.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(KsError::MismatchedRuns("epsilon must decrease strictly".into()));
        }
    }
    for (_, s) in results {
        if s.grid() != first.grid() {
            return Err(KsError::MismatchedRuns("runs use different grids".into()));
        }
        if s.t != first.t {
            return Err(KsError::MismatchedRuns("runs end at different times".into()));
        }
    }
    let differences = results
        .windows(2)
        .map(|w| w[0].1.u.linf_distance(&w[1].1.u))
        .collect::<Result<Vec<T>>>()?;
    let tol = T::lit(1.1);
    let non_increasing = differences.windows(2).all(|d| d[1] <= tol * d[0]);
    Ok(EpsilonContinuation {
        epsilons: results.iter().map(|r| r.0).collect(),
        differences,
        non_increasing,
    })
}
