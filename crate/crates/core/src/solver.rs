//! Time integration of the regularized system.
//!
//! One IMEX step is a Lie splitting:
//!
//! 1. drift `w` on faces from the current `v`;
//! 2. explicit donor-cell advection of `u` with face flux `u_upwind · w`;
//! 3. backward-Euler diffusion `(I - dtΔ) u⁺ = u`;
//! 4. `(I + dt - dtΔ) v⁺ = v + dt (u⁺)^θ`.
//!
//! Implicit solves are direct tridiagonal eliminations (dimension-split sweeps
//! in 2D) written in increment form, `x⁺ = x + δ` with `(I - rD₂) δ = r D₂ x`,
//! so a spatially constant field is reproduced bit for bit.

use crate::analysis::{DiagnosticsRow, DiagnosticsSpec};
use crate::error::{KsError, Result};
use crate::grid::{divergence_into, gradient_into, integrate, Grid, ScalarField};
use crate::model::{drift_into, production_into, ModelParams, NEGATIVE_CLAMP};
use crate::scalar::Real;
use crate::tridiag::NeumannLine;

/// `‖u‖_∞` growth factor (relative to the initial data) that ends a run as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;
/// A stable step below `dt_max` times this factor is treated as blow-up as well.
pub const DT_COLLAPSE_FACTOR: f64 = 1e-10;
/// Slack on the step-size checks so that `dt == limit` computed in a different order passes.
const CFL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Imex,
    FullyExplicit,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Imex => "imex",
            Scheme::FullyExplicit => "explicit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SnapshotPolicy<T> {
    None,
    EveryStep,
    /// Snapshot at every multiple of the interval (step sizes are clipped to hit them).
    Every(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub scheme: Scheme,
    /// Advective CFL number in `(0, 1]`.
    pub cfl: T,
    pub dt_max: T,
    pub t_end: T,
    pub sample_every: T,
    /// Bound on the normwise backward error of every tridiagonal solve.
    pub linear_tol: T,
    pub snapshots: SnapshotPolicy<T>,
    /// Step budget; a run that exhausts it before `t_end` ends as blow-up.
    pub max_steps: Option<usize>,
}

impl<T: Real> SolverConfig<T> {
    pub const DEFAULT_CFL: f64 = 0.5;
    pub const DEFAULT_DT_MAX: f64 = 1e-4;
    pub const DEFAULT_LINEAR_TOL: f64 = 1e-12;

    /// [`Self::DEFAULT_LINEAR_TOL`], widened to what `T` can resolve.
    pub fn default_linear_tol() -> T {
        T::lit(Self::DEFAULT_LINEAR_TOL).max(T::lit(64.0) * T::epsilon())
    }

    pub fn new(t_end: T, sample_every: T) -> Self {
        Self {
            scheme: Scheme::Imex,
            cfl: T::lit(Self::DEFAULT_CFL),
            dt_max: T::lit(Self::DEFAULT_DT_MAX),
            t_end,
            sample_every,
            linear_tol: Self::default_linear_tol(),
            snapshots: SnapshotPolicy::None,
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value: T, reason| KsError::ParameterOutOfRange {
            name,
            value: value.as_f64(),
            reason,
        };
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(bad("cfl", self.cfl, "cfl must lie in (0, 1]"));
        }
        if !(self.dt_max > T::zero()) || !self.dt_max.is_finite() {
            return Err(bad("dt_max", self.dt_max, "dt_max must be positive"));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(bad("t_end", self.t_end, "t_end must be positive"));
        }
        if !(self.sample_every > T::zero()) || !self.sample_every.is_finite() {
            return Err(bad("sample_every", self.sample_every, "sample_every must be positive"));
        }
        if !(self.linear_tol > T::zero()) {
            return Err(bad("linear_tol", self.linear_tol, "linear_tol must be positive"));
        }
        if let SnapshotPolicy::Every(dt) = self.snapshots {
            if !(dt > T::zero()) || !dt.is_finite() {
                return Err(bad("snapshot_every", dt, "snapshot interval must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub u: ScalarField<T>,
    pub v: ScalarField<T>,
}

impl<T: Real> State<T> {
    pub fn new(t: T, u: ScalarField<T>, v: ScalarField<T>) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(KsError::GridMismatch);
        }
        Ok(Self { t, u, v })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.u.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Completed,
    BlowUpSuspected,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "Completed",
            RunStatus::BlowUpSuspected => "BlowUpSuspected",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub params: ModelParams<T>,
    pub grid: Grid<T>,
    /// Mean of the initial density, `ū = m / |Ω|`.
    pub u_bar: T,
    /// Start of the post-transient window.
    pub t1: T,
    pub rows: Vec<DiagnosticsRow<T>>,
    pub snapshots: Vec<State<T>>,
    pub final_state: State<T>,
    pub steps: usize,
    pub status: RunStatus,
}

impl<T: Real> Trajectory<T> {
    /// Time of the last recorded row.
    pub fn t_last(&self) -> Option<T> {
        self.rows.last().map(|r| r.t)
    }
}

/// Reusable workspace for repeated steps on one grid.
pub struct Stepper<T> {
    grid: Grid<T>,
    params: ModelParams<T>,
    scheme: Scheme,
    linear_tol: T,
    faces: [Vec<T>; 2],
    drift: [Vec<T>; 2],
    max_drift: T,
    prepared: bool,
    div: Vec<T>,
    lap: Vec<T>,
    prod: Vec<T>,
    line: Vec<T>,
    line_rhs: Vec<T>,
    line_delta: Vec<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: Grid<T>, params: ModelParams<T>, scheme: Scheme, linear_tol: T) -> Result<Self> {
        params.validate()?;
        let longest = grid.cells().iter().copied().max().unwrap_or(0);
        let faces = [vec![T::zero(); grid.face_count(0)], vec![T::zero(); grid.face_count(1)]];
        Ok(Self {
            grid,
            params,
            scheme,
            linear_tol,
            drift: faces.clone(),
            faces,
            max_drift: T::zero(),
            prepared: false,
            div: vec![T::zero(); grid.cell_count()],
            lap: vec![T::zero(); grid.cell_count()],
            prod: vec![T::zero(); grid.cell_count()],
            line: vec![T::zero(); longest],
            line_rhs: vec![T::zero(); longest],
            line_delta: vec![T::zero(); longest],
        })
    }

    fn check_grid(&self, state: &State<T>) -> Result<()> {
        if state.u.grid() != &self.grid || state.v.grid() != &self.grid {
            return Err(KsError::GridMismatch);
        }
        Ok(())
    }

    /// Computes the drift for `v` and caches it for the next step.
    fn prepare(&mut self, v: &[T]) -> Result<()> {
        gradient_into(&self.grid, v, &mut self.faces);
        drift_into(&self.grid, &self.faces, &self.params, &mut self.drift)?;
        self.max_drift = self
            .drift
            .iter()
            .flat_map(|a| a.iter())
            .fold(T::zero(), |acc, &w| acc.max(w.abs()));
        self.prepared = true;
        Ok(())
    }

    fn dims(&self) -> T {
        T::from_usize_lossy(self.grid.dim())
    }

    /// `h / (2n max|w|)`, infinite for a vanishing drift.
    fn advective_limit(&self) -> T {
        if self.max_drift == T::zero() {
            return T::infinity();
        }
        self.grid.min_spacing() / (T::lit(2.0) * self.dims() * self.max_drift)
    }

    /// `h² / (2n)`, the forward-Euler diffusion limit.
    fn diffusive_limit(&self) -> T {
        let h = self.grid.min_spacing();
        h * h / (T::lit(2.0) * self.dims())
    }

    pub fn stable_dt(&mut self, state: &State<T>, cfg: &SolverConfig<T>) -> Result<T> {
        self.check_grid(state)?;
        self.prepare(state.v.values())?;
        Ok(self.stable_dt_prepared(cfg))
    }

    fn stable_dt_prepared(&self, cfg: &SolverConfig<T>) -> T {
        let mut dt = cfg.dt_max.min(cfg.cfl * self.advective_limit());
        if self.scheme == Scheme::FullyExplicit {
            let h = self.grid.min_spacing();
            dt = dt.min(cfg.cfl * h * h / (T::lit(4.0) * self.dims()));
        }
        dt
    }

    /// Advances `state` by `dt` in place.
    pub fn step(&mut self, state: &mut State<T>, dt: T) -> Result<()> {
        self.check_grid(state)?;
        self.prepare(state.v.values())?;
        self.advance(state, dt)
    }

    fn advance(&mut self, state: &mut State<T>, dt: T) -> Result<()> {
        debug_assert!(self.prepared);
        self.prepared = false;
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(KsError::CflViolation {
                dt: dt.as_f64(),
                limit: 0.0,
            });
        }
        let slack = T::one() + T::lit(CFL_SLACK);
        let adv = self.advective_limit();
        if dt > adv * slack {
            return Err(KsError::CflViolation {
                dt: dt.as_f64(),
                limit: adv.as_f64(),
            });
        }
        if self.scheme == Scheme::FullyExplicit {
            let diff = self.diffusive_limit();
            if dt > diff * slack {
                return Err(KsError::CflViolation {
                    dt: dt.as_f64(),
                    limit: diff.as_f64(),
                });
            }
        }

        self.upwind_flux_divergence(state.u.values());
        match self.scheme {
            Scheme::Imex => self.advance_imex(state, dt)?,
            Scheme::FullyExplicit => self.advance_explicit(state, dt)?,
        }
        state.t += dt;

        if let Some(idx) = state.u.values().iter().position(|x| !x.is_finite()) {
            return Err(KsError::Breakdown(format!("u non-finite at cell {idx}, t = {}", state.t)));
        }
        if let Some(idx) = state.v.values().iter().position(|x| !x.is_finite()) {
            return Err(KsError::Breakdown(format!("v non-finite at cell {idx}, t = {}", state.t)));
        }
        Ok(())
    }

    /// Donor-cell flux `u_upwind · w` on faces, then its divergence into `self.div`.
    fn upwind_flux_divergence(&mut self, u: &[T]) {
        let grid = self.grid;
        for axis in 0..grid.dim() {
            let w = &self.drift[axis];
            let flux = &mut self.faces[axis];
            for (f, slot) in flux.iter_mut().enumerate() {
                let wf = w[f];
                *slot = if wf == T::zero() {
                    T::zero()
                } else {
                    let (left, right) = grid.face_neighbors(axis, f);
                    if wf > T::zero() {
                        wf * u[left]
                    } else {
                        wf * u[right]
                    }
                };
            }
        }
        divergence_into(&grid, &self.faces, &mut self.div);
    }

    fn advance_imex(&mut self, state: &mut State<T>, dt: T) -> Result<()> {
        {
            let u = state.u.values_mut();
            for (x, &d) in u.iter_mut().zip(&self.div) {
                *x -= dt * d;
            }
        }
        for axis in 0..self.grid.dim() {
            let h = self.grid.spacing()[axis];
            self.implicit_sweep(state.u.values_mut(), axis, dt / (h * h))?;
        }

        production_into(state.u.values(), self.params.theta, &mut self.prod)?;
        // (1 + dt - dtΔ) v⁺ = v + dt g  ⇔  (I - σΔ) v⁺ = v + dt (g - v) / (1 + dt),  σ = dt / (1 + dt).
        let shift = T::one() + dt;
        let factor = dt / shift;
        {
            let v = state.v.values_mut();
            for (x, &g) in v.iter_mut().zip(&self.prod) {
                *x += factor * (g - *x);
            }
        }
        for axis in 0..self.grid.dim() {
            let h = self.grid.spacing()[axis];
            self.implicit_sweep(state.v.values_mut(), axis, factor / (h * h))?;
        }
        Ok(())
    }

    fn advance_explicit(&mut self, state: &mut State<T>, dt: T) -> Result<()> {
        production_into(state.u.values(), self.params.theta, &mut self.prod)?;

        gradient_into(&self.grid, state.u.values(), &mut self.faces);
        divergence_into(&self.grid, &self.faces, &mut self.lap);
        {
            let u = state.u.values_mut();
            for ((x, &l), &d) in u.iter_mut().zip(&self.lap).zip(&self.div) {
                *x += dt * (l - d);
            }
        }

        gradient_into(&self.grid, state.v.values(), &mut self.faces);
        divergence_into(&self.grid, &self.faces, &mut self.lap);
        let v = state.v.values_mut();
        for ((x, &l), &g) in v.iter_mut().zip(&self.lap).zip(&self.prod) {
            *x += dt * (l - *x + g);
        }
        Ok(())
    }

    /// `x ← (I - r D₂)⁻¹ x` along every line of `axis`.
    fn implicit_sweep(&mut self, x: &mut [T], axis: usize, r: T) -> Result<()> {
        let nx = self.grid.cells()[0];
        let ny = if self.grid.dim() == 2 { self.grid.cells()[1] } else { 1 };
        let (n, lines, stride, line_step) = if axis == 0 { (nx, ny, 1, nx) } else { (ny, nx, nx, 1) };
        let solver = NeumannLine::new(n, T::one(), r)?;
        let rhs = &mut self.line_rhs[..n];
        let line = &mut self.line[..n];
        let delta = &mut self.line_delta[..n];
        for l in 0..lines {
            let base = l * line_step;
            for k in 0..n {
                line[k] = x[base + k * stride];
            }
            for k in 0..n {
                let c = line[k];
                let left = if k > 0 { line[k - 1] - c } else { T::zero() };
                let right = if k + 1 < n { line[k + 1] - c } else { T::zero() };
                rhs[k] = r * (left + right);
            }
            delta.copy_from_slice(rhs);
            solver.solve_in_place(delta);
            let err = solver.backward_error(delta, rhs);
            if !(err <= self.linear_tol) {
                return Err(KsError::LinearSolve(format!(
                    "backward error {} exceeds tolerance {} on axis {axis}",
                    err.as_f64(),
                    self.linear_tol.as_f64()
                )));
            }
            for k in 0..n {
                x[base + k * stride] = line[k] + delta[k];
            }
        }
        Ok(())
    }
}

/// Largest admissible step for the current state.
///
/// `min(dt_max, cfl·h/(2n·max|w|))`, additionally capped by `cfl·h²/(4n)` for
/// the fully explicit scheme.
pub fn stable_dt<T: Real>(state: &State<T>, params: &ModelParams<T>, cfg: &SolverConfig<T>) -> Result<T> {
    let mut stepper = Stepper::new(*state.grid(), *params, cfg.scheme, cfg.linear_tol)?;
    stepper.stable_dt(state, cfg)
}

/// One IMEX step.
pub fn step_imex<T: Real>(state: &State<T>, params: &ModelParams<T>, grid: &Grid<T>, dt: T) -> Result<State<T>> {
    single_step(state, params, grid, dt, Scheme::Imex)
}

/// One forward-Euler step with the same spatial operators as [`step_imex`].
pub fn step_explicit<T: Real>(state: &State<T>, params: &ModelParams<T>, grid: &Grid<T>, dt: T) -> Result<State<T>> {
    single_step(state, params, grid, dt, Scheme::FullyExplicit)
}

fn single_step<T: Real>(
    state: &State<T>,
    params: &ModelParams<T>,
    grid: &Grid<T>,
    dt: T,
    scheme: Scheme,
) -> Result<State<T>> {
    let mut stepper = Stepper::new(*grid, *params, scheme, SolverConfig::<T>::default_linear_tol())?;
    let mut next = state.clone();
    stepper.step(&mut next, dt)?;
    Ok(next)
}

fn check_initial<T: Real>(name: &'static str, f: &ScalarField<T>) -> Result<()> {
    if let Some((cell, &value)) = f.values().iter().enumerate().find(|(_, &x)| x < T::zero()) {
        log::debug!("{name} negative at cell {cell}");
        return Err(KsError::NegativeDensity {
            cell,
            value: value.as_f64(),
        });
    }
    Ok(())
}

/// Integrates from `(u0, v0)` at `t = 0` to `cfg.t_end`, sampling diagnostics.
///
/// Rows are recorded at `t = 0`, every multiple of `sample_every` and at
/// `t_end`; rows with `t ≥ t1` are flagged post-transient. A run whose `‖u‖_∞`
/// exceeds [`BLOW_UP_FACTOR`] times its initial value, whose stable step
/// collapses, or which exhausts `cfg.max_steps`, stops early with [`RunStatus::BlowUpSuspected`].
pub fn run<T: Real>(
    u0: &ScalarField<T>,
    v0: &ScalarField<T>,
    params: &ModelParams<T>,
    cfg: &SolverConfig<T>,
    diagnostics: &DiagnosticsSpec<T>,
    t1: T,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    params.validate()?;
    diagnostics.validate()?;
    let grid = *u0.grid();
    if v0.grid() != &grid {
        return Err(KsError::GridMismatch);
    }
    check_initial("u0", u0)?;
    check_initial("v0", v0)?;
    let mass0 = integrate(u0);
    if !(mass0 > T::zero()) {
        return Err(KsError::ParameterOutOfRange {
            name: "u0",
            value: mass0.as_f64(),
            reason: "initial density must not vanish identically",
        });
    }
    if !(t1 >= T::zero() && t1 < cfg.t_end) {
        return Err(KsError::TransientOutOfRange {
            t1: t1.as_f64(),
            t_end: cfg.t_end.as_f64(),
        });
    }

    let u_bar = mass0 / grid.measure();
    let u0_linf = u0.max_abs();
    let blow_up_level = T::lit(BLOW_UP_FACTOR) * u0_linf;
    let dt_floor = cfg.dt_max * T::lit(DT_COLLAPSE_FACTOR);

    let mut stepper = Stepper::new(grid, *params, cfg.scheme, cfg.linear_tol)?;
    let mut state = State::new(T::zero(), u0.clone(), v0.clone())?;
    let mut rows = vec![diagnostics.row(state.t, &state.u, &state.v, u_bar, t1)?];
    let mut snapshots = Vec::new();
    if cfg.snapshots != SnapshotPolicy::None {
        snapshots.push(state.clone());
    }

    let mut sample_index = 1usize;
    let mut snap_index = 1usize;
    let next_sample = |k: usize| (T::from_usize_lossy(k) * cfg.sample_every).min(cfg.t_end);
    let mut steps = 0usize;
    let mut status = RunStatus::Completed;

    while state.t < cfg.t_end {
        if cfg.max_steps.is_some_and(|budget| steps >= budget) {
            log::warn!("step budget exhausted at t = {}", state.t.as_f64());
            rows.push(diagnostics.row(state.t, &state.u, &state.v, u_bar, t1)?);
            status = RunStatus::BlowUpSuspected;
            break;
        }
        stepper.prepare(state.v.values())?;
        let mut dt = stepper.stable_dt_prepared(cfg);
        if dt < dt_floor {
            log::warn!("stable step collapsed to {} at t = {}", dt.as_f64(), state.t.as_f64());
            status = RunStatus::BlowUpSuspected;
            break;
        }

        let mut target = next_sample(sample_index);
        if let SnapshotPolicy::Every(every) = cfg.snapshots {
            target = target.min(T::from_usize_lossy(snap_index) * every);
        }
        let mut landed = false;
        if state.t + dt * (T::one() + T::lit(1e-9)) >= target {
            dt = target - state.t;
            landed = true;
        }

        stepper.advance(&mut state, dt)?;
        steps += 1;
        if landed {
            state.t = target;
        }

        let at_sample = landed && state.t == next_sample(sample_index);
        if at_sample {
            while next_sample(sample_index) <= state.t && next_sample(sample_index) < cfg.t_end {
                sample_index += 1;
            }
        }
        match cfg.snapshots {
            SnapshotPolicy::None => {}
            SnapshotPolicy::EveryStep => snapshots.push(state.clone()),
            SnapshotPolicy::Every(every) => {
                if landed && state.t == T::from_usize_lossy(snap_index) * every {
                    snapshots.push(state.clone());
                    snap_index += 1;
                } else if state.t >= cfg.t_end {
                    snapshots.push(state.clone());
                }
            }
        }

        let u_linf = state.u.max_abs();
        let blown = u_linf > blow_up_level;
        if at_sample || state.t >= cfg.t_end || blown {
            rows.push(diagnostics.row(state.t, &state.u, &state.v, u_bar, t1)?);
        }
        if blown {
            log::warn!("‖u‖∞ = {} exceeds blow-up level at t = {}", u_linf.as_f64(), state.t.as_f64());
            status = RunStatus::BlowUpSuspected;
            break;
        }
    }

    // Dedupe in case the final sample and t_end coincide with an extra push.
    rows.dedup_by(|b, a| a.t == b.t);

    debug_assert!(state.u.values().iter().all(|&x| x >= -T::lit(NEGATIVE_CLAMP) * u0_linf * T::lit(1e6)));
    Ok(Trajectory {
        params: *params,
        grid,
        u_bar,
        t1,
        rows,
        snapshots,
        final_state: state,
        steps,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use crate::oracle::heat_semigroup_apply;
    use std::f64::consts::PI;

    fn equilibrium(grid: Grid<f64>, u_bar: f64, theta: f64) -> State<f64> {
        State::new(
            0.0,
            ScalarField::constant(grid, u_bar),
            ScalarField::constant(grid, u_bar.powf(theta)),
        )
        .unwrap()
    }

    fn bump_state(grid: Grid<f64>, m: f64, delta: f64, theta: f64) -> State<f64> {
        let u = ScalarField::from_fn(grid, |x| {
            let mut c = (PI * x[0] / grid.lengths()[0]).cos();
            if grid.dim() == 2 {
                c *= (PI * x[1] / grid.lengths()[1]).cos();
            }
            m * (1.0 + delta * c)
        })
        .unwrap();
        let v = u.map(|x| x.powf(theta)).unwrap();
        State::new(0.0, u, v).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        let grid = Grid::<f64>::unit_interval(100).unwrap();
        let params = ModelParams::new(1.0, 2.0, 0.5, 0.0).unwrap();
        let mut cfg = SolverConfig::new(1.0, 0.1);
        cfg.dt_max = 1.0;
        let eq = equilibrium(grid, 0.3, 0.5);
        assert_eq!(stable_dt(&eq, &params, &cfg).unwrap(), 1.0);

        // v = 10x gives a unit-χ drift of 10 on every interior face:
        // 0.5 · 0.01 / (2 · 10) = 2.5e-4, and 5e-4 at cfl = 1.
        let v = ScalarField::from_fn(grid, |x| 10.0 * x[0]).unwrap();
        let state = State::new(0.0, ScalarField::constant(grid, 1.0), v).unwrap();
        let dt = stable_dt(&state, &params, &cfg).unwrap();
        assert!((dt - 2.5e-4).abs() < 1e-15, "{dt}");
        cfg.cfl = 1.0;
        let dt = stable_dt(&state, &params, &cfg).unwrap();
        assert!((dt - 5e-4).abs() < 1e-15, "{dt}");
        cfg.cfl = 0.5;

        let grid2 = Grid::<f64>::new(2, &[1.0, 1.0], &[64, 64]).unwrap();
        let mut ecfg = cfg.clone();
        ecfg.scheme = Scheme::FullyExplicit;
        let dt = stable_dt(&equilibrium(grid2, 0.3, 0.5), &params, &ecfg).unwrap();
        assert!(dt <= (1.0f64 / 64.0).powi(2) / 16.0 * (1.0 + 1e-15));
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        for grid in [
            Grid::<f64>::unit_interval(32).unwrap(),
            Grid::<f64>::new(2, &[1.0, 2.0], &[8, 16]).unwrap(),
        ] {
            let params = ModelParams::new(1.0, 1.5, 0.5, 1e-3).unwrap();
            let eq = equilibrium(grid, 0.7, 0.5);
            let a = step_imex(&eq, &params, &grid, 1e-3).unwrap();
            let b = step_explicit(&eq, &params, &grid, 1e-5).unwrap();
            for next in [a, b] {
                assert!(next.u.linf_distance(&eq.u).unwrap() <= 1e-14);
                assert!(next.v.linf_distance(&eq.v).unwrap() <= 1e-14);
            }
        }
    }

    #[test]
    fn single_step_conserves_mass() {
        let grid = Grid::<f64>::new(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let params = ModelParams::new(2.0, 1.5, 1.0, 1e-2).unwrap();
        let mut s = bump_state(grid, 1.0, 0.9, 1.0);
        // Give v an independent shape so the drift is strong.
        s.v = ScalarField::from_fn(grid, |x| 5.0 * (-(x[0] - 0.3).powi(2) * 20.0).exp()).unwrap();
        let m0 = integrate(&s.u);
        let cfg = SolverConfig::new(1.0, 0.1);
        let dt = stable_dt(&s, &params, &cfg).unwrap();
        let next = step_imex(&s, &params, &grid, dt).unwrap();
        assert!((integrate(&next.u) - m0).abs() <= 1e-13 * m0);
        assert!(next.u.min() >= 0.0);
        assert!(next.v.min() >= 0.0);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let grid = Grid::<f64>::unit_interval(100).unwrap();
        let params = ModelParams::new(1.0, 2.0, 0.5, 0.0).unwrap();
        let v = ScalarField::from_fn(grid, |x| 10.0 * x[0]).unwrap();
        let state = State::new(0.0, ScalarField::constant(grid, 1.0), v).unwrap();
        assert!(matches!(
            step_imex(&state, &params, &grid, 1e-2),
            Err(KsError::CflViolation { .. })
        ));
        assert!(matches!(
            step_explicit(&equilibrium(grid, 1.0, 0.5), &params, &grid, 1e-3),
            Err(KsError::CflViolation { .. })
        ));
    }

    #[test]
    fn decoupled_step_matches_heat_semigroup() {
        let grid = Grid::<f64>::unit_interval(64).unwrap();
        let params = ModelParams::new(0.0, 2.0, 0.5, 0.0).unwrap();
        let s = bump_state(grid, 1.0, 0.5, 0.5);
        let dt = 1e-4;
        let next = step_imex(&s, &params, &grid, dt).unwrap();
        let exact = heat_semigroup_apply(&s.u, dt).unwrap();
        let err = next.u.linf_distance(&exact).unwrap();
        // Backward Euler plus second-order space: dt·λ²·dt/2 + dt·λ²h²/12 per unit amplitude.
        let lam = PI * PI;
        let bound = 0.5 * (lam * lam * dt * dt / 2.0 + dt * lam * lam / (12.0 * 64.0 * 64.0)) * 1.5;
        assert!(err <= bound, "{err} > {bound}");
    }

    #[test]
    fn explicit_and_imex_agree_at_small_dt() {
        let grid = Grid::<f64>::unit_interval(32).unwrap();
        let params = ModelParams::new(1.0, 1.5, 0.5, 1e-2).unwrap();
        let s0 = bump_state(grid, 1.0, 0.5, 0.5);
        let mut a = s0.clone();
        let mut b = s0.clone();
        let mut sa = Stepper::new(grid, params, Scheme::Imex, 1e-12).unwrap();
        let mut sb = Stepper::new(grid, params, Scheme::FullyExplicit, 1e-12).unwrap();
        let dt = 1e-6;
        for _ in 0..100_000 {
            sa.step(&mut a, dt).unwrap();
            sb.step(&mut b, dt).unwrap();
        }
        let d = a.u.linf_distance(&b.u).unwrap();
        assert!(d <= 1e-4 * a.u.max_abs(), "{d}");
        let m0 = integrate(&s0.u);
        assert!((integrate(&a.u) - m0).abs() <= 1e-12 * m0);
        assert!((integrate(&b.u) - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn run_samples_and_conserves() {
        let grid = Grid::<f64>::unit_interval(64).unwrap();
        let params = ModelParams::new(1.0, 1.5, 0.5, 1e-3).unwrap();
        let s = bump_state(grid, 0.5, 0.8, 0.5);
        let mut cfg = SolverConfig::new(0.5, 0.1);
        cfg.dt_max = 1e-3;
        cfg.snapshots = SnapshotPolicy::Every(0.05);
        let traj = run(&s.u, &s.v, &params, &cfg, &DiagnosticsSpec::default(), 0.2).unwrap();
        let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        assert!(traj.rows.iter().all(|r| r.post_transient == (r.t >= 0.2)));
        assert_eq!(traj.snapshots.len(), 11);
        assert_eq!(traj.status, RunStatus::Completed);
        let m0 = traj.rows[0].mass;
        for r in &traj.rows {
            assert!((r.mass - m0).abs() <= 1e-12 * m0);
            assert!(r.min_u >= 0.0 && r.min_v >= 0.0);
        }
    }

    #[test]
    fn run_rejects_bad_initial_data() {
        let grid = Grid::<f64>::unit_interval(16).unwrap();
        let params = ModelParams::new(1.0, 2.0, 0.5, 0.0).unwrap();
        let cfg = SolverConfig::new(0.1, 0.05);
        let d = DiagnosticsSpec::default();
        let zero = ScalarField::zeros(grid);
        let one = ScalarField::constant(grid, 1.0);
        assert!(run(&zero, &one, &params, &cfg, &d, 0.0).is_err());
        let neg = one.map(|x| x - 2.0).unwrap();
        assert!(run(&one, &neg, &params, &cfg, &d, 0.0).is_err());
        assert!(matches!(
            run(&one, &one, &params, &cfg, &d, 0.1),
            Err(KsError::TransientOutOfRange { .. })
        ));
    }

    #[test]
    fn run_is_deterministic() {
        let grid = Grid::<f64>::new(2, &[1.0, 1.0], &[12, 12]).unwrap();
        let params = ModelParams::new(1.0, 1.5, 1.0, 1e-2).unwrap();
        let s = bump_state(grid, 1.0, 0.5, 1.0);
        let mut cfg = SolverConfig::new(0.2, 0.05);
        cfg.dt_max = 1e-3;
        let d = DiagnosticsSpec::default();
        let a = run(&s.u, &s.v, &params, &cfg, &d, 0.1).unwrap();
        let b = run(&s.u, &s.v, &params, &cfg, &d, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strong_aggregation_flags_blow_up() {
        // p = 3, θ = 1 in 2D is far outside the stability region; a large χ and
        // concentrated data shrink the stable step until the budget runs out.
        let grid = Grid::<f64>::new(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let params = ModelParams::new(2000.0, 3.0, 1.0, 0.0).unwrap();
        let u = ScalarField::from_fn(grid, |x: [f64; 2]| 1.0 + 50.0 * (-(x[0].powi(2) + x[1].powi(2)) * 40.0).exp()).unwrap();
        let v = u.clone();
        let mut cfg = SolverConfig::new(1.0, 0.1);
        cfg.dt_max = 1e-3;
        cfg.max_steps = Some(2000);
        let traj = run(&u, &v, &params, &cfg, &DiagnosticsSpec::default(), 0.5).unwrap();
        assert_eq!(traj.status, RunStatus::BlowUpSuspected);
        assert_eq!(traj.steps, 2000);
        assert!(traj.t_last().unwrap() < 1.0);
        assert!(lp_norm(&traj.final_state.u, 1.0).unwrap() > 0.0);
    }
}
