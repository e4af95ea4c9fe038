use crate::error::{KsError, Result};
use crate::grid::{gradient_faces, Grid};
use crate::model::drift_velocity;
use crate::scalar::Real;
use crate::solver::Trajectory;

/// Separable test function `φ(x,t) = η(t) Σ_j c_j Π_a cos(k_{j,a} π x_a / L_a)`.
///
/// `η` equals 1 up to `flat_until`, then falls to 0 at `cutoff` along a quintic
/// smoothstep, so `φ` is C² in time and vanishes for `t ≥ cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction<T> {
    terms: Vec<(T, [usize; 2])>,
    flat_until: T,
    cutoff: T,
}

impl<T: Real> TestFunction<T> {
    /// Rejects sign-changing spatial parts: `c_0 ≥ Σ_{k≠0} |c_k|` must hold.
    pub fn new(terms: Vec<(T, [usize; 2])>, flat_until: T, cutoff: T) -> Result<Self> {
        if terms.is_empty() {
            return Err(KsError::UnsupportedTestFunction("no terms".into()));
        }
        if !(flat_until >= T::zero() && flat_until < cutoff && cutoff.is_finite()) {
            return Err(KsError::UnsupportedTestFunction(format!(
                "need 0 <= flat_until < cutoff, got {} and {}",
                flat_until.as_f64(),
                cutoff.as_f64()
            )));
        }
        let mut constant = T::zero();
        let mut oscillating = T::zero();
        for &(c, k) in &terms {
            if !c.is_finite() {
                return Err(KsError::UnsupportedTestFunction("non-finite coefficient".into()));
            }
            if k == [0, 0] {
                constant += c;
            } else {
                oscillating += c.abs();
            }
        }
        if constant < oscillating {
            return Err(KsError::UnsupportedTestFunction(
                "spatial part may take negative values".into(),
            ));
        }
        Ok(Self {
            terms,
            flat_until,
            cutoff,
        })
    }

    /// `φ ≡ η(t)`, the constant-in-space case.
    pub fn constant(flat_until: T, cutoff: T) -> Result<Self> {
        Self::new(vec![(T::one(), [0, 0])], flat_until, cutoff)
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn eta(&self, t: T) -> T {
        let s = self.ramp(t);
        let (s3, s4, s5) = (s * s * s, s * s * s * s, s * s * s * s * s);
        T::one() - (T::lit(10.0) * s3 - T::lit(15.0) * s4 + T::lit(6.0) * s5)
    }

    pub fn eta_dot(&self, t: T) -> T {
        let s = self.ramp(t);
        if s == T::zero() || s == T::one() {
            return T::zero();
        }
        let s2 = s * s;
        -T::lit(30.0) * s2 * (T::one() - s) * (T::one() - s) / (self.cutoff - self.flat_until)
    }

    fn ramp(&self, t: T) -> T {
        if t <= self.flat_until {
            T::zero()
        } else if t >= self.cutoff {
            T::one()
        } else {
            (t - self.flat_until) / (self.cutoff - self.flat_until)
        }
    }

    /// Spatial part at `x`.
    pub fn space(&self, grid: &Grid<T>, x: [T; 2]) -> T {
        self.terms
            .iter()
            .map(|&(c, k)| c * mode_factor(grid, k, x, None))
            .sum()
    }

    /// `∂_axis` of the spatial part.
    pub fn space_derivative(&self, grid: &Grid<T>, axis: usize, x: [T; 2]) -> T {
        self.terms
            .iter()
            .map(|&(c, k)| c * mode_factor(grid, k, x, Some(axis)))
            .sum()
    }

    /// Laplacian of the spatial part.
    pub fn space_laplacian(&self, grid: &Grid<T>, x: [T; 2]) -> T {
        self.terms
            .iter()
            .map(|&(c, k)| {
                let lam: T = (0..grid.dim()).map(|a| wavenumber(grid, k[a], a).powi(2)).sum();
                -c * lam * mode_factor(grid, k, x, None)
            })
            .sum()
    }
}

fn wavenumber<T: Real>(grid: &Grid<T>, k: usize, axis: usize) -> T {
    T::from_usize_lossy(k) * T::PI() / grid.lengths()[axis]
}

fn mode_factor<T: Real>(grid: &Grid<T>, k: [usize; 2], x: [T; 2], differentiate: Option<usize>) -> T {
    let mut out = T::one();
    for a in 0..grid.dim() {
        let w = wavenumber(grid, k[a], a);
        out *= if differentiate == Some(a) {
            -w * (w * x[a]).sin()
        } else {
            (w * x[a]).cos()
        };
    }
    out
}

/// Relative defects of the two weak-form identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakResidual<T> {
    /// Density equation.
    pub u: T,
    /// Signal equation.
    pub v: T,
}

impl<T: Real> WeakResidual<T> {
    pub fn max(&self) -> T {
        self.u.max(self.v)
    }
}

/// Evaluates both weak-form identities on the stored snapshots.
///
/// Space integrals use midpoint sums at cell centers and, for flux terms, at
/// faces, where the density takes its donor-cell value as in the scheme. Time integrals use the trapezoid rule over snapshot times. Each
/// residual is `|LHS - RHS|` divided by the sum of the magnitudes of all
/// integral terms that enter the identity.
pub fn weak_residual<T: Real>(traj: &Trajectory<T>, phi: &TestFunction<T>) -> Result<WeakResidual<T>> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(KsError::TooFewPoints {
            required: 3,
            got: snaps.len(),
        });
    }
    let t_end = snaps[snaps.len() - 1].t;
    if snaps[0].t != T::zero() {
        return Err(KsError::InsufficientCoverage {
            t: 0.0,
            reason: "first snapshot must be the initial state".into(),
        });
    }
    if !(phi.cutoff < t_end) {
        return Err(KsError::UnsupportedTestFunction(format!(
            "support reaches the final time {}",
            t_end.as_f64()
        )));
    }
    let grid = traj.grid;
    let params = traj.params;
    let vol = grid.cell_volume();
    let cells = grid.cell_count();

    let s_cell: Vec<T> = (0..cells).map(|c| phi.space(&grid, grid.cell_center(c))).collect();
    let lap_cell: Vec<T> = (0..cells)
        .map(|c| phi.space_laplacian(&grid, grid.cell_center(c)))
        .collect();
    let mut ds_face: [Vec<(usize, T)>; 2] = [Vec::new(), Vec::new()];
    for (axis, out) in ds_face.iter_mut().enumerate().take(grid.dim()) {
        for f in 0..grid.face_count(axis) {
            if !grid.is_boundary_face(axis, f) {
                out.push((f, phi.space_derivative(&grid, axis, grid.face_center(axis, f))));
            }
        }
    }

    // Per-snapshot spatial integrals, before multiplying by η or η'.
    let mut u_s = Vec::with_capacity(snaps.len());
    let mut u_lap = Vec::with_capacity(snaps.len());
    let mut u_drift = Vec::with_capacity(snaps.len());
    let mut v_s = Vec::with_capacity(snaps.len());
    let mut gv_ds = Vec::with_capacity(snaps.len());
    let mut prod_s = Vec::with_capacity(snaps.len());
    for snap in snaps {
        if *snap.grid() != grid {
            return Err(KsError::GridMismatch);
        }
        let u = snap.u.values();
        let v = snap.v.values();
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>() * vol;
        u_s.push(dot(u, &s_cell));
        u_lap.push(dot(u, &lap_cell));
        v_s.push(dot(v, &s_cell));
        let prod: Vec<T> = u.iter().map(|&x| x.max(T::zero()).powf(params.theta)).collect();
        prod_s.push(dot(&prod, &s_cell));

        let gv = gradient_faces(&snap.v);
        let w = drift_velocity(&gv, &params)?;
        let mut drift = T::zero();
        let mut grad = T::zero();
        for (axis, faces) in ds_face.iter().enumerate() {
            for &(f, ds) in faces {
                let (l, r) = grid.face_neighbors(axis, f);
                let wf = w.axis(axis)[f];
                let u_face = if wf > T::zero() { u[l] } else { u[r] };
                drift += u_face * wf * ds;
                grad += gv.axis(axis)[f] * ds;
            }
        }
        u_drift.push(drift * vol);
        gv_ds.push(grad * vol);
    }

    let times: Vec<T> = snaps.iter().map(|s| s.t).collect();
    let eta: Vec<T> = times.iter().map(|&t| phi.eta(t)).collect();
    let eta_dot: Vec<T> = times.iter().map(|&t| phi.eta_dot(t)).collect();
    let weighted = |a: &[T], w: &[T]| -> Vec<T> { a.iter().zip(w).map(|(&x, &y)| x * y).collect() };
    let trap = |f: &[T]| -> T {
        times
            .windows(2)
            .zip(f.windows(2))
            .map(|(t, y)| (t[1] - t[0]) * (y[0] + y[1]) * T::lit(0.5))
            .sum()
    };

    let a_u = trap(&weighted(&u_s, &eta_dot));
    let init_u = eta[0] * u_s[0];
    let b_u = trap(&weighted(&u_lap, &eta));
    let c_u = trap(&weighted(&u_drift, &eta));
    let lhs_u = -a_u - init_u;
    let rhs_u = b_u + c_u;
    let scale_u = a_u.abs() + init_u.abs() + b_u.abs() + c_u.abs();

    let a_v = trap(&weighted(&v_s, &eta_dot));
    let init_v = eta[0] * v_s[0];
    let d_v = trap(&weighted(&gv_ds, &eta));
    let e_v = trap(&weighted(&v_s, &eta));
    let g_v = trap(&weighted(&prod_s, &eta));
    let lhs_v = -a_v - init_v;
    let rhs_v = -d_v - e_v + g_v;
    let scale_v = a_v.abs() + init_v.abs() + d_v.abs() + e_v.abs() + g_v.abs();

    let rel = |defect: T, scale: T| {
        if scale == T::zero() {
            T::zero()
        } else {
            defect.abs() / scale
        }
    };
    Ok(WeakResidual {
        u: rel(lhs_u - rhs_u, scale_u),
        v: rel(lhs_v - rhs_v, scale_v),
    })
}
