use crate::error::{KsError, Result};
use crate::grid::{gradient_faces, integrate, lp_norm, ScalarField};
use crate::scalar::Real;

/// Which norms to record at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSpec<T> {
    /// Exponents for `‖∇v‖_{L^q}`; `∞` allowed.
    pub q_list: Vec<T>,
    /// Exponents for `‖u‖_{L^r}`; `∞` allowed.
    pub r_list: Vec<T>,
}

impl<T: Real> Default for DiagnosticsSpec<T> {
    fn default() -> Self {
        Self {
            q_list: vec![T::lit(2.0)],
            r_list: vec![T::lit(2.0)],
        }
    }
}

impl<T: Real> DiagnosticsSpec<T> {
    pub fn validate(&self) -> Result<()> {
        for &q in self.q_list.iter().chain(&self.r_list) {
            if q.is_nan() || q < T::one() {
                return Err(KsError::InvalidNormExponent(q.as_f64()));
            }
        }
        Ok(())
    }

    /// Evaluates one row. `u_bar` is the mean of the initial density.
    pub fn row(&self, t: T, u: &ScalarField<T>, v: &ScalarField<T>, u_bar: T, t1: T) -> Result<DiagnosticsRow<T>> {
        let mass = integrate(u);
        let linf_gap = u
            .values()
            .iter()
            .fold(T::zero(), |acc, &x| acc.max((x - u_bar).abs()));
        let grad_mag = gradient_faces(v).cell_magnitude();
        let gradv_q_norms = self
            .q_list
            .iter()
            .map(|&q| Ok((q, lp_norm(&grad_mag, q)?)))
            .collect::<Result<Vec<_>>>()?;
        let u_r_norms = self
            .r_list
            .iter()
            .map(|&r| Ok((r, lp_norm(u, r)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiagnosticsRow {
            t,
            mass,
            linf_gap,
            gradv_q_norms,
            u_linf: u.max_abs(),
            u_r_norms,
            min_u: u.min(),
            min_v: v.min(),
            post_transient: t >= t1,
        })
    }
}

/// Sampled diagnostics at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow<T> {
    pub t: T,
    /// `∫_Ω u`.
    pub mass: T,
    /// `‖u - ū‖_∞`.
    pub linf_gap: T,
    /// `(q, ‖∇v‖_{L^q})` in the order requested.
    pub gradv_q_norms: Vec<(T, T)>,
    pub u_linf: T,
    /// `(r, ‖u‖_{L^r})` in the order requested.
    pub u_r_norms: Vec<(T, T)>,
    pub min_u: T,
    pub min_v: T,
    /// Set for rows with `t ≥ t1`.
    pub post_transient: bool,
}

impl<T: Real> DiagnosticsRow<T> {
    pub fn gradv_norm(&self, q: T) -> Option<T> {
        self.gradv_q_norms.iter().find(|(k, _)| *k == q).map(|&(_, v)| v)
    }

    pub fn u_norm(&self, r: T) -> Option<T> {
        self.u_r_norms.iter().find(|(k, _)| *k == r).map(|&(_, v)| v)
    }
}
