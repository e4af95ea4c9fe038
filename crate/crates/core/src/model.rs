//! Constitutive functions of the flux-limited system and its parameter regimes.
//!
//! The simulated equations are
//!
//! ```text
//! u_t = Δu - ∇·(u w),   w = χ (|∇v|² + ε)^((p-2)/2) ∇v
//! v_t = Δv - v + u^θ
//! ```
//!
//! with homogeneous Neumann conditions on a box.

use crate::error::{KsError, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::scalar::Real;

/// Relative threshold below which negative densities are treated as round-off.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// Chemotactic strength. Zero decouples `u` into pure heat flow.
    pub chi: T,
    /// Flux-limitation exponent, `p > 1`.
    pub p: T,
    /// Production exponent, `0 < θ ≤ 1`.
    pub theta: T,
    /// Regularization, `0 ≤ ε < 1`; must be positive when `p < 2`.
    pub epsilon: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(chi: T, p: T, theta: T, epsilon: T) -> Result<Self> {
        let params = Self {
            chi,
            p,
            theta,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi >= T::zero()) || !self.chi.is_finite() {
            return Err(out_of_range("chi", self.chi, "chi must be finite and >= 0"));
        }
        check_p(self.p)?;
        check_theta(self.theta)?;
        if !(self.epsilon >= T::zero() && self.epsilon < T::one()) {
            return Err(out_of_range("epsilon", self.epsilon, "epsilon must lie in [0, 1)"));
        }
        if self.p < T::lit(2.0) && self.epsilon == T::zero() {
            return Err(out_of_range(
                "epsilon",
                self.epsilon,
                "p < 2 requires epsilon > 0 (the drift is singular otherwise)",
            ));
        }
        Ok(())
    }

    /// Same parameters with a different regularization.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::new(self.chi, self.p, self.theta, epsilon)
    }
}

fn out_of_range<T: Real>(name: &'static str, value: T, reason: &'static str) -> KsError {
    KsError::ParameterOutOfRange {
        name,
        value: value.as_f64(),
        reason,
    }
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if !(p > T::one()) || !p.is_finite() {
        return Err(out_of_range("p", p, "p must be finite and > 1"));
    }
    Ok(())
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if !(theta > T::zero() && theta <= T::one()) {
        return Err(out_of_range("theta", theta, "theta must lie in (0, 1]"));
    }
    Ok(())
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(KsError::DimensionOutOfRange(0));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    Subcritical,
    Supercritical,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Subcritical => "Subcritical",
            RegimeTag::Supercritical => "Supercritical",
        }
    }
}

/// Stability regime of `(p, θ, n)`; `threshold == None` means the critical `p` is infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regime<T> {
    pub tag: RegimeTag,
    pub threshold: Option<T>,
}

/// Classifies `p` against `nθ/(nθ-1)` (infinite when `θ ≤ 1/n`).
///
/// The stability region is open, so `p` equal to the threshold is supercritical.
pub fn classify_regime<T: Real>(p: T, theta: T, n: usize) -> Result<Regime<T>> {
    check_p(p)?;
    check_theta(theta)?;
    check_dim(n)?;
    let n_theta = T::from_usize_lossy(n) * theta;
    if n_theta <= T::one() {
        return Ok(Regime {
            tag: RegimeTag::Subcritical,
            threshold: None,
        });
    }
    let threshold = n_theta / (n_theta - T::one());
    let tag = if p < threshold {
        RegimeTag::Subcritical
    } else {
        RegimeTag::Supercritical
    };
    Ok(Regime {
        tag,
        threshold: Some(threshold),
    })
}

/// Supremum of the admissible `q` range for the `‖∇v‖_{L^q}` bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QSup<T> {
    /// `None` is `+∞`.
    pub value: Option<T>,
    pub inclusive: bool,
}

impl<T: Real> QSup<T> {
    /// Whether `q` (possibly `+∞`) lies in `[1, sup)` or `[1, sup]`.
    pub fn admits(&self, q: T) -> bool {
        if q.is_nan() || q < T::one() {
            return false;
        }
        match self.value {
            None => q.is_finite() || self.inclusive,
            Some(sup) => q < sup || (self.inclusive && q == sup),
        }
    }
}

pub fn admissible_q_sup<T: Real>(theta: T, n: usize) -> Result<QSup<T>> {
    check_theta(theta)?;
    check_dim(n)?;
    let n_theta = T::from_usize_lossy(n) * theta;
    Ok(if n_theta < T::one() {
        QSup {
            value: None,
            inclusive: true,
        }
    } else if n_theta == T::one() {
        QSup {
            value: None,
            inclusive: false,
        }
    } else {
        QSup {
            value: Some(T::from_usize_lossy(n) / (n_theta - T::one())),
            inclusive: false,
        }
    })
}

/// Dominant small-mass exponent `θ(p-1)+1` of the equilibrium-gap bound.
pub fn predicted_gap_exponent<T: Real>(p: T, theta: T) -> Result<T> {
    check_p(p)?;
    check_theta(theta)?;
    Ok(theta * (p - T::one()) + T::one())
}

/// First nonzero Neumann eigenvalue of `-Δ` on the box, `(π / max L)²`.
pub fn neumann_lambda1<T: Real>(grid: &Grid<T>) -> T {
    let l = grid
        .lengths()
        .iter()
        .fold(T::zero(), |acc, &l| acc.max(l));
    let k = T::PI() / l;
    k * k
}

/// Facewise drift `w = χ (|g|² + ε)^((p-2)/2) g`.
///
/// In 2D the tangential component at a face is the mean of the four
/// surrounding tangential differences.
pub fn drift_velocity<T: Real>(gradv: &VectorField<T>, params: &ModelParams<T>) -> Result<VectorField<T>> {
    let grid = *gradv.grid();
    let mut out = [
        vec![T::zero(); grid.face_count(0)],
        vec![T::zero(); grid.face_count(1)],
    ];
    let g = [gradv.axis(0).to_vec(), gradv.axis(1).to_vec()];
    drift_into(&grid, &g, params, &mut out)?;
    Ok(VectorField::from_arrays_unchecked(grid, out))
}

/// Kernel behind [`drift_velocity`], writing into preallocated face arrays.
pub(crate) fn drift_into<T: Real>(
    grid: &Grid<T>,
    g: &[Vec<T>; 2],
    params: &ModelParams<T>,
    out: &mut [Vec<T>; 2],
) -> Result<()> {
    let two = T::lit(2.0);
    let chi = params.chi;
    let exponent = (params.p - two) / two;
    let linear = params.p == two;
    let singular_possible = params.p < two && params.epsilon == T::zero();
    let eps = params.epsilon;
    let nx = grid.cells()[0];
    let quarter = T::lit(0.25);

    let factor = |sq: T| -> T {
        if linear {
            T::one()
        } else {
            (sq + eps).powf(exponent)
        }
    };

    if grid.dim() == 1 {
        for f in 0..=nx {
            let gf = g[0][f];
            if f == 0 || f == nx {
                out[0][f] = T::zero();
                continue;
            }
            if singular_possible && gf == T::zero() {
                return Err(KsError::SingularDrift { axis: 0, face: f });
            }
            out[0][f] = chi * factor(gf * gf) * gf;
        }
        return Ok(());
    }

    let ny = grid.cells()[1];
    // Faces normal to x: tangential y-differences live on the y-faces of the
    // two neighbouring cells (i-1, j) and (i, j).
    for j in 0..ny {
        for i in 0..=nx {
            let f = i + (nx + 1) * j;
            if i == 0 || i == nx {
                out[0][f] = T::zero();
                continue;
            }
            let gn = g[0][f];
            let gt = quarter
                * (g[1][(i - 1) + nx * j]
                    + g[1][(i - 1) + nx * (j + 1)]
                    + g[1][i + nx * j]
                    + g[1][i + nx * (j + 1)]);
            let sq = gn * gn + gt * gt;
            if singular_possible && sq == T::zero() {
                return Err(KsError::SingularDrift { axis: 0, face: f });
            }
            out[0][f] = chi * factor(sq) * gn;
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            let f = i + nx * j;
            if j == 0 || j == ny {
                out[1][f] = T::zero();
                continue;
            }
            let gn = g[1][f];
            let gt = quarter
                * (g[0][i + (nx + 1) * (j - 1)]
                    + g[0][i + 1 + (nx + 1) * (j - 1)]
                    + g[0][i + (nx + 1) * j]
                    + g[0][i + 1 + (nx + 1) * j]);
            let sq = gn * gn + gt * gt;
            if singular_possible && sq == T::zero() {
                return Err(KsError::SingularDrift { axis: 1, face: f });
            }
            out[1][f] = chi * factor(sq) * gn;
        }
    }
    Ok(())
}

/// Cellwise `u^θ`, clamping round-off negatives to zero.
pub fn production_rate<T: Real>(u: &ScalarField<T>, theta: T) -> Result<ScalarField<T>> {
    check_theta(theta)?;
    let mut out = vec![T::zero(); u.values().len()];
    production_into(u.values(), theta, &mut out)?;
    Ok(ScalarField::from_vec_unchecked(*u.grid(), out))
}

pub(crate) fn production_into<T: Real>(u: &[T], theta: T, out: &mut [T]) -> Result<()> {
    let scale = u.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let floor = -T::lit(NEGATIVE_CLAMP) * scale;
    let unit = theta == T::one();
    for (cell, (&v, slot)) in u.iter().zip(out.iter_mut()).enumerate() {
        if v < floor {
            return Err(KsError::NegativeDensity {
                cell,
                value: v.as_f64(),
            });
        }
        *slot = if v <= T::zero() {
            T::zero()
        } else if unit {
            v
        } else {
            v.powf(theta)
        };
    }
    Ok(())
}
