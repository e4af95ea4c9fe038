use crate::config::{InitShape, SignalInit};
use kssim_core::grid::integrate;
use kssim_core::{Grid, KsError, Result, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Unnormalized nonnegative profile of the given shape.
fn profile(grid: &Grid<f64>, shape: &InitShape) -> Result<ScalarField<f64>> {
    let lengths = grid.lengths().to_vec();
    let dim = grid.dim();
    let mode = move |k: [usize; 2], x: [f64; 2]| -> f64 {
        (0..dim)
            .map(|a| (k[a] as f64 * PI * x[a] / lengths[a]).cos())
            .product()
    };
    match *shape {
        InitShape::Constant => Ok(ScalarField::constant(*grid, 1.0)),
        InitShape::CosineBump { amplitude } => ScalarField::from_fn(*grid, |x| 1.0 + amplitude * mode([1, 1], x)),
        InitShape::GaussianBump { width } => ScalarField::from_fn(*grid, |x| {
            let r2: f64 = x[..dim].iter().map(|c| c * c).sum();
            (-r2 / (2.0 * width * width)).exp()
        }),
        InitShape::RandomSmooth { amplitude, modes, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut terms = Vec::new();
            for ky in 0..=if dim == 2 { modes } else { 0 } {
                for kx in 0..=modes {
                    if kx + ky == 0 || kx + ky > modes {
                        continue;
                    }
                    terms.push(([kx, ky], rng.random_range(-1.0..=1.0)));
                }
            }
            let total: f64 = terms.iter().map(|(_, c): &([usize; 2], f64)| c.abs()).sum();
            let scale = if total > 0.0 { amplitude / total } else { 0.0 };
            ScalarField::from_fn(*grid, |x| {
                1.0 + scale * terms.iter().map(|&(k, c)| c * mode(k, x)).sum::<f64>()
            })
        }
    }
}

/// `u0` of the given shape scaled to `∫u0 = mass`.
pub fn initial_density(grid: &Grid<f64>, shape: &InitShape, mass: f64) -> Result<ScalarField<f64>> {
    let raw = profile(grid, shape)?;
    let total = integrate(&raw);
    if !(total > 0.0) {
        return Err(KsError::ParameterOutOfRange {
            name: "init",
            value: total,
            reason: "initial profile has no mass on this grid",
        });
    }
    // Clamp the round-off negatives a fully modulated bump can produce.
    raw.map(|x| (x * (mass / total)).max(0.0))
}

pub fn initial_signal(u0: &ScalarField<f64>, theta: f64, signal: SignalInit) -> Result<ScalarField<f64>> {
    match signal {
        SignalInit::Power => u0.map(|x| x.powf(theta)),
        SignalInit::Mean => {
            let u_bar = integrate(u0) / u0.grid().measure();
            Ok(ScalarField::constant(*u0.grid(), u_bar.powf(theta)))
        }
        SignalInit::Zero => Ok(ScalarField::zeros(*u0.grid())),
    }
}
