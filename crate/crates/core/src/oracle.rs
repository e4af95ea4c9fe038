//! Exact Neumann heat semigroup on boxes via the cell-centered cosine basis.
//!
//! Mode `k` along an axis with `N` cells is `cos(kπ(i + ½)/N)`, i.e. the
//! continuum eigenfunction `cos(kπx/L)` sampled at cell centers. The transform
//! is a direct O(N²) sum per axis.

use crate::error::{KsError, Result};
use crate::grid::{Grid, ScalarField};
use crate::scalar::Real;

/// Coefficients of a field in the tensor cosine basis, laid out like cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineSpectrum<T> {
    grid: Grid<T>,
    coefficients: Vec<T>,
}

impl<T: Real> CosineSpectrum<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// Coefficient of mode `(kx, ky)`.
    pub fn mode(&self, kx: usize, ky: usize) -> T {
        self.coefficients[self.grid.index(kx, ky)]
    }

    /// `Σ_a (k_a π / L_a)²` for every mode, in coefficient order.
    pub fn eigenvalues(&self) -> Vec<T> {
        mode_eigenvalues(&self.grid)
    }
}

fn mode_eigenvalues<T: Real>(grid: &Grid<T>) -> Vec<T> {
    let nx = grid.cells()[0];
    (0..grid.cell_count())
        .map(|idx| {
            let kx = idx % nx;
            let ky = idx / nx;
            let ax = T::from_usize_lossy(kx) * T::PI() / grid.lengths()[0];
            let mut lam = ax * ax;
            if grid.dim() == 2 {
                let ay = T::from_usize_lossy(ky) * T::PI() / grid.lengths()[1];
                lam += ay * ay;
            }
            lam
        })
        .collect()
}

/// `table[k * n + i] = cos(kπ(i + ½)/n)`.
fn cosine_table<T: Real>(n: usize) -> Vec<T> {
    let nf = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let mut table = Vec::with_capacity(n * n);
    for k in 0..n {
        for i in 0..n {
            let arg = T::PI() * T::from_usize_lossy(k) * (T::from_usize_lossy(i) + half) / nf;
            table.push(arg.cos());
        }
    }
    table
}

/// Applies the 1D analysis (`forward`) or synthesis transform along `axis`.
fn transform_axis<T: Real>(grid: &Grid<T>, data: &mut [T], axis: usize, forward: bool) {
    let nx = grid.cells()[0];
    let ny = if grid.dim() == 2 { grid.cells()[1] } else { 1 };
    let (n, lines, stride, line_step) = if axis == 0 { (nx, ny, 1, nx) } else { (ny, nx, nx, 1) };
    let table = cosine_table::<T>(n);
    let nf = T::from_usize_lossy(n);
    let mut input = vec![T::zero(); n];
    let mut output = vec![T::zero(); n];
    for l in 0..lines {
        let base = l * line_step;
        for (k, slot) in input.iter_mut().enumerate() {
            *slot = data[base + k * stride];
        }
        if forward {
            for (k, out) in output.iter_mut().enumerate() {
                let row = &table[k * n..(k + 1) * n];
                let mut s = T::zero();
                for (c, x) in row.iter().zip(&input) {
                    s += *c * *x;
                }
                let w = if k == 0 { T::one() } else { T::lit(2.0) };
                *out = w * s / nf;
            }
        } else {
            for (i, out) in output.iter_mut().enumerate() {
                let mut s = T::zero();
                for (k, c) in input.iter().enumerate() {
                    s += *c * table[k * n + i];
                }
                *out = s;
            }
        }
        for (k, &v) in output.iter().enumerate() {
            data[base + k * stride] = v;
        }
    }
}

pub fn to_spectrum<T: Real>(f: &ScalarField<T>) -> CosineSpectrum<T> {
    let grid = *f.grid();
    let mut data = f.values().to_vec();
    for axis in 0..grid.dim() {
        transform_axis(&grid, &mut data, axis, true);
    }
    CosineSpectrum {
        grid,
        coefficients: data,
    }
}

pub fn from_spectrum<T: Real>(s: &CosineSpectrum<T>) -> Result<ScalarField<T>> {
    let grid = s.grid;
    let mut data = s.coefficients.clone();
    for axis in 0..grid.dim() {
        transform_axis(&grid, &mut data, axis, false);
    }
    ScalarField::new(grid, data)
}

/// `e^{tΔ} f` with homogeneous Neumann conditions.
pub fn heat_semigroup_apply<T: Real>(f: &ScalarField<T>, t: T) -> Result<ScalarField<T>> {
    check_time(t)?;
    if t == T::zero() {
        return Ok(f.clone());
    }
    let mut spec = to_spectrum(f);
    for (c, lam) in spec.coefficients.iter_mut().zip(mode_eigenvalues(f.grid())) {
        *c *= (-t * lam).exp();
    }
    from_spectrum(&spec)
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(KsError::ParameterOutOfRange {
            name: "t",
            value: t.as_f64(),
            reason: "time must be finite and >= 0",
        });
    }
    Ok(())
}

/// `(1 - (1 - e^{-x})/x)`, accurate for small `x`.
fn one_minus_phi1<T: Real>(x: T) -> T {
    if x < T::lit(1e-2) {
        // x/2 - x²/6 + x³/24 - x⁴/120 + x⁵/720
        let c = [1.0 / 2.0, -1.0 / 6.0, 1.0 / 24.0, -1.0 / 120.0, 1.0 / 720.0];
        let mut acc = T::zero();
        for &ci in c.iter().rev() {
            acc = acc * x + T::lit(ci);
        }
        acc * x
    } else {
        T::one() + (-x).exp_m1() / x
    }
}

/// Solution at time `t` of `v_t = Δv - v + g` from `v(0) = v0`, where the
/// source `g` is known at sample times and interpolated linearly between them.
///
/// Each mode is integrated exactly against the piecewise-linear source, so the
/// only error is the interpolation error of `g`.
pub fn duhamel_linear_v<T: Real>(
    v0: &ScalarField<T>,
    source_samples: &[(T, ScalarField<T>)],
    t: T,
) -> Result<ScalarField<T>> {
    check_time(t)?;
    let grid = *v0.grid();
    let coverage = |reason: String| KsError::InsufficientCoverage { t: t.as_f64(), reason };
    if source_samples.is_empty() {
        return Err(coverage("no samples".into()));
    }
    for w in source_samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(coverage("sample times must increase strictly".into()));
        }
    }
    if source_samples.iter().any(|(_, g)| g.grid() != &grid) {
        return Err(KsError::GridMismatch);
    }
    let first = source_samples[0].0;
    let last = source_samples[source_samples.len() - 1].0;
    if first > T::zero() {
        return Err(coverage(format!("first sample at {}", first.as_f64())));
    }
    if last < t {
        return Err(coverage(format!("last sample at {}", last.as_f64())));
    }

    let lambdas = mode_eigenvalues(&grid);
    let mu: Vec<T> = lambdas.iter().map(|&l| T::one() + l).collect();
    let mut acc: Vec<T> = to_spectrum(v0)
        .coefficients
        .iter()
        .zip(&mu)
        .map(|(&c, &m)| c * (-m * t).exp())
        .collect();
    if t == T::zero() {
        return from_spectrum(&CosineSpectrum { grid, coefficients: acc });
    }

    let spectra: Vec<(T, Vec<T>)> = source_samples
        .iter()
        .map(|(s, g)| (*s, to_spectrum(g).coefficients))
        .collect();
    let lerp = |a: &(T, Vec<T>), b: &(T, Vec<T>), s: T| -> Vec<T> {
        let w = (s - a.0) / (b.0 - a.0);
        a.1.iter().zip(&b.1).map(|(&x, &y)| x + w * (y - x)).collect()
    };

    for pair in spectra.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if hi.0 <= T::zero() || lo.0 >= t {
            continue;
        }
        let a = lo.0.max(T::zero());
        let b = hi.0.min(t);
        if !(b > a) {
            continue;
        }
        let ga = if a == lo.0 { lo.1.clone() } else { lerp(lo, hi, a) };
        let gb = if b == hi.0 { hi.1.clone() } else { lerp(lo, hi, b) };
        let len = b - a;
        for k in 0..acc.len() {
            let m = mu[k];
            let x = m * len;
            let e_b = (-m * (t - b)).exp();
            let i0 = e_b * (-(-x).exp_m1()) / m;
            let i1 = e_b / m * one_minus_phi1(x);
            acc[k] += (i0 - i1) * ga[k] + i1 * gb[k];
        }
    }
    from_spectrum(&CosineSpectrum { grid, coefficients: acc })
}
