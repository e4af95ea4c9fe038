//! Cell-centered box meshes and the conservative difference operators on them.
//!
//! Cells are stored x-fastest: cell `(i, j)` lives at `i + nx * j`. Faces normal
//! to axis 0 are indexed `i + (nx + 1) * j` with `i in 0..=nx`, faces normal to
//! axis 1 are indexed `i + nx * j` with `j in 0..=ny`. The first and last face
//! along each axis lie on the boundary and always carry zero, which is how the
//! homogeneous Neumann condition enters every operator.

use crate::error::{KsError, Result};
use crate::scalar::Real;

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    lengths: [T; 2],
    cells: [usize; 2],
    spacing: [T; 2],
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, lengths: &[T], cells: &[usize]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(KsError::DimensionOutOfRange(dim));
        }
        if lengths.len() != dim {
            return Err(KsError::LengthMismatch {
                expected: dim,
                got: lengths.len(),
            });
        }
        if cells.len() != dim {
            return Err(KsError::LengthMismatch {
                expected: dim,
                got: cells.len(),
            });
        }
        let mut grid = Grid {
            dim,
            lengths: [T::one(); 2],
            cells: [1; 2],
            spacing: [T::one(); 2],
        };
        for axis in 0..dim {
            let length = lengths[axis];
            if !(length > T::zero()) || !length.is_finite() {
                return Err(KsError::NonPositiveLength {
                    axis,
                    length: length.as_f64(),
                });
            }
            if cells[axis] < MIN_CELLS {
                return Err(KsError::TooFewCells {
                    axis,
                    cells: cells[axis],
                });
            }
            grid.lengths[axis] = length;
            grid.cells[axis] = cells[axis];
            grid.spacing[axis] = length / T::from_usize_lossy(cells[axis]);
        }
        Ok(grid)
    }

    /// Unit interval `(0, 1)` with `n` cells.
    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::new(1, &[T::one()], &[n])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn lengths(&self) -> &[T] {
        &self.lengths[..self.dim]
    }

    #[inline]
    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    #[inline]
    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim]
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    /// `|Ω|`, the product of the axis lengths.
    pub fn measure(&self) -> T {
        self.lengths().iter().fold(T::one(), |acc, &l| acc * l)
    }

    /// Quadrature weight of one cell.
    pub fn cell_volume(&self) -> T {
        self.spacing().iter().fold(T::one(), |acc, &h| acc * h)
    }

    pub fn min_spacing(&self) -> T {
        self.spacing()
            .iter()
            .fold(T::infinity(), |acc, &h| acc.min(h))
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    /// Cell center coordinates; the second entry is zero in 1D.
    pub fn cell_center(&self, idx: usize) -> [T; 2] {
        let i = idx % self.cells[0];
        let j = idx / self.cells[0];
        let half = T::lit(0.5);
        let mut x = [T::zero(); 2];
        x[0] = (T::from_usize_lossy(i) + half) * self.spacing[0];
        if self.dim == 2 {
            x[1] = (T::from_usize_lossy(j) + half) * self.spacing[1];
        }
        x
    }

    /// Number of faces normal to `axis`, boundary faces included.
    pub fn face_count(&self, axis: usize) -> usize {
        match axis {
            0 => (self.cells[0] + 1) * self.cells[1],
            1 if self.dim == 2 => self.cells[0] * (self.cells[1] + 1),
            _ => 0,
        }
    }

    /// Position of face `f` along its own axis (0 and `N` are the boundary).
    #[inline]
    pub fn face_position(&self, axis: usize, f: usize) -> (usize, usize) {
        if axis == 0 {
            let stride = self.cells[0] + 1;
            (f % stride, f / stride)
        } else {
            (f % self.cells[0], f / self.cells[0])
        }
    }

    pub fn is_boundary_face(&self, axis: usize, f: usize) -> bool {
        let (i, j) = self.face_position(axis, f);
        if axis == 0 {
            i == 0 || i == self.cells[0]
        } else {
            j == 0 || j == self.cells[1]
        }
    }

    /// Face center coordinates.
    pub fn face_center(&self, axis: usize, f: usize) -> [T; 2] {
        let (i, j) = self.face_position(axis, f);
        let half = T::lit(0.5);
        let mut x = [T::zero(); 2];
        if axis == 0 {
            x[0] = T::from_usize_lossy(i) * self.spacing[0];
            if self.dim == 2 {
                x[1] = (T::from_usize_lossy(j) + half) * self.spacing[1];
            }
        } else {
            x[0] = (T::from_usize_lossy(i) + half) * self.spacing[0];
            x[1] = T::from_usize_lossy(j) * self.spacing[1];
        }
        x
    }

    /// Cells on either side of an interior face, `(left, right)` along `axis`.
    #[inline]
    pub fn face_neighbors(&self, axis: usize, f: usize) -> (usize, usize) {
        let (i, j) = self.face_position(axis, f);
        if axis == 0 {
            (self.index(i - 1, j), self.index(i, j))
        } else {
            (self.index(i, j - 1), self.index(i, j))
        }
    }
}

/// One real per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(KsError::LengthMismatch {
                expected: grid.cell_count(),
                got: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(KsError::NonFinite(idx));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.cell_count());
        Self { grid, values }
    }

    pub fn constant(grid: Grid<T>, c: T) -> Self {
        Self {
            values: vec![c; grid.cell_count()],
            grid,
        }
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Grid<T>, f: impl Fn([T; 2]) -> T) -> Result<Self> {
        let values = (0..grid.cell_count())
            .map(|idx| f(grid.cell_center(idx)))
            .collect();
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |acc, &v| acc.min(v))
    }

    /// `max |self - other|`.
    pub fn linf_distance(&self, other: &Self) -> Result<T> {
        if self.grid != other.grid {
            return Err(KsError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }

    /// Cellwise map; the result must stay finite.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: T) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|&v| v * c).collect())
    }
}

/// Face-centered vector field, one array of normal components per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    grid: Grid<T>,
    faces: [Vec<T>; 2],
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self {
            faces: [
                vec![T::zero(); grid.face_count(0)],
                vec![T::zero(); grid.face_count(1)],
            ],
            grid,
        }
    }

    /// Builds a field from per-axis face arrays, checking the boundary and finiteness invariants.
    pub fn from_axes(grid: Grid<T>, axes: Vec<Vec<T>>) -> Result<Self> {
        if axes.len() != grid.dim() {
            return Err(KsError::LengthMismatch {
                expected: grid.dim(),
                got: axes.len(),
            });
        }
        let mut field = Self::zeros(grid);
        for (axis, values) in axes.into_iter().enumerate() {
            if values.len() != grid.face_count(axis) {
                return Err(KsError::LengthMismatch {
                    expected: grid.face_count(axis),
                    got: values.len(),
                });
            }
            for (f, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(KsError::NonFinite(f));
                }
                if grid.is_boundary_face(axis, f) && v != T::zero() {
                    return Err(KsError::BoundaryFaceNonzero { axis, face: f });
                }
            }
            field.faces[axis] = values;
        }
        Ok(field)
    }

    pub(crate) fn from_arrays_unchecked(grid: Grid<T>, faces: [Vec<T>; 2]) -> Self {
        Self { grid, faces }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn axis(&self, axis: usize) -> &[T] {
        &self.faces[axis]
    }

    pub fn max_abs(&self) -> T {
        self.faces
            .iter()
            .flat_map(|a| a.iter())
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Cell-centered magnitude `|F|`, each component averaged from its two faces.
    pub fn cell_magnitude(&self) -> ScalarField<T> {
        let grid = self.grid;
        let half = T::lit(0.5);
        let nx = grid.cells[0];
        let mut out = vec![T::zero(); grid.cell_count()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let i = idx % nx;
            let j = idx / nx;
            let gx = half * (self.faces[0][i + (nx + 1) * j] + self.faces[0][i + 1 + (nx + 1) * j]);
            let mut sq = gx * gx;
            if grid.dim == 2 {
                let gy = half * (self.faces[1][i + nx * j] + self.faces[1][i + nx * (j + 1)]);
                sq += gy * gy;
            }
            *slot = sq.sqrt();
        }
        ScalarField::from_vec_unchecked(grid, out)
    }
}

/// Midpoint quadrature `∫_Ω f`.
pub fn integrate<T: Real>(f: &ScalarField<T>) -> T {
    let mut sum = T::zero();
    for &v in f.values() {
        sum += v;
    }
    sum * f.grid().cell_volume()
}

/// Quadrature inner product `∫_Ω f g`.
pub fn inner<T: Real>(f: &ScalarField<T>, g: &ScalarField<T>) -> Result<T> {
    if f.grid() != g.grid() {
        return Err(KsError::GridMismatch);
    }
    let mut sum = T::zero();
    for (&a, &b) in f.values().iter().zip(g.values()) {
        sum += a * b;
    }
    Ok(sum * f.grid().cell_volume())
}

/// Discrete `L^q` norm; `q = ∞` gives the max norm.
pub fn lp_norm<T: Real>(f: &ScalarField<T>, q: T) -> Result<T> {
    if q.is_nan() || q < T::one() {
        return Err(KsError::InvalidNormExponent(q.as_f64()));
    }
    if q.is_infinite() {
        return Ok(f.max_abs());
    }
    if q == T::one() {
        let s: T = f.values().iter().map(|v| v.abs()).sum();
        return Ok(s * f.grid().cell_volume());
    }
    // Scale by the max to keep |f|^q in range for large q.
    let scale = f.max_abs();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let mut sum = T::zero();
    for &v in f.values() {
        sum += (v.abs() / scale).powf(q);
    }
    Ok(scale * (sum * f.grid().cell_volume()).powf(q.recip()))
}

/// Face differences `(f_right - f_left) / h`, zero on boundary faces.
pub fn gradient_faces<T: Real>(f: &ScalarField<T>) -> VectorField<T> {
    let grid = *f.grid();
    let mut faces = [
        vec![T::zero(); grid.face_count(0)],
        vec![T::zero(); grid.face_count(1)],
    ];
    gradient_into(&grid, f.values(), &mut faces);
    VectorField::from_arrays_unchecked(grid, faces)
}

pub(crate) fn gradient_into<T: Real>(grid: &Grid<T>, values: &[T], faces: &mut [Vec<T>; 2]) {
    let nx = grid.cells[0];
    let ny = grid.cells[1];
    let inv_hx = grid.spacing[0].recip();
    for j in 0..ny {
        let row = &values[nx * j..nx * (j + 1)];
        let out = &mut faces[0][(nx + 1) * j..(nx + 1) * (j + 1)];
        out[0] = T::zero();
        out[nx] = T::zero();
        for i in 1..nx {
            out[i] = (row[i] - row[i - 1]) * inv_hx;
        }
    }
    if grid.dim == 2 {
        let inv_hy = grid.spacing[1].recip();
        let out = &mut faces[1];
        for i in 0..nx {
            out[i] = T::zero();
            out[i + nx * ny] = T::zero();
        }
        for j in 1..ny {
            for i in 0..nx {
                out[i + nx * j] = (values[i + nx * j] - values[i + nx * (j - 1)]) * inv_hy;
            }
        }
    }
}

/// Cellwise `Σ_axes (F_right - F_left) / h`.
pub fn divergence_cells<T: Real>(field: &VectorField<T>) -> ScalarField<T> {
    let grid = *field.grid();
    let mut out = vec![T::zero(); grid.cell_count()];
    divergence_into(&grid, &field.faces, &mut out);
    ScalarField::from_vec_unchecked(grid, out)
}

pub(crate) fn divergence_into<T: Real>(grid: &Grid<T>, faces: &[Vec<T>; 2], out: &mut [T]) {
    let nx = grid.cells[0];
    let ny = grid.cells[1];
    let inv_hx = grid.spacing[0].recip();
    for j in 0..ny {
        let fx = &faces[0][(nx + 1) * j..(nx + 1) * (j + 1)];
        for i in 0..nx {
            out[i + nx * j] = (fx[i + 1] - fx[i]) * inv_hx;
        }
    }
    if grid.dim == 2 {
        let inv_hy = grid.spacing[1].recip();
        let fy = &faces[1];
        for j in 0..ny {
            for i in 0..nx {
                out[i + nx * j] += (fy[i + nx * (j + 1)] - fy[i + nx * j]) * inv_hy;
            }
        }
    }
}

/// Neumann Laplacian, `divergence_cells(gradient_faces(f))`.
pub fn laplacian<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    divergence_cells(&gradient_faces(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn build_grid_examples() {
        let g = Grid::<f64>::new(1, &[1.0], &[256]).unwrap();
        assert_eq!(g.spacing(), &[1.0 / 256.0]);

        let g = Grid::<f64>::new(2, &[1.0, 2.0], &[64, 128]).unwrap();
        assert_eq!(g.spacing(), &[1.0 / 64.0, 1.0 / 64.0]);
        assert_eq!(g.measure(), 2.0);
        assert_eq!(g.cell_count(), 64 * 128);

        assert_eq!(
            Grid::<f64>::new(3, &[1.0, 1.0, 1.0], &[8, 8, 8]),
            Err(KsError::DimensionOutOfRange(3))
        );
        assert!(matches!(
            Grid::<f64>::new(1, &[0.0], &[8]),
            Err(KsError::NonPositiveLength { .. })
        ));
        assert!(matches!(
            Grid::<f64>::new(2, &[1.0, 1.0], &[8, 3]),
            Err(KsError::TooFewCells { axis: 1, cells: 3 })
        ));
    }

    #[test]
    fn integrate_constants_and_cosine() {
        let g = Grid::<f64>::unit_interval(32).unwrap();
        assert!((integrate(&ScalarField::constant(g, 2.5)) - 2.5).abs() < 1e-15);

        let g = Grid::<f64>::new(2, &[1.0, 2.0], &[16, 32]).unwrap();
        assert!((integrate(&ScalarField::constant(g, 3.0)) - 6.0).abs() < 1e-14);

        let g = Grid::<f64>::unit_interval(256).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x[0]).cos()).unwrap();
        assert!(integrate(&f).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_examples() {
        let g = Grid::<f64>::unit_interval(16).unwrap();
        let c = ScalarField::constant(g, 2.0);
        assert!((lp_norm(&c, 5.0).unwrap() - 2.0).abs() < 1e-14);

        let mut vals = vec![0.0; 16];
        vals[5] = 16.0;
        vals[2] = -3.0;
        let f = ScalarField::new(g, vals.clone()).unwrap();
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 16.0);

        vals[2] = 0.0;
        let f = ScalarField::new(g, vals).unwrap();
        assert!((lp_norm(&f, 1.0).unwrap() - 1.0).abs() < 1e-15);

        assert_eq!(lp_norm(&f, 0.5), Err(KsError::InvalidNormExponent(0.5)));
    }

    #[test]
    fn gradient_of_linear_and_quadratic() {
        let g = Grid::<f64>::unit_interval(32).unwrap();
        let c = ScalarField::constant(g, 7.0);
        assert_eq!(gradient_faces(&c).max_abs(), 0.0);

        let lin = ScalarField::from_fn(g, |x| x[0]).unwrap();
        let grad = gradient_faces(&lin);
        let faces = grad.axis(0);
        assert_eq!(faces[0], 0.0);
        assert_eq!(faces[32], 0.0);
        for &v in &faces[1..32] {
            assert!((v - 1.0).abs() < 1e-12);
        }

        let quad = ScalarField::from_fn(g, |x| x[0] * x[0]).unwrap();
        let grad = gradient_faces(&quad);
        for f in 1..32 {
            let xf = g.face_center(0, f)[0];
            assert!((grad.axis(0)[f] - 2.0 * xf).abs() < 1e-12);
        }
        let div = divergence_cells(&grad);
        for &v in &div.values()[1..31] {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn vector_field_rejects_nonzero_boundary() {
        let g = Grid::<f64>::unit_interval(4).unwrap();
        let err = VectorField::from_axes(g, vec![vec![1.0, 0.0, 0.0, 0.0, 0.0]]);
        assert_eq!(err, Err(KsError::BoundaryFaceNonzero { axis: 0, face: 0 }));
        let ok = VectorField::from_axes(g, vec![vec![0.0, 1.0, -2.0, 3.0, 0.0]]).unwrap();
        assert_eq!(integrate(&divergence_cells(&ok)), 0.0);
    }

    #[test]
    fn laplacian_cosine_second_order() {
        let mut errors = Vec::new();
        for n in [32usize, 64, 128] {
            let l = 2.0;
            let g = Grid::<f64>::new(1, &[l], &[n]).unwrap();
            let k = PI / l;
            let f = ScalarField::from_fn(g, |x| (k * x[0]).cos()).unwrap();
            let lap = laplacian(&f);
            let err = lap
                .values()
                .iter()
                .zip(f.values())
                .map(|(&a, &b)| (a + k * k * b).abs())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn laplacian_2d_eigenfield() {
        let g = Grid::<f64>::new(2, &[1.0, 2.0], &[64, 64]).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x[0]).cos() * (PI * x[1] / 2.0).cos()).unwrap();
        let lap = laplacian(&f);
        let exact = PI * PI * 1.25;
        let hx = g.spacing()[0];
        let hy = g.spacing()[1];
        let discrete = (2.0 / hx * (PI * hx / 2.0).sin()).powi(2)
            + (2.0 / hy * (PI * hy / 4.0).sin()).powi(2);
        for (&a, &b) in lap.values().iter().zip(f.values()) {
            assert!((a + discrete * b).abs() < 1e-9);
        }
        assert!((discrete - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn cell_magnitude_of_gradient() {
        let g = Grid::<f64>::unit_interval(8).unwrap();
        let lin = ScalarField::from_fn(g, |x| 3.0 * x[0]).unwrap();
        let mag = gradient_faces(&lin).cell_magnitude();
        // Interior cells see two interior faces, edge cells one boundary zero.
        assert!((mag.values()[3] - 3.0).abs() < 1e-12);
        assert!((mag.values()[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let g = Grid::<f32>::unit_interval(16).unwrap();
        let f = ScalarField::constant(g, 2.0f32);
        assert!((integrate(&f) - 2.0).abs() < 1e-6);
        assert!(laplacian(&f).max_abs() == 0.0);
    }

    fn grid_and_fields(count: usize) -> impl Strategy<Value = (Grid<f64>, Vec<Vec<f64>>)> {
        (1usize..=2, 4usize..=24, 4usize..=24, 0.5f64..3.0, 0.5f64..3.0).prop_flat_map(move |(dim, nx, ny, lx, ly)| {
            let grid = if dim == 1 {
                Grid::<f64>::new(1, &[lx], &[nx]).unwrap()
            } else {
                Grid::<f64>::new(2, &[lx, ly], &[nx, ny]).unwrap()
            };
            let cells = grid.cell_count();
            (Just(grid), proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, cells), count))
        })
    }

    proptest! {
        #[test]
        fn laplacian_conserves((grid, fs) in grid_and_fields(1)) {
            let f = ScalarField::new(grid, fs[0].clone()).unwrap();
            let total = integrate(&laplacian(&f)).abs();
            prop_assert!(total <= 1e-13 * f.max_abs() * grid.cell_count() as f64);
        }

        #[test]
        fn laplacian_self_adjoint((grid, fs) in grid_and_fields(2)) {
            let f = ScalarField::new(grid, fs[0].clone()).unwrap();
            let g = ScalarField::new(grid, fs[1].clone()).unwrap();
            let lhs = inner(&laplacian(&f), &g).unwrap();
            let rhs = inner(&f, &laplacian(&g)).unwrap();
            let scale = lp_norm(&f, 2.0).unwrap() * lp_norm(&g, 2.0).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn lp_norm_homogeneous((grid, fs) in grid_and_fields(1), c in 0.0f64..100.0, q in prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)]) {
            let f = ScalarField::new(grid, fs[0].clone()).unwrap();
            let scaled = lp_norm(&f.scaled(c), q).unwrap();
            let expected = c * lp_norm(&f, q).unwrap();
            prop_assert!((scaled - expected).abs() <= 1e-13 * expected.max(1e-300));
        }

        #[test]
        fn divergence_of_any_admissible_field_integrates_to_zero((grid, fs) in grid_and_fields(1)) {
            // Any cell field's gradient is an admissible face field.
            let f = ScalarField::new(grid, fs[0].clone()).unwrap();
            let div = divergence_cells(&gradient_faces(&f));
            prop_assert!(integrate(&div).abs() <= 1e-13 * f.max_abs() * grid.cell_count() as f64);
        }
    }
}
