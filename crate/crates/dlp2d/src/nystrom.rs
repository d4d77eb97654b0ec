//! Trapezoid-rule Nyström assembly of the scaled double-layer operator,
//! interior evaluation of the layer potential, and the geometry-resolution
//! metric.
//!
//! Conventions: counterclockwise boundary, outward normal, kernel
//! `K(x,y) = (1/2π)·n_y·(y−x)/|y−x|²` with boundary limit `κ/(4π)`. Under
//! these the discrete row-sum identity is `D_N·1 → +1`, the interior value
//! of the unit-density layer potential is `+1`, and the principal value on
//! the boundary is `+½`, so the resolution metric `‖½·D_N·1 − ½‖/‖1‖`
//! vanishes as the grid resolves the curve. The scaled system solved
//! everywhere else in the crate is `(I + D_N)η = f` with `f = 2g`.

use crate::geometry::BoundaryGrid;
use crate::Real;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Double-layer kernel `K(x,y) = (1/2π)·n_y·(y−x)/|y−x|²`.
///
/// Undefined for `x = y`; use [`diagonal_limit`] for the on-diagonal value.
#[inline]
pub fn kernel<T: Real>(x: (T, T), y: (T, T), normal_y: (T, T)) -> T {
    let dx = y.0 - x.0;
    let dy = y.1 - x.1;
    let r2 = dx * dx + dy * dy;
    (normal_y.0 * dx + normal_y.1 * dy) / (T::of(2.0) * T::PI() * r2)
}

/// Limiting kernel value `κ/(4π)` as the source approaches the target along
/// the curve.
#[inline]
pub fn diagonal_limit<T: Real>(kappa: T) -> T {
    kappa / (T::of(4.0) * T::PI())
}

/// The dense `N×N` scaled double-layer matrix `D_N` together with the grid
/// it discretizes. Entry `(j,k)` is `2·K(x_j, x_k)·|Δs_k|` off the diagonal
/// and `2·(κ_j/4π)·|Δs_j|` on it. Immutable after construction.
#[derive(Debug, Clone)]
pub struct DenseOperator<T> {
    pub matrix: Array2<T>,
    pub grid: BoundaryGrid<T>,
}

impl<T: Real> DenseOperator<T> {
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// `D·v`.
    pub fn matvec(&self, v: &Array1<T>) -> Array1<T> {
        self.matrix.dot(v)
    }

    /// `(I + D)·v`.
    pub fn apply_full(&self, v: &Array1<T>) -> Array1<T> {
        let mut w = self.matrix.dot(v);
        w += v;
        w
    }
}

/// Assembles `D_N` for `grid`; `O(N²)` work and storage.
pub fn assemble<T: Real>(grid: &BoundaryGrid<T>) -> DenseOperator<T> {
    let n = grid.len();
    let two_pi_over_n = T::of(2.0) * T::PI() / T::of(n as f64);
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        let xj = grid.point(j);
        let mut row = m.row_mut(j);
        for k in 0..n {
            let w = T::of(2.0) * grid.jacobian[k] * two_pi_over_n;
            row[k] = if j == k {
                diagonal_limit(grid.curvature[j]) * w
            } else {
                kernel(xj, grid.point(k), (grid.normal_x[k], grid.normal_y[k])) * w
            };
        }
    }
    DenseOperator {
        matrix: m,
        grid: grid.clone(),
    }
}

/// `‖𝒟_N·1 − ½·1‖₂ / ‖1‖₂` with `𝒟_N = ½·D_N`: the RMS defect of the
/// unit-density row sums against the boundary principal value `+½`. Tends
/// to zero as the grid resolves the curve; the paper-scale anchor values
/// (e.g. 7.2e−4 for the four-lobed flower at N = 2048) use this norm.
pub fn resolution_metric<T: Real>(op: &DenseOperator<T>) -> T {
    let n = op.len();
    let ones = Array1::from_elem(n, T::one());
    let d1 = op.matvec(&ones);
    let half = T::of(0.5);
    let mut acc = T::zero();
    for j in 0..n {
        let defect = half * d1[j] - half;
        acc += defect * defect;
    }
    (acc / T::of(n as f64)).sqrt()
}

/// Evaluates the (unscaled) double-layer potential of `density` at interior
/// targets: `u(t) = Σ_k K(t, x_k)·η_k·|Δs_k|`.
///
/// No near-singular correction is applied; targets close to the boundary
/// give inaccurate values.
pub fn eval_interior<T: Real>(
    grid: &BoundaryGrid<T>,
    density: &Array1<T>,
    targets: &[(T, T)],
) -> Array1<T> {
    let n = grid.len();
    assert_eq!(density.len(), n);
    let mut out = Array1::zeros(targets.len());
    for (ti, &t) in targets.iter().enumerate() {
        let mut acc = T::zero();
        for k in 0..n {
            acc += kernel(t, grid.point(k), (grid.normal_x[k], grid.normal_y[k]))
                * density[k]
                * grid.weight(k);
        }
        out[ti] = acc;
    }
    out
}

/// Boundary data `f = 2g` together with a description of its origin.
#[derive(Debug, Clone)]
pub struct BoundaryData<T> {
    pub values: Array1<T>,
    pub source: String,
}

/// Reference harmonic data `g(x,y) = x² − y² + 0.5·x`.
pub fn boundary_data_harmonic<T: Real>(grid: &BoundaryGrid<T>) -> BoundaryData<T> {
    let values = Array1::from_iter((0..grid.len()).map(|j| {
        let (x, y) = grid.point(j);
        T::of(2.0) * (x * x - y * y + T::of(0.5) * x)
    }));
    BoundaryData {
        values,
        source: "harmonic x^2-y^2+0.5x".into(),
    }
}

/// Reference harmonic `g` evaluated at a point (for checking interior
/// solutions).
pub fn harmonic_reference<T: Real>(p: (T, T)) -> T {
    p.0 * p.0 - p.1 * p.1 + T::of(0.5) * p.0
}

/// I.i.d. standard-normal data from a seeded, reproducible generator.
pub fn boundary_data_random<T: Real>(grid: &BoundaryGrid<T>, seed: u64) -> BoundaryData<T>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values = Array1::from_iter((0..grid.len()).map(|_| StandardNormal.sample(&mut rng)));
    BoundaryData {
        values,
        source: format!("random normal seed {seed}"),
    }
}

/// Trace of the logarithmic potential of a unit charge:
/// `f = 2·log|x − source|`. Harmonic boundary data whose parametric mode
/// content decays geometrically; with the charge at the origin this is the
/// data used for the aspect-ratio sweep.
pub fn boundary_data_log_trace<T: Real>(grid: &BoundaryGrid<T>, source: (T, T)) -> BoundaryData<T> {
    let values = Array1::from_iter((0..grid.len()).map(|j| {
        let (x, y) = grid.point(j);
        let dx = x - source.0;
        let dy = y - source.1;
        T::of(2.0) * (dx * dx + dy * dy).sqrt().ln()
    }));
    BoundaryData {
        values,
        source: format!("log trace of charge at ({}, {})", source.0, source.1),
    }
}

/// Harmonic data of `count` seeded standard-normal charges equispaced on the
/// circle of given radius (which must enclose the curve).
pub fn boundary_data_charges<T: Real>(
    grid: &BoundaryGrid<T>,
    count: usize,
    radius: T,
    seed: u64,
) -> BoundaryData<T>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let strengths: Vec<T> = (0..count).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut values = Array1::zeros(grid.len());
    for (c, &q) in strengths.iter().enumerate() {
        let ang = T::of(2.0) * T::PI() * T::of(c as f64) / T::of(count as f64) + T::of(0.1);
        let sx = radius * ang.cos();
        let sy = radius * ang.sin();
        for j in 0..grid.len() {
            let (x, y) = grid.point(j);
            let dx = x - sx;
            let dy = y - sy;
            values[j] += T::of(2.0) * q * (dx * dx + dy * dy).sqrt().ln();
        }
    }
    BoundaryData {
        values,
        source: format!("{count} random charges on radius {radius}, seed {seed}"),
    }
}
