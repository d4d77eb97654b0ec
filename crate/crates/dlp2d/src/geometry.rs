//! Parametric closed boundary curves and their pointwise differential
//! quantities.
//!
//! All curves are of the form `x(θ) = (c·r(θ)·cos θ, r(θ)·sin θ)` on the
//! equispaced parameter grid `θ_j = 2πj/N`, traced counterclockwise with the
//! outward normal `n = (y′, −x′)/|x′|`. Normals, curvature and the Jacobian
//! `|x′(θ)|` come from closed-form derivatives of `r(θ)`, except for
//! coarsened grids where they are recomputed by spectral differentiation of
//! the coarsened coordinates.

use crate::transfer;
use crate::{Error, Real, Result};
use ndarray::Array1;

/// Parametric description of a boundary curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveSpec<T> {
    /// `x(θ) = (a·cos θ, sin θ)` with aspect ratio `a ≥ 1`.
    Ellipse { aspect: T },
    /// `r(θ) = 0.5·(cos²θ + 9 sin²θ)^½ + 0.07·cos 12θ`, `c = 0.85`.
    Simple,
    /// `r(θ) = 1 + 0.5·cos 3θ + 0.05·cos 30θ`.
    Moderate,
    /// `r(θ) = 1 + 0.98·cos kθ` with `k ≥ 2` lobes.
    Flower { lobes: u32 },
}

impl<T: Real> CurveSpec<T> {
    fn validate(&self) -> Result<()> {
        match *self {
            CurveSpec::Ellipse { aspect } => {
                if !(aspect >= T::one()) {
                    return Err(Error::InvalidCurve(format!(
                        "ellipse aspect must be >= 1, got {aspect}"
                    )));
                }
            }
            CurveSpec::Flower { lobes } => {
                if lobes < 2 {
                    return Err(Error::InvalidCurve(format!(
                        "flower needs at least 2 lobes, got {lobes}"
                    )));
                }
            }
            CurveSpec::Simple | CurveSpec::Moderate => {}
        }
        Ok(())
    }

    /// Factor `c` multiplying the x-coordinate.
    fn x_scale(&self) -> T {
        match *self {
            CurveSpec::Ellipse { aspect } => aspect,
            CurveSpec::Simple => T::of(0.85),
            CurveSpec::Moderate | CurveSpec::Flower { .. } => T::one(),
        }
    }

    /// `(r, r′, r″)` at parameter `theta`.
    fn radius(&self, theta: T) -> (T, T, T) {
        match *self {
            CurveSpec::Ellipse { .. } => (T::one(), T::zero(), T::zero()),
            CurveSpec::Simple => {
                // r = 0.5·sqrt(5 − 4 cos 2θ) + 0.07 cos 12θ
                let two = T::of(2.0);
                let u = T::of(5.0) - T::of(4.0) * (two * theta).cos();
                let su = u.sqrt();
                let s2 = (two * theta).sin();
                let c2 = (two * theta).cos();
                let r = T::of(0.5) * su + T::of(0.07) * (T::of(12.0) * theta).cos();
                let rp = two * s2 / su - T::of(0.84) * (T::of(12.0) * theta).sin();
                let rpp = T::of(4.0) * c2 / su - T::of(8.0) * s2 * s2 / (u * su)
                    - T::of(10.08) * (T::of(12.0) * theta).cos();
                (r, rp, rpp)
            }
            CurveSpec::Moderate => {
                let r = T::one()
                    + T::of(0.5) * (T::of(3.0) * theta).cos()
                    + T::of(0.05) * (T::of(30.0) * theta).cos();
                let rp = -T::of(1.5) * (T::of(3.0) * theta).sin()
                    - T::of(1.5) * (T::of(30.0) * theta).sin();
                let rpp = -T::of(4.5) * (T::of(3.0) * theta).cos()
                    - T::of(45.0) * (T::of(30.0) * theta).cos();
                (r, rp, rpp)
            }
            CurveSpec::Flower { lobes } => {
                let k = T::of(lobes as f64);
                let a = T::of(0.98);
                let r = T::one() + a * (k * theta).cos();
                let rp = -a * k * (k * theta).sin();
                let rpp = -a * k * k * (k * theta).cos();
                (r, rp, rpp)
            }
        }
    }
}

/// A discretized closed curve: positions, outward unit normals, signed
/// curvature and the parametric Jacobian `|x′(θ)|` at `N` equispaced
/// parameter values. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BoundaryGrid<T> {
    pub spec: CurveSpec<T>,
    pub theta: Array1<T>,
    pub x: Array1<T>,
    pub y: Array1<T>,
    pub normal_x: Array1<T>,
    pub normal_y: Array1<T>,
    pub curvature: Array1<T>,
    pub jacobian: Array1<T>,
}

impl<T: Real> BoundaryGrid<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Position of point `j`.
    pub fn point(&self, j: usize) -> (T, T) {
        (self.x[j], self.y[j])
    }

    /// Quadrature weight `|Δs_j| = |x′(θ_j)|·2π/N`.
    pub fn weight(&self, j: usize) -> T {
        self.jacobian[j] * T::of(2.0) * T::PI() / T::of(self.len() as f64)
    }

    /// Signed area `½∮(x dy − y dx)`; positive for counterclockwise curves.
    pub fn signed_area(&self) -> T {
        let n = self.len();
        let h = T::of(2.0) * T::PI() / T::of(n as f64);
        let mut acc = T::zero();
        for j in 0..n {
            // recover (x', y') from the normal: n = (y', -x')/|x'|
            let xp = -self.normal_y[j] * self.jacobian[j];
            let yp = self.normal_x[j] * self.jacobian[j];
            acc += self.x[j] * yp - self.y[j] * xp;
        }
        T::of(0.5) * acc * h
    }

    /// Trapezoid value of `∮ κ ds / 2π`; tends to 1 for a simple closed
    /// counterclockwise curve once the grid resolves the curvature.
    pub fn turning_number(&self) -> T {
        let n = self.len();
        let h = T::of(2.0) * T::PI() / T::of(n as f64);
        let mut acc = T::zero();
        for j in 0..n {
            acc += self.curvature[j] * self.jacobian[j];
        }
        acc * h / (T::of(2.0) * T::PI())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidGridSize {
            n,
            reason: "need at least 8 points".into(),
        });
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidGridSize {
            n,
            reason: "point count must be a power of 2".into(),
        });
    }
    Ok(())
}

/// Discretizes `spec` at `n` equispaced parameters with analytically
/// computed normals, curvature and Jacobian.
pub fn build_grid<T: Real>(spec: CurveSpec<T>, n: usize) -> Result<BoundaryGrid<T>> {
    spec.validate()?;
    check_size(n)?;
    let c = spec.x_scale();
    let mut theta = Array1::zeros(n);
    let mut x = Array1::zeros(n);
    let mut y = Array1::zeros(n);
    let mut xp = Array1::zeros(n);
    let mut yp = Array1::zeros(n);
    let mut xpp = Array1::zeros(n);
    let mut ypp = Array1::zeros(n);
    let two_pi = T::of(2.0) * T::PI();
    for j in 0..n {
        let t = two_pi * T::of(j as f64) / T::of(n as f64);
        theta[j] = t;
        let (r, rp, rpp) = spec.radius(t);
        let (ct, st) = (t.cos(), t.sin());
        x[j] = c * r * ct;
        y[j] = r * st;
        xp[j] = c * (rp * ct - r * st);
        yp[j] = rp * st + r * ct;
        xpp[j] = c * (rpp * ct - T::of(2.0) * rp * st - r * ct);
        ypp[j] = rpp * st + T::of(2.0) * rp * ct - r * st;
    }
    Ok(finish_grid(spec, theta, x, y, xp, yp, xpp, ypp))
}

#[allow(clippy::too_many_arguments)]
fn finish_grid<T: Real>(
    spec: CurveSpec<T>,
    theta: Array1<T>,
    x: Array1<T>,
    y: Array1<T>,
    xp: Array1<T>,
    yp: Array1<T>,
    xpp: Array1<T>,
    ypp: Array1<T>,
) -> BoundaryGrid<T> {
    let n = x.len();
    let mut normal_x = Array1::zeros(n);
    let mut normal_y = Array1::zeros(n);
    let mut curvature = Array1::zeros(n);
    let mut jacobian = Array1::zeros(n);
    for j in 0..n {
        let jac = (xp[j] * xp[j] + yp[j] * yp[j]).sqrt();
        jacobian[j] = jac;
        normal_x[j] = yp[j] / jac;
        normal_y[j] = -xp[j] / jac;
        curvature[j] = (xp[j] * ypp[j] - yp[j] * xpp[j]) / (jac * jac * jac);
    }
    BoundaryGrid {
        spec,
        theta,
        x,
        y,
        normal_x,
        normal_y,
        curvature,
        jacobian,
    }
}

/// Coarsens `grid` to `m` points by spectral restriction of the coordinate
/// samples; normals, curvature and Jacobian are recomputed by spectral
/// differentiation of the coarse coordinates so they describe the coarse
/// curve itself.
pub fn coarsen_geometry<T: Real>(grid: &BoundaryGrid<T>, m: usize) -> Result<BoundaryGrid<T>> {
    let n = grid.len();
    if m == n {
        return Ok(grid.clone());
    }
    if m < 8 {
        return Err(Error::InvalidCoarsening {
            n,
            m,
            reason: "coarse grid needs at least 8 points".into(),
        });
    }
    if m > n || n % m != 0 || !(n / m).is_power_of_two() {
        return Err(Error::InvalidCoarsening {
            n,
            m,
            reason: "fine/coarse ratio must be a power of 2".into(),
        });
    }
    let x = transfer::restrict_to(grid.x.as_slice().unwrap(), m);
    let y = transfer::restrict_to(grid.y.as_slice().unwrap(), m);
    let xp = transfer::spectral_derivative(x.as_slice().unwrap(), 1);
    let yp = transfer::spectral_derivative(y.as_slice().unwrap(), 1);
    let xpp = transfer::spectral_derivative(x.as_slice().unwrap(), 2);
    let ypp = transfer::spectral_derivative(y.as_slice().unwrap(), 2);
    let two_pi = T::of(2.0) * T::PI();
    let theta = Array1::from_iter((0..m).map(|j| two_pi * T::of(j as f64) / T::of(m as f64)));
    Ok(finish_grid(grid.spec, theta, x, y, xp, yp, xpp, ypp))
}

/// Writes the grid as CSV with header `j,theta,x,y,nx,ny,kappa,jac`.
pub fn write_geometry_csv<T: Real, W: std::io::Write>(
    grid: &BoundaryGrid<T>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "j,theta,x,y,nx,ny,kappa,jac")?;
    for j in 0..grid.len() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            j,
            grid.theta[j],
            grid.x[j],
            grid.y[j],
            grid.normal_x[j],
            grid.normal_y[j],
            grid.curvature[j],
            grid.jacobian[j]
        )?;
    }
    Ok(())
}
