//! Spectral (Fourier) restriction and prolongation between periodic grids,
//! plus projection of a dense operator onto a coarser grid.
//!
//! Restriction truncates the trigonometric interpolant to the coarse band
//! and resamples; prolongation zero-pads the spectrum. The coarse Nyquist
//! slot is handled by folding (restriction) and conjugate splitting
//! (prolongation) so that both maps send real vectors to real vectors,
//! `R P = I` holds exactly, and `P R` is an orthogonal projection.
//! The forward transform is normalized by `1/N`, so coefficients are the
//! `f̂_k` of the trigonometric interpolant.

use crate::Real;
use ndarray::{Array1, Array2};
use num_complex::Complex;
use rustfft::FftPlanner;

struct Fourier<T: Real> {
    planner: FftPlanner<T>,
}

impl<T: Real> Fourier<T> {
    fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
        }
    }

    /// Normalized coefficients `f̂_k = (1/N) Σ_j v_j e^{−ikθ_j}` in the
    /// standard layout `[0, 1, …, N/2−1, −N/2, …, −1]`.
    fn coeffs(&mut self, v: &[T]) -> Vec<Complex<T>> {
        let n = v.len();
        let mut buf: Vec<Complex<T>> = v.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.planner.plan_fft_forward(n).process(&mut buf);
        let scale = T::one() / T::of(n as f64);
        for c in &mut buf {
            *c = c.scale(scale);
        }
        buf
    }

    /// Evaluates `Σ_k c_k e^{ikθ_j}` on the grid of size `c.len()`.
    fn synth(&mut self, mut c: Vec<Complex<T>>) -> Vec<Complex<T>> {
        let n = c.len();
        self.planner.plan_fft_inverse(n).process(&mut c);
        c
    }
}

/// Coarse coefficient array of length `m` from fine coefficients of length
/// `n`: modes `|k| < m/2` are kept, modes `±m/2` fold into the coarse
/// Nyquist slot, the rest are dropped.
fn truncate_coeffs<T: Real>(c: &[Complex<T>], m: usize) -> Vec<Complex<T>> {
    let n = c.len();
    let mut g = vec![Complex::new(T::zero(), T::zero()); m];
    g[0] = c[0];
    for k in 1..m / 2 {
        g[k] = c[k];
        g[m - k] = c[n - k];
    }
    g[m / 2] = c[m / 2] + c[n - m / 2];
    g
}

/// Fine coefficient array of length `n` from coarse coefficients of length
/// `m`: zero padding, with the coarse Nyquist coefficient split equally
/// between modes `+m/2` and `−m/2`.
fn pad_coeffs<T: Real>(g: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
    let m = g.len();
    let mut c = vec![Complex::new(T::zero(), T::zero()); n];
    c[0] = g[0];
    for k in 1..m / 2 {
        c[k] = g[k];
        c[n - k] = g[m - k];
    }
    let half = g[m / 2].scale(T::of(0.5));
    c[m / 2] = half;
    c[n - m / 2] = half;
    c
}

fn re_parts<T: Real>(v: Vec<Complex<T>>) -> Array1<T> {
    Array1::from_iter(v.into_iter().map(|z| z.re))
}

/// Spectral restriction from `n` points to `m = n / 2^k` points.
pub fn restrict_to<T: Real>(v: &[T], m: usize) -> Array1<T> {
    let n = v.len();
    assert!(n >= 16 && n % 2 == 0, "restriction needs even n >= 16");
    assert!(
        m <= n && m >= 8 && m % 2 == 0 && n % m == 0 && (n / m).is_power_of_two(),
        "fine/coarse ratio must be a power of 2 with even m >= 8"
    );
    if m == n {
        return Array1::from_vec(v.to_vec());
    }
    let mut f = Fourier::new();
    let c = f.coeffs(v);
    re_parts(f.synth(truncate_coeffs(&c, m)))
}

/// One halving step `N → N/2`.
pub fn restrict<T: Real>(v: &[T]) -> Array1<T> {
    restrict_to(v, v.len() / 2)
}

/// Spectral prolongation from `m` points to `n = m · 2^k` points.
pub fn prolong_to<T: Real>(v: &[T], n: usize) -> Array1<T> {
    let m = v.len();
    assert!(m >= 8 && m % 2 == 0, "prolongation needs even m >= 8");
    assert!(
        n >= m && n % m == 0 && (n / m).is_power_of_two(),
        "fine/coarse ratio must be a power of 2"
    );
    if n == m {
        return Array1::from_vec(v.to_vec());
    }
    let mut f = Fourier::new();
    let c = f.coeffs(v);
    re_parts(f.synth(pad_coeffs(&c, n)))
}

/// One doubling step `N/2 → N`.
pub fn prolong<T: Real>(v: &[T]) -> Array1<T> {
    prolong_to(v, v.len() * 2)
}

/// Spectral derivative of given order on the periodic grid. The Nyquist
/// mode is zeroed for odd orders, as usual for real data.
pub fn spectral_derivative<T: Real>(v: &[T], order: u32) -> Array1<T> {
    let n = v.len();
    assert!(n >= 4 && n % 2 == 0);
    let mut f = Fourier::new();
    let mut c = f.coeffs(v);
    for (idx, ck) in c.iter_mut().enumerate() {
        let k = if idx <= n / 2 {
            idx as isize
        } else {
            idx as isize - n as isize
        };
        if idx == n / 2 && order % 2 == 1 {
            *ck = Complex::new(T::zero(), T::zero());
            continue;
        }
        let ik = Complex::new(T::zero(), T::of(k as f64));
        let mut factor = Complex::new(T::one(), T::zero());
        for _ in 0..order {
            factor *= ik;
        }
        *ck *= factor;
    }
    re_parts(f.synth(c))
}

/// Magnitudes of the normalized Fourier coefficients of `v`, in the
/// standard FFT layout `[0, 1, …, N/2−1, −N/2, …, −1]`.
pub fn mode_amplitudes<T: Real>(v: &[T]) -> Vec<T> {
    let mut f = Fourier::new();
    f.coeffs(v)
        .into_iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .collect()
}

/// Projected coarse operator `R_N^M · A · P_M^N` as a dense `m × m` matrix,
/// built with one truncation and one padding (identical to composed
/// halvings).
pub fn project_matrix<T: Real>(mat: &Array2<T>, m: usize) -> Array2<T> {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "square operator expected");
    assert!(
        m <= n && n % m == 0 && (n / m).is_power_of_two(),
        "fine/coarse ratio must be a power of 2"
    );
    if m == n {
        return mat.clone();
    }
    let mut f = Fourier::new();
    // P as dense n×m, one column per coarse basis vector
    let mut p = Array2::zeros((n, m));
    let mut e = vec![T::zero(); m];
    for j in 0..m {
        e[j] = T::one();
        let coeffs = f.coeffs(&e);
        let col = re_parts(f.synth(pad_coeffs(&coeffs, n)));
        p.column_mut(j).assign(&col);
        e[j] = T::zero();
    }
    let ap = mat.dot(&p);
    let mut out = Array2::zeros((m, m));
    for j in 0..m {
        let col = ap.column(j).to_vec();
        let coeffs = f.coeffs(&col);
        let r = re_parts(f.synth(truncate_coeffs(&coeffs, m)));
        out.column_mut(j).assign(&r);
    }
    out
}
