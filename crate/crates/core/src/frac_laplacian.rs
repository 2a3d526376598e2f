//! Discrete spatial operators on a uniform 1D grid.
//!
//! `A = -∇²_h` is the `[-1, 2, -1]/h²` stencil, symmetric positive
//! (semi)definite. Fractional powers `A^r = Q diag(λ^r) Qᵀ` come from a dense
//! eigendecomposition; on periodic grids the same operator is diagonalized by
//! the DFT with the exact stencil symbol `κ_m = 2 sin(πm/n)/h`, which gives a
//! second, independent route.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::frac_calculus::FracOrder;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "periodic" => Ok(Self::Periodic),
            other => Err(invalid("boundary", format!("unknown boundary `{other}`"))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Periodic => "periodic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(n: usize, h: f64, boundary: Boundary) -> Result<Self> {
        if n < 3 {
            return Err(invalid("n", format!("need at least 3 points, got {n}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid("h", format!("must be positive, got {h}")));
        }
        Ok(Self { n, h, boundary })
    }

    pub fn periodic(n: usize, h: f64) -> Result<Self> {
        Self::new(n, h, Boundary::Periodic)
    }

    pub fn dirichlet(n: usize, h: f64) -> Result<Self> {
        Self::new(n, h, Boundary::Dirichlet)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn length(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.n as f64 * self.h,
            Boundary::Dirichlet => (self.n - 1) as f64 * self.h,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Nearest grid index to position `x`.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let i = (x / self.h).round();
        if !(i >= 0.0) || i as usize >= self.n {
            return Err(invalid("x", format!("{x} lies outside the grid")));
        }
        Ok(i as usize)
    }
}

/// `|κ_m| = 2 |sin(πm/n)| / h`, the exact symbol of the three-point stencil.
pub fn discrete_wavenumber(grid: &Grid1D, m: usize) -> f64 {
    2.0 * (PI * m as f64 / grid.n() as f64).sin().abs() / grid.h()
}

/// Writes `A u = -∇²_h u` into `out` without forming the matrix.
pub fn laplacian_apply(grid: &Grid1D, u: &[Complex64], out: &mut [Complex64]) {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let periodic = grid.is_periodic();
    let zero = Complex64::new(0.0, 0.0);
    par::for_each_chunk(out, |offset, chunk| {
        for (k, o) in chunk.iter_mut().enumerate() {
            let i = offset + k;
            let left = if i > 0 {
                u[i - 1]
            } else if periodic {
                u[n - 1]
            } else {
                zero
            };
            let right = if i + 1 < n {
                u[i + 1]
            } else if periodic {
                u[0]
            } else {
                zero
            };
            *o = (u[i] * 2.0 - left - right) * inv_h2;
        }
    });
}

/// A symmetric positive semidefinite matrix with a cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpdOperator {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    clip: f64,
}

impl SpdOperator {
    /// Wraps a symmetric PSD matrix, rejecting anything that is not.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.amax();
        if max_abs_diff(&matrix, &matrix.transpose()) > 1e-12 * scale {
            return Err(invalid("matrix", "not symmetric"));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let max_lambda = eig.eigenvalues.max();
        if eig.eigenvalues.min() < -1e-10 * max_lambda.abs().max(f64::MIN_POSITIVE) {
            return Err(invalid("matrix", "not positive semidefinite"));
        }
        Ok(Self {
            clip: 1e-10 * max_lambda,
            matrix,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues at or below this threshold are treated as zero.
    pub fn clip_threshold(&self) -> f64 {
        self.clip
    }

    fn has_clipped_modes(&self) -> bool {
        self.eigenvalues.iter().any(|&l| l <= self.clip)
    }

    fn powered_spectrum(&self, r: f64) -> DVector<f64> {
        self.eigenvalues
            .map(|l| if l <= self.clip { 0.0 } else { l.powf(r) })
    }

    /// `A^r u`.
    pub fn frac_power_apply(&self, r: FracOrder, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        if r.is_zero() && !self.has_clipped_modes() {
            return Ok(u.to_vec());
        }
        let q = &self.eigenvectors;
        let coeffs = q.tr_mul(&DVector::from_column_slice(u));
        let scaled = coeffs.component_mul(&self.powered_spectrum(r.value()));
        Ok((q * scaled).as_slice().to_vec())
    }

    /// Dense `Q diag(λ^r) Qᵀ`.
    pub fn frac_power_matrix(&self, r: FracOrder) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        let spectrum = self.powered_spectrum(r.value());
        for (mut col, f) in scaled.column_iter_mut().zip(spectrum.iter()) {
            col *= *f;
        }
        let m = scaled * self.eigenvectors.transpose();
        // symmetrize away the round-off
        (&m + m.transpose()) * 0.5
    }
}

/// `A = -∇²_h` with its eigendecomposition.
pub fn build_laplacian(grid: &Grid1D) -> SpdOperator {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 * inv_h2;
        if i + 1 < n {
            a[(i, i + 1)] = -inv_h2;
            a[(i + 1, i)] = -inv_h2;
        }
    }
    if grid.is_periodic() {
        a[(0, n - 1)] -= inv_h2;
        a[(n - 1, 0)] -= inv_h2;
    }
    SpdOperator::from_matrix(a).expect("stencil matrix is symmetric PSD")
}

/// Central-difference first derivative.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    matrix: DMatrix<f64>,
}

impl GradientOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(u))
            .as_slice()
            .to_vec()
    }
}

/// Periodic rows wrap; Dirichlet boundary rows fall back to one-sided
/// differences.
pub fn build_gradient(grid: &Grid1D) -> GradientOperator {
    let n = grid.n();
    let h = grid.h();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        match (grid.boundary(), i) {
            (Boundary::Dirichlet, 0) => {
                b[(0, 0)] = -1.0 / h;
                b[(0, 1)] = 1.0 / h;
            }
            (Boundary::Dirichlet, i) if i == n - 1 => {
                b[(i, i - 1)] = -1.0 / h;
                b[(i, i)] = 1.0 / h;
            }
            _ => {
                b[(i, (i + 1) % n)] = 0.5 / h;
                b[(i, (i + n - 1) % n)] = -0.5 / h;
            }
        }
    }
    GradientOperator { matrix: b }
}

/// A real symmetric matrix applied to complex fields, one column dot product
/// per output entry (column `i` equals row `i`).
#[derive(Debug, Clone)]
pub struct SymmetricApply {
    n: usize,
    data: Arc<Vec<f64>>,
}

impl SymmetricApply {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        Self {
            n: matrix.nrows(),
            data: Arc::new(matrix.as_slice().to_vec()),
        }
    }

    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let data = &self.data;
        par::for_each_chunk(out, |offset, chunk| {
            for (k, o) in chunk.iter_mut().enumerate() {
                let col = &data[(offset + k) * n..(offset + k + 1) * n];
                let mut re = 0.0;
                let mut im = 0.0;
                for (a, v) in col.iter().zip(u) {
                    re += a * v.re;
                    im += a * v.im;
                }
                *o = Complex64::new(re, im);
            }
        });
    }
}

/// A Fourier multiplier on a periodic grid.
#[derive(Clone)]
pub struct SpectralMultiplier {
    symbol: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralMultiplier")
            .field("n", &self.symbol.len())
            .finish()
    }
}

impl SpectralMultiplier {
    /// Symbol given as a function of the mode index and `|κ_m|`.
    pub fn from_symbol<F: Fn(usize, f64) -> Complex64>(grid: &Grid1D, f: F) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::NonPeriodicGrid);
        }
        let n = grid.n();
        let mut planner = FftPlanner::new();
        Ok(Self {
            symbol: (0..n).map(|m| f(m, discrete_wavenumber(grid, m))).collect(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// `|κ_m|^y`, zero mode clipped to 0.
    pub fn magnitude_power(grid: &Grid1D, y: FracOrder) -> Result<Self> {
        let y = y.value();
        Self::from_symbol(grid, |m, k| {
            if m == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(k.powf(y), 0.0)
            }
        })
    }

    /// `(-i|κ_m|)^y = |κ_m|^y e^{-iπy/2}`, the complex-domain spatial operator;
    /// equals the stencil Laplacian `∇²` at `y = 2`.
    pub fn complex_power(grid: &Grid1D, y: FracOrder) -> Result<Self> {
        let y = y.value();
        Self::from_symbol(grid, |m, k| {
            if m == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(k.powf(y), -0.5 * PI * y)
            }
        })
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = u.to_vec();
        self.apply_in_place(&mut buf)?;
        Ok(buf)
    }

    pub fn apply_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        let n = self.symbol.len();
        if buf.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: buf.len(),
            });
        }
        self.forward.process(buf);
        let inv_n = 1.0 / n as f64;
        for (v, s) in buf.iter_mut().zip(&self.symbol) {
            *v *= s * inv_n;
        }
        self.inverse.process(buf);
        Ok(())
    }
}

/// `|∇|^y u` by FFT on a periodic grid; real input gives real output.
pub fn spectral_frac_laplacian(u: &[f64], y: FracOrder, grid: &Grid1D) -> Result<Vec<f64>> {
    let op = SpectralMultiplier::magnitude_power(grid, y)?;
    let buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(op.apply(&buf)?.into_iter().map(|z| z.re).collect())
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
