//! Plane-wave analysis of the linear models.
//!
//! Convention: `p = e^{i(kx - ωt)}`, so `∂_t → -iω` and `∇² → -k²`. Each
//! model then reads `k² = ω²/c² - D̂(ω, k)` with `D̂` the symbol of its damping
//! term, and the forward root (`Re k > 0`) is returned. `Im k` is the
//! amplitude attenuation in nepers per unit length.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::frac_calculus::{complex_damping_factor, ft_symbol, FracOrder};
use crate::par;
use crate::wave_models::{MediumParams, ModelKind};

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub omega: f64,
    pub k: Complex64,
    /// `Im k`, nepers per unit length.
    pub alpha: f64,
    /// `ω / Re k`.
    pub phase_speed: f64,
}

impl DispersionPoint {
    fn from_root(omega: f64, k: Complex64) -> Self {
        let k = if k.re < 0.0 { -k } else { k };
        Self {
            omega,
            k,
            alpha: k.im,
            phase_speed: omega / k.re,
        }
    }

    /// Attenuation accumulated over one wavelength, `α · 2π / Re k`.
    pub fn loss_per_wavelength(&self) -> f64 {
        self.alpha * 2.0 * PI / self.k.re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub alpha0_hat: f64,
    pub y_hat: f64,
    /// Coefficient of determination in log-log space.
    pub r2: f64,
    pub points: usize,
}

/// Forward-branch complex wavenumber of `model` at angular frequency `omega`.
///
/// `TemporalReal` has no plane-wave relation of its own (the pointwise
/// modulus is not analytic); its complex-domain counterpart is used instead.
pub fn dispersion_relation(
    model: ModelKind,
    medium: &MediumParams,
    omega: f64,
) -> Result<DispersionPoint> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    let c = medium.c();
    let k0 = omega / c;
    let k = match model {
        ModelKind::Lossless => Complex64::new(k0, 0.0),
        ModelKind::TemporalReal | ModelKind::TemporalComplex => {
            let y = medium.y().value();
            let coef = 2.0 * medium.alpha0() / c.powf(1.0 + 2.0 * y);
            let order = FracOrder::new(1.0 + y)?;
            let damping = complex_damping_factor(medium.y()) * coef * ft_symbol(order, omega)?;
            (Complex64::new(k0 * k0, 0.0) - damping).sqrt()
        }
        ModelKind::SpatialReal | ModelKind::SpatialComplex => spatial_root(model, medium, omega)?,
        ModelKind::StructuralDamping { eta } => {
            // stiffness factor (1 - iη) in the e^{-iωt} convention
            Complex64::new(k0, 0.0) / Complex64::new(1.0, -eta).sqrt()
        }
    };
    Ok(DispersionPoint::from_root(omega, k))
}

/// Newton iteration on `f(k) = k² - ω²/c² - i a ω G(k)` where `G` is the
/// spatial symbol times the model prefactor, seeded at the lossless root.
fn spatial_root(model: ModelKind, medium: &MediumParams, omega: f64) -> Result<Complex64> {
    let c = medium.c();
    let y = medium.y().value();
    let a = 2.0 * medium.alpha0() / c.powf(1.0 + y);
    let i = Complex64::new(0.0, 1.0);
    let prefactor = complex_damping_factor(medium.y());
    // Analytic continuation of the operator symbol off the real axis.
    let symbol = |k: Complex64| -> Complex64 {
        if y == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        match model {
            ModelKind::SpatialComplex => prefactor * (-i * k).powf(y),
            _ => k.powf(y),
        }
    };
    let target = Complex64::new((omega / c).powi(2), 0.0);
    let mut k = Complex64::new(omega / c, 0.0);
    let mut iterates = vec![(k.re, k.im)];
    for _ in 0..NEWTON_MAX_ITER {
        let g = symbol(k);
        let f = k * k - target - i * a * omega * g;
        let df = 2.0 * k - i * a * omega * y * g / k;
        let step = f / df;
        k -= step;
        iterates.push((k.re, k.im));
        if !k.re.is_finite() || !k.im.is_finite() {
            break;
        }
        if step.norm() <= NEWTON_TOL * k.norm() {
            return Ok(k);
        }
    }
    Err(Error::NewtonDiverged { omega, iterates })
}

/// `dispersion_relation` mapped over `omegas`.
pub fn attenuation_curve(
    model: ModelKind,
    medium: &MediumParams,
    omegas: &[f64],
) -> Result<Vec<DispersionPoint>> {
    if omegas.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("omegas", "must be sorted ascending"));
    }
    par::map(omegas, |&w| dispersion_relation(model, medium, w))
        .into_iter()
        .collect()
}

/// `count` log-spaced frequencies covering `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|j| (a + (b - a) * j as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Ordinary least squares on `(ln ω, ln α)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 points, got {}",
            points.len()
        )));
    }
    for &(w, a) in points {
        if !(w > 0.0) {
            return Err(invalid("omega", format!("must be positive, got {w}")));
        }
        if !(a > 0.0) {
            return Err(Error::NonPositiveAlpha { omega: w, alpha: a });
        }
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return Err(Error::DegenerateFit(format!(
            "frequency span {lo}..{hi} is less than a factor of 4"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        alpha0_hat: intercept.exp(),
        y_hat: slope,
        r2,
        points: points.len(),
    })
}

/// `E₀ e^{-αx}`; `x` is a nonnegative propagation distance.
pub fn decay_amplitude(e0: f64, alpha: f64, x: f64) -> f64 {
    e0 * (-alpha * x).exp()
}

/// `ln N / ln s` for `N` copies at scale `1/s`.
pub fn hausdorff_dimension(copies: u64, scale: f64) -> Result<f64> {
    if copies < 1 {
        return Err(invalid("copies", "must be at least 1"));
    }
    if !(scale > 1.0) {
        return Err(invalid("scale", format!("must exceed 1, got {scale}")));
    }
    Ok((copies as f64).ln() / scale.ln())
}
