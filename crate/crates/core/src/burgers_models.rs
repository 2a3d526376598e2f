//! Burgers equation `p_t + p p_x + D[p] = 0` on periodic grids with
//! fractional, standard, and frequency-independent damping.
//!
//! Advection uses a conservative local Lax-Friedrichs flux on `p²/2`; time
//! integration is the two-stage strong-stability-preserving Runge-Kutta method.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dispersion::fit_power_law;
use crate::error::{invalid, Error, Result};
use crate::frac_calculus::{complex_damping_factor, FracOrder};
use crate::frac_laplacian::{discrete_wavenumber, laplacian_apply, Grid1D, SpectralMultiplier};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    alpha0: f64,
    gamma: FracOrder,
}

impl BurgersParams {
    pub fn new(alpha0: f64, gamma: f64) -> Result<Self> {
        if !(alpha0 >= 0.0) || !alpha0.is_finite() {
            return Err(invalid(
                "alpha0",
                format!("must be nonnegative, got {alpha0}"),
            ));
        }
        let gamma = FracOrder::new(gamma)?;
        if gamma.value() > 2.0 {
            return Err(invalid("gamma", format!("must lie in [0, 2], got {gamma}")));
        }
        Ok(Self { alpha0, gamma })
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn gamma(&self) -> FracOrder {
        self.gamma
    }

    /// Diffusivity of the standard equation.
    pub fn epsilon(&self) -> f64 {
        2.0 * self.alpha0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurgersVariant {
    /// `D = -eps ∇²p`.
    Standard,
    /// `D = 2 alpha0 | |p|^{2-γ} A^{γ/2} p |`.
    FracReal,
    /// `D = i^{γ} 2 alpha0 |p|^{2-γ} Λ_γ p`, with `Λ_γ` the symbol `(-i|κ|)^γ`.
    FracComplex,
    /// `D = 2 alpha0 p²`.
    Gamma0,
}

impl BurgersVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::FracReal => "frac_real",
            Self::FracComplex => "frac_complex",
            Self::Gamma0 => "gamma0",
        }
    }
}

impl std::str::FromStr for BurgersVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" => Self::Standard,
            "frac_real" => Self::FracReal,
            "frac_complex" => Self::FracComplex,
            "gamma0" => Self::Gamma0,
            other => {
                return Err(invalid(
                    "variant",
                    format!("unknown Burgers variant `{other}`"),
                ))
            }
        })
    }
}

impl std::fmt::Display for BurgersVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersState {
    pub p: Vec<Complex64>,
    pub t: f64,
}

impl BurgersState {
    pub fn new(p: Vec<Complex64>) -> Self {
        Self { p, t: 0.0 }
    }

    pub fn from_real(p: &[f64]) -> Self {
        Self::new(p.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ p h`.
    pub fn mass(&self, grid: &Grid1D) -> Complex64 {
        self.p.iter().sum::<Complex64>() * grid.h()
    }

    pub fn imag_residue(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.p.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / m
    }
}

#[derive(Debug)]
pub struct BurgersSolver {
    params: BurgersParams,
    variant: BurgersVariant,
    grid: Grid1D,
    operator: Option<SpectralMultiplier>,
}

impl BurgersSolver {
    pub fn new(params: BurgersParams, variant: BurgersVariant, grid: Grid1D) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::NonPeriodicGrid);
        }
        let gamma = params.gamma();
        let operator = match variant {
            BurgersVariant::FracReal => Some(SpectralMultiplier::magnitude_power(&grid, gamma)?),
            BurgersVariant::FracComplex => {
                let factor = complex_damping_factor(gamma);
                let base = SpectralMultiplier::complex_power(&grid, gamma)?;
                let symbol: Vec<Complex64> = base.symbol().to_vec();
                Some(SpectralMultiplier::from_symbol(&grid, |m, _| {
                    factor * symbol[m]
                })?)
            }
            _ => None,
        };
        Ok(Self {
            params,
            variant,
            grid,
            operator,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn params(&self) -> &BurgersParams {
        &self.params
    }

    pub fn variant(&self) -> BurgersVariant {
        self.variant
    }

    /// `min(0.5 h / max|p|, 1/ρ)` with `ρ` the largest damping eigenvalue.
    pub fn max_dt(&self, state: &BurgersState) -> f64 {
        let h = self.grid.h();
        let pmax = state.max_abs();
        let advective = if pmax > 0.0 {
            0.5 * h / pmax
        } else {
            f64::INFINITY
        };
        let a = self.params.alpha0();
        let g = self.params.gamma().value();
        let rho = match self.variant {
            BurgersVariant::Standard => 4.0 * self.params.epsilon() / (h * h),
            BurgersVariant::FracReal | BurgersVariant::FracComplex => {
                2.0 * a * pmax.powf(2.0 - g) * (2.0 / h).powf(g)
            }
            BurgersVariant::Gamma0 => 4.0 * a * pmax,
        };
        let diffusive = if rho > 0.0 { 1.0 / rho } else { f64::INFINITY };
        advective.min(diffusive)
    }

    fn damping(&self, p: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let a2 = 2.0 * self.params.alpha0();
        let g = self.params.gamma().value();
        match self.variant {
            BurgersVariant::Standard => {
                // A = -∇², so -eps ∇²p = eps A p
                laplacian_apply(&self.grid, p, out);
                let eps = self.params.epsilon();
                out.iter_mut().for_each(|v| *v *= eps);
            }
            BurgersVariant::Gamma0 => {
                for (o, v) in out.iter_mut().zip(p) {
                    *o = v * v * a2;
                }
            }
            BurgersVariant::FracReal | BurgersVariant::FracComplex => {
                let lp = self.operator.as_ref().expect("operator built").apply(p)?;
                let real = self.variant == BurgersVariant::FracReal;
                for ((o, v), l) in out.iter_mut().zip(p).zip(&lp) {
                    let w = l * (v.norm().powf(2.0 - g) * a2);
                    *o = if real {
                        Complex64::new(w.norm(), 0.0)
                    } else {
                        w
                    };
                }
            }
        }
        Ok(())
    }

    /// `-(F_{i+1/2} - F_{i-1/2})/h - D[p]`.
    fn rate(&self, p: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = p.len();
        let h = self.grid.h();
        let flux: Vec<Complex64> = (0..n)
            .map(|i| {
                let (l, r) = (p[i], p[(i + 1) % n]);
                let speed = l.norm().max(r.norm());
                0.25 * (l * l + r * r) - 0.5 * speed * (r - l)
            })
            .collect();
        let mut out = vec![ZERO; n];
        self.damping(p, &mut out)?;
        for i in 0..n {
            let left = flux[(i + n - 1) % n];
            out[i] = -(flux[i] - left) / h - out[i];
        }
        Ok(out)
    }

    pub fn step(&self, state: &mut BurgersState, dt: f64) -> Result<()> {
        if state.p.len() != self.grid.n() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n(),
                got: state.p.len(),
            });
        }
        let limit = self.max_dt(state);
        if !(dt > 0.0) || dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
        let k1 = self.rate(&state.p)?;
        let stage: Vec<Complex64> = state.p.iter().zip(&k1).map(|(p, k)| p + k * dt).collect();
        let k2 = self.rate(&stage)?;
        let next: Vec<Complex64> = state
            .p
            .iter()
            .zip(stage.iter().zip(&k2))
            .map(|(p, (s, k))| 0.5 * p + 0.5 * (s + k * dt))
            .collect();
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Unstable {
                growth: vec![f64::INFINITY],
            });
        }
        state.p = next;
        state.t += dt;
        Ok(())
    }

    /// Advances to `t_end` using `fraction · max_dt` steps, recording a
    /// snapshot every `every` steps (and at the end).
    pub fn run(
        &self,
        state: &mut BurgersState,
        t_end: f64,
        fraction: f64,
        every: usize,
    ) -> Result<Vec<BurgersState>> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid("fraction", "must lie in (0, 1]"));
        }
        let every = every.max(1);
        let mut snaps = vec![state.clone()];
        let mut count = 0;
        while state.t < t_end {
            let dt = (fraction * self.max_dt(state)).min(t_end - state.t);
            if dt <= 0.0 || !dt.is_finite() {
                break;
            }
            self.step(state, dt)?;
            count += 1;
            if count % every == 0 {
                snaps.push(state.clone());
            }
        }
        if snaps.last().map(|s| s.t) != Some(state.t) {
            snaps.push(state.clone());
        }
        Ok(snaps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecay {
    pub mode: usize,
    pub kappa: f64,
    pub rate: f64,
}

/// Relative amplitude below which a mode is treated as noise.
pub const MODE_NOISE_FLOOR: f64 = 1e-6;

/// Least-squares exponential decay rate of every resolved Fourier mode.
pub fn burgers_decay_spectrum(snapshots: &[BurgersState], grid: &Grid1D) -> Result<Vec<ModeDecay>> {
    if snapshots.len() < 3 {
        return Err(invalid(
            "snapshots",
            format!("need at least 3, got {}", snapshots.len()),
        ));
    }
    let n = grid.n();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut amps: Vec<Vec<f64>> = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        if s.p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.p.len(),
            });
        }
        let mut buf = s.p.clone();
        fft.process(&mut buf);
        amps.push(buf.iter().map(|z| z.norm() / n as f64).collect());
    }
    let first = &amps[0];
    let floor = MODE_NOISE_FLOOR * (1..=n / 2).map(|m| first[m]).fold(0.0, f64::max);
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let tm = times.iter().sum::<f64>() / times.len() as f64;
    let stt: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    if stt == 0.0 {
        return Err(invalid("snapshots", "snapshot times must differ"));
    }
    let mut out = Vec::new();
    for m in 1..=n / 2 {
        if amps.iter().any(|a| !(a[m] > floor)) {
            continue;
        }
        let logs: Vec<f64> = amps.iter().map(|a| a[m].ln()).collect();
        let lm = logs.iter().sum::<f64>() / logs.len() as f64;
        let slope = times
            .iter()
            .zip(&logs)
            .map(|(t, l)| (t - tm) * (l - lm))
            .sum::<f64>()
            / stt;
        out.push(ModeDecay {
            mode: m,
            kappa: discrete_wavenumber(grid, m),
            rate: -slope,
        });
    }
    if out.len() < 2 {
        return Err(Error::TooFewModes(out.len()));
    }
    Ok(out)
}

/// Fitted exponent of `rate ∝ kappa^e` over the supplied modes.
pub fn decay_exponent(modes: &[ModeDecay]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = modes.iter().map(|m| (m.kappa, m.rate)).collect();
    Ok(fit_power_law(&pts)?.y_hat)
}
