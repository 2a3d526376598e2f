//! Through-transmission attenuation experiments: drive a broadband pulse,
//! record it at two probes, and recover `alpha(omega)` from the log ratio of
//! the probe spectra.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dispersion::{dispersion_relation, fit_power_law, PowerLawFit};
use crate::error::{invalid, Error, Result};
use crate::frac_laplacian::Grid1D;
use crate::par;
use crate::wave_models::{
    simulate, MediumParams, ModelKind, ProbeTraces, SimulationOptions, SolverOptions, SourceKind,
    SourceSpec, TemporalScheme, SAFETY_FACTOR,
};

/// Envelope delay in units of the Gaussian width.
pub const DELAY_SIGMAS: f64 = 6.0;
/// Default SNR gate relative to each spectrum's peak.
pub const DEFAULT_SNR_GATE: f64 = 0.01;
/// Default cosine-taper length on each side of the window, as a fraction of its length.
pub const DEFAULT_TAPER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    /// Gaussian envelope alone.
    Bump,
    /// Gaussian-modulated sinusoid.
    Modulated,
}

impl std::str::FromStr for PulseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(Self::Bump),
            "modulated" => Ok(Self::Modulated),
            other => Err(invalid("kind", format!("unknown pulse kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for PulseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bump => "bump",
            Self::Modulated => "modulated",
        })
    }
}

/// Gaussian pulse with center frequency `f0` (Hz) and fractional bandwidth `b`.
///
/// The envelope width is chosen so the spectrum falls to half its peak at
/// `f0 (1 ± b/2)`. An analytic pulse carries `exp(-i w0 t)` instead of the cosine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    kind: PulseKind,
    f0: f64,
    bandwidth: f64,
    amplitude: f64,
    analytic: bool,
}

impl PulseSpec {
    pub fn new(
        kind: PulseKind,
        f0: f64,
        bandwidth: f64,
        amplitude: f64,
        analytic: bool,
    ) -> Result<Self> {
        let s = Self {
            kind,
            f0,
            bandwidth,
            amplitude,
            analytic,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0) || !self.f0.is_finite() {
            return Err(invalid("f0", format!("must be positive, got {}", self.f0)));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth < 2.0) {
            return Err(invalid(
                "bandwidth",
                format!("must lie in (0, 2), got {}", self.bandwidth),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        Ok(())
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0
    }

    pub fn sigma(&self) -> f64 {
        (2.0 * 2f64.ln()).sqrt() / (PI * self.f0 * self.bandwidth)
    }

    pub fn delay(&self) -> f64 {
        DELAY_SIGMAS * self.sigma()
    }

    /// Highest frequency the grid and step must resolve, in Hz.
    pub fn f_max(&self) -> f64 {
        match self.kind {
            PulseKind::Modulated => self.f0 * (1.0 + self.bandwidth),
            PulseKind::Bump => self.f0 * self.bandwidth,
        }
    }

    /// Angular band where the spectrum stays above half its peak.
    pub fn nominal_band(&self) -> (f64, f64) {
        let half = 0.5 * self.omega0() * self.bandwidth;
        match self.kind {
            PulseKind::Modulated => (self.omega0() - half, self.omega0() + half),
            PulseKind::Bump => (0.0, half),
        }
    }

    fn envelope(&self, t: f64) -> (f64, f64) {
        let tau = t - self.delay();
        let s2 = self.sigma().powi(2);
        (self.amplitude * (-0.5 * tau * tau / s2).exp(), tau)
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let (g, tau) = self.envelope(t);
        let w0 = self.omega0();
        match (self.kind, self.analytic) {
            (PulseKind::Bump, _) => Complex64::new(g, 0.0),
            (PulseKind::Modulated, false) => Complex64::new(g * (w0 * tau).cos(), 0.0),
            (PulseKind::Modulated, true) => Complex64::from_polar(g, -w0 * tau),
        }
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        let (g, tau) = self.envelope(t);
        let w0 = self.omega0();
        let dlog = -tau / self.sigma().powi(2);
        match (self.kind, self.analytic) {
            (PulseKind::Bump, _) => Complex64::new(g * dlog, 0.0),
            (PulseKind::Modulated, false) => {
                let (s, c) = (w0 * tau).sin_cos();
                Complex64::new(g * (dlog * c - w0 * s), 0.0)
            }
            (PulseKind::Modulated, true) => {
                Complex64::from_polar(g, -w0 * tau) * Complex64::new(dlog, -w0)
            }
        }
    }

    /// At least ten steps per period of the highest frequency.
    pub fn check_dt(&self, dt: f64) -> Result<()> {
        let limit = 1.0 / (10.0 * self.f_max());
        if dt > limit {
            return Err(Error::Unresolved(format!(
                "dt = {dt} exceeds 1/(10 f_max) = {limit}"
            )));
        }
        Ok(())
    }

    /// At least eight points per wavelength of the highest frequency.
    pub fn check_grid(&self, grid: &Grid1D, c: f64) -> Result<()> {
        let limit = c / (8.0 * self.f_max());
        if grid.h() > limit {
            return Err(Error::Unresolved(format!(
                "h = {} exceeds c/(8 f_max) = {limit}",
                grid.h()
            )));
        }
        Ok(())
    }
}

/// Samples `spec` at `t = j dt` for `0 <= t <= duration`.
pub fn make_pulse(spec: &PulseSpec, dt: f64, duration: f64) -> Result<Vec<Complex64>> {
    spec.validate()?;
    if !(dt > 0.0) || !(duration > 0.0) {
        return Err(invalid("dt", "dt and duration must be positive"));
    }
    spec.check_dt(dt)?;
    let n = (duration / dt).floor() as usize + 1;
    Ok((0..n).map(|j| spec.value(j as f64 * dt)).collect())
}

/// Window with flat middle and raised-cosine tapers covering `taper` of
/// the length on each side.
pub fn tukey(len: usize, taper: f64) -> Vec<f64> {
    let ramp = ((taper * len as f64).round() as usize).min(len / 2);
    (0..len)
        .map(|i| {
            let edge = i.min(len - 1 - i);
            if edge >= ramp {
                1.0
            } else {
                0.5 * (1.0 - (PI * (edge as f64 + 0.5) / ramp as f64).cos())
            }
        })
        .collect()
}

/// `P(w_k) = dt Σ_j x_j e^{i w_k t_j}` on `w_k = 2πk/(nfft dt)`, `0 <= k < nfft/2`.
/// With this sign a field `e^{-iwt}` with `w > 0` appears at positive `w`.
pub fn spectrum(trace: &[Complex64], dt: f64, nfft: usize) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if nfft < trace.len() || nfft < 2 {
        return Err(invalid(
            "nfft",
            format!("must be at least the trace length {}", trace.len()),
        ));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    buf[..trace.len()].copy_from_slice(trace);
    FftPlanner::new().plan_fft_inverse(nfft).process(&mut buf);
    let half = nfft / 2;
    let omegas = (0..half)
        .map(|k| 2.0 * PI * k as f64 / (nfft as f64 * dt))
        .collect();
    let values = buf[..half].iter().map(|z| z * dt).collect();
    Ok((omegas, values))
}

/// Magnitude of the analytic signal: negative frequencies removed,
/// positive ones doubled.
pub fn analytic_envelope(trace: &[Complex64]) -> Vec<f64> {
    let n = trace.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf = trace.to_vec();
    planner.plan_fft_inverse(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            continue;
        }
        if k < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|z| z.norm() / n as f64).collect()
}

/// `alpha(w) = ln(|P1|/|P2|) / dx`.
pub fn measured_attenuation(p1: &[Complex64], p2: &[Complex64], dx: f64) -> Result<Vec<f64>> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch {
            expected: p1.len(),
            got: p2.len(),
        });
    }
    if dx == 0.0 || !dx.is_finite() {
        return Err(invalid("dx", "probe separation must be nonzero"));
    }
    Ok(p1
        .iter()
        .zip(p2)
        .map(|(a, b)| (a.norm() / b.norm()).ln() / dx)
        .collect())
}

/// Indices where both spectra reach `gate` times their own peak and `w`
/// lies in `[lo, hi]`, excluding `w = 0`.
pub fn gate_band(
    omegas: &[f64],
    p1: &[Complex64],
    p2: &[Complex64],
    gate: f64,
    band: (f64, f64),
) -> Vec<usize> {
    let peak = |p: &[Complex64]| p.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (m1, m2) = (peak(p1), peak(p2));
    (0..omegas.len())
        .filter(|&k| {
            let w = omegas[k];
            w > 0.0
                && w >= band.0
                && w <= band.1
                && p1[k].norm() >= gate * m1
                && p2[k].norm() >= gate * m2
                && p1[k].norm() > 0.0
                && p2[k].norm() > 0.0
        })
        .collect()
}

/// Geometry and processing parameters shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSetup {
    pub grid: Grid1D,
    pub source: usize,
    pub x1: usize,
    pub x2: usize,
    pub pulse: PulseSpec,
    /// Simulated time; `None` sizes it from the geometry.
    pub duration: Option<f64>,
    /// Fixed time step; `None` uses `0.5 h / c`.
    pub dt: Option<f64>,
    pub snr_gate: f64,
    pub taper: f64,
    /// Half width of the analysis window in envelope widths.
    pub window_sigmas: f64,
    pub scheme: TemporalScheme,
}

impl ExperimentSetup {
    /// Unit-speed layout: 1024-point periodic grid of length 51.2, source at 2,
    /// probes at 6 and 16, analytic pulse centered at `w = 5` spanning `[1.875, 8.125]`.
    pub fn unit_scale() -> Self {
        let grid = Grid1D::periodic(1024, 0.05).expect("valid grid");
        Self {
            grid,
            source: 40,
            x1: 120,
            x2: 320,
            pulse: PulseSpec::new(PulseKind::Modulated, 5.0 / (2.0 * PI), 1.25, 1.0, true)
                .expect("valid pulse"),
            duration: None,
            dt: None,
            snr_gate: DEFAULT_SNR_GATE,
            taper: DEFAULT_TAPER,
            window_sigmas: 12.0,
            scheme: TemporalScheme::Auto,
        }
    }

    fn validate(&self, medium: &MediumParams) -> Result<()> {
        let n = self.grid.n();
        for (name, i) in [("source", self.source), ("x1", self.x1), ("x2", self.x2)] {
            if i >= n {
                return Err(invalid(name, format!("index {i} outside grid of {n}")));
            }
        }
        if self.x1 == self.x2 {
            return Err(invalid("x2", "probes must be distinct"));
        }
        if !(self.snr_gate > 0.0 && self.snr_gate < 1.0) {
            return Err(invalid("snr_gate", "must lie in (0, 1)"));
        }
        if !(self.taper >= 0.0 && self.taper <= 0.5) {
            return Err(invalid("taper", "must lie in [0, 0.5]"));
        }
        if !(self.window_sigmas > 0.0) {
            return Err(invalid("window_sigmas", "must be positive"));
        }
        self.pulse.validate()?;
        self.pulse.check_grid(&self.grid, medium.c())
    }

    /// Probe distances from the source along the direct path, nearer first.
    fn ordered_probes(&self) -> ((usize, f64), (usize, f64)) {
        let dist = |i: usize| {
            let d = (self.grid.x(i) - self.grid.x(self.source)).abs();
            if self.grid.is_periodic() {
                d.min(self.grid.length() - d)
            } else {
                d
            }
        };
        let (a, b) = ((self.x1, dist(self.x1)), (self.x2, dist(self.x2)));
        if a.1 <= b.1 {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn window_half_width(&self) -> f64 {
        self.window_sigmas * self.pulse.sigma()
    }
}

/// Probe spectra and the attenuation they imply, before any fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub dt: f64,
    pub dx: f64,
    pub window_half_width: f64,
    pub taper: f64,
    pub omega: Vec<f64>,
    pub p1: Vec<Complex64>,
    pub p2: Vec<Complex64>,
    pub alpha: Vec<f64>,
    pub band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub measurement: Measurement,
    pub predicted: Vec<f64>,
    pub fit: PowerLawFit,
    /// Largest `|measured - predicted| / predicted` on the middle half of the band.
    pub max_deviation: f64,
}

fn windowed(trace: &[Complex64], dt: f64, half_width: f64, taper: f64) -> Result<Vec<Complex64>> {
    let env = analytic_envelope(trace);
    let center = env
        .iter()
        .enumerate()
        .fold(
            (0, f64::MIN),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        )
        .0;
    let half = (half_width / dt).round() as usize;
    if center < half || center + half >= trace.len() {
        return Err(Error::Unresolved(format!(
            "analysis window around t = {} does not fit in the record",
            center as f64 * dt
        )));
    }
    let w = tukey(2 * half + 1, taper);
    Ok(trace[center - half..=center + half]
        .iter()
        .zip(&w)
        .map(|(z, w)| z * w)
        .collect())
}

/// Simulates a driven pulse and measures `alpha(w)` between the two probes.
pub fn measure(
    model: ModelKind,
    medium: &MediumParams,
    setup: &ExperimentSetup,
) -> Result<Measurement> {
    setup.validate(medium)?;
    let ((i1, d1), (i2, d2)) = setup.ordered_probes();
    let c = medium.c();
    let half_width = setup.window_half_width();
    let direct = setup.pulse.delay() + d2 / c;
    if setup.grid.is_periodic() {
        let wrapped = setup.pulse.delay() + (setup.grid.length() - d2) / c;
        if wrapped - half_width < direct + 2.0 * half_width {
            return Err(Error::Unresolved(format!(
                "wraparound reaches the far probe at t = {wrapped}, before its window closes"
            )));
        }
    }
    let duration = setup.duration.unwrap_or(direct + 2.0 * half_width);
    let traces: ProbeTraces = simulate(
        model,
        medium,
        &setup.grid,
        Some(&SourceSpec {
            kind: SourceKind::DrivenPoint,
            location: setup.source,
            pulse: setup.pulse,
        }),
        duration,
        &[i1, i2],
        &SimulationOptions {
            dt: Some(setup.dt.unwrap_or(SAFETY_FACTOR * setup.grid.h() / c)),
            solver: SolverOptions {
                temporal_scheme: setup.scheme,
                ..Default::default()
            },
        },
    )?;
    let dt = traces.dt;
    setup.pulse.check_dt(dt)?;
    let w1 = windowed(&traces.traces[0], dt, half_width, setup.taper)?;
    let w2 = windowed(&traces.traces[1], dt, half_width, setup.taper)?;
    let nfft = (4 * w1.len()).next_power_of_two();
    let (omegas, s1) = spectrum(&w1, dt, nfft)?;
    let (_, s2) = spectrum(&w2, dt, nfft)?;
    let keep = gate_band(
        &omegas,
        &s1,
        &s2,
        setup.snr_gate,
        setup.pulse.nominal_band(),
    );
    if keep.is_empty() {
        return Err(Error::EmptyBand);
    }
    let omega: Vec<f64> = keep.iter().map(|&k| omegas[k]).collect();
    let p1: Vec<Complex64> = keep.iter().map(|&k| s1[k]).collect();
    let p2: Vec<Complex64> = keep.iter().map(|&k| s2[k]).collect();
    let dx = d2 - d1;
    let alpha = measured_attenuation(&p1, &p2, dx)?;
    Ok(Measurement {
        dt,
        dx,
        window_half_width: half_width,
        taper: setup.taper,
        band: (omega[0], omega[omega.len() - 1]),
        omega,
        p1,
        p2,
        alpha,
    })
}

/// Largest relative deviation over the middle half of `[omega_0, omega_last]`.
pub fn middle_half_deviation(omega: &[f64], measured: &[f64], predicted: &[f64]) -> f64 {
    let (lo, hi) = match (omega.first(), omega.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return f64::NAN,
    };
    let q = 0.25 * (hi - lo);
    omega
        .iter()
        .zip(measured.iter().zip(predicted))
        .filter(|(w, _)| **w >= lo + q && **w <= hi - q)
        .map(|(_, (m, p))| ((m - p) / p).abs())
        .fold(0.0, f64::max)
}

/// Measures, fits `alpha0 w^y`, and compares against the dispersion relation.
pub fn run_attenuation_experiment(
    model: ModelKind,
    medium: &MediumParams,
    setup: &ExperimentSetup,
) -> Result<ExperimentResult> {
    let measurement = measure(model, medium, setup)?;
    let points: Vec<(f64, f64)> = measurement
        .omega
        .iter()
        .copied()
        .zip(measurement.alpha.iter().copied())
        .collect();
    let fit = fit_power_law(&points)?;
    let predicted = measurement
        .omega
        .iter()
        .map(|&w| dispersion_relation(model, medium, w).map(|p| p.alpha))
        .collect::<Result<Vec<f64>>>()?;
    let max_deviation = middle_half_deviation(&measurement.omega, &measurement.alpha, &predicted);
    Ok(ExperimentResult {
        measurement,
        predicted,
        fit,
        max_deviation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub y_hat: f64,
    pub alpha0_hat: f64,
    pub r2: f64,
    pub band: (f64, f64),
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: ModelKind,
    pub y: f64,
    pub alpha0: f64,
    pub outcome: std::result::Result<SweepSummary, Error>,
}

/// Runs one experiment per `(model, y, alpha0)` combination; cells run in
/// parallel and failures are kept in their row.
pub fn sweep(
    models: &[ModelKind],
    ys: &[f64],
    alpha0s: &[f64],
    c: f64,
    setup: &ExperimentSetup,
) -> Vec<SweepRow> {
    let mut cells = Vec::new();
    for &model in models {
        for &y in ys {
            for &alpha0 in alpha0s {
                cells.push((model, y, alpha0));
            }
        }
    }
    par::map(&cells, |&(model, y, alpha0)| {
        let outcome = MediumParams::new(c, alpha0, y)
            .and_then(|m| run_attenuation_experiment(model, &m, setup))
            .map(|r| SweepSummary {
                y_hat: r.fit.y_hat,
                alpha0_hat: r.fit.alpha0_hat,
                r2: r.fit.r2,
                band: r.measurement.band,
                max_deviation: r.max_deviation,
            });
        SweepRow {
            model,
            y,
            alpha0,
            outcome,
        }
    })
}
