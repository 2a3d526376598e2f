//! Explicit time-domain integrators for the lossy wave models.
//!
//! Every model is advanced with the same three-level leapfrog for
//!
//! ```text
//! ∇²p = p_tt / c² + D[p]
//! ```
//!
//! where the damping term `D` is evaluated at the current level (lagged).
//! Terms written as `∂_t q` are a backward difference of `q` against the value
//! stored from the previous step. The temporal complex model can instead blend
//! the GL sums ending at the next and current levels ([`TemporalScheme`]),
//! which removes the lag that destabilizes it for `y > 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::attenuation_lab::PulseSpec;
use crate::error::{invalid, Error, Result};
use crate::frac_calculus::{
    complex_damping_factor, gl_weights, FracOrder, GlWeights, HistoryBuffer,
};
use crate::frac_laplacian::{
    build_laplacian, discrete_wavenumber, laplacian_apply, Grid1D, SpectralMultiplier,
    SymmetricApply,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Courant number used for the first stable-step candidate.
pub const SAFETY_FACTOR: f64 = 0.5;
/// Steps in one stability probe run.
pub const PROBE_STEPS: usize = 200;
/// Maximum number of step halvings tried by [`stable_dt`].
pub const MAX_HALVINGS: usize = 6;
/// Length of the run that must also stay bounded before a step is returned.
pub const CONFIRM_STEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    c: f64,
    alpha0: f64,
    y: FracOrder,
}

impl MediumParams {
    pub fn new(c: f64, alpha0: f64, y: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("c", format!("must be positive, got {c}")));
        }
        if !(alpha0 >= 0.0) || !alpha0.is_finite() {
            return Err(invalid(
                "alpha0",
                format!("must be nonnegative, got {alpha0}"),
            ));
        }
        let y = FracOrder::new(y)?;
        if y.value() > 2.0 {
            return Err(invalid("y", format!("must lie in [0, 2], got {y}")));
        }
        Ok(Self { c, alpha0, y })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn y(&self) -> FracOrder {
        self.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Lossless,
    TemporalReal,
    TemporalComplex,
    SpatialReal,
    SpatialComplex,
    StructuralDamping { eta: f64 },
}

impl ModelKind {
    pub fn structural(eta: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(invalid(
                "eta",
                format!("must be finite and nonnegative, got {eta}"),
            ));
        }
        Ok(Self::StructuralDamping { eta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lossless => "lossless",
            Self::TemporalReal => "temporal_real",
            Self::TemporalComplex => "temporal_complex",
            Self::SpatialReal => "spatial_real",
            Self::SpatialComplex => "spatial_complex",
            Self::StructuralDamping { .. } => "structural_damping",
        }
    }

    /// Parses a model name; `eta` is only used by structural damping.
    pub fn parse(name: &str, eta: f64) -> Result<Self> {
        Ok(match name {
            "lossless" => Self::Lossless,
            "temporal_real" => Self::TemporalReal,
            "temporal_complex" => Self::TemporalComplex,
            "spatial_real" => Self::SpatialReal,
            "spatial_complex" => Self::SpatialComplex,
            "structural_damping" => Self::structural(eta)?,
            other => return Err(invalid("model", format!("unknown model `{other}`"))),
        })
    }

    /// Complex-domain models act on analytic (positive-frequency) fields.
    pub fn is_complex_domain(&self) -> bool {
        matches!(
            self,
            Self::TemporalComplex | Self::SpatialComplex | Self::StructuralDamping { .. }
        )
    }

    /// True when the configured damping vanishes identically.
    pub fn is_lossless(&self, medium: &MediumParams) -> bool {
        match self {
            Self::Lossless => true,
            Self::StructuralDamping { eta } => *eta == 0.0,
            _ => medium.alpha0() == 0.0,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How `SpatialReal` realizes `A^{y/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpatialPath {
    /// Dense matrix fractional power.
    #[default]
    Matrix,
    /// FFT with the stencil symbol (periodic grids only).
    Spectral,
}

/// Discretization of the order-`1+y` derivative in `TemporalComplex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalScheme {
    /// `Lagged` for `y <= 1`, `Weighted` above.
    #[default]
    Auto,
    /// Explicit Grünwald sum ending at the current level.
    Lagged,
    /// Second-order weighted blend of the sums ending at the current and
    /// next levels; the next-level term is solved pointwise.
    Weighted,
}

impl TemporalScheme {
    fn resolve(self, y: FracOrder) -> Self {
        match self {
            Self::Auto if y.value() > 1.0 => Self::Weighted,
            Self::Auto => Self::Lagged,
            s => s,
        }
    }
}

impl std::str::FromStr for TemporalScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "lagged" => Ok(Self::Lagged),
            "weighted" => Ok(Self::Weighted),
            other => Err(invalid(
                "temporal_scheme",
                format!("unknown scheme `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for TemporalScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Lagged => "lagged",
            Self::Weighted => "weighted",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolverOptions {
    pub spatial_path: SpatialPath,
    pub temporal_scheme: TemporalScheme,
    /// Short-memory window for temporal models; `None` keeps full history.
    pub history_window: Option<usize>,
}

/// Leapfrog state: the two newest levels plus whatever the damping term
/// needs from the past.
#[derive(Debug, Clone)]
pub struct WaveState {
    p_now: Vec<Complex64>,
    p_prev: Vec<Complex64>,
    t: f64,
    steps: usize,
    history: Option<HistoryBuffer>,
    aux_prev: Option<Vec<Complex64>>,
}

impl WaveState {
    pub fn p_now(&self) -> &[Complex64] {
        &self.p_now
    }

    pub fn p_prev(&self) -> &[Complex64] {
        &self.p_prev
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn history(&self) -> Option<&HistoryBuffer> {
        self.history.as_ref()
    }

    pub fn max_abs(&self) -> f64 {
        self.p_now.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part relative to the largest magnitude.
    pub fn imag_residue(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.p_now.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / m
    }
}

#[derive(Debug, Clone)]
enum Damping {
    None,
    Structural(f64),
    TemporalReal {
        weights: GlWeights,
        coef: f64,
    },
    TemporalComplex {
        weights: GlWeights,
        coef: Complex64,
        /// `Some(λ)` for the weighted scheme, `λ` multiplying the next-level sum.
        lead: Option<f64>,
        blended: Vec<f64>,
    },
    SpatialMatrix {
        op: SymmetricApply,
        coef: Complex64,
    },
    SpatialSpectral {
        op: Arc<SpectralMultiplier>,
        coef: Complex64,
    },
}

impl Damping {
    fn build(
        model: ModelKind,
        medium: &MediumParams,
        grid: &Grid1D,
        options: &SolverOptions,
    ) -> Result<Self> {
        let path = options.spatial_path;
        let c = medium.c();
        let y = medium.y();
        let yv = y.value();
        let temporal = 2.0 * medium.alpha0() / c.powf(1.0 + 2.0 * yv);
        let spatial = 2.0 * medium.alpha0() / c.powf(1.0 + yv);
        Ok(match model {
            ModelKind::Lossless => Self::None,
            ModelKind::StructuralDamping { eta } => Self::Structural(eta),
            ModelKind::TemporalReal => Self::TemporalReal {
                weights: gl_weights(y, 0),
                coef: temporal,
            },
            ModelKind::TemporalComplex => Self::TemporalComplex {
                weights: gl_weights(FracOrder::new(1.0 + yv)?, 0),
                coef: complex_damping_factor(y) * temporal,
                lead: match options.temporal_scheme.resolve(y) {
                    TemporalScheme::Weighted => Some(0.5 * (1.0 + yv)),
                    _ => None,
                },
                blended: Vec::new(),
            },
            ModelKind::SpatialReal => match path {
                SpatialPath::Matrix => {
                    let half = FracOrder::new(0.5 * yv)?;
                    Self::SpatialMatrix {
                        op: SymmetricApply::new(&build_laplacian(grid).frac_power_matrix(half)),
                        coef: Complex64::new(spatial, 0.0),
                    }
                }
                SpatialPath::Spectral => Self::SpatialSpectral {
                    op: Arc::new(SpectralMultiplier::magnitude_power(grid, y)?),
                    coef: Complex64::new(spatial, 0.0),
                },
            },
            ModelKind::SpatialComplex => Self::SpatialSpectral {
                op: Arc::new(SpectralMultiplier::complex_power(grid, y)?),
                coef: complex_damping_factor(y) * spatial,
            },
        })
    }

    fn uses_history(&self) -> bool {
        matches!(
            self,
            Self::TemporalReal { .. } | Self::TemporalComplex { .. }
        )
    }

    /// The quantity whose backward difference forms the damping term.
    fn differenced_quantity(
        &mut self,
        p: &[Complex64],
        history: Option<&HistoryBuffer>,
    ) -> Result<Option<Vec<Complex64>>> {
        Ok(match self {
            Self::TemporalReal { weights, .. } => {
                let mut q = vec![ZERO; p.len()];
                history
                    .ok_or(Error::EmptyHistory)?
                    .apply_weights(weights, &mut q)?;
                for v in q.iter_mut() {
                    *v = Complex64::new(v.norm(), 0.0);
                }
                Some(q)
            }
            Self::SpatialMatrix { op, .. } => {
                let mut q = vec![ZERO; p.len()];
                op.apply(p, &mut q);
                Some(q)
            }
            Self::SpatialSpectral { op, .. } => Some(op.apply(p)?),
            _ => None,
        })
    }
}

/// One model on one grid at a fixed time step.
#[derive(Debug, Clone)]
pub struct WaveSolver {
    model: ModelKind,
    medium: MediumParams,
    grid: Grid1D,
    dt: f64,
    damping: Damping,
    window: Option<usize>,
}

impl WaveSolver {
    pub fn new(model: ModelKind, medium: MediumParams, grid: Grid1D, dt: f64) -> Result<Self> {
        Self::with_options(model, medium, grid, dt, &SolverOptions::default())
    }

    pub fn with_options(
        model: ModelKind,
        medium: MediumParams,
        grid: Grid1D,
        dt: f64,
        options: &SolverOptions,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let cfl = grid.h() / medium.c();
        if dt > cfl {
            return Err(Error::CflViolation { dt, limit: cfl });
        }
        Ok(Self {
            damping: Damping::build(model, &medium, &grid, options)?,
            model,
            medium,
            grid,
            dt,
            window: options.history_window,
        })
    }

    /// Same operators, different step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let cfl = self.grid.h() / self.medium.c();
        if !(dt > 0.0) || dt > cfl {
            return Err(Error::CflViolation { dt, limit: cfl });
        }
        let mut s = self.clone();
        s.dt = dt;
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn medium(&self) -> &MediumParams {
        &self.medium
    }

    /// Builds the state for levels `-1` (`p_prev`) and `0` (`p_now`); the
    /// field is zero before level `-1`.
    pub fn initial_state(
        &mut self,
        p_prev: Vec<Complex64>,
        p_now: Vec<Complex64>,
    ) -> Result<WaveState> {
        let n = self.grid.n();
        for f in [&p_prev, &p_now] {
            if f.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: f.len(),
                });
            }
        }
        let mut history = None;
        let aux_prev;
        if self.damping.uses_history() {
            let mut h = match self.window {
                Some(w) => HistoryBuffer::with_window(self.dt, w)?,
                None => HistoryBuffer::new(self.dt)?,
            };
            h.push(p_prev.clone())?;
            aux_prev = self.damping.differenced_quantity(&p_prev, Some(&h))?;
            h.push(p_now.clone())?;
            history = Some(h);
        } else {
            aux_prev = self.damping.differenced_quantity(&p_prev, None)?;
        }
        Ok(WaveState {
            p_now,
            p_prev,
            t: 0.0,
            steps: 0,
            history,
            aux_prev,
        })
    }

    /// Quiescent start.
    pub fn zero_state(&mut self) -> Result<WaveState> {
        let n = self.grid.n();
        self.initial_state(vec![ZERO; n], vec![ZERO; n])
    }

    pub fn step(&mut self, state: &mut WaveState) -> Result<()> {
        self.step_forced(state, None)
    }

    /// Advances one step; `forcing = (index, s)` adds a point source `s δ(x - x_i)`
    /// evaluated at the current level.
    pub fn step_forced(
        &mut self,
        state: &mut WaveState,
        forcing: Option<(usize, Complex64)>,
    ) -> Result<()> {
        let n = self.grid.n();
        let c2dt2 = self.medium.c().powi(2) * self.dt * self.dt;
        let mut rhs = vec![ZERO; n];
        laplacian_apply(&self.grid, &state.p_now, &mut rhs);
        if let Damping::Structural(eta) = self.damping {
            let factor = Complex64::new(1.0, -eta);
            for v in rhs.iter_mut() {
                *v *= factor;
            }
        }

        let mut implicit = None;
        match &mut self.damping {
            Damping::TemporalComplex {
                weights,
                coef,
                lead,
                blended,
            } => {
                let history = state.history.as_ref().ok_or(Error::EmptyHistory)?;
                let mut g = vec![ZERO; n];
                match *lead {
                    None => history.apply_weights(weights, &mut g)?,
                    Some(lambda) => {
                        // λ Σ w_k p^{n+1-k} + (1-λ) Σ w_k p^{n-k}; the p^{n+1}
                        // term is moved to the left-hand side
                        let len = history.len();
                        weights.ensure_len(len + 1);
                        let w = weights.as_slice();
                        blended.clear();
                        blended.extend((0..len).map(|k| lambda * w[k + 1] + (1.0 - lambda) * w[k]));
                        let scale = self.dt.powf(-weights.order().value());
                        history.convolve(blended, scale, &mut g)?;
                        implicit = Some(1.0 + c2dt2 * *coef * lambda * scale);
                    }
                }
                let coef = *coef;
                for (r, v) in rhs.iter_mut().zip(&g) {
                    *r += coef * v;
                }
            }
            Damping::None | Damping::Structural(_) => {}
            _ => {
                let q = self
                    .damping
                    .differenced_quantity(&state.p_now, state.history.as_ref())?
                    .expect("differenced damping");
                let coef = match &self.damping {
                    Damping::TemporalReal { coef, .. } => Complex64::new(*coef, 0.0),
                    Damping::SpatialMatrix { coef, .. } | Damping::SpatialSpectral { coef, .. } => {
                        *coef
                    }
                    _ => unreachable!(),
                } / self.dt;
                let prev = state.aux_prev.as_ref().expect("aux initialized");
                for ((r, qn), qp) in rhs.iter_mut().zip(&q).zip(prev) {
                    *r += coef * (qn - qp);
                }
                state.aux_prev = Some(q);
            }
        }

        let mut next: Vec<Complex64> = state
            .p_now
            .iter()
            .zip(&state.p_prev)
            .zip(&rhs)
            .map(|((a, b), r)| a * 2.0 - b - r * c2dt2)
            .collect();
        if let Some((i, s)) = forcing {
            next[i] += s * (c2dt2 / self.grid.h());
        }
        if let Some(beta) = implicit {
            let inv = 1.0 / beta;
            next.iter_mut().for_each(|v| *v *= inv);
        }
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Unstable {
                growth: vec![f64::INFINITY],
            });
        }
        if let Some(h) = state.history.as_mut() {
            h.push(next.clone())?;
        }
        state.p_prev = std::mem::replace(&mut state.p_now, next);
        state.t += self.dt;
        state.steps += 1;
        Ok(())
    }
}

/// Staggered discrete energy `Σ [|p^{n+1}-p^n|²/(c²dt²) + Re(D⁺p^{n+1} conj D⁺p^n)] h`,
/// conserved to round-off by the lossless leapfrog.
pub fn discrete_energy(
    grid: &Grid1D,
    c: f64,
    dt: f64,
    prev: &[Complex64],
    now: &[Complex64],
) -> f64 {
    let n = grid.n();
    let h = grid.h();
    let fwd = |u: &[Complex64], i: usize| -> Complex64 {
        let right = if i + 1 < n {
            u[i + 1]
        } else if grid.is_periodic() {
            u[0]
        } else {
            ZERO
        };
        (right - u[i]) / h
    };
    let mut e = 0.0;
    for i in 0..n {
        e += (now[i] - prev[i]).norm_sqr() / (c * c * dt * dt);
        e += (fwd(now, i) * fwd(prev, i).conj()).re;
    }
    // Dirichlet: the difference across the left wall
    if !grid.is_periodic() {
        e += (now[0] * prev[0].conj()).re / (h * h);
    }
    e * h
}

/// Initial data for stability probes: a unit spike at the grid center with
/// zero velocity. Complex-domain models get its forward-travelling,
/// positive-frequency part instead.
fn probe_initial(solver: &WaveSolver) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = solver.grid();
    let n = grid.n();
    let center = n / 2;
    if solver.model().is_complex_domain() && grid.is_periodic() {
        let c = solver.medium().c();
        let dt = solver.dt();
        let courant = c * dt / grid.h();
        let mut now = vec![ZERO; n];
        let mut prev = vec![ZERO; n];
        for m in 1..n.div_ceil(2) {
            let theta = 2.0 * PI * m as f64 / n as f64;
            let arg = (courant * (0.5 * discrete_wavenumber(grid, m) * grid.h())).min(1.0);
            let omega_dt = 2.0 * arg.asin();
            for (j, (a, b)) in now.iter_mut().zip(prev.iter_mut()).enumerate() {
                let phase = theta * (j as f64 - center as f64);
                *a += Complex64::from_polar(1.0 / n as f64, phase);
                *b += Complex64::from_polar(1.0 / n as f64, phase + omega_dt);
            }
        }
        (prev, now)
    } else {
        let mut now = vec![ZERO; n];
        now[center] = Complex64::new(1.0, 0.0);
        (now.clone(), now)
    }
}

/// Runs `steps` steps from the probe initial data and returns
/// `max_n max_j |p_j^n| / max_j |p_j^0|`.
pub fn probe_growth(solver: &WaveSolver, steps: usize) -> Result<f64> {
    let mut solver = solver.clone();
    let (prev, now) = probe_initial(&solver);
    let mut state = solver.initial_state(prev, now)?;
    let initial = state.max_abs();
    let mut peak = initial;
    for _ in 0..steps {
        match solver.step(&mut state) {
            Ok(()) => peak = peak.max(state.max_abs()),
            Err(Error::Unstable { .. }) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(peak / initial)
}

fn probe_accepts(model: ModelKind, medium: &MediumParams, growth: f64) -> bool {
    if model.is_lossless(medium) {
        growth < 1.0 + 1e-6
    } else {
        growth <= 1.0
    }
}

/// Empirical stable step: start at `0.5 h / c` and halve until a
/// [`PROBE_STEPS`]-step probe run does not grow. A candidate that passes is
/// returned only if a [`CONFIRM_STEPS`]-step run from the same data does not
/// grow either.
pub fn stable_dt(model: ModelKind, medium: &MediumParams, grid: &Grid1D) -> Result<f64> {
    stable_dt_with(model, medium, grid, &SolverOptions::default())
}

pub fn stable_dt_with(
    model: ModelKind,
    medium: &MediumParams,
    grid: &Grid1D,
    options: &SolverOptions,
) -> Result<f64> {
    let mut dt = SAFETY_FACTOR * grid.h() / medium.c();
    let base = WaveSolver::with_options(model, *medium, *grid, dt, options)?;
    let mut growth = Vec::new();
    for _ in 0..=MAX_HALVINGS {
        let solver = base.with_dt(dt)?;
        let g = probe_growth(&solver, PROBE_STEPS)?;
        growth.push(g);
        if probe_accepts(model, medium, g) {
            let long = probe_growth(&solver, CONFIRM_STEPS)?;
            if probe_accepts(model, medium, long) {
                return Ok(dt);
            }
            *growth.last_mut().unwrap() = long;
        }
        dt *= 0.5;
    }
    Err(Error::Unstable { growth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Zero-velocity initial profile shaped by the pulse envelope.
    InitialPulse,
    /// Point forcing `(2/c) f'(t)` whose free-space response is `f(t - |x|/c)`.
    DrivenPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub location: usize,
    pub pulse: PulseSpec,
}

impl SourceSpec {
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if self.location >= grid.n() {
            return Err(invalid("location", "source lies outside the grid"));
        }
        self.pulse.validate()
    }

    fn initial_profile(&self, grid: &Grid1D, c: f64) -> Vec<Complex64> {
        let center = grid.x(self.location);
        let t0 = self.pulse.delay();
        (0..grid.n())
            .map(|i| {
                let mut d = grid.x(i) - center;
                if grid.is_periodic() {
                    let l = grid.length();
                    d -= l * (d / l).round();
                }
                self.pulse.value(t0 - d / c)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    /// Fixed time step; `None` asks [`stable_dt`].
    pub dt: Option<f64>,
    pub solver: SolverOptions,
}

/// Uniformly sampled probe time series.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTraces {
    pub dt: f64,
    pub probes: Vec<usize>,
    pub times: Vec<f64>,
    /// One series per probe.
    pub traces: Vec<Vec<Complex64>>,
}

/// Runs `model` for `duration` seconds and records the field at `probes`
/// after every step, starting with level 0.
pub fn simulate(
    model: ModelKind,
    medium: &MediumParams,
    grid: &Grid1D,
    source: Option<&SourceSpec>,
    duration: f64,
    probes: &[usize],
    options: &SimulationOptions,
) -> Result<ProbeTraces> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(invalid(
            "duration",
            format!("must be positive, got {duration}"),
        ));
    }
    if let Some(&bad) = probes.iter().find(|&&i| i >= grid.n()) {
        return Err(invalid("probes", format!("index {bad} outside grid")));
    }
    if let Some(s) = source {
        s.validate(grid)?;
    }
    let dt = match options.dt {
        Some(dt) => dt,
        None => stable_dt_with(model, medium, grid, &options.solver)?,
    };
    let mut solver = WaveSolver::with_options(model, *medium, *grid, dt, &options.solver)?;
    let mut state = match source {
        Some(s) if s.kind == SourceKind::InitialPulse => {
            let p = s.initial_profile(grid, medium.c());
            solver.initial_state(p.clone(), p)?
        }
        _ => solver.zero_state()?,
    };
    let driven = source.filter(|s| s.kind == SourceKind::DrivenPoint);
    let steps = (duration / dt).ceil() as usize;
    let mut traces: Vec<Vec<Complex64>> = probes
        .iter()
        .map(|_| Vec::with_capacity(steps + 1))
        .collect();
    let mut times = Vec::with_capacity(steps + 1);
    let record = |state: &WaveState, traces: &mut Vec<Vec<Complex64>>, times: &mut Vec<f64>| {
        times.push(state.t());
        for (tr, &i) in traces.iter_mut().zip(probes) {
            tr.push(state.p_now()[i]);
        }
    };
    record(&state, &mut traces, &mut times);
    let scale = 2.0 / medium.c();
    for _ in 0..steps {
        let forcing = driven.map(|s| (s.location, s.pulse.derivative(state.t()) * scale));
        solver.step_forced(&mut state, forcing)?;
        record(&state, &mut traces, &mut times);
    }
    Ok(ProbeTraces {
        dt,
        probes: probes.to_vec(),
        times,
        traces,
    })
}
