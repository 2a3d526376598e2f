//! Fractional time derivatives.
//!
//! Three routes to the same operator:
//!
//! * [`frac_deriv_gl`]: Grünwald–Letnikov sum over a uniformly sampled
//!   history, used for time stepping. First-order accurate.
//! * [`frac_deriv_rl`]: the Riemann–Liouville definition evaluated directly,
//!   inner convolution integral by product integration against the
//!   `(t-τ)^{-s}` kernel and outer `d/dt` by a central difference. Slow, only
//!   meant as a reference.
//! * [`ft_symbol`]: the Fourier symbol `(-iω)^s` for the `e^{-iωt}` convention.
//!
//! Fields are taken to be identically zero before the first stored sample.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::par;

/// Largest order any model needs: `1 + y` with `y <= 2`.
pub const MAX_ORDER: f64 = 3.0;

/// A validated real fractional order in `[0, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidOrder {
                value,
                reason: "not finite",
            });
        }
        if value < 0.0 {
            return Err(Error::InvalidOrder {
                value,
                reason: "negative",
            });
        }
        if value > MAX_ORDER {
            return Err(Error::InvalidOrder {
                value,
                reason: "exceeds 3",
            });
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl std::fmt::Display for FracOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Grünwald–Letnikov weights `w_k = (-1)^k binom(s, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlWeights {
    order: FracOrder,
    weights: Vec<f64>,
}

impl GlWeights {
    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Extends the table so that it holds at least `len` weights.
    pub fn ensure_len(&mut self, len: usize) {
        let s = self.order.value();
        if self.weights.is_empty() && len > 0 {
            self.weights.push(1.0);
        }
        while self.weights.len() < len {
            let k = self.weights.len() as f64;
            let prev = *self.weights.last().unwrap();
            self.weights.push(prev * (k - 1.0 - s) / k);
        }
    }
}

/// Weights `w_0..=w_n` from the recurrence `w_k = w_{k-1} (k-1-s)/k`.
pub fn gl_weights(s: FracOrder, n: usize) -> GlWeights {
    let mut w = GlWeights {
        order: s,
        weights: Vec::with_capacity(n + 1),
    };
    w.ensure_len(n + 1);
    w
}

/// Uniformly spaced field snapshots, oldest first.
///
/// With a window of length `L` only the newest `L` samples are kept and
/// [`HistoryBuffer::is_truncated`] reports once anything has been dropped.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    samples: VecDeque<Vec<Complex64>>,
    dt: f64,
    window: Option<usize>,
    truncated: bool,
}

impl HistoryBuffer {
    /// Full-memory buffer.
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self {
            samples: VecDeque::new(),
            dt,
            window: None,
            truncated: false,
        })
    }

    /// Short-memory buffer keeping at most `window` samples.
    pub fn with_window(dt: f64, window: usize) -> Result<Self> {
        if window < 2 {
            return Err(invalid("window", "must be at least 2"));
        }
        let mut h = Self::new(dt)?;
        h.window = Some(window);
        Ok(h)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn newest(&self) -> Option<&[Complex64]> {
        self.samples.back().map(|v| v.as_slice())
    }

    pub fn push(&mut self, snapshot: Vec<Complex64>) -> Result<()> {
        if let Some(first) = self.samples.front() {
            if first.len() != snapshot.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: snapshot.len(),
                });
            }
        }
        self.samples.push_back(snapshot);
        if let Some(w) = self.window {
            while self.samples.len() > w {
                self.samples.pop_front();
                self.truncated = true;
            }
        }
        Ok(())
    }

    /// Convenience for scalar signals.
    pub fn push_scalar(&mut self, value: f64) -> Result<()> {
        self.push(vec![Complex64::new(value, 0.0)])
    }

    /// Writes `dt^{-s} Σ_k w_k p(t - k dt)` into `out`, newest sample first.
    /// `weights` is grown on demand.
    pub fn apply_weights(&self, weights: &mut GlWeights, out: &mut [Complex64]) -> Result<()> {
        weights.ensure_len(self.samples.len());
        let scale = self.dt.powf(-weights.order().value());
        self.convolve(weights.as_slice(), scale, out)
    }

    /// Writes `scale Σ_k weights[k] p(t - k dt)` into `out`; samples beyond
    /// the end of `weights` are ignored.
    pub fn convolve(&self, weights: &[f64], scale: f64, out: &mut [Complex64]) -> Result<()> {
        let newest = self.newest().ok_or(Error::EmptyHistory)?;
        if out.len() != newest.len() {
            return Err(Error::DimensionMismatch {
                expected: newest.len(),
                got: out.len(),
            });
        }
        let samples = &self.samples;
        par::for_each_chunk(out, |offset, chunk| {
            chunk.fill(Complex64::new(0.0, 0.0));
            let end = offset + chunk.len();
            for (wk, snap) in weights.iter().zip(samples.iter().rev()) {
                if *wk == 0.0 {
                    continue;
                }
                for (o, v) in chunk.iter_mut().zip(&snap[offset..end]) {
                    *o += v * *wk;
                }
            }
            for o in chunk.iter_mut() {
                *o *= scale;
            }
        });
        Ok(())
    }
}

/// Grünwald–Letnikov derivative of order `s` at the newest sample.
pub fn frac_deriv_gl(history: &HistoryBuffer, s: FracOrder) -> Result<Vec<Complex64>> {
    let n = history.newest().ok_or(Error::EmptyHistory)?.len();
    let mut w = gl_weights(s, history.len().saturating_sub(1));
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    history.apply_weights(&mut w, &mut out)?;
    Ok(out)
}

/// Riemann–Liouville derivative `D^s p(t)` for `0 < s < 1`, default resolution.
pub fn frac_deriv_rl<F: Fn(f64) -> f64>(p: F, t: f64, s: FracOrder) -> Result<f64> {
    frac_deriv_rl_with(p, t, s, 4096, 1e-3 * t)
}

/// Riemann–Liouville derivative with explicit panel count and outer
/// difference step.
///
/// The inner integral `∫_0^T p(τ)(T-τ)^{-s} dτ` is exact for piecewise-linear
/// `p` on `panels` uniform panels; `d/dt` is the central difference with step
/// `delta`.
pub fn frac_deriv_rl_with<F: Fn(f64) -> f64>(
    p: F,
    t: f64,
    s: FracOrder,
    panels: usize,
    delta: f64,
) -> Result<f64> {
    let sv = s.value();
    if !(sv > 0.0 && sv < 1.0) {
        return Err(Error::InvalidOrder {
            value: sv,
            reason: "Riemann-Liouville route needs 0 < s < 1",
        });
    }
    if !(t > 0.0) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    if !(delta > 0.0 && delta < t) {
        return Err(invalid("delta", format!("must lie in (0, t), got {delta}")));
    }
    if panels == 0 {
        return Err(invalid("panels", "must be nonzero"));
    }
    let upper = weakly_singular_integral(&p, t + delta, sv, panels);
    let lower = weakly_singular_integral(&p, t - delta, sv, panels);
    Ok((upper - lower) / (2.0 * delta) / gamma(1.0 - sv))
}

/// Product integration of `p(τ)(T-τ)^{-s}` over `[0, T]`.
fn weakly_singular_integral<F: Fn(f64) -> f64>(p: &F, big_t: f64, s: f64, panels: usize) -> f64 {
    let width = big_t / panels as f64;
    let e0 = 1.0 - s;
    let e1 = 2.0 - s;
    let mut acc = 0.0;
    let mut p_left = p(0.0);
    for j in 0..panels {
        let p_right = p((j + 1) as f64 * width);
        // u = T - τ runs from b (left node) down to a (right node).
        let b = big_t - j as f64 * width;
        let a = (big_t - (j + 1) as f64 * width).max(0.0);
        let m0 = (b.powf(e0) - a.powf(e0)) / e0;
        let m1 = (b.powf(e1) - a.powf(e1)) / e1;
        acc += (p_left * (m1 - a * m0) + p_right * (b * m0 - m1)) / width;
        p_left = p_right;
    }
    acc
}

/// `D^s t^β = Γ(β+1)/Γ(β+1-s) t^{β-s}`, the closed form for power functions.
pub fn power_function_derivative(beta: f64, s: f64, t: f64) -> f64 {
    let denom_arg = beta + 1.0 - s;
    if denom_arg <= 0.0 && denom_arg.fract() == 0.0 {
        return 0.0;
    }
    gamma(beta + 1.0) / gamma(denom_arg) * t.powf(beta - s)
}

/// Fourier symbol `(-iω)^s = ω^s e^{-iπs/2}` for `ω > 0`.
pub fn ft_symbol(s: FracOrder, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    let sv = s.value();
    Ok(Complex64::from_polar(omega.powf(sv), -0.5 * PI * sv))
}

/// The complex-domain prefactor `i^{-3y}`, taken as `(i^{-3})^y = e^{iπy/2}`.
///
/// This agrees with `i^{-3y}` for every integer `y` and exactly cancels the
/// phase of `(-iω)^y`, so the complex models damp positive frequencies.
pub fn complex_damping_factor(y: FracOrder) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * PI * y.value())
}
