//! Decoherence exponent `Γ(t) = ∫₀^∞ h(e)|Δ(e,t)|² de` and intensity
//! `I(t) = exp(-Γ(t))`.
//!
//! Two independent routes are provided. The kernel route groups the pair
//! expansion of `|Δ|²` by time difference and sums cosine kernels; the
//! direct route integrates `h(e)|Δ(e,t)|²` adaptively.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::Tolerance;
use crate::sequence::{LagWeights, PulseTrain};
use crate::spectral::{Family, KernelMethod, KernelValue, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Mass fraction discarded when truncating non-compact densities.
    pub tail_mass: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_subdivisions: 20_000,
            tail_mass: 1e-14,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", format!("must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(invalid("abs_tol", format!("must be ≥ 0, got {}", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(invalid("max_subdivisions", "must be ≥ 1"));
        }
        if !(self.tail_mass > 0.0 && self.tail_mass < 1.0) {
            return Err(invalid(
                "tail_mass",
                format!("must lie in (0, 1), got {}", self.tail_mass),
            ));
        }
        Ok(())
    }

    pub(crate) fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kernel,
    Direct,
}

impl Method {
    /// Kernel for closed-form families, direct for tables.
    pub fn default_for(sd: &SpectralDensity) -> Self {
        if sd.family() == Family::Tabulated {
            Method::Direct
        } else {
            Method::Kernel
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Kernel => "kernel",
            Method::Direct => "direct",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Method::Kernel),
            "direct" => Ok(Method::Direct),
            other => Err(invalid(
                "method",
                format!("expected `kernel` or `direct`, got `{other}`"),
            )),
        }
    }
}

/// A value with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn finish_exponent(raw: f64, error: f64, converged: bool) -> Estimate {
    // Round-off can leave Γ a hair below zero near t = 0.
    let value = if raw < 0.0 && raw >= -(error + 1e-12) {
        0.0
    } else {
        raw
    };
    Estimate {
        value,
        error,
        converged,
    }
}

fn kernel_route(
    sd: &SpectralDensity,
    weights: &LagWeights,
    cfg: &QuadratureConfig,
    lattice: Option<&[KernelValue]>,
) -> Result<Estimate> {
    let mut error = 0.0;
    let mut converged = true;
    let mut total = 0.0;
    for (l, w) in weights.lattice().iter().enumerate() {
        let k = match lattice {
            Some(cache) => cache[l],
            None => sd.kernel_unchecked(weights.lattice_lag(l), KernelMethod::Auto, cfg)?,
        };
        total += w * k.value;
        error += w.abs() * k.error;
        converged &= k.converged;
    }
    for (i, w) in weights.shifted().iter().enumerate() {
        let k = sd.kernel_unchecked(weights.shifted_lag(i), KernelMethod::Auto, cfg)?;
        total += w * k.value;
        error += w.abs() * k.error;
        converged &= k.converged;
    }
    Ok(finish_exponent(total, error, converged))
}

fn direct_route(
    sd: &SpectralDensity,
    train: &PulseTrain,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let u = train.time_since_last(t)?;
    let (bulk, split) = sd.integrate_bulk(|e| train.delta_unchecked(e, u).norm_sqr(), t, cfg)?;
    let mut total = bulk;
    if let Some(from) = split {
        // Beyond the split the density is only reachable on a rotated
        // contour, which needs |Δ|² in its cosine-expanded form.
        let weights = train.lag_weights(t)?;
        let mut err = 0.0;
        let mut ok = true;
        let tail = weights.evaluate(|d| {
            let r = sd.lorentzian_cos_tail(from, d, cfg);
            err += r.error;
            ok &= r.converged;
            r.value
        });
        total.value += tail;
        total.error += err;
        total.converged &= ok;
    }
    Ok(finish_exponent(total.value, total.error, total.converged))
}

/// `Γ(t)` for `train` at time `t ≥ N·τ_s`.
///
/// Non-convergence of the underlying quadratures is reported through
/// [`Estimate::converged`], not as an error.
pub fn decoherence_exponent(
    sd: &SpectralDensity,
    train: &PulseTrain,
    t: f64,
    cfg: &QuadratureConfig,
    method: Method,
) -> Result<Estimate> {
    cfg.validate()?;
    match method {
        Method::Kernel => kernel_route(sd, &train.lag_weights(t)?, cfg, None),
        Method::Direct => direct_route(sd, train, t, cfg),
    }
}

/// `I(t) = exp(-Γ(t))`, error propagated as `I·ΔΓ`.
pub fn intensity(
    sd: &SpectralDensity,
    train: &PulseTrain,
    t: f64,
    cfg: &QuadratureConfig,
    method: Method,
) -> Result<Estimate> {
    let g = decoherence_exponent(sd, train, t, cfg, method)?;
    let value = (-g.value).exp();
    Ok(Estimate {
        value,
        error: value * g.error,
        converged: g.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub intensity: f64,
    pub exponent: f64,
    pub n_pulses: usize,
    /// Absolute error estimate of the exponent.
    pub error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceTrace {
    pub tau_s: f64,
    pub method: Method,
    pub points: Vec<TracePoint>,
}

impl CoherenceTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.t)
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.intensity)
    }

    pub fn unconverged(&self) -> impl Iterator<Item = &TracePoint> {
        self.points.iter().filter(|p| !p.converged)
    }

    /// Writes `t_scaled,intensity,exponent,n_pulses,err`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_scaled", "intensity", "exponent", "n_pulses", "err"])?;
        for p in &self.points {
            w.write_record([
                p.t.to_string(),
                p.intensity.to_string(),
                p.exponent.to_string(),
                p.n_pulses.to_string(),
                p.error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform grid `0, dt, 2dt, ..., ≤ t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(invalid("t_max", format!("must be ≥ 0, got {t_max}")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * dt).collect())
}

/// Samples `I(t)` on `t_grid` with `N(t) = min(⌊t/τ_s⌋, max_pulses)` pulses
/// applied. Points are evaluated in parallel and returned in grid order.
pub fn trace(
    sd: &SpectralDensity,
    tau_s: f64,
    max_pulses: usize,
    t_grid: &[f64],
    cfg: &QuadratureConfig,
    method: Method,
) -> Result<CoherenceTrace> {
    cfg.validate()?;
    if !(tau_s > 0.0) {
        return Err(invalid("tau_s", format!("must be > 0, got {tau_s}")));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("t_grid", "times must be finite and ≥ 0"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "times must increase strictly"));
    }
    let counts: Vec<usize> = t_grid
        .iter()
        .map(|&t| PulseTrain::pulses_applied(t, tau_s, max_pulses))
        .collect();
    let max_n = counts.iter().copied().max().unwrap_or(0);
    let train_for = |n: usize| -> Result<PulseTrain> {
        if n == 0 {
            Ok(PulseTrain::free_decay())
        } else {
            PulseTrain::new(n, tau_s)
        }
    };

    let lattice: Vec<KernelValue> = if method == Method::Kernel {
        (0..=max_n)
            .into_par_iter()
            .map(|l| {
                let lag = if l == 0 { 0.0 } else { l as f64 * tau_s };
                sd.kernel_unchecked(lag, KernelMethod::Auto, cfg)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let points = t_grid
        .par_iter()
        .zip(counts.par_iter())
        .map(|(&t, &n)| -> Result<TracePoint> {
            let train = train_for(n)?;
            let g = match method {
                Method::Kernel => kernel_route(sd, &train.lag_weights(t)?, cfg, Some(&lattice[..=n]))?,
                Method::Direct => direct_route(sd, &train, t, cfg)?,
            };
            Ok(TracePoint {
                t,
                intensity: (-g.value).exp(),
                exponent: g.value,
                n_pulses: n,
                error: g.error,
                converged: g.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CoherenceTrace {
        tau_s,
        method,
        points,
    })
}
