//! Synchronized-pulse analysis: asymptotic peak values `P(τ_s)`, interval
//! sweeps, pulse-interval optimization and interaction-mode diagnostics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::QuadratureConfig;
use crate::error::{invalid, Error, Result};
use crate::sequence::LagWeights;
use crate::spectral::{Family, KernelMethod, SpectralDensity};

/// Tail-convergence settings for [`asymptotic_peak`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOptions {
    pub conv_tol: f64,
    /// Consecutive same-parity steps that must stay within `conv_tol`.
    pub conv_window: usize,
    pub n_max: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            conv_tol: 1e-4,
            conv_window: 4,
            n_max: 200,
        }
    }
}

impl PeakOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.conv_tol > 0.0) {
            return Err(invalid("conv_tol", format!("must be > 0, got {}", self.conv_tol)));
        }
        if self.conv_window < 1 {
            return Err(invalid("conv_window", "must be ≥ 1"));
        }
        if self.n_max < 4 {
            return Err(invalid("n_max", format!("must be ≥ 4, got {}", self.n_max)));
        }
        Ok(())
    }
}

/// Intensities sampled at the pulse times `n·τ_s`, `n = 1..`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSeries {
    pub tau_s: f64,
    pub peak_values: Vec<f64>,
    pub converged: bool,
    /// Tail average when converged, otherwise the last value.
    pub limit: f64,
    pub n_used: usize,
    /// Mean distance of each tail value from the midpoint of its two
    /// neighbours; measures even/odd disagreement free of linear drift.
    pub parity_gap: f64,
}

fn parity_gap(window: &[f64]) -> f64 {
    if window.len() < 3 {
        return 0.0;
    }
    let gaps: Vec<f64> = window
        .windows(3)
        .map(|w| (w[1] - 0.5 * (w[0] + w[2])).abs())
        .collect();
    gaps.iter().sum::<f64>() / gaps.len() as f64
}

/// Evaluates `I(nτ_s)` with `n` pulses until both parities settle.
///
/// Convergence: for each parity, the last `conv_window` steps
/// `|I((n+2)τ) - I(nτ)|` are all within `conv_tol`.
pub fn asymptotic_peak(
    sd: &SpectralDensity,
    tau_s: f64,
    opts: &PeakOptions,
    cfg: &QuadratureConfig,
) -> Result<PeakSeries> {
    opts.validate()?;
    cfg.validate()?;
    if !(tau_s > 0.0) || !tau_s.is_finite() {
        return Err(invalid("tau_s", format!("must be finite and > 0, got {tau_s}")));
    }
    // At t = nτ every pair difference is a multiple of τ.
    let kernel: Vec<f64> = (0..=opts.n_max)
        .map(|l| {
            let lag = if l == 0 { 0.0 } else { l as f64 * tau_s };
            sd.kernel_unchecked(lag, KernelMethod::Auto, cfg).map(|k| k.value)
        })
        .collect::<Result<_>>()?;

    let w = opts.conv_window;
    let span = 2 * w;
    let mut values = Vec::with_capacity(opts.n_max);
    for n in 1..=opts.n_max {
        let lw = LagWeights::new(n, tau_s, 0.0);
        let gamma: f64 = lw.lattice().iter().zip(&kernel).map(|(w, k)| w * k).sum::<f64>()
            + lw.shifted().iter().zip(&kernel).map(|(w, k)| w * k).sum::<f64>();
        values.push((-gamma.max(0.0)).exp());

        if n >= span + 2 {
            let settled = (n - span + 1..=n).all(|m| (values[m - 1] - values[m - 3]).abs() <= opts.conv_tol);
            if settled {
                let tail = &values[n - span..n];
                let limit = tail.iter().sum::<f64>() / span as f64;
                return Ok(PeakSeries {
                    tau_s,
                    converged: true,
                    limit,
                    n_used: n,
                    parity_gap: parity_gap(tail),
                    peak_values: values,
                });
            }
        }
    }
    let n = values.len();
    let tail = &values[n.saturating_sub(span)..];
    Ok(PeakSeries {
        tau_s,
        converged: false,
        limit: values[n - 1],
        n_used: n,
        parity_gap: parity_gap(tail),
        peak_values: values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub tau_s: f64,
    pub p: f64,
    pub converged: bool,
    pub n_used: usize,
    pub parity_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalMaximum {
    pub tau_s: f64,
    pub p: f64,
    pub prominence: f64,
    /// Grid index of the unrefined peak.
    pub grid_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub maxima: Vec<LocalMaximum>,
}

impl SweepResult {
    pub fn tau_grid(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.tau_s)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.p)
    }

    /// Writes `tau_s_scaled,P,converged,n_used`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau_s_scaled", "P", "converged", "n_used"])?;
        for p in &self.points {
            w.write_record([
                p.tau_s.to_string(),
                p.p.to_string(),
                p.converged.to_string(),
                p.n_used.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Topographic prominence of an interior grid peak.
fn prominence(values: &[f64], i: usize) -> f64 {
    let peak = values[i];
    let mut left_min = peak;
    for &v in values[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &values[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Strict interior peaks of `values` whose prominence exceeds `threshold`.
pub fn interior_peaks(values: &[f64], threshold: f64) -> Vec<(usize, f64)> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .map(|i| (i, prominence(values, i)))
        .filter(|&(_, p)| p > threshold)
        .collect()
}

/// Maximizes a unimodal `f` on `[a, b]` until the bracket is narrower than
/// `tol`. Returns the best abscissa seen and its value.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Golden-section interval tolerance in scaled time.
const INTERVAL_TOL: f64 = 1e-3;

fn peak_value(sd: &SpectralDensity, tau: f64, opts: &PeakOptions, cfg: &QuadratureConfig) -> f64 {
    asymptotic_peak(sd, tau, opts, cfg).map_or(f64::NEG_INFINITY, |s| s.limit)
}

/// `P(τ_s)` over `tau_grid`, with interior maxima refined by golden-section
/// search inside their neighbouring grid cells.
pub fn sweep(
    sd: &SpectralDensity,
    tau_grid: &[f64],
    opts: &PeakOptions,
    cfg: &QuadratureConfig,
) -> Result<SweepResult> {
    opts.validate()?;
    if tau_grid.is_empty() {
        return Err(invalid("tau_grid", "must not be empty"));
    }
    if tau_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(invalid("tau_grid", "intervals must be finite and > 0"));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tau_grid", "intervals must increase strictly"));
    }
    let points = tau_grid
        .par_iter()
        .map(|&tau| {
            asymptotic_peak(sd, tau, opts, cfg).map(|s| SweepPoint {
                tau_s: tau,
                p: s.limit,
                converged: s.converged,
                n_used: s.n_used,
                parity_gap: s.parity_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = points.iter().map(|p| p.p).collect();
    let maxima = interior_peaks(&values, opts.conv_tol)
        .into_iter()
        .map(|(i, prom)| {
            let (lo, hi) = (tau_grid[i - 1], tau_grid[i + 1]);
            let (tau, p) = golden_section_max(|t| peak_value(sd, t, opts, cfg), lo, hi, INTERVAL_TOL);
            let (tau, p) = if p >= values[i] {
                (tau, p)
            } else {
                (tau_grid[i], values[i])
            };
            LocalMaximum {
                tau_s: tau,
                p,
                prominence: prom,
                grid_index: i,
            }
        })
        .collect();
    Ok(SweepResult { points, maxima })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizedInterval {
    pub tau_s: f64,
    pub p: f64,
    pub bracket: (f64, f64),
    pub p_at_bracket: (f64, f64),
}

/// Points sampled across the bracket before golden-section refinement.
const BRACKET_SAMPLES: usize = 26;

/// Maximizes `P(τ_s)` inside `bracket`.
///
/// The bracket is sampled first; if the best sample is not an interior peak
/// rising more than `conv_tol` above both ends, the bracket is flat and an
/// error is returned.
pub fn optimize_interval(
    sd: &SpectralDensity,
    bracket: (f64, f64),
    opts: &PeakOptions,
    cfg: &QuadratureConfig,
) -> Result<OptimizedInterval> {
    opts.validate()?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid("bracket", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let grid: Vec<f64> = (0..BRACKET_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (BRACKET_SAMPLES - 1) as f64)
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| asymptotic_peak(sd, t, opts, cfg).map(|s| s.limit))
        .collect::<Result<_>>()?;
    let (best, &p_best) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let ends = (values[0], values[values.len() - 1]);
    if best == 0 || best == grid.len() - 1 || p_best - ends.0.max(ends.1) <= opts.conv_tol {
        return Err(Error::FlatBracket { lo, hi });
    }
    let (tau, p) = golden_section_max(
        |t| peak_value(sd, t, opts, cfg),
        grid[best - 1],
        grid[best + 1],
        INTERVAL_TOL,
    );
    let (tau, p) = if p >= p_best {
        (tau, p)
    } else {
        (grid[best], p_best)
    };
    Ok(OptimizedInterval {
        tau_s: tau,
        p,
        bracket,
        p_at_bracket: ends,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "markovian-like")]
    MarkovianLike,
    #[serde(rename = "non-markovian-like")]
    NonMarkovianLike,
}

/// Least-squares fits to the log-envelope of the normalized correlation
/// `C(x) = K(x)/K(0)`: `a + b·x` (exponential decay) and `a + c·x²`
/// (Gaussian decay). Residuals are mean squared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationFit {
    pub exponential_residual: f64,
    pub gaussian_residual: f64,
    pub verdict: Verdict,
    pub envelope_points: usize,
    pub exponential_rate: f64,
    pub gaussian_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionModeReport {
    pub family: Family,
    /// Coupling of the single collective mode, `sqrt(∫ e² h(e) de)`.
    pub g: f64,
    /// Upper cutoff used when `∫ e² h` diverges.
    pub g_truncated_at: Option<f64>,
    pub weight_2: f64,
    /// Frequency at which `h` peaks.
    pub center_mode: f64,
    /// `∫ e³ h / ∫ e² h`, the mean frequency of the collective mode.
    pub center_weighted: f64,
    pub width: f64,
    pub correlation_fit: Option<CorrelationFit>,
    pub diagnostic_only: bool,
}

impl InteractionModeReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Window and sampling step for the correlation-envelope fit.
const ENVELOPE_WINDOW: (f64, f64) = (1.0, 20.0);
const ENVELOPE_STEP: f64 = 0.01;

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n;
    (intercept, slope, residual)
}

fn correlation_fit(sd: &SpectralDensity, cfg: &QuadratureConfig) -> Result<Option<CorrelationFit>> {
    let k0 = sd.kernel_unchecked(0.0, KernelMethod::Auto, cfg)?.value;
    if !(k0 > 0.0) {
        return Ok(None);
    }
    let (a, b) = ENVELOPE_WINDOW;
    let n = ((b - a) / ENVELOPE_STEP).round() as usize;
    let c: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = a + i as f64 * ENVELOPE_STEP;
            sd.kernel_unchecked(x, KernelMethod::Auto, cfg)
                .map(|k| (x, (k.value / k0).abs()))
        })
        .collect::<Result<_>>()?;
    let peaks: Vec<(f64, f64)> = c
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1 && w[1].1 > 0.0)
        .map(|w| (w[1].0, w[1].1.ln()))
        .collect();
    if peaks.len() < 3 {
        return Ok(None);
    }
    let xs: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = peaks.iter().map(|p| p.1).collect();
    let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let (_, rate, exp_res) = least_squares_line(&xs, &ys);
    let (_, curvature, gauss_res) = least_squares_line(&x2, &ys);
    Ok(Some(CorrelationFit {
        exponential_residual: exp_res,
        gaussian_residual: gauss_res,
        verdict: if exp_res <= gauss_res {
            Verdict::MarkovianLike
        } else {
            Verdict::NonMarkovianLike
        },
        envelope_points: peaks.len(),
        exponential_rate: -rate,
        gaussian_curvature: -curvature,
    }))
}

/// Collective-mode diagnostics for `sd`.
pub fn interaction_mode_report(
    sd: &SpectralDensity,
    cfg: &QuadratureConfig,
) -> Result<InteractionModeReport> {
    let moments = sd.total_weight(cfg)?;
    let weight_2 = moments.weight_2.value;
    let truncated_at = moments.weight_2.truncated_at;

    let third = {
        let (bulk, split) = sd.integrate_bulk(|e| e * e * e, 0.0, cfg)?;
        match (split, truncated_at) {
            (Some(from), Some(hi)) => {
                let n = ((hi / from).ln() / 2f64.ln()).ceil().max(1.0) as usize;
                let pts: Vec<f64> = (0..=n)
                    .map(|i| {
                        if i == n {
                            hi
                        } else {
                            from * (hi / from).powf(i as f64 / n as f64)
                        }
                    })
                    .collect();
                let tail =
                    crate::quadrature::integrate(|e: f64| sd.density(e) * e * e * e, &pts, &cfg.tolerance());
                bulk.value + tail.value
            }
            _ => bulk.value,
        }
    };

    let fit = correlation_fit(sd, cfg)?;
    Ok(InteractionModeReport {
        family: sd.family(),
        g: weight_2.sqrt(),
        g_truncated_at: truncated_at,
        weight_2,
        center_mode: sd.omega_p(),
        center_weighted: third / weight_2,
        width: sd.gamma_p(),
        diagnostic_only: fit.is_none(),
        correlation_fit: fit,
    })
}
