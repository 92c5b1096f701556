//! Multipulse control of dephasing for a two-level system linearly coupled
//! to a boson reservoir.
//!
//! The reservoir enters only through its coupling spectral density `h(e)`.
//! Under a train of instantaneous π pulses (after a π/2 pulse at `t = 0`)
//! the off-diagonal intensity is `I(t) = exp(-Γ(t))` with
//! `Γ(t) = ∫₀^∞ h(e) |Δ(e, t)|² de`, where `Δ` is the difference of the two
//! coherent-state displacements imprinted by the schedule.
//!
//! All frequencies are in units of the reservoir center frequency and all
//! times are scaled accordingly (`t̃ = ω_p t`).
//!
//! Module map:
//! - [`spectral`]: spectral densities, moments and cosine kernels `K(x)`.
//! - [`sequence`]: pulse trains, displacement amplitudes and the pair
//!   expansion of `|Δ|²`.
//! - [`coherence`]: `Γ(t)`, `I(t)` and sampled traces.
//! - [`analysis`]: asymptotic peak values, sweeps, interval optimization and
//!   interaction-mode diagnostics.
//! - [`oracle`]: discrete-mode step evolution used to verify the closed forms.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coherence;
mod error;
pub mod oracle;
pub mod quadrature;
pub mod sequence;
pub mod special;
pub mod spectral;

pub use analysis::{
    asymptotic_peak, interaction_mode_report, optimize_interval, sweep, CorrelationFit,
    InteractionModeReport, LocalMaximum, OptimizedInterval, PeakOptions, PeakSeries, SweepPoint, SweepResult,
    Verdict,
};
pub use coherence::{
    decoherence_exponent, intensity, trace, CoherenceTrace, Estimate, Method, QuadratureConfig, TracePoint,
};
pub use error::{Error, Result};
pub use oracle::{CrossCheckReport, DiscreteModeSet, DiscretizationRule};
pub use sequence::{LagWeights, ModulationExpansion, PulseTrain};
pub use spectral::{Family, KernelMethod, KernelValue, Moment, SpectralDensity, SpectralMoments};
