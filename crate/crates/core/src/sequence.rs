//! π-pulse trains and the displacement amplitudes they imprint.
//!
//! A train is a π/2 pulse at `t = 0` followed by `N` π pulses at `j·τ_s`,
//! `j = 1..N`. All amplitudes are per unit coupling `h_k`; global phases
//! drop out of the overlap and are not tracked.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Relative slack allowed when checking `t ≥ N·τ_s` on floating-point grids.
const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseTrain {
    n_pulses: usize,
    tau_s: f64,
}

impl PulseTrain {
    pub fn new(n_pulses: usize, tau_s: f64) -> Result<Self> {
        if !(tau_s > 0.0) || tau_s.is_nan() {
            return Err(invalid("tau_s", format!("must be > 0, got {tau_s}")));
        }
        if n_pulses > 0 && !tau_s.is_finite() {
            return Err(invalid("tau_s", "must be finite when pulses are applied"));
        }
        Ok(Self { n_pulses, tau_s })
    }

    /// Only the initial π/2 pulse.
    pub fn free_decay() -> Self {
        Self {
            n_pulses: 0,
            tau_s: f64::INFINITY,
        }
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_s
    }

    pub fn last_pulse_time(&self) -> f64 {
        if self.n_pulses == 0 {
            0.0
        } else {
            self.n_pulses as f64 * self.tau_s
        }
    }

    /// Pulses applied by time `t` (a pulse at exactly `t` counts), capped at
    /// `max_pulses`.
    pub fn pulses_applied(t: f64, tau_s: f64, max_pulses: usize) -> usize {
        if max_pulses == 0 || !tau_s.is_finite() || t <= 0.0 {
            return 0;
        }
        let n = (t / tau_s * (1.0 + TIME_SLACK)).floor();
        (n.max(0.0) as usize).min(max_pulses)
    }

    /// Time elapsed since the last pulse, `u = t - N·τ_s ≥ 0`.
    pub fn time_since_last(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Precondition(format!(
                "time must be finite and ≥ 0, got {t}"
            )));
        }
        let last = self.last_pulse_time();
        let u = t - last;
        if u < -TIME_SLACK * last.max(1.0) {
            return Err(Error::Precondition(format!(
                "t = {t} precedes the last of {} pulses at {last}",
                self.n_pulses
            )));
        }
        Ok(u.max(0.0))
    }

    /// `t - j·τ_s`, computed as `(N-j)·τ_s + u` to avoid cancellation.
    fn offset(&self, j: usize, u: f64) -> f64 {
        let k = self.n_pulses - j;
        if k == 0 {
            u
        } else {
            k as f64 * self.tau_s + u
        }
    }

    /// `(α_N, β_N)` per unit coupling at frequency `e` and time `t`.
    ///
    /// For even `N` the reservoir state tied to `|e⟩` is `α`, which carries
    /// the constant `-1`; for odd `N` the roles swap and each term of `β`
    /// carries its own `-1`.
    pub fn displacement_amplitudes(&self, e: f64, t: f64) -> Result<(Complex64, Complex64)> {
        let u = self.time_since_last(t)?;
        let n = self.n_pulses;
        let phase = |j: usize| Complex64::from_polar(1.0, -e * self.offset(j, u));
        let sign = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut alpha = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            alpha += sign(j) * phase(j);
        }
        let mut beta = Complex64::new(0.0, 0.0);
        if n.is_multiple_of(2) {
            alpha -= 1.0;
            for j in 1..=n {
                beta += -sign(j) * phase(j);
            }
        } else {
            for j in 1..=n {
                beta += -sign(j) * (phase(j) - 1.0);
            }
        }
        Ok((alpha, beta))
    }

    /// `Δ = (α - β)/h = -(-1)^N + e^{-iet} + 2 Σ_j (-1)^j e^{-ie(t - jτ)}`.
    pub fn modulation_delta(&self, e: f64, t: f64) -> Result<Complex64> {
        let u = self.time_since_last(t)?;
        Ok(self.delta_unchecked(e, u))
    }

    /// `Δ` given `u = t - N·τ_s`; the phases are accumulated by repeated
    /// multiplication, walking back from the last pulse.
    pub(crate) fn delta_unchecked(&self, e: f64, u: f64) -> Complex64 {
        let n = self.n_pulses;
        let constant = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
        if n == 0 {
            return constant + Complex64::from_polar(1.0, -e * u);
        }
        let step = Complex64::from_polar(1.0, -e * self.tau_s);
        // j = N down to 1: offsets u, u + τ, ..., u + (N-1)τ.
        let mut z = Complex64::from_polar(1.0, -e * u);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        for _ in 0..n {
            sum += sign * z;
            z *= step;
            sign = -sign;
        }
        // z now holds e^{-ie(u + Nτ)} = e^{-iet}.
        constant + z + 2.0 * sum
    }

    /// The `(c_m, s_m)` list with `Δ(e, t) = Σ_m c_m e^{-i e s_m}`.
    pub fn pair_expansion(&self, t: f64) -> Result<ModulationExpansion> {
        let u = self.time_since_last(t)?;
        let n = self.n_pulses;
        let mut terms = Vec::with_capacity(n + 2);
        terms.push(ExpansionTerm {
            coefficient: if n.is_multiple_of(2) { -1.0 } else { 1.0 },
            offset: 0.0,
        });
        terms.push(ExpansionTerm {
            coefficient: 1.0,
            offset: self.offset(0, u),
        });
        for j in 1..=n {
            terms.push(ExpansionTerm {
                coefficient: if j % 2 == 0 { 2.0 } else { -2.0 },
                offset: self.offset(j, u),
            });
        }
        Ok(ModulationExpansion { terms })
    }

    /// Pair weights grouped by distinct time difference.
    pub fn lag_weights(&self, t: f64) -> Result<LagWeights> {
        let u = self.time_since_last(t)?;
        Ok(LagWeights::new(self.n_pulses, self.tau_s, u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub coefficient: f64,
    pub offset: f64,
}

/// `Δ(e, t)` as a sum of weighted phases; `|Δ|²` then expands into cosines
/// of the pairwise offset differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationExpansion {
    terms: Vec<ExpansionTerm>,
}

impl ModulationExpansion {
    pub fn terms(&self) -> &[ExpansionTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient).sum()
    }

    pub fn delta(&self, e: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * Complex64::from_polar(1.0, -e * t.offset))
            .sum()
    }

    /// `|Δ|² = Σ_{m,n} c_m c_n cos(e (s_m - s_n))`.
    pub fn abs_sq(&self, e: f64) -> f64 {
        self.pairwise(|d| (e * d).cos())
    }

    /// `Σ_{m,n} c_m c_n k(s_m - s_n)` for an even function `k`, with one
    /// call per unordered pair.
    pub fn pairwise(&self, mut k: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (i, a) in self.terms.iter().enumerate() {
            total += a.coefficient * a.coefficient * k(0.0);
            for b in &self.terms[i + 1..] {
                total += 2.0 * a.coefficient * b.coefficient * k(a.offset - b.offset);
            }
        }
        total
    }
}

/// Weights of `Γ = Σ_L lattice[L]·K(L τ) + Σ_k shifted[k]·K(k τ + u)`.
///
/// With `u = t - Nτ` the offsets are `0` and `kτ + u` for `k = 0..=N`, so
/// every pairwise difference is either a multiple of `τ` or one of those
/// shifted points. Collecting the pairs reduces the `O(N²)` double sum to
/// `2N + 2` kernel evaluations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagWeights {
    tau: f64,
    shift: f64,
    lattice: Vec<f64>,
    shifted: Vec<f64>,
}

impl LagWeights {
    pub fn new(n_pulses: usize, tau: f64, shift: f64) -> Self {
        let n = n_pulses;
        let c0 = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
        // b_k: coefficient at offset kτ + u; b_N = 1, b_k = 2(-1)^{N-k}.
        let b = |k: usize| -> f64 {
            if k == n {
                1.0
            } else if (n - k).is_multiple_of(2) {
                2.0
            } else {
                -2.0
            }
        };
        let mut lattice = Vec::with_capacity(n + 1);
        lattice.push((4 * n + 2) as f64);
        for l in 1..=n {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            lattice.push(2.0 * sign * (4.0 * (n - l) as f64 + 2.0));
        }
        let shifted = (0..=n).map(|k| 2.0 * c0 * b(k)).collect();
        Self {
            tau,
            shift,
            lattice,
            shifted,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn lattice(&self) -> &[f64] {
        &self.lattice
    }

    pub fn shifted(&self) -> &[f64] {
        &self.shifted
    }

    pub fn lattice_lag(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            l as f64 * self.tau
        }
    }

    pub fn shifted_lag(&self, k: usize) -> f64 {
        if k == 0 {
            self.shift
        } else {
            k as f64 * self.tau + self.shift
        }
    }

    /// `Σ w·k(lag)` over both groups.
    pub fn evaluate(&self, mut k: impl FnMut(f64) -> f64) -> f64 {
        let lat: f64 = self
            .lattice
            .iter()
            .enumerate()
            .map(|(l, w)| w * k(self.lattice_lag(l)))
            .sum();
        let sh: f64 = self
            .shifted
            .iter()
            .enumerate()
            .map(|(i, w)| w * k(self.shifted_lag(i)))
            .sum();
        lat + sh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_decay_amplitudes() {
        let train = PulseTrain::new(0, 1.0).unwrap();
        let (a, b) = train.displacement_amplitudes(0.7, 3.0).unwrap();
        assert!((a - (-1.0 + Complex64::from_polar(1.0, -2.1))).norm() < 1e-15);
        assert_eq!(b, c(0.0, 0.0));
    }

    #[test]
    fn echo_form_at_twice_tau() {
        let tau = 1.3;
        let train = PulseTrain::new(1, tau).unwrap();
        for &e in &[0.2, 1.0, 2.7] {
            let (a, b) = train.displacement_amplitudes(e, 2.0 * tau).unwrap();
            let q = 1.0 - Complex64::from_polar(1.0, -e * tau);
            assert!((a - b - q * q).norm() < 1e-14);
        }
    }

    #[test]
    fn two_pulse_delta() {
        let (tau, t, e) = (0.9, 2.5, 1.7);
        let train = PulseTrain::new(2, tau).unwrap();
        let p = |x: f64| Complex64::from_polar(1.0, -e * x);
        let expect = -1.0 + p(t) - 2.0 * p(t - tau) + 2.0 * p(t - 2.0 * tau);
        let (a, b) = train.displacement_amplitudes(e, t).unwrap();
        assert!((a - b - expect).norm() < 1e-14);
        assert!((train.modulation_delta(e, t).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn delta_norms() {
        let free = PulseTrain::free_decay();
        let d = free.modulation_delta(PI, 1.0).unwrap();
        assert!((d.norm_sqr() - 4.0).abs() < 1e-14);
        let echo = PulseTrain::new(1, 1.0).unwrap();
        let d = echo.modulation_delta(PI, 2.0).unwrap();
        assert!((d.norm_sqr() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn decoupling_limit_cancels() {
        for n in [1usize, 2, 7, 40] {
            let tau = 1e-9;
            let train = PulseTrain::new(n, tau).unwrap();
            let d = train.modulation_delta(1.3, n as f64 * tau).unwrap();
            assert!(d.norm() < 1e-6, "N = {n}: |Δ| = {}", d.norm());
        }
    }

    #[test]
    fn precondition_on_time() {
        let train = PulseTrain::new(3, 1.0).unwrap();
        assert!(matches!(
            train.modulation_delta(1.0, 2.5),
            Err(Error::Precondition(_))
        ));
        assert!(train.pair_expansion(2.99).is_err());
        assert!(train.displacement_amplitudes(1.0, 3.0).is_ok());
        assert!(PulseTrain::new(2, 0.0).is_err());
        assert!(PulseTrain::new(2, f64::INFINITY).is_err());
    }

    #[test]
    fn expansion_layout() {
        let t = 2.0 * 0.7 + 0.3;
        let x = PulseTrain::new(2, 0.7).unwrap().pair_expansion(t).unwrap();
        assert_eq!(x.len(), 4);
        let coeffs: Vec<f64> = x.terms().iter().map(|t| t.coefficient).collect();
        assert_eq!(coeffs, vec![-1.0, 1.0, -2.0, 2.0]);
        assert_eq!(x.coefficient_sum(), 0.0);
        let odd = PulseTrain::new(3, 0.7).unwrap().pair_expansion(2.5).unwrap();
        assert_eq!(odd.terms()[0].coefficient, 1.0);
    }

    #[test]
    fn echo_gamma_identity() {
        // Γ = 6K(0) - 8K(τ) + 2K(2τ) at t = 2τ with one pulse.
        let tau = 2.0;
        let k = |x: f64| (-0.1 * x * x).exp() * (1.3 * x).cos();
        let x = PulseTrain::new(1, tau)
            .unwrap()
            .pair_expansion(2.0 * tau)
            .unwrap();
        let g = x.pairwise(k);
        let expect = 6.0 * k(0.0) - 8.0 * k(tau) + 2.0 * k(2.0 * tau);
        assert!((g - expect).abs() < 1e-13);
        let free = PulseTrain::free_decay().pair_expansion(3.0).unwrap();
        assert!((free.pairwise(k) - (2.0 * k(0.0) - 2.0 * k(3.0))).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn delta_matches_amplitudes(n in 0usize..=12, tau in 0.05f64..5.0, frac in 0.0f64..1.0, e in 0.0f64..4.0) {
            let train = PulseTrain::new(n, tau).unwrap();
            let t = n as f64 * tau + frac * tau;
            let (a, b) = train.displacement_amplitudes(e, t).unwrap();
            let d = train.modulation_delta(e, t).unwrap();
            prop_assert!((a - b - d).norm() < 1e-13 * (1.0 + e * t) * (n as f64 + 1.0));
            prop_assert!(d.norm() <= 2.0 * n as f64 + 2.0 + 1e-12);
            let x = train.pair_expansion(t).unwrap();
            prop_assert!((x.delta(e) - d).norm() < 1e-12);
            prop_assert!((x.abs_sq(e) - d.norm_sqr()).abs() < 1e-10 * (1.0 + d.norm_sqr()));
        }

        #[test]
        fn lag_weights_match_pairwise_sum(n in 0usize..=15, tau in 0.05f64..5.0, frac in 0.0f64..1.0, gamma in 0.01f64..0.5) {
            let k = |x: f64| (-gamma * x.abs()).exp() * x.cos() + 0.3 * (-x * x).exp();
            let train = PulseTrain::new(n, tau).unwrap();
            let t = n as f64 * tau + frac * tau;
            let direct = train.pair_expansion(t).unwrap().pairwise(k);
            let grouped = train.lag_weights(t).unwrap().evaluate(k);
            prop_assert!((direct - grouped).abs() < 1e-10 * (1.0 + direct.abs()), "{} vs {}", direct, grouped);
        }
    }
}
