//! Discrete-mode reference model.
//!
//! The continuum is replaced by `K` modes with frequencies `ε_k` and
//! couplings `h_k`. Each branch carries one coherent amplitude per mode and
//! is propagated segment by segment between pulses, which gives a check on
//! the closed-form amplitudes that shares no code with them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coherence::QuadratureConfig;
use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;
use crate::sequence::PulseTrain;
use crate::spectral::{Family, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretizationRule {
    /// Equal-width bins sampled at their midpoints.
    UniformMidpoint,
    /// Gauss–Legendre nodes with the quadrature weights folded into `h_k²`.
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub epsilon: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteModeSet {
    modes: Vec<Mode>,
    /// `Σ h_k²` against the continuum weight on the same support, when known.
    weight_discrepancy: Option<f64>,
}

/// Relative weight mismatch above which a discretization is flagged.
const WEIGHT_WARNING: f64 = 1e-3;

impl DiscreteModeSet {
    /// A single mode, mostly useful for hand-checkable recurrences.
    pub fn single(epsilon: f64, h: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(invalid(
                "epsilon",
                format!("must be finite and > 0, got {epsilon}"),
            ));
        }
        if !h.is_finite() {
            return Err(invalid("h", "must be finite"));
        }
        Ok(Self {
            modes: vec![Mode { epsilon, h }],
            weight_discrepancy: None,
        })
    }

    /// Discretizes `sd` on `support_bounds(tail_mass)` with `k` modes.
    pub fn discretize(
        sd: &SpectralDensity,
        k: usize,
        rule: DiscretizationRule,
        tail_mass: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if k < 2 {
            return Err(invalid("modes", format!("need at least 2, got {k}")));
        }
        let (lo, hi) = sd.support_bounds(tail_mass)?;
        let width = hi - lo;
        let modes: Vec<Mode> = match rule {
            DiscretizationRule::UniformMidpoint => {
                let de = width / k as f64;
                (0..k)
                    .map(|i| {
                        let e = lo + (i as f64 + 0.5) * de;
                        Mode {
                            epsilon: e,
                            h: (sd.density(e) * de).sqrt(),
                        }
                    })
                    .collect()
            }
            DiscretizationRule::GaussLegendre => {
                let (x, w) = gauss_legendre(k);
                x.iter()
                    .zip(&w)
                    .map(|(&x, &w)| {
                        let e = lo + 0.5 * width * (x + 1.0);
                        Mode {
                            epsilon: e,
                            h: (0.5 * width * w * sd.density(e)).sqrt(),
                        }
                    })
                    .collect()
            }
        };
        if modes.iter().any(|m| !(m.epsilon > 0.0)) {
            return Err(invalid("support", "discretized frequencies must be > 0"));
        }
        let discrete: f64 = modes.iter().map(|m| m.h * m.h).sum();
        let continuum = sd.total_weight(cfg)?.weight_0.value;
        Ok(Self {
            modes,
            weight_discrepancy: Some(((discrete - continuum) / continuum).abs()),
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.h * m.h).sum()
    }

    pub fn weight_discrepancy(&self) -> Option<f64> {
        self.weight_discrepancy
    }

    /// True when `Σ h_k²` misses the continuum weight by more than 0.1%.
    pub fn weight_warning(&self) -> bool {
        self.weight_discrepancy.is_some_and(|d| d > WEIGHT_WARNING)
    }

    /// Closed-form branch amplitudes `(h_k·α_k, h_k·β_k)` at time `t`.
    pub fn closed_form_amplitudes(
        &self,
        train: &PulseTrain,
        t: f64,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let mut a = Vec::with_capacity(self.len());
        let mut b = Vec::with_capacity(self.len());
        for m in &self.modes {
            let (alpha, beta) = train.displacement_amplitudes(m.epsilon, t)?;
            a.push(m.h * alpha);
            b.push(m.h * beta);
        }
        Ok((a, b))
    }
}

/// Coherent amplitudes of the two branches. Branch `a` starts out tied to
/// the excited state; every pulse swaps which branch that is.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub a_excited: bool,
}

impl BranchState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            a: vec![Complex64::new(0.0, 0.0); modes],
            b: vec![Complex64::new(0.0, 0.0); modes],
            a_excited: true,
        }
    }

    /// Free evolution for `duration`, then an optional π pulse.
    ///
    /// The excited-state branch relaxes toward the displaced minimum `-h_k`;
    /// the ground-state branch only picks up phase.
    pub fn step_evolve(mut self, modes: &DiscreteModeSet, duration: f64, then_pulse: bool) -> Self {
        for (k, m) in modes.modes.iter().enumerate() {
            let phase = Complex64::new(0.0, -m.epsilon * duration).exp();
            let displaced = |d: Complex64| phase * (d + m.h) - m.h;
            if self.a_excited {
                self.a[k] = displaced(self.a[k]);
                self.b[k] *= phase;
            } else {
                self.a[k] *= phase;
                self.b[k] = displaced(self.b[k]);
            }
        }
        if then_pulse {
            self.a_excited = !self.a_excited;
        }
        self
    }

    /// `exp(-Σ |a_k - b_k|²)`.
    pub fn intensity(&self) -> f64 {
        intensity_discrete(&self.a, &self.b)
    }
}

pub fn intensity_discrete(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    (-d).exp()
}

/// Propagates the vacuum through `train` up to time `t`.
pub fn evolve_schedule(modes: &DiscreteModeSet, train: &PulseTrain, t: f64) -> Result<BranchState> {
    let u = train.time_since_last(t)?;
    let mut state = BranchState::vacuum(modes.len());
    for _ in 0..train.n_pulses() {
        state = state.step_evolve(modes, train.tau_s(), true);
    }
    Ok(state.step_evolve(modes, u, false))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckReport {
    pub family: Family,
    pub gamma_p: f64,
    pub n_pulses: usize,
    pub tau_s: f64,
    pub t: f64,
    pub modes: usize,
    /// Largest `|step - closed| / max(|closed|, h_k)` over all modes and both
    /// branches.
    pub max_amplitude_discrepancy: f64,
    pub intensity_step: f64,
    pub intensity_closed: f64,
    pub intensity_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CrossCheckReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Tail mass used to choose the discretization support. The Lorentzian's
/// power-law tail is cut early: far-out modes pick up phases `ε·t` large
/// enough for rounding alone to exceed the check tolerance.
pub fn oracle_tail_mass(family: Family) -> f64 {
    match family {
        Family::Lorentzian => 1e-3,
        _ => 1e-10,
    }
}

/// Step-by-step propagation against the closed-form amplitudes.
pub fn cross_check(
    sd: &SpectralDensity,
    train: &PulseTrain,
    t: f64,
    modes: usize,
    tolerance: f64,
    cfg: &QuadratureConfig,
) -> Result<CrossCheckReport> {
    let set = DiscreteModeSet::discretize(
        sd,
        modes,
        DiscretizationRule::UniformMidpoint,
        oracle_tail_mass(sd.family()),
        cfg,
    )?;
    let state = evolve_schedule(&set, train, t)?;
    let (alpha, beta) = set.closed_form_amplitudes(train, t)?;
    let mut worst = 0.0f64;
    for (k, m) in set.modes().iter().enumerate() {
        for (step, closed) in [(state.a[k], alpha[k]), (state.b[k], beta[k])] {
            let scale = closed.norm().max(m.h.abs());
            if scale > 0.0 {
                worst = worst.max((step - closed).norm() / scale);
            }
        }
    }
    let i_step = state.intensity();
    let i_closed = intensity_discrete(&alpha, &beta);
    let i_diff = (i_step - i_closed).abs() / i_closed.abs().max(f64::MIN_POSITIVE);
    Ok(CrossCheckReport {
        family: sd.family(),
        gamma_p: sd.gamma_p(),
        n_pulses: train.n_pulses(),
        tau_s: train.tau_s(),
        t,
        modes,
        max_amplitude_discrepancy: worst,
        intensity_step: i_step,
        intensity_closed: i_closed,
        intensity_discrepancy: i_diff,
        tolerance,
        passed: worst <= tolerance && i_diff <= tolerance,
    })
}

/// Randomized cross-checks over the three analytic families, with
/// `omega_p = 1`, `s = 3` and `gamma_p`, `N`, `τ_s`, `t` drawn from a
/// seeded ChaCha stream.
pub fn random_cross_check(
    seed: u64,
    count: usize,
    modes: usize,
    tolerance: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<CrossCheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families = [Family::Gaussian, Family::SemiElliptic, Family::Lorentzian];
    (0..count)
        .map(|i| {
            let family = families[i % families.len()];
            let gamma = rng.gen_range(0.05..0.5);
            let n = rng.gen_range(0..=7usize);
            let tau = rng.gen_range(0.1..8.0);
            let u: f64 = rng.gen_range(0.0..1.0);
            let sd = SpectralDensity::new(family, 1.0, gamma, 3.0)?;
            let train = PulseTrain::new(n, tau)?;
            let t = n as f64 * tau + u * tau;
            cross_check(&sd, &train, t, modes, tolerance, cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_recurrence_by_hand() {
        let m = DiscreteModeSet::single(1.0, 0.5).unwrap();
        let s = BranchState::vacuum(1).step_evolve(&m, 0.7, true);
        let p = Complex64::new(0.0, -0.7).exp();
        assert!((s.a[0] - (p * 0.5 - 0.5)).norm() < 1e-15);
        assert_eq!(s.b[0], Complex64::new(0.0, 0.0));
        assert!(!s.a_excited);
        let s = s.step_evolve(&m, 0.7, false);
        assert!((s.a[0] - p * (p * 0.5 - 0.5)).norm() < 1e-15);
        assert!((s.b[0] - (p * 0.5 - 0.5)).norm() < 1e-15);
    }

    #[test]
    fn single_mode_agrees_with_closed_form() {
        let m = DiscreteModeSet::single(1.3, 0.8).unwrap();
        for n in 0..7 {
            let train = PulseTrain::new(n, 0.9).unwrap();
            let t = n as f64 * 0.9 + 0.37;
            let s = evolve_schedule(&m, &train, t).unwrap();
            let (a, b) = m.closed_form_amplitudes(&train, t).unwrap();
            assert!((s.a[0] - a[0]).norm() < 1e-13, "N = {n}");
            assert!((s.b[0] - b[0]).norm() < 1e-13, "N = {n}");
        }
    }

    #[test]
    fn discretization_invariants() {
        let cfg = QuadratureConfig::default();
        let g = SpectralDensity::gaussian(1.0, 0.15, 3.0).unwrap();
        let set =
            DiscreteModeSet::discretize(&g, 2048, DiscretizationRule::UniformMidpoint, 1e-12, &cfg).unwrap();
        assert!((set.total_weight() - 3.0).abs() < 1e-6);
        assert!(!set.weight_warning());
        assert!(set.modes().windows(2).all(|w| w[1].epsilon > w[0].epsilon));

        let s = SpectralDensity::semi_elliptic(1.0, 0.15, 3.0).unwrap();
        for rule in [
            DiscretizationRule::UniformMidpoint,
            DiscretizationRule::GaussLegendre,
        ] {
            let set = DiscreteModeSet::discretize(&s, 64, rule, 1e-12, &cfg).unwrap();
            assert!(set.modes().iter().all(|m| m.h > 0.0));
        }
        assert!(
            DiscreteModeSet::discretize(&g, 1, DiscretizationRule::UniformMidpoint, 1e-12, &cfg).is_err()
        );
    }

    #[test]
    fn gauss_legendre_weights_match() {
        let cfg = QuadratureConfig::default();
        let g = SpectralDensity::gaussian(1.0, 0.15, 3.0).unwrap();
        let set =
            DiscreteModeSet::discretize(&g, 96, DiscretizationRule::GaussLegendre, 1e-12, &cfg).unwrap();
        assert!((set.total_weight() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn random_checks_pass() {
        let cfg = QuadratureConfig::default();
        let reports = random_cross_check(7, 9, 64, 1e-10, &cfg).unwrap();
        for r in &reports {
            assert!(r.passed, "{r:?}");
        }
        let again = random_cross_check(7, 9, 64, 1e-10, &cfg).unwrap();
        assert_eq!(reports, again);
    }
}
