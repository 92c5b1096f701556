//! Coupling spectral densities `h(e)` and their cosine transforms.
//!
//! Every reservoir quantity in the crate is a weighted integral
//! `∫₀^∞ h(e) f(e) de`; the cosine kernel `K(x) = ∫₀^∞ h(e) cos(e x) de` is
//! the primitive used by the pair-expansion route for `Γ(t)`.
//!
//! Three routes to `K` are offered:
//! - [`KernelMethod::ClosedForm`]: full-line closed forms, exact up to the
//!   weight the density puts below `e = 0` (reported as a bound);
//! - [`KernelMethod::Quadrature`]: adaptive quadrature along the real axis;
//! - [`KernelMethod::Auto`]: the most accurate half-line route for the
//!   family (closed form where exact, closed form minus the negative-frequency
//!   part for the Lorentzian, quadrature for tables).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherence::QuadratureConfig;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, merge_points, uniform_points, Integral};
use crate::special::{erfc, erfc_inv, jinc};

/// Lorentzian bulk integrals stop at `ω_p + LORENTZIAN_SPLIT·γ_p`; the rest is
/// handled on a contour rotated into the upper half plane.
const LORENTZIAN_SPLIT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    SemiElliptic,
    Lorentzian,
    Tabulated,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::SemiElliptic => "semi_elliptic",
            Family::Lorentzian => "lorentzian",
            Family::Tabulated => "tabulated",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "gauss" => Ok(Family::Gaussian),
            "semi_elliptic" | "semielliptic" | "semi" => Ok(Family::SemiElliptic),
            "lorentzian" | "lorentz" => Ok(Family::Lorentzian),
            "tabulated" | "table" => Ok(Family::Tabulated),
            other => Err(invalid("family", format!("unknown spectral family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ClosedForm,
    Quadrature,
    Auto,
}

impl KernelMethod {
    pub fn name(self) -> &'static str {
        match self {
            KernelMethod::ClosedForm => "closed_form",
            KernelMethod::Quadrature => "quadrature",
            KernelMethod::Auto => "auto",
        }
    }
}

/// A kernel value `K(x)`.
///
/// `half_line_correction` bounds `|∫₋∞⁰ h(e) cos(e x) de|`, the amount by
/// which a full-line closed form can differ from the half-line kernel. It is
/// zero for routes that integrate over `[0, ∞)` directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub error: f64,
    pub half_line_correction: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub error: f64,
    /// Upper cutoff when the moment diverges on the half line.
    pub truncated_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    pub weight_0: Moment,
    pub weight_1: Moment,
    pub weight_2: Moment,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    e: Vec<f64>,
    h: Vec<f64>,
}

impl Table {
    fn eval(&self, x: f64) -> f64 {
        let (e, h) = (&self.e, &self.h);
        if x < e[0] || x > e[e.len() - 1] {
            return 0.0;
        }
        let i = e.partition_point(|&v| v <= x);
        if i == 0 {
            return h[0];
        }
        if i >= e.len() {
            return h[e.len() - 1];
        }
        let (e0, e1) = (e[i - 1], e[i]);
        let w = (x - e0) / (e1 - e0);
        h[i - 1] + w * (h[i] - h[i - 1])
    }

    fn area(&self) -> f64 {
        self.e
            .windows(2)
            .zip(self.h.windows(2))
            .map(|(e, h)| 0.5 * (e[1] - e[0]) * (h[0] + h[1]))
            .sum()
    }

    fn peak(&self) -> (usize, f64) {
        self.h
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, v)| if v > best.1 { (i, v) } else { best },
            )
    }

    /// Half of the full width at half maximum, from linear interpolation.
    fn half_width(&self) -> f64 {
        let (ipk, hmax) = self.peak();
        let half = 0.5 * hmax;
        let cross = |range: &mut dyn Iterator<Item = usize>, step_back: bool| -> f64 {
            for i in range {
                let j = if step_back { i + 1 } else { i - 1 };
                if self.h[i] <= half {
                    let (ea, ha, eb, hb) = (self.e[i], self.h[i], self.e[j], self.h[j]);
                    return ea + (half - ha) * (eb - ea) / (hb - ha);
                }
            }
            if step_back {
                self.e[0]
            } else {
                self.e[self.e.len() - 1]
            }
        };
        let left = cross(&mut (0..ipk).rev(), true);
        let right = cross(&mut (ipk + 1..self.e.len()), false);
        0.5 * (right - left)
    }
}

#[derive(Debug, Deserialize)]
struct TableRow {
    e: f64,
    h: f64,
}

/// A coupling spectral density in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    family: Family,
    omega_p: f64,
    gamma_p: f64,
    s: f64,
    table: Option<Table>,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl SpectralDensity {
    pub fn new(family: Family, omega_p: f64, gamma_p: f64, s: f64) -> Result<Self> {
        if family == Family::Tabulated {
            return Err(invalid("family", "tabulated densities are built from samples"));
        }
        check_positive("omega_p", omega_p)?;
        check_positive("gamma_p", gamma_p)?;
        check_positive("s", s)?;
        Ok(Self {
            family,
            omega_p,
            gamma_p,
            s,
            table: None,
        })
    }

    /// `h(e) = s/(√π γ) · exp(-(e-ω)²/γ²)`.
    pub fn gaussian(omega_p: f64, gamma_p: f64, s: f64) -> Result<Self> {
        Self::new(Family::Gaussian, omega_p, gamma_p, s)
    }

    /// `h(e) = (s/p)·√(p - (e-ω)²)` on `|e-ω| ≤ √p`, with `p = 4γ²/3`.
    ///
    /// The total weight is `s·π/2`, not `s`.
    pub fn semi_elliptic(omega_p: f64, gamma_p: f64, s: f64) -> Result<Self> {
        Self::new(Family::SemiElliptic, omega_p, gamma_p, s)
    }

    /// `h(e) = (s/π) · γ / ((e-ω)² + γ²)`.
    pub fn lorentzian(omega_p: f64, gamma_p: f64, s: f64) -> Result<Self> {
        Self::new(Family::Lorentzian, omega_p, gamma_p, s)
    }

    /// Piecewise-linear density through `(e, h)` samples; zero outside the
    /// sampled range. Center, width and weight are derived from the samples.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Table("need at least two samples".into()));
        }
        for (i, &(e, h)) in samples.iter().enumerate() {
            if !e.is_finite() || !h.is_finite() {
                return Err(Error::Table(format!("row {i}: non-finite value")));
            }
            if e < 0.0 {
                return Err(Error::Table(format!("row {i}: negative frequency {e}")));
            }
            if h < 0.0 {
                return Err(Error::Table(format!("row {i}: negative density {h}")));
            }
            if i > 0 && e <= samples[i - 1].0 {
                return Err(Error::Table(format!(
                    "row {i}: frequencies must increase strictly"
                )));
            }
        }
        let table = Table {
            e: samples.iter().map(|p| p.0).collect(),
            h: samples.iter().map(|p| p.1).collect(),
        };
        let area = table.area();
        let (ipk, hmax) = table.peak();
        if !(area > 0.0) || !(hmax > 0.0) {
            return Err(Error::Table("density is identically zero".into()));
        }
        let omega_p = table.e[ipk];
        let gamma_p = table.half_width();
        Ok(Self {
            family: Family::Tabulated,
            omega_p: if omega_p > 0.0 { omega_p } else { f64::MIN_POSITIVE },
            gamma_p: gamma_p.max(f64::MIN_POSITIVE),
            s: area,
            table: Some(table),
        })
    }

    /// Reads a table with header `e,h`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "e" || &headers[1] != "h" {
            return Err(Error::Table(format!(
                "expected header `e,h`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let row: TableRow = row?;
            samples.push((row.e, row.h));
        }
        Self::tabulated(samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Samples `other` at `n` equally spaced points of `[lo, hi]`.
    pub fn sampled(other: &SpectralDensity, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) || lo < 0.0 {
            return Err(invalid("samples", "need n ≥ 2 and 0 ≤ lo < hi"));
        }
        let samples = (0..n)
            .map(|i| {
                let e = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (e, other.density(e))
            })
            .collect();
        Self::tabulated(samples)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `p = 4γ²/3` of the semi-elliptic family.
    pub fn semi_p(&self) -> f64 {
        4.0 * self.gamma_p * self.gamma_p / 3.0
    }

    fn semi_radius(&self) -> f64 {
        self.semi_p().sqrt()
    }

    /// Table samples, for tabulated densities.
    pub fn samples(&self) -> Option<impl Iterator<Item = (f64, f64)> + '_> {
        self.table
            .as_ref()
            .map(|t| t.e.iter().copied().zip(t.h.iter().copied()))
    }

    /// `h(e)` on the half line; zero for `e < 0`.
    pub fn density(&self, e: f64) -> f64 {
        if e < 0.0 {
            return 0.0;
        }
        self.full_line_density(e)
    }

    fn full_line_density(&self, e: f64) -> f64 {
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        match self.family {
            Family::Gaussian => {
                let z = (e - w) / g;
                s / (PI.sqrt() * g) * (-z * z).exp()
            }
            Family::SemiElliptic => {
                let p = self.semi_p();
                let d = e - w;
                let r2 = p - d * d;
                if r2 <= 0.0 {
                    0.0
                } else {
                    s / p * r2.sqrt()
                }
            }
            Family::Lorentzian => {
                let d = e - w;
                s / PI * g / (d * d + g * g)
            }
            Family::Tabulated => self.table.as_ref().map_or(0.0, |t| t.eval(e)),
        }
    }

    /// Checked evaluation of `h(e)`.
    pub fn evaluate(&self, e: f64) -> Result<f64> {
        if !e.is_finite() {
            return Err(Error::Domain(format!("frequency must be finite, got {e}")));
        }
        if e < 0.0 {
            return Err(Error::Domain(format!("frequency must be ≥ 0, got {e}")));
        }
        Ok(self.density(e))
    }

    /// Analytic `∫₀^∞ h(e) de` where available.
    pub fn analytic_weight(&self) -> Option<f64> {
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        match self.family {
            Family::Gaussian => Some(s * (1.0 - 0.5 * erfc(w / g))),
            Family::SemiElliptic => {
                let r = self.semi_radius();
                if w >= r {
                    Some(s * FRAC_PI_2)
                } else {
                    None
                }
            }
            Family::Lorentzian => Some(s * (0.5 + (w / g).atan() / PI)),
            Family::Tabulated => None,
        }
    }

    /// Weight the full-line formula puts below `e = 0`.
    fn negative_frequency_mass(&self) -> f64 {
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        match self.family {
            Family::Gaussian => 0.5 * s * erfc(w / g),
            Family::SemiElliptic => {
                let r = self.semi_radius();
                if w >= r {
                    0.0
                } else {
                    // Circular-segment area scaled by s/p.
                    let d = w / r;
                    let segment = r * r * (d.acos() - d * (1.0 - d * d).sqrt());
                    s / self.semi_p() * segment
                }
            }
            Family::Lorentzian => s / PI * (g / w).atan(),
            Family::Tabulated => 0.0,
        }
    }

    fn weight_estimate(&self) -> f64 {
        self.analytic_weight().unwrap_or_else(|| match &self.table {
            Some(t) => t.area(),
            None => self.s * FRAC_PI_2,
        })
    }

    /// Smallest interval of `[0, ∞)` outside which at most
    /// `tail_mass · weight_0` of the density lies, split evenly between the
    /// two sides. Compactly supported families return their full support.
    pub fn support_bounds(&self, tail_mass: f64) -> Result<(f64, f64)> {
        if !(tail_mass > 0.0 && tail_mass < 1.0) {
            return Err(invalid(
                "tail_mass",
                format!("must lie in (0, 1), got {tail_mass}"),
            ));
        }
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        let budget = 0.5 * tail_mass * self.weight_estimate();
        Ok(match self.family {
            Family::Gaussian => {
                let upper = w + g * erfc_inv((2.0 * budget / s).min(1.0));
                let rhs = 2.0 * budget / s + erfc(w / g);
                let lower = if rhs >= 1.0 { w } else { w - g * erfc_inv(rhs) };
                (lower.max(0.0), upper)
            }
            Family::SemiElliptic => {
                let r = self.semi_radius();
                ((w - r).max(0.0), w + r)
            }
            Family::Lorentzian => {
                let upper = w + g / (PI * budget / s).tan();
                let angle = PI * budget / s - (w / g).atan();
                let lower = if angle >= 0.0 { 0.0 } else { w + g * angle.tan() };
                (lower.max(0.0), upper)
            }
            Family::Tabulated => {
                let t = self.table.as_ref().expect("tabulated density has a table");
                (t.e[0], t.e[t.e.len() - 1])
            }
        })
    }

    /// Upper end of the real-axis part of a Lorentzian integral.
    pub(crate) fn lorentzian_split(&self) -> f64 {
        self.omega_p + LORENTZIAN_SPLIT * self.gamma_p
    }

    /// `∫ h(e) f(e) de` over the part of `[0, ∞)` handled on the real axis.
    ///
    /// `max_freq` is the largest angular frequency (in `e`) present in `f`;
    /// panels are pre-split at half periods. For the Lorentzian the result
    /// stops at [`Self::lorentzian_split`]; the split point is returned so the
    /// caller can add the remainder.
    pub(crate) fn integrate_bulk<F: Fn(f64) -> f64>(
        &self,
        f: F,
        max_freq: f64,
        cfg: &QuadratureConfig,
    ) -> Result<(Integral, Option<f64>)> {
        let tol = cfg.tolerance();
        let half_period = if max_freq > 0.0 {
            PI / max_freq
        } else {
            f64::INFINITY
        };
        let w = self.omega_p;
        Ok(match self.family {
            Family::Gaussian => {
                let (lo, hi) = self.support_bounds(cfg.tail_mass)?;
                let pts = merge_points(uniform_points(lo, hi, 8, half_period), &[w], lo, hi);
                let mut r = integrate(|e: f64| self.full_line_density(e) * f(e), &pts, &tol);
                r.error += cfg.tail_mass * self.weight_estimate();
                (r, None)
            }
            Family::SemiElliptic => {
                // e = ω + r·sin θ turns h(e) de into s·cos²θ dθ.
                let r = self.semi_radius();
                let theta_lo = if w >= r { -FRAC_PI_2 } else { (-w / r).asin() };
                let theta_step = if max_freq > 0.0 {
                    PI / (max_freq * r)
                } else {
                    f64::INFINITY
                };
                let pts = uniform_points(theta_lo, FRAC_PI_2, 8, theta_step);
                let s = self.s;
                let r = integrate(
                    |th: f64| {
                        let c = th.cos();
                        s * c * c * f(w + r * th.sin())
                    },
                    &pts,
                    &tol,
                );
                (r, None)
            }
            Family::Lorentzian => {
                let hi = self.lorentzian_split();
                let g = self.gamma_p;
                let pts = merge_points(
                    uniform_points(0.0, hi, 8, half_period),
                    &[w - g, w, w + g],
                    0.0,
                    hi,
                );
                let r = integrate(|e: f64| self.full_line_density(e) * f(e), &pts, &tol);
                (r, Some(hi))
            }
            Family::Tabulated => {
                let t = self.table.as_ref().expect("tabulated density has a table");
                let (lo, hi) = (t.e[0], t.e[t.e.len() - 1]);
                let pts = merge_points(uniform_points(lo, hi, 1, half_period), &t.e, lo, hi);
                let r = integrate(|e: f64| t.eval(e) * f(e), &pts, &tol);
                (r, None)
            }
        })
    }

    /// `∫_from^∞ h(e) cos(e x) de` for the Lorentzian, on the contour
    /// `from + i v`, `v ≥ 0` (the poles at `ω ± iγ` lie to its left).
    pub(crate) fn lorentzian_cos_tail(&self, from: f64, x: f64, cfg: &QuadratureConfig) -> Integral {
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        let a = from - w;
        let x = x.abs();
        if x == 0.0 {
            return Integral::exact(s / PI * (g / a).atan());
        }
        let h = |v: f64| -> Complex64 {
            let z = Complex64::new(a, v);
            (s / PI) * g / (z * z + g * g)
        };
        let phase = Complex64::new(0.0, from * x).exp();
        let tol = cfg.tolerance();
        let scale = a.min(1.0 / x).max(g);
        // Re[i e^{i from x} ∫ h(from + iv) e^{-vx} dv], split into real parts.
        let re = integrate_semi_infinite(|v| h(v).re * (-v * x).exp(), 0.0, scale, &tol);
        let im = integrate_semi_infinite(|v| h(v).im * (-v * x).exp(), 0.0, scale, &tol);
        // i·phase·(re + i im) has real part -phase.im·re - phase.re·im.
        Integral {
            value: -phase.im * re.value - phase.re * im.value,
            error: re.error + im.error,
            evaluations: re.evaluations + im.evaluations,
            converged: re.converged && im.converged,
        }
    }

    /// `∫₋∞⁰ h(e) cos(e x) de` of the full-line Lorentzian, on the rotated
    /// contour `u = i v` for the reflected density `h(-u)`.
    fn lorentzian_negative_part(&self, x: f64, cfg: &QuadratureConfig) -> Integral {
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        let x = x.abs();
        if x == 0.0 {
            return Integral::exact(self.negative_frequency_mass());
        }
        let reflected = |v: f64| -> Complex64 {
            let z = Complex64::new(w, v);
            (s / PI) * g / (z * z + g * g)
        };
        let tol = cfg.tolerance();
        let scale = w.min(1.0 / x).max(g);
        // Re[i ∫ h(-iv) e^{-vx} dv] = -∫ Im h(-iv) e^{-vx} dv.
        let im = integrate_semi_infinite(|v| reflected(v).im * (-v * x).exp(), 0.0, scale, &tol);
        im.scale(-1.0)
    }

    fn closed_form_kernel(&self, x: f64) -> Option<KernelValue> {
        let (w, g, s) = (self.omega_p, self.gamma_p, self.s);
        let value = match self.family {
            Family::Gaussian => s * (-g * g * x * x / 4.0).exp() * (w * x).cos(),
            Family::SemiElliptic => s * FRAC_PI_2 * jinc(self.semi_radius() * x) * (w * x).cos(),
            Family::Lorentzian => s * (-g * x.abs()).exp() * (w * x).cos(),
            Family::Tabulated => return None,
        };
        Some(KernelValue {
            value,
            error: 4.0 * f64::EPSILON * s,
            half_line_correction: self.negative_frequency_mass(),
            converged: true,
        })
    }

    fn quadrature_kernel(&self, x: f64, cfg: &QuadratureConfig) -> Result<KernelValue> {
        let (bulk, split) = self.integrate_bulk(|e| (e * x).cos(), x.abs(), cfg)?;
        let total = match split {
            Some(from) => bulk.combine(self.lorentzian_cos_tail(from, x, cfg)),
            None => bulk,
        };
        Ok(KernelValue {
            value: total.value,
            error: total.error,
            half_line_correction: 0.0,
            converged: total.converged,
        })
    }

    /// Kernel value with convergence carried as a flag instead of an error.
    pub(crate) fn kernel_unchecked(
        &self,
        x: f64,
        method: KernelMethod,
        cfg: &QuadratureConfig,
    ) -> Result<KernelValue> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("time difference must be finite, got {x}")));
        }
        let x = x.abs();
        match method {
            KernelMethod::ClosedForm => self.closed_form_kernel(x).ok_or(Error::UnsupportedMethod {
                method: "closed_form",
                family: self.family.name(),
            }),
            KernelMethod::Quadrature => self.quadrature_kernel(x, cfg),
            KernelMethod::Auto => match self.family {
                Family::Tabulated => self.quadrature_kernel(x, cfg),
                Family::Lorentzian => {
                    let full = self.closed_form_kernel(x).expect("closed form exists");
                    let neg = self.lorentzian_negative_part(x, cfg);
                    Ok(KernelValue {
                        value: full.value - neg.value,
                        error: full.error + neg.error,
                        half_line_correction: 0.0,
                        converged: neg.converged,
                    })
                }
                Family::Gaussian | Family::SemiElliptic => {
                    let closed = self.closed_form_kernel(x).expect("closed form exists");
                    let allowed = cfg.abs_tol.max(cfg.rel_tol * self.s) * 1e-3;
                    if closed.half_line_correction <= allowed {
                        Ok(KernelValue {
                            error: closed.error + closed.half_line_correction,
                            half_line_correction: 0.0,
                            ..closed
                        })
                    } else {
                        self.quadrature_kernel(x, cfg)
                    }
                }
            },
        }
    }

    /// `K(x) = ∫₀^∞ h(e) cos(e x) de` by the requested route.
    pub fn cosine_kernel(&self, x: f64, method: KernelMethod, cfg: &QuadratureConfig) -> Result<KernelValue> {
        let k = self.kernel_unchecked(x, method, cfg)?;
        if k.converged {
            Ok(k)
        } else {
            Err(Error::Convergence {
                best: k.value,
                error: k.error,
            })
        }
    }

    /// Zeroth, first and second moments of `h` on `[0, ∞)`.
    ///
    /// The Lorentzian's first and second moments diverge; they are integrated
    /// up to `support_bounds(tail_mass).1` and carry that cutoff.
    pub fn total_weight(&self, cfg: &QuadratureConfig) -> Result<SpectralMoments> {
        cfg.validate()?;
        let moment = |power: i32| -> Result<Moment> {
            let (bulk, split) = self.integrate_bulk(|e| e.powi(power), 0.0, cfg)?;
            let (total, truncated_at) = match split {
                None => (bulk, None),
                Some(from) if power == 0 => (bulk.combine(self.lorentzian_cos_tail(from, 0.0, cfg)), None),
                Some(from) => {
                    let (_, hi) = self.support_bounds(cfg.tail_mass)?;
                    // Geometric panels follow the power-law tail.
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
                    let tail = integrate(
                        |e: f64| self.full_line_density(e) * e.powi(power),
                        &pts,
                        &cfg.tolerance(),
                    );
                    (bulk.combine(tail), Some(hi))
                }
            };
            let allowed = cfg.abs_tol.max(cfg.rel_tol * total.value.abs());
            if !total.converged || total.error > allowed.max(cfg.tail_mass * total.value.abs()) {
                return Err(Error::Convergence {
                    best: total.value,
                    error: total.error,
                });
            }
            Ok(Moment {
                value: total.value,
                error: total.error,
                truncated_at,
            })
        };
        Ok(SpectralMoments {
            weight_0: moment(0)?,
            weight_1: moment(1)?,
            weight_2: moment(2)?,
        })
    }
}
