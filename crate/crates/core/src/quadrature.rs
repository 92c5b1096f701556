//! Globally adaptive Gauss-Kronrod integration.
//!
//! Panels are kept in a max-heap keyed by their local error estimate; the
//! worst panel is bisected until the summed error meets the tolerance or the
//! subdivision budget runs out. Callers pass breakpoints so that kinks,
//! peaks and oscillation nodes start on panel boundaries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Gauss / 31-point Kronrod pair, abscissae on [0, 1) in
// decreasing order; the last entry of each weight table is the center.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 16] = [
    0.998002298693397060285172840152271,
    0.987992518020485428489565718586613,
    0.967739075679139134257347978784337,
    0.937273392400705904307758947710209,
    0.897264532344081900882509656454496,
    0.848206583410427216200648320774217,
    0.790418501442465932967649294817947,
    0.724417731360170047416186054613938,
    0.650996741297416970533735895313275,
    0.570972172608538847537226737253911,
    0.485081863640239680693655740232351,
    0.394151347077563369897207370981045,
    0.299180007153168812166780024266389,
    0.201194093997434522300628303394596,
    0.101142066918717499027074231447392,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 16] = [
    0.005377479872923348987792051430128,
    0.015007947329316122538374763075807,
    0.025460847326715320186874001019653,
    0.035346360791375846222037948478360,
    0.044589751324764876608227299373280,
    0.053481524690928087265343147239430,
    0.062009567800670640285139230960803,
    0.069854121318728258709520077099147,
    0.076849680757720378894432777482659,
    0.083080502823133021038289247286104,
    0.088564443056211770647275443693774,
    0.093126598170825321225486872747346,
    0.096642726983623678505179907627589,
    0.099173598721791959332393173484603,
    0.100769845523875595044946662617570,
    0.101330007014791549017374792767493,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[13], then the center node.
#[allow(clippy::excessive_precision)]
const WG: [f64; 8] = [
    0.030753241996117268354628393577204,
    0.070366047488108124709267416450667,
    0.107159220467171935011869546685869,
    0.139570677926154314447804794511028,
    0.166269205816993933553200860481209,
    0.186161000015562211026800561866423,
    0.198431485327111576456118326443839,
    0.202578241925561272880620199967519,
];

/// Tolerances and budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-14,
            max_subdivisions: 50_000,
        }
    }
}

/// Value of an integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
        converged: true,
    };

    pub fn exact(value: f64) -> Self {
        Integral { value, ..Self::ZERO }
    }

    /// Combines independent pieces: values and errors add.
    pub fn combine(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, factor: f64) -> Integral {
        Integral {
            value: self.value * factor,
            error: self.error * factor.abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    magnitude: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One application of the G15/K31 pair on `[a, b]`.
///
/// Returns the Kronrod value, `|K - G|` as the error and `∫|f|` (Kronrod) as
/// the magnitude used for the round-off floor.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[15] * fc;
    let mut gauss = WG[7] * fc;
    let mut magnitude = WGK[15] * fc.abs();
    for i in 0..15 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[i] * (f1 + f2);
        magnitude += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let h = half.abs();
    (kronrod * half, ((kronrod - gauss) * half).abs(), magnitude * h)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let (value, error, magnitude) = gauss_kronrod(f, a, b);
    Panel {
        a,
        b,
        value,
        error,
        magnitude,
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` (which must be non-decreasing; zero-width panels are
/// skipped).
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: &Tolerance) -> Integral {
    let mut heap = BinaryHeap::with_capacity(points.len().max(16));
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(panel(&f, w[0], w[1]));
        }
    }
    if heap.is_empty() {
        return Integral::ZERO;
    }
    let mut evaluations = heap.len() * 31;
    let mut splits = 0usize;
    loop {
        let (value, error, magnitude) = heap.iter().fold((0.0, 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.error, acc.2 + p.magnitude)
        });
        let floor = 50.0 * f64::EPSILON * magnitude;
        let target = tol.abs.max(tol.rel * value.abs()).max(floor);
        if error <= target {
            return Integral {
                value,
                error,
                evaluations,
                converged: true,
            };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if splits >= tol.max_subdivisions || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |acc, p| (acc.0 + p.value, acc.1 + p.error));
            return Integral {
                value,
                error,
                evaluations,
                converged: false,
            };
        }
        heap.push(panel(&f, worst.a, mid));
        heap.push(panel(&f, mid, worst.b));
        evaluations += 62;
        splits += 1;
    }
}

/// Integrates a smooth, decaying `f` over `[a, ∞)` through the map
/// `v = a + scale·u/(1-u)`, `u ∈ [0, 1)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, tol: &Tolerance) -> Integral {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let v = a + scale * u / one_minus;
        let jac = scale / (one_minus * one_minus);
        let fv = f(v);
        if fv == 0.0 {
            0.0
        } else {
            fv * jac
        }
    };
    integrate(g, &[0.0, 0.25, 0.5, 0.75, 1.0], tol)
}

/// Splits `[a, b]` into at least `min_panels` equal panels, also honoring a
/// maximum panel width (use `f64::INFINITY` for none).
pub fn uniform_points(a: f64, b: f64, min_panels: usize, max_width: f64) -> Vec<f64> {
    let width = b - a;
    let by_width = if max_width.is_finite() && max_width > 0.0 {
        (width / max_width).ceil() as usize
    } else {
        1
    };
    let n = min_panels.max(by_width).max(1);
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + width * i as f64 / n as f64
            }
        })
        .collect()
}

/// Merges extra breakpoints into a sorted list restricted to `[lo, hi]`.
pub fn merge_points(mut points: Vec<f64>, extra: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    points.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_is_exact_for_high_degree_polynomials() {
        // K31 integrates degree 46 exactly, G15 degree 29.
        let f = |x: f64| x.powi(40) + 3.0 * x.powi(7);
        let (k, err, _) = gauss_kronrod(&f, 0.0, 1.0);
        assert!((k - (1.0 / 41.0 + 3.0 / 8.0)).abs() < 1e-15);
        assert!(err > 0.0);
        let g = |x: f64| x.powi(29);
        let (k, err, _) = gauss_kronrod(&g, -1.0, 2.0);
        assert!((k - (2f64.powi(30) - 1.0) / 30.0).abs() < 1e-6);
        assert!(err < 1e-6);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let (k, _, _) = gauss_kronrod(&|_| 1.0, -1.0, 1.0);
        assert!((k - 2.0).abs() < 1e-15);
        let gauss: f64 = 2.0 * WG[..7].iter().sum::<f64>() + WG[7];
        assert!((gauss - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = integrate(|x: f64| x.sqrt(), &[0.0, 1.0], &Tolerance::default());
        assert!(r.converged);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_with_presplit() {
        let pts = uniform_points(0.0, 100.0, 1, PI / 50.0);
        let r = integrate(|x: f64| (50.0 * x).cos(), &pts, &Tolerance::default());
        assert!((r.value - (5000.0f64).sin() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_exponential_and_power() {
        let tol = Tolerance::default();
        let r = integrate_semi_infinite(|v: f64| (-v).exp(), 0.0, 1.0, &tol);
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_semi_infinite(|v: f64| 1.0 / (1.0 + v * v), 0.0, 1.0, &tol);
        assert!((r.value - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = Tolerance {
            rel: 1e-15,
            abs: 0.0,
            max_subdivisions: 2,
        };
        let r = integrate(|x: f64| (1.0 / (x + 1e-6)).sin(), &[0.0, 1.0], &tol);
        assert!(!r.converged);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let sum: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((sum - 2.0 / 23.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let (x, _) = gauss_legendre(7);
        assert!(x[3].abs() < 1e-15);
    }
}
