//! Quadrature rules.
//!
//! * [`GaussLegendre`]: fixed n-point rules, used for cell averages and the
//!   tensor-product double integrals of the center-manifold coefficients.
//! * [`adaptive_gk`]: globally adaptive 7/15-point Gauss–Kronrod.
//! * [`tanh_sinh`]: double-exponential quadrature for integrands with
//!   algebraic endpoint singularities (`1/√(κ² − Ω²)` at κ = 1, the
//!   arcsine density, ...).

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule on `[-1, 1]`. Nodes by Newton iteration on the
    /// three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let xs = self.nodes.iter().map(|t| c + h * t).collect();
        let ws = self.weights.iter().map(|w| h * w).collect();
        (xs, ws)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(c + h * t))
            .sum::<f64>()
    }
}

/// P_n(x) and P_n'(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

// Kronrod 15-point abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights; values from QUADPACK qk15.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let fsum = f(c - dx) + f(c + dx);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod: bisect the segment with the largest
/// error estimate until the total estimate drops below `tol` (absolute) or
/// `max_segments` is reached.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    const MAX_SEGMENTS: usize = 2000;
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut err = e;
    let mut evals = 15;
    while err > tol && heap.len() < MAX_SEGMENTS {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evals += 30;
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    QuadResult { value, error, evaluations: evals }
}

/// Tanh–sinh (double exponential) quadrature on `[a, b]`.
///
/// Halves the step until two successive levels agree to `tol`. Non-finite
/// integrand values (at points that round onto an endpoint) are dropped.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    tanh_sinh_gap(|x, _| f(x), a, b, tol)
}

/// [`tanh_sinh`] for integrands singular at an endpoint. `f(x, δ)` also
/// receives the exact offset `δ = x − a > 0` from the nearer left endpoint or
/// `δ = x − b < 0` from the nearer right one, so that factors like `1 − x²`
/// can be formed without cancellation.
pub fn tanh_sinh_gap<F: FnMut(f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    const MAX_LEVEL: usize = 12;
    const T_MAX: f64 = 6.5;
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    if d == 0.0 {
        return QuadResult { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let fc = f(c, d);
    let mut evals = 1;
    // Contribution of the symmetric pair at parameter t (t > 0).
    let mut pair = |t: f64, evals: &mut usize| -> Option<f64> {
        let s = FRAC_PI_2 * t.sinh();
        let cosh_s = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        // 1 - tanh(s) without cancellation
        let gap = d * 2.0 / ((2.0 * s).exp() + 1.0);
        if gap == 0.0 || w * d < 1e-300 {
            return None;
        }
        let mut acc = 0.0;
        for (x, delta) in [(a + gap, gap), (b - gap, -gap)] {
            if x >= a && x <= b {
                let fx = f(x, delta);
                *evals += 1;
                if fx.is_finite() {
                    acc += fx;
                }
            }
        }
        Some(w * acc)
    };

    let mut h = 1.0;
    let mut sum = FRAC_PI_2 * if fc.is_finite() { fc } else { 0.0 };
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        match pair(k as f64 * h, &mut evals) {
            Some(v) => sum += v,
            None => break,
        }
        k += 1;
    }
    let mut estimate = d * h * sum;
    let mut error = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        // new odd-indexed nodes only
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            match pair(k as f64 * h, &mut evals) {
                Some(v) => sum += v,
                None => break,
            }
            k += 2;
        }
        let next = d * h * sum;
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= tol.max(4.0 * f64::EPSILON * estimate.abs()) {
            break;
        }
    }
    QuadResult { value: estimate, error, evaluations: evals }
}
