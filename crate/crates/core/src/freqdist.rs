//! Natural-frequency distributions on `[-1, 1]` and their quantile
//! functions `Ω = F⁻¹`, which place oscillator frequencies on the latent
//! interval `[0, 1]`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::graphon::SamplePoints;
use crate::{Error, Result};

/// A density tabulated at increasing nodes spanning `[-1, 1]`, linear in
/// between and normalised to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TableDensity {
    omega: Vec<f64>,
    density: Vec<f64>,
    /// CDF at the nodes.
    cdf: Vec<f64>,
    /// Fritsch–Carlson slopes of the inverse CDF through (cdf_i, omega_i).
    inv_slopes: Vec<f64>,
    mean: f64,
}

impl TableDensity {
    pub fn new(omega: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let m = omega.len();
        if m < 2 || density.len() != m {
            return Err(Error::InvalidArgument("density table needs >= 2 nodes and matching lengths".into()));
        }
        if omega[0] != -1.0 || omega[m - 1] != 1.0 {
            return Err(Error::InvalidArgument("density table must span exactly [-1, 1]".into()));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("density nodes must be strictly increasing".into()));
        }
        if density.iter().any(|&f| !(f >= 0.0 && f.is_finite())) {
            return Err(Error::InvalidArgument("density values must be finite and nonnegative".into()));
        }
        let mass: f64 = (0..m - 1).map(|i| 0.5 * (density[i] + density[i + 1]) * (omega[i + 1] - omega[i])).sum();
        if mass <= 0.0 {
            return Err(Error::InvalidArgument("density has zero mass".into()));
        }
        let density: Vec<f64> = density.iter().map(|f| f / mass).collect();
        let mut cdf = vec![0.0; m];
        let mut mean = 0.0;
        for i in 0..m - 1 {
            let h = omega[i + 1] - omega[i];
            cdf[i + 1] = cdf[i] + 0.5 * (density[i] + density[i + 1]) * h;
            // ∫ ω f(ω) over a linear piece, exact
            let (a, b) = (omega[i], omega[i + 1]);
            let (fa, fb) = (density[i], density[i + 1]);
            mean += h / 6.0 * (fa * (2.0 * a + b) + fb * (a + 2.0 * b));
        }
        cdf[m - 1] = 1.0;
        let inv_slopes = monotone_slopes(&cdf, &omega);
        Ok(Self { omega, density, cdf, inv_slopes, mean })
    }

    fn density(&self, w: f64) -> f64 {
        if !(-1.0..=1.0).contains(&w) {
            return 0.0;
        }
        let i = self.segment(w);
        let t = (w - self.omega[i]) / (self.omega[i + 1] - self.omega[i]);
        self.density[i] * (1.0 - t) + self.density[i + 1] * t
    }

    fn cdf(&self, w: f64) -> f64 {
        if w <= -1.0 {
            return 0.0;
        }
        if w >= 1.0 {
            return 1.0;
        }
        let i = self.segment(w);
        let dw = w - self.omega[i];
        let slope = (self.density[i + 1] - self.density[i]) / (self.omega[i + 1] - self.omega[i]);
        self.cdf[i] + self.density[i] * dw + 0.5 * slope * dw * dw
    }

    fn segment(&self, w: f64) -> usize {
        let m = self.omega.len();
        self.omega.partition_point(|&o| o <= w).clamp(1, m - 1) - 1
    }

    /// Monotone cubic guess, then safeguarded Newton on the exact CDF
    /// inside the bracketing table segment.
    fn quantile(&self, x: f64) -> f64 {
        let m = self.cdf.len();
        if x <= 0.0 {
            return -1.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let i = (self.cdf.partition_point(|&c| c <= x).clamp(1, m - 1)) - 1;
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let (mut lo, mut hi) = (self.omega[i], self.omega[i + 1]);
        let h = c1 - c0;
        let mut w = if h > 0.0 {
            let t = (x - c0) / h;
            hermite(t, h, lo, hi, self.inv_slopes[i], self.inv_slopes[i + 1])
        } else {
            lo
        };
        for _ in 0..100 {
            let r = self.cdf(w) - x;
            if r.abs() < 1e-15 {
                break;
            }
            if r > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let f = self.density(w);
            let newton = w - r / f;
            w = if f > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 {
                break;
            }
        }
        w
    }
}

fn hermite(t: f64, h: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1
}

/// Fritsch–Carlson slopes for monotone data `(x_i, y_i)`; flat segments of
/// `x` get zero slope.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let delta: Vec<f64> = (0..m - 1)
        .map(|i| {
            let h = x[i + 1] - x[i];
            if h > 0.0 {
                (y[i + 1] - y[i]) / h
            } else {
                0.0
            }
        })
        .collect();
    let mut s = vec![0.0; m];
    s[0] = delta[0];
    s[m - 1] = delta[m - 2];
    for i in 1..m - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
            s[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    s
}

/// Distribution of natural frequencies.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyModel {
    /// `f = 1/2`, `Ω(x) = 2x − 1`.
    Uniform,
    /// `f = 1/(π√(1−ω²))`, `Ω(x) = −cos(πx)`.
    ArcsineCosine,
    /// Cauchy truncated to `[-1,1]`: `f = 2/(π(1+ω²))`,
    /// `Ω(x) = tan(π/4 (2x−1))`.
    CauchyLike,
    Table(TableDensity),
}

/// Serialized form used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencySpec {
    Uniform,
    ArcsineCosine,
    CauchyLike,
    Table { omega: Vec<f64>, density: Vec<f64> },
}

impl TryFrom<FrequencySpec> for FrequencyModel {
    type Error = Error;

    fn try_from(spec: FrequencySpec) -> Result<Self> {
        Ok(match spec {
            FrequencySpec::Uniform => FrequencyModel::Uniform,
            FrequencySpec::ArcsineCosine => FrequencyModel::ArcsineCosine,
            FrequencySpec::CauchyLike => FrequencyModel::CauchyLike,
            FrequencySpec::Table { omega, density } => FrequencyModel::Table(TableDensity::new(omega, density)?),
        })
    }
}

impl From<FrequencyModel> for FrequencySpec {
    fn from(model: FrequencyModel) -> Self {
        match model {
            FrequencyModel::Uniform => FrequencySpec::Uniform,
            FrequencyModel::ArcsineCosine => FrequencySpec::ArcsineCosine,
            FrequencyModel::CauchyLike => FrequencySpec::CauchyLike,
            FrequencyModel::Table(t) => FrequencySpec::Table { omega: t.omega, density: t.density },
        }
    }
}

impl FrequencyModel {
    pub fn name(&self) -> &'static str {
        match self {
            FrequencyModel::Uniform => "uniform",
            FrequencyModel::ArcsineCosine => "arcsine_cosine",
            FrequencyModel::CauchyLike => "cauchy_like",
            FrequencyModel::Table(_) => "table",
        }
    }

    pub fn density(&self, w: f64) -> f64 {
        if !(-1.0..=1.0).contains(&w) {
            return 0.0;
        }
        match self {
            FrequencyModel::Uniform => 0.5,
            FrequencyModel::ArcsineCosine => 1.0 / (PI * (1.0 - w * w).sqrt()),
            FrequencyModel::CauchyLike => 2.0 / (PI * (1.0 + w * w)),
            FrequencyModel::Table(t) => t.density(w),
        }
    }

    pub fn cdf(&self, w: f64) -> f64 {
        let w = w.clamp(-1.0, 1.0);
        match self {
            FrequencyModel::Uniform => 0.5 * (w + 1.0),
            FrequencyModel::ArcsineCosine => 0.5 + w.asin() / PI,
            FrequencyModel::CauchyLike => 0.5 + 2.0 * w.atan() / PI,
            FrequencyModel::Table(t) => t.cdf(w),
        }
    }

    /// `Ω(x)` without range checking; `x` is clamped to `[0, 1]`.
    pub fn omega(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            FrequencyModel::Uniform => 2.0 * x - 1.0,
            FrequencyModel::ArcsineCosine => -(PI * x).cos(),
            FrequencyModel::CauchyLike => (FRAC_PI_4 * (2.0 * x - 1.0)).tan(),
            FrequencyModel::Table(t) => t.quantile(x),
        }
    }

    /// `Ω(x) = F⁻¹(x)` for `x ∈ [0, 1]`.
    pub fn quantile(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!("quantile argument {x} outside [0,1]")));
        }
        Ok(self.omega(x))
    }

    /// `Ω̄ = ∫₀¹ Ω(x) dx`.
    pub fn mean_frequency(&self) -> f64 {
        match self {
            FrequencyModel::Table(t) => t.mean,
            _ => 0.0,
        }
    }

    /// `sup_x |Ω(x) − Ω̄|`: 1 for the named models, attained at an endpoint
    /// for tables since Ω is monotone.
    pub fn spread(&self) -> f64 {
        match self {
            FrequencyModel::Table(t) => {
                let m = t.mean;
                (self.omega(0.0) - m).abs().max((self.omega(1.0) - m).abs())
            }
            _ => 1.0,
        }
    }

    /// `sup |Ω'|` where finite: 2 for Uniform, π for ArcsineCosine and
    /// CauchyLike. `None` for tables.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            FrequencyModel::Uniform => Some(2.0),
            FrequencyModel::ArcsineCosine => Some(PI),
            FrequencyModel::CauchyLike => Some(PI),
            FrequencyModel::Table(_) => None,
        }
    }

    /// `Ω(x) + Ω(1−x) = 0`, i.e. an even density. Checked on a grid for
    /// tables.
    pub fn is_odd(&self) -> bool {
        match self {
            FrequencyModel::Table(_) => (0..=200).all(|i| {
                let x = i as f64 / 200.0;
                (self.omega(x) + self.omega(1.0 - x)).abs() < 1e-9
            }),
            _ => true,
        }
    }
}

/// Frequencies `ω_j = Ω(x_(j))` at sorted sample points, constant on
/// `I_j^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFrequency {
    values: Vec<f64>,
    mean: f64,
}

impl StepFrequency {
    pub fn from_values(values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Self { values, mean }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ω*_n = (1/n) Σ ω_j`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "omega_j")?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

pub fn empirical_step(model: &FrequencyModel, pts: &SamplePoints) -> StepFrequency {
    StepFrequency::from_values(pts.as_slice().iter().map(|&x| model.omega(x)).collect())
}

/// `max_j sup_{x∈I_j} |ω_j − Ω(x)|`, evaluated at the interval endpoints
/// (Ω is monotone).
pub fn sup_distance_to_continuum(step: &StepFrequency, model: &FrequencyModel) -> f64 {
    let n = step.n() as f64;
    step.values
        .iter()
        .enumerate()
        .map(|(j, &w)| {
            let left = model.omega(j as f64 / n);
            let right = model.omega((j + 1) as f64 / n);
            (w - left).abs().max((w - right).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::SampleMode;
    use crate::quad::{adaptive_gk, tanh_sinh};

    fn named() -> [FrequencyModel; 3] {
        [FrequencyModel::Uniform, FrequencyModel::ArcsineCosine, FrequencyModel::CauchyLike]
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(FrequencyModel::Uniform.quantile(0.75).unwrap(), 0.5);
        assert!(FrequencyModel::ArcsineCosine.quantile(0.5).unwrap().abs() < 1e-16);
        assert!((FrequencyModel::CauchyLike.quantile(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((FrequencyModel::CauchyLike.quantile(0.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(FrequencyModel::Uniform.quantile(1.5).is_err());
        assert!(FrequencyModel::Uniform.quantile(-0.1).is_err());
    }

    #[test]
    fn densities_have_unit_mass() {
        for m in named() {
            // w = −cos(πt) absorbs the arcsine endpoint singularity
            let r = adaptive_gk(|t: f64| m.density(-(PI * t).cos()) * PI * (PI * t).sin(), 0.0, 1.0, 1e-13);
            assert!((r.value - 1.0).abs() < 1e-10, "{}: {}", m.name(), r.value);
        }
    }

    #[test]
    fn cdf_inverts_quantile() {
        for m in named() {
            for i in 0..=1000 {
                let x = i as f64 / 1000.0;
                assert!((m.cdf(m.omega(x)) - x).abs() < 1e-10, "{} at {x}", m.name());
            }
        }
    }

    #[test]
    fn odd_about_one_half() {
        for m in named() {
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!((m.omega(x) + m.omega(1.0 - x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_reproduces_uniform() {
        let t = TableDensity::new(vec![-1.0, -0.3, 0.4, 1.0], vec![1.0; 4]).unwrap();
        let m = FrequencyModel::Table(t);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((m.omega(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
        assert!(m.mean_frequency().abs() < 1e-15);
        assert!(m.is_odd());
    }

    #[test]
    fn skewed_table_round_trip_and_mean() {
        let omega: Vec<f64> = (0..=20).map(|i| -1.0 + i as f64 / 10.0).collect();
        let density: Vec<f64> = omega.iter().map(|w| 1.0 + w + 0.5 * w * w).collect();
        let t = TableDensity::new(omega, density).unwrap();
        let m = FrequencyModel::Table(t);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let w = m.omega(x);
            assert!((m.cdf(w) - x).abs() < 1e-10);
        }
        let mean = tanh_sinh(|x| m.omega(x), 0.0, 1.0, 1e-12).value;
        assert!((m.mean_frequency() - mean).abs() < 1e-9);
        assert!(!m.is_odd());
    }

    #[test]
    fn table_validation() {
        assert!(TableDensity::new(vec![-1.0, 1.0], vec![1.0]).is_err());
        assert!(TableDensity::new(vec![-0.9, 1.0], vec![1.0, 1.0]).is_err());
        assert!(TableDensity::new(vec![-1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(TableDensity::new(vec![-1.0, 1.0], vec![-1.0, 1.0]).is_err());
    }

    #[test]
    fn empirical_step_deterministic_uniform() {
        let pts = SamplePoints::generate(4, SampleMode::Deterministic, 0).unwrap();
        let s = empirical_step(&FrequencyModel::Uniform, &pts);
        assert_eq!(s.values(), &[-0.5, 0.0, 0.5, 1.0]);
        assert_eq!(s.mean(), 0.25);
    }

    #[test]
    fn midpoint_mean_is_small() {
        let pts = SamplePoints::generate(10_000, SampleMode::Midpoint, 0).unwrap();
        for m in named() {
            let s = empirical_step(&m, &pts);
            assert!(s.mean().abs() < 1e-3, "{}", m.name());
            assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn sup_distance_examples() {
        let right = SamplePoints::generate(100, SampleMode::Deterministic, 0).unwrap();
        let s = empirical_step(&FrequencyModel::Uniform, &right);
        assert!((sup_distance_to_continuum(&s, &FrequencyModel::Uniform) - 0.02).abs() < 1e-14);

        let mid = SamplePoints::generate(1000, SampleMode::Midpoint, 0).unwrap();
        for m in named() {
            let s = empirical_step(&m, &mid);
            let bound = m.lipschitz().unwrap() / (2.0 * 1000.0);
            assert!(sup_distance_to_continuum(&s, &m) <= bound + 1e-12, "{}", m.name());
        }
    }

    #[test]
    fn csv_column() {
        let s = StepFrequency::from_values(vec![-0.5, 0.5]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "omega_j\n-0.5\n0.5\n");
    }
}
