//! Mean-field synchronous states of Erdős–Rényi graphons.
//!
//! For `W ≡ p` the locked profile is `u*(x) = arcsin((Ω(x) − Ω̄)/κ)` with
//! `κ = K p q γ(q)`, where
//!
//! ```text
//! γ(q) = (1/q²) ∫ √(q² − s²) f(s) ds = (1/q²) ∫₀¹ √(q² − (Ω(x) − Ω̄)²) dx.
//! ```
//!
//! A profile exists iff `1/(Kp) ≤ γ* = max_{q ≥ 1} γ(q)`, so the onset of
//! synchronization is at `K_crit = 1/(p γ*)`. All integrals are taken in the
//! quantile variable `x`, where every built-in density gives an integrand
//! that is smooth or has an integrable endpoint singularity handled by
//! tanh–sinh quadrature.

use nalgebra::DVector;
use serde::Serialize;

use crate::freqdist::FrequencyModel;
use crate::quad::{tanh_sinh, GaussLegendre};
use crate::{Error, Result};

const QUAD_TOL: f64 = 1e-13;
const DIFF_H: f64 = 1e-6;
/// Relative distance below which `κ` is identified with the spread, so
/// that the onset profile is not lost to round-off in `K p q γ(q)`.
const KAPPA_SNAP: f64 = 1e-12;
/// Nodes per dimension of the tensor rule for the center-manifold integrals.
pub const CM_NODES: usize = 256;

/// `√(κ² − w²)` without cancellation near `|w| = κ`.
fn root_gap(kappa: f64, w: f64) -> f64 {
    let a = w.abs();
    ((kappa - a) * (kappa + a)).max(0.0).sqrt()
}

fn centered(model: &FrequencyModel) -> impl Fn(f64) -> f64 + '_ {
    let mean = model.mean_frequency();
    move |x| model.omega(x) - mean
}

fn integrate01<F: FnMut(f64) -> f64>(f: F) -> f64 {
    tanh_sinh(f, 0.0, 1.0, QUAD_TOL).value
}

fn snap_kappa(kappa: f64, spread: f64) -> f64 {
    if (kappa - spread).abs() <= KAPPA_SNAP * spread {
        spread
    } else {
        kappa
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("edge probability {p} outside (0,1]")))
    }
}

/// `γ(q)` for `q ≥ sup|Ω − Ω̄|` (= 1 for the named models).
pub fn gamma_of_q(model: &FrequencyModel, q: f64) -> Result<f64> {
    let lo = model.spread();
    if !(q >= lo) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma needs q >= {lo}, got {q}")));
    }
    let w = centered(model);
    Ok(integrate01(|x| root_gap(q, w(x))) / (q * q))
}

fn gamma_prime(model: &FrequencyModel, q: f64) -> f64 {
    let lo = model.spread();
    let h = DIFF_H.min(q - lo);
    let g = |q: f64| gamma_of_q(model, q).unwrap_or(f64::NAN);
    (g(q + h) - g(q - h)) / (2.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaMax {
    pub gamma_star: f64,
    pub q_star: f64,
}

/// `γ* = max_{q ≥ 1} γ(q)` by golden-section search on `[1, 10]` followed
/// by bisection on a central-difference `γ'` to `|Δq| < 1e-8`.
pub fn maximize_gamma(model: &FrequencyModel) -> GammaMax {
    let lo = model.spread();
    let hi = 10.0 * lo;
    let g = |q: f64| gamma_of_q(model, q).unwrap_or(f64::NEG_INFINITY);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-6 * lo {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let q_golden = 0.5 * (a + b);
    let edge = lo + 10.0 * DIFF_H;
    if q_golden <= edge && gamma_prime(model, edge) <= 0.0 {
        return GammaMax { gamma_star: g(lo), q_star: lo };
    }
    let mut width = 1e-4 * lo;
    let (mut a, mut b);
    loop {
        a = (q_golden - width).max(lo + 2.0 * DIFF_H);
        b = (q_golden + width).min(hi);
        if (gamma_prime(model, a) > 0.0 || a <= lo + 2.0 * DIFF_H) && gamma_prime(model, b) < 0.0 {
            break;
        }
        if a <= lo + 2.0 * DIFF_H && b >= hi {
            break;
        }
        width *= 4.0;
    }
    while b - a > 1e-8 {
        let m = 0.5 * (a + b);
        if gamma_prime(model, m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let q_star = 0.5 * (a + b);
    GammaMax { gamma_star: g(q_star), q_star }
}

/// `K_crit = 1/(p γ*)`.
pub fn critical_coupling(model: &FrequencyModel, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(1.0 / (p * maximize_gamma(model).gamma_star))
}

/// The root `q ≥ q*` of `γ(q) = 1/(Kp)`: the branch continuing the
/// critical profile, on which `κ = q` grows with `K`.
pub fn solve_q(model: &FrequencyModel, p: f64, coupling: f64) -> Result<f64> {
    check_p(p)?;
    let max = maximize_gamma(model);
    solve_q_from(model, p, coupling, max)
}

fn solve_q_from(model: &FrequencyModel, p: f64, coupling: f64, max: GammaMax) -> Result<f64> {
    let target = 1.0 / (coupling * p);
    if !(target <= max.gamma_star) {
        return Err(Error::NoProfile { kappa: coupling * p * max.q_star * max.gamma_star, spread: model.spread() });
    }
    // γ(q) ≤ 1/q, so γ(1/target) ≤ target
    let (mut a, mut b) = (max.q_star, (1.0 / target).max(max.q_star));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if gamma_of_q(model, m)? > target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `u*(x) = arcsin((Ω(x) − Ω̄)/κ)` (principal branch).
#[derive(Debug, Clone)]
pub struct SyncProfile {
    model: FrequencyModel,
    kappa: f64,
    center: f64,
}

impl SyncProfile {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.model.omega(x) - self.center) / self.kappa).clamp(-1.0, 1.0).asin()
    }

    pub fn sample(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&x| self.eval(x)).collect()
    }

    /// `sup_x |Ω(x) − Ω̄ + Kp ∫ sin(u*(y) − u*(x)) dy|` over `points`.
    pub fn residual(&self, p: f64, coupling: f64, points: &[f64]) -> f64 {
        let s_int = integrate01(|y| self.eval(y).sin());
        let c_int = integrate01(|y| self.eval(y).cos());
        points
            .iter()
            .map(|&x| {
                let u = self.eval(x);
                let f = self.model.omega(x) - self.center + coupling * p * (u.cos() * s_int - u.sin() * c_int);
                f.abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The profile at `κ = K p q γ(q)`.
pub fn sync_profile(model: &FrequencyModel, p: f64, coupling: f64, q: f64) -> Result<SyncProfile> {
    check_p(p)?;
    let kappa = coupling * p * q * gamma_of_q(model, q)?;
    profile_at_kappa(model, kappa)
}

pub fn profile_at_kappa(model: &FrequencyModel, kappa: f64) -> Result<SyncProfile> {
    let spread = model.spread();
    let kappa = snap_kappa(kappa, spread);
    if !(kappa >= spread) {
        return Err(Error::NoProfile { kappa, spread });
    }
    Ok(SyncProfile { model: model.clone(), kappa, center: model.mean_frequency() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldReport {
    pub p: f64,
    pub gamma_star: f64,
    pub q_star: f64,
    #[serde(rename = "K_crit")]
    pub k_crit: f64,
    #[serde(rename = "K")]
    pub coupling: f64,
    /// `None` below `K_crit`.
    pub q: Option<f64>,
    pub kappa: Option<f64>,
}

impl MeanFieldReport {
    pub fn compute(model: &FrequencyModel, p: f64, coupling: f64) -> Result<Self> {
        check_p(p)?;
        let max = maximize_gamma(model);
        let q = solve_q_from(model, p, coupling, max).ok();
        let kappa = match q {
            Some(q) => Some(coupling * p * q * gamma_of_q(model, q)?),
            None => None,
        };
        Ok(Self {
            p,
            gamma_star: max.gamma_star,
            q_star: max.q_star,
            k_crit: 1.0 / (p * max.gamma_star),
            coupling,
            q,
            kappa,
        })
    }
}

/// A point of the mean-field branch parametrised by `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSample {
    #[serde(rename = "K")]
    pub coupling: f64,
    pub q: f64,
    pub kappa: f64,
    /// `|∫ e^{i u*}| = ∫ cos u*`.
    pub r: f64,
    pub stable: bool,
}

/// Locked profiles at `K = 1/(p γ(q))`, where `κ = q`. Both solutions of
/// `K p γ(q) = 1` appear: `q > q*` is the stable branch.
pub fn meanfield_branch(model: &FrequencyModel, p: f64, qs: &[f64]) -> Result<Vec<BranchSample>> {
    check_p(p)?;
    let q_star = maximize_gamma(model).q_star;
    let w = centered(model);
    qs.iter()
        .map(|&q| {
            let gamma = gamma_of_q(model, q)?;
            Ok(BranchSample {
                coupling: 1.0 / (p * gamma),
                q,
                kappa: q,
                r: integrate01(|x| root_gap(q, w(x)) / q),
                stable: q > q_star,
            })
        })
        .collect()
}

/// Spectrum of the linearisation about `u*` for `W ≡ p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub kappa: f64,
    /// `∫ cos u*`.
    #[serde(rename = "C")]
    pub c: f64,
    /// Essential spectrum `[ess_lo, ess_hi]`.
    pub ess_lo: f64,
    pub ess_hi: f64,
    /// `(1/(κC)) ∫ (Ω − Ω̄)² / √(κ² − (Ω − Ω̄)²)`; 0 is an eigenvalue iff
    /// this equals 1.
    pub zero_eig_lhs: f64,
    pub stable: bool,
    /// Point eigenvalues `K p λ*` with `I(λ*) = 1`.
    pub point_eigs: Vec<f64>,
}

/// `I(λ*) = (1/κ²) ∫ (Ω − Ω̄)² / (C c + λ*)` with `c = cos u*`.
pub fn i_function(model: &FrequencyModel, kappa: f64, c_int: f64, lambda: f64) -> f64 {
    let w = centered(model);
    integrate01(|x| {
        let wx = w(x);
        wx * wx / (c_int * root_gap(kappa, wx) / kappa + lambda)
    }) / (kappa * kappa)
}

pub fn spectrum_report(model: &FrequencyModel, p: f64, coupling: f64, q: f64) -> Result<SpectrumReport> {
    check_p(p)?;
    let spread = model.spread();
    let kappa = snap_kappa(coupling * p * q * gamma_of_q(model, q)?, spread);
    if !(kappa >= spread) {
        return Err(Error::NoProfile { kappa, spread });
    }
    if !model.is_odd() {
        return Err(Error::NotOdd);
    }
    let w = centered(model);
    let c_int = integrate01(|x| root_gap(kappa, w(x)) / kappa);
    let c_min = root_gap(kappa, spread) / kappa;
    let kp = coupling * p;
    let zero_eig_lhs = integrate01(|x| {
        let wx = w(x);
        wx * wx / root_gap(kappa, wx)
    }) / (kappa * c_int);

    let second_moment = integrate01(|x| w(x).powi(2));
    let edge = -c_int * c_min;
    let mut point_eigs = Vec::new();
    let i = |l: f64| i_function(model, kappa, c_int, l);
    let mut lo = edge + 1e-12 * (1.0 + edge.abs());
    let mut hi = (second_moment / (kappa * kappa)).max(lo + 1e-12);
    if i(lo) > 1.0 && i(hi) <= 1.0 {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if i(m) > 1.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        point_eigs.push(kp * 0.5 * (lo + hi));
    }

    Ok(SpectrumReport {
        kappa,
        c: c_int,
        ess_lo: -kp * c_int,
        ess_hi: -kp * c_min * c_int,
        zero_eig_lhs,
        stable: zero_eig_lhs < 1.0 && kappa > spread,
        point_eigs,
    })
}

/// Near-zero eigenfunction of the linearisation at `K_crit`, from an
/// m-point midpoint discretisation.
#[derive(Debug, Clone)]
pub struct CriticalMode {
    pub k_crit: f64,
    pub kappa: f64,
    pub points: Vec<f64>,
    /// Scaled so that the piecewise-linear interpolant has unit L² norm under
    /// the [`CM_NODES`]-point Gauss rule, signed so that `∫ (Ω − Ω̄) v > 0`.
    pub values: Vec<f64>,
    pub eigenvalue: f64,
}

impl CriticalMode {
    /// Piecewise-linear interpolation, constant beyond the outer nodes.
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.points.len();
        let t = x * m as f64 - 0.5;
        if t <= 0.0 {
            return self.values[0];
        }
        let i = t.floor() as usize;
        if i >= m - 1 {
            return self.values[m - 1];
        }
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// Discretises `L v = Kp ∫ cos(u*(y) − u*(x)) (v(y) − v(x)) dy` at `K_crit`
/// on `m` midpoints and extracts the eigenvector nearest zero on the
/// mean-zero subspace.
///
/// `L = D + (Kp/m)(c cᵀ + s sᵀ)` is diagonal plus rank two, so shifted
/// inverse iteration uses the Woodbury identity at O(m) per step.
pub fn critical_mode(model: &FrequencyModel, p: f64, m: usize) -> Result<CriticalMode> {
    check_p(p)?;
    if m < 4 {
        return Err(Error::InvalidArgument("critical mode needs m >= 4".into()));
    }
    let max = maximize_gamma(model);
    let k_crit = 1.0 / (p * max.gamma_star);
    let kappa = max.q_star;
    let profile = profile_at_kappa(model, kappa)?;
    let points: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let u = profile.sample(&points);
    let kp = k_crit * p;
    let c = DVector::from_iterator(m, u.iter().map(|v| v.cos()));
    let s = DVector::from_iterator(m, u.iter().map(|v| v.sin()));
    let (cm, sm) = (c.mean(), s.mean());
    let shift = 1e-3 * kp * cm;
    let diag = DVector::from_fn(m, |i, _| -kp * (c[i] * cm + s[i] * sm) - shift);
    let scale = (kp / m as f64).sqrt();
    let uc = &c * scale;
    let us = &s * scale;
    let inv_d = |v: &DVector<f64>| v.component_div(&diag);
    let z_c = inv_d(&uc);
    let z_s = inv_d(&us);
    let cap = nalgebra::Matrix2::new(1.0 + uc.dot(&z_c), uc.dot(&z_s), us.dot(&z_c), 1.0 + us.dot(&z_s));
    let cap_lu = cap.lu();
    let solve = |b: &DVector<f64>| -> Result<DVector<f64>> {
        let y = inv_d(b);
        let rhs = nalgebra::Vector2::new(uc.dot(&y), us.dot(&y));
        let t = cap_lu.solve(&rhs).ok_or(Error::NotConverged(f64::NAN))?;
        Ok(y - &z_c * t[0] - &z_s * t[1])
    };
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = v.component_mul(&(&diag.add_scalar(shift)));
        out += &c * (kp / m as f64 * c.dot(v));
        out += &s * (kp / m as f64 * s.dot(v));
        out
    };
    let project = |v: &mut DVector<f64>| {
        let mean = v.mean();
        v.add_scalar_mut(-mean);
        let norm = v.norm();
        *v /= norm;
    };

    let omega = DVector::from_iterator(m, points.iter().map(|&x| model.omega(x) - model.mean_frequency()));
    let mut v = &omega + &c * 0.1;
    project(&mut v);
    let mut eigenvalue = f64::NAN;
    let mut converged = false;
    for _ in 0..100 {
        let mut next = solve(&v)?;
        project(&mut next);
        if next.dot(&v) < 0.0 {
            next = -next;
        }
        let change = (&next - &v).amax();
        v = next;
        eigenvalue = v.dot(&apply(&v));
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        let residual = (apply(&v) - &v * eigenvalue).amax();
        if !(residual < 1e-8) {
            return Err(Error::NotConverged(residual));
        }
    }
    if omega.dot(&v) < 0.0 {
        v = -v;
    }
    let mut mode = CriticalMode { k_crit, kappa, points, values: v.as_slice().to_vec(), eigenvalue };
    let rule = GaussLegendre::new(CM_NODES);
    let norm = rule.integrate(|x| mode.eval(x).powi(2), 0.0, 1.0).sqrt();
    for val in &mut mode.values {
        *val /= norm;
    }
    Ok(mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmCoefficients {
    /// `∫∫ W sin(u*(y) − u*(x)) v*(x)`.
    pub a: f64,
    /// `−(1/K_crit) ∫ (Ω − Ω̄) v*`.
    pub a_alt: f64,
    /// `−(K_crit/2) ∫∫ W sin(u*(y) − u*(x)) (v*(y) − v*(x))² v*(x)`.
    pub b: f64,
    pub product_sign: f64,
}

/// Quadratic normal-form coefficients on the center manifold for `W ≡ p`,
/// by a tensor Gauss–Legendre rule.
pub fn cm_coefficients(
    model: &FrequencyModel,
    p: f64,
    k_crit: f64,
    u: &dyn Fn(f64) -> f64,
    v: &dyn Fn(f64) -> f64,
) -> Result<CmCoefficients> {
    check_p(p)?;
    let (xs, ws) = GaussLegendre::new(CM_NODES).on(0.0, 1.0);
    let us: Vec<f64> = xs.iter().map(|&x| u(x)).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| v(x)).collect();
    let norm: f64 = ws.iter().zip(&vs).map(|(w, v)| w * v * v).sum();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(Error::NotNormalized(norm.sqrt()));
    }
    let mean = model.mean_frequency();
    let (mut a, mut b, mut a_alt) = (0.0, 0.0, 0.0);
    for i in 0..xs.len() {
        let (mut inner_a, mut inner_b) = (0.0, 0.0);
        for j in 0..xs.len() {
            let sn = (us[j] - us[i]).sin();
            let dv = vs[j] - vs[i];
            inner_a += ws[j] * sn;
            inner_b += ws[j] * sn * dv * dv;
        }
        a += ws[i] * vs[i] * inner_a;
        b += ws[i] * vs[i] * inner_b;
        a_alt += ws[i] * (model.omega(xs[i]) - mean) * vs[i];
    }
    let a = p * a;
    let b = -0.5 * k_crit * p * b;
    let a_alt = -a_alt / k_crit;
    Ok(CmCoefficients { a, a_alt, b, product_sign: (a * b).signum() })
}
