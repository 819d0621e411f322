//! Pseudo-arclength continuation for `F(x, K) = 0` with `F: Rᵈ × R → Rᵈ`.

use nalgebra::{DMatrix, DVector};

use crate::finite::newton::guarded_solve;
use crate::{Error, Result};

/// A square system in the state `x` with a scalar parameter `K`.
pub trait Problem {
    fn dim(&self) -> usize;
    fn residual(&self, x: &DVector<f64>, k: f64) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>, k: f64) -> DMatrix<f64>;
    /// `∂F/∂K`.
    fn d_param(&self, x: &DVector<f64>, k: f64) -> DVector<f64>;
    /// Weights of the state components in the continuation norm
    /// `‖(x, K)‖² = Σ wᵢ xᵢ² + K²`.
    fn weights(&self) -> DVector<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    /// Initial arclength step.
    pub ds: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub max_points: usize,
    /// +1 to start towards larger K, −1 towards smaller.
    pub direction: f64,
    /// Residual tolerance of the corrector (sup norm).
    pub tol: f64,
    pub max_corrector_iter: usize,
    pub cond_limit: f64,
    /// Stop once this many folds have been found.
    pub max_folds: Option<usize>,
    /// Points traced past the final fold before stopping.
    pub trailing_points: usize,
    /// Largest predicted change of a single state component per step; the
    /// step is shortened below `ds` when the secant concentrates on a few
    /// components.
    pub max_component_step: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            ds: 0.05,
            k_min: 0.0,
            k_max: f64::INFINITY,
            max_points: 500,
            direction: -1.0,
            tol: 1e-10,
            max_corrector_iter: 8,
            cond_limit: 1e14,
            max_folds: None,
            trailing_points: 3,
            max_component_step: 0.2,
        }
    }
}

impl ContinuationOptions {
    pub fn ds_min(&self) -> f64 {
        self.ds / 64.0
    }

    pub fn ds_max(&self) -> f64 {
        4.0 * self.ds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    KRange,
    MaxPoints,
    Folds,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct RawPoint {
    pub x: DVector<f64>,
    pub k: f64,
    /// Refined K-turning point inserted between two traced points.
    pub fold: bool,
}

#[derive(Debug, Clone)]
pub struct RawBranch {
    pub points: Vec<RawPoint>,
    pub termination: Termination,
}

struct Tangent {
    x: DVector<f64>,
    k: f64,
}

fn wnorm(w: &DVector<f64>, dx: &DVector<f64>, dk: f64) -> f64 {
    (dx.iter().zip(w.iter()).map(|(d, wi)| wi * d * d).sum::<f64>() + dk * dk).sqrt()
}

fn chord(w: &DVector<f64>, a: &RawPoint, b: &RawPoint) -> Tangent {
    let dx = &b.x - &a.x;
    let dk = b.k - a.k;
    let len = wnorm(w, &dx, dk);
    Tangent { x: dx / len, k: dk / len }
}

/// `[F_x, F_K; (w∘τ_x)ᵀ, τ_K]`.
fn extended<P: Problem>(p: &P, x: &DVector<f64>, k: f64, w: &DVector<f64>, dir: &Tangent) -> DMatrix<f64> {
    let d = p.dim();
    let mut m = DMatrix::zeros(d + 1, d + 1);
    m.view_mut((0, 0), (d, d)).copy_from(&p.jacobian(x, k));
    m.view_mut((0, d), (d, 1)).copy_from(&p.d_param(x, k));
    for i in 0..d {
        m[(d, i)] = w[i] * dir.x[i];
    }
    m[(d, d)] = dir.k;
    m
}

/// Unit tangent at a solution, oriented along `reference`.
fn tangent_at<P: Problem>(p: &P, pt: &RawPoint, w: &DVector<f64>, reference: &Tangent, cond_limit: f64) -> Result<Tangent> {
    let d = p.dim();
    let m = extended(p, &pt.x, pt.k, w, reference);
    let mut e = DVector::zeros(d + 1);
    e[d] = 1.0;
    let t = guarded_solve(m, &e, cond_limit)?;
    let tx = t.rows(0, d).into_owned();
    let len = wnorm(w, &tx, t[d]);
    Ok(Tangent { x: tx / len, k: t[d] / len })
}

/// Newton on `{F = 0, ⟨dir, (x,K) − anchor⟩_w = s}`. Returns the point and
/// the iteration count.
#[allow(clippy::too_many_arguments)]
fn correct<P: Problem>(
    p: &P,
    guess: (DVector<f64>, f64),
    anchor: &RawPoint,
    dir: &Tangent,
    s: f64,
    w: &DVector<f64>,
    opts: &ContinuationOptions,
) -> Result<(RawPoint, usize)> {
    let d = p.dim();
    let (mut x, mut k) = guess;
    for it in 0..=opts.max_corrector_iter {
        let f = p.residual(&x, k);
        let dx = &x - &anchor.x;
        let arc = dx.iter().zip(w.iter()).zip(dir.x.iter()).map(|((a, b), c)| a * b * c).sum::<f64>()
            + dir.k * (k - anchor.k)
            - s;
        let res = f.amax();
        if !res.is_finite() {
            break;
        }
        if res <= opts.tol && arc.abs() <= opts.tol.max(1e-12 * s.abs()) {
            return Ok((RawPoint { x, k, fold: false }, it));
        }
        if it == opts.max_corrector_iter {
            return Err(Error::Diverged { iterations: it, residual: res });
        }
        let mut rhs = DVector::zeros(d + 1);
        rhs.rows_mut(0, d).copy_from(&(-f));
        rhs[d] = -arc;
        let step = guarded_solve(extended(p, &x, k, w, dir), &rhs, opts.cond_limit)?;
        x += step.rows(0, d);
        k += step[d];
    }
    Err(Error::Diverged { iterations: opts.max_corrector_iter, residual: f64::NAN })
}

/// Newton at fixed `K`.
fn solve_fixed<P: Problem>(p: &P, mut x: DVector<f64>, k: f64, opts: &ContinuationOptions) -> Result<DVector<f64>> {
    for it in 0..=opts.max_corrector_iter {
        let f = p.residual(&x, k);
        let res = f.amax();
        if res <= opts.tol {
            return Ok(x);
        }
        if !res.is_finite() || it == opts.max_corrector_iter {
            return Err(Error::Diverged { iterations: it, residual: res });
        }
        x += guarded_solve(p.jacobian(&x, k), &(-f), opts.cond_limit)?;
    }
    unreachable!()
}

/// Traces the solution branch through `(x0, k0)`.
pub fn trace<P: Problem>(p: &P, x0: DVector<f64>, k0: f64, opts: &ContinuationOptions) -> Result<RawBranch> {
    if x0.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: x0.len() });
    }
    let w = p.weights();
    let start = RawPoint { x: x0, k: k0, fold: false };
    let r0 = p.residual(&start.x, k0).amax();
    if !(r0 <= opts.tol.max(1e-9)) {
        return Err(Error::NotConverged(r0));
    }
    let mut points = vec![start];
    let in_range = |k: f64| k >= opts.k_min && k <= opts.k_max;
    if !in_range(k0) {
        return Ok(RawBranch { points, termination: Termination::KRange });
    }

    // first step at fixed parameter
    let mut ds = opts.ds;
    loop {
        let k1 = k0 + opts.direction * ds;
        match solve_fixed(p, points[0].x.clone(), k1, opts) {
            Ok(x1) if wnorm(&w, &(&x1 - &points[0].x), k1 - k0) <= 2.0 * opts.ds_max() => {
                points.push(RawPoint { x: x1, k: k1, fold: false });
                break;
            }
            _ => {
                ds *= 0.5;
                if ds < opts.ds_min() {
                    return Ok(RawBranch { points, termination: Termination::Stalled });
                }
            }
        }
    }
    if !in_range(points[1].k) {
        return Ok(RawBranch { points, termination: Termination::KRange });
    }

    let mut easy = 0;
    let mut folds = 0;
    let mut trailing: Option<usize> = None;
    let mut last = points.len() - 1;
    let mut prev_tangent = {
        let sec = chord(&w, &points[0], &points[1]);
        tangent_at(p, &points[1], &w, &sec, opts.cond_limit)?
    };
    loop {
        if points.len() >= opts.max_points {
            return Ok(RawBranch { points, termination: Termination::MaxPoints });
        }
        if trailing == Some(0) {
            return Ok(RawBranch { points, termination: Termination::Folds });
        }
        let prev = &points[last - 1];
        let cur = &points[last];
        let sec = chord(&w, prev, cur);
        let h = ds.min(opts.max_component_step / sec.x.amax());
        let guess = (&cur.x + &sec.x * h, cur.k + sec.k * h);
        // a converged point far from the predictor has jumped branches
        let attempt = correct(p, guess, cur, &sec, h, &w, opts).ok().filter(|(pt, _)| {
            wnorm(&w, &(&pt.x - &cur.x), pt.k - cur.k) <= 2.0 * opts.ds_max()
                && (&pt.x - &cur.x).amax() <= 2.0 * opts.max_component_step
        });
        let Some((next, iters)) = attempt else {
            ds *= 0.5;
            easy = 0;
            if ds < opts.ds_min() {
                return Ok(RawBranch { points, termination: Termination::Stalled });
            }
            continue;
        };
        let step_dir = chord(&w, cur, &next);
        let t_next = match tangent_at(p, &next, &w, &step_dir, opts.cond_limit) {
            Ok(t) => t,
            Err(_) => {
                ds *= 0.5;
                if ds < opts.ds_min() {
                    return Ok(RawBranch { points, termination: Termination::Stalled });
                }
                continue;
            }
        };
        // both tangents oriented along the step just taken
        let t_cur_k = {
            let dot = prev_tangent.x.iter().zip(step_dir.x.iter()).zip(w.iter()).map(|((a, b), c)| a * b * c).sum::<f64>()
                + prev_tangent.k * step_dir.k;
            prev_tangent.k * dot.signum()
        };
        let turned = t_cur_k * t_next.k < 0.0;
        let fold = if turned {
            match refine_fold(p, cur, &next, &w, opts) {
                Ok(f) => Some(f),
                Err(_) => {
                    ds *= 0.5;
                    easy = 0;
                    if ds < opts.ds_min() {
                        return Ok(RawBranch { points, termination: Termination::Stalled });
                    }
                    continue;
                }
            }
        } else {
            None
        };
        if let Some(f) = fold {
            points.push(f);
            folds += 1;
            if opts.max_folds.is_some_and(|m| folds >= m) {
                trailing = Some(opts.trailing_points);
            }
        }
        points.push(next);
        last = points.len() - 1;
        prev_tangent = t_next;
        if let Some(t) = trailing.as_mut() {
            *t = t.saturating_sub(1);
        }
        if !in_range(points[last].k) {
            return Ok(RawBranch { points, termination: Termination::KRange });
        }
        if iters <= 3 {
            easy += 1;
            if easy >= 4 {
                ds = (ds * 1.3).min(opts.ds_max());
                easy = 0;
            }
        } else {
            easy = 0;
        }
    }
}

/// K-turning point between two solutions `a`, `b` on the same branch:
/// regula falsi (Illinois) on the tangent K-component along the chord.
pub fn refine_fold<P: Problem>(p: &P, a: &RawPoint, b: &RawPoint, w: &DVector<f64>, opts: &ContinuationOptions) -> Result<RawPoint> {
    let dir = chord(w, a, b);
    let len = wnorm(w, &(&b.x - &a.x), b.k - a.k);
    let t_k = |pt: &RawPoint| -> Result<f64> { Ok(tangent_at(p, pt, w, &dir, opts.cond_limit)?.k) };
    let (mut s0, mut f0) = (0.0, t_k(a)?);
    let (mut s1, mut f1) = (len, t_k(b)?);
    if f0 * f1 > 0.0 {
        return Err(Error::NoFold("tangent K-component keeps its sign on the bracket".into()));
    }
    let at = |s: f64| -> Result<RawPoint> {
        let frac = s / len;
        let guess = (&a.x + (&b.x - &a.x) * frac, a.k + (b.k - a.k) * frac);
        Ok(correct(p, guess, a, &dir, s, w, opts)?.0)
    };
    let mut best = if f0.abs() < f1.abs() { a.clone() } else { b.clone() };
    let mut best_f = f0.abs().min(f1.abs());
    for _ in 0..100 {
        if best_f < 1e-10 || (s1 - s0).abs() < 1e-10 {
            break;
        }
        let mut s = (s0 * f1 - s1 * f0) / (f1 - f0);
        if !(s > s0.min(s1) && s < s0.max(s1)) {
            s = 0.5 * (s0 + s1);
        }
        let pt = match at(s) {
            Ok(pt) => pt,
            Err(_) => {
                // fall back to bisection
                let mid = 0.5 * (s0 + s1);
                if (mid - s).abs() < 1e-14 {
                    break;
                }
                s = mid;
                at(s)?
            }
        };
        let f = t_k(&pt)?;
        if f.abs() < best_f {
            best_f = f.abs();
            best = pt;
        }
        if f * f1 < 0.0 {
            s0 = s1;
            f0 = f1;
        } else {
            f0 *= 0.5;
        }
        s1 = s;
        f1 = f;
    }
    best.fold = true;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `u² = K − K₀`: a single fold at `K₀`.
    struct Normal {
        k0: f64,
    }

    impl Problem for Normal {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, x: &DVector<f64>, k: f64) -> DVector<f64> {
            DVector::from_element(1, x[0] * x[0] - (k - self.k0))
        }
        fn jacobian(&self, x: &DVector<f64>, _k: f64) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, 2.0 * x[0])
        }
        fn d_param(&self, _x: &DVector<f64>, _k: f64) -> DVector<f64> {
            DVector::from_element(1, -1.0)
        }
        fn weights(&self) -> DVector<f64> {
            DVector::from_element(1, 1.0)
        }
    }

    #[test]
    fn normal_form_fold() {
        let p = Normal { k0: 0.7 };
        let opts = ContinuationOptions { ds: 0.1, k_min: -5.0, k_max: 2.0, ..Default::default() };
        let br = trace(&p, DVector::from_element(1, 1.0), 1.7, &opts).unwrap();
        let folds: Vec<&RawPoint> = br.points.iter().filter(|pt| pt.fold).collect();
        assert_eq!(folds.len(), 1);
        assert!((folds[0].k - 0.7).abs() < 1e-8, "{}", folds[0].k);
        assert_eq!(br.termination, Termination::KRange);
        // came back up on the negative root
        assert!(br.points.last().unwrap().x[0] < 0.0);
        for pt in &br.points {
            assert!(p.residual(&pt.x, pt.k).amax() <= 1e-10);
        }
    }

    #[test]
    fn stop_after_first_fold() {
        let p = Normal { k0: 0.0 };
        let opts = ContinuationOptions { ds: 0.2, k_min: -5.0, k_max: 5.0, max_folds: Some(1), trailing_points: 2, ..Default::default() };
        let br = trace(&p, DVector::from_element(1, 1.0), 1.0, &opts).unwrap();
        assert_eq!(br.termination, Termination::Folds);
        let i = br.points.iter().position(|pt| pt.fold).unwrap();
        assert_eq!(br.points.len() - 1 - i, 2);
    }

    #[test]
    fn component_step_cap() {
        let p = Normal { k0: 0.0 };
        let opts = ContinuationOptions { ds: 0.2, k_min: -1.0, k_max: 4.0, max_component_step: 0.02, ..Default::default() };
        let br = trace(&p, DVector::from_element(1, 1.0), 1.0, &opts).unwrap();
        assert_eq!(br.termination, Termination::KRange);
        for w in br.points.windows(2).skip(1) {
            if !w[0].fold && !w[1].fold {
                assert!((w[1].x[0] - w[0].x[0]).abs() < 0.03);
            }
        }
    }

    #[test]
    fn unconverged_start_is_rejected() {
        let p = Normal { k0: 0.0 };
        assert!(matches!(trace(&p, DVector::from_element(1, 1.0), 2.0, &Default::default()), Err(Error::NotConverged(_))));
    }

    #[test]
    fn refine_requires_a_turn() {
        let p = Normal { k0: 0.0 };
        let a = RawPoint { x: DVector::from_element(1, 1.0), k: 1.0, fold: false };
        let b = RawPoint { x: DVector::from_element(1, 2.0), k: 4.0, fold: false };
        let w = p.weights();
        assert!(matches!(refine_fold(&p, &a, &b, &w, &Default::default()), Err(Error::NoFold(_))));
    }
}
