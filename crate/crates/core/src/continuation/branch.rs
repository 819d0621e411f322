use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::arclength::{refine_fold, trace, ContinuationOptions, Problem, RawPoint, Termination};
use crate::finite::newton::bordered;
use crate::finite::{order_parameter, FiniteSystem, SpectrumSummary, Stability, SyncState};
use crate::{Error, Result};

/// Unknowns `(u, ω*)`, equations `(G_n, Σu)`.
pub struct KuramotoProblem<'a> {
    sys: &'a FiniteSystem,
}

impl<'a> KuramotoProblem<'a> {
    pub fn new(sys: &'a FiniteSystem) -> Self {
        Self { sys }
    }
}

impl Problem for KuramotoProblem<'_> {
    fn dim(&self) -> usize {
        self.sys.n() + 1
    }

    fn residual(&self, x: &DVector<f64>, k: f64) -> DVector<f64> {
        let n = self.sys.n();
        let u = x.rows(0, n).into_owned();
        let g = self.sys.rhs_at(&u, x[n], k);
        let mut out = DVector::zeros(n + 1);
        out.rows_mut(0, n).copy_from(&g);
        out[n] = u.sum();
        out
    }

    fn jacobian(&self, x: &DVector<f64>, k: f64) -> DMatrix<f64> {
        let n = self.sys.n();
        bordered(&self.sys.jacobian_at(&x.rows(0, n).into_owned(), k))
    }

    fn d_param(&self, x: &DVector<f64>, _k: f64) -> DVector<f64> {
        let n = self.sys.n();
        let mut out = DVector::zeros(n + 1);
        out.rows_mut(0, n).copy_from(&self.sys.coupling_term(&x.rows(0, n).into_owned()));
        out
    }

    fn weights(&self) -> DVector<f64> {
        DVector::from_element(self.sys.n() + 1, 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub omega_star: f64,
    pub r: f64,
    pub residual: f64,
    pub smallest_eig: f64,
    pub unstable_count: usize,
    pub stability: Stability,
    pub stable: bool,
    pub fold_flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fold {
    /// Position of the refined point in [`Branch::points`].
    pub index: usize,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub omega_star: f64,
    pub smallest_eig: f64,
    /// The turning point is not matched by an eigenvalue crossing within
    /// `10·ds` of arclength on either side.
    pub suspect: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub folds: Vec<Fold>,
    pub direction: f64,
    pub termination: Termination,
}

impl Branch {
    pub fn min_k(&self) -> f64 {
        self.points.iter().map(|p| p.k).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "idx,K,r,smallest_eig,stable,fold_flag")?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(out, "{},{},{},{},{},{}", i, p.k, p.r, p.smallest_eig, p.stable as u8, p.fold_flag as u8)?;
        }
        Ok(())
    }
}

fn annotate(sys: &FiniteSystem, raw: &RawPoint) -> BranchPoint {
    let n = sys.n();
    let mut u = raw.x.rows(0, n).into_owned();
    let mean = u.mean();
    u.add_scalar_mut(-mean);
    let omega_star = raw.x[n];
    let spec = SpectrumSummary::of_jacobian(&sys.jacobian_at(&u, raw.k));
    BranchPoint {
        k: raw.k,
        residual: sys.rhs_at(&u, omega_star, raw.k).amax(),
        r: order_parameter(u.as_slice()),
        u: u.as_slice().to_vec(),
        omega_star,
        smallest_eig: spec.smallest,
        unstable_count: spec.unstable_count,
        stable: spec.stability == Stability::Stable,
        stability: spec.stability,
        fold_flag: raw.fold,
    }
}

fn raw(p: &BranchPoint) -> RawPoint {
    let mut x = DVector::zeros(p.u.len() + 1);
    x.rows_mut(0, p.u.len()).copy_from_slice(&p.u);
    x[p.u.len()] = p.omega_star;
    RawPoint { x, k: p.k, fold: p.fold_flag }
}

fn distance(a: &BranchPoint, b: &BranchPoint) -> f64 {
    let n = a.u.len() as f64;
    let du: f64 = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
    (du + (a.omega_star - b.omega_star).powi(2) + (a.k - b.k).powi(2)).sqrt()
}

fn make_fold(points: &[BranchPoint], index: usize, window: f64) -> Fold {
    let fold = &points[index];
    let collect = |range: &mut dyn Iterator<Item = usize>| {
        let mut out = Vec::new();
        let mut prev = fold;
        let mut acc = 0.0;
        for i in range {
            acc += distance(prev, &points[i]);
            if acc > window {
                break;
            }
            out.push((points[i].smallest_eig.signum(), points[i].unstable_count));
            prev = &points[i];
        }
        out
    };
    let before = collect(&mut (0..index).rev());
    let after = collect(&mut (index + 1..points.len()));
    let crossing = before.iter().any(|b| after.iter().any(|a| a.0 != b.0 || a.1 != b.1));
    Fold {
        index,
        k: fold.k,
        u: fold.u.clone(),
        omega_star: fold.omega_star,
        smallest_eig: fold.smallest_eig,
        suspect: !before.is_empty() && !after.is_empty() && !crossing,
    }
}

/// Pseudo-arclength continuation in `K` from a solved state.
pub fn continue_branch(sys: &FiniteSystem, start: &SyncState, opts: &ContinuationOptions) -> Result<Branch> {
    if start.u.len() != sys.n() {
        return Err(Error::DimensionMismatch { expected: sys.n(), got: start.u.len() });
    }
    let problem = KuramotoProblem::new(sys);
    let mut x0 = DVector::zeros(sys.n() + 1);
    x0.rows_mut(0, sys.n()).copy_from_slice(&start.u);
    x0[sys.n()] = start.omega_star;
    let traced = trace(&problem, x0, start.coupling, opts)?;
    let points: Vec<BranchPoint> = traced.points.iter().map(|p| annotate(sys, p)).collect();
    let folds = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.fold_flag)
        .map(|(i, _)| make_fold(&points, i, 10.0 * opts.ds))
        .collect();
    Ok(Branch { points, folds, direction: opts.direction.signum(), termination: traced.termination })
}

/// Refines the K-turning point between `branch.points[i]` and
/// `branch.points[j]`.
pub fn locate_fold(sys: &FiniteSystem, branch: &Branch, bracket: (usize, usize), opts: &ContinuationOptions) -> Result<Fold> {
    let (i, j) = bracket;
    let len = branch.points.len();
    if i >= len || j >= len || i == j {
        return Err(Error::InvalidArgument(format!("bracket ({i}, {j}) invalid for {len} points")));
    }
    let problem = KuramotoProblem::new(sys);
    let w = problem.weights();
    let refined = refine_fold(&problem, &raw(&branch.points[i]), &raw(&branch.points[j]), &w, opts)?;
    let mut points = branch.points[i.min(j)..=i.max(j)].to_vec();
    let at = points.len() / 2;
    points.insert(at, annotate(sys, &refined));
    Ok(make_fold(&points, at, 10.0 * opts.ds))
}
