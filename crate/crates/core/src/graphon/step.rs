use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use super::{Graphon, SamplePoints};
use crate::rng::CounterRng;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"GKSG";
const VERSION: u16 = 1;

/// Piecewise-constant kernel on the partition `I_j × I_k`,
/// `I_j = [(j−1)/n, j/n)`.
///
/// Sampled graphs carry a zero diagonal. Embeddings of analytic kernels
/// ([`embed`]) keep the diagonal cell averages, since they stand for the
/// kernel itself rather than a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGraphon {
    weights: DMatrix<f64>,
}

impl StepGraphon {
    /// Checks squareness, symmetry and range; the diagonal is not constrained.
    pub fn from_matrix(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n || n == 0 {
            return Err(Error::InvalidArgument("step graphon needs a nonempty square matrix".into()));
        }
        for j in 0..n {
            for k in 0..n {
                let w = weights[(j, k)];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidArgument(format!("weight ({j},{k}) = {w} outside [0,1]")));
                }
                if w != weights[(k, j)] {
                    return Err(Error::InvalidArgument(format!("weights not symmetric at ({j},{k})")));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Like [`from_matrix`](Self::from_matrix) but also requires a zero
    /// diagonal, as for the adjacency matrix of a graph.
    pub fn from_graph(weights: DMatrix<f64>) -> Result<Self> {
        let s = Self::from_matrix(weights)?;
        if !s.has_zero_diagonal() {
            return Err(Error::InvalidArgument("graph adjacency must have zero diagonal".into()));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.weights
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.weights[(j, k)]
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.n()).all(|j| self.weights[(j, j)] == 0.0)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|j| (j + 1..n).all(|k| self.weights[(j, k)] == self.weights[(k, j)]))
    }

    /// Fraction of off-diagonal entries that are nonzero.
    pub fn edge_density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let mut edges = 0usize;
        for j in 0..n {
            for k in j + 1..n {
                if self.weights[(j, k)] != 0.0 {
                    edges += 1;
                }
            }
        }
        edges as f64 / (n * (n - 1) / 2) as f64
    }

    /// Dense CSV: a `n,<n>` header line followed by n rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.n();
        writeln!(out, "n,{n}")?;
        for j in 0..n {
            let row: Vec<String> = (0..n).map(|k| self.weights[(j, k)].to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
        let n: usize = header
            .strip_prefix("n,")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad header line {header:?}")))?;
        let mut data = Vec::with_capacity(n * n);
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("row {}: {e}", row + 1)))?;
            if vals.len() != n {
                return Err(Error::Format(format!("row {} has {} entries, expected {n}", row + 1, vals.len())));
            }
            data.extend(vals);
        }
        if data.len() != n * n {
            return Err(Error::Format(format!("expected {n} rows, got {}", data.len() / n.max(1))));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, &data))
    }

    /// `GKSG` magic, version u16, n u32, then n² row-major f64, all
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.n();
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        let n32 = u32::try_from(n).map_err(|_| Error::Format("n does not fit in u32".into()))?;
        out.write_all(&n32.to_le_bytes())?;
        for j in 0..n {
            for k in 0..n {
                out.write_all(&self.weights[(j, k)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing GKSG magic".into()));
        }
        let mut v = [0u8; 2];
        input.read_exact(&mut v)?;
        let version = u16::from_le_bytes(v);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported GKSG version {version}")));
        }
        let mut nb = [0u8; 4];
        input.read_exact(&mut nb)?;
        let n = u32::from_le_bytes(nb) as usize;
        let mut data = vec![0.0; n * n];
        let mut buf = [0u8; 8];
        for x in data.iter_mut() {
            input.read_exact(&mut buf)?;
            *x = f64::from_le_bytes(buf);
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, &data))
    }
}

/// ℍ(n, W): edge weight `W(x_j, x_k)` between distinct vertices.
pub fn sample_weighted(w: &Graphon, pts: &SamplePoints) -> StepGraphon {
    let x = pts.as_slice();
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j + 1..n {
            let v = w.eval(x[j], x[k]);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    StepGraphon { weights: m }
}

/// 𝔾(n, W): an edge of weight 1 between `j ≠ k` with probability
/// `W(x_j, x_k)`, one draw per unordered pair.
pub fn sample_simple(w: &Graphon, pts: &SamplePoints, seed: u64) -> StepGraphon {
    let x = pts.as_slice();
    let n = x.len();
    let rng = CounterRng::new(seed);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for (k, u) in (j + 1..n).zip(rng.row_uniforms(j, n)) {
            if u < w.eval(x[j], x[k]) {
                m[(j, k)] = 1.0;
                m[(k, j)] = 1.0;
            }
        }
    }
    StepGraphon { weights: m }
}

/// Exact cell averages of `W` on the uniform n-partition.
pub fn embed(w: &Graphon, n: usize) -> Result<StepGraphon> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if let Some(p) = w.constant_value() {
        return Ok(StepGraphon { weights: DMatrix::from_element(n, n, p) });
    }
    let h = 1.0 / n as f64;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let avg = cell_average(w, (j as f64 * h, (j + 1) as f64 * h), (k as f64 * h, (k + 1) as f64 * h));
            let avg = avg.clamp(0.0, 1.0);
            m[(j, k)] = avg;
            m[(k, j)] = avg;
        }
    }
    Ok(StepGraphon { weights: m })
}

/// Exact mean of `W` over the rectangle `xs × ys`.
fn cell_average(w: &Graphon, xs: (f64, f64), ys: (f64, f64)) -> f64 {
    let area = (xs.1 - xs.0) * (ys.1 - ys.0);
    match w {
        Graphon::ErdosRenyi { p } => *p,
        Graphon::SmallWorld { hi, lo, radius } => {
            // d(x,y) ≤ r  ⇔  |y − x| ≤ r or |y − x| ≥ 1 − r
            let below = |t: f64| diagonal_area(xs, ys, t);
            let r = *radius;
            let near = below(r) - below(-r) + below(-(1.0 - r)) + (area - below(1.0 - r));
            lo + (hi - lo) * (near / area).clamp(0.0, 1.0)
        }
        Graphon::Grid { values } => {
            let m = values.len();
            let g = 1.0 / m as f64;
            let overlap = |a: (f64, f64), i: usize| (a.1.min((i + 1) as f64 * g) - a.0.max(i as f64 * g)).max(0.0);
            let span = |a: (f64, f64)| {
                let lo = ((a.0 * m as f64).floor() as usize).min(m - 1);
                let hi = ((a.1 * m as f64).ceil() as usize).clamp(lo + 1, m);
                lo..hi
            };
            let mut acc = 0.0;
            for i in span(xs) {
                let ox = overlap(xs, i);
                for l in span(ys) {
                    acc += ox * overlap(ys, l) * values[i][l];
                }
            }
            acc / area
        }
    }
}

/// Area of `{(x, y) ∈ xs × ys : y − x ≤ t}`.
fn diagonal_area(xs: (f64, f64), ys: (f64, f64), t: f64) -> f64 {
    let h = ys.1 - ys.0;
    // antiderivative of clamp(z, 0, h)
    let g = |z: f64| {
        if z <= 0.0 {
            0.0
        } else if z <= h {
            0.5 * z * z
        } else {
            0.5 * h * h + h * (z - h)
        }
    };
    g(t + xs.1 - ys.0) - g(t + xs.0 - ys.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::SampleMode;

    fn pts(n: usize, seed: u64) -> SamplePoints {
        SamplePoints::generate(n, SampleMode::IidUniform, seed).unwrap()
    }

    #[test]
    fn weighted_er_is_constant_off_diagonal() {
        let s = sample_weighted(&Graphon::ErdosRenyi { p: 0.5 }, &pts(6, 1));
        for j in 0..6 {
            for k in 0..6 {
                assert_eq!(s.get(j, k), if j == k { 0.0 } else { 0.5 });
            }
        }
        let one = sample_weighted(&Graphon::ErdosRenyi { p: 0.5 }, &pts(1, 1));
        assert_eq!(one.weights(), &DMatrix::zeros(1, 1));
    }

    #[test]
    fn weighted_small_world_entry() {
        let p = SamplePoints::from_points(vec![0.1, 0.2]).unwrap();
        let s = sample_weighted(&Graphon::SmallWorld { hi: 0.9, lo: 0.1, radius: 0.25 }, &p);
        assert_eq!(s.get(0, 1), 0.9);
    }

    #[test]
    fn simple_full_probability_is_complete() {
        let s = sample_simple(&Graphon::ErdosRenyi { p: 1.0 }, &pts(20, 3), 77);
        assert!(s.has_zero_diagonal());
        assert_eq!(s.edge_density(), 1.0);
    }

    #[test]
    fn simple_density_concentrates() {
        let n = 2000;
        let p = 0.3;
        let s = sample_simple(&Graphon::ErdosRenyi { p }, &pts(n, 5), 11);
        let pairs = (n * (n - 1) / 2) as f64;
        let sigma = (p * (1.0 - p) / pairs).sqrt();
        assert!((s.edge_density() - p).abs() < 3.0 * sigma, "{}", s.edge_density());
        assert!(s.is_symmetric() && s.has_zero_diagonal());
        assert!(s.weights().iter().all(|&w| w == 0.0 || w == 1.0));
    }

    #[test]
    fn simple_is_reproducible() {
        let w = Graphon::SmallWorld { hi: 0.9, lo: 0.1, radius: 0.25 };
        let p = pts(300, 2);
        assert_eq!(sample_simple(&w, &p, 8), sample_simple(&w, &p, 8));
        assert_ne!(sample_simple(&w, &p, 8), sample_simple(&w, &p, 9));
    }

    #[test]
    fn embedding_small_world_averages() {
        let w = Graphon::SmallWorld { hi: 0.9, lo: 0.1, radius: 0.25 };
        let e = embed(&w, 8).unwrap();
        // cells (0,1) lie entirely within distance 0.25, cells (0,4) entirely outside
        assert!((e.get(0, 1) - 0.9).abs() < 1e-12);
        assert!((e.get(0, 4) - 0.1).abs() < 1e-12);
        // rows average to the degree 0.5
        for j in 0..8 {
            let mean: f64 = (0..8).map(|k| e.get(j, k)).sum::<f64>() / 8.0;
            assert!((mean - 0.5).abs() < 1e-9, "{mean}");
        }
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let s = sample_simple(&Graphon::ErdosRenyi { p: 0.4 }, &pts(7, 1), 2);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"n,7\n"));
        assert_eq!(StepGraphon::read_csv(&buf[..]).unwrap(), s);

        let h = sample_weighted(&Graphon::SmallWorld { hi: 0.7, lo: 0.2, radius: 0.1 }, &pts(5, 3));
        let mut bin = Vec::new();
        h.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[..4], b"GKSG");
        assert_eq!(u16::from_le_bytes([bin[4], bin[5]]), 1);
        assert_eq!(u32::from_le_bytes([bin[6], bin[7], bin[8], bin[9]]), 5);
        assert_eq!(bin.len(), 10 + 8 * 25);
        assert_eq!(StepGraphon::read_binary(&bin[..]).unwrap(), h);
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let err = StepGraphon::read_binary(&b"XXXX\x01\x00\x01\x00\x00\x00"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }
}
