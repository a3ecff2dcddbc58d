//! Logistic regression on a sparse random design:
//!
//! ```text
//! f(x) = Σ_i softplus((Ax)_i) − ⟨y, Ax⟩,   ∇f(x) = Aᵀ(logistic(Ax) − y).
//! ```
//!
//! Instances are drawn from ChaCha20 seeded with `seed`, one stream per
//! component: stream 0 picks the sparsity pattern, 1 the nonzero values, 2 the
//! start point `x0`, 3 the labels and 4 the power-iteration start vector.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::dot;
use crate::oracle::Oracle;

use super::{estimate_fstar, FStar, Problem};

pub const STREAM_PATTERN: u64 = 0;
pub const STREAM_VALUES: u64 = 1;
pub const STREAM_X0: u64 = 2;
pub const STREAM_LABELS: u64 = 3;
pub const STREAM_POWER: u64 = 4;

/// Safety factor on the power-iteration estimate of `‖A‖₂²/4`.
pub const LIPSCHITZ_INFLATION: f64 = 1.01;

/// `log(1 + eᵗ)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1/(1 + e⁻ᵗ)` without overflow.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside a {rows} × {cols} matrix"
                )));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.push((r, self.indices[k], self.values[k]));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &t).expect("transposed indices are in range")
    }

    /// `out = A x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
            *o = self.indices[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&c, v)| v * x[c])
                .sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrspConfig {
    pub m: usize,
    pub n: usize,
    pub density: f64,
    pub seed: u64,
    /// Fast-gradient iterations used to estimate `f*`.
    pub fstar_iterations: usize,
}

impl Default for LrspConfig {
    fn default() -> Self {
        Self {
            m: 10_000,
            n: 2_000,
            density: 0.001,
            seed: 0,
            fstar_iterations: 10_000,
        }
    }
}

#[derive(Debug)]
pub struct Lrsp {
    a: SparseMatrix,
    at: SparseMatrix,
    labels: Vec<f64>,
    /// `Aᵀy`, so that `⟨y, Ax⟩ = ⟨Aᵀy, x⟩` costs `n` operations.
    aty: Vec<f64>,
    ops: AtomicU64,
}

impl Lrsp {
    pub fn new(a: SparseMatrix, labels: Vec<f64>) -> Result<Self> {
        check_dim(a.rows(), labels.len())?;
        if a.nnz() == 0 {
            return Err(Error::InvalidArgument("design matrix has no nonzero entries".into()));
        }
        let at = a.transpose();
        let mut aty = vec![0.0; a.cols()];
        at.matvec(&labels, &mut aty);
        Ok(Self {
            a,
            at,
            labels,
            aty,
            ops: AtomicU64::new(0),
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Generates the design, the start point and the labels.
    pub fn generate(m: usize, n: usize, density: f64, seed: u64) -> Result<(Self, Vec<f64>)> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("LRSP needs m, n ≥ 1".into()));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density must lie in (0, 1], found {density}"
            )));
        }
        let cells = m * n;
        let nnz = ((density * cells as f64).round() as usize).min(cells);
        if nnz == 0 {
            return Err(Error::InvalidArgument(format!(
                "density {density} leaves a {m} × {n} matrix without nonzeros"
            )));
        }
        let mut rng = stream(seed, STREAM_PATTERN);
        let mut positions = rand::seq::index::sample(&mut rng, cells, nnz).into_vec();
        positions.sort_unstable();
        let mut rng = stream(seed, STREAM_VALUES);
        let triplets: Vec<_> = positions
            .iter()
            .map(|&p| (p / n, p % n, rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let a = SparseMatrix::from_triplets(m, n, &triplets)?;

        let mut rng = stream(seed, STREAM_X0);
        let x0: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

        let mut ax = vec![0.0; m];
        a.matvec(&x0, &mut ax);
        let mut rng = stream(seed, STREAM_LABELS);
        let labels = ax
            .iter()
            .map(|t| if rng.random::<f64>() < logistic(*t) { 1.0 } else { 0.0 })
            .collect();
        Ok((Self::new(a, labels)?, x0))
    }

    /// Largest eigenvalue of `AᵀA` by power iteration, stopped at 1e-6
    /// relative change.
    pub fn spectral_norm_sq(&self, seed: u64) -> f64 {
        let n = self.a.cols();
        let mut rng = stream(seed, STREAM_POWER);
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut av = vec![0.0; self.a.rows()];
        let mut w = vec![0.0; n];
        let mut est = 0.0;
        for _ in 0..100_000 {
            self.a.matvec(&v, &mut av);
            self.at.matvec(&av, &mut w);
            let next = dot(&v, &w);
            let wn = dot(&w, &w).sqrt();
            if wn == 0.0 {
                return next;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / wn;
            }
            if (next - est).abs() <= 1e-6 * next {
                est = next;
                break;
            }
            est = next;
        }
        est
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Oracle for Lrsp {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.a.rows();
        let mut u = vec![0.0; m];
        self.a.matvec(x, &mut u);
        let mut f = 0.0;
        for (ui, yi) in u.iter_mut().zip(&self.labels) {
            let t = *ui;
            let e = (-t.abs()).exp();
            f += t.max(0.0) + e.ln_1p();
            let s = if t >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            *ui = s - yi;
        }
        self.at.matvec(&u, grad);
        let nnz = self.a.nnz() as u64;
        let (m, n) = (m as u64, self.a.cols() as u64);
        self.ops.fetch_add(4 * nnz + 4 * m + 2 * m + 2 * n, Ordering::Relaxed);
        f - dot(&self.aty, x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let m = self.a.rows();
        let mut u = vec![0.0; m];
        self.a.matvec(x, &mut u);
        for (ui, yi) in u.iter_mut().zip(&self.labels) {
            *ui = logistic(*ui) - yi;
        }
        self.at.matvec(&u, grad);
        let nnz = self.a.nnz() as u64;
        self.ops.fetch_add(4 * nnz + 4 * m as u64, Ordering::Relaxed);
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut u = vec![0.0; self.a.rows()];
        self.a.matvec(x, &mut u);
        let nnz = self.a.nnz() as u64;
        let (m, n) = (self.a.rows() as u64, self.a.cols() as u64);
        self.ops.fetch_add(2 * nnz + 2 * m + 2 * n, Ordering::Relaxed);
        u.iter().map(|t| softplus(*t)).sum::<f64>() - dot(&self.aty, x)
    }

    fn ops(&self) -> u64 {
        self.ops.load(Ordering::Relaxed)
    }
}

/// Generates an LRSP instance and estimates `f*`. `L_f = 1.01·‖A‖₂²/4`.
pub fn make_lrsp(cfg: &LrspConfig) -> Result<Problem> {
    let (lrsp, x0) = Lrsp::generate(cfg.m, cfg.n, cfg.density, cfg.seed)?;
    let lipschitz = LIPSCHITZ_INFLATION * lrsp.spectral_norm_sq(cfg.seed) / 4.0;
    let est = estimate_fstar(&lrsp, &x0, lipschitz, cfg.fstar_iterations.max(1))?;
    Problem::new(
        format!("lrsp-{}x{}-{}-s{}", cfg.m, cfg.n, cfg.density, cfg.seed),
        Box::new(lrsp),
        lipschitz,
        x0,
        FStar::Estimated(est.value),
        None,
    )
}
