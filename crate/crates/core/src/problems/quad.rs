use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::dot;
use crate::oracle::Oracle;

use super::Problem;

/// `f(x) = ½⟨x, Ax⟩` with `A = diag(σ)`, `σ_i = sin²(πi/(2n))`, stored and
/// applied as a dense matrix so that the cost per call matches a rotated
/// instance.
#[derive(Debug)]
pub struct Quad {
    n: usize,
    sigma: Vec<f64>,
    dense: Vec<f64>,
    ops: AtomicU64,
}

/// Starting point choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadStart {
    /// `(x0)_i = 1/√σ_i`: every coordinate contributes ½ to `f(x0) = n/2`.
    #[default]
    InvSqrtSigma,
    /// `(x0)_i = 1/σ_i`.
    InvSigma,
}

impl Quad {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("QUAD needs n ≥ 1".into()));
        }
        let sigma: Vec<f64> = (1..=n)
            .map(|i| {
                let s = (std::f64::consts::PI * i as f64 / (2.0 * n as f64)).sin();
                s * s
            })
            .collect();
        let mut dense = vec![0.0; n * n];
        for (i, s) in sigma.iter().enumerate() {
            dense[i * n + i] = *s;
        }
        Ok(Self {
            n,
            sigma,
            dense,
            ops: AtomicU64::new(0),
        })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn start(&self, start: QuadStart) -> Vec<f64> {
        self.sigma
            .iter()
            .map(|s| match start {
                QuadStart::InvSqrtSigma => 1.0 / s.sqrt(),
                QuadStart::InvSigma => 1.0 / s,
            })
            .collect()
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.dense.chunks_exact(self.n)) {
            *o = dot(row, x);
        }
    }
}

impl Oracle for Quad {
    fn dim(&self) -> usize {
        self.n
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.matvec(x, grad);
        let n = self.n as u64;
        self.ops.fetch_add(2 * n * n + 2 * n, Ordering::Relaxed);
        0.5 * dot(x, grad)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.matvec(x, grad);
        let n = self.n as u64;
        self.ops.fetch_add(2 * n * n, Ordering::Relaxed);
    }

    fn ops(&self) -> u64 {
        self.ops.load(Ordering::Relaxed)
    }
}

/// QUAD with the default start.
pub fn make_quad(n: usize) -> Result<Problem> {
    make_quad_with_start(n, QuadStart::default())
}

pub fn make_quad_with_start(n: usize, start: QuadStart) -> Result<Problem> {
    let quad = Quad::new(n)?;
    let x0 = quad.start(start);
    let lipschitz = quad.sigma[n - 1];
    Problem::new(
        format!("quad-{n}"),
        Box::new(quad),
        lipschitz,
        x0,
        super::FStar::Exact(0.0),
        Some(vec![0.0; n]),
    )
}
