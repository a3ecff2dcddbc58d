//! Euclidean metric `‖x‖² = ⟨Bx, x⟩` with `B` identity or diagonal, its dual
//! norm `‖g‖²_* = ⟨g, B⁻¹g⟩`, and canonical parabolae.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    Identity { dim: usize },
    /// Positive diagonal of `B`.
    Diagonal(Vec<f64>),
}

impl Metric {
    pub fn identity(dim: usize) -> Self {
        Metric::Identity { dim }
    }

    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "metric diagonal entries must be positive and finite, found {bad}"
            )));
        }
        Ok(Metric::Diagonal(entries))
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Identity { dim } => *dim,
            Metric::Diagonal(d) => d.len(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Metric::Identity { .. })
    }

    /// `‖x‖² = ⟨Bx, x⟩`.
    pub fn norm_sq(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.norm_sq_unchecked(x))
    }

    /// `‖g‖²_* = ⟨g, B⁻¹g⟩`.
    pub fn dual_norm_sq(&self, g: &[f64]) -> Result<f64> {
        check_dim(self.dim(), g.len())?;
        Ok(self.dual_inner_unchecked(g, g))
    }

    /// `⟨g₁, B⁻¹g₂⟩`.
    pub fn dual_inner(&self, g1: &[f64], g2: &[f64]) -> Result<f64> {
        check_dim(self.dim(), g1.len())?;
        check_dim(self.dim(), g2.len())?;
        Ok(self.dual_inner_unchecked(g1, g2))
    }

    pub(crate) fn norm_sq_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Metric::Identity { .. } => dot(x, x),
            Metric::Diagonal(d) => x.iter().zip(d).map(|(xi, di)| di * xi * xi).sum(),
        }
    }

    pub(crate) fn dual_inner_unchecked(&self, g1: &[f64], g2: &[f64]) -> f64 {
        match self {
            Metric::Identity { .. } => dot(g1, g2),
            Metric::Diagonal(d) => g1
                .iter()
                .zip(g2)
                .zip(d)
                .map(|((a, b), di)| a * b / di)
                .sum(),
        }
    }

    /// `out += alpha · B⁻¹g`, the primal step along a dual direction.
    pub(crate) fn axpy_inverse(&self, alpha: f64, g: &[f64], out: &mut [f64]) {
        match self {
            Metric::Identity { .. } => axpy(alpha, g, out),
            Metric::Diagonal(d) => {
                for ((o, gi), di) in out.iter_mut().zip(g).zip(d) {
                    *o += alpha * gi / di;
                }
            }
        }
    }
}

/// `P(y) = w + (γ/2)‖y − v‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parabola {
    pub curvature: f64,
    pub vertex: Vec<f64>,
    pub value: f64,
}

impl Parabola {
    pub fn new(curvature: f64, vertex: Vec<f64>, value: f64) -> Result<Self> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "parabola curvature must be positive, found {curvature}"
            )));
        }
        Ok(Self {
            curvature,
            vertex,
            value,
        })
    }

    /// Upper parabola `l_i(y) + (L/2)‖y − z_i‖²` of a record, in canonical form:
    /// vertex `z − B⁻¹g/L`, value `f − ‖g‖²_*/(2L)`.
    pub fn upper_from_record(z: &[f64], f: f64, g: &[f64], lipschitz: f64, metric: &Metric) -> Result<Self> {
        check_dim(metric.dim(), z.len())?;
        check_dim(metric.dim(), g.len())?;
        let mut vertex = z.to_vec();
        metric.axpy_inverse(-1.0 / lipschitz, g, &mut vertex);
        let value = f - metric.dual_inner_unchecked(g, g) / (2.0 * lipschitz);
        Self::new(lipschitz, vertex, value)
    }

    pub fn eval(&self, y: &[f64], metric: &Metric) -> Result<f64> {
        check_dim(metric.dim(), y.len())?;
        check_dim(self.vertex.len(), y.len())?;
        let diff: Vec<f64> = y.iter().zip(&self.vertex).map(|(a, b)| a - b).collect();
        Ok(self.value + 0.5 * self.curvature * metric.norm_sq_unchecked(&diff))
    }
}

/// Inner product with four independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha · x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
