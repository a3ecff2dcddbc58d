//! First-order oracles.

use std::sync::atomic::{AtomicU64, Ordering};

/// A smooth function exposing its value and gradient. Implementations must be
/// pure so that they can be shared between concurrent runs.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `∇f(x)` into `grad` and returns `f(x)`, sharing the work common to
    /// both.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.value_grad(x, grad);
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }

    /// Floating-point operations performed so far, when the oracle keeps
    /// count.
    fn ops(&self) -> u64 {
        0
    }
}

/// Counts calls by kind.
#[derive(Debug)]
pub struct CountingOracle<O> {
    inner: O,
    combined: AtomicU64,
    gradient: AtomicU64,
    value: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CallCounts {
    pub combined: u64,
    pub gradient: u64,
    pub value: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.combined + self.gradient + self.value
    }
}

impl<O: Oracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            combined: AtomicU64::new(0),
            gradient: AtomicU64::new(0),
            value: AtomicU64::new(0),
        }
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            combined: self.combined.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
            value: self.value.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.combined.store(0, Ordering::Relaxed);
        self.gradient.store(0, Ordering::Relaxed);
        self.value.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Oracle> Oracle for CountingOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.combined.fetch_add(1, Ordering::Relaxed);
        self.inner.value_grad(x, grad)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.gradient.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x, grad)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }

    fn ops(&self) -> u64 {
        self.inner.ops()
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_grad(x, grad)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn ops(&self) -> u64 {
        (**self).ops()
    }
}

/// `f(x) = ½⟨x, Dx⟩` with a diagonal `D`, stored as a vector. Used by tests and
/// small examples.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub diag: Vec<f64>,
}

impl Oracle for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut f = 0.0;
        for ((g, xi), d) in grad.iter_mut().zip(x).zip(&self.diag) {
            *g = d * xi;
            f += 0.5 * xi * *g;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_each_kind() {
        let o = CountingOracle::new(DiagonalQuadratic { diag: vec![1.0, 2.0] });
        let mut g = [0.0; 2];
        assert_eq!(o.value_grad(&[1.0, 1.0], &mut g), 1.5);
        assert_eq!(g, [1.0, 2.0]);
        o.gradient(&[1.0, 0.0], &mut g);
        o.value(&[0.0, 0.0]);
        o.value(&[0.0, 0.0]);
        assert_eq!(
            o.counts(),
            CallCounts {
                combined: 1,
                gradient: 1,
                value: 2
            }
        );
        assert_eq!(o.counts().total(), 4);
        o.reset();
        assert_eq!(o.counts().total(), 0);
    }
}
