//! Benchmark problems with combined value-and-gradient oracles.

pub mod io;
pub mod lrsp;
pub mod quad;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::dot;
use crate::oracle::Oracle;

pub use lrsp::{logistic, make_lrsp, softplus, Lrsp, LrspConfig, SparseMatrix};
pub use quad::{make_quad, make_quad_with_start, Quad, QuadStart};

/// Optimal value of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum FStar {
    Exact(f64),
    Estimated(f64),
}

impl FStar {
    pub fn value(&self) -> f64 {
        match *self {
            FStar::Exact(v) | FStar::Estimated(v) => v,
        }
    }
}

/// Seed plus the generator name it feeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub generator: String,
}

impl RngSeed {
    pub const CHACHA20: &'static str = "chacha20";

    pub fn chacha(seed: u64) -> Self {
        Self {
            seed,
            generator: Self::CHACHA20.to_string(),
        }
    }
}

pub struct Problem {
    name: String,
    oracle: Box<dyn Oracle>,
    lipschitz: f64,
    x0: Vec<f64>,
    f_x0: f64,
    f_star: FStar,
    x_star: Option<Vec<f64>>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.x0.len())
            .field("lipschitz", &self.lipschitz)
            .field("f_x0", &self.f_x0)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: String,
        oracle: Box<dyn Oracle>,
        lipschitz: f64,
        x0: Vec<f64>,
        f_star: FStar,
        x_star: Option<Vec<f64>>,
    ) -> Result<Self> {
        check_dim(oracle.dim(), x0.len())?;
        if let Some(xs) = &x_star {
            check_dim(oracle.dim(), xs.len())?;
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant must be positive, found {lipschitz}"
            )));
        }
        let f_x0 = oracle.value(&x0);
        if !f_x0.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        Ok(Self {
            name,
            oracle,
            lipschitz,
            x0,
            f_x0,
            f_star,
            x_star,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn f_x0(&self) -> f64 {
        self.f_x0
    }

    pub fn f_star(&self) -> f64 {
        self.f_star.value()
    }

    pub fn f_star_kind(&self) -> FStar {
        self.f_star
    }

    pub fn x_star(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    pub fn set_f_star(&mut self, f_star: FStar) {
        self.f_star = f_star;
    }

    /// `ε_abs = ε_rel · (f(x0) − f*)`.
    pub fn eps_abs(&self, eps_rel: f64) -> f64 {
        eps_rel * (self.f_x0 - self.f_star())
    }

    /// Stopping threshold `Θ = f* + ε_abs`.
    pub fn threshold(&self, eps_rel: f64) -> f64 {
        self.f_star() + self.eps_abs(eps_rel)
    }

    pub fn oracle(&self) -> &dyn Oracle {
        self.oracle.as_ref()
    }
}

impl Oracle for Problem {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.oracle.value_grad(x, grad)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.oracle.gradient(x, grad)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.oracle.value(x)
    }

    fn ops(&self) -> u64 {
        self.oracle.ops()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStarEstimate {
    /// `min(best_primal, best_composite)`.
    pub value: f64,
    /// Smallest `f(x_k)` seen.
    pub best_primal: f64,
    /// Smallest `f(y_k) − ‖∇f(y_k)‖²_*/(2L)` seen.
    pub best_composite: f64,
    pub iterations: usize,
}

/// Runs the fixed-step fast gradient method with the weights
/// `a = (1 + √(1 + 4LA))/(2L)` from `x0` and keeps the best values seen.
pub fn estimate_fstar<O: Oracle + ?Sized>(oracle: &O, x0: &[f64], lipschitz: f64, iterations: usize) -> Result<FStarEstimate> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("estimate_fstar needs at least one iteration".into()));
    }
    check_dim(oracle.dim(), x0.len())?;
    let n = x0.len();
    let tau = 1.0 / lipschitz;
    let mut x = x0.to_vec();
    let mut v = x0.to_vec();
    let mut y = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut big_a = 0.0;
    let mut best_primal = oracle.value(x0);
    let mut best_composite = f64::INFINITY;
    for k in 0..iterations {
        let a = (1.0 + (1.0 + 4.0 * lipschitz * big_a).sqrt()) / (2.0 * lipschitz);
        for i in 0..n {
            y[i] = (big_a * x[i] + a * v[i]) / (big_a + a);
        }
        let fy = oracle.value_grad(&y, &mut g);
        let composite = fy - 0.5 * tau * dot(&g, &g);
        for i in 0..n {
            x[i] = y[i] - tau * g[i];
            v[i] -= a * g[i];
        }
        big_a += a;
        let fx = oracle.value(&x);
        if !(fx.is_finite() && composite.is_finite()) {
            return Err(Error::NonFinite { iteration: k + 1 });
        }
        best_primal = best_primal.min(fx);
        best_composite = best_composite.min(composite);
    }
    Ok(FStarEstimate {
        value: best_primal.min(best_composite),
        best_primal,
        best_composite,
        iterations,
    })
}
