//! Per-iteration certificates computed alongside a run.

use serde::{Deserialize, Serialize};

use crate::metric::dot;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Log the estimate-sequence slack (memory methods with an estimate
    /// function).
    pub esp: bool,
    /// Log the potential `D_k`; needs the optimizer.
    pub x_star: Option<Vec<f64>>,
    /// Optimal value used by the potential.
    pub f_star: f64,
    /// Evaluate `f(x_k)` for methods that do not need it.
    pub primal: bool,
    /// Points sampled per iteration to test the one-step inequality of the
    /// gradient methods with memory.
    pub step_samples: usize,
    pub seed: u64,
}

impl AuditConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn esp() -> Self {
        Self {
            esp: true,
            ..Self::default()
        }
    }

    pub fn potential(x_star: Vec<f64>, f_star: f64) -> Self {
        Self {
            x_star: Some(x_star),
            f_star,
            ..Self::default()
        }
    }

    pub fn primal() -> Self {
        Self {
            primal: true,
            ..Self::default()
        }
    }
}

/// `ψ*_k − A_k(f(y_k) − (τ/2)‖∇f(y_k)‖²)` where the estimate-function optimum
/// is `ψ*_k = A_k ω*` and `e = f(y_k) − (τ/2)‖∇f(y_k)‖²`.
pub fn esp_slack(big_a: f64, omega: f64, e: f64) -> f64 {
    big_a * (omega - e)
}

/// `D_k = A_k (f(y_k) − (τ/2)‖∇f(y_k)‖² − f*) + ½‖v_k − x*‖²`.
pub fn potential(big_a: f64, composite: f64, f_star: f64, v: &[f64], x_star: &[f64]) -> f64 {
    let d: Vec<f64> = v.iter().zip(x_star).map(|(a, b)| a - b).collect();
    big_a * (composite - f_star) + 0.5 * dot(&d, &d)
}
