//! One extra point computed after a run has stopped, improving the guarantee
//! without another outer iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SolverState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalStepRule {
    /// `L ā² = A_k`.
    SquareRoot,
    /// `L ā² = A_k + ā`, the fast gradient weight.
    FastGradient,
}

/// Returns `ȳ = (A_k x_k + ā v_k)/(A_k + ā)` and `Ā = A_k + ā`.
pub fn offline_final_step(state: &SolverState, lipschitz: f64, rule: FinalStepRule) -> Result<(Vec<f64>, f64)> {
    let big_a = state.big_a;
    if !(big_a > 0.0) {
        return Err(Error::InvalidArgument("final step needs A_k > 0".into()));
    }
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz estimate must be positive, found {lipschitz}"
        )));
    }
    let a_bar = match rule {
        FinalStepRule::SquareRoot => (big_a / lipschitz).sqrt(),
        FinalStepRule::FastGradient => (1.0 + (1.0 + 4.0 * lipschitz * big_a).sqrt()) / (2.0 * lipschitz),
    };
    let total = big_a + a_bar;
    let y = state
        .x
        .iter()
        .zip(&state.v)
        .map(|(x, v)| (big_a * x + a_bar * v) / total)
        .collect();
    Ok((y, total))
}
