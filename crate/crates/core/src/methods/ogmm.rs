//! Optimized gradient method with memory.
//!
//! Each iteration makes one combined oracle call at
//! `y = (A x + a v)/(A + a)`, takes the gradient step `x⁺ = y − τ∇f(y)` and
//! stores the record `(H̄, g) = (f(y) − ⟨g, y⟩ + (τ/2)‖g‖², ∇f(y))`. The bundle
//! keeps the aggregate `(h_k, g_k)` in its first slot, the newest record in the
//! second and recent past records in the rest. The estimate function then
//! has optimum `A·ω*` with
//!
//! ```text
//! ω*(λ, A) = ⟨S, λ⟩ − ((A + τ)/2)⟨λ, Qλ⟩,   S = H̄ + Gᵀx0,
//! ```
//!
//! and the convergence guarantee `A` is raised by Newton steps on
//! `γ(A) = ω*(λ, A) − e` where `e = f(y) − (τ/2)‖∇f(y)‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::dot;
use crate::oracle::Oracle;
use crate::simplex_qp::{SimplexQp, SubsolverConfig, SubsolverMethod};

use super::audit::{esp_slack, potential, AuditConfig};
use super::bundle::CrsBundle;
use super::{check_finite, check_lipschitz, identity_metric, IterationRecord, MethodId, Recorder, RunReport, SolverState, StoppingRule, Termination};

/// Weight `a_{k+1}` given `A_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// `L a² = A + a`, the fast gradient weights.
    Fast,
    /// `L a² = 2A + a`, which makes the first estimate-sequence inequality
    /// tight and gives `A_k = k(k + 1)/(2L)` without adjustment.
    #[default]
    Optimized,
}

impl WeightRule {
    pub fn weight(&self, lipschitz: f64, big_a: f64) -> f64 {
        let tau = 1.0 / lipschitz;
        match self {
            WeightRule::Fast => 0.5 * tau * (1.0 + (1.0 + 4.0 * lipschitz * big_a).sqrt()),
            WeightRule::Optimized => 0.5 * tau * (1.0 + (1.0 + 8.0 * lipschitz * big_a).sqrt()),
        }
    }
}

/// Curvature coefficient used for `ω*` inside the Newton loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaForm {
    /// `(A + τ)/2`, consistent with the Newton derivative.
    #[default]
    Shifted,
    /// `A/2`; kept for comparison only.
    Unshifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OgmmConfig {
    pub bundle_size: usize,
    pub newton_iters: usize,
    /// `max_inner` applies to every QP solve inside the Newton loop.
    pub subsolver: SubsolverConfig,
    pub weight_rule: WeightRule,
    pub omega_form: OmegaForm,
}

impl OgmmConfig {
    /// Defaults: two Newton iterations, ten accelerated QP iterations per
    /// solve at tolerance `δ = 10⁻³ ε_abs`.
    pub fn new(bundle_size: usize, eps_abs: f64) -> Self {
        Self {
            bundle_size,
            newton_iters: 2,
            subsolver: SubsolverConfig {
                method: SubsolverMethod::ProjectedAccelerated,
                tol: 1e-3 * eps_abs,
                max_inner: 10,
            },
            weight_rule: WeightRule::default(),
            omega_form: OmegaForm::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bundle_size == 0 {
            return Err(Error::InvalidArgument("bundle size must be at least 1".into()));
        }
        self.subsolver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub lambda: Vec<f64>,
    pub big_a: f64,
    /// `ω*` at the returned state, always with the `(A + τ)/2` coefficient.
    pub omega: f64,
    pub inner_iterations: usize,
    /// Newton updates that were accepted.
    pub accepted: usize,
}

/// Relative slack under which `ω* < e` is attributed to rounding.
const VALIDITY_TOL: f64 = 1e-12;

fn omega(s: &[f64], q: &[f64], lambda: &[f64], coef: f64) -> (f64, f64) {
    let m = lambda.len();
    let qq: f64 = (0..m).map(|i| lambda[i] * dot(&q[i * m..(i + 1) * m], lambda)).sum();
    (dot(s, lambda) - 0.5 * coef * qq, qq)
}

/// Raises `A` from `A0` by Newton steps `A⁺ = A + 2γ/⟨λ, Qλ⟩` on
/// `γ = ω*(λ, A) − e`, re-solving the QP at every trial `A` from `λ0`. Stops
/// at the first state with `ω* < e` and returns the last valid one, or
/// `(λ0, A0)` when no trial is valid.
#[allow(clippy::too_many_arguments)]
pub fn newton_adjust(
    tau: f64,
    q: &[f64],
    s: &[f64],
    e: f64,
    lambda0: &[f64],
    a0: f64,
    newton_iters: usize,
    cfg: &SubsolverConfig,
    form: OmegaForm,
) -> Result<NewtonOutcome> {
    let m = s.len();
    check_dim(m * m, q.len())?;
    check_dim(m, lambda0.len())?;
    crate::simplex_qp::check_simplex(lambda0, crate::simplex_qp::SIMPLEX_TOL)?;
    if !(a0 > 0.0 && tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Newton adjustment needs A0 > 0 and τ > 0, found A0 = {a0}, τ = {tau}"
        )));
    }
    let tol = VALIDITY_TOL * e.abs().max(1.0);
    let shift = match form {
        OmegaForm::Shifted => tau,
        OmegaForm::Unshifted => 0.0,
    };
    let mut valid = NewtonOutcome {
        lambda: lambda0.to_vec(),
        big_a: a0,
        omega: omega(s, q, lambda0, a0 + tau).0,
        inner_iterations: 0,
        accepted: 0,
    };
    let mut current = a0;
    for _ in 0..newton_iters {
        let qp = SimplexQp::new(q.to_vec(), s.to_vec(), current + tau)?;
        let sol = qp.solve_unchecked(lambda0.to_vec(), cfg);
        valid.inner_iterations += sol.inner_iterations;
        let (om, qq) = omega(s, q, &sol.lambda, current + shift);
        if om < e - tol {
            break;
        }
        valid.lambda = sol.lambda;
        valid.big_a = current;
        valid.omega = omega(s, q, &valid.lambda, current + tau).0;
        valid.accepted += 1;
        if qq <= 0.0 {
            break;
        }
        current += 2.0 * (om - e).max(0.0) / qq;
    }
    Ok(valid)
}

pub fn run_ogmm<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    lipschitz: f64,
    cfg: &OgmmConfig,
    stop: &StoppingRule,
    audit: &AuditConfig,
) -> Result<RunReport> {
    check_lipschitz(lipschitz)?;
    check_dim(oracle.dim(), x0.len())?;
    cfg.validate()?;
    if let Some(xs) = &audit.x_star {
        check_dim(x0.len(), xs.len())?;
    }
    let n = x0.len();
    let tau = 1.0 / lipschitz;
    let m = cfg.bundle_size;
    let reserved = m.min(2);
    let mut bundle = CrsBundle::new(m, reserved, identity_metric(n), Some(x0.to_vec()))?;
    let mut state = SolverState::new(x0, lipschitz);
    let mut rec = Recorder::new();

    let mut g = vec![0.0; n];
    let mut newest_prev: Option<(f64, Vec<f64>)> = None;
    let mut merged = vec![0.0; n];
    let mut termination = Termination::IterationLimit;

    while state.k < stop.max_outer {
        let big_a = state.big_a;
        let a = cfg.weight_rule.weight(lipschitz, big_a);
        for i in 0..n {
            state.y[i] = (big_a * state.x[i] + a * state.v[i]) / (big_a + a);
        }
        let fy = oracle.value_grad(&state.y, &mut g);
        rec.calls += 1;
        state.k += 1;
        check_finite(&g, fy, state.k)?;
        let gg = dot(&g, &g);
        for i in 0..n {
            state.x[i] = state.y[i] - tau * g[i];
        }
        let h_bar = fy - dot(&g, &state.y) + 0.5 * tau * gg;
        let e = fy - 0.5 * tau * gg;
        state.a = a;

        let primal_value = audit.primal.then(|| oracle.value(&state.x));
        if e < stop.threshold {
            // Close with the memoryless update λ = (A, a)/(A + a) so that
            // (x, v, A) stay consistent for a final step.
            let w = big_a / (big_a + a);
            if state.k == 1 {
                state.g_agg.copy_from_slice(&g);
                state.h = h_bar;
            } else {
                for i in 0..n {
                    state.g_agg[i] = w * state.g_agg[i] + (1.0 - w) * g[i];
                }
                state.h = w * state.h + (1.0 - w) * h_bar;
            }
            for i in 0..n {
                state.v[i] -= a * g[i];
                state.s[i] = w * state.s[i] + (1.0 - w) * g[i];
            }
            state.big_a = big_a + a;
            rec.push(IterationRecord {
                k: state.k,
                value: e,
                inner: 0,
                a,
                big_a: state.big_a,
                esp_slack: None,
                potential: None,
                primal_value,
                step_violation: None,
                elapsed_s: 0.0,
            })?;
            termination = Termination::Converged;
            break;
        }

        let mut inner = 0;
        let omega_star;
        if state.k == 1 {
            bundle.crs_insert(&[(h_bar, &g)], None)?;
            state.lambda = vec![1.0];
            state.big_a = a;
            omega_star = h_bar + bundle.anchor_dot(0) - tau * gg;
        } else {
            let lambda_prev_weight = big_a / (big_a + a);
            if m == 1 {
                for i in 0..n {
                    merged[i] = lambda_prev_weight * state.g_agg[i] + (1.0 - lambda_prev_weight) * g[i];
                }
                let h = lambda_prev_weight * state.h + (1.0 - lambda_prev_weight) * h_bar;
                bundle.crs_insert(&[(h, &merged)], None)?;
            } else {
                let past = newest_prev.as_ref().map(|(h, gp)| (*h, gp.as_slice()));
                bundle.crs_insert(&[(state.h, &state.g_agg), (h_bar, &g)], past)?;
            }
            let idx = bundle.active();
            let mm = idx.len();
            let q = bundle.gram_of(&idx);
            let s: Vec<f64> = idx.iter().map(|&i| bundle.offset(i) + bundle.anchor_dot(i)).collect();
            let mut lambda0 = vec![0.0; mm];
            if mm == 1 {
                lambda0[0] = 1.0;
            } else {
                lambda0[0] = lambda_prev_weight;
                lambda0[1] = 1.0 - lambda_prev_weight;
            }
            let out = newton_adjust(tau, &q, &s, e, &lambda0, big_a + a, cfg.newton_iters, &cfg.subsolver, cfg.omega_form)?;
            inner = out.inner_iterations;
            state.lambda = out.lambda;
            state.big_a = out.big_a;
            omega_star = out.omega;
        }
        if m >= 3 {
            match &mut newest_prev {
                Some((h, gp)) => {
                    *h = h_bar;
                    gp.copy_from_slice(&g);
                }
                None => newest_prev = Some((h_bar, g.clone())),
            }
        }

        let idx = bundle.active();
        state.h = idx.iter().zip(&state.lambda).map(|(&i, l)| l * bundle.offset(i)).sum();
        bundle.combine(&idx, &state.lambda, &mut state.g_agg);
        let new_a = state.big_a;
        for i in 0..n {
            state.v[i] = x0[i] - new_a * state.g_agg[i];
            state.s[i] = (big_a * state.s[i] + (new_a - big_a) * g[i]) / new_a;
        }

        rec.push(IterationRecord {
            k: state.k,
            value: e,
            inner,
            a,
            big_a: new_a,
            esp_slack: audit.esp.then(|| esp_slack(new_a, omega_star, e)),
            potential: audit
                .x_star
                .as_ref()
                .map(|xs| potential(new_a, e, audit.f_star, &state.v, xs)),
            primal_value,
            step_violation: None,
            elapsed_s: 0.0,
        })?;
    }
    Ok(rec.finish(MethodId::Ogmm, m, lipschitz, termination, state))
}
