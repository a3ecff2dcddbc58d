//! Gradient methods with memory and line search on the step `a`.
//!
//! Both keep a bundle of past `(H_i, g_i)` records with `H_i = f_i − ⟨g_i, z_i⟩`
//! and pick the next point as `x⁺ = x − a·Gλ` where `λ` approximately solves a
//! simplex QP. A trial is accepted when `f(x⁺) ≤ −d(λ)`; otherwise `a` is
//! divided by `r_u`. Once `a` drops below `τ` a plain gradient step is taken.
//!
//! * IGMM models `f` by the optimal lower bound restricted to the bundle:
//!   `R = H + (τ/2)diag(Q) + Gᵀx`, QP scale `a + τ`. The newest record always
//!   occupies the first slot.
//! * GMM models `f` by the piecewise linear lower bound: `R = H + Gᵀx`, QP
//!   scale `a`. Records are replaced cyclically and the multipliers persist per
//!   slot, so a new record inherits the weight of the one it displaces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::dot;
use crate::oracle::Oracle;
use crate::simplex_qp::{SimplexQp, SubsolverConfig, SubsolverMethod};

use super::audit::AuditConfig;
use super::bundle::CrsBundle;
use super::{check_finite, check_lipschitz, identity_metric, IterationRecord, MethodId, Recorder, RunReport, SolverState, StoppingRule, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub bundle_size: usize,
    pub r_u: f64,
    pub r_d: f64,
    /// For IGMM `max_inner` is the budget per outer iteration, shared by all
    /// line-search trials.
    pub subsolver: SubsolverConfig,
}

impl MemoryConfig {
    /// IGMM defaults: `r_u = 2`, `r_d = 0.5`, accelerated subsolver with 20
    /// inner iterations per outer iteration and tolerance `δ = 10⁻³ ε_abs`.
    pub fn igmm(bundle_size: usize, eps_abs: f64) -> Self {
        Self {
            bundle_size,
            r_u: 2.0,
            r_d: 0.5,
            subsolver: SubsolverConfig {
                method: SubsolverMethod::ProjectedAccelerated,
                tol: 1e-3 * eps_abs,
                max_inner: 20,
            },
        }
    }

    /// GMM defaults: Frank-Wolfe with tolerance `δ = ε_abs/2` and no
    /// iteration cap.
    pub fn gmm(bundle_size: usize, eps_abs: f64) -> Self {
        Self {
            bundle_size,
            r_u: 2.0,
            r_d: 0.5,
            subsolver: SubsolverConfig {
                method: SubsolverMethod::FrankWolfe,
                tol: 0.5 * eps_abs,
                max_inner: usize::MAX,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bundle_size == 0 {
            return Err(Error::InvalidArgument("bundle size must be at least 1".into()));
        }
        if !(self.r_u > 1.0 && self.r_d > 0.0 && self.r_d <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "line search needs r_u > 1 ≥ r_d > 0, found r_u = {}, r_d = {}",
                self.r_u, self.r_d
            )));
        }
        self.subsolver.validate()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Variant {
    Improved,
    Plain,
}

/// Improved gradient method with memory.
pub fn run_igmm<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    lipschitz: f64,
    cfg: &MemoryConfig,
    stop: &StoppingRule,
    audit: &AuditConfig,
) -> Result<RunReport> {
    run_memory(oracle, x0, lipschitz, cfg, stop, audit, Variant::Improved)
}

/// Gradient method with memory on the piecewise linear model.
pub fn run_gmm<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    lipschitz: f64,
    cfg: &MemoryConfig,
    stop: &StoppingRule,
    audit: &AuditConfig,
) -> Result<RunReport> {
    run_memory(oracle, x0, lipschitz, cfg, stop, audit, Variant::Plain)
}

fn run_memory<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    lipschitz: f64,
    cfg: &MemoryConfig,
    stop: &StoppingRule,
    audit: &AuditConfig,
    variant: Variant,
) -> Result<RunReport> {
    check_lipschitz(lipschitz)?;
    check_dim(oracle.dim(), x0.len())?;
    cfg.validate()?;
    let n = x0.len();
    let tau = 1.0 / lipschitz;
    let m = cfg.bundle_size;
    let reserved = match variant {
        Variant::Improved => 1,
        Variant::Plain => 0,
    };
    let mut bundle = CrsBundle::new(m, reserved, identity_metric(n), None)?;
    let mut state = SolverState::new(x0, lipschitz);
    let mut rec = Recorder::new();
    let mut rng = ChaCha8Rng::seed_from_u64(audit.seed);

    let mut g = vec![0.0; n];
    let mut fx = oracle.value_grad(&state.x, &mut g);
    rec.calls += 1;
    check_finite(&g, fx, 0)?;
    let mut a = tau;
    let mut newest: Option<(f64, Vec<f64>)> = None;
    // GMM multipliers over the active slots, in physical order.
    let mut persisted: Option<Vec<f64>> = None;

    let mut x_next = vec![0.0; n];
    let mut g_next = vec![0.0; n];
    let mut direction = vec![0.0; n];
    let mut termination = Termination::IterationLimit;

    while state.k < stop.max_outer {
        let h_new = fx - dot(&g, &state.x);
        let slot = match variant {
            Variant::Improved => {
                let past = newest.as_ref().map(|(h, gp)| (*h, gp.as_slice()));
                bundle.crs_insert(&[(h_new, &g)], past)?;
                match &mut newest {
                    Some((h, gp)) => {
                        *h = h_new;
                        gp.copy_from_slice(&g);
                    }
                    None => newest = Some((h_new, g.clone())),
                }
                0
            }
            Variant::Plain => {
                bundle.crs_insert(&[], Some((h_new, &g)))?;
                bundle.last_ring_slot().expect("plain bundles are fully cyclic")
            }
        };
        let idx = bundle.active();
        let mm = idx.len();
        let pos = idx.iter().position(|&i| i == slot).expect("new slot is active");
        let q = bundle.gram_of(&idx);
        let (lin, scale_shift) = match variant {
            Variant::Improved => (
                idx.iter()
                    .enumerate()
                    .map(|(j, &i)| bundle.offset(i) + 0.5 * tau * q[j * mm + j] + dot(bundle.gradient(i), &state.x))
                    .collect::<Vec<f64>>(),
                tau,
            ),
            Variant::Plain => (
                idx.iter()
                    .map(|&i| bundle.offset(i) + dot(bundle.gradient(i), &state.x))
                    .collect(),
                0.0,
            ),
        };
        let mut vertex = vec![0.0; mm];
        vertex[pos] = 1.0;
        let lambda0 = match (&persisted, variant) {
            (Some(l), Variant::Plain) if l.len() == mm => l.clone(),
            _ => vertex.clone(),
        };

        a /= cfg.r_d;
        let mut budget = cfg.subsolver.max_inner;
        let mut inner = 0;
        let lambda;
        let mut f_next;
        loop {
            if a < tau {
                a = tau;
                for i in 0..n {
                    x_next[i] = state.x[i] - tau * g[i];
                }
                f_next = oracle.value_grad(&x_next, &mut g_next);
                rec.calls += 1;
                lambda = vertex;
                break;
            }
            let qp = SimplexQp::new(q.clone(), lin.clone(), a + scale_shift)?;
            let sub = SubsolverConfig {
                max_inner: budget,
                ..cfg.subsolver
            };
            let sol = qp.solve_unchecked(lambda0.clone(), &sub);
            budget = budget.saturating_sub(sol.inner_iterations);
            inner += sol.inner_iterations;
            bundle.combine(&idx, &sol.lambda, &mut direction);
            for i in 0..n {
                x_next[i] = state.x[i] - a * direction[i];
            }
            f_next = oracle.value_grad(&x_next, &mut g_next);
            rec.calls += 1;
            check_finite(&g_next, f_next, state.k + 1)?;
            if f_next <= -sol.objective {
                lambda = sol.lambda;
                break;
            }
            a /= cfg.r_u;
        }
        check_finite(&g_next, f_next, state.k + 1)?;

        let step_violation = if audit.step_samples > 0 {
            Some(one_step_violation(oracle, &state.x, &x_next, f_next, a, audit.step_samples, &mut rng))
        } else {
            None
        };

        if variant == Variant::Plain {
            persisted = Some(lambda.clone());
        }
        std::mem::swap(&mut state.x, &mut x_next);
        std::mem::swap(&mut g, &mut g_next);
        fx = f_next;
        state.k += 1;
        state.a = a;
        state.big_a += a;
        state.lambda = lambda;
        rec.push(IterationRecord {
            k: state.k,
            value: fx,
            inner,
            a,
            big_a: state.big_a,
            esp_slack: None,
            potential: None,
            primal_value: Some(fx),
            step_violation,
            elapsed_s: 0.0,
        })?;
        if fx < stop.threshold {
            termination = Termination::Converged;
            break;
        }
    }
    state.y.copy_from_slice(&state.x);
    state.v.copy_from_slice(&state.x);
    state.g_agg.copy_from_slice(&g);
    let method = match variant {
        Variant::Improved => MethodId::Igmm,
        Variant::Plain => MethodId::Gmm,
    };
    Ok(rec.finish(method, m, lipschitz, termination, state))
}

/// Largest value of
/// `½‖x⁺ − y‖² − ½‖x̄ − y‖² − a(f(y) − f(x⁺))`
/// over random `y` around `x̄`, relative to the scale of the terms.
fn one_step_violation<O: Oracle + ?Sized>(
    oracle: &O,
    x_bar: &[f64],
    x_plus: &[f64],
    f_plus: f64,
    a: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let n = x_bar.len();
    let step: f64 = x_bar
        .iter()
        .zip(x_plus)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    let radius = 10.0 * step.max(1e-12) / (n as f64).sqrt();
    let mut worst = f64::NEG_INFINITY;
    let mut y = vec![0.0; n];
    for _ in 0..samples {
        for (yi, xi) in y.iter_mut().zip(x_bar) {
            let z: f64 = StandardNormal.sample(rng);
            *yi = xi + radius * z;
        }
        let fy = oracle.value(&y);
        let dp: f64 = x_plus.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum();
        let db: f64 = x_bar.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum();
        let lhs = 0.5 * dp;
        let rhs = 0.5 * db + a * (fy - f_plus);
        let scale = 1.0 + lhs.abs() + rhs.abs();
        worst = worst.max((lhs - rhs) / scale);
    }
    worst
}
