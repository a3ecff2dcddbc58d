//! Memoryless methods: fixed-step gradient descent, the fast gradient method
//! and the online optimized gradient method.

use crate::error::{check_dim, Result};
use crate::metric::dot;
use crate::oracle::Oracle;

use super::audit::{potential, AuditConfig};
use super::{check_finite, check_lipschitz, IterationRecord, MethodId, Recorder, SolverState, StopMode, StoppingRule, Termination};

fn stop_value<O: Oracle + ?Sized>(
    oracle: &O,
    stop: &StoppingRule,
    fx: Option<f64>,
    x: &[f64],
    composite: f64,
    rec: &mut Recorder,
) -> (f64, Option<f64>) {
    match stop.mode {
        StopMode::Primal => {
            let f = fx.unwrap_or_else(|| {
                rec.calls += 1;
                oracle.value(x)
            });
            (f, Some(f))
        }
        StopMode::Composite => (composite, fx),
    }
}

/// Gradient descent `x_{k+1} = x_k − τ∇f(x_k)`, `τ = 1/L`.
pub fn run_gm<O: Oracle + ?Sized>(oracle: &O, x0: &[f64], lipschitz: f64, stop: &StoppingRule, audit: &AuditConfig) -> Result<super::RunReport> {
    check_lipschitz(lipschitz)?;
    check_dim(oracle.dim(), x0.len())?;
    let n = x0.len();
    let tau = 1.0 / lipschitz;
    let mut state = SolverState::new(x0, lipschitz);
    let mut rec = Recorder::new();
    let mut g = vec![0.0; n];
    let mut fx = oracle.value_grad(&state.x, &mut g);
    rec.calls += 1;
    check_finite(&g, fx, 0)?;
    let mut termination = Termination::IterationLimit;
    while state.k < stop.max_outer {
        let gg = dot(&g, &g);
        for (xi, gi) in state.x.iter_mut().zip(&g) {
            *xi -= tau * gi;
        }
        let f_prev = fx;
        fx = oracle.value_grad(&state.x, &mut g);
        rec.calls += 1;
        state.k += 1;
        check_finite(&g, fx, state.k)?;
        state.a = tau;
        state.big_a += tau;
        // The composite value of the previous point bounds f(x_k) from above.
        let composite = f_prev - 0.5 * tau * gg;
        let value = match stop.mode {
            StopMode::Primal => fx,
            StopMode::Composite => composite,
        };
        rec.push(IterationRecord {
            k: state.k,
            value,
            inner: 0,
            a: tau,
            big_a: state.big_a,
            esp_slack: None,
            potential: audit
                .x_star
                .as_ref()
                .map(|xs| potential(state.big_a, fx, audit.f_star, &state.x, xs)),
            primal_value: Some(fx),
            step_violation: None,
            elapsed_s: 0.0,
        })?;
        if value < stop.threshold {
            termination = Termination::Converged;
            break;
        }
    }
    state.y.copy_from_slice(&state.x);
    state.v.copy_from_slice(&state.x);
    Ok(rec.finish(MethodId::Gm, 1, lipschitz, termination, state))
}

#[derive(Clone, Copy)]
enum Weights {
    /// `L a² = A + a`.
    Fast,
    /// `L a² = 2(A + a)`.
    Optimized,
}

/// Fast gradient method with weights `a = (1 + √(1 + 4LA))/(2L)`:
/// `y = (A x + a v)/(A + a)`, `x⁺ = y − τ∇f(y)`, `v⁺ = v − a∇f(y)`.
pub fn run_fgm<O: Oracle + ?Sized>(oracle: &O, x0: &[f64], lipschitz: f64, stop: &StoppingRule, audit: &AuditConfig) -> Result<super::RunReport> {
    run_accelerated(oracle, x0, lipschitz, stop, audit, Weights::Fast, MethodId::Fgm)
}

/// Online optimized gradient method: same updates as [`run_fgm`] with
/// `a = (1 + √(1 + 2LA))/L`.
pub fn run_ogm_online<O: Oracle + ?Sized>(oracle: &O, x0: &[f64], lipschitz: f64, stop: &StoppingRule, audit: &AuditConfig) -> Result<super::RunReport> {
    run_accelerated(oracle, x0, lipschitz, stop, audit, Weights::Optimized, MethodId::Ogm)
}

fn run_accelerated<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    lipschitz: f64,
    stop: &StoppingRule,
    audit: &AuditConfig,
    weights: Weights,
    method: MethodId,
) -> Result<super::RunReport> {
    check_lipschitz(lipschitz)?;
    check_dim(oracle.dim(), x0.len())?;
    if let Some(xs) = &audit.x_star {
        check_dim(x0.len(), xs.len())?;
    }
    let n = x0.len();
    let tau = 1.0 / lipschitz;
    let mut state = SolverState::new(x0, lipschitz);
    let mut rec = Recorder::new();
    let mut g = vec![0.0; n];
    let mut termination = Termination::IterationLimit;
    while state.k < stop.max_outer {
        let big_a = state.big_a;
        let a = match weights {
            Weights::Fast => (1.0 + (1.0 + 4.0 * lipschitz * big_a).sqrt()) / (2.0 * lipschitz),
            Weights::Optimized => (1.0 + (1.0 + 2.0 * lipschitz * big_a).sqrt()) / lipschitz,
        };
        for i in 0..n {
            state.y[i] = (big_a * state.x[i] + a * state.v[i]) / (big_a + a);
        }
        let fy = oracle.value_grad(&state.y, &mut g);
        rec.calls += 1;
        state.k += 1;
        check_finite(&g, fy, state.k)?;
        let composite = fy - 0.5 * tau * dot(&g, &g);
        for i in 0..n {
            state.x[i] = state.y[i] - tau * g[i];
            state.v[i] -= a * g[i];
            state.s[i] = (big_a * state.s[i] + a * g[i]) / (big_a + a);
        }
        state.a = a;
        state.big_a = big_a + a;
        let fx = if audit.primal {
            Some(oracle.value(&state.x))
        } else {
            None
        };
        let (value, primal_value) = stop_value(oracle, stop, fx, &state.x, composite, &mut rec);
        rec.push(IterationRecord {
            k: state.k,
            value,
            inner: 0,
            a,
            big_a: state.big_a,
            esp_slack: None,
            potential: audit
                .x_star
                .as_ref()
                .map(|xs| potential(state.big_a, composite, audit.f_star, &state.v, xs)),
            primal_value,
            step_violation: None,
            elapsed_s: 0.0,
        })?;
        if value < stop.threshold {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(rec.finish(method, 1, lipschitz, termination, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{CountingOracle, DiagonalQuadratic};

    fn unit() -> DiagonalQuadratic {
        DiagonalQuadratic { diag: vec![1.0] }
    }

    fn stop(mode: StopMode, threshold: f64) -> StoppingRule {
        StoppingRule::new(threshold, mode, 1000).unwrap()
    }

    #[test]
    fn unit_quadratic_is_solved_in_one_step() {
        for eps in [1e-1, 1e-8, 1e-300] {
            let r = run_gm(&unit(), &[1.0], 1.0, &stop(StopMode::Primal, eps), &AuditConfig::none()).unwrap();
            assert_eq!(r.outer, 1);
            assert_eq!(r.state.x, vec![0.0]);
            let r = run_fgm(&unit(), &[1.0], 1.0, &stop(StopMode::Primal, eps), &AuditConfig::none()).unwrap();
            assert_eq!(r.outer, 1);
            assert_eq!(r.state.x, vec![0.0]);
            let r = run_ogm_online(&unit(), &[1.0], 1.0, &stop(StopMode::Composite, eps), &AuditConfig::none()).unwrap();
            assert_eq!(r.outer, 1);
        }
    }

    #[test]
    fn gm_matches_closed_form_iterates() {
        // x_k = (1 − σ/L)^k x0 coordinate-wise.
        let diag = vec![0.1, 0.5, 1.0, 0.02];
        let o = DiagonalQuadratic { diag: diag.clone() };
        let x0 = [1.0, -2.0, 3.0, 4.0];
        let r = run_gm(&o, &x0, 2.0, &StoppingRule::new(-1.0, StopMode::Primal, 37).unwrap(), &AuditConfig::none()).unwrap();
        assert_eq!(r.outer, 37);
        assert_eq!(r.termination, Termination::IterationLimit);
        for (i, d) in diag.iter().enumerate() {
            let expect = (1.0 - d / 2.0f64).powi(37) * x0[i];
            assert!((r.state.x[i] - expect).abs() <= 1e-12 * x0[i].abs());
        }
        let values: Vec<f64> = r.log.iter().map(|l| l.value).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fgm_weights_follow_the_recursion() {
        let o = DiagonalQuadratic { diag: vec![0.01, 0.3] };
        let r = run_fgm(&o, &[1.0, 1.0], 1.0, &StoppingRule::new(-1.0, StopMode::Primal, 20).unwrap(), &AuditConfig::none()).unwrap();
        let mut big_a = 0.0f64;
        for l in &r.log {
            let a = (1.0 + (1.0 + 4.0 * big_a).sqrt()) / 2.0;
            assert!((l.a - a).abs() < 1e-12 * a);
            assert!((a * a - (big_a + a)).abs() < 1e-9 * a * a);
            big_a += a;
            assert!(big_a >= (l.k * l.k) as f64 / 4.0);
        }
    }

    #[test]
    fn ogm_uses_one_oracle_call_per_iteration() {
        let o = CountingOracle::new(DiagonalQuadratic { diag: vec![0.01, 0.3, 1.0] });
        let r = run_ogm_online(&o, &[1.0, 2.0, 3.0], 1.0, &StoppingRule::new(-1.0, StopMode::Composite, 50).unwrap(), &AuditConfig::none()).unwrap();
        assert_eq!(o.counts().combined, 50);
        assert_eq!(o.counts().total(), 50);
        assert_eq!(r.oracle_calls, 50);
        let mut big_a = 0.0f64;
        for l in &r.log {
            assert!((l.a * l.a - 2.0 * (big_a + l.a)).abs() < 1e-9 * l.a * l.a);
            big_a += l.a;
        }
    }

    #[test]
    fn ogm_potential_is_nonincreasing_on_a_small_quadratic() {
        let o = DiagonalQuadratic {
            diag: (1..=20).map(|i| (i as f64 / 20.0).powi(3)).collect(),
        };
        let x0 = vec![1.0; 20];
        let audit = AuditConfig::potential(vec![0.0; 20], 0.0);
        let r = run_ogm_online(&o, &x0, 1.0, &StoppingRule::new(-1.0, StopMode::Composite, 300).unwrap(), &audit).unwrap();
        let mut prev = 0.5 * dot(&x0, &x0);
        for l in &r.log {
            let d = l.potential.unwrap();
            assert!(d <= prev + 1e-12 * prev, "k = {}: {d} > {prev}", l.k);
            prev = d;
        }
    }

    #[test]
    fn non_finite_oracle_aborts() {
        struct Bad;
        impl Oracle for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
                g[0] = if x[0] == 1.0 { 1.0 } else { f64::NAN };
                x[0]
            }
        }
        let r = run_gm(&Bad, &[1.0], 1.0, &stop(StopMode::Primal, -1.0), &AuditConfig::none());
        assert!(matches!(r, Err(crate::Error::NonFinite { iteration: 1 })));
        assert!(run_fgm(&Bad, &[1.0], 0.0, &stop(StopMode::Primal, -1.0), &AuditConfig::none()).is_err());
    }
}
