//! First-order methods: fixed-step and accelerated baselines, gradient methods
//! with memory and the optimized gradient method with memory.
//!
//! Every method works in the Euclidean setup given by a [`Metric`], calls a
//! combined value-and-gradient [`Oracle`](crate::oracle::Oracle) and returns a
//! [`RunReport`] holding the per-iteration log and the final [`SolverState`].

pub mod audit;
pub mod basic;
pub mod bundle;
pub mod memory;
pub mod offline;
pub mod ogmm;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;

pub use audit::{esp_slack, potential, AuditConfig};
pub use basic::{run_fgm, run_gm, run_ogm_online};
pub use bundle::CrsBundle;
pub use memory::{run_gmm, run_igmm, MemoryConfig};
pub use offline::{offline_final_step, FinalStepRule};
pub use ogmm::{newton_adjust, run_ogmm, NewtonOutcome, OgmmConfig, OmegaForm, WeightRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Gm,
    Fgm,
    Ogm,
    Gmm,
    Igmm,
    Ogmm,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Gm,
        MethodId::Fgm,
        MethodId::Ogm,
        MethodId::Gmm,
        MethodId::Igmm,
        MethodId::Ogmm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Gm => "gm",
            MethodId::Fgm => "fgm",
            MethodId::Ogm => "ogm",
            MethodId::Gmm => "gmm",
            MethodId::Igmm => "igmm",
            MethodId::Ogmm => "ogmm",
        }
    }

    pub fn has_memory(&self) -> bool {
        matches!(self, MethodId::Gmm | MethodId::Igmm | MethodId::Ogmm)
    }

    /// The stopping rule each method is run with in the benchmarks.
    pub fn stop_mode(&self) -> StopMode {
        match self {
            MethodId::Ogm | MethodId::Ogmm => StopMode::Composite,
            _ => StopMode::Primal,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopMode {
    /// `f(x_k) < Θ`.
    Primal,
    /// `f(y_k) − (τ/2)‖∇f(y_k)‖²_* < Θ`, which needs no oracle call at `x_k`.
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub threshold: f64,
    pub mode: StopMode,
    pub max_outer: usize,
}

impl StoppingRule {
    pub fn new(threshold: f64, mode: StopMode, max_outer: usize) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "stopping threshold must be finite, found {threshold}"
            )));
        }
        Ok(Self {
            threshold,
            mode,
            max_outer,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::IterationLimit => "iteration-limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Value tested by the stopping rule.
    pub value: f64,
    pub inner: usize,
    /// Step weight `a_k`.
    pub a: f64,
    /// Convergence guarantee `A_k` (the step sum for non-accelerated methods).
    pub big_a: f64,
    pub esp_slack: Option<f64>,
    pub potential: Option<f64>,
    /// `f(x_k)` when the primal audit is on or the method evaluates it anyway.
    pub primal_value: Option<f64>,
    /// Worst violation of the one-step inequality over sampled points.
    pub step_violation: Option<f64>,
    pub elapsed_s: f64,
}

/// Iteration state common to all methods; fields a method does not use keep
/// their initial values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub k: usize,
    pub big_a: f64,
    pub a: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    /// Dual aggregate `s_k`, kept for audits.
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
    pub h: f64,
    pub g_agg: Vec<f64>,
    pub tau: f64,
}

impl SolverState {
    pub(crate) fn new(x0: &[f64], lipschitz: f64) -> Self {
        let n = x0.len();
        Self {
            k: 0,
            big_a: 0.0,
            a: 0.0,
            x: x0.to_vec(),
            y: x0.to_vec(),
            v: x0.to_vec(),
            s: vec![0.0; n],
            lambda: Vec::new(),
            h: 0.0,
            g_agg: vec![0.0; n],
            tau: 1.0 / lipschitz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: MethodId,
    pub bundle_size: usize,
    pub lipschitz: f64,
    pub outer: usize,
    pub inner_total: usize,
    pub inner_avg: f64,
    pub time_s: f64,
    pub it_ms: f64,
    pub termination: Termination,
    /// Oracle calls made by the method itself, audits excluded.
    pub oracle_calls: usize,
    pub log: Vec<IterationRecord>,
    pub state: SolverState,
}

/// Shared bookkeeping for the run loops.
pub(crate) struct Recorder {
    start: Instant,
    log: Vec<IterationRecord>,
    inner_total: usize,
    pub(crate) calls: usize,
}

impl Recorder {
    pub(crate) fn new() -> Self {
        Self {
            start: Instant::now(),
            log: Vec::new(),
            inner_total: 0,
            calls: 0,
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub(crate) fn push(&mut self, mut rec: IterationRecord) -> Result<()> {
        if !rec.value.is_finite() {
            return Err(Error::NonFinite { iteration: rec.k });
        }
        rec.elapsed_s = self.elapsed();
        self.inner_total += rec.inner;
        self.log.push(rec);
        Ok(())
    }

    pub(crate) fn finish(
        self,
        method: MethodId,
        bundle_size: usize,
        lipschitz: f64,
        termination: Termination,
        state: SolverState,
    ) -> RunReport {
        let time_s = self.elapsed();
        let outer = self.log.len();
        RunReport {
            method,
            bundle_size,
            lipschitz,
            outer,
            inner_total: self.inner_total,
            inner_avg: if outer > 0 {
                self.inner_total as f64 / outer as f64
            } else {
                0.0
            },
            time_s,
            it_ms: if outer > 0 { 1e3 * time_s / outer as f64 } else { 0.0 },
            termination,
            oracle_calls: self.calls,
            log: self.log,
            state,
        }
    }
}

pub(crate) fn check_lipschitz(lipschitz: f64) -> Result<()> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz estimate must be positive, found {lipschitz}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(values: &[f64], f: f64, iteration: usize) -> Result<()> {
    if !f.is_finite() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iteration });
    }
    Ok(())
}

pub(crate) fn identity_metric(n: usize) -> Metric {
    Metric::identity(n)
}
