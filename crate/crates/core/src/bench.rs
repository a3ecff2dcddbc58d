//! Benchmark grids over methods and bundle sizes, and bound-curve export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bound::{interpolability_check, BundleModel, OracleRecord};
use crate::error::{Error, Result};
use crate::methods::{
    run_fgm, run_gm, run_gmm, run_igmm, run_ogm_online, run_ogmm, AuditConfig, MemoryConfig, MethodId, OgmmConfig, RunReport,
    StoppingRule, Termination, WeightRule,
};
use crate::metric::{Metric, Parabola};
use crate::problems::{make_lrsp, make_quad_with_start, LrspConfig, Problem, QuadStart};
use crate::simplex_qp::{SubsolverConfig, SubsolverMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ProblemSpec {
    Quad { n: usize, start: QuadStart },
    Lrsp(LrspConfig),
}

impl ProblemSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemSpec::Quad { .. } => "quad",
            ProblemSpec::Lrsp(_) => "lrsp",
        }
    }

    pub fn build(&self, seed: u64) -> Result<Problem> {
        match self {
            ProblemSpec::Quad { n, start } => make_quad_with_start(*n, *start),
            ProblemSpec::Lrsp(cfg) => make_lrsp(&LrspConfig { seed, ..cfg.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodId>,
    pub bundles: Vec<usize>,
    /// Multiplier on the problem's Lipschitz constant.
    pub l_scale: f64,
    pub eps_rel: f64,
    pub seeds: Vec<u64>,
    /// Overrides the per-method inner iteration caps.
    pub inner_cap: Option<usize>,
    pub newton_iters: usize,
    /// Overrides the subsolver tolerance `δ = factor · ε_abs`.
    pub delta_factor: Option<f64>,
    pub weight_rule: WeightRule,
    pub audit_esp: bool,
    pub audit_potential: bool,
    pub max_outer: usize,
}

impl BenchConfig {
    pub fn new(problem: ProblemSpec, methods: Vec<MethodId>) -> Self {
        Self {
            problem,
            methods,
            bundles: vec![1],
            l_scale: 1.0,
            eps_rel: 1e-4,
            seeds: vec![0],
            inner_cap: None,
            newton_iters: 2,
            delta_factor: None,
            weight_rule: WeightRule::default(),
            audit_esp: false,
            audit_potential: false,
            max_outer: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        if !(self.eps_rel > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "relative accuracy must be positive, found {}",
                self.eps_rel
            )));
        }
        if !(self.l_scale > 0.0 && self.l_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "L scale must be positive, found {}",
                self.l_scale
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds given".into()));
        }
        if self.methods.iter().any(MethodId::has_memory) {
            if self.bundles.is_empty() {
                return Err(Error::InvalidArgument("no bundle sizes given".into()));
            }
            if let Some(b) = self.bundles.iter().find(|&&b| b == 0) {
                return Err(Error::InvalidArgument(format!("invalid bundle size {b}")));
            }
        }
        if self.inner_cap == Some(0) {
            return Err(Error::InvalidArgument("inner cap must be at least 1".into()));
        }
        if let Some(f) = self.delta_factor {
            if !(f > 0.0) {
                return Err(Error::InvalidArgument(format!("δ factor must be positive, found {f}")));
            }
        }
        Ok(())
    }

    /// True when some cell runs GMM without an inner iteration cap.
    pub fn has_uncapped_subsolver(&self) -> bool {
        self.inner_cap.is_none() && self.methods.contains(&MethodId::Gmm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub problem: String,
    pub method: MethodId,
    pub bundle: usize,
    #[serde(rename = "L_scale")]
    pub l_scale: f64,
    pub eps_rel: f64,
    pub seed: u64,
    pub outer: usize,
    pub inner_avg: f64,
    pub time_s: f64,
    pub it_ms: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub runs: Vec<RunReport>,
}

impl TableReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Problem | Method | m | L scale | Outer | Inner | Time (s) | IT (ms) | Termination |\n\
             |---|---|---:|---:|---:|---:|---:|---:|---|\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {:.2} | {:.3} | {:.4} | {} |\n",
                r.problem, r.method, r.bundle, r.l_scale, r.outer, r.inner_avg, r.time_s, r.it_ms, r.termination
            ));
        }
        out
    }
}

/// Runs one method on a prepared problem.
pub fn run_cell(problem: &Problem, method: MethodId, bundle: usize, cfg: &BenchConfig) -> Result<RunReport> {
    let lipschitz = cfg.l_scale * problem.lipschitz();
    let eps_abs = problem.eps_abs(cfg.eps_rel);
    let stop = StoppingRule::new(problem.threshold(cfg.eps_rel), method.stop_mode(), cfg.max_outer)?;
    let mut audit = AuditConfig {
        esp: cfg.audit_esp,
        f_star: problem.f_star(),
        ..AuditConfig::default()
    };
    if cfg.audit_potential {
        audit.x_star = problem.x_star().map(<[f64]>::to_vec);
    }
    let x0 = problem.x0();
    let delta = |default: f64| cfg.delta_factor.map_or(default, |f| f * eps_abs);
    match method {
        MethodId::Gm => run_gm(problem, x0, lipschitz, &stop, &audit),
        MethodId::Fgm => run_fgm(problem, x0, lipschitz, &stop, &audit),
        MethodId::Ogm => run_ogm_online(problem, x0, lipschitz, &stop, &audit),
        MethodId::Igmm | MethodId::Gmm => {
            let mut mc = if method == MethodId::Igmm {
                MemoryConfig::igmm(bundle, eps_abs)
            } else {
                MemoryConfig::gmm(bundle, eps_abs)
            };
            mc.subsolver.tol = delta(mc.subsolver.tol);
            if let Some(cap) = cfg.inner_cap {
                mc.subsolver.max_inner = cap;
            }
            if method == MethodId::Igmm {
                run_igmm(problem, x0, lipschitz, &mc, &stop, &audit)
            } else {
                run_gmm(problem, x0, lipschitz, &mc, &stop, &audit)
            }
        }
        MethodId::Ogmm => {
            let mut oc = OgmmConfig::new(bundle, eps_abs);
            oc.newton_iters = cfg.newton_iters;
            oc.weight_rule = cfg.weight_rule;
            oc.subsolver.tol = delta(oc.subsolver.tol);
            if let Some(cap) = cfg.inner_cap {
                oc.subsolver.max_inner = cap;
            }
            run_ogmm(problem, x0, lipschitz, &oc, &stop, &audit)
        }
    }
}

/// Runs every (seed, method, bundle) cell. Memoryless methods run once per
/// seed with bundle size 1.
pub fn run_bench(cfg: &BenchConfig) -> Result<TableReport> {
    cfg.validate()?;
    let mut report = TableReport::default();
    for &seed in &cfg.seeds {
        let problem = cfg.problem.build(seed)?;
        for &method in &cfg.methods {
            let bundles: &[usize] = if method.has_memory() { &cfg.bundles } else { &[1] };
            for &bundle in bundles {
                let run = run_cell(&problem, method, bundle, cfg)?;
                report.rows.push(TableRow {
                    problem: cfg.problem.label().to_string(),
                    method,
                    bundle,
                    l_scale: cfg.l_scale,
                    eps_rel: cfg.eps_rel,
                    seed,
                    outer: run.outer,
                    inner_avg: run.inner_avg,
                    time_s: run.time_s,
                    it_ms: run.it_ms,
                    termination: run.termination,
                });
                report.runs.push(run);
            }
        }
    }
    Ok(report)
}

/// Evaluation grid `start, start + step, …` up to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl CurveGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl std::str::FromStr for CurveGrid {
    type Err = Error;

    /// Parses `start:end:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid must look like start:end:step, found `{s}`")));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| Error::Parse(format!("grid `{s}`: {e}")));
        let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
            return Err(Error::Parse(format!("grid `{s}` needs start ≤ end and step > 0")));
        }
        Ok(Self { start, end, step })
    }
}

/// Writes `y, l, p, psi_0, …` for one-dimensional records: the piecewise
/// linear model, the optimal lower bound and each record's upper parabola.
pub fn emit_bound_curve<W: Write>(records: &[OracleRecord], lipschitz: f64, grid: &CurveGrid, out: W) -> Result<()> {
    let metric = Metric::identity(1);
    if records.iter().any(|r| r.dim() != 1) {
        return Err(Error::InvalidArgument("bound curves need one-dimensional records".into()));
    }
    let check = interpolability_check(records, lipschitz, &metric)?;
    if let Some((i, j, violation)) = check.worst {
        return Err(Error::NotInterpolable {
            lipschitz,
            i,
            j,
            violation,
            min_feasible: check.min_feasible_lipschitz,
        });
    }
    let model = BundleModel::from_records(records, lipschitz, metric.clone())?;
    let parabolae = records
        .iter()
        .map(|r| Parabola::upper_from_record(&r.z, r.f, &r.g, lipschitz, &metric))
        .collect::<Result<Vec<_>>>()?;
    let sub = SubsolverConfig {
        method: SubsolverMethod::ProjectedAccelerated,
        tol: 1e-13,
        max_inner: 100_000,
    };
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string(), "l".to_string(), "p".to_string()];
    header.extend((0..records.len()).map(|i| format!("psi_{i}")));
    wtr.write_record(&header)?;
    for y in grid.points() {
        let l = model.max_linear(&[y])?;
        let p = model.eval_p(&[y], &sub)?.value;
        let mut row = vec![y, l, p];
        for par in &parabolae {
            row.push(par.eval(&[y], &metric)?);
        }
        wtr.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::three_records;

    #[test]
    fn grid_parsing() {
        let g: CurveGrid = "-2:2:0.5".parse().unwrap();
        assert_eq!(g.points().len(), 9);
        assert!("1:0:0.1".parse::<CurveGrid>().is_err());
        assert!("0:1".parse::<CurveGrid>().is_err());
        assert!("0:1:x".parse::<CurveGrid>().is_err());
    }

    #[test]
    fn empty_method_list_is_rejected() {
        let cfg = BenchConfig::new(ProblemSpec::Quad { n: 10, start: QuadStart::default() }, vec![]);
        assert!(run_bench(&cfg).is_err());
        let mut cfg = BenchConfig::new(ProblemSpec::Quad { n: 10, start: QuadStart::default() }, vec![MethodId::Ogmm]);
        cfg.bundles = vec![0];
        assert!(run_bench(&cfg).is_err());
    }

    #[test]
    fn small_grid_runs_and_renders() {
        let mut cfg = BenchConfig::new(
            ProblemSpec::Quad { n: 50, start: QuadStart::default() },
            vec![MethodId::Fgm, MethodId::Ogmm, MethodId::Igmm],
        );
        cfg.bundles = vec![1, 3];
        cfg.eps_rel = 1e-3;
        let report = run_bench(&cfg).unwrap();
        assert_eq!(report.rows.len(), 5);
        assert!(report.rows.iter().all(|r| r.termination == Termination::Converged));
        let md = report.to_markdown();
        assert_eq!(md.lines().count(), 7);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("problem,method,bundle,L_scale,eps_rel,seed,outer,inner_avg,time_s,it_ms,termination\n"));
    }

    #[test]
    fn bound_curve_rejects_non_interpolable_records() {
        let grid: CurveGrid = "-1:1:0.5".parse().unwrap();
        let err = emit_bound_curve(&three_records(), 0.5, &grid, Vec::new()).unwrap_err();
        match err {
            Error::NotInterpolable { min_feasible, .. } => assert!((min_feasible - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
