//! Oracle records, bundle models and the optimal interpolating lower bound
//!
//! ```text
//! p(y) = max_{λ ∈ Δ} ρ(y, λ),
//! ρ(y, λ) = ⟨λ, Gᵀy + H + d_g/(2L)⟩ − ‖Gλ‖²_*/(2L),
//! ```
//!
//! where column `i` of `G` is the gradient `g_i`, `H_i = f_i − ⟨g_i, z_i⟩` and
//! `(d_g)_i = ‖g_i‖²_*`. `H` is the negated conjugate-value vector
//! `f_* = ⟨g_i, z_i⟩ − f_i`, so `H = −f_*`.

pub mod io;
pub mod oracles;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::{dot, Metric};
use crate::simplex_qp::{check_simplex, fw_linear_minimizer, SimplexQp, SubsolverConfig, SIMPLEX_TOL};

pub use oracles::{envelope_p_oracle_1d, simplex_brute_force_p, BruteForceValue, VertexGrid};

/// Tolerance for the pairwise interpolability conditions.
pub const INTERPOLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub z: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
}

impl OracleRecord {
    pub fn new(z: Vec<f64>, f: f64, g: Vec<f64>) -> Result<Self> {
        check_dim(z.len(), g.len())?;
        Ok(Self { z, f, g })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `H = f − ⟨g, z⟩`.
    pub fn offset(&self) -> f64 {
        self.f - dot(&self.g, &self.z)
    }

    /// Supporting hyperplane `l(y) = f + ⟨g, y − z⟩`.
    pub fn linear_at(&self, y: &[f64]) -> f64 {
        self.offset() + dot(&self.g, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleModel {
    n: usize,
    h: Vec<f64>,
    g: Vec<Vec<f64>>,
    dg: Vec<f64>,
    /// Row-major Gram matrix `GᵀB⁻¹G`.
    q: Vec<f64>,
    lipschitz: f64,
    metric: Metric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEvaluation {
    pub value: f64,
    pub lambda: Vec<f64>,
    pub gradient: Vec<f64>,
    /// Frank-Wolfe gap of the dual subproblem at `lambda`; `value` is within
    /// this amount of `p(y)`.
    pub certified_gap: f64,
    pub inner_iterations: usize,
}

impl BundleModel {
    pub fn from_records(records: &[OracleRecord], lipschitz: f64, metric: Metric) -> Result<Self> {
        let h = records.iter().map(OracleRecord::offset).collect();
        let g = records.iter().map(|r| r.g.clone()).collect();
        for r in records {
            check_dim(metric.dim(), r.z.len())?;
        }
        Self::from_parts(h, g, lipschitz, metric)
    }

    /// Builds a model from offsets `H` and gradient columns `G`.
    pub fn from_parts(h: Vec<f64>, g: Vec<Vec<f64>>, lipschitz: f64, metric: Metric) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::EmptyModel);
        }
        check_dim(h.len(), g.len())?;
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant must be positive, found {lipschitz}"
            )));
        }
        let n = metric.dim();
        for col in &g {
            check_dim(n, col.len())?;
        }
        let m = h.len();
        let mut q = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let v = metric.dual_inner_unchecked(&g[i], &g[j]);
                q[i * m + j] = v;
                q[j * m + i] = v;
            }
        }
        let dg = (0..m).map(|i| q[i * m + i]).collect();
        Ok(Self {
            n,
            h,
            g,
            dg,
            q,
            lipschitz,
            metric,
        })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn offsets(&self) -> &[f64] {
        &self.h
    }

    pub fn gradients(&self) -> &[Vec<f64>] {
        &self.g
    }

    pub fn dual_norms_sq(&self) -> &[f64] {
        &self.dg
    }

    pub fn gram(&self) -> &[f64] {
        &self.q
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Same records under a different Lipschitz constant.
    pub fn with_lipschitz(&self, lipschitz: f64) -> Result<Self> {
        Self::from_parts(self.h.clone(), self.g.clone(), lipschitz, self.metric.clone())
    }

    /// `l(y) = max_i (H_i + ⟨g_i, y⟩)`.
    pub fn max_linear(&self, y: &[f64]) -> Result<f64> {
        check_dim(self.n, y.len())?;
        Ok(self.linear_values(y).into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    fn linear_values(&self, y: &[f64]) -> Vec<f64> {
        self.h.iter().zip(&self.g).map(|(h, g)| h + dot(g, y)).collect()
    }

    /// `Gλ`.
    pub fn combine(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (l, col) in lambda.iter().zip(&self.g) {
            if *l != 0.0 {
                crate::metric::axpy(*l, col, &mut out);
            }
        }
        out
    }

    /// Linear term of the dual subproblem: `Gᵀy + H + d_g/(2L)`.
    fn dual_linear(&self, y: &[f64]) -> Vec<f64> {
        let inv2l = 0.5 / self.lipschitz;
        self.linear_values(y)
            .into_iter()
            .zip(&self.dg)
            .map(|(l, d)| l + d * inv2l)
            .collect()
    }

    fn quad(&self, lambda: &[f64]) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| lambda[i] * dot(&self.q[i * m..(i + 1) * m], lambda))
            .sum()
    }

    /// The dual objective; a lower bound on `p(y)` for every simplex `λ`.
    pub fn rho(&self, y: &[f64], lambda: &[f64]) -> Result<f64> {
        check_dim(self.n, y.len())?;
        check_dim(self.len(), lambda.len())?;
        check_simplex(lambda, SIMPLEX_TOL)?;
        Ok(dot(lambda, &self.dual_linear(y)) - self.quad(lambda) / (2.0 * self.lipschitz))
    }

    /// Evaluates `p(y)` and `∇p(y) = Gλ*` by solving the dual over the simplex
    /// from the vertex of the most active hyperplane.
    pub fn eval_p(&self, y: &[f64], cfg: &SubsolverConfig) -> Result<BoundEvaluation> {
        check_dim(self.n, y.len())?;
        cfg.validate()?;
        let m = self.len();
        let d = self.dual_linear(y);
        let neg_linear: Vec<f64> = self.linear_values(y).iter().map(|v| -v).collect();
        let mut lambda0 = vec![0.0; m];
        lambda0[fw_linear_minimizer(&neg_linear)] = 1.0;
        let qp = SimplexQp::new(self.q.clone(), d, 1.0 / self.lipschitz)?;
        let sol = qp.solve_unchecked(lambda0, cfg);
        let gradient = self.combine(&sol.lambda);
        Ok(BoundEvaluation {
            value: -sol.objective,
            lambda: sol.lambda,
            gradient,
            certified_gap: sol.gap,
            inner_iterations: sol.inner_iterations,
        })
    }

    /// Model of the tilted function `f + ⟨c, ·⟩ + d`: every record becomes
    /// `(z_i, f_i + ⟨c, z_i⟩ + d, g_i + c)`, which leaves `H` shifted by `d` and
    /// every column shifted by `c`.
    pub fn tilt(&self, c: &[f64], d: f64) -> Result<Self> {
        check_dim(self.n, c.len())?;
        let h = self.h.iter().map(|h| h + d).collect();
        let g = self
            .g
            .iter()
            .map(|col| col.iter().zip(c).map(|(a, b)| a + b).collect())
            .collect();
        Self::from_parts(h, g, self.lipschitz, self.metric.clone())
    }

    /// Reduced model `H̃ = TᵀH`, `G̃ = GT` with `d_g` and `Q` recomputed from
    /// the new columns.
    pub fn aggregate(&self, t: &AggregationMap) -> Result<Self> {
        check_dim(self.len(), t.rows)?;
        let h = t.columns.iter().map(|col| dot(col, &self.h)).collect();
        let g = t.columns.iter().map(|col| self.combine(col)).collect();
        Self::from_parts(h, g, self.lipschitz, self.metric.clone())
    }
}

/// An `m × m̃` matrix whose columns lie in the standard `m`-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMap {
    rows: usize,
    columns: Vec<Vec<f64>>,
}

impl AggregationMap {
    pub fn new(rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyModel);
        }
        for col in &columns {
            check_dim(rows, col.len())?;
            check_simplex(col, 1e-12)?;
        }
        Ok(Self { rows, columns })
    }

    pub fn identity(m: usize) -> Self {
        let columns = (0..m)
            .map(|i| {
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                c
            })
            .collect();
        Self { rows: m, columns }
    }

    /// Keeps the listed records.
    pub fn select(m: usize, keep: &[usize]) -> Result<Self> {
        let columns = keep
            .iter()
            .map(|&i| {
                if i >= m {
                    return Err(Error::InvalidArgument(format!("record index {i} out of range")));
                }
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, columns)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolability {
    pub interpolable: bool,
    /// Most violated ordered pair `(i, j)` and its violation, when any
    /// condition fails.
    pub worst: Option<(usize, usize, f64)>,
    /// Smallest `L` at which every pair holds; infinite when the records are
    /// not even convex-consistent.
    pub min_feasible_lipschitz: f64,
}

/// Checks `f_j ≥ f_i + ⟨g_i, z_j − z_i⟩ + ‖g_j − g_i‖²_*/(2L)` for every ordered
/// pair.
pub fn interpolability_check(records: &[OracleRecord], lipschitz: f64, metric: &Metric) -> Result<Interpolability> {
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz constant must be positive, found {lipschitz}"
        )));
    }
    for r in records {
        check_dim(metric.dim(), r.z.len())?;
        check_dim(metric.dim(), r.g.len())?;
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut min_l: f64 = 0.0;
    for (i, ri) in records.iter().enumerate() {
        for (j, rj) in records.iter().enumerate() {
            if i == j {
                continue;
            }
            let dz: Vec<f64> = rj.z.iter().zip(&ri.z).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = rj.g.iter().zip(&ri.g).map(|(a, b)| a - b).collect();
            let gap = rj.f - ri.f - dot(&ri.g, &dz);
            let dgn = metric.dual_inner_unchecked(&dg, &dg);
            let violation = dgn / (2.0 * lipschitz) - gap;
            if violation > INTERPOLATION_TOL && worst.is_none_or(|w| violation > w.2) {
                worst = Some((i, j, violation));
            }
            let needed = if dgn == 0.0 {
                if gap < -INTERPOLATION_TOL {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else if gap <= 0.0 {
                f64::INFINITY
            } else {
                dgn / (2.0 * gap)
            };
            min_l = min_l.max(needed);
        }
    }
    Ok(Interpolability {
        interpolable: worst.is_none(),
        worst,
        min_feasible_lipschitz: min_l,
    })
}

/// Three one-dimensional records with a kink at the origin:
/// `(−1, 0.5, −0.5)`, `(0, 0.5, 0.5)`, `(1, 1.5, 1.5)`.
pub fn three_records() -> Vec<OracleRecord> {
    [(-1.0, 0.5, -0.5), (0.0, 0.5, 0.5), (1.0, 1.5, 1.5)]
        .into_iter()
        .map(|(z, f, g)| OracleRecord {
            z: vec![z],
            f,
            g: vec![g],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1(l: f64) -> BundleModel {
        BundleModel::from_records(&three_records(), l, Metric::identity(1)).unwrap()
    }

    fn tight() -> SubsolverConfig {
        SubsolverConfig {
            tol: 1e-13,
            max_inner: 100_000,
            ..SubsolverConfig::default()
        }
    }

    #[test]
    fn rho_at_vertices_is_the_hyperplane() {
        let model = fig1(1.0);
        let recs = three_records();
        for y in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            for (i, r) in recs.iter().enumerate() {
                let mut e = vec![0.0; 3];
                e[i] = 1.0;
                let rho = model.rho(&[y], &e).unwrap();
                assert!((rho - r.linear_at(&[y])).abs() < 1e-14);
            }
        }
        assert_eq!(model.rho(&[0.0], &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(model.rho(&[0.0], &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn duplicate_records_split_weight_freely() {
        let r = OracleRecord::new(vec![1.0, 2.0], 3.0, vec![0.5, -1.0]).unwrap();
        let model = BundleModel::from_records(&[r.clone(), r], 2.0, Metric::identity(2)).unwrap();
        let y = [0.3, -0.4];
        let a = model.rho(&y, &[0.5, 0.5]).unwrap();
        let b = model.rho(&y, &[1.0, 0.0]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn single_record_bound_is_the_hyperplane() {
        let r = OracleRecord::new(vec![0.0], 0.0, vec![1.0]).unwrap();
        let model = BundleModel::from_records(&[r], 1.0, Metric::identity(1)).unwrap();
        for y in [-3.0, 0.0, 2.5] {
            let ev = model.eval_p(&[y], &SubsolverConfig::default()).unwrap();
            assert!((ev.value - y).abs() < 1e-14);
            assert_eq!(ev.gradient, vec![1.0]);
        }
    }

    #[test]
    fn three_record_values() {
        let model = fig1(1.0);
        for (y, p) in [(-1.0, 0.5), (0.0, 0.5), (1.0, 1.5)] {
            let ev = model.eval_p(&[y], &tight()).unwrap();
            assert!((ev.value - p).abs() < 1e-9, "p({y}) = {}", ev.value);
        }
    }

    #[test]
    fn gram_diagonal_matches_dual_norms() {
        let recs = vec![
            OracleRecord::new(vec![1.0, 0.0], 1.0, vec![1.0, 2.0]).unwrap(),
            OracleRecord::new(vec![0.0, 1.0], 2.0, vec![-1.0, 0.5]).unwrap(),
        ];
        let m = BundleModel::from_records(&recs, 3.0, Metric::diagonal(vec![2.0, 4.0]).unwrap()).unwrap();
        assert!((m.dual_norms_sq()[0] - (0.5 + 1.0)).abs() < 1e-15);
        assert!((m.gram()[1] - m.gram()[2]).abs() < 1e-15);
        assert!((m.gram()[1] - (-0.5 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn empty_and_bad_models_rejected() {
        assert!(matches!(
            BundleModel::from_records(&[], 1.0, Metric::identity(1)),
            Err(Error::EmptyModel)
        ));
        assert!(BundleModel::from_records(&three_records(), 0.0, Metric::identity(1)).is_err());
        assert!(BundleModel::from_records(&three_records(), 1.0, Metric::identity(2)).is_err());
    }

    #[test]
    fn interpolability_examples() {
        let recs = three_records();
        let m = Metric::identity(1);
        let ok = interpolability_check(&recs, 1.0, &m).unwrap();
        assert!(ok.interpolable);
        assert!((ok.min_feasible_lipschitz - 1.0).abs() < 1e-12);
        // The first pair is tight: 0.5 = 0 + 1/(2·1).
        let r0 = &recs[0];
        let r1 = &recs[1];
        let rhs = r0.f + r0.g[0] * (r1.z[0] - r0.z[0]) + (r1.g[0] - r0.g[0]).powi(2) / 2.0;
        assert_eq!(rhs, r1.f);

        let bad = interpolability_check(&recs, 0.5, &m).unwrap();
        assert!(!bad.interpolable);
        let (i, j, v) = bad.worst.unwrap();
        assert!(v > 0.0);
        assert!(i < 3 && j < 3 && i != j);
    }

    #[test]
    fn interpolability_from_a_quadratic() {
        // f(x) = ½⟨x, Dx⟩ with D = diag(0.3, 1.0), sampled at a few points.
        let d = [0.3, 1.0];
        let pts = [[1.0, 2.0], [-1.0, 0.5], [0.0, 0.0], [3.0, -2.0]];
        let recs: Vec<_> = pts
            .iter()
            .map(|p| {
                let g: Vec<f64> = p.iter().zip(&d).map(|(x, s)| x * s).collect();
                let f = 0.5 * dot(p, &g);
                OracleRecord::new(p.to_vec(), f, g).unwrap()
            })
            .collect();
        assert!(interpolability_check(&recs, 1.0, &Metric::identity(2)).unwrap().interpolable);
    }

    #[test]
    fn aggregation_map_validation() {
        assert!(AggregationMap::new(2, vec![vec![0.5, 0.6]]).is_err());
        assert!(AggregationMap::new(2, vec![vec![1.0]]).is_err());
        assert!(AggregationMap::select(2, &[2]).is_err());
        let t = AggregationMap::identity(3);
        assert_eq!(fig1(1.0).aggregate(&t).unwrap(), fig1(1.0));
    }

    #[test]
    fn tilt_by_constant_shifts_the_bound() {
        let model = fig1(1.0);
        let shifted = model.tilt(&[0.0], 5.0).unwrap();
        for y in [-1.5, 0.2, 0.9] {
            let a = model.eval_p(&[y], &tight()).unwrap().value;
            let b = shifted.eval_p(&[y], &tight()).unwrap().value;
            assert!((b - a - 5.0).abs() < 1e-9);
        }
        assert_eq!(model.tilt(&[0.0], 0.0).unwrap(), model);
    }
}
