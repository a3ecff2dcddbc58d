//! Quadratic programs over the standard simplex:
//! minimize `(A/2)⟨λ, Cλ⟩ − ⟨D, λ⟩` subject to `λ ≥ 0, Σλ = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::dot;

/// Tolerance used when validating that a vector lies in the simplex.
pub const SIMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexQp {
    m: usize,
    /// Row-major `m × m`.
    c: Vec<f64>,
    d: Vec<f64>,
    scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsolverMethod {
    FrankWolfe,
    ProjectedAccelerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsolverConfig {
    pub method: SubsolverMethod,
    pub tol: f64,
    pub max_inner: usize,
}

impl SubsolverConfig {
    pub fn new(method: SubsolverMethod, tol: f64, max_inner: usize) -> Result<Self> {
        let cfg = Self {
            method,
            tol,
            max_inner,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "subsolver tolerance must be positive, found {}",
                self.tol
            )));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidArgument("max_inner must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SubsolverConfig {
    fn default() -> Self {
        Self {
            method: SubsolverMethod::ProjectedAccelerated,
            tol: 1e-9,
            max_inner: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub lambda: Vec<f64>,
    pub inner_iterations: usize,
    pub objective: f64,
    /// Frank-Wolfe gap at `lambda`; bounds `objective − min`.
    pub gap: f64,
}

impl SimplexQp {
    pub fn new(c: Vec<f64>, d: Vec<f64>, scale: f64) -> Result<Self> {
        let m = d.len();
        if m == 0 {
            return Err(Error::EmptyModel);
        }
        check_dim(m * m, c.len())?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "QP scale A must be positive, found {scale}"
            )));
        }
        for i in 0..m {
            for j in 0..i {
                let (a, b) = (c[i * m + j], c[j * m + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidArgument(format!(
                        "QP matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { m, c, d, scale })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn linear(&self) -> &[f64] {
        &self.d
    }

    pub fn matrix(&self) -> &[f64] {
        &self.c
    }

    pub fn objective(&self, lambda: &[f64]) -> Result<f64> {
        check_dim(self.m, lambda.len())?;
        check_simplex(lambda, SIMPLEX_TOL)?;
        Ok(self.objective_unchecked(lambda))
    }

    /// `⟨λ, Cλ⟩`.
    pub fn quad_form(&self, lambda: &[f64]) -> f64 {
        let m = self.m;
        (0..m)
            .map(|i| lambda[i] * dot(&self.c[i * m..(i + 1) * m], lambda))
            .sum()
    }

    pub(crate) fn objective_unchecked(&self, lambda: &[f64]) -> f64 {
        0.5 * self.scale * self.quad_form(lambda) - dot(&self.d, lambda)
    }

    fn gradient_into(&self, lambda: &[f64], out: &mut [f64]) {
        let m = self.m;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.scale * dot(&self.c[i * m..(i + 1) * m], lambda) - self.d[i];
        }
    }

    /// Frank-Wolfe gap `⟨∇, λ⟩ − min_i ∇_i`.
    pub fn fw_gap(&self, lambda: &[f64]) -> f64 {
        let mut grad = vec![0.0; self.m];
        self.gradient_into(lambda, &mut grad);
        fw_gap_of(&grad, lambda)
    }

    /// Approximately minimizes the objective from `lambda0`. The result is never
    /// worse than the start.
    pub fn solve(&self, lambda0: &[f64], cfg: &SubsolverConfig) -> Result<QpSolution> {
        check_dim(self.m, lambda0.len())?;
        check_simplex(lambda0, SIMPLEX_TOL)?;
        let mut start = lambda0.to_vec();
        renormalize(&mut start);
        Ok(self.solve_unchecked(start, cfg))
    }

    pub(crate) fn solve_unchecked(&self, lambda0: Vec<f64>, cfg: &SubsolverConfig) -> QpSolution {
        let start_obj = self.objective_unchecked(&lambda0);
        let backup = lambda0.clone();
        let sol = match cfg.method {
            SubsolverMethod::FrankWolfe => self.frank_wolfe(lambda0, cfg.tol, cfg.max_inner),
            SubsolverMethod::ProjectedAccelerated => self.accelerated(lambda0, cfg.tol, cfg.max_inner),
        };
        if sol.objective > start_obj {
            // Rounding in the final renormalization.
            let gap = self.fw_gap(&backup);
            return QpSolution {
                lambda: backup,
                inner_iterations: sol.inner_iterations,
                objective: start_obj,
                gap,
            };
        }
        sol
    }

    fn frank_wolfe(&self, mut lambda: Vec<f64>, tol: f64, max_inner: usize) -> QpSolution {
        let m = self.m;
        let mut grad = vec![0.0; m];
        let mut it = 0;
        let mut gap;
        loop {
            self.gradient_into(&lambda, &mut grad);
            let j = fw_linear_minimizer(&grad);
            gap = dot(&grad, &lambda) - grad[j];
            if gap <= tol || it >= max_inner {
                break;
            }
            // Direction d = e_j − λ; exact step on the quadratic.
            let cjj = self.c[j * m + j];
            let cj_lambda = dot(&self.c[j * m..(j + 1) * m], &lambda);
            let lcl = self.quad_form(&lambda);
            let curvature = self.scale * (cjj - 2.0 * cj_lambda + lcl);
            let step = if curvature <= 0.0 {
                1.0
            } else {
                (gap / curvature).min(1.0)
            };
            for l in lambda.iter_mut() {
                *l *= 1.0 - step;
            }
            lambda[j] += step;
            it += 1;
        }
        renormalize(&mut lambda);
        let objective = self.objective_unchecked(&lambda);
        QpSolution {
            lambda,
            inner_iterations: it,
            objective,
            gap,
        }
    }

    /// Constant-step FISTA with the projection onto the simplex; step
    /// `1/(A·trace C)`. Returns the best iterate seen.
    fn accelerated(&self, lambda0: Vec<f64>, tol: f64, max_inner: usize) -> QpSolution {
        let m = self.m;
        let start_obj = self.objective_unchecked(&lambda0);
        if m == 1 {
            return QpSolution {
                lambda: lambda0,
                inner_iterations: 0,
                objective: start_obj,
                gap: 0.0,
            };
        }
        let trace: f64 = (0..m).map(|i| self.c[i * m + i]).sum();
        let lip = self.scale * trace;
        let mut grad = vec![0.0; m];

        if !(lip > 0.0) {
            // Linear objective: the best vertex is exact.
            self.gradient_into(&lambda0, &mut grad);
            let gap = fw_gap_of(&grad, &lambda0);
            if gap <= tol || max_inner == 0 {
                return QpSolution {
                    lambda: lambda0,
                    inner_iterations: 0,
                    objective: start_obj,
                    gap,
                };
            }
            let mut lambda = vec![0.0; m];
            lambda[fw_linear_minimizer(&grad)] = 1.0;
            let objective = self.objective_unchecked(&lambda);
            return QpSolution {
                lambda,
                inner_iterations: 1,
                objective,
                gap: 0.0,
            };
        }

        let mut best = lambda0.clone();
        let mut best_obj = start_obj;
        let mut lambda = lambda0.clone();
        let mut mom = lambda0;
        let mut t = 1.0f64;
        let mut it = 0;
        let mut trial = vec![0.0; m];
        loop {
            self.gradient_into(&lambda, &mut grad);
            let gap = fw_gap_of(&grad, &lambda);
            if gap <= tol || it >= max_inner {
                break;
            }
            self.gradient_into(&mom, &mut grad);
            for i in 0..m {
                trial[i] = mom[i] - grad[i] / lip;
            }
            let next = project_simplex(&trial);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..m {
                mom[i] = next[i] + beta * (next[i] - lambda[i]);
            }
            lambda = next;
            t = t_next;
            it += 1;
            let obj = self.objective_unchecked(&lambda);
            if obj < best_obj {
                best_obj = obj;
                best.copy_from_slice(&lambda);
            }
        }
        let gap = self.fw_gap(&best);
        QpSolution {
            lambda: best,
            inner_iterations: it,
            objective: best_obj,
            gap,
        }
    }
}

impl SimplexQp {
    /// Exhaustive grid search for `m ≤ 3`: a regular grid of spacing
    /// `resolution`, then `refinements` rounds of a finer local grid around the
    /// incumbent, each ten times finer. Returns the best point and its value.
    pub fn brute_force_minimum(&self, resolution: f64, refinements: usize) -> Result<(Vec<f64>, f64)> {
        if self.m > 3 {
            return Err(Error::InvalidArgument(format!(
                "grid search supports at most 3 entries, found {}",
                self.m
            )));
        }
        if !(resolution > 0.0 && resolution <= 0.1) {
            return Err(Error::InvalidArgument(format!(
                "resolution must lie in (0, 0.1], found {resolution}"
            )));
        }
        let steps = (1.0 / resolution).round() as usize;
        let mut best = (vec![0.0; self.m], f64::INFINITY);
        for_each_simplex_grid_point(self.m, steps, |l| {
            let o = self.objective_unchecked(l);
            if o < best.1 {
                best = (l.to_vec(), o);
            }
        });
        let free = self.m - 1;
        let mut h = 1.0 / steps as f64;
        for _ in 0..refinements {
            let fine = h / 10.0;
            let center = best.0.clone();
            let span = 20i64;
            let mut point = vec![0.0; self.m];
            let total = (2 * span + 1).pow(free as u32);
            for code in 0..total {
                let mut rest = code;
                let mut ok = true;
                let mut sum = 0.0;
                for i in 0..free {
                    let off = rest % (2 * span + 1) - span;
                    rest /= 2 * span + 1;
                    point[i] = center[i] + off as f64 * fine;
                    sum += point[i];
                    ok &= point[i] >= 0.0;
                }
                point[free] = 1.0 - sum;
                if !ok || point[free] < 0.0 {
                    continue;
                }
                let o = self.objective_unchecked(&point);
                if o < best.1 {
                    best = (point.clone(), o);
                }
            }
            h = fine;
        }
        Ok(best)
    }
}

fn fw_gap_of(grad: &[f64], lambda: &[f64]) -> f64 {
    let j = fw_linear_minimizer(grad);
    (dot(grad, lambda) - grad[j]).max(0.0)
}

/// Index of the smallest entry, lowest index on ties.
pub fn fw_linear_minimizer(gradient: &[f64]) -> usize {
    let mut best = 0;
    for (i, &g) in gradient.iter().enumerate().skip(1) {
        if g < gradient[best] {
            best = i;
        }
    }
    best
}

/// Euclidean projection onto the standard simplex by sort-and-threshold.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k as f64 + 1.0);
        if uk > t {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    renormalize(&mut w);
    w
}

pub(crate) fn renormalize(lambda: &mut [f64]) {
    for l in lambda.iter_mut() {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    let sum: f64 = lambda.iter().sum();
    if sum > 0.0 {
        for l in lambda.iter_mut() {
            *l /= sum;
        }
    } else if let Some(first) = lambda.first_mut() {
        *first = 1.0;
    }
}

pub fn check_simplex(lambda: &[f64], tol: f64) -> Result<()> {
    let sum: f64 = lambda.iter().sum();
    let min = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    if lambda.is_empty() || (sum - 1.0).abs() > tol || min < -tol || !sum.is_finite() {
        return Err(Error::NotInSimplex { sum, min });
    }
    Ok(())
}

/// Calls `visit` on every point of the regular grid `{k/steps}` on the
/// `m`-simplex.
pub fn for_each_simplex_grid_point(m: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    fn rec(idx: usize, left: usize, steps: usize, buf: &mut Vec<f64>, visit: &mut dyn FnMut(&[f64])) {
        let m = buf.len();
        if idx == m - 1 {
            buf[idx] = left as f64 / steps as f64;
            visit(buf);
            return;
        }
        for k in 0..=left {
            buf[idx] = k as f64 / steps as f64;
            rec(idx + 1, left - k, steps, buf, visit);
        }
    }
    if m == 0 || steps == 0 {
        return;
    }
    let mut buf = vec![0.0; m];
    rec(0, steps, steps, &mut buf, &mut visit);
}
