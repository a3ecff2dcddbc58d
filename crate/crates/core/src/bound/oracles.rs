//! Independent reference evaluations of `p`, used to cross-check
//! [`BundleModel::eval_p`].

use crate::error::{Error, Result};
use crate::metric::dot;
use crate::simplex_qp::for_each_simplex_grid_point;

use super::BundleModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceValue {
    pub value: f64,
    /// Bound on `p(y) − value` from the grid spacing.
    pub error_bound: f64,
}

/// Maximum of `ρ(y, ·)` over a regular grid on the simplex. Supports at most
/// three records.
pub fn simplex_brute_force_p(y: &[f64], model: &BundleModel, resolution: f64) -> Result<BruteForceValue> {
    let m = model.len();
    if m > 3 {
        return Err(Error::InvalidArgument(format!(
            "grid search supports at most 3 records, found {m}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "resolution must lie in (0, 0.1], found {resolution}"
        )));
    }
    crate::error::check_dim(model.dim(), y.len())?;
    let lin = model.dual_linear(y);
    if m == 1 {
        return Ok(BruteForceValue {
            value: model.linear_values(y)[0],
            error_bound: 0.0,
        });
    }
    let steps = (1.0 / resolution).round() as usize;
    let inv2l = 0.5 / model.lipschitz();
    let mut best = f64::NEG_INFINITY;
    for_each_simplex_grid_point(m, steps, |l| {
        let v = dot(l, &lin) - model.quad(l) * inv2l;
        best = best.max(v);
    });
    // ρ is Lipschitz in λ (ℓ₁ → ℓ∞) with constant max|∇_λ ρ| over the simplex.
    let qmax = model.gram().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let lmax = lin.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let lip = lmax + qmax / model.lipschitz();
    Ok(BruteForceValue {
        value: best,
        error_bound: lip * (m as f64 - 1.0) / steps as f64,
    })
}

/// Candidate vertices `start, start + step, …, end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl VertexGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && end > start && start.is_finite() && end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "vertex grid needs start < end and step > 0, found {start}:{end}:{step}"
            )));
        }
        Ok(Self { start, end, step })
    }

    /// Grid covering every record point and every parabola vertex
    /// `z_i − B⁻¹g_i/L` of a one-dimensional model, with `margin` on each side.
    pub fn covering(records: &[super::OracleRecord], lipschitz: f64, metric: &crate::metric::Metric, margin: f64, step: f64) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in records {
            crate::error::check_dim(1, r.z.len())?;
            let b = match metric {
                crate::metric::Metric::Identity { .. } => 1.0,
                crate::metric::Metric::Diagonal(d) => d[0],
            };
            let v = r.z[0] - r.g[0] / (b * lipschitz);
            lo = lo.min(r.z[0]).min(v);
            hi = hi.max(r.z[0]).max(v);
        }
        Self::new(lo - margin, hi + margin, step)
    }

    fn len(&self) -> usize {
        ((self.end - self.start) / self.step).floor() as usize + 1
    }

    fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

/// Lower envelope of the curvature-`L` parabolae that dominate the piecewise
/// linear model, evaluated at `y` for a one-dimensional model:
///
/// ```text
/// min_v  w(v) + (L/2)‖y − v‖²,   w(v) = max_i (l_i(v) + ‖g_i‖²_*/(2L)).
/// ```
///
/// The objective is convex in `v` and minimized in `y − [g_min, g_max]/(bL)`;
/// the grid is extended to contain that interval. It is scanned and then
/// refined by golden-section search inside the cells adjacent to the best
/// grid vertex, so the upward bias is far below the `O(L·step²)` of the scan.
pub fn envelope_p_oracle_1d(y: f64, model: &BundleModel, grid: &VertexGrid) -> Result<f64> {
    if model.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "envelope oracle needs a one-dimensional model, found dimension {}",
            model.dim()
        )));
    }
    let lip = model.lipschitz();
    let b = match model.metric() {
        crate::metric::Metric::Identity { .. } => 1.0,
        crate::metric::Metric::Diagonal(d) => d[0],
    };
    let lift: Vec<f64> = model.dual_norms_sq().iter().map(|d| d / (2.0 * lip)).collect();
    let phi = |v: f64| -> f64 {
        let w = model
            .offsets()
            .iter()
            .zip(model.gradients())
            .zip(&lift)
            .map(|((h, g), s)| h + g[0] * v + s)
            .fold(f64::NEG_INFINITY, f64::max);
        w + 0.5 * lip * b * (y - v) * (y - v)
    };

    let (g_min, g_max) = model
        .gradients()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), g| (a.min(g[0]), c.max(g[0])));
    let reach_lo = y - g_max / (b * lip);
    let reach_hi = y - g_min / (b * lip);
    let below = ((grid.start - reach_lo) / grid.step).ceil().max(0.0);
    let grid = &VertexGrid {
        start: grid.start - below * grid.step,
        end: grid.end.max(reach_hi + grid.step),
        step: grid.step,
    };
    let count = grid.len();
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..count {
        let val = phi(grid.at(k));
        if val < best {
            best = val;
            best_k = k;
        }
    }
    let mut lo = grid.at(best_k.saturating_sub(1));
    let mut hi = grid.at((best_k + 1).min(count - 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = phi(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = phi(d);
        }
    }
    Ok(best.min(fc).min(fd).min(phi(0.5 * (lo + hi))))
}
