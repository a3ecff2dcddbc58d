use optbound::bound::oracles::{envelope_p_oracle_1d, VertexGrid};
use optbound::bound::{three_records, interpolability_check, AggregationMap, BundleModel, OracleRecord};
use optbound::metric::{dot, Metric};
use optbound::simplex_qp::{project_simplex, SubsolverConfig, SubsolverMethod};
use proptest::prelude::*;

fn sub() -> SubsolverConfig {
    SubsolverConfig::new(SubsolverMethod::ProjectedAccelerated, 1e-13, 200_000).unwrap()
}

/// Convex test function with certified curvature at most `lipschitz` in the
/// metric norm.
#[derive(Debug, Clone)]
enum Smooth {
    /// `½ xᵀ S M S x + bᵀx` with `S = diag(√B)` and `‖M‖ ≤ L`.
    Quadratic { d: Vec<f64>, b: Vec<f64> },
    /// `log Σ exp(⟨a_k, x⟩)`, identity metric, `max ‖a_k‖² ≤ L`.
    LogSumExp { a: Vec<Vec<f64>> },
}

impl Smooth {
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Smooth::Quadratic { d, b } => {
                let n = x.len();
                let dx: Vec<f64> = (0..n).map(|i| dot(&d[i * n..(i + 1) * n], x)).collect();
                let f = 0.5 * dot(x, &dx) + dot(b, x);
                let g = dx.iter().zip(b).map(|(u, v)| u + v).collect();
                (f, g)
            }
            Smooth::LogSumExp { a } => {
                let t: Vec<f64> = a.iter().map(|ak| dot(ak, x)).collect();
                let mx = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = t.iter().map(|ti| (ti - mx).exp()).collect();
                let s: f64 = w.iter().sum();
                let mut g = vec![0.0; x.len()];
                for (ak, wk) in a.iter().zip(&w) {
                    for (gi, ai) in g.iter_mut().zip(ak) {
                        *gi += wk / s * ai;
                    }
                }
                (mx + s.ln(), g)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Fixture {
    f: Smooth,
    metric: Metric,
    lipschitz: f64,
    records: Vec<OracleRecord>,
}

fn fixture() -> impl Strategy<Value = Fixture> {
    (1usize..=10, 1usize..=5, 0.5f64..4.0, any::<bool>(), any::<bool>()).prop_flat_map(|(n, m, lipschitz, quad, diag)| {
        (
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(0.25f64..4.0, n),
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), m),
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), 3),
        )
            .prop_map(move |(raw, b, bdiag, points, dirs)| {
                let metric = if diag && quad { Metric::diagonal(bdiag.clone()).unwrap() } else { Metric::identity(n) };
                let f = if quad {
                    // M = RᵀR scaled by its Frobenius norm, an upper bound on ‖M‖.
                    let mut mm = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..n {
                            mm[i * n + j] = (0..n).map(|k| raw[k * n + i] * raw[k * n + j]).sum();
                        }
                    }
                    let fro = mm.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                    let s: Vec<f64> = (0..n).map(|i| if diag { bdiag[i].sqrt() } else { 1.0 }).collect();
                    let d = (0..n * n).map(|k| lipschitz / fro * mm[k] * s[k / n] * s[k % n]).collect();
                    Smooth::Quadratic { d, b }
                } else {
                    let a = dirs
                        .iter()
                        .map(|v| {
                            let norm = dot(v, v).sqrt().max(1e-300);
                            v.iter().map(|x| x * lipschitz.sqrt() / norm).collect()
                        })
                        .collect();
                    Smooth::LogSumExp { a }
                };
                let records = points
                    .iter()
                    .map(|z| {
                        let (fz, g) = f.value_grad(z);
                        OracleRecord::new(z.clone(), fz, g).unwrap()
                    })
                    .collect();
                Fixture { f, metric, lipschitz, records }
            })
    })
}

fn model(fx: &Fixture) -> BundleModel {
    BundleModel::from_records(&fx.records, fx.lipschitz, fx.metric.clone()).unwrap()
}

fn sample(n: usize, seed: &[f64], k: usize) -> Vec<f64> {
    (0..n).map(|i| 3.0 * seed[(i + k * 7) % seed.len()]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn records_of_smooth_convex_functions_are_interpolable(fx in fixture()) {
        let check = interpolability_check(&fx.records, fx.lipschitz, &fx.metric).unwrap();
        prop_assert!(check.interpolable, "{:?}", check.worst);
    }

    #[test]
    fn bound_interpolates_the_records(fx in fixture()) {
        let model = model(&fx);
        for r in &fx.records {
            let ev = model.eval_p(&r.z, &sub()).unwrap();
            prop_assert!((ev.value - r.f).abs() <= 1e-8 * r.f.abs().max(1.0), "{} vs {}", ev.value, r.f);
            // Interpolability gives ρ(z_i, λ) ≤ f_i − ‖Gλ − g_i‖²/(2L).
            let diff: Vec<f64> = ev.gradient.iter().zip(&r.g).map(|(a, b)| a - b).collect();
            let miss = fx.metric.dual_norm_sq(&diff).unwrap();
            prop_assert!(miss <= 2.0 * fx.lipschitz * (r.f - ev.value).max(0.0) + 1e-10, "gradient miss {miss}");
        }
    }

    #[test]
    fn bound_is_sandwiched_and_smooth(fx in fixture(), seed in prop::collection::vec(-1.0f64..1.0, 64)) {
        let model = model(&fx);
        let n = model.dim();
        let mut evals = Vec::new();
        for k in 0..20 {
            let y = sample(n, &seed, k);
            let ev = model.eval_p(&y, &sub()).unwrap();
            let l = model.max_linear(&y).unwrap();
            let (fy, _) = fx.f.value_grad(&y);
            let tol = 1e-9 * fy.abs().max(1.0);
            prop_assert!(l - tol <= ev.value, "l = {l}, p = {}", ev.value);
            prop_assert!(ev.value <= fy + tol, "p = {}, f = {fy}", ev.value);
            evals.push((y, ev));
        }
        for (i, (y1, e1)) in evals.iter().enumerate() {
            for (y2, e2) in &evals[i + 1..] {
                let dg: Vec<f64> = e1.gradient.iter().zip(&e2.gradient).map(|(a, b)| a - b).collect();
                let dy: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| a - b).collect();
                let lhs = fx.metric.dual_norm_sq(&dg).unwrap().sqrt();
                let rhs = fx.lipschitz * fx.metric.norm_sq(&dy).unwrap().sqrt();
                // Each gradient is within √(2L·gap) of an exact one.
                let slack = (2.0 * fx.lipschitz * e1.certified_gap.max(0.0)).sqrt()
                    + (2.0 * fx.lipschitz * e2.certified_gap.max(0.0)).sqrt()
                    + 1e-9;
                prop_assert!(lhs <= rhs + slack, "{lhs} > {rhs} + {slack}");
            }
        }
    }

    #[test]
    fn any_simplex_point_gives_a_lower_bound(fx in fixture(), raw in prop::collection::vec(0.0f64..1.0, 5), seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let model = model(&fx);
        let lambda = project_simplex(&raw[..model.len()]);
        for k in 0..5 {
            let y = sample(model.dim(), &seed, k);
            let ev = model.eval_p(&y, &sub()).unwrap();
            let rho = model.rho(&y, &lambda).unwrap();
            prop_assert!(rho <= ev.value + ev.certified_gap.max(0.0) + 1e-12, "{rho} > {}", ev.value);
        }
    }

    #[test]
    fn aggregation_is_dominated(fx in fixture(), cols in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 5), 1..4), seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let model = model(&fx);
        let m = model.len();
        let columns: Vec<Vec<f64>> = cols.iter().map(|c| project_simplex(&c[..m])).collect();
        let t = AggregationMap::new(m, columns).unwrap();
        let reduced = model.aggregate(&t).unwrap();
        prop_assert_eq!(reduced.len(), t.columns().len());
        for k in 0..5 {
            let y = sample(model.dim(), &seed, k);
            let full = model.eval_p(&y, &sub()).unwrap();
            let small = reduced.eval_p(&y, &sub()).unwrap();
            prop_assert!(small.value <= full.value + full.certified_gap.max(0.0) + 1e-12, "{} > {}", small.value, full.value);
        }
    }

    #[test]
    fn tilt_shifts_the_bound_linearly(fx in fixture(), c_raw in prop::collection::vec(-1.0f64..1.0, 10), d in -5.0f64..5.0, seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let model = model(&fx);
        let n = model.dim();
        let c = &c_raw[..n];
        let tilted = model.tilt(c, d).unwrap();
        // Tilting the function tilts every record the same way.
        let shifted: Vec<OracleRecord> = fx
            .records
            .iter()
            .map(|r| OracleRecord::new(r.z.clone(), r.f + dot(c, &r.z) + d, r.g.iter().zip(c).map(|(a, b)| a + b).collect()).unwrap())
            .collect();
        let direct = BundleModel::from_records(&shifted, fx.lipschitz, fx.metric.clone()).unwrap();
        for k in 0..5 {
            let y = sample(n, &seed, k);
            let base = model.eval_p(&y, &sub()).unwrap();
            let t = tilted.eval_p(&y, &sub()).unwrap();
            let r = direct.eval_p(&y, &sub()).unwrap();
            let tol = base.certified_gap.max(0.0) + t.certified_gap.max(0.0) + 1e-9 * (1.0 + base.value.abs());
            prop_assert!((t.value - (base.value + dot(c, &y) + d)).abs() <= tol);
            prop_assert!((t.value - r.value).abs() <= tol + r.certified_gap.max(0.0));
        }
    }

    #[test]
    fn gram_is_dominated_by_its_diagonal(fx in fixture(), raw in prop::collection::vec(0.0f64..1.0, 5)) {
        let model = model(&fx);
        let m = model.len();
        let lambda = project_simplex(&raw[..m]);
        let q = model.gram();
        let quad: f64 = (0..m).map(|i| (0..m).map(|j| lambda[i] * q[i * m + j] * lambda[j]).sum::<f64>()).sum();
        let diag: f64 = (0..m).map(|i| lambda[i] * model.dual_norms_sq()[i]).sum();
        prop_assert!(quad <= diag + 1e-12 * diag.max(1.0));
        for i in 0..m {
            prop_assert!((q[i * m + i] - model.dual_norms_sq()[i]).abs() <= 1e-10 * q[i * m + i].max(1.0));
        }
    }
}

fn one_d_models() -> impl Strategy<Value = (Vec<OracleRecord>, f64)> {
    (prop::collection::vec((-3.0f64..3.0, 0.2f64..2.0, -1.0f64..1.0), 1..=5), 0.5f64..3.0).prop_map(|(pts, lipschitz)| {
        // Records of f(x) = Σ_k (c_k/2)(x − s_k)² scaled below L.
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let curv: Vec<f64> = pts.iter().map(|p| p.1 * lipschitz / total).collect();
        let records = pts
            .iter()
            .map(|&(z, _, _)| {
                let f: f64 = pts.iter().zip(&curv).map(|(p, c)| 0.5 * c * (z - p.2).powi(2)).sum();
                let g: f64 = pts.iter().zip(&curv).map(|(p, c)| c * (z - p.2)).sum();
                OracleRecord::new(vec![z], f, vec![g]).unwrap()
            })
            .collect();
        (records, lipschitz)
    })
}

fn assert_one_d_equivalence(records: &[OracleRecord], lipschitz: f64) {
    let metric = Metric::identity(1);
    let model = BundleModel::from_records(records, lipschitz, metric.clone()).unwrap();
    let grid = VertexGrid::covering(records, lipschitz, &metric, 1.0, 1e-3).unwrap();
    for k in 0..=80 {
        let y = -4.0 + 0.1 * k as f64;
        let qp = model.eval_p(&[y], &sub()).unwrap().value;
        let env = envelope_p_oracle_1d(y, &model, &grid).unwrap();
        assert!((qp - env).abs() <= 1e-4, "y = {y}: {qp} vs {env}");
    }
}

#[test]
fn one_d_oracle_agrees_on_the_three_record_fixture() {
    assert_one_d_equivalence(&three_records(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn one_d_oracle_agrees_on_random_models((records, lipschitz) in one_d_models()) {
        assert_one_d_equivalence(&records, lipschitz);
    }
}
