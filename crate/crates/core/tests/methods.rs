use optbound::methods::{
    offline_final_step, run_fgm, run_igmm, run_ogm_online, run_ogmm, AuditConfig, FinalStepRule, MemoryConfig, OgmmConfig, RunReport,
    StopMode, StoppingRule, WeightRule,
};
use optbound::oracle::{CountingOracle, Oracle};
use optbound::problems::{make_quad, Problem};

const N: usize = 200;

fn quad() -> Problem {
    make_quad(N).unwrap()
}

fn stop(p: &Problem, mode: StopMode) -> StoppingRule {
    StoppingRule::new(p.threshold(1e-5), mode, 100_000).unwrap()
}

fn x0_sq(p: &Problem) -> f64 {
    p.x0().iter().map(|v| v * v).sum()
}

fn primal_values(r: &RunReport) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
    r.log.iter().map(|l| (l.k, l.primal_value.unwrap(), l.big_a))
}

#[test]
fn ogm_and_ogmm_meet_the_optimized_rate() {
    let p = quad();
    let bound = |k: usize| p.lipschitz() * x0_sq(&p) / (k * (k + 1)) as f64;
    let ogm = run_ogm_online(&p, p.x0(), p.lipschitz(), &stop(&p, StopMode::Composite), &AuditConfig::primal()).unwrap();
    for (k, f, _) in primal_values(&ogm) {
        assert!(f <= bound(k) * (1.0 + 1e-12), "OGM k = {k}: {f} > {}", bound(k));
    }
    for m in [1, 2, 4] {
        let cfg = OgmmConfig::new(m, p.eps_abs(1e-5));
        let r = run_ogmm(&p, p.x0(), p.lipschitz(), &cfg, &stop(&p, StopMode::Composite), &AuditConfig::primal()).unwrap();
        for (k, f, _) in primal_values(&r) {
            assert!(f <= bound(k) * (1.0 + 1e-12), "OGMM m = {m}, k = {k}: {f} > {}", bound(k));
        }
    }
}

#[test]
fn fgm_meets_its_rate() {
    let p = quad();
    let r = run_fgm(&p, p.x0(), p.lipschitz(), &stop(&p, StopMode::Primal), &AuditConfig::none()).unwrap();
    for (k, f, _) in primal_values(&r) {
        let bound = 2.0 * p.lipschitz() * x0_sq(&p) / (k * (k + 1)) as f64;
        assert!(f <= bound, "k = {k}: {f} > {bound}");
    }
}

#[test]
fn igmm_meets_the_step_sum_rate() {
    let p = make_quad(40).unwrap();
    let stop = StoppingRule::new(p.threshold(1e-3), StopMode::Primal, 200_000).unwrap();
    for m in [1, 3] {
        let cfg = MemoryConfig::igmm(m, p.eps_abs(1e-3));
        let r = run_igmm(&p, p.x0(), p.lipschitz(), &cfg, &stop, &AuditConfig::none()).unwrap();
        let mut prev = 0.0;
        for (k, f, big_a) in primal_values(&r) {
            assert!(big_a > prev);
            prev = big_a;
            let bound = x0_sq(&p) / (2.0 * big_a);
            assert!(f <= bound * (1.0 + 1e-12), "m = {m}, k = {k}: {f} > {bound}");
        }
    }
}

#[test]
fn offline_final_step_keeps_its_guarantee() {
    let p = quad();
    let x0_sq = x0_sq(&p);
    let short = StoppingRule::new(-1.0, StopMode::Composite, 60).unwrap();
    let runs = [
        run_fgm(&p, p.x0(), p.lipschitz(), &short, &AuditConfig::none()).unwrap(),
        run_ogm_online(&p, p.x0(), p.lipschitz(), &short, &AuditConfig::none()).unwrap(),
        run_ogmm(&p, p.x0(), p.lipschitz(), &OgmmConfig::new(4, 1e-6), &short, &AuditConfig::none()).unwrap(),
        run_ogmm(&p, p.x0(), p.lipschitz(), &OgmmConfig::new(4, p.eps_abs(1e-5)), &stop(&p, StopMode::Composite), &AuditConfig::none()).unwrap(),
    ];
    for r in &runs {
        for rule in [FinalStepRule::SquareRoot, FinalStepRule::FastGradient] {
            let (y, guarantee) = offline_final_step(&r.state, p.lipschitz(), rule).unwrap();
            assert!(guarantee > r.state.big_a);
            let fy = p.value(&y);
            assert!(fy <= x0_sq / (2.0 * guarantee), "{} {rule:?}: {fy} > {}", r.method, x0_sq / (2.0 * guarantee));
        }
    }
}

#[test]
fn oracle_calls_are_accounted() {
    let p = make_quad(60).unwrap();
    let stop = StoppingRule::new(p.threshold(1e-4), StopMode::Composite, 100_000).unwrap();
    let c = CountingOracle::new(&p);
    let r = run_ogmm(&c, p.x0(), p.lipschitz(), &OgmmConfig::new(3, p.eps_abs(1e-4)), &stop, &AuditConfig::none()).unwrap();
    assert_eq!(c.counts().combined, r.outer as u64);
    assert_eq!(c.counts().total(), r.outer as u64);

    let c = CountingOracle::new(&p);
    let stop = StoppingRule::new(p.threshold(1e-2), StopMode::Primal, 100_000).unwrap();
    let r = run_igmm(&c, p.x0(), p.lipschitz(), &MemoryConfig::igmm(2, p.eps_abs(1e-2)), &stop, &AuditConfig::none()).unwrap();
    assert_eq!(c.counts().total(), r.oracle_calls as u64);
    // One call at x0, then one per line-search trial, at least one per iteration.
    assert!(r.oracle_calls > r.outer);
}

#[test]
fn ogmm_without_memory_reproduces_the_weight_recursion() {
    let p = make_quad(30).unwrap();
    let stop = StoppingRule::new(-1.0, StopMode::Composite, 20).unwrap();
    for rule in [WeightRule::Fast, WeightRule::Optimized] {
        let mut cfg = OgmmConfig::new(1, 1e-6);
        cfg.newton_iters = 0;
        cfg.weight_rule = rule;
        let r = run_ogmm(&p, p.x0(), p.lipschitz(), &cfg, &stop, &AuditConfig::none()).unwrap();
        let mut big_a = 0.0;
        for l in &r.log {
            big_a += rule.weight(p.lipschitz(), big_a);
            assert!((l.big_a - big_a).abs() <= 1e-12 * big_a, "{rule:?} k = {}", l.k);
        }
    }
}

#[test]
fn guarantee_is_strictly_increasing() {
    let p = quad();
    for m in [2, 5] {
        let r = run_ogmm(&p, p.x0(), p.lipschitz(), &OgmmConfig::new(m, p.eps_abs(1e-4)), &stop(&p, StopMode::Composite), &AuditConfig::none()).unwrap();
        for w in r.log.windows(2) {
            assert!(w[1].big_a > w[0].big_a, "m = {m}, k = {}: {} then {} (a = {})", w[1].k, w[0].big_a, w[1].big_a, w[1].a);
        }
    }
}
