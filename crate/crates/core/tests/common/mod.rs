//! Helpers shared by the integration suites: random instances of every
//! supported pair and small brute-force minimizers used as oracles.

#![allow(dead_code)]

use ioco::domain::{Custom1d, Domain, Instance, ParamSpace, ParameterPoint, UtilityForm};
use ioco::gen::{gen_instance_stream, DomainKind, GenConfig, UtilityKind};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn random_point(rng: &mut ChaCha8Rng, space: ParamSpace, n: usize) -> ParameterPoint {
    match space {
        ParamSpace::Simplex => ParameterPoint::simplex(random_simplex(rng, n)).unwrap(),
        ParamSpace::Box { lo, hi } => {
            ParameterPoint::in_box((0..n).map(|_| rng.gen_range(lo..=hi)).collect(), lo, hi).unwrap()
        }
    }
}

/// One step of a generated stream; `seed` picks the stream and the step.
pub fn generated(
    domain: DomainKind,
    utility: UtilityKind,
    n: usize,
    m: usize,
    seed: u64,
) -> (Instance, ParameterPoint) {
    let cfg = GenConfig { n, m, horizon: 4, instance_count: 1, domain, utility, seed, ..Default::default() };
    let s = gen_instance_stream(&cfg, 0).unwrap();
    let t = (seed % 4) as usize;
    (s.instances[t].clone(), s.theta_true)
}

/// A random instance and θ_true for each supported utility/domain pair,
/// selected by `kind % 8`.
pub fn zoo(kind: usize, seed: u64) -> (Instance, ParameterPoint) {
    let mut r = rng(seed ^ 0x5eed);
    let n = r.gen_range(2..=5);
    match kind % 8 {
        0 => generated(DomainKind::ContKnapsack, UtilityKind::Quad, n, 1, seed),
        1 => generated(DomainKind::Polytope, UtilityKind::Quad, n, r.gen_range(1..=3), seed),
        2 => generated(DomainKind::BinKnapsack, UtilityKind::Quad, n, 1, seed),
        3 => generated(DomainKind::EqKnapsack, UtilityKind::Ces, n, 1, seed),
        4 => generated(DomainKind::ContKnapsack, UtilityKind::Bilinear, n, 1, seed),
        5 => generated(DomainKind::ContKnapsack, UtilityKind::CobbDouglas, n, 1, seed),
        6 => (
            Instance::new(1, UtilityForm::Custom1d(Custom1d::Obscuring), Domain::interval(-1.0, 1.0).unwrap()).unwrap(),
            ParameterPoint::in_box(vec![r.gen_range(-3.0..=3.0)], -3.0, 3.0).unwrap(),
        ),
        _ => (
            Instance::new(1, UtilityForm::Custom1d(Custom1d::Linear), Domain::interval(-1.0, 1.0).unwrap()).unwrap(),
            ParameterPoint::in_box(vec![r.gen_range(-1.0..=1.0)], -1.0, 1.0).unwrap(),
        ),
    }
}

/// Minimizer of a convex `f` over the simplex in dimension 2 or 3: a
/// uniform grid with spacing `h`, then repeated zooms onto a finer grid
/// around the incumbent.
pub fn simplex_grid_min(f: &dyn Fn(&[f64]) -> f64, n: usize, h: f64) -> Vec<f64> {
    assert!(n == 2 || n == 3, "grid oracle covers n = 2, 3");
    let point = |a: f64, b: f64| -> Option<Vec<f64>> {
        if n == 2 {
            (0.0..=1.0).contains(&a).then(|| vec![a, 1.0 - a])
        } else {
            (a >= 0.0 && b >= 0.0 && a + b <= 1.0).then(|| vec![a, b, 1.0 - a - b])
        }
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let scan = |ca: f64, cb: f64, half: usize, h: f64, best: &mut (f64, f64, f64)| {
        let span = half as isize;
        for i in -span..=span {
            let b_range = if n == 2 { 0..=0 } else { -span..=span };
            for j in b_range {
                let (a, b) = (ca + i as f64 * h, cb + j as f64 * h);
                if let Some(x) = point(a, b) {
                    let v = f(&x);
                    if v < best.0 {
                        *best = (v, a, b);
                    }
                }
            }
        }
    };
    let k = (1.0 / h).round() as usize;
    scan(0.0, 0.0, k, 1.0 / k as f64, &mut best);
    let mut h = 1.0 / k as f64;
    while h > 1e-11 {
        let (_, a, b) = best;
        h /= 10.0;
        scan(a, b, 20, h, &mut best);
    }
    point(best.1, best.2).expect("incumbent is feasible")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
