//! Library results checked against independent brute-force references and
//! against the worked values of the scalar examples.

mod common;

use approx::assert_abs_diff_eq;
use common::{generated, max_abs_diff, random_simplex, rng, simplex_grid_min};
use ioco::bilevel::{
    implicit_pre_exhaustive, implicit_pre_search, implicit_pre_step, kkt_pattern_solve, BilevelProblem, Pattern,
};
use ioco::domain::{c_map, objective, Custom1d, Domain, Instance, NoiseMode, ParamSpace, ParameterPoint, UtilityForm};
use ioco::forward::{brute_force_forward, solve, solve_custom_1d};
use ioco::gen::{linear_witness, obscuring_scenario, DomainKind, UtilityKind};
use ioco::harness::aggregate;
use ioco::losses::{
    all_offline_mins, build_regret_trace, eval_losses_from_prediction, linear_min, losses_at, offline_min, LossKind,
    LossRecord,
};
use ioco::oco::{implicit_sim_step, project_simplex, prox_map, ProxSetup, StepSchedule};
use ioco::vecops::{dist2_sq, dot, norm2};
use rand::Rng;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    max_abs_diff(a, b) / (1.0 + norm2(b))
}

// Forward solvers.

#[test]
fn quad_knapsack_matches_grid_oracle() {
    for seed in 0..25 {
        let (inst, _) = generated(DomainKind::ContKnapsack, UtilityKind::Quad, 2, 1, seed);
        let theta = random_simplex(&mut rng(seed), 2);
        let fast = solve(&theta, &inst).unwrap();
        let brute = brute_force_forward(&theta, &inst, 1000).unwrap();
        assert!(rel_err(&fast.x, &brute.x) <= 1e-4, "seed {seed}: {:?} vs {:?}", fast.x, brute.x);
        assert!(fast.objective <= brute.objective + 1e-12);
    }
}

#[test]
fn quad_polytope_matches_grid_oracle() {
    for seed in 0..15 {
        let (inst, _) = generated(DomainKind::Polytope, UtilityKind::Quad, 3, 2, seed);
        let theta = random_simplex(&mut rng(seed + 100), 3);
        let fast = solve(&theta, &inst).unwrap();
        assert!(fast.is_optimal());
        let brute = brute_force_forward(&theta, &inst, 60).unwrap();
        assert!(rel_err(&fast.x, &brute.x) <= 1e-4, "seed {seed}: {:?} vs {:?}", fast.x, brute.x);
        assert!(inst.domain.contains(&fast.x, 1e-8));
    }
}

#[test]
fn binary_knapsack_matches_enumeration() {
    for seed in 0..8 {
        let (inst, _) = generated(DomainKind::BinKnapsack, UtilityKind::Quad, 12, 1, seed);
        let Domain::BinKnapsack { prices, budget } = &inst.domain else { unreachable!() };
        let UtilityForm::QuadDiag { p } = &inst.utility else { unreachable!() };
        // Push values around zero so the budget matters.
        let theta: Vec<f64> = random_simplex(&mut rng(seed), 12).iter().zip(p).map(|(t, pi)| t + 0.5 * pi).collect();
        let fast = solve(&theta, &inst).unwrap();

        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << 12) {
            let x: Vec<f64> = (0..12).map(|i| (mask >> i & 1) as f64).collect();
            if dot(&x, prices) > *budget {
                continue;
            }
            let v = objective(&x, &theta, &inst.utility).unwrap();
            let wins = match &best {
                None => true,
                Some((b, bx)) => v < *b - 1e-12 || ((v - b).abs() <= 1e-12 && norm2(&x) < norm2(bx)),
            };
            if wins {
                best = Some((v, x));
            }
        }
        let (obj, x) = best.unwrap();
        assert_eq!(fast.x, x, "seed {seed}");
        assert_abs_diff_eq!(fast.objective, obj, epsilon = 1e-12);
        assert_eq!(brute_force_forward(&theta, &inst, 1).unwrap().x, x);
    }
}

/// Minimizes Σθ_i x_i² along the budget line ⟨p, x⟩ = b for n = 2.
fn ces_line_oracle(theta: &[f64], p: &[f64], b: f64) -> Vec<f64> {
    let k = 10_000;
    let at = |s: f64| vec![s * b / p[0], (1.0 - s) * b / p[1]];
    let f = |s: f64| {
        let x = at(s);
        theta[0] * x[0] * x[0] + theta[1] * x[1] * x[1]
    };
    let s0 = (0..=k).map(|i| i as f64 / k as f64).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
    // Golden-section polish inside the winning cell.
    let (mut lo, mut hi) = ((s0 - 1.0 / k as f64).max(0.0), (s0 + 1.0 / k as f64).min(1.0));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (a, c) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(a) < f(c) {
            hi = c;
        } else {
            lo = a;
        }
    }
    at(0.5 * (lo + hi))
}

#[test]
fn ces_closed_form_matches_budget_line_grid() {
    let inst = Instance::new(1, UtilityForm::Ces, Domain::eq_knapsack(vec![1.0, 1.0], 1.0).unwrap()).unwrap();
    let x = solve(&[0.25, 0.75], &inst).unwrap().x;
    assert_abs_diff_eq!(x[0], 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(x[1], 0.25, epsilon = 1e-12);
    assert!(max_abs_diff(&x, &ces_line_oracle(&[0.25, 0.75], &[1.0, 1.0], 1.0)) <= 1e-4);

    for seed in 0..10 {
        let (inst, _) = generated(DomainKind::EqKnapsack, UtilityKind::Ces, 2, 1, seed);
        let Domain::EqKnapsack { prices, budget } = &inst.domain else { unreachable!() };
        let theta = random_simplex(&mut rng(seed), 2);
        let x = solve(&theta, &inst).unwrap().x;
        assert!(rel_err(&x, &ces_line_oracle(&theta, prices, *budget)) <= 1e-4);
        assert!(rel_err(&x, &brute_force_forward(&theta, &inst, 1000).unwrap().x) <= 1e-4);
    }
}

#[test]
fn ces_random_instances_satisfy_kkt() {
    for seed in 0..10 {
        let (inst, _) = generated(DomainKind::EqKnapsack, UtilityKind::Ces, 5, 1, seed);
        let Domain::EqKnapsack { prices, budget } = &inst.domain else { unreachable!() };
        let theta = random_simplex(&mut rng(seed), 5);
        let x = solve(&theta, &inst).unwrap().x;
        // ∇f = λp with λ shared by every coordinate.
        let lambdas: Vec<f64> = (0..5).map(|i| 2.0 * theta[i] * x[i] / prices[i]).collect();
        let lam = lambdas[0];
        for l in &lambdas {
            assert!((l - lam).abs() <= 1e-10 * (1.0 + lam.abs()));
        }
        assert!((dot(prices, &x) - budget).abs() <= 1e-10 * budget);
        assert!(x.iter().all(|v| *v >= 0.0));
    }
    for seed in 0..5 {
        let (inst, _) = generated(DomainKind::EqKnapsack, UtilityKind::Ces, 3, 1, seed);
        let theta = random_simplex(&mut rng(seed + 7), 3);
        let x = solve(&theta, &inst).unwrap().x;
        assert!(rel_err(&x, &brute_force_forward(&theta, &inst, 300).unwrap().x) <= 1e-4);
    }
}

#[test]
fn bilinear_matches_vertex_enumeration() {
    for seed in 0..20 {
        let (inst, _) = generated(DomainKind::ContKnapsack, UtilityKind::Bilinear, 4, 1, seed);
        let Domain::ContKnapsack { prices, budget } = &inst.domain else { unreachable!() };
        let theta = random_simplex(&mut rng(seed), 4);
        let mut vertices = vec![vec![0.0; 4]];
        for i in 0..4 {
            let mut v = vec![0.0; 4];
            v[i] = budget / prices[i];
            vertices.push(v);
        }
        let best = vertices.iter().map(|v| objective(v, &theta, &inst.utility).unwrap()).fold(f64::INFINITY, f64::min);
        let fast = solve(&theta, &inst).unwrap();
        assert_abs_diff_eq!(fast.objective, best, epsilon = 1e-12);
        assert!(vertices.iter().any(|v| max_abs_diff(v, &fast.x) == 0.0));
    }
}

#[test]
fn cobb_douglas_satisfies_stationarity() {
    for seed in 0..10 {
        let (inst, _) = generated(DomainKind::ContKnapsack, UtilityKind::CobbDouglas, 3, 1, seed);
        let Domain::ContKnapsack { prices, budget } = &inst.domain else { unreachable!() };
        let theta = random_simplex(&mut rng(seed), 3);
        let x = solve(&theta, &inst).unwrap().x;
        // −θ_i / x_i + λ p_i = 0 with a common λ, budget binding.
        let lambdas: Vec<f64> = (0..3).map(|i| theta[i] / (x[i] * prices[i])).collect();
        for l in &lambdas {
            assert!((l - lambdas[0]).abs() <= 1e-10 * lambdas[0]);
        }
        assert!((dot(prices, &x) - budget).abs() <= 1e-10 * budget);
    }
}

// Projection and prox steps.

#[test]
fn projection_matches_grid() {
    let got = project_simplex(&[1.5, -0.2]).unwrap();
    assert_eq!(got.values(), &[1.0, 0.0]);
    let mut r = rng(11);
    for n in [2, 3] {
        for _ in 0..10 {
            let v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.5)).collect();
            let f = |x: &[f64]| dist2_sq(x, &v);
            let oracle = simplex_grid_min(&f, n, if n == 2 { 1e-4 } else { 1e-3 });
            let got = project_simplex(&v).unwrap();
            assert!(max_abs_diff(got.values(), &oracle) <= 1e-6, "{:?} vs {oracle:?}", got.values());
        }
    }
}

fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| if *x > 0.0 { x * (x / y).ln() } else { 0.0 }).sum()
}

#[test]
fn entropy_prox_matches_grid() {
    let uniform = ParameterPoint::uniform(2);
    let setup = ProxSetup::entropy(2, 1.0);
    let xi = [2f64.ln(), 0.0];
    let got = prox_map(&uniform, &xi, &setup).unwrap();
    assert_abs_diff_eq!(got.values()[0], 1.0 / 3.0, epsilon = 1e-12);
    let f = |x: &[f64]| dot(&xi, x) + kl(x, uniform.values());
    assert!(max_abs_diff(got.values(), &simplex_grid_min(&f, 2, 1e-4)) <= 1e-6);

    let mut r = rng(3);
    for n in [2, 3] {
        for _ in 0..8 {
            let theta = ParameterPoint::simplex(random_simplex(&mut r, n)).unwrap();
            let xi: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
            let got = prox_map(&theta, &xi, &ProxSetup::entropy(n, 1.0)).unwrap();
            let f = |x: &[f64]| dot(&xi, x) + kl(x, theta.values());
            let oracle = simplex_grid_min(&f, n, if n == 2 { 1e-4 } else { 1e-3 });
            assert!(max_abs_diff(got.values(), &oracle) <= 1e-6, "{:?} vs {oracle:?}", got.values());
        }
    }
}

#[test]
fn implicit_sim_step_matches_grid() {
    let mut r = rng(5);
    for _ in 0..10 {
        let theta = ParameterPoint::simplex(random_simplex(&mut r, 3)).unwrap();
        let s: Vec<f64> = (0..3).map(|_| r.gen_range(-2.0..2.0)).collect();
        let eta = r.gen_range(0.05..1.0);
        let got = implicit_sim_step(&theta, &s, 1, &StepSchedule::Custom(vec![eta])).unwrap();
        let f = |x: &[f64]| 0.5 * dist2_sq(x, theta.values()) + eta * dot(&s, x);
        let oracle = simplex_grid_min(&f, 3, 1e-3);
        assert!(max_abs_diff(got.values(), &oracle) <= 1e-6, "{:?} vs {oracle:?}", got.values());
    }
}

// Prediction-loss oracle.

fn pre_problem(domain: DomainKind, n: usize, m: usize, seed: u64) -> (BilevelProblem, Instance) {
    let (inst, theta_true) = generated(domain, UtilityKind::Quad, n, m, seed);
    let mut r = rng(seed + 1000);
    let theta_t = ParameterPoint::simplex(random_simplex(&mut r, n)).unwrap();
    let y = solve(theta_true.values(), &inst).unwrap().x;
    let eta = r.gen_range(0.1..50.0);
    (BilevelProblem::new(&theta_t, eta, &inst, &y).unwrap(), inst)
}

#[test]
fn pre_search_matches_exhaustive_patterns() {
    for seed in 0..150 {
        let (prob, _) = pre_problem(DomainKind::ContKnapsack, 2, 1, seed);
        let a = implicit_pre_search(&prob).unwrap();
        let b = implicit_pre_exhaustive(&prob).unwrap();
        assert!((a.objective - b.objective).abs() <= 1e-12 * (1.0 + b.objective), "seed {seed}");
        assert!(max_abs_diff(a.theta.values(), b.theta.values()) <= 1e-9, "seed {seed}");
    }
    for seed in 0..60 {
        let (prob, _) = pre_problem(DomainKind::Polytope, 3, 2, seed);
        let a = implicit_pre_search(&prob).unwrap();
        let b = implicit_pre_exhaustive(&prob).unwrap();
        assert!(a.objective <= b.objective + 1e-10 * (1.0 + b.objective), "seed {seed}");
        assert!(b.objective <= a.objective + 1e-10 * (1.0 + a.objective), "seed {seed}");
    }
}

#[test]
fn best_pattern_matches_theta_grid() {
    for seed in 0..10 {
        let (prob, inst) = pre_problem(DomainKind::ContKnapsack, 2, 1, seed);
        let mut best = prob.objective(&prob.theta_t);
        for bits in 0..8u32 {
            let pat = Pattern { at_zero: vec![bits & 1 == 1, bits & 2 == 2], binding: vec![bits & 4 == 4] };
            if let Some(c) = kkt_pattern_solve(&pat, &prob) {
                best = best.min(c.objective);
            }
        }
        // Grid over θ on the simplex with x(θ) from the forward solver.
        let phi = |th: &[f64]| {
            let x = solve(th, &inst).unwrap().x;
            0.5 * dist2_sq(th, &prob.theta_t) + prob.eta * dist2_sq(&prob.y, &x)
        };
        let k = 10_000;
        let grid = (0..=k)
            .map(|i| {
                let s = i as f64 / k as f64;
                phi(&[s, 1.0 - s])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= grid + 1e-9, "seed {seed}: patterns {best} grid {grid}");
        assert!(grid <= best + 1e-3, "seed {seed}: patterns {best} grid {grid}");
    }
}

#[test]
fn returned_pair_satisfies_kkt() {
    for seed in 0..10 {
        let (prob, _) = pre_problem(DomainKind::Polytope, 4, 3, seed);
        let step = implicit_pre_search(&prob).unwrap();
        let r = step.kkt.residual(step.theta.values(), &prob.p_diag, &prob.rows, &prob.rhs);
        assert!(r <= 1e-8, "seed {seed}: residual {r}");
        assert!(step.kkt.w.iter().chain(&step.kkt.v).all(|m| *m >= -1e-12));
        assert!(step.objective <= prob.objective(&prob.theta_t) + 1e-12);
    }
}

// Regret bookkeeping.

fn record_with(s: Vec<f64>, t: usize, vals: [f64; 4]) -> LossRecord {
    LossRecord { t, l_pre: vals[0], l_sub: vals[1], l_est: vals[2], l_sim: vals[3], s_t: s, x_pred: vec![], y: vec![] }
}

#[test]
fn offline_sim_minimum_matches_vertices() {
    let third = 1.0 / 3.0;
    let hist = vec![record_with(vec![2.0, -1.0, 0.0], 1, [0.0; 4])];
    let got = offline_min(LossKind::Sim, &hist, ParamSpace::Simplex, &[third; 3], NoiseMode::Perfect).unwrap();
    assert_abs_diff_eq!(got, -4.0 / 3.0, epsilon = 1e-15);

    let mut r = rng(9);
    for _ in 0..20 {
        let n = r.gen_range(2..6);
        let theta_true = random_simplex(&mut r, n);
        let hist: Vec<LossRecord> =
            (1..=5).map(|t| record_with((0..n).map(|_| r.gen_range(-1.0..1.0)).collect(), t, [0.0; 4])).collect();
        let total = |th: &[f64]| hist.iter().map(|h| dot(&ioco::vecops::sub(th, &theta_true), &h.s_t)).sum::<f64>();
        let vertex_best = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                total(&e)
            })
            .fold(f64::INFINITY, f64::min);
        let got = offline_min(LossKind::Sim, &hist, ParamSpace::Simplex, &theta_true, NoiseMode::Perfect).unwrap();
        assert_abs_diff_eq!(got, vertex_best, epsilon = 1e-12);

        // Box corners.
        let corner_best = (0..1u32 << n)
            .map(|mask| total(&(0..n).map(|i| if mask >> i & 1 == 1 { 2.0 } else { -1.0 }).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        let s: Vec<f64> = (0..n).map(|i| hist.iter().map(|h| h.s_t[i]).sum()).collect();
        let boxed = linear_min(&s, ParamSpace::Box { lo: -1.0, hi: 2.0 }) - dot(&theta_true, &s);
        assert_abs_diff_eq!(boxed, corner_best, epsilon = 1e-12);
    }
}

#[test]
fn aggregate_bands_match_recomputation() {
    let mut r = rng(21);
    let k = 7;
    let traces: Vec<_> = (0..k)
        .map(|i| {
            let recs: Vec<LossRecord> =
                (1..=6).map(|t| record_with(vec![0.0, 0.0], t, [r.gen(), r.gen(), r.gen(), r.gen()])).collect();
            let mins = all_offline_mins(&recs, ParamSpace::Simplex, &[0.5, 0.5], NoiseMode::Perfect);
            let ms = (0..6).map(|_| r.gen()).collect();
            build_regret_trace(i, recs, mins, ms).unwrap()
        })
        .collect();
    let summary = aggregate(&traces).unwrap();
    let col = summary.column("avg_regret_sub").unwrap();
    for t in 0..6 {
        let vals: Vec<f64> = traces.iter().map(|tr| tr.series(LossKind::Sub).avg_regret[t].unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / k as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt();
        let half = 1.96 * sd / (k as f64).sqrt();
        assert_abs_diff_eq!(col.mean[t], mean, epsilon = 1e-14);
        assert_abs_diff_eq!(col.lo.as_ref().unwrap()[t], mean - half, epsilon = 1e-14);
        assert_abs_diff_eq!(col.hi.as_ref().unwrap()[t], mean + half, epsilon = 1e-14);
    }
    let ms = summary.column("step_ms").unwrap();
    let direct = traces.iter().map(|tr| tr.step_ms[2]).sum::<f64>() / k as f64;
    assert_abs_diff_eq!(ms.mean[2], direct, epsilon = 1e-14);
}

// Worked scalar examples.

#[test]
fn obscuring_agent_values() {
    let u = UtilityForm::Custom1d(Custom1d::Obscuring);
    assert_eq!(c_map(&[0.0], &u).unwrap(), vec![-1.0]);
    assert_eq!(c_map(&[0.5], &u).unwrap(), vec![0.0]);
    assert_eq!(solve_custom_1d(-1.0, Custom1d::Obscuring, -1.0, 1.0).unwrap().x, vec![-1.0]);
    assert_eq!(solve_custom_1d(3.0, Custom1d::Obscuring, -1.0, 1.0).unwrap().x, vec![0.0]);
    assert_eq!(solve_custom_1d(1.0, Custom1d::Obscuring, -1.0, 1.0).unwrap().x, vec![0.0]);

    let sc = obscuring_scenario(1).unwrap();
    let inst = &sc.instances[0];
    let y = solve(&[0.0], inst).unwrap().x;
    let pred = solve(&[3.0], inst).unwrap().x;
    let rec = eval_losses_from_prediction(&[3.0], &pred, inst, &y, &[0.0]).unwrap();
    assert_eq!(rec.l_pre, 1.0);
    assert_eq!(rec.l_sim, 3.0);
    assert_eq!(rec.s_t, vec![1.0]);

    let setup = ProxSetup::euclid_box(1, -3.0, 3.0, 2.0);
    let next = prox_map(&sc.theta_1, &[1.0], &setup).unwrap();
    assert_eq!(next.values(), &[2.0]);
    let stay = implicit_pre_step(&sc.theta_1, 1.0, inst, &y).unwrap();
    assert_eq!(stay.values(), &[3.0]);
}

#[test]
fn linear_agent_losses_are_nonconvex() {
    let (inst, theta_true) = linear_witness().unwrap();
    let y = solve(theta_true.values(), &inst).unwrap().x;
    assert_eq!(y, vec![-1.0]);
    let at = |th: f64| {
        let x = solve(&[th], &inst).unwrap().x;
        losses_at(&[th], &x, &x, &inst, &y, theta_true.values()).unwrap()
    };
    let (a, b, mid) = (at(1.0), at(-1.0), at(-0.5));
    assert_eq!([a[0], b[0], mid[0]], [0.0, 4.0, 4.0]);
    assert_eq!([a[2], b[2], mid[2]], [0.0, 2.0, 2.0]);
    // λ = ¼ between θ = 1 and θ = −1 lands at −½.
    assert!(mid[0] > 0.25 * a[0] + 0.75 * b[0]);
    assert!(mid[2] > 0.25 * a[2] + 0.75 * b[2]);
}
