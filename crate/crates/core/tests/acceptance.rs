//! Acceptance suite: every release-gating criterion as one test with a
//! printed pass/fail line. Tolerances are pinned in the assertions.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use common::criterion;
use nalgebra::DMatrix;
use netloc::allocate::{
    build_min_power_prior_wnl, build_min_power_wnl, uniform_min_power_rnl, uniform_min_power_wnl,
    PriorInfo,
};
use netloc::conic::{check_kkt, SolveStatus};
use netloc::fisher::{
    direction_matrix, efim_rnl, efim_rnl_bistatic, efim_wnl, speb, speb_fractional,
    topology_matrix, Efim, SpebScene,
};
use netloc::net::PowerAllocation;
use netloc::robust::{
    build_robust_socp_asymptotic_wnl, build_robust_socp_efficient_rnl,
    build_robust_socp_efficient_wnl, derive_intervals_wnl, gap_constant, single_circle_cover_rnl,
    single_circle_cover_wnl, speb_bounds_eval, worst_case_speb_oracle, worst_case_speb_region,
    BoundVariant, DEFAULT_ORACLE_GRID,
};
use netloc::simbench::{evaluate_violation, generate_stream, GeneratedNetwork, ScenarioSpec};
use netloc::WirelessNetwork;
use rand::Rng;
use std::time::Instant;

fn wnl_instance(spec: &ScenarioSpec, trial: u64) -> WirelessNetwork {
    match generate_stream(spec, trial).expect("valid spec") {
        GeneratedNetwork::Wireless(net) => net,
        GeneratedNetwork::Radar(_) => unreachable!(),
    }
}

#[test]
fn criterion_01_speb_dual_form_equivalence() {
    criterion("01 dual-form equivalence (1000 scenes, rel <= 1e-9, < 1 s)", || {
        let start = Instant::now();
        for seed in 0..1000u64 {
            let mut r = common::rng(seed);
            let nb = r.random_range(2..=10usize);
            let net = common::random_wnl(nb, 1, seed, 0.0);
            let x =
                PowerAllocation::new((0..nb).map(|_| r.random_range(0.0..3.0)).collect()).unwrap();
            let trace = speb(&efim_wnl(&net, &x, 0).unwrap()).unwrap();
            let fraction = speb_fractional(&SpebScene::wnl(&net, 0), &x);
            if trace.is_finite() {
                let rel = (trace - fraction).abs() / trace;
                assert!(rel <= 1e-9, "seed {seed}: rel {rel:.3e}");
            } else {
                assert!(fraction.is_infinite(), "seed {seed}");
            }
        }
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    });
}

#[test]
fn criterion_02_radar_information_route_equivalence() {
    criterion("02 radar information route equivalence (1000 scenes, 1e-12)", || {
        for seed in 0..1000u64 {
            let mut r = common::rng(seed ^ 0x2222);
            let nt = r.random_range(1..=6usize);
            let nr = r.random_range(1..=6usize);
            let net = common::random_rnl(nt, nr, seed, 0.0);
            let x =
                PowerAllocation::new((0..nt).map(|_| r.random_range(0.0..2.0)).collect()).unwrap();
            let a = efim_rnl(&net, &x).unwrap();
            let b = efim_rnl_bistatic(&net, &x).unwrap();
            let scale = a.matrix().abs().max().max(f64::MIN_POSITIVE);
            for i in 0..2 {
                for j in 0..2 {
                    let diff = (a.matrix()[(i, j)] - b.matrix()[(i, j)]).abs();
                    assert!(diff <= 1e-12 * scale, "seed {seed}: entry ({i},{j})");
                }
            }
        }
    });
}

#[test]
fn criterion_03_topology_matrix_rank() {
    criterion("03 topology matrix rank <= 3 (1000 angle vectors)", || {
        for seed in 0..1000u64 {
            let mut r = common::rng(seed ^ 0x3333);
            let n = r.random_range(4..=20usize);
            let angles: Vec<f64> = (0..n)
                .map(|_| r.random_range(0.0..std::f64::consts::TAU))
                .collect();
            let lambda = topology_matrix(&angles);
            let svd = lambda.svd(false, false);
            let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(
                sv[3] <= 1e-10 * sv[0].max(f64::MIN_POSITIVE),
                "seed {seed}: sigma4/sigma1 = {:.3e}",
                sv[3] / sv[0]
            );
        }
    });
}

#[test]
fn criterion_04_power_scaling() {
    criterion("04 power scaling speb(c x) = speb(x)/c (1e-12)", || {
        for seed in 0..1000u64 {
            let mut r = common::rng(seed ^ 0x4444);
            let nb = r.random_range(2..=10usize);
            let net = common::random_wnl(nb, 1, seed, 0.0);
            let x = PowerAllocation::new((0..nb).map(|_| r.random_range(0.1..3.0)).collect())
                .unwrap();
            let c = 10f64.powf(r.random_range(-3.0..3.0));
            let p = speb(&efim_wnl(&net, &x, 0).unwrap()).unwrap();
            let pc = speb(&efim_wnl(&net, &x.scaled(c), 0).unwrap()).unwrap();
            if p.is_finite() {
                assert!(
                    (pc - p / c).abs() <= 1e-12 * (p / c),
                    "seed {seed}: c {c}, {pc} vs {}",
                    p / c
                );
            }
        }
    });
}

#[test]
fn criterion_05_nominal_socp_matches_brute_force() {
    criterion("05 nominal optimum within 0.5% of simplex grid (50 instances)", || {
        for seed in 0..50u64 {
            let net = common::random_wnl(3, 1, seed, 0.0);
            let sol = build_min_power_wnl(&net).solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            let brute = common::brute_force_min_total_3(&net, 1000);
            let rel = (sol.objective_value - brute).abs() / brute;
            assert!(rel <= 5e-3, "seed {seed}: rel {rel:.3e}");
        }
    });
}

#[test]
fn criterion_06_symmetric_rings_need_total_four() {
    criterion("06 uniform-angle rings: optimal total power 4 (1e-6)", || {
        for n in [3usize, 4, 8] {
            let anchors: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / n as f64;
                    [a.cos(), a.sin()]
                })
                .collect();
            let net = WirelessNetwork::new(
                anchors,
                vec![[0.0, 0.0]],
                DMatrix::from_element(1, n, 1.0),
                1.0,
                None,
                vec![1.0],
            )
            .unwrap();
            let sol = build_min_power_wnl(&net).solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "n = {n}");
            assert!(
                (sol.objective_value - 4.0).abs() <= 1e-6,
                "n = {n}: total {}",
                sol.objective_value
            );
        }
    });
}

#[test]
fn criterion_07_three_anchor_support() {
    criterion("07 single-agent optimum activates at most 3 anchors (200 nets)", || {
        for seed in 0..200u64 {
            let mut r = common::rng(seed ^ 0x7777);
            let nb = r.random_range(5..=12usize);
            let net = common::random_wnl(nb, 1, seed, 0.0);
            let sol = build_min_power_wnl(&net).solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            let max = sol.v.iter().cloned().fold(0.0f64, f64::max);
            let active = sol.v.iter().filter(|&&v| v > 1e-6 * max).count();
            assert!(active <= 3, "seed {seed}: support {active}, x {:?}", sol.v);
        }
    });
}

#[test]
fn criterion_08_sandwich_and_gap() {
    criterion("08 finite bounds sandwich the oracle; gap constant holds", || {
        let mut accepted = 0u32;
        let mut seed = 0u64;
        while accepted < 200 {
            let (circle, x) = common::random_circle_and_x(seed);
            seed += 1;
            let oracle = worst_case_speb_oracle(&circle, &x, DEFAULT_ORACLE_GRID);
            if !oracle.is_finite() {
                continue;
            }
            let sum_y: f64 = circle.links.iter().map(|l| l.xi_lo * x.x[l.var_index]).sum();
            let b = (oracle * sum_y / 4.0).max(1.0);
            // the finite relaxations require M >= pi sqrt(B); keep pairs
            // where the smallest tested order is already valid
            if 8.0 < std::f64::consts::PI * b.sqrt() {
                continue;
            }
            accepted += 1;
            for m in [8usize, 32, 128] {
                let bounds = speb_bounds_eval(&circle, &x, m).unwrap();
                assert!(
                    bounds.lower <= oracle * (1.0 + 1e-9),
                    "seed {seed} m {m}: lower {} oracle {oracle}",
                    bounds.lower
                );
                assert!(
                    oracle <= bounds.upper * (1.0 + 1e-9),
                    "seed {seed} m {m}: upper {} oracle {oracle}",
                    bounds.upper
                );
                let c = gap_constant(b, m).unwrap();
                assert!(
                    bounds.upper <= (1.0 + c) * bounds.lower * (1.0 + 1e-9),
                    "seed {seed} m {m}: gap constant violated"
                );
            }
            // quadratic decay of the gap constant
            let c_max = gap_constant(b, 1024).unwrap();
            let limit = std::f64::consts::PI.powi(2) * (b - 1.0);
            if b > 1.0 + 1e-12 {
                let ratio = 1024.0f64.powi(2) * c_max / limit;
                assert!((ratio - 1.0).abs() <= 0.1, "seed {seed}: M^2 C ratio {ratio}");
            }
        }
    });
}

#[test]
fn criterion_09_bracket_convergence() {
    criterion("09 finite-order solutions converge to the optimum bracket", || {
        // one fixed eight-anchor instance with moderate uncertainty
        let spec = ScenarioSpec::wnl(8, 1, 13).with_nuss(0.15);
        let net = wnl_instance(&spec, 0);
        let cover = single_circle_cover_wnl(&net, spec.delta()).unwrap();
        let solve = |m: usize, v: BoundVariant| {
            let sol = build_robust_socp_asymptotic_wnl(&net, &cover, m, v)
                .unwrap()
                .solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "M = {m}");
            sol.objective_value
        };
        let proxy = solve(512, BoundVariant::Upper);
        let mut prev_up = f64::INFINITY;
        let mut prev_lo = f64::INFINITY;
        let mut gap16 = (0.0, 0.0);
        for m in [4usize, 8, 16, 32] {
            let gap_up = (solve(m, BoundVariant::Upper) - proxy) / proxy;
            let gap_lo = (proxy - solve(m, BoundVariant::Lower)) / proxy;
            assert!(gap_up <= prev_up, "upper gap grew at M = {m}");
            assert!(gap_lo <= prev_lo, "lower gap grew at M = {m}");
            prev_up = gap_up;
            prev_lo = gap_lo;
            if m == 16 {
                gap16 = (gap_up, gap_lo);
            }
        }
        assert!(gap16.0 <= 0.10, "upper gap at M=16: {:.3}", gap16.0);
        assert!(gap16.1 <= 0.10, "lower gap at M=16: {:.3}", gap16.1);

        // halving the grid step shrinks the bracket roughly fourfold
        let bracket = |m: usize| solve(m, BoundVariant::Upper) - solve(m, BoundVariant::Lower);
        let shrink = bracket(64) / bracket(128);
        assert!((3.0..=5.0).contains(&shrink), "bracket shrink {shrink:.3}");
    });
}

#[test]
fn criterion_10_efficient_relaxation_soundness() {
    criterion("10 efficient relaxation always meets the oracle worst case", || {
        let nuss_grid = [0.05, 0.15, 0.3];
        let mut feasible_wnl = 0u32;
        for i in 0..200u64 {
            let mut r = common::rng(i ^ 0xabc);
            let nuss = nuss_grid[(i % 3) as usize];
            let nb = r.random_range(5..=10usize);
            let spec = ScenarioSpec::wnl(nb, 1, 999).with_nuss(nuss);
            let net = wnl_instance(&spec, i);
            let cover = single_circle_cover_wnl(&net, spec.delta()).unwrap();
            let sol = build_robust_socp_efficient_wnl(&net, &cover).unwrap().solve();
            if sol.status != SolveStatus::Optimal {
                continue;
            }
            feasible_wnl += 1;
            let x = PowerAllocation::new(sol.v).unwrap();
            let worst = worst_case_speb_region(&cover.regions[0], &x, DEFAULT_ORACLE_GRID);
            assert!(worst <= 1.0 + 1e-6, "wnl trial {i}: worst {worst}");
        }
        assert!(feasible_wnl >= 150, "only {feasible_wnl} feasible wireless cases");

        let mut feasible_rnl = 0u32;
        for i in 0..200u64 {
            let mut r = common::rng(i ^ 0xdef);
            let nuss = nuss_grid[(i % 3) as usize];
            let nt = r.random_range(2..=5usize);
            let nr = r.random_range(1..=4usize);
            let spec = ScenarioSpec::rnl(nt, nr, 777).with_nuss(nuss);
            let net = match generate_stream(&spec, i).expect("valid spec") {
                GeneratedNetwork::Radar(n) => n,
                GeneratedNetwork::Wireless(_) => unreachable!(),
            };
            let cover = single_circle_cover_rnl(&net, spec.delta()).unwrap();
            let sol = build_robust_socp_efficient_rnl(&net, &cover)
                .unwrap()
                .program
                .solve();
            if sol.status != SolveStatus::Optimal {
                continue;
            }
            feasible_rnl += 1;
            let x = PowerAllocation::new(sol.v).unwrap();
            let worst = worst_case_speb_region(&cover.regions[0], &x, DEFAULT_ORACLE_GRID);
            assert!(
                worst <= net.requirement * (1.0 + 1e-6),
                "rnl trial {i}: worst {worst}"
            );
        }
        assert!(feasible_rnl >= 80, "only {feasible_rnl} feasible radar cases");

        // vanishing uncertainty reduces to the nominal program
        for seed in 0..20u64 {
            let net = common::random_wnl(6, 1, seed, 0.0);
            let cover = single_circle_cover_wnl(&net, 0.0).unwrap();
            let eff = build_robust_socp_efficient_wnl(&net, &cover).unwrap().solve();
            let nom = build_min_power_wnl(&net).solve();
            let rel = (eff.objective_value - nom.objective_value).abs() / nom.objective_value;
            assert!(rel <= 1e-7, "seed {seed}: rel {rel:.3e}");
        }
    });
}

#[test]
fn criterion_11_nonrobust_violation_rate() {
    criterion("11 nominal solutions violate the worst case under uncertainty", || {
        let spec = ScenarioSpec::wnl(8, 1, 4321).with_nuss(0.15);
        let mut violated = 0u32;
        for trial in 0..200u64 {
            let net = wnl_instance(&spec, trial);
            let sol = build_min_power_wnl(&net).solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            let cover = single_circle_cover_wnl(&net, spec.delta()).unwrap();
            let x = PowerAllocation::new(sol.v).unwrap();
            if evaluate_violation(&net, &cover, &x)[0].violated {
                violated += 1;
            }
        }
        assert!(violated >= 180, "violated in {violated}/200 trials");
    });
}

#[test]
fn criterion_12_optimal_versus_uniform() {
    criterion("12 optimized power beats uniform (median >= 30%)", || {
        let spec = ScenarioSpec::wnl(9, 1, 2026);
        let mut reductions = Vec::with_capacity(500);
        for trial in 0..500u64 {
            let net = wnl_instance(&spec, trial);
            let sol = build_min_power_wnl(&net).solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            let (_, uniform) = uniform_min_power_wnl(&net).unwrap();
            let reduction = (uniform.total() - sol.objective_value) / uniform.total();
            assert!(reduction >= 0.0, "trial {trial}: reduction {reduction:.3e}");
            reductions.push(reduction);
        }
        reductions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = reductions[reductions.len() / 2];
        assert!(median >= 0.30, "median reduction {median:.3}");
    });
}

#[test]
fn criterion_13_single_transmitter_identity() {
    criterion("13 one-transmitter radar: optimized equals uniform (1e-9)", || {
        for trial in 0..100u64 {
            let mut r = common::rng(trial ^ 0x1313);
            // at least two receive antennas, otherwise the single-path
            // information is rank one and the requirement is unsatisfiable
            let nr = r.random_range(2..=6usize);
            let spec = ScenarioSpec::rnl(1, nr, 606);
            let net = match generate_stream(&spec, trial).expect("valid spec") {
                GeneratedNetwork::Radar(n) => n,
                GeneratedNetwork::Wireless(_) => unreachable!(),
            };
            let sol = netloc::allocate::build_min_power_rnl(&net).solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            let (_, uniform) = uniform_min_power_rnl(&net).unwrap();
            let rel = (sol.objective_value - uniform.total()).abs() / uniform.total();
            assert!(rel <= 1e-9, "trial {trial}: rel {rel:.3e}");
        }
    });
}

#[test]
fn criterion_14_prior_knowledge() {
    criterion("14 sufficient prior removes transmission; zero prior is neutral", || {
        for seed in 0..20u64 {
            let net = common::random_wnl(5, 1, seed ^ 0x1414, 0.0);
            let rho = net.requirements[0];
            let jkj: Vec<Efim> = (0..5)
                .map(|j| {
                    let (phi, _) = net.link_geometry(0, j);
                    let mut m = direction_matrix(phi).matrix().to_owned();
                    m *= net.erc(0, j);
                    Efim::new(m).unwrap()
                })
                .collect();

            // prior satisfying the requirement on its own: zero power
            let strong = PriorInfo {
                j0: vec![Efim::new(nalgebra::Matrix2::identity() * (2.0 / rho)).unwrap()],
                jkj: vec![jkj.clone()],
            };
            let sol = build_min_power_prior_wnl(&net, &strong).unwrap().solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            assert!(
                sol.objective_value.abs() <= 1e-9,
                "seed {seed}: residual power {}",
                sol.objective_value
            );

            // vanishing prior coincides with the nominal program
            let neutral = PriorInfo {
                j0: vec![Efim::zero()],
                jkj: vec![jkj],
            };
            let with = build_min_power_prior_wnl(&net, &neutral).unwrap().solve();
            let without = build_min_power_wnl(&net).solve();
            let diff = (with.objective_value - without.objective_value).abs();
            assert!(
                diff <= 1e-8 * without.objective_value.max(1.0),
                "seed {seed}: diff {diff:.3e}"
            );
        }
    });
}

#[test]
fn criterion_15_solver_health() {
    criterion("15 random programs solve with clean audits; infeasibility certified", || {
        for seed in 0..1000u64 {
            let prog = common::random_feasible_socp(seed);
            let sol = prog.solve();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            let report = check_kkt(&prog, &sol, 1e-8);
            assert!(report.passed, "seed {seed}: {report:?}");
        }

        // power caps far below the uniform requirement are infeasible with a
        // checkable certificate
        let net = common::random_wnl(6, 1, 99, 0.0);
        let (level, _) = uniform_min_power_wnl(&net).unwrap();
        let capped = WirelessNetwork::new(
            net.anchor_positions.clone(),
            net.agent_positions.clone(),
            net.rc.clone(),
            net.beta,
            Some(vec![level / 100.0; 6]),
            net.requirements.clone(),
        )
        .unwrap();
        let prog = build_min_power_wnl(&capped);
        let sol = prog.solve();
        assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
        let report = check_kkt(&prog, &sol, 1e-6);
        assert!(report.passed, "certificate report {report:?}");
    });
}

#[test]
fn criterion_16_runtime_envelope() {
    criterion("16 runtime envelope: nominal < 100 ms, robust M=512 < 5 s", || {
        let net = common::random_wnl(12, 8, 5, 0.0);
        let start = Instant::now();
        let sol = build_min_power_wnl(&net).solve();
        let nominal_time = start.elapsed();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            nominal_time.as_millis() < 100,
            "nominal solve took {nominal_time:?}"
        );

        // five-circle cover, 512-point relaxation
        let net = common::random_wnl(8, 1, 13, 0.1);
        let c = net.agent_positions[0];
        let delta = 3.0;
        let circles = vec![
            (c, delta),
            ([c[0] + 4.0, c[1]], delta),
            ([c[0] - 4.0, c[1]], delta),
            ([c[0], c[1] + 4.0], delta),
            ([c[0], c[1] - 4.0], delta),
        ];
        let cover = derive_intervals_wnl(&net, &[circles], &net.rc, &net.rc).unwrap();
        let start = Instant::now();
        let prog = build_robust_socp_asymptotic_wnl(&net, &cover, 512, BoundVariant::Upper).unwrap();
        let sol = prog.solve();
        let robust_time = start.elapsed();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(robust_time.as_secs_f64() < 5.0, "robust solve took {robust_time:?}");
    });
}
