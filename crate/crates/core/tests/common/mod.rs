//! Shared helpers for the integration and acceptance suites: seeded random
//! SOCP instances, a projected-subgradient reference solver, and random
//! network scenes.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use netloc::conic::{ConeProgram, LinearConstraint, SocConstraint};
use netloc::net::PowerAllocation;
use netloc::robust::{CoverCircle, LinkBand};
use netloc::simbench::{generate_stream, GeneratedNetwork, ScenarioSpec};
use netloc::{RadarNetwork, WirelessNetwork};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random wireless scene from the benchmark generator.
pub fn random_wnl(anchors: usize, agents: usize, seed: u64, nuss: f64) -> WirelessNetwork {
    let spec = ScenarioSpec::wnl(anchors, agents, seed).with_nuss(nuss);
    match generate_stream(&spec, 0).expect("valid spec") {
        GeneratedNetwork::Wireless(net) => net,
        GeneratedNetwork::Radar(_) => unreachable!(),
    }
}

/// Random radar scene from the benchmark generator.
pub fn random_rnl(tx: usize, rx: usize, seed: u64, nuss: f64) -> RadarNetwork {
    let spec = ScenarioSpec::rnl(tx, rx, seed).with_nuss(nuss);
    match generate_stream(&spec, 0).expect("valid spec") {
        GeneratedNetwork::Radar(net) => net,
        GeneratedNetwork::Wireless(_) => unreachable!(),
    }
}

/// Random interval circle together with a nonnegative allocation, for
/// worst-case bound checks. Angular widths stay moderate so finite-order
/// relaxations are valid at small M.
pub fn random_circle_and_x(seed: u64) -> (CoverCircle, PowerAllocation) {
    let mut r = rng(seed ^ 0xc1c1e);
    let links = r.random_range(3..=8usize);
    let bands: Vec<LinkBand> = (0..links)
        .map(|j| {
            let xi = r.random_range(0.2..2.0);
            LinkBand {
                phi_hat: r.random_range(0.0..std::f64::consts::TAU),
                phi_tilde: r.random_range(0.0..0.35),
                xi_lo: xi,
                xi_hi: xi * r.random_range(1.0..1.5),
                var_index: j,
            }
        })
        .collect();
    let x = PowerAllocation::new((0..links).map(|_| r.random_range(0.1..2.0)).collect()).unwrap();
    (
        CoverCircle {
            center: [0.0, 0.0],
            delta: 0.0,
            links: bands,
            rnl: None,
        },
        x,
    )
}

/// Exhaustive minimum total power for a three-anchor single-agent scene:
/// sweep allocation directions over the simplex at the given step and use
/// the exact power-scaling law to size each direction.
pub fn brute_force_min_total_3(net: &WirelessNetwork, step_inv: usize) -> f64 {
    use netloc::fisher::{efim_wnl, speb};
    assert_eq!(net.num_anchors(), 3);
    assert_eq!(net.num_agents(), 1);
    let rho = net.requirements[0];
    let mut best = f64::INFINITY;
    for i in 0..=step_inv {
        for j in 0..=(step_inv - i) {
            let w1 = i as f64 / step_inv as f64;
            let w2 = j as f64 / step_inv as f64;
            let w3 = (1.0 - w1 - w2).max(0.0);
            let x = PowerAllocation::new(vec![w1, w2, w3]).unwrap();
            let p = speb(&efim_wnl(net, &x, 0).expect("validated")).expect("psd");
            if p.is_finite() {
                best = best.min(p / rho);
            }
        }
    }
    best
}

/// Prints one pass/fail line per acceptance criterion and re-raises failures.
pub fn criterion<F: FnOnce() + std::panic::UnwindSafe>(name: &str, body: F) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("ACCEPTANCE {name}: PASS"),
        Err(e) => {
            println!("ACCEPTANCE {name}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

/// Random feasible, bounded SOCP: cones are strictly satisfied at a hidden
/// interior point and a box keeps the feasible set compact.
pub fn random_feasible_socp(seed: u64) -> ConeProgram {
    let mut r = rng(seed);
    let n = r.random_range(2..=40usize);
    let cones = r.random_range(1..=30usize);
    let anchor: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let anchor_v = DVector::from_column_slice(&anchor);

    let mut soc = Vec::with_capacity(cones);
    for _ in 0..cones {
        let p = r.random_range(1..=4usize);
        let a = DMatrix::from_fn(p, n, |_, _| r.random_range(-1.0..1.0) / (n as f64).sqrt());
        let b = DVector::from_fn(p, |_, _| r.random_range(-1.0..1.0));
        let g = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0) / (n as f64).sqrt());
        let margin = r.random_range(0.1..1.0);
        let h = (&a * &anchor_v + &b).norm() - g.dot(&anchor_v) + margin;
        soc.push(SocConstraint { a, b, g, h });
    }

    // box: −10 ≤ v ≤ 10 (the anchor point lies inside)
    let mut lin = Vec::with_capacity(2 * n);
    for j in 0..n {
        let mut f = DVector::zeros(n);
        f[j] = 1.0;
        lin.push(LinearConstraint { f: f.clone(), e: 10.0 });
        f[j] = -1.0;
        lin.push(LinearConstraint { f, e: 10.0 });
    }

    let mut c = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
    let nc = c.norm();
    if nc > 0.0 {
        c /= nc;
    }
    ConeProgram::new(c, soc, lin, vec![]).unwrap()
}

/// Worst constraint violation and its index/kind (0 = soc, 1 = lin, 2 = mask).
fn max_violation(prog: &ConeProgram, v: &[f64]) -> (f64, usize, usize) {
    let vd = DVector::from_column_slice(v);
    let mut worst = f64::NEG_INFINITY;
    let mut kind = 0usize;
    let mut idx = 0usize;
    for (i, soc) in prog.soc_constraints.iter().enumerate() {
        let viol = (&soc.a * &vd + &soc.b).norm() - soc.g.dot(&vd) - soc.h;
        if viol > worst {
            worst = viol;
            kind = 0;
            idx = i;
        }
    }
    for (l, lin) in prog.linear_constraints.iter().enumerate() {
        let viol = lin.f.dot(&vd) - lin.e;
        if viol > worst {
            worst = viol;
            kind = 1;
            idx = l;
        }
    }
    for (m, &j) in prog.nonneg_mask.iter().enumerate() {
        if -v[j] > worst {
            worst = -v[j];
            kind = 2;
            idx = m;
        }
    }
    (worst, kind, idx)
}

fn violation_subgradient(prog: &ConeProgram, v: &[f64], kind: usize, idx: usize) -> Vec<f64> {
    match kind {
        0 => {
            let soc = &prog.soc_constraints[idx];
            let vd = DVector::from_column_slice(v);
            let tail = &soc.a * vd + &soc.b;
            let nrm = tail.norm().max(1e-300);
            let g = soc.a.transpose() * (tail / nrm) - &soc.g;
            g.as_slice().to_vec()
        }
        1 => prog.linear_constraints[idx].f.as_slice().to_vec(),
        _ => {
            let mut g = vec![0.0; v.len()];
            g[prog.nonneg_mask[idx]] = -1.0;
            g
        }
    }
}

/// Largest `θ ∈ [0, 1]` keeping `anchor + θ(v − anchor)` feasible, found by
/// bisection; returns the feasible point's objective.
fn bisect_to_feasible(prog: &ConeProgram, anchor: &[f64], v: &[f64]) -> f64 {
    let at = |theta: f64| -> Vec<f64> {
        anchor
            .iter()
            .zip(v)
            .map(|(a, b)| a + theta * (b - a))
            .collect()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if max_violation(prog, &at(1.0)).0 <= 0.0 {
        lo = 1.0;
    } else {
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if max_violation(prog, &at(mid)).0 <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let w = at(lo);
    prog.objective.iter().zip(&w).map(|(c, x)| c * x).sum()
}

/// Best feasible objective found by a projected subgradient method with an
/// adaptive Polyak target: objective steps at feasible iterates, violation
/// steps otherwise, the box projection after every step, and feasible
/// candidates extracted by bisecting toward a strictly interior anchor.
/// Entirely independent of the interior-point path.
pub fn subgradient_reference(prog: &ConeProgram, iters: usize) -> f64 {
    let n = prog.num_vars();
    let feas_tol = 1e-10;

    // strictly interior anchor by pure violation descent
    let mut anchor = vec![0.0f64; n];
    for _ in 0..100_000 {
        let (viol, kind, idx) = max_violation(prog, &anchor);
        if viol <= -0.05 {
            break;
        }
        let g = violation_subgradient(prog, &anchor, kind, idx);
        let gnorm2: f64 = g.iter().map(|x| x * x).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let step = (viol + 0.1) / gnorm2;
        for (aj, gj) in anchor.iter_mut().zip(&g) {
            *aj = (*aj - step * gj).clamp(-10.0, 10.0);
        }
    }

    // Polyak steps on the level composite F(v) = max(cᵀv − t, violation)
    // with target 0. Reaching F ≤ 0 certifies a feasible point below the
    // level t; the level then chases best − η with a two-sided margin η.
    let _ = feas_tol;
    let mut v = anchor.clone();
    let f_anchor: f64 = prog.objective.iter().zip(&anchor).map(|(c, x)| c * x).sum();
    let mut best = f_anchor;
    let mut eta = 0.5f64;
    let mut level = best - eta;
    let mut best_at_last_adapt = best;
    // momentum damps the zigzag across simultaneously active constraints
    let momentum = 0.65f64;
    let mut last_move = vec![0.0f64; n];

    for k in 0..iters {
        let (viol, kind, idx) = max_violation(prog, &v);
        let f: f64 = prog.objective.iter().zip(&v).map(|(c, x)| c * x).sum();
        let obj_gap = f - level;
        let composite = obj_gap.max(viol);
        if composite <= 0.0 {
            best = best.min(f);
            level = best - eta;
            continue;
        }
        let grad: Vec<f64> = if obj_gap >= viol {
            prog.objective.iter().copied().collect()
        } else {
            violation_subgradient(prog, &v, kind, idx)
        };
        let gnorm2: f64 = grad.iter().map(|x| x * x).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let step = composite / gnorm2;
        for ((vj, gj), mj) in v.iter_mut().zip(&grad).zip(last_move.iter_mut()) {
            *mj = momentum * *mj - step * gj;
            *vj = (*vj + *mj).clamp(-10.0, 10.0);
        }

        // candidates through the interior anchor keep best honest even when
        // the raw iterate hovers slightly infeasible
        if (k + 1) % 50 == 0 {
            let f_cand = bisect_to_feasible(prog, &anchor, &v);
            if f_cand < best {
                best = f_cand;
                level = best - eta;
            }
        }

        // two-sided margin adaptation: grow while levels keep being hit,
        // shrink when the chase stalls
        if (k + 1) % 2000 == 0 {
            if best > best_at_last_adapt - 0.25 * eta {
                eta = (eta * 0.5).max(1e-10);
            } else {
                eta = (eta * 2.0).min(0.5);
            }
            level = best - eta;
            best_at_last_adapt = best;
        }
    }
    best
}
