//! Cone program builders for the perfect-knowledge power allocation
//! problems: minimum total power for wireless and radar networks, the
//! min-max accuracy variant under a power budget, the prior-knowledge
//! variant, and the uniform-allocation baseline.
//!
//! The accuracy requirement `speb(x) ≤ ρ` is equivalent to the second-order
//! cone constraint `‖(cᵀy, sᵀy, 2/ρ)‖ ≤ 1ᵀy − 2/ρ` in `y = R x`, where `c`
//! and `s` collect cosines and sines of the doubled link angles. Builders
//! are total on well-formed networks: an unsatisfiable requirement shows up
//! as solver infeasibility, never as a build error.

use crate::conic::{ConeProgram, LinearConstraint, SocConstraint};
use crate::fisher::{efim_wnl, speb, Efim, SpebScene};
use crate::net::{PowerAllocation, RadarNetwork, WirelessNetwork};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("uniform baseline is infeasible: agent {0} has unbounded error at unit power")]
    InfeasibleBaseline(usize),
    #[error("total power budget must be positive, got {0}")]
    NonpositiveBudget(f64),
    #[error("prior information matrix is indefinite (min eigenvalue {0:.3e})")]
    IndefinitePrior(f64),
    #[error("prior has {got} blocks, expected {want}")]
    PriorShape { got: usize, want: usize },
}

/// Scene data of a nominal allocation problem, one entry per accuracy
/// requirement, plus the shared linear constraints.
#[derive(Debug, Clone)]
pub struct NominalProblem {
    pub scenes: Vec<SpebScene>,
    pub requirements: Vec<f64>,
    pub power_caps: Option<Vec<f64>>,
    pub n: usize,
}

impl NominalProblem {
    pub fn wnl(net: &WirelessNetwork) -> Self {
        let scenes = (0..net.num_agents())
            .map(|k| SpebScene::wnl(net, k))
            .collect();
        Self {
            scenes,
            requirements: net.requirements.clone(),
            power_caps: net.power_caps.clone(),
            n: net.num_anchors(),
        }
    }

    pub fn rnl(net: &RadarNetwork) -> Self {
        Self {
            scenes: vec![SpebScene::rnl(net)],
            requirements: vec![net.requirement],
            power_caps: net.power_caps.clone(),
            n: net.num_tx(),
        }
    }

    /// Minimum-total-power program: `min 1ᵀx` with one accuracy cone per
    /// scene, optional per-transmitter caps, and `x ⪰ 0`.
    pub fn to_cone_program(&self) -> ConeProgram {
        let n = self.n;
        let mut cones = Vec::with_capacity(self.scenes.len());
        for (scene, &rho) in self.scenes.iter().zip(&self.requirements) {
            cones.push(requirement_cone(scene, rho));
        }
        let lin = cap_rows(&self.power_caps, n, n);
        ConeProgram::new(
            DVector::from_element(n, 1.0),
            cones,
            lin,
            (0..n).collect(),
        )
        .expect("well-formed by construction")
    }
}

/// Aggregates a scene into the per-transmitter cosine/sine/weight sums that
/// parameterize its accuracy cone.
fn scene_sums(scene: &SpebScene) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = scene.n_vars;
    let mut cos_row = vec![0.0; n];
    let mut sin_row = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for (l, (&phi, &xi)) in scene.angles.iter().zip(&scene.ercs).enumerate() {
        let col = l % n;
        cos_row[col] += xi * (2.0 * phi).cos();
        sin_row[col] += xi * (2.0 * phi).sin();
        weight[col] += xi;
    }
    (cos_row, sin_row, weight)
}

fn requirement_cone(scene: &SpebScene, rho: f64) -> SocConstraint {
    let n = scene.n_vars;
    let (cos_row, sin_row, weight) = scene_sums(scene);
    let mut a = DMatrix::zeros(3, n);
    for j in 0..n {
        a[(0, j)] = cos_row[j];
        a[(1, j)] = sin_row[j];
    }
    let inv = 2.0 / rho;
    SocConstraint {
        a,
        b: DVector::from_column_slice(&[0.0, 0.0, inv]),
        g: DVector::from_column_slice(&weight),
        h: -inv,
    }
}

fn cap_rows(caps: &Option<Vec<f64>>, n: usize, decision_len: usize) -> Vec<LinearConstraint> {
    let mut lin = Vec::new();
    if let Some(caps) = caps {
        for (j, &cap) in caps.iter().enumerate().take(n) {
            let mut f = DVector::zeros(decision_len);
            f[j] = 1.0;
            lin.push(LinearConstraint { f, e: cap });
        }
    }
    lin
}

/// Minimum total transmit power meeting every agent's requirement.
pub fn build_min_power_wnl(net: &WirelessNetwork) -> ConeProgram {
    NominalProblem::wnl(net).to_cone_program()
}

/// Minimum total transmit power meeting the target requirement.
pub fn build_min_power_rnl(net: &RadarNetwork) -> ConeProgram {
    NominalProblem::rnl(net).to_cone_program()
}

/// Uniform-allocation baseline: the smallest `t` such that `x = t·1` meets
/// every requirement. Exact by the power-scaling property of the bound.
pub fn uniform_min_power_wnl(
    net: &WirelessNetwork,
) -> Result<(f64, PowerAllocation), AllocError> {
    let ones = PowerAllocation::uniform(1.0, net.num_anchors());
    let mut t = 0.0f64;
    for k in 0..net.num_agents() {
        let p = speb(&efim_wnl(net, &ones, k).expect("validated")).expect("psd by construction");
        if !p.is_finite() {
            return Err(AllocError::InfeasibleBaseline(k));
        }
        t = t.max(p / net.requirements[k]);
    }
    Ok((t, PowerAllocation::uniform(t, net.num_anchors())))
}

/// Radar counterpart of [`uniform_min_power_wnl`].
pub fn uniform_min_power_rnl(net: &RadarNetwork) -> Result<(f64, PowerAllocation), AllocError> {
    let ones = PowerAllocation::uniform(1.0, net.num_tx());
    let p = speb(&crate::fisher::efim_rnl(net, &ones).expect("validated"))
        .expect("psd by construction");
    if !p.is_finite() {
        return Err(AllocError::InfeasibleBaseline(0));
    }
    let t = p / net.requirement;
    Ok((t, PowerAllocation::uniform(t, net.num_tx())))
}

/// Best worst-case accuracy under a total power budget. The decision vector
/// is `(x, ρ)` with the objective maximizing `ρ`; at the optimum the worst
/// agent error equals `1/ρ*`.
pub fn build_minmax_wnl(net: &WirelessNetwork, p_tot: f64) -> Result<ConeProgram, AllocError> {
    if p_tot <= 0.0 {
        return Err(AllocError::NonpositiveBudget(p_tot));
    }
    let nb = net.num_anchors();
    let n = nb + 1;
    let mut cones = Vec::with_capacity(net.num_agents());
    for k in 0..net.num_agents() {
        let scene = SpebScene::wnl(net, k);
        let (cos_row, sin_row, weight) = scene_sums(&scene);
        let mut a = DMatrix::zeros(3, n);
        for j in 0..nb {
            a[(0, j)] = cos_row[j];
            a[(1, j)] = sin_row[j];
        }
        a[(2, nb)] = 2.0;
        let mut g = DVector::zeros(n);
        for j in 0..nb {
            g[j] = weight[j];
        }
        g[nb] = -2.0;
        cones.push(SocConstraint {
            a,
            b: DVector::zeros(3),
            g,
            h: 0.0,
        });
    }
    let mut lin = cap_rows(&net.power_caps, nb, n);
    let mut budget = DVector::zeros(n);
    for j in 0..nb {
        budget[j] = 1.0;
    }
    lin.push(LinearConstraint { f: budget, e: p_tot });
    let mut objective = DVector::zeros(n);
    objective[nb] = -1.0;
    Ok(ConeProgram::new(objective, cones, lin, (0..n).collect())
        .expect("well-formed by construction"))
}

/// Per-agent prior position information `J₀` and per-link expected
/// information matrices `J_kj` (all 2×2 PSD, supplied by the caller).
#[derive(Debug, Clone)]
pub struct PriorInfo {
    pub j0: Vec<Efim>,
    pub jkj: Vec<Vec<Efim>>,
}

/// Trace, doubled-angle cosine and sine components of a PSD matrix through
/// its eigendecomposition, with eigenvalues clamped at zero within the PSD
/// tolerance.
fn prior_components(m: &Efim) -> Result<(f64, f64, f64), AllocError> {
    let (mu1, mu2, theta) = m.eigen_pairs();
    let scale = mu1.abs().max(1.0);
    if mu2 < -1e-12 * scale {
        return Err(AllocError::IndefinitePrior(mu2));
    }
    let mu1 = mu1.max(0.0);
    let mu2 = mu2.max(0.0);
    let diff = mu1 - mu2;
    Ok((
        mu1 + mu2,
        diff * (2.0 * theta).cos(),
        diff * (2.0 * theta).sin(),
    ))
}

/// Minimum-power program with prior knowledge. The prior enters the cone of
/// agent `k` as affine offsets: with per-anchor components
/// `(w_j, p_j, q_j)` of `J_kj` and `(w₀, p₀, q₀)` of `J₀`, the constraint is
/// `‖(pᵀx + p₀, qᵀx + q₀, 2/ρ)‖ ≤ wᵀx + w₀ − 2/ρ`. With `tr J₀⁻¹ ≤ ρ` the
/// zero allocation is feasible and no transmit power is needed.
pub fn build_min_power_prior_wnl(
    net: &WirelessNetwork,
    prior: &PriorInfo,
) -> Result<ConeProgram, AllocError> {
    let (na, nb) = (net.num_agents(), net.num_anchors());
    if prior.j0.len() != na || prior.jkj.len() != na {
        return Err(AllocError::PriorShape {
            got: prior.j0.len().min(prior.jkj.len()),
            want: na,
        });
    }
    let mut cones = Vec::with_capacity(na);
    for k in 0..na {
        if prior.jkj[k].len() != nb {
            return Err(AllocError::PriorShape {
                got: prior.jkj[k].len(),
                want: nb,
            });
        }
        let (w0, p0, q0) = prior_components(&prior.j0[k])?;
        let mut a = DMatrix::zeros(3, nb);
        let mut g = DVector::zeros(nb);
        for j in 0..nb {
            let (w, p, q) = prior_components(&prior.jkj[k][j])?;
            a[(0, j)] = p;
            a[(1, j)] = q;
            g[j] = w;
        }
        let inv = 2.0 / net.requirements[k];
        cones.push(SocConstraint {
            a,
            b: DVector::from_column_slice(&[p0, q0, inv]),
            g,
            h: w0 - inv,
        });
    }
    let lin = cap_rows(&net.power_caps, nb, nb);
    Ok(ConeProgram::new(
        DVector::from_element(nb, 1.0),
        cones,
        lin,
        (0..nb).collect(),
    )
    .expect("well-formed by construction"))
}
