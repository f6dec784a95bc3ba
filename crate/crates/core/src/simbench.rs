//! Seeded Monte-Carlo scenario generation and benchmark sweeps.
//!
//! Scenarios draw node positions uniformly over a `D × D` region and ranging
//! coefficients from a Rayleigh distribution parameterized by its mean. The
//! generator is a counter-based stream cipher with one substream per trial,
//! so sweeps are reproducible regardless of execution order. Reports carry
//! one row per (trial, algorithm) and export to CSV with fixed headers and
//! 17-significant-digit floats; wall times stay in memory so identical
//! inputs produce identical bytes.

use crate::allocate::{
    build_min_power_rnl, build_min_power_wnl, uniform_min_power_rnl, uniform_min_power_wnl,
};
use crate::conic::{Solution, SolveStatus};
use crate::fisher::{efim_rnl, efim_wnl, speb};
use crate::net::{PowerAllocation, RadarNetwork, WirelessNetwork};
use crate::robust::{
    build_robust_socp_asymptotic_rnl, build_robust_socp_asymptotic_wnl,
    build_robust_socp_efficient_rnl, build_robust_socp_efficient_wnl, single_circle_cover_rnl,
    single_circle_cover_wnl, worst_case_speb_region, BoundVariant, UncertaintyCover,
    DEFAULT_ORACLE_GRID,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("unknown algorithm id '{0}'")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Wireless { anchors: usize, agents: usize },
    Radar { tx: usize, rx: usize },
}

/// Scenario parameters: region size, node counts, loss exponent, Rayleigh
/// mean of the ranging coefficients, accuracy requirement, normalized
/// uncertainty set size `ε = 2Δ/D`, and the base seed.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioSpec {
    pub region: f64,
    pub kind: ScenarioKind,
    pub beta: f64,
    pub mu_zeta: f64,
    pub rho: f64,
    pub nuss: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn wnl(anchors: usize, agents: usize, seed: u64) -> Self {
        Self {
            region: 100.0,
            kind: ScenarioKind::Wireless { anchors, agents },
            beta: 1.0,
            mu_zeta: 1.0,
            rho: 1.0,
            nuss: 0.0,
            seed,
        }
    }

    pub fn rnl(tx: usize, rx: usize, seed: u64) -> Self {
        Self {
            region: 100.0,
            kind: ScenarioKind::Radar { tx, rx },
            beta: 1.0,
            mu_zeta: 1.0,
            rho: 1.0,
            nuss: 0.0,
            seed,
        }
    }

    pub fn with_nuss(mut self, nuss: f64) -> Self {
        self.nuss = nuss;
        self
    }

    pub fn delta(&self) -> f64 {
        self.nuss * self.region / 2.0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.region > 0.0) {
            return Err(SimError::InvalidScenario("region size must be positive"));
        }
        if !(self.mu_zeta > 0.0) {
            return Err(SimError::InvalidScenario(
                "coefficient mean must be positive",
            ));
        }
        if !(self.rho > 0.0) {
            return Err(SimError::InvalidScenario("requirement must be positive"));
        }
        if !(0.0..1.0).contains(&self.nuss) {
            return Err(SimError::InvalidScenario("nuss must lie in [0, 1)"));
        }
        if !(self.beta > 0.0) {
            return Err(SimError::InvalidScenario("loss exponent must be positive"));
        }
        match self.kind {
            ScenarioKind::Wireless { anchors, agents } => {
                if anchors == 0 || agents == 0 {
                    return Err(SimError::InvalidScenario("counts must be at least one"));
                }
            }
            ScenarioKind::Radar { tx, rx } => {
                if tx == 0 || rx == 0 {
                    return Err(SimError::InvalidScenario("counts must be at least one"));
                }
            }
        }
        Ok(())
    }

    /// Factor turning raw total power into the normalized figure:
    /// `μ_ζ/D^(2β)` for one-way links, `μ_ζ/D^(4β)` for two-way paths.
    pub fn power_normalizer(&self) -> f64 {
        match self.kind {
            ScenarioKind::Wireless { .. } => self.mu_zeta / self.region.powf(2.0 * self.beta),
            ScenarioKind::Radar { .. } => self.mu_zeta / self.region.powf(4.0 * self.beta),
        }
    }
}

#[derive(Debug, Clone)]
pub enum GeneratedNetwork {
    Wireless(WirelessNetwork),
    Radar(RadarNetwork),
}

fn rayleigh(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let sigma = mean * (2.0 / std::f64::consts::PI).sqrt();
    let u: f64 = rng.random();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

fn uniform_point(rng: &mut ChaCha8Rng, d: f64) -> [f64; 2] {
    [rng.random::<f64>() * d, rng.random::<f64>() * d]
}

/// Draws the scenario of one trial substream. Position configurations where
/// some nominal link distance falls below `Δ + 0.01·D` are rejected and
/// redrawn so cover circles never swallow a transmitter.
pub fn generate_stream(spec: &ScenarioSpec, stream: u64) -> Result<GeneratedNetwork, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let d = spec.region;
    let min_dist = spec.delta() + 0.01 * d;
    match spec.kind {
        ScenarioKind::Wireless { anchors, agents } => {
            let (anchor_pos, agent_pos) = loop {
                let a: Vec<[f64; 2]> = (0..anchors).map(|_| uniform_point(&mut rng, d)).collect();
                let g: Vec<[f64; 2]> = (0..agents).map(|_| uniform_point(&mut rng, d)).collect();
                let ok = g
                    .iter()
                    .all(|p| a.iter().all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) >= min_dist));
                if ok {
                    break (a, g);
                }
            };
            let rc = DMatrix::from_fn(agents, anchors, |_, _| rayleigh(&mut rng, spec.mu_zeta));
            let net = WirelessNetwork::new(
                anchor_pos,
                agent_pos,
                rc,
                spec.beta,
                None,
                vec![spec.rho; agents],
            )
            .expect("generator respects network invariants");
            Ok(GeneratedNetwork::Wireless(net))
        }
        ScenarioKind::Radar { tx, rx } => {
            let (tx_pos, rx_pos, target) = loop {
                let t: Vec<[f64; 2]> = (0..tx).map(|_| uniform_point(&mut rng, d)).collect();
                let r: Vec<[f64; 2]> = (0..rx).map(|_| uniform_point(&mut rng, d)).collect();
                let p0 = uniform_point(&mut rng, d);
                let ok = t
                    .iter()
                    .chain(r.iter())
                    .all(|q| (p0[0] - q[0]).hypot(p0[1] - q[1]) >= min_dist);
                if ok {
                    break (t, r, p0);
                }
            };
            let rc = DMatrix::from_fn(rx, tx, |_, _| rayleigh(&mut rng, spec.mu_zeta));
            let net = RadarNetwork::new(tx_pos, rx_pos, target, rc, spec.beta, None, spec.rho)
                .expect("generator respects network invariants");
            Ok(GeneratedNetwork::Radar(net))
        }
    }
}

/// First substream of the scenario's seed.
pub fn generate(spec: &ScenarioSpec) -> Result<GeneratedNetwork, SimError> {
    generate_stream(spec, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmId {
    NominalSocp,
    Uniform,
    RobustAsymUpper(usize),
    RobustAsymLower(usize),
    RobustEfficient,
    NonrobustUnderUncertainty,
}

impl AlgorithmId {
    pub fn needs_cover(&self) -> bool {
        !matches!(self, AlgorithmId::NominalSocp | AlgorithmId::Uniform)
    }

    pub fn parse(s: &str) -> Result<Self, SimError> {
        let take_m = |s: &str, prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?
                .parse()
                .ok()
        };
        match s {
            "nominal-socp" => Ok(AlgorithmId::NominalSocp),
            "uniform" => Ok(AlgorithmId::Uniform),
            "robust-efficient" => Ok(AlgorithmId::RobustEfficient),
            "nonrobust-under-uncertainty" => Ok(AlgorithmId::NonrobustUnderUncertainty),
            other => {
                if let Some(m) = take_m(other, "robust-asym-upper") {
                    Ok(AlgorithmId::RobustAsymUpper(m))
                } else if let Some(m) = take_m(other, "robust-asym-lower") {
                    Ok(AlgorithmId::RobustAsymLower(m))
                } else {
                    Err(SimError::UnknownAlgorithm(other.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmId::NominalSocp => write!(f, "nominal-socp"),
            AlgorithmId::Uniform => write!(f, "uniform"),
            AlgorithmId::RobustAsymUpper(m) => write!(f, "robust-asym-upper({m})"),
            AlgorithmId::RobustAsymLower(m) => write!(f, "robust-asym-lower({m})"),
            AlgorithmId::RobustEfficient => write!(f, "robust-efficient"),
            AlgorithmId::NonrobustUnderUncertainty => write!(f, "nonrobust-under-uncertainty"),
        }
    }
}

/// One solved (trial, algorithm) cell. For robust algorithms and the
/// nonrobust-under-uncertainty row, `speb_per_agent` holds worst-case values
/// from the oracle at the returned allocation; otherwise nominal values.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub spec: ScenarioSpec,
    pub algorithm: AlgorithmId,
    pub trial: u64,
    pub status: SolveStatus,
    pub total_power: f64,
    pub normalized_power: f64,
    pub speb_per_agent: Vec<f64>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Fixed-header CSV: scenario columns, then metric columns. Per-agent
    /// values are semicolon-joined. Timing is deliberately not exported so
    /// identical inputs serialize to identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "kind,region,count_a,count_b,beta,mu_zeta,rho,nuss,seed,trial,algorithm,status,total_power,normalized_power,max_speb,speb_per_agent\n",
        );
        for row in &self.rows {
            let (kind, ca, cb) = match row.spec.kind {
                ScenarioKind::Wireless { anchors, agents } => ("wnl", anchors, agents),
                ScenarioKind::Radar { tx, rx } => ("rnl", tx, rx),
            };
            let max_speb = row
                .speb_per_agent
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let per_agent = row
                .speb_per_agent
                .iter()
                .map(|v| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{kind},{},{ca},{cb},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(row.spec.region),
                fmt_f64(row.spec.beta),
                fmt_f64(row.spec.mu_zeta),
                fmt_f64(row.spec.rho),
                fmt_f64(row.spec.nuss),
                row.spec.seed,
                row.trial,
                row.algorithm,
                row.status.as_str(),
                fmt_f64(row.total_power),
                fmt_f64(row.normalized_power),
                fmt_f64(max_speb),
                per_agent,
            ));
        }
        out
    }

    /// Median normalized power of one algorithm across finished trials.
    pub fn median_normalized_power(&self, algorithm: AlgorithmId) -> Option<f64> {
        let mut vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.status == SolveStatus::Optimal)
            .map(|r| r.normalized_power)
            .collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(vals[vals.len() / 2])
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn failed_row(
    spec: &ScenarioSpec,
    algorithm: AlgorithmId,
    trial: u64,
    status: SolveStatus,
    agents: usize,
    wall_time: Duration,
) -> SweepRow {
    SweepRow {
        spec: *spec,
        algorithm,
        trial,
        status,
        total_power: f64::NAN,
        normalized_power: f64::NAN,
        speb_per_agent: vec![f64::NAN; agents],
        wall_time,
    }
}

fn nominal_spebs(net: &GeneratedNetwork, x: &PowerAllocation) -> Vec<f64> {
    match net {
        GeneratedNetwork::Wireless(w) => (0..w.num_agents())
            .map(|k| speb(&efim_wnl(w, x, k).expect("validated")).expect("psd"))
            .collect(),
        GeneratedNetwork::Radar(r) => {
            vec![speb(&efim_rnl(r, x).expect("validated")).expect("psd")]
        }
    }
}

fn oracle_spebs(cover: &UncertaintyCover, x: &PowerAllocation) -> Vec<f64> {
    cover
        .regions
        .iter()
        .map(|region| worst_case_speb_region(region, x, DEFAULT_ORACLE_GRID))
        .collect()
}

/// Runs every algorithm on every trial of every scenario, one network per
/// (scenario, trial) substream. Solver failures are recorded in rows and
/// never abort the sweep.
pub fn run_sweep(
    specs: &[ScenarioSpec],
    algorithms: &[AlgorithmId],
    trials: u64,
) -> Result<SweepReport, SimError> {
    let mut rows = Vec::with_capacity(specs.len() * algorithms.len() * trials as usize);
    for spec in specs {
        spec.validate()?;
        let need_cover = algorithms.iter().any(|a| a.needs_cover());
        for trial in 0..trials {
            let net = generate_stream(spec, trial)?;
            let agents = match &net {
                GeneratedNetwork::Wireless(w) => w.num_agents(),
                GeneratedNetwork::Radar(_) => 1,
            };
            let cover = if need_cover {
                let delta = spec.delta();
                let built = match &net {
                    GeneratedNetwork::Wireless(w) => single_circle_cover_wnl(w, delta),
                    GeneratedNetwork::Radar(r) => single_circle_cover_rnl(r, delta),
                };
                built.ok()
            } else {
                None
            };
            for &algorithm in algorithms {
                let start = Instant::now();
                let row = run_cell(spec, &net, cover.as_ref(), algorithm, trial, agents, start);
                rows.push(row);
            }
        }
    }
    Ok(SweepReport { rows })
}

fn run_cell(
    spec: &ScenarioSpec,
    net: &GeneratedNetwork,
    cover: Option<&UncertaintyCover>,
    algorithm: AlgorithmId,
    trial: u64,
    agents: usize,
    start: Instant,
) -> SweepRow {
    let norm = spec.power_normalizer();
    let finish = |x: PowerAllocation, sol_status: SolveStatus, spebs: Vec<f64>| SweepRow {
        spec: *spec,
        algorithm,
        trial,
        status: sol_status,
        total_power: x.total(),
        normalized_power: norm * x.total(),
        speb_per_agent: spebs,
        wall_time: start.elapsed(),
    };
    let solved = |sol: &Solution| PowerAllocation {
        x: sol.v.iter().map(|v| v.max(0.0)).collect(),
    };

    match algorithm {
        AlgorithmId::NominalSocp => {
            let sol = match net {
                GeneratedNetwork::Wireless(w) => build_min_power_wnl(w).solve(),
                GeneratedNetwork::Radar(r) => build_min_power_rnl(r).solve(),
            };
            if sol.status != SolveStatus::Optimal {
                return failed_row(spec, algorithm, trial, sol.status, agents, start.elapsed());
            }
            let x = solved(&sol);
            let spebs = nominal_spebs(net, &x);
            finish(x, sol.status, spebs)
        }
        AlgorithmId::Uniform => {
            let uniform = match net {
                GeneratedNetwork::Wireless(w) => uniform_min_power_wnl(w),
                GeneratedNetwork::Radar(r) => uniform_min_power_rnl(r),
            };
            match uniform {
                Ok((_, x)) => {
                    let spebs = nominal_spebs(net, &x);
                    finish(x, SolveStatus::Optimal, spebs)
                }
                Err(_) => failed_row(
                    spec,
                    algorithm,
                    trial,
                    SolveStatus::PrimalInfeasible,
                    agents,
                    start.elapsed(),
                ),
            }
        }
        AlgorithmId::RobustAsymUpper(m) | AlgorithmId::RobustAsymLower(m) => {
            let Some(cover) = cover else {
                return failed_row(
                    spec,
                    algorithm,
                    trial,
                    SolveStatus::NumericalFailure,
                    agents,
                    start.elapsed(),
                );
            };
            let variant = if matches!(algorithm, AlgorithmId::RobustAsymUpper(_)) {
                BoundVariant::Upper
            } else {
                BoundVariant::Lower
            };
            let built = match net {
                GeneratedNetwork::Wireless(w) => {
                    build_robust_socp_asymptotic_wnl(w, cover, m, variant)
                }
                GeneratedNetwork::Radar(r) => build_robust_socp_asymptotic_rnl(r, cover, m, variant),
            };
            match built {
                Ok(prog) => {
                    let sol = prog.solve();
                    if sol.status != SolveStatus::Optimal {
                        return failed_row(
                            spec,
                            algorithm,
                            trial,
                            sol.status,
                            agents,
                            start.elapsed(),
                        );
                    }
                    let x = solved(&sol);
                    let spebs = oracle_spebs(cover, &x);
                    finish(x, sol.status, spebs)
                }
                Err(_) => failed_row(
                    spec,
                    algorithm,
                    trial,
                    SolveStatus::NumericalFailure,
                    agents,
                    start.elapsed(),
                ),
            }
        }
        AlgorithmId::RobustEfficient => {
            let Some(cover) = cover else {
                return failed_row(
                    spec,
                    algorithm,
                    trial,
                    SolveStatus::NumericalFailure,
                    agents,
                    start.elapsed(),
                );
            };
            let built = match net {
                GeneratedNetwork::Wireless(w) => build_robust_socp_efficient_wnl(w, cover),
                GeneratedNetwork::Radar(r) => {
                    build_robust_socp_efficient_rnl(r, cover).map(|b| b.program)
                }
            };
            match built {
                Ok(prog) => {
                    let sol = prog.solve();
                    if sol.status != SolveStatus::Optimal {
                        return failed_row(
                            spec,
                            algorithm,
                            trial,
                            sol.status,
                            agents,
                            start.elapsed(),
                        );
                    }
                    let x = solved(&sol);
                    let spebs = oracle_spebs(cover, &x);
                    finish(x, sol.status, spebs)
                }
                Err(_) => failed_row(
                    spec,
                    algorithm,
                    trial,
                    SolveStatus::NumericalFailure,
                    agents,
                    start.elapsed(),
                ),
            }
        }
        AlgorithmId::NonrobustUnderUncertainty => {
            let Some(cover) = cover else {
                return failed_row(
                    spec,
                    algorithm,
                    trial,
                    SolveStatus::NumericalFailure,
                    agents,
                    start.elapsed(),
                );
            };
            let sol = match net {
                GeneratedNetwork::Wireless(w) => build_min_power_wnl(w).solve(),
                GeneratedNetwork::Radar(r) => build_min_power_rnl(r).solve(),
            };
            if sol.status != SolveStatus::Optimal {
                return failed_row(spec, algorithm, trial, sol.status, agents, start.elapsed());
            }
            let x = solved(&sol);
            let spebs = oracle_spebs(cover, &x);
            finish(x, sol.status, spebs)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ViolationReport {
    pub worst_speb: f64,
    pub violated: bool,
}

/// Oracle worst-case error of an allocation under the cover, with a
/// per-agent violation flag against the requirement. The flag carries a tiny
/// relative slack so an allocation sitting exactly on an active requirement
/// is not flagged for solver rounding.
pub fn evaluate_violation(
    net: &WirelessNetwork,
    cover: &UncertaintyCover,
    x: &PowerAllocation,
) -> Vec<ViolationReport> {
    cover
        .regions
        .iter()
        .zip(&net.requirements)
        .map(|(region, &rho)| {
            let worst = worst_case_speb_region(region, x, DEFAULT_ORACLE_GRID);
            ViolationReport {
                worst_speb: worst,
                violated: worst > rho * (1.0 + crate::robust::VIOLATION_SLACK),
            }
        })
        .collect()
}
