//! Command-line front door: load a network description, run nominal or
//! robust power allocation, evaluate worst-case oracles, validate
//! allocations, and drive Monte-Carlo sweeps.
//!
//! Exit codes: 0 on success, 1 on usage/config/solver-failure errors, 2 when
//! the requested program is infeasible (sweep scripts branch on it).

use clap::{Args, Parser, Subcommand, ValueEnum};
use netloc::allocate::{
    build_min_power_rnl, build_min_power_wnl, build_minmax_wnl, uniform_min_power_rnl,
    uniform_min_power_wnl,
};
use netloc::config::{load_network, LoadedConfig, LoadedNetwork};
use netloc::conic::{check_kkt, ConeProgram, Solution};
use netloc::fisher::{efim_rnl, efim_wnl, speb};
use netloc::robust::{
    build_robust_socp_asymptotic_rnl, build_robust_socp_asymptotic_wnl,
    build_robust_socp_efficient_rnl, build_robust_socp_efficient_wnl, check_bound_validity,
    BoundVariant, UncertaintyCover, DEFAULT_ORACLE_GRID,
};
use netloc::simbench::{
    evaluate_violation, run_sweep, AlgorithmId, ScenarioKind, ScenarioSpec,
};
use netloc::{PowerAllocation, SolveStatus};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "netloc",
    version,
    about = "Localization error bounds and power allocation for wireless and radar networks"
)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Upper,
    Lower,
    Efficient,
}

#[derive(Args)]
struct CommonSolve {
    /// Network description file
    #[arg(long)]
    net: PathBuf,
    /// Solver tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Override the accuracy requirement (all agents / the target)
    #[arg(long)]
    requirement: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Mode {
    /// Minimum total power under nominal (perfect) network knowledge
    Solve {
        #[command(flatten)]
        common: CommonSolve,
    },
    /// Minimum total power with the accuracy requirement guaranteed over the
    /// uncertainty set
    RobustSolve {
        #[command(flatten)]
        common: CommonSolve,
        /// Normalized uncertainty set size ε = 2Δ/D (Δ = ε·D/2 with D the
        /// largest pairwise extent of the network)
        #[arg(long)]
        nuss: Option<f64>,
        /// Explicit cover radius Δ in meters (overrides --nuss)
        #[arg(long)]
        delta: Option<f64>,
        /// Relaxation: the M-point upper/lower programs or the fixed
        /// four-cone one
        #[arg(long, value_enum, default_value = "efficient")]
        variant: Variant,
        /// Relaxation order for the upper/lower variants
        #[arg(long = "M", default_value_t = 64)]
        m: usize,
    },
    /// Best worst-case accuracy under a total power budget
    Minmax {
        #[command(flatten)]
        common: CommonSolve,
        /// Total power budget
        #[arg(long)]
        ptot: f64,
    },
    /// Worst-case error of a given allocation over the uncertainty set
    Oracle {
        #[command(flatten)]
        common: CommonSolve,
        #[arg(long)]
        nuss: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Allocation: `uniform` or comma-separated powers
        #[arg(long, default_value = "uniform")]
        x: String,
    },
    /// Nominal per-agent error report of a given allocation
    Validate {
        #[command(flatten)]
        common: CommonSolve,
        /// Allocation: `uniform` or comma-separated powers
        #[arg(long, default_value = "uniform")]
        x: String,
    },
    /// Seeded Monte-Carlo sweep over random scenarios
    Sweep {
        /// Network class
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Anchor count (wnl) or transmit antenna count (rnl)
        #[arg(long)]
        count_a: usize,
        /// Agent count (wnl) or receive antenna count (rnl)
        #[arg(long)]
        count_b: usize,
        #[arg(long, default_value_t = 100.0)]
        region: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        mu_zeta: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        nuss: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Comma-separated algorithm ids; bare robust-asym ids take --M
        #[arg(long, default_value = "nominal-socp,uniform")]
        algos: String,
        #[arg(long = "M", default_value_t = 64)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Wnl,
    Rnl,
}

#[derive(Serialize)]
struct ResidualsOut {
    primal: f64,
    dual: f64,
    gap: f64,
}

#[derive(Serialize)]
struct KktOut {
    primal: f64,
    dual: f64,
    dual_cone: f64,
    complementarity: f64,
    passed: bool,
}

#[derive(Serialize)]
struct ValidityOut {
    b_value: f64,
    min_m: usize,
    valid: bool,
}

#[derive(Serialize)]
struct SolveOut {
    mode: String,
    status: String,
    objective_value: f64,
    total_power: f64,
    allocation: Vec<f64>,
    iterations: usize,
    residuals: ResidualsOut,
    kkt: KktOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_agent_speb: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_worst_speb: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validity: Option<Vec<ValidityOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy_level: Option<f64>,
}

#[derive(Serialize)]
struct OracleOut {
    mode: String,
    allocation: Vec<f64>,
    worst_speb: Vec<f64>,
    requirement: Vec<f64>,
    violated: Vec<bool>,
}

#[derive(Serialize)]
struct ValidateOut {
    mode: String,
    allocation: Vec<f64>,
    speb: Vec<f64>,
    requirement: Vec<f64>,
    satisfied: Vec<bool>,
}

enum CliError {
    Usage(String),
    Infeasible,
}

impl From<netloc::config::ConfigError> for CliError {
    fn from(e: netloc::config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<netloc::robust::RobustError> for CliError {
    fn from(e: netloc::robust::RobustError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<netloc::allocate::AllocError> for CliError {
    fn from(e: netloc::allocate::AllocError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<netloc::simbench::SimError> for CliError {
    fn from(e: netloc::simbench::SimError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version through the same channel
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Infeasible) => {
            eprintln!("program is infeasible under the given requirement and caps");
            ExitCode::from(2)
        }
    }
}

fn load(common: &CommonSolve) -> Result<LoadedConfig, CliError> {
    let mut loaded = load_network(&common.net)?;
    if let Some(rho) = common.requirement {
        if rho <= 0.0 {
            return Err(CliError::Usage("requirement must be positive".into()));
        }
        match &mut loaded.network {
            LoadedNetwork::Wireless(net) => {
                net.requirements = vec![rho; net.num_agents()];
            }
            LoadedNetwork::Radar(net) => net.requirement = rho,
        }
    }
    Ok(loaded)
}

/// Largest pairwise coordinate extent; the reference length `D` for
/// translating a normalized uncertainty size into a radius.
fn network_extent(net: &LoadedNetwork) -> f64 {
    let points: Vec<[f64; 2]> = match net {
        LoadedNetwork::Wireless(n) => n
            .anchor_positions
            .iter()
            .chain(n.agent_positions.iter())
            .copied()
            .collect(),
        LoadedNetwork::Radar(n) => n
            .tx_positions
            .iter()
            .chain(n.rx_positions.iter())
            .chain(std::iter::once(&n.target_position))
            .copied()
            .collect(),
    };
    let mut d = 0.0f64;
    for a in &points {
        for b in &points {
            d = d.max((a[0] - b[0]).abs().max((a[1] - b[1]).abs()));
        }
    }
    d
}

fn cover_for(
    loaded: &LoadedConfig,
    nuss: Option<f64>,
    delta: Option<f64>,
) -> Result<UncertaintyCover, CliError> {
    let delta = match (delta, nuss) {
        (Some(d), _) => Some(d),
        (None, Some(e)) => Some(e * network_extent(&loaded.network) / 2.0),
        (None, None) => None,
    };
    Ok(loaded.build_cover(delta)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn allocation_csv(sol: &Solution) -> String {
    let mut s = String::from("index,power\n");
    for (j, v) in sol.v.iter().enumerate() {
        s.push_str(&format!("{j},{v:.16e}\n"));
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn finish_solve(
    prog: &ConeProgram,
    sol: Solution,
    mode: &str,
    n_power: usize,
    loaded: Option<&LoadedConfig>,
    oracle: Option<(Vec<f64>, Vec<ValidityOut>)>,
    accuracy_level: Option<f64>,
    common: &CommonSolve,
) -> Result<(), CliError> {
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible | SolveStatus::DualInfeasible => {
            return Err(CliError::Infeasible)
        }
        SolveStatus::MaxIterations | SolveStatus::NumericalFailure => {
            return Err(CliError::Usage(format!(
                "solver did not converge (status {})",
                sol.status.as_str()
            )))
        }
    }
    let report = check_kkt(prog, &sol, common.tol);
    let allocation: Vec<f64> = sol.v[..n_power].iter().map(|v| v.max(0.0)).collect();
    let per_agent = loaded.map(|l| match &l.network {
        LoadedNetwork::Wireless(net) => {
            let x = PowerAllocation {
                x: allocation.clone(),
            };
            (0..net.num_agents())
                .map(|k| speb(&efim_wnl(net, &x, k).expect("validated")).expect("psd"))
                .collect::<Vec<f64>>()
        }
        LoadedNetwork::Radar(net) => {
            let x = PowerAllocation {
                x: allocation.clone(),
            };
            vec![speb(&efim_rnl(net, &x).expect("validated")).expect("psd")]
        }
    });
    let (oracle_worst, validity) = match oracle {
        Some((w, v)) => (Some(w), Some(v)),
        None => (None, None),
    };
    let payload = SolveOut {
        mode: mode.into(),
        status: sol.status.as_str().into(),
        objective_value: sol.objective_value,
        total_power: allocation.iter().sum(),
        allocation,
        iterations: sol.iterations,
        residuals: ResidualsOut {
            primal: sol.residuals.primal,
            dual: sol.residuals.dual,
            gap: sol.residuals.gap,
        },
        kkt: KktOut {
            primal: report.primal,
            dual: report.dual,
            dual_cone: report.dual_cone,
            complementarity: report.complementarity,
            passed: report.passed,
        },
        per_agent_speb: per_agent,
        oracle_worst_speb: oracle_worst,
        validity,
        accuracy_level,
    };
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(&payload).expect("serializable"),
        Format::Csv => allocation_csv(&sol),
    };
    emit(&common.out, &text)
}

fn parse_allocation(spec: &str, loaded: &LoadedConfig) -> Result<PowerAllocation, CliError> {
    if spec == "uniform" {
        let (_, x) = match &loaded.network {
            LoadedNetwork::Wireless(net) => uniform_min_power_wnl(net)?,
            LoadedNetwork::Radar(net) => uniform_min_power_rnl(net)?,
        };
        return Ok(x);
    }
    let vals: Result<Vec<f64>, _> = spec.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| CliError::Usage(format!("cannot parse allocation '{spec}'")))?;
    let want = match &loaded.network {
        LoadedNetwork::Wireless(net) => net.num_anchors(),
        LoadedNetwork::Radar(net) => net.num_tx(),
    };
    if vals.len() != want {
        return Err(CliError::Usage(format!(
            "allocation has {} entries, expected {want}",
            vals.len()
        )));
    }
    PowerAllocation::new(vals).map_err(|e| CliError::Usage(e.to_string()))
}

fn run(mode: Mode) -> Result<(), CliError> {
    match mode {
        Mode::Solve { common } => {
            let loaded = load(&common)?;
            let prog = match &loaded.network {
                LoadedNetwork::Wireless(net) => build_min_power_wnl(net),
                LoadedNetwork::Radar(net) => build_min_power_rnl(net),
            };
            let sol = prog.solve_with(common.tol, netloc::conic::DEFAULT_MAX_ITER);
            let n = prog.num_vars();
            finish_solve(&prog, sol, "solve", n, Some(&loaded), None, None, &common)
        }
        Mode::RobustSolve {
            common,
            nuss,
            delta,
            variant,
            m,
        } => {
            if matches!(variant, Variant::Upper | Variant::Lower) && m < 2 {
                return Err(CliError::Usage(
                    "relaxation order M must be at least 2".into(),
                ));
            }
            let loaded = load(&common)?;
            let cover = cover_for(&loaded, nuss, delta)?;
            let prog = match (&loaded.network, variant) {
                (LoadedNetwork::Wireless(net), Variant::Efficient) => {
                    build_robust_socp_efficient_wnl(net, &cover)?
                }
                (LoadedNetwork::Wireless(net), Variant::Upper) => {
                    build_robust_socp_asymptotic_wnl(net, &cover, m, BoundVariant::Upper)?
                }
                (LoadedNetwork::Wireless(net), Variant::Lower) => {
                    build_robust_socp_asymptotic_wnl(net, &cover, m, BoundVariant::Lower)?
                }
                (LoadedNetwork::Radar(net), Variant::Efficient) => {
                    build_robust_socp_efficient_rnl(net, &cover)?.program
                }
                (LoadedNetwork::Radar(net), Variant::Upper) => {
                    build_robust_socp_asymptotic_rnl(net, &cover, m, BoundVariant::Upper)?
                }
                (LoadedNetwork::Radar(net), Variant::Lower) => {
                    build_robust_socp_asymptotic_rnl(net, &cover, m, BoundVariant::Lower)?
                }
            };
            let sol = prog.solve_with(common.tol, netloc::conic::DEFAULT_MAX_ITER);
            let oracle = if sol.status == SolveStatus::Optimal {
                let n = cover.n_vars;
                let x = PowerAllocation {
                    x: sol.v[..n].iter().map(|v| v.max(0.0)).collect(),
                };
                let worst: Vec<f64> = cover
                    .regions
                    .iter()
                    .map(|r| netloc::robust::worst_case_speb_region(r, &x, DEFAULT_ORACLE_GRID))
                    .collect();
                let validity: Vec<ValidityOut> = cover
                    .regions
                    .iter()
                    .flat_map(|r| r.iter())
                    .map(|circle| {
                        let v = check_bound_validity(circle, &x, m, DEFAULT_ORACLE_GRID);
                        ValidityOut {
                            b_value: v.b_value,
                            min_m: v.min_m,
                            valid: v.valid,
                        }
                    })
                    .collect();
                for v in &validity {
                    if !v.valid {
                        eprintln!(
                            "warning: relaxation order M = {m} is below the validity threshold {}; bounds may not bracket the worst case",
                            v.min_m
                        );
                    }
                }
                Some((worst, validity))
            } else {
                None
            };
            let n = cover.n_vars;
            finish_solve(&prog, sol, "robust-solve", n, Some(&loaded), oracle, None, &common)
        }
        Mode::Minmax { common, ptot } => {
            let loaded = load(&common)?;
            let LoadedNetwork::Wireless(net) = &loaded.network else {
                return Err(CliError::Usage(
                    "minmax mode applies to wireless networks".into(),
                ));
            };
            let prog = build_minmax_wnl(net, ptot)?;
            let sol = prog.solve_with(common.tol, netloc::conic::DEFAULT_MAX_ITER);
            let level = if sol.status == SolveStatus::Optimal {
                Some(-sol.objective_value)
            } else {
                None
            };
            let n = net.num_anchors();
            finish_solve(&prog, sol, "minmax", n, None, None, level, &common)
        }
        Mode::Oracle {
            common,
            nuss,
            delta,
            x,
        } => {
            let loaded = load(&common)?;
            let cover = cover_for(&loaded, nuss, delta)?;
            let x = parse_allocation(&x, &loaded)?;
            let (worst, requirement, violated): (Vec<f64>, Vec<f64>, Vec<bool>) =
                match &loaded.network {
                    LoadedNetwork::Wireless(net) => {
                        let reports = evaluate_violation(net, &cover, &x);
                        (
                            reports.iter().map(|r| r.worst_speb).collect(),
                            net.requirements.clone(),
                            reports.iter().map(|r| r.violated).collect(),
                        )
                    }
                    LoadedNetwork::Radar(net) => {
                        let worst = netloc::robust::worst_case_speb_region(
                            &cover.regions[0],
                            &x,
                            DEFAULT_ORACLE_GRID,
                        );
                        (
                            vec![worst],
                            vec![net.requirement],
                            vec![worst > net.requirement * (1.0 + netloc::robust::VIOLATION_SLACK)],
                        )
                    }
                };
            let payload = OracleOut {
                mode: "oracle".into(),
                allocation: x.x,
                worst_speb: worst,
                requirement,
                violated,
            };
            emit(
                &common.out,
                &serde_json::to_string_pretty(&payload).expect("serializable"),
            )
        }
        Mode::Validate { common, x } => {
            let loaded = load(&common)?;
            let x = parse_allocation(&x, &loaded)?;
            let (spebs, requirement): (Vec<f64>, Vec<f64>) = match &loaded.network {
                LoadedNetwork::Wireless(net) => (
                    (0..net.num_agents())
                        .map(|k| speb(&efim_wnl(net, &x, k).expect("validated")).expect("psd"))
                        .collect(),
                    net.requirements.clone(),
                ),
                LoadedNetwork::Radar(net) => (
                    vec![speb(&efim_rnl(net, &x).expect("validated")).expect("psd")],
                    vec![net.requirement],
                ),
            };
            let satisfied = spebs
                .iter()
                .zip(&requirement)
                .map(|(p, r)| p <= &(r * (1.0 + netloc::robust::VIOLATION_SLACK)))
                .collect();
            let payload = ValidateOut {
                mode: "validate".into(),
                allocation: x.x,
                speb: spebs,
                requirement,
                satisfied,
            };
            emit(
                &common.out,
                &serde_json::to_string_pretty(&payload).expect("serializable"),
            )
        }
        Mode::Sweep {
            kind,
            count_a,
            count_b,
            region,
            beta,
            mu_zeta,
            rho,
            nuss,
            seed,
            trials,
            algos,
            m,
            out,
            format,
        } => {
            let scenario_kind = match kind {
                SweepKind::Wnl => ScenarioKind::Wireless {
                    anchors: count_a,
                    agents: count_b,
                },
                SweepKind::Rnl => ScenarioKind::Radar {
                    tx: count_a,
                    rx: count_b,
                },
            };
            let spec = ScenarioSpec {
                region,
                kind: scenario_kind,
                beta,
                mu_zeta,
                rho,
                nuss,
                seed,
            };
            let mut algorithms = Vec::new();
            for token in algos.split(',') {
                let token = token.trim();
                let alg = match token {
                    "robust-asym-upper" => AlgorithmId::RobustAsymUpper(m),
                    "robust-asym-lower" => AlgorithmId::RobustAsymLower(m),
                    other => AlgorithmId::parse(other)?,
                };
                if let AlgorithmId::RobustAsymUpper(m) | AlgorithmId::RobustAsymLower(m) = alg {
                    if m < 2 {
                        return Err(CliError::Usage(
                            "relaxation order M must be at least 2".into(),
                        ));
                    }
                }
                algorithms.push(alg);
            }
            let report = run_sweep(&[spec], &algorithms, trials)?;
            let text = match format {
                Format::Csv => report.to_csv(),
                Format::Json => {
                    #[derive(Serialize)]
                    struct RowOut<'a> {
                        trial: u64,
                        algorithm: String,
                        status: &'a str,
                        total_power: f64,
                        normalized_power: f64,
                        speb_per_agent: &'a [f64],
                    }
                    let rows: Vec<RowOut<'_>> = report
                        .rows
                        .iter()
                        .map(|r| RowOut {
                            trial: r.trial,
                            algorithm: r.algorithm.to_string(),
                            status: r.status.as_str(),
                            total_power: r.total_power,
                            normalized_power: r.normalized_power,
                            speb_per_agent: &r.speb_per_agent,
                        })
                        .collect();
                    serde_json::to_string_pretty(&rows).expect("serializable")
                }
            };
            emit(&out, &text)
        }
    }
}
