//! Physical scenario types for the two network classes.
//!
//! A wireless localization network has anchors at known positions ranging to
//! mobile agents; a radar network has transmit/receive antenna pairs ranging
//! to a passive target via reflection. Both carry a per-link ranging
//! coefficient matrix `ζ` and an amplitude loss exponent `β` from which the
//! effective ranging coefficients `ξ` are derived.
//!
//! Everything here is immutable after construction and all operations are
//! pure functions, so values can be shared freely across threads.

use nalgebra::DMatrix;
use thiserror::Error;

/// 2-D position in meters.
pub type Point = [f64; 2];

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("coincident points: angle/distance undefined for zero separation")]
    DegenerateGeometry,
    #[error("distance must be positive, got {0}")]
    NonpositiveDistance(f64),
    #[error("amplitude loss exponent must be positive, got {0}")]
    NonpositiveBeta(f64),
    #[error("ranging coefficient matrix is {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    RcShape {
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("negative ranging coefficient at ({row}, {col})")]
    NegativeRc { row: usize, col: usize },
    #[error("localization requirement must be positive, got {0}")]
    NonpositiveRequirement(f64),
    #[error("requirements length {got}, expected one per agent ({want})")]
    RequirementsLength { got: usize, want: usize },
    #[error("power caps length {got}, expected {want}")]
    CapsLength { got: usize, want: usize },
    #[error("negative power cap at index {0}")]
    NegativeCap(usize),
    #[error("network needs at least one node on each side")]
    Empty,
    #[error("power allocation length {got}, expected {want}")]
    AllocationLength { got: usize, want: usize },
    #[error("negative transmit power at index {0}")]
    NegativePower(usize),
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Angle (counterclockwise from the +x axis, in `[0, 2π)`) and Euclidean
/// distance from `p_from` to `p_to`.
pub fn geometry(p_from: Point, p_to: Point) -> Result<(f64, f64), NetError> {
    let dx = p_to[0] - p_from[0];
    let dy = p_to[1] - p_from[1];
    let distance = dx.hypot(dy);
    if distance == 0.0 {
        return Err(NetError::DegenerateGeometry);
    }
    Ok((normalize_angle(dy.atan2(dx)), distance))
}

/// Effective ranging coefficient for a wireless link: `ζ / d^(2β)`.
pub fn erc_wnl(zeta: f64, distance: f64, beta: f64) -> Result<f64, NetError> {
    if distance <= 0.0 {
        return Err(NetError::NonpositiveDistance(distance));
    }
    Ok(zeta / distance.powf(2.0 * beta))
}

/// Effective ranging coefficient for a radar link:
/// `4ζ / (d_rx^(2β) d_tx^(2β)) · cos²((ψ − ϕ)/2)`.
///
/// Vanishes in forward-scatter geometry (`ψ − ϕ = π`).
pub fn erc_rnl(
    zeta: f64,
    d_rx: f64,
    d_tx: f64,
    psi: f64,
    varphi: f64,
    beta: f64,
) -> Result<f64, NetError> {
    if d_rx <= 0.0 {
        return Err(NetError::NonpositiveDistance(d_rx));
    }
    if d_tx <= 0.0 {
        return Err(NetError::NonpositiveDistance(d_tx));
    }
    let c = ((psi - varphi) / 2.0).cos();
    Ok(4.0 * zeta / (d_rx.powf(2.0 * beta) * d_tx.powf(2.0 * beta)) * c * c)
}

/// Anchors at known positions ranging to agents at (nominally) known
/// positions. `rc[(k, j)]` is the ranging coefficient from anchor `j` as seen
/// by agent `k`.
#[derive(Debug, Clone)]
pub struct WirelessNetwork {
    pub anchor_positions: Vec<Point>,
    pub agent_positions: Vec<Point>,
    pub rc: DMatrix<f64>,
    pub beta: f64,
    pub power_caps: Option<Vec<f64>>,
    /// Per-agent SPEB targets `ρ_k` in m².
    pub requirements: Vec<f64>,
}

impl WirelessNetwork {
    pub fn new(
        anchor_positions: Vec<Point>,
        agent_positions: Vec<Point>,
        rc: DMatrix<f64>,
        beta: f64,
        power_caps: Option<Vec<f64>>,
        requirements: Vec<f64>,
    ) -> Result<Self, NetError> {
        if anchor_positions.is_empty() || agent_positions.is_empty() {
            return Err(NetError::Empty);
        }
        if beta <= 0.0 {
            return Err(NetError::NonpositiveBeta(beta));
        }
        check_rc(&rc, agent_positions.len(), anchor_positions.len())?;
        if requirements.len() != agent_positions.len() {
            return Err(NetError::RequirementsLength {
                got: requirements.len(),
                want: agent_positions.len(),
            });
        }
        for &rho in &requirements {
            if rho <= 0.0 {
                return Err(NetError::NonpositiveRequirement(rho));
            }
        }
        check_caps(&power_caps, anchor_positions.len())?;
        for agent in &agent_positions {
            for anchor in &anchor_positions {
                geometry(*agent, *anchor)?;
            }
        }
        Ok(Self {
            anchor_positions,
            agent_positions,
            rc,
            beta,
            power_caps,
            requirements,
        })
    }

    pub fn num_anchors(&self) -> usize {
        self.anchor_positions.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agent_positions.len()
    }

    /// Angle and distance from agent `k` to anchor `j`.
    pub fn link_geometry(&self, k: usize, j: usize) -> (f64, f64) {
        geometry(self.agent_positions[k], self.anchor_positions[j])
            .expect("validated at construction")
    }

    /// Effective ranging coefficient `ξ_kj` of the nominal link.
    pub fn erc(&self, k: usize, j: usize) -> f64 {
        let (_, d) = self.link_geometry(k, j);
        erc_wnl(self.rc[(k, j)], d, self.beta).expect("validated at construction")
    }
}

/// Transmit/receive antenna pairs ranging to one passive target. `rc[(k, j)]`
/// is the ranging coefficient of the path from transmit antenna `j` to
/// receive antenna `k` via the target.
#[derive(Debug, Clone)]
pub struct RadarNetwork {
    pub tx_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
    pub target_position: Point,
    pub rc: DMatrix<f64>,
    pub beta: f64,
    pub power_caps: Option<Vec<f64>>,
    /// SPEB target `ρ` in m².
    pub requirement: f64,
}

impl RadarNetwork {
    pub fn new(
        tx_positions: Vec<Point>,
        rx_positions: Vec<Point>,
        target_position: Point,
        rc: DMatrix<f64>,
        beta: f64,
        power_caps: Option<Vec<f64>>,
        requirement: f64,
    ) -> Result<Self, NetError> {
        if tx_positions.is_empty() || rx_positions.is_empty() {
            return Err(NetError::Empty);
        }
        if beta <= 0.0 {
            return Err(NetError::NonpositiveBeta(beta));
        }
        check_rc(&rc, rx_positions.len(), tx_positions.len())?;
        if requirement <= 0.0 {
            return Err(NetError::NonpositiveRequirement(requirement));
        }
        check_caps(&power_caps, tx_positions.len())?;
        for antenna in tx_positions.iter().chain(rx_positions.iter()) {
            geometry(*antenna, target_position)?;
        }
        Ok(Self {
            tx_positions,
            rx_positions,
            target_position,
            rc,
            beta,
            power_caps,
            requirement,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx_positions.len()
    }

    /// Angle `ψ_k` and distance `d_k` from receive antenna `k` to the target.
    pub fn rx_geometry(&self, k: usize) -> (f64, f64) {
        geometry(self.rx_positions[k], self.target_position).expect("validated at construction")
    }

    /// Angle `ϕ_j` and distance `d_j` from transmit antenna `j` to the target.
    pub fn tx_geometry(&self, j: usize) -> (f64, f64) {
        geometry(self.tx_positions[j], self.target_position).expect("validated at construction")
    }

    /// Effective ranging coefficient `ξ_kj` of the nominal (k, j) path.
    pub fn erc(&self, k: usize, j: usize) -> f64 {
        let (psi, d_k) = self.rx_geometry(k);
        let (varphi, d_j) = self.tx_geometry(j);
        erc_rnl(self.rc[(k, j)], d_k, d_j, psi, varphi, self.beta)
            .expect("validated at construction")
    }
}

/// Transmit powers across anchors (wireless) or transmit antennas (radar).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub x: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(x: Vec<f64>) -> Result<Self, NetError> {
        for (j, &v) in x.iter().enumerate() {
            if v < 0.0 {
                return Err(NetError::NegativePower(j));
            }
        }
        Ok(Self { x })
    }

    pub fn uniform(level: f64, n: usize) -> Self {
        Self {
            x: vec![level.max(0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v * c).collect(),
        }
    }
}

fn check_rc(rc: &DMatrix<f64>, want_rows: usize, want_cols: usize) -> Result<(), NetError> {
    if rc.nrows() != want_rows || rc.ncols() != want_cols {
        return Err(NetError::RcShape {
            got_rows: rc.nrows(),
            got_cols: rc.ncols(),
            want_rows,
            want_cols,
        });
    }
    for row in 0..rc.nrows() {
        for col in 0..rc.ncols() {
            if rc[(row, col)] < 0.0 {
                return Err(NetError::NegativeRc { row, col });
            }
        }
    }
    Ok(())
}

fn check_caps(caps: &Option<Vec<f64>>, want: usize) -> Result<(), NetError> {
    if let Some(caps) = caps {
        if caps.len() != want {
            return Err(NetError::CapsLength {
                got: caps.len(),
                want,
            });
        }
        for (j, &c) in caps.iter().enumerate() {
            if c < 0.0 {
                return Err(NetError::NegativeCap(j));
            }
        }
    }
    Ok(())
}
