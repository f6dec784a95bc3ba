//! Equivalent Fisher information matrices and the squared position error
//! bound (SPEB) in both matrix and fractional form.
//!
//! The 2×2 information matrix for a position is a nonnegative combination of
//! rank-one direction matrices `u(φ)u(φ)ᵀ`, one per ranging link, weighted by
//! transmit power times the link's effective ranging coefficient. The SPEB is
//! the trace of its inverse. The fractional form rewrites the same quantity
//! through the topology matrix `Λ` with entries `2sin²(φ_i − φ_j)`, which is
//! what the cone program builders exploit.

use crate::net::{PowerAllocation, RadarNetwork, WirelessNetwork};
use nalgebra::{DMatrix, Matrix2};
use thiserror::Error;

/// Relative determinant threshold below which an information matrix is
/// treated as singular and the SPEB is `+∞`. The robust evaluators rely on a
/// consistent infinity sentinel instead of errors.
pub const SINGULARITY_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FisherError {
    #[error("information matrix is not symmetric (|m01 - m10| = {0:.3e})")]
    NotSymmetric(f64),
    #[error("information matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("power allocation length {got}, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("scene has {angles} angles but {ercs} coefficients")]
    SceneShape { angles: usize, ercs: usize },
    #[error("scene link count {links} is not a multiple of the decision length {n_vars}")]
    SceneBlocks { links: usize, n_vars: usize },
}

/// 2×2 symmetric positive-semidefinite information matrix for one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efim {
    m: Matrix2<f64>,
}

impl Efim {
    /// Wraps a matrix, requiring symmetry to 1e-12 relative.
    pub fn new(m: Matrix2<f64>) -> Result<Self, FisherError> {
        let asym = (m[(0, 1)] - m[(1, 0)]).abs();
        let scale = m.abs().max().max(f64::MIN_POSITIVE);
        if asym > 1e-12 * scale {
            return Err(FisherError::NotSymmetric(asym));
        }
        let sym = Matrix2::new(
            m[(0, 0)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            m[(1, 1)],
        );
        Ok(Self { m: sym })
    }

    fn from_parts(a: f64, b: f64, d: f64) -> Self {
        Self {
            m: Matrix2::new(a, b, b, d),
        }
    }

    pub fn zero() -> Self {
        Self::from_parts(0.0, 0.0, 0.0)
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[(0, 0)] + self.m[(1, 1)]
    }

    pub fn det(&self) -> f64 {
        self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]
    }

    /// Smallest eigenvalue (closed form for 2×2 symmetric).
    pub fn min_eigenvalue(&self) -> f64 {
        let t = 0.5 * self.trace();
        let r = (0.5 * (self.m[(0, 0)] - self.m[(1, 1)])).hypot(self.m[(0, 1)]);
        t - r
    }

    /// Eigenvalues `(μ₁, μ₂)` with `μ₁ ≥ μ₂` and the angle of the first
    /// eigenvector; the second eigenvector sits at `θ + π/2`.
    pub fn eigen_pairs(&self) -> (f64, f64, f64) {
        let (a, b, d) = (self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 1)]);
        let t = 0.5 * (a + d);
        let r = (0.5 * (a - d)).hypot(b);
        let theta = 0.5 * (2.0 * b).atan2(a - d);
        (t + r, t - r, theta)
    }

    /// Accumulates `w · u(φ)u(φ)ᵀ`.
    fn add_direction(&mut self, w: f64, phi: f64) {
        let (s, c) = phi.sin_cos();
        self.m[(0, 0)] += w * c * c;
        self.m[(0, 1)] += w * c * s;
        self.m[(1, 0)] += w * c * s;
        self.m[(1, 1)] += w * s * s;
    }

    /// Accumulates `w · v vᵀ` for an explicit direction vector.
    fn add_outer(&mut self, w: f64, v: [f64; 2]) {
        self.m[(0, 0)] += w * v[0] * v[0];
        self.m[(0, 1)] += w * v[0] * v[1];
        self.m[(1, 0)] += w * v[0] * v[1];
        self.m[(1, 1)] += w * v[1] * v[1];
    }
}

/// Rank-one direction matrix `u(φ)u(φ)ᵀ` with `u(φ) = (cos φ, sin φ)`.
pub fn direction_matrix(phi: f64) -> Efim {
    let mut e = Efim::zero();
    e.add_direction(1.0, phi);
    e
}

/// Information matrix for agent `k`: the sum over anchors of
/// `x_j ξ_kj u(φ_kj)u(φ_kj)ᵀ`.
pub fn efim_wnl(
    net: &WirelessNetwork,
    x: &PowerAllocation,
    agent: usize,
) -> Result<Efim, FisherError> {
    if x.len() != net.num_anchors() {
        return Err(FisherError::DimensionMismatch {
            got: x.len(),
            want: net.num_anchors(),
        });
    }
    let mut e = Efim::zero();
    for j in 0..net.num_anchors() {
        let (phi, _) = net.link_geometry(agent, j);
        e.add_direction(x.x[j] * net.erc(agent, j), phi);
    }
    Ok(e)
}

/// Information matrix for the radar target: the double sum over transmit and
/// receive antennas of `x_j ξ_kj u(φ_kj)u(φ_kj)ᵀ` with `φ_kj = (ψ_k + ϕ_j)/2`.
pub fn efim_rnl(net: &RadarNetwork, x: &PowerAllocation) -> Result<Efim, FisherError> {
    if x.len() != net.num_tx() {
        return Err(FisherError::DimensionMismatch {
            got: x.len(),
            want: net.num_tx(),
        });
    }
    let mut e = Efim::zero();
    for j in 0..net.num_tx() {
        let (varphi, _) = net.tx_geometry(j);
        for k in 0..net.num_rx() {
            let (psi, _) = net.rx_geometry(k);
            e.add_direction(x.x[j] * net.erc(k, j), (psi + varphi) / 2.0);
        }
    }
    Ok(e)
}

/// Same information matrix through the bistatic sum-of-unit-vectors route:
/// `Σ_j (x_j/d_j^(2β)) Σ_k (ζ_kj/d_k^(2β)) u_kj u_kjᵀ` with
/// `u_kj = u(ψ_k) + u(ϕ_j)`. Agrees with [`efim_rnl`] to rounding; kept as an
/// independent computation path for verification.
pub fn efim_rnl_bistatic(net: &RadarNetwork, x: &PowerAllocation) -> Result<Efim, FisherError> {
    if x.len() != net.num_tx() {
        return Err(FisherError::DimensionMismatch {
            got: x.len(),
            want: net.num_tx(),
        });
    }
    let two_beta = 2.0 * net.beta;
    let mut e = Efim::zero();
    for j in 0..net.num_tx() {
        let (varphi, d_j) = net.tx_geometry(j);
        let wj = x.x[j] / d_j.powf(two_beta);
        for k in 0..net.num_rx() {
            let (psi, d_k) = net.rx_geometry(k);
            let wk = net.rc[(k, j)] / d_k.powf(two_beta);
            let u = [psi.cos() + varphi.cos(), psi.sin() + varphi.sin()];
            e.add_outer(wj * wk, u);
        }
    }
    Ok(e)
}

/// SPEB: trace of the inverse information matrix, `(a + d)/(ad − b²)` for the
/// 2×2 case. Returns `+∞` when the determinant falls below
/// `SINGULARITY_EPS · (trace/2)²`; errors on non-PSD input.
pub fn speb(j: &Efim) -> Result<f64, FisherError> {
    let tr = j.trace();
    let min_eig = j.min_eigenvalue();
    if tr < 0.0 || min_eig < -SINGULARITY_EPS * tr.max(f64::MIN_POSITIVE) {
        return Err(FisherError::NotPsd(min_eig));
    }
    let det = j.det();
    let half_tr = 0.5 * tr;
    if det <= SINGULARITY_EPS * half_tr * half_tr {
        return Ok(f64::INFINITY);
    }
    Ok(tr / det)
}

/// Topology matrix `Λ = 11ᵀ − c(2φ)c(2φ)ᵀ − s(2φ)s(2φ)ᵀ`; symmetric with
/// rank at most 3 and entries `2sin²(φ_i − φ_j)`.
pub fn topology_matrix(angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    let c: Vec<f64> = angles.iter().map(|p| (2.0 * p).cos()).collect();
    let s: Vec<f64> = angles.iter().map(|p| (2.0 * p).sin()).collect();
    DMatrix::from_fn(n, n, |i, j| 1.0 - c[i] * c[j] - s[i] * s[j])
}

/// Angles and effective ranging coefficients of one bound evaluation:
/// one entry per ranging link. For a wireless agent the links are its
/// anchors (`n_vars` = anchor count); for a radar target the links are all
/// (rx, tx) pairs stacked rx-major and each block reuses the same power
/// vector (`n_vars` = tx count).
#[derive(Debug, Clone)]
pub struct SpebScene {
    pub angles: Vec<f64>,
    pub ercs: Vec<f64>,
    pub n_vars: usize,
}

impl SpebScene {
    pub fn new(angles: Vec<f64>, ercs: Vec<f64>, n_vars: usize) -> Result<Self, FisherError> {
        if angles.len() != ercs.len() {
            return Err(FisherError::SceneShape {
                angles: angles.len(),
                ercs: ercs.len(),
            });
        }
        if n_vars == 0 || angles.len() % n_vars != 0 {
            return Err(FisherError::SceneBlocks {
                links: angles.len(),
                n_vars,
            });
        }
        if ercs.iter().any(|&v| v < 0.0) {
            return Err(FisherError::SceneShape {
                angles: angles.len(),
                ercs: ercs.len(),
            });
        }
        Ok(Self {
            angles,
            ercs,
            n_vars,
        })
    }

    /// Scene for one wireless agent.
    pub fn wnl(net: &WirelessNetwork, agent: usize) -> Self {
        let nb = net.num_anchors();
        let mut angles = Vec::with_capacity(nb);
        let mut ercs = Vec::with_capacity(nb);
        for j in 0..nb {
            let (phi, _) = net.link_geometry(agent, j);
            angles.push(phi);
            ercs.push(net.erc(agent, j));
        }
        Self {
            angles,
            ercs,
            n_vars: nb,
        }
    }

    /// Stacked scene for the radar target (links ordered rx-major).
    pub fn rnl(net: &RadarNetwork) -> Self {
        let (nt, nr) = (net.num_tx(), net.num_rx());
        let mut angles = Vec::with_capacity(nt * nr);
        let mut ercs = Vec::with_capacity(nt * nr);
        for k in 0..nr {
            let (psi, _) = net.rx_geometry(k);
            for j in 0..nt {
                let (varphi, _) = net.tx_geometry(j);
                angles.push((psi + varphi) / 2.0);
                ercs.push(net.erc(k, j));
            }
        }
        Self {
            angles,
            ercs,
            n_vars: nt,
        }
    }
}

/// SPEB through the fractional form `4·1ᵀy / yᵀΛy` with `y_l = ξ_l x_{l mod n}`.
/// Returns `+∞` when the denominator falls below `SINGULARITY_EPS · (1ᵀy)²`.
pub fn speb_fractional(scene: &SpebScene, x: &PowerAllocation) -> f64 {
    let y: Vec<f64> = scene
        .ercs
        .iter()
        .enumerate()
        .map(|(l, &xi)| xi * x.x[l % scene.n_vars])
        .collect();
    let sum_y: f64 = y.iter().sum();
    let lambda = topology_matrix(&scene.angles);
    let mut den = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            den += y[i] * lambda[(i, j)] * y[j];
        }
    }
    if den <= SINGULARITY_EPS * sum_y * sum_y {
        return f64::INFINITY;
    }
    4.0 * sum_y / den
}
