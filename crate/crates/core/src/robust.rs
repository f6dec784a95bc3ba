//! Robust power allocation under bounded position and channel uncertainty.
//!
//! The unknown position of each agent (or of the radar target) is covered by
//! a finite set of circles of radius `Δ`. Inside one circle every ranging
//! link has an angle interval `φ̂ ± φ̃` with `φ̃ = arcsin(Δ/d̂)` and an
//! effective-coefficient interval `[ξ̲, ξ̄]`. Worst-case error over the
//! circle is evaluated by a dense angular-grid oracle, sandwiched between
//! finite `M`-point lower/upper relaxations whose gap closes as `O(M⁻²)`,
//! and bounded by a fixed four-cone relaxation that is cheap enough for
//! embedded use. All relaxations keep the second-order cone shape of the
//! nominal problem and reduce to it when the uncertainty vanishes.

use crate::conic::{ConeProgram, LinearConstraint, SocConstraint};
use crate::fisher::SINGULARITY_EPS;
use crate::net::{geometry, normalize_angle, PowerAllocation, RadarNetwork, WirelessNetwork};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Relative slack separating a genuine requirement violation from solver
/// rounding at an active constraint.
pub const VIOLATION_SLACK: f64 = 1e-9;

/// Default density of the worst-case oracle's angular grid.
pub const DEFAULT_ORACLE_GRID: usize = 100_000;
/// Sample count for the tilde-vector inner maxima (accuracy ≤ 1e-6 by the
/// Lipschitz bound of the integrand, constant ≤ 4, before refinement).
const TILDE_SAMPLES: usize = 10_000;

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("cover radius {delta} is not below the link distance {distance}")]
    RadiusTooLarge { delta: f64, distance: f64 },
    #[error("invalid coefficient interval [{lo}, {hi}] at link ({row}, {col})")]
    BadZetaInterval { lo: f64, hi: f64, row: usize, col: usize },
    #[error("cover has {got} regions, expected {want}")]
    CoverShape { got: usize, want: usize },
    #[error("zeta bound matrix is {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ZetaShape {
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("relaxation order M = {m} is below the validity threshold {min}")]
    InvalidM { m: usize, min: usize },
    #[error("cover decision length {got} does not match the network ({want})")]
    VariableMismatch { got: usize, want: usize },
}

/// Interval data of one ranging link inside one cover circle: nominal angle
/// `phi_hat`, angular half-width `phi_tilde`, effective-coefficient bounds,
/// and the transmit power entry the link draws from.
#[derive(Debug, Clone)]
pub struct LinkBand {
    pub phi_hat: f64,
    pub phi_tilde: f64,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub var_index: usize,
}

/// Per-antenna angle intervals of a radar cover circle (receive and transmit
/// sides separately), kept for the radar efficient relaxation.
#[derive(Debug, Clone)]
pub struct RnlAngleBands {
    pub psi_hat: Vec<f64>,
    pub psi_tilde: Vec<f64>,
    pub varphi_hat: Vec<f64>,
    pub varphi_tilde: Vec<f64>,
}

/// One circle of a finite cover together with its derived link intervals.
#[derive(Debug, Clone)]
pub struct CoverCircle {
    pub center: [f64; 2],
    pub delta: f64,
    pub links: Vec<LinkBand>,
    pub rnl: Option<RnlAngleBands>,
}

/// Interval uncertainty model: one list of circles per agent (wireless) or a
/// single list for the target (radar).
#[derive(Debug, Clone)]
pub struct UncertaintyCover {
    pub regions: Vec<Vec<CoverCircle>>,
    pub n_vars: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Upper,
    Lower,
}

/// Projection grid vectors of one circle: `thetas[m] = (2m+1)π/M` and the
/// per-link inner maxima `h`, with `g = h / cos(π/M)` elementwise.
#[derive(Debug, Clone)]
pub struct BoundVectors {
    pub thetas: Vec<f64>,
    pub h: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SpebBounds {
    pub lower: f64,
    pub upper: f64,
    /// Curvature measure `B = lower · 1ᵀy / 4` from the oracle-free lower
    /// bound; the relaxations are valid once `M ≥ π√B`.
    pub b_value: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidityReport {
    pub b_value: f64,
    pub min_m: usize,
    pub valid: bool,
}

/// Four-cone relaxation coefficients of one circle (per link).
#[derive(Debug, Clone)]
pub struct TildeVectors {
    pub c_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub s_tilde: Vec<f64>,
}

/// Radar efficient relaxation output: transmit antennas whose worst-case
/// coefficients vanish in every circle contribute nothing to any cone but
/// stay in the decision vector.
#[derive(Debug)]
pub struct RnlEfficientBuild {
    pub program: ConeProgram,
    pub degenerate_tx: Vec<usize>,
}

fn check_zeta_shape(
    m: &DMatrix<f64>,
    want_rows: usize,
    want_cols: usize,
) -> Result<(), RobustError> {
    if m.nrows() != want_rows || m.ncols() != want_cols {
        return Err(RobustError::ZetaShape {
            got_rows: m.nrows(),
            got_cols: m.ncols(),
            want_rows,
            want_cols,
        });
    }
    Ok(())
}

fn check_interval(lo: f64, hi: f64, row: usize, col: usize) -> Result<(), RobustError> {
    if !(0.0 <= lo && lo <= hi) {
        return Err(RobustError::BadZetaInterval { lo, hi, row, col });
    }
    Ok(())
}

/// Translates per-agent cover circles into link interval data: angular
/// half-width `arcsin(Δ/d̂)` and coefficient bounds `ζ̲/(d̂+Δ)^(2β)` and
/// `ζ̄/(d̂−Δ)^(2β)`, with nominal geometry evaluated at the circle centers.
pub fn derive_intervals_wnl(
    net: &WirelessNetwork,
    circles: &[Vec<([f64; 2], f64)>],
    zeta_lo: &DMatrix<f64>,
    zeta_hi: &DMatrix<f64>,
) -> Result<UncertaintyCover, RobustError> {
    let (na, nb) = (net.num_agents(), net.num_anchors());
    if circles.len() != na {
        return Err(RobustError::CoverShape {
            got: circles.len(),
            want: na,
        });
    }
    check_zeta_shape(zeta_lo, na, nb)?;
    check_zeta_shape(zeta_hi, na, nb)?;
    let two_beta = 2.0 * net.beta;
    let mut regions = Vec::with_capacity(na);
    for (k, agent_circles) in circles.iter().enumerate() {
        let mut region = Vec::with_capacity(agent_circles.len());
        for &(center, delta) in agent_circles {
            let mut links = Vec::with_capacity(nb);
            for j in 0..nb {
                let (phi_hat, d_hat) = geometry(center, net.anchor_positions[j])
                    .map_err(|_| RobustError::RadiusTooLarge { delta, distance: 0.0 })?;
                if delta >= d_hat {
                    return Err(RobustError::RadiusTooLarge {
                        delta,
                        distance: d_hat,
                    });
                }
                let (lo, hi) = (zeta_lo[(k, j)], zeta_hi[(k, j)]);
                check_interval(lo, hi, k, j)?;
                links.push(LinkBand {
                    phi_hat,
                    phi_tilde: (delta / d_hat).asin(),
                    xi_lo: lo / (d_hat + delta).powf(two_beta),
                    xi_hi: hi / (d_hat - delta).powf(two_beta),
                    var_index: j,
                });
            }
            region.push(CoverCircle {
                center,
                delta,
                links,
                rnl: None,
            });
        }
        regions.push(region);
    }
    Ok(UncertaintyCover {
        regions,
        n_vars: nb,
    })
}

/// Minimum and maximum of `cos²` over a closed interval: 1 when the interval
/// contains a multiple of π, 0 when it contains an odd multiple of π/2,
/// endpoint values otherwise.
fn cos_sq_range(lo: f64, hi: f64) -> (f64, f64) {
    let contains =
        |offset: f64, period: f64| ((hi - offset) / period).floor() >= ((lo - offset) / period).ceil();
    let (clo, chi) = (lo.cos().powi(2), hi.cos().powi(2));
    let max = if contains(0.0, PI) { 1.0 } else { clo.max(chi) };
    let min = if contains(PI / 2.0, PI) { 0.0 } else { clo.min(chi) };
    (min, max)
}

/// Radar counterpart of [`derive_intervals_wnl`]: per-antenna angle bands
/// combine into per-pair half-widths `(ψ̃+ϕ̃)/2`, and the coefficient bounds
/// carry the bistatic `cos²` extremes over the pair's angle-difference
/// interval.
pub fn derive_intervals_rnl(
    net: &RadarNetwork,
    circles: &[([f64; 2], f64)],
    zeta_lo: &DMatrix<f64>,
    zeta_hi: &DMatrix<f64>,
) -> Result<UncertaintyCover, RobustError> {
    let (nr, nt) = (net.num_rx(), net.num_tx());
    check_zeta_shape(zeta_lo, nr, nt)?;
    check_zeta_shape(zeta_hi, nr, nt)?;
    let two_beta = 2.0 * net.beta;
    let mut region = Vec::with_capacity(circles.len());
    for &(center, delta) in circles {
        let mut psi_hat = Vec::with_capacity(nr);
        let mut psi_tilde = Vec::with_capacity(nr);
        let mut d_rx = Vec::with_capacity(nr);
        for k in 0..nr {
            let (a, d) = geometry(net.rx_positions[k], center)
                .map_err(|_| RobustError::RadiusTooLarge { delta, distance: 0.0 })?;
            if delta >= d {
                return Err(RobustError::RadiusTooLarge { delta, distance: d });
            }
            psi_hat.push(a);
            psi_tilde.push((delta / d).asin());
            d_rx.push(d);
        }
        let mut varphi_hat = Vec::with_capacity(nt);
        let mut varphi_tilde = Vec::with_capacity(nt);
        let mut d_tx = Vec::with_capacity(nt);
        for j in 0..nt {
            let (a, d) = geometry(net.tx_positions[j], center)
                .map_err(|_| RobustError::RadiusTooLarge { delta, distance: 0.0 })?;
            if delta >= d {
                return Err(RobustError::RadiusTooLarge { delta, distance: d });
            }
            varphi_hat.push(a);
            varphi_tilde.push((delta / d).asin());
            d_tx.push(d);
        }
        let mut links = Vec::with_capacity(nr * nt);
        for k in 0..nr {
            for j in 0..nt {
                let (lo, hi) = (zeta_lo[(k, j)], zeta_hi[(k, j)]);
                check_interval(lo, hi, k, j)?;
                let half = (psi_tilde[k] + varphi_tilde[j]) / 2.0;
                let mid = (psi_hat[k] - varphi_hat[j]) / 2.0;
                let (cmin, cmax) = cos_sq_range(mid - half, mid + half);
                links.push(LinkBand {
                    phi_hat: normalize_angle((psi_hat[k] + varphi_hat[j]) / 2.0),
                    phi_tilde: half,
                    xi_lo: 4.0 * lo * cmin
                        / ((d_rx[k] + delta).powf(two_beta) * (d_tx[j] + delta).powf(two_beta)),
                    xi_hi: 4.0 * hi * cmax
                        / ((d_rx[k] - delta).powf(two_beta) * (d_tx[j] - delta).powf(two_beta)),
                    var_index: j,
                });
            }
        }
        region.push(CoverCircle {
            center,
            delta,
            links,
            rnl: Some(RnlAngleBands {
                psi_hat,
                psi_tilde,
                varphi_hat,
                varphi_tilde,
            }),
        });
    }
    Ok(UncertaintyCover {
        regions: vec![region],
        n_vars: nt,
    })
}

/// One circle per agent at its nominal position with exact channel
/// knowledge; the cover shape used by the benchmark sweeps.
pub fn single_circle_cover_wnl(
    net: &WirelessNetwork,
    delta: f64,
) -> Result<UncertaintyCover, RobustError> {
    let circles: Vec<Vec<([f64; 2], f64)>> = net
        .agent_positions
        .iter()
        .map(|&p| vec![(p, delta)])
        .collect();
    derive_intervals_wnl(net, &circles, &net.rc, &net.rc)
}

/// Single circle at the nominal target position with exact channel
/// knowledge.
pub fn single_circle_cover_rnl(
    net: &RadarNetwork,
    delta: f64,
) -> Result<UncertaintyCover, RobustError> {
    derive_intervals_rnl(net, &[(net.target_position, delta)], &net.rc, &net.rc)
}

/// Hexagonally packed circle centers of radius `delta` covering the disk of
/// `region_radius` around `center`.
pub fn hex_cover(center: [f64; 2], region_radius: f64, delta: f64) -> Vec<([f64; 2], f64)> {
    if region_radius <= delta {
        return vec![(center, delta)];
    }
    let pitch = delta * 3.0f64.sqrt();
    let row_step = 1.5 * delta;
    let mut out = Vec::new();
    let rows = (region_radius / row_step).ceil() as i64 + 1;
    let cols = (region_radius / pitch).ceil() as i64 + 1;
    for r in -rows..=rows {
        let y = center[1] + r as f64 * row_step;
        let offset = if r.rem_euclid(2) == 1 { pitch / 2.0 } else { 0.0 };
        for c in -cols..=cols {
            let x = center[0] + offset + c as f64 * pitch;
            let d = (x - center[0]).hypot(y - center[1]);
            if d <= region_radius + delta {
                out.push(([x, y], delta));
            }
        }
    }
    out
}

fn wrap_pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `max cos(2φ̂ − θ + ε)` over `|ε| ≤ 2φ̃`: 1 when θ falls inside the doubled
/// arc, otherwise the cosine of the distance to the nearest arc endpoint.
fn arc_cos_max(two_phi_hat: f64, two_phi_tilde: f64, theta: f64) -> f64 {
    if two_phi_tilde >= PI {
        return 1.0;
    }
    let d = wrap_pi(two_phi_hat - theta).abs();
    if d <= two_phi_tilde {
        1.0
    } else {
        (d - two_phi_tilde).cos()
    }
}

/// Worst-case weights of one circle at allocation `x`: per-link lower
/// coefficients times the link's transmit power.
fn worst_case_weights(circle: &CoverCircle, x: &PowerAllocation) -> Vec<f64> {
    circle
        .links
        .iter()
        .map(|l| l.xi_lo * x.x[l.var_index])
        .collect()
}

fn projection_sum(circle: &CoverCircle, y: &[f64], theta: f64) -> f64 {
    let mut s = 0.0;
    for (l, &yl) in circle.links.iter().zip(y) {
        if yl != 0.0 {
            s += yl * arc_cos_max(2.0 * l.phi_hat, 2.0 * l.phi_tilde, theta);
        }
    }
    s
}

/// Maximum worst-case projection `S(y)` over the angular grid, refined by a
/// golden-section pass around the grid argmax.
fn peak_projection(circle: &CoverCircle, y: &[f64], grid: usize) -> f64 {
    let grid = grid.max(4);
    let step = TAU / grid as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_theta = 0.0;
    for i in 0..grid {
        let theta = i as f64 * step;
        let v = projection_sum(circle, y, theta);
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut lo, mut hi) = (best_theta - step, best_theta + step);
    let mut t1 = hi - inv_phi * (hi - lo);
    let mut t2 = lo + inv_phi * (hi - lo);
    let mut f1 = projection_sum(circle, y, t1);
    let mut f2 = projection_sum(circle, y, t2);
    for _ in 0..80 {
        if f1 >= f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - inv_phi * (hi - lo);
            f1 = projection_sum(circle, y, t1);
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + inv_phi * (hi - lo);
            f2 = projection_sum(circle, y, t2);
        }
    }
    best.max(f1).max(f2)
}

fn bound_value(sum_y: f64, proj: f64) -> f64 {
    let den = sum_y * sum_y - proj * proj;
    if den <= SINGULARITY_EPS * sum_y * sum_y {
        f64::INFINITY
    } else {
        4.0 * sum_y / den
    }
}

/// Worst-case error bound of one circle at allocation `x`, by dense angular
/// search with the per-link inner maximum in closed form.
pub fn worst_case_speb_oracle(circle: &CoverCircle, x: &PowerAllocation, grid: usize) -> f64 {
    let y = worst_case_weights(circle, x);
    let sum_y: f64 = y.iter().sum();
    if sum_y <= 0.0 {
        return f64::INFINITY;
    }
    let s = peak_projection(circle, &y, grid);
    bound_value(sum_y, s)
}

/// Worst case over all circles of a region.
pub fn worst_case_speb_region(region: &[CoverCircle], x: &PowerAllocation, grid: usize) -> f64 {
    region
        .iter()
        .map(|c| worst_case_speb_oracle(c, x, grid))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Exact projection-grid vectors of one circle at order `M`.
pub fn bound_vectors(circle: &CoverCircle, m_count: usize) -> Result<BoundVectors, RobustError> {
    if m_count < 2 {
        return Err(RobustError::InvalidM { m: m_count, min: 2 });
    }
    let mm = m_count as f64;
    let cos_margin = (PI / mm).cos();
    let mut thetas = Vec::with_capacity(m_count);
    let mut h = Vec::with_capacity(m_count);
    let mut g = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let theta = (2 * m + 1) as f64 * PI / mm;
        let hm: Vec<f64> = circle
            .links
            .iter()
            .map(|l| arc_cos_max(2.0 * l.phi_hat, 2.0 * l.phi_tilde, theta))
            .collect();
        let gm: Vec<f64> = hm.iter().map(|v| v / cos_margin).collect();
        thetas.push(theta);
        h.push(hm);
        g.push(gm);
    }
    Ok(BoundVectors { thetas, h, g })
}

/// Finite lower and upper bounds for the worst-case error of one circle at
/// allocation `x`, with the oracle-free curvature measure `B`.
pub fn speb_bounds_eval(
    circle: &CoverCircle,
    x: &PowerAllocation,
    m_count: usize,
) -> Result<SpebBounds, RobustError> {
    let bv = bound_vectors(circle, m_count)?;
    let y = worst_case_weights(circle, x);
    let sum_y: f64 = y.iter().sum();
    if sum_y <= 0.0 {
        return Ok(SpebBounds {
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            b_value: f64::INFINITY,
        });
    }
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for m in 0..m_count {
        let hy: f64 = bv.h[m].iter().zip(&y).map(|(a, b)| a * b).sum();
        let gy: f64 = bv.g[m].iter().zip(&y).map(|(a, b)| a * b).sum();
        lower = lower.max(bound_value(sum_y, hy));
        upper = upper.max(bound_value(sum_y, gy));
    }
    let b_value = if lower.is_finite() {
        (lower * sum_y / 4.0).max(1.0)
    } else {
        f64::INFINITY
    };
    Ok(SpebBounds {
        lower,
        upper,
        b_value,
    })
}

/// Multiplicative gap between the `M`-point relaxations:
/// `C = sin²(π/M)(B−1) / (1 − sin²(π/M)B)`, nonnegative, decreasing in `M`,
/// with `M²·C → π²(B−1)`.
pub fn gap_constant(b: f64, m_count: usize) -> Result<f64, RobustError> {
    let b = b.max(1.0);
    let min = validity_min_m(b);
    if (m_count as f64) < PI * b.sqrt() {
        return Err(RobustError::InvalidM { m: m_count, min });
    }
    let s = (PI / m_count as f64).sin().powi(2);
    Ok(s * (b - 1.0) / (1.0 - s * b))
}

/// Smallest relaxation order satisfying the validity condition `M ≥ π√B`.
pub fn validity_min_m(b: f64) -> usize {
    (PI * b.max(1.0).sqrt()).ceil() as usize
}

/// Post-hoc validity check of the relaxation order at a solved allocation,
/// with `B` evaluated through the oracle.
pub fn check_bound_validity(
    circle: &CoverCircle,
    x: &PowerAllocation,
    m_count: usize,
    grid: usize,
) -> ValidityReport {
    let y = worst_case_weights(circle, x);
    let sum_y: f64 = y.iter().sum();
    let oracle = worst_case_speb_oracle(circle, x, grid);
    let b_value = if oracle.is_finite() {
        (oracle * sum_y / 4.0).max(1.0)
    } else {
        f64::INFINITY
    };
    let min_m = if b_value.is_finite() {
        validity_min_m(b_value)
    } else {
        usize::MAX
    };
    ValidityReport {
        b_value,
        min_m,
        valid: m_count >= min_m,
    }
}

/// One cone row over per-link values, weighting each link by its worst-case
/// coefficient and mapping onto transmit variables.
fn accumulate_row(circle: &CoverCircle, vals: &[f64], n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    for (l, &v) in circle.links.iter().zip(vals) {
        row[l.var_index] += l.xi_lo * v;
    }
    row
}

fn weight_row(circle: &CoverCircle, n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    for l in &circle.links {
        row[l.var_index] += l.xi_lo;
    }
    row
}

struct RegionSpec<'a> {
    circles: &'a [CoverCircle],
    rho: f64,
}

/// Shared assembly of the `M`-point robust programs: one two-row cone per
/// (region, circle, grid direction).
fn asymptotic_program(
    regions: &[RegionSpec<'_>],
    n: usize,
    caps: &Option<Vec<f64>>,
    m_count: usize,
    variant: BoundVariant,
) -> Result<ConeProgram, RobustError> {
    let mut cones = Vec::new();
    for region in regions {
        let inv = 2.0 / region.rho;
        for circle in region.circles {
            let bv = bound_vectors(circle, m_count)?;
            for m in 0..m_count {
                let vals = match variant {
                    BoundVariant::Upper => &bv.g[m],
                    BoundVariant::Lower => &bv.h[m],
                };
                let row = accumulate_row(circle, vals, n);
                let mut a = DMatrix::zeros(2, n);
                for j in 0..n {
                    a[(0, j)] = row[j];
                }
                cones.push(SocConstraint {
                    a,
                    b: DVector::from_column_slice(&[0.0, inv]),
                    g: DVector::from_column_slice(&weight_row(circle, n)),
                    h: -inv,
                });
            }
        }
    }
    let lin = cap_rows(caps, n);
    Ok(
        ConeProgram::new(DVector::from_element(n, 1.0), cones, lin, (0..n).collect())
            .expect("well-formed by construction"),
    )
}

fn cap_rows(caps: &Option<Vec<f64>>, n: usize) -> Vec<LinearConstraint> {
    let mut lin = Vec::new();
    if let Some(caps) = caps {
        for (j, &cap) in caps.iter().enumerate() {
            let mut f = DVector::zeros(n);
            f[j] = 1.0;
            lin.push(LinearConstraint { f, e: cap });
        }
    }
    lin
}

/// `M`-point robust program for a wireless network. The upper variant is
/// conservative (its solutions satisfy the true worst-case requirement); the
/// lower variant underestimates and brackets the optimum from below.
pub fn build_robust_socp_asymptotic_wnl(
    net: &WirelessNetwork,
    cover: &UncertaintyCover,
    m_count: usize,
    variant: BoundVariant,
) -> Result<ConeProgram, RobustError> {
    check_cover(net.num_agents(), net.num_anchors(), cover)?;
    let regions: Vec<RegionSpec<'_>> = cover
        .regions
        .iter()
        .zip(&net.requirements)
        .map(|(circles, &rho)| RegionSpec { circles, rho })
        .collect();
    asymptotic_program(
        &regions,
        net.num_anchors(),
        &net.power_caps,
        m_count,
        variant,
    )
}

/// Radar counterpart of [`build_robust_socp_asymptotic_wnl`].
pub fn build_robust_socp_asymptotic_rnl(
    net: &RadarNetwork,
    cover: &UncertaintyCover,
    m_count: usize,
    variant: BoundVariant,
) -> Result<ConeProgram, RobustError> {
    check_cover(1, net.num_tx(), cover)?;
    let regions = vec![RegionSpec {
        circles: &cover.regions[0],
        rho: net.requirement,
    }];
    asymptotic_program(&regions, net.num_tx(), &net.power_caps, m_count, variant)
}

fn check_cover(
    want_regions: usize,
    want_vars: usize,
    cover: &UncertaintyCover,
) -> Result<(), RobustError> {
    if cover.regions.len() != want_regions {
        return Err(RobustError::CoverShape {
            got: cover.regions.len(),
            want: want_regions,
        });
    }
    if cover.n_vars != want_vars {
        return Err(RobustError::VariableMismatch {
            got: cover.n_vars,
            want: want_vars,
        });
    }
    Ok(())
}

/// Inner maximum `max |2·trig(base + ε)·sin ε|` over `|ε| ≤ half`, by dense
/// sampling with endpoint inclusion and golden-section refinement.
fn tilde_inner_max(base: f64, half: f64, use_sin: bool) -> f64 {
    if half <= 0.0 {
        return 0.0;
    }
    let f = |eps: f64| -> f64 {
        let t = if use_sin {
            (base + eps).sin()
        } else {
            (base + eps).cos()
        };
        (2.0 * t * eps.sin()).abs()
    };
    let mut best = 0.0f64;
    let mut best_eps = 0.0;
    let steps = TILDE_SAMPLES;
    for i in 0..=steps {
        let eps = -half + 2.0 * half * i as f64 / steps as f64;
        let v = f(eps);
        if v > best {
            best = v;
            best_eps = eps;
        }
    }
    let step = 2.0 * half / steps as f64;
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut lo, mut hi) = ((best_eps - step).max(-half), (best_eps + step).min(half));
    let mut t1 = hi - inv_phi * (hi - lo);
    let mut t2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(t1), f(t2));
    for _ in 0..60 {
        if f1 >= f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - inv_phi * (hi - lo);
            f1 = f(t1);
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + inv_phi * (hi - lo);
            f2 = f(t2);
        }
    }
    best.max(f1).max(f2)
}

/// Per-link four-cone relaxation coefficients: nominal doubled-angle cosine
/// and sine plus the inner maxima absorbing the angular uncertainty. Both
/// tilde vectors vanish with the uncertainty.
pub fn tilde_vectors_wnl(circle: &CoverCircle) -> TildeVectors {
    let mut c_hat = Vec::with_capacity(circle.links.len());
    let mut s_hat = Vec::with_capacity(circle.links.len());
    let mut c_tilde = Vec::with_capacity(circle.links.len());
    let mut s_tilde = Vec::with_capacity(circle.links.len());
    for l in &circle.links {
        let base = 2.0 * l.phi_hat;
        c_hat.push(base.cos());
        s_hat.push(base.sin());
        s_tilde.push(tilde_inner_max(base, l.phi_tilde, true));
        c_tilde.push(tilde_inner_max(base, l.phi_tilde, false));
    }
    TildeVectors {
        c_hat,
        s_hat,
        c_tilde,
        s_tilde,
    }
}

fn efficient_cones(circle: &CoverCircle, rho: f64, n: usize, cones: &mut Vec<SocConstraint>) {
    let tv = tilde_vectors_wnl(circle);
    let inv = 2.0 / rho;
    let weight = weight_row(circle, n);
    for e1 in [1.0, -1.0] {
        for e2 in [1.0, -1.0] {
            let row1: Vec<f64> = tv
                .c_hat
                .iter()
                .zip(&tv.s_tilde)
                .map(|(c, s)| c + e1 * s)
                .collect();
            let row2: Vec<f64> = tv
                .s_hat
                .iter()
                .zip(&tv.c_tilde)
                .map(|(s, c)| s + e2 * c)
                .collect();
            let r1 = accumulate_row(circle, &row1, n);
            let r2 = accumulate_row(circle, &row2, n);
            let mut a = DMatrix::zeros(3, n);
            for j in 0..n {
                a[(0, j)] = r1[j];
                a[(1, j)] = r2[j];
            }
            cones.push(SocConstraint {
                a,
                b: DVector::from_column_slice(&[0.0, 0.0, inv]),
                g: DVector::from_column_slice(&weight),
                h: -inv,
            });
        }
    }
}

/// Fixed-size robust relaxation: four cones per (agent, circle) over the
/// sign choices of the tilde offsets. Any feasible allocation satisfies the
/// true worst-case requirement; with zero uncertainty the program coincides
/// with the nominal one (up to the fourfold cone duplication).
pub fn build_robust_socp_efficient_wnl(
    net: &WirelessNetwork,
    cover: &UncertaintyCover,
) -> Result<ConeProgram, RobustError> {
    check_cover(net.num_agents(), net.num_anchors(), cover)?;
    let n = net.num_anchors();
    let mut cones = Vec::new();
    for (region, &rho) in cover.regions.iter().zip(&net.requirements) {
        for circle in region {
            efficient_cones(circle, rho, n, &mut cones);
        }
    }
    let lin = cap_rows(&net.power_caps, n);
    Ok(
        ConeProgram::new(DVector::from_element(n, 1.0), cones, lin, (0..n).collect())
            .expect("well-formed by construction"),
    )
}

/// Radar efficient relaxation. The per-pair angle bands already carry the
/// separate transmit/receive half-widths `(ψ̃_k + ϕ̃_j)/2`, so the four-cone
/// assembly aggregates each transmit column across receive antennas.
pub fn build_robust_socp_efficient_rnl(
    net: &RadarNetwork,
    cover: &UncertaintyCover,
) -> Result<RnlEfficientBuild, RobustError> {
    check_cover(1, net.num_tx(), cover)?;
    let n = net.num_tx();
    let mut cones = Vec::new();
    for circle in &cover.regions[0] {
        efficient_cones(circle, net.requirement, n, &mut cones);
    }
    let mut degenerate_tx = Vec::new();
    for j in 0..n {
        let total: f64 = cover.regions[0].iter().map(|c| weight_row(c, n)[j]).sum();
        if total == 0.0 {
            degenerate_tx.push(j);
        }
    }
    let lin = cap_rows(&net.power_caps, n);
    let program = ConeProgram::new(DVector::from_element(n, 1.0), cones, lin, (0..n).collect())
        .expect("well-formed by construction");
    Ok(RnlEfficientBuild {
        program,
        degenerate_tx,
    })
}
