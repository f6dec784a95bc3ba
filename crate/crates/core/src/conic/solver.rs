//! Primal-dual path-following interior-point iteration over the homogeneous
//! self-dual embedding.
//!
//! The program is flattened to the conic standard form
//! `min cᵀx  s.t.  Gx + s = h, s ∈ K` with `K` a product of a nonnegative
//! orthant (variable-mask rows, then linear rows) and second-order cones.
//! Directions come from Nesterov–Todd scaling with a Mehrotra
//! predictor-corrector; the reduced KKT system is solved densely through the
//! normal equations `GᵀW⁻²G` with iterative refinement. Constraint blocks are
//! equilibrated to unit peak magnitude before iterating and all reported
//! quantities are transformed back to the original data.

use super::{ConeProgram, Residuals, Solution, SolveStatus};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Interior step-length backoff.
const STEP_BACKOFF: f64 = 0.99;
/// Refinement passes on every KKT solve.
const REFINE_PASSES: usize = 4;
/// Deep convergence target relative to the requested tolerance. The solver
/// keeps polishing past the requested figure until this target or the
/// numerical floor, whichever comes first; acceptance is still judged at the
/// requested tolerance.
const TOL_SAFETY: f64 = 1e-4;

/// Cone structure of the standard-form rows: `nonneg` leading one-dimensional
/// cones followed by second-order cones of the listed dimensions.
struct Layout {
    nonneg: usize,
    socs: Vec<usize>,
}

impl Layout {
    fn rows(&self) -> usize {
        self.nonneg + self.socs.iter().sum::<usize>()
    }

    fn degree(&self) -> usize {
        self.nonneg + self.socs.len()
    }
}

struct StandardForm {
    n: usize,
    m: usize,
    /// Unit-norm objective used by the iteration; `c0 = cost_scale · c`.
    /// Normalizing makes the iterate sequence invariant under positive
    /// rescaling of the objective.
    c: Vec<f64>,
    c0: Vec<f64>,
    cost_scale: f64,
    /// Row-major equilibrated constraint matrix and offsets.
    g: Vec<f64>,
    h: Vec<f64>,
    /// Original (unscaled) data for termination metrics and reporting.
    g0: Vec<f64>,
    h0: Vec<f64>,
    /// Per-row equilibration factor and per-column variable scaling:
    /// `g[r][j] = sigma[r] · g0[r][j] · dcol[j]`, original `x = dcol ∘ x'`.
    sigma: Vec<f64>,
    dcol: Vec<f64>,
    layout: Layout,
    mask_rows: usize,
    lin_rows: usize,
    norm_h: f64,
    norm_c: f64,
}

impl StandardForm {
    fn build(prog: &ConeProgram) -> Self {
        let n = prog.num_vars();
        let mask_rows = prog.nonneg_mask.len();
        let lin_rows = prog.linear_constraints.len();
        let soc_dims: Vec<usize> = prog
            .soc_constraints
            .iter()
            .map(|s| s.a.nrows() + 1)
            .collect();
        let layout = Layout {
            nonneg: mask_rows + lin_rows,
            socs: soc_dims,
        };
        let m = layout.rows();

        let mut g0 = vec![0.0; m * n];
        let mut h0 = vec![0.0; m];
        let mut row = 0;
        for &j in &prog.nonneg_mask {
            g0[row * n + j] = -1.0;
            row += 1;
        }
        for lin in &prog.linear_constraints {
            for j in 0..n {
                g0[row * n + j] = lin.f[j];
            }
            h0[row] = lin.e;
            row += 1;
        }
        for soc in &prog.soc_constraints {
            // head row: slack₀ = gᵀx + h  ⇒ G row = −gᵀ
            for j in 0..n {
                g0[row * n + j] = -soc.g[j];
            }
            h0[row] = soc.h;
            row += 1;
            for r in 0..soc.a.nrows() {
                for j in 0..n {
                    g0[row * n + j] = -soc.a[(r, j)];
                }
                h0[row] = soc.b[r];
                row += 1;
            }
        }
        debug_assert_eq!(row, m);

        // Blockwise Ruiz equilibration: alternately normalize the peak
        // magnitude of every cone block (rows of one second-order cone share
        // a single factor) and of every variable column. Column scaling is
        // what keeps badly-ranged problems (tiny coefficients, huge optimal
        // powers) away from spurious certificate rays in the embedding.
        let mut sigma = vec![1.0f64; m];
        let mut dcol = vec![1.0f64; n];
        let mut g = g0.clone();
        let mut h = h0.clone();
        for _ in 0..4 {
            // block rows (offsets h participate like an extra column)
            let mut block_scale = |rows: std::ops::Range<usize>| {
                let mut peak = 0.0f64;
                for row in rows.clone() {
                    peak = peak.max(h[row].abs());
                    for j in 0..n {
                        peak = peak.max(g[row * n + j].abs());
                    }
                }
                if peak > 0.0 {
                    let f = 1.0 / peak.sqrt();
                    for row in rows {
                        sigma[row] *= f;
                        h[row] *= f;
                        for j in 0..n {
                            g[row * n + j] *= f;
                        }
                    }
                }
            };
            for row in 0..mask_rows + lin_rows {
                block_scale(row..row + 1);
            }
            let mut start = mask_rows + lin_rows;
            for &p in &layout.socs {
                block_scale(start..start + p);
                start += p;
            }
            // columns; variable-bound mask rows are artificial ±1 entries
            // and must not pin the column scale (their own row pass
            // renormalizes them afterwards)
            for j in 0..n {
                let mut peak = 0.0f64;
                for row in mask_rows..m {
                    peak = peak.max(g[row * n + j].abs());
                }
                if peak > 0.0 {
                    let f = 1.0 / peak.sqrt();
                    dcol[j] *= f;
                    for row in 0..m {
                        g[row * n + j] *= f;
                    }
                }
            }
        }

        let c0: Vec<f64> = prog.objective.iter().copied().collect();
        let norm_h = norm2(&h0);
        let norm_c = norm2(&c0);
        // objective in column-scaled variables, normalized to unit length
        let c_scaled: Vec<f64> = c0.iter().zip(&dcol).map(|(v, d)| v * d).collect();
        let norm_cs = norm2(&c_scaled);
        let cost_scale = if norm_cs > 0.0 { norm_cs } else { 1.0 };
        let c: Vec<f64> = c_scaled.iter().map(|v| v / cost_scale).collect();
        Self {
            n,
            m,
            c,
            c0,
            cost_scale,
            g,
            h,
            g0,
            h0,
            sigma,
            dcol,
            layout,
            mask_rows,
            lin_rows,
            norm_h,
            norm_c,
        }
    }

    fn g_mul(&self, g: &[f64], x: &[f64], out: &mut [f64]) {
        for row in 0..self.m {
            let r = &g[row * self.n..(row + 1) * self.n];
            out[row] = dot(r, x);
        }
    }

    fn gt_mul(&self, g: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for row in 0..self.m {
            let w = y[row];
            if w != 0.0 {
                let r = &g[row * self.n..(row + 1) * self.n];
                for j in 0..self.n {
                    out[j] += w * r[j];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Identity element of each cone: all-ones on the orthant, (1, 0, …) per SOC.
fn cone_identity(layout: &Layout) -> Vec<f64> {
    let mut e = vec![0.0; layout.rows()];
    for v in e.iter_mut().take(layout.nonneg) {
        *v = 1.0;
    }
    let mut start = layout.nonneg;
    for &p in &layout.socs {
        e[start] = 1.0;
        start += p;
    }
    e
}

/// Jordan product per cone block.
fn jordan_prod(layout: &Layout, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..layout.nonneg {
        out[i] = a[i] * b[i];
    }
    let mut start = layout.nonneg;
    for &p in &layout.socs {
        let (a0, b0) = (a[start], b[start]);
        let mut head = a0 * b0;
        for i in start + 1..start + p {
            head += a[i] * b[i];
            out[i] = a0 * b[i] + b0 * a[i];
        }
        out[start] = head;
        start += p;
    }
}

/// Solves `λ ∘ u = d` per cone block.
fn jordan_div(layout: &Layout, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    for i in 0..layout.nonneg {
        out[i] = d[i] / lambda[i];
    }
    let mut start = layout.nonneg;
    for &p in &layout.socs {
        let l0 = lambda[start];
        let mut l_sq = 0.0;
        let mut ld = 0.0;
        for i in start + 1..start + p {
            l_sq += lambda[i] * lambda[i];
            ld += lambda[i] * d[i];
        }
        let det = l0 * l0 - l_sq;
        let u0 = (l0 * d[start] - ld) / det;
        out[start] = u0;
        for i in start + 1..start + p {
            out[i] = (d[i] - u0 * lambda[i]) / l0;
        }
        start += p;
    }
}

/// Largest step `α ≥ 0` keeping `u + α·du` in the cone (∞ if unbounded).
fn max_step(layout: &Layout, u: &[f64], du: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..layout.nonneg {
        if du[i] < 0.0 {
            best = best.min(-u[i] / du[i]);
        }
    }
    let mut start = layout.nonneg;
    for &p in &layout.socs {
        best = best.min(soc_max_step(&u[start..start + p], &du[start..start + p]));
        start += p;
    }
    best.max(0.0)
}

fn soc_max_step(u: &[f64], d: &[f64]) -> f64 {
    // boundary of (u₀+αd₀)² − ‖u₁+αd₁‖² over α > 0
    let mut a = d[0] * d[0];
    let mut b = u[0] * d[0];
    let mut c = u[0] * u[0];
    for i in 1..u.len() {
        a -= d[i] * d[i];
        b -= u[i] * d[i];
        c -= u[i] * u[i];
    }
    let mut best = f64::INFINITY;
    if a.abs() > f64::MIN_POSITIVE {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -(b + sq.copysign(b));
            for root in [q / a, if q != 0.0 { c / q } else { f64::NAN }] {
                if root.is_finite() && root > 0.0 {
                    best = best.min(root);
                }
            }
        }
    } else if b < 0.0 {
        best = best.min(-c / (2.0 * b));
    }
    if d[0] < 0.0 {
        best = best.min(-u[0] / d[0]);
    }
    best
}

/// Nesterov–Todd scaling point of the pair `(s, z)` and the scaled variable
/// `λ = W z = W⁻¹ s`.
struct NtScaling {
    /// Orthant: `w_i = √(s_i/z_i)`.
    w_nonneg: Vec<f64>,
    socs: Vec<SocScaling>,
    lambda: Vec<f64>,
}

struct SocScaling {
    eta: f64,
    wbar: Vec<f64>,
}

impl NtScaling {
    fn compute(layout: &Layout, s: &[f64], z: &[f64]) -> Option<Self> {
        let mut w_nonneg = Vec::with_capacity(layout.nonneg);
        let mut lambda = vec![0.0; layout.rows()];
        for i in 0..layout.nonneg {
            if s[i] <= 0.0 || z[i] <= 0.0 {
                return None;
            }
            w_nonneg.push((s[i] / z[i]).sqrt());
            lambda[i] = (s[i] * z[i]).sqrt();
        }
        let mut socs = Vec::with_capacity(layout.socs.len());
        let mut start = layout.nonneg;
        for &p in &layout.socs {
            let sb = &s[start..start + p];
            let zb = &z[start..start + p];
            let ss = jnorm_sq(sb);
            let zz = jnorm_sq(zb);
            if ss <= 0.0 || zz <= 0.0 || sb[0] <= 0.0 || zb[0] <= 0.0 {
                return None;
            }
            let (ss_rt, zz_rt) = (ss.sqrt(), zz.sqrt());
            let eta = (ss / zz).powf(0.25);
            let mut sdotz = 0.0;
            for i in 0..p {
                sdotz += sb[i] * zb[i];
            }
            let gamma = ((1.0 + sdotz / (ss_rt * zz_rt)) / 2.0).sqrt();
            // w̄ = (s̄ + J z̄)/(2γ), hyperbolic-normalized: w̄₀² − ‖w̄₁‖² = 1
            let mut wbar = vec![0.0; p];
            wbar[0] = (sb[0] / ss_rt + zb[0] / zz_rt) / (2.0 * gamma);
            for i in 1..p {
                wbar[i] = (sb[i] / ss_rt - zb[i] / zz_rt) / (2.0 * gamma);
            }
            let sc = SocScaling { eta, wbar };
            let lb = &mut lambda[start..start + p];
            soc_apply_wbar(&sc.wbar, zb, lb);
            for v in lb.iter_mut() {
                *v *= sc.eta;
            }
            socs.push(sc);
            start += p;
        }
        Some(Self {
            w_nonneg,
            socs,
            lambda,
        })
    }

    /// `out = W u`
    fn apply_w(&self, layout: &Layout, u: &[f64], out: &mut [f64]) {
        for i in 0..layout.nonneg {
            out[i] = self.w_nonneg[i] * u[i];
        }
        let mut start = layout.nonneg;
        for (sc, &p) in self.socs.iter().zip(&layout.socs) {
            soc_apply_wbar(&sc.wbar, &u[start..start + p], &mut out[start..start + p]);
            for v in out.iter_mut().skip(start).take(p) {
                *v *= sc.eta;
            }
            start += p;
        }
    }

    /// `out = W⁻¹ u`
    fn apply_winv(&self, layout: &Layout, u: &[f64], out: &mut [f64]) {
        for i in 0..layout.nonneg {
            out[i] = u[i] / self.w_nonneg[i];
        }
        let mut start = layout.nonneg;
        for (sc, &p) in self.socs.iter().zip(&layout.socs) {
            soc_apply_wbar_inv(&sc.wbar, &u[start..start + p], &mut out[start..start + p]);
            for v in out.iter_mut().skip(start).take(p) {
                *v /= sc.eta;
            }
            start += p;
        }
    }

    /// `out = W² u`
    fn apply_w2(&self, layout: &Layout, u: &[f64], out: &mut [f64]) {
        for i in 0..layout.nonneg {
            let w = self.w_nonneg[i];
            out[i] = w * w * u[i];
        }
        let mut start = layout.nonneg;
        for (sc, &p) in self.socs.iter().zip(&layout.socs) {
            let ub = &u[start..start + p];
            let e2 = sc.eta * sc.eta;
            // W̄² = 2w̄w̄ᵀ − J
            let mut wu = 0.0;
            for i in 0..p {
                wu += sc.wbar[i] * ub[i];
            }
            out[start] = e2 * (2.0 * sc.wbar[0] * wu - ub[0]);
            for i in 1..p {
                out[start + i] = e2 * (2.0 * sc.wbar[i] * wu + ub[i]);
            }
            start += p;
        }
    }
}

/// `u₀² − ‖u₁‖²`
fn jnorm_sq(u: &[f64]) -> f64 {
    let mut v = u[0] * u[0];
    for x in &u[1..] {
        v -= x * x;
    }
    v
}

/// `out = W̄ u` with `W̄ = [[w₀, w₁ᵀ], [w₁, I + w₁w₁ᵀ/(1+w₀)]]`.
fn soc_apply_wbar(wbar: &[f64], u: &[f64], out: &mut [f64]) {
    let p = u.len();
    let mut t = 0.0;
    for i in 1..p {
        t += wbar[i] * u[i];
    }
    out[0] = wbar[0] * u[0] + t;
    let coef = t / (1.0 + wbar[0]) + u[0];
    for i in 1..p {
        out[i] = u[i] + coef * wbar[i];
    }
}

/// `out = W̄⁻¹ u` (sign-flipped hyperbolic form, `W̄⁻¹ = J W̄ J`).
fn soc_apply_wbar_inv(wbar: &[f64], u: &[f64], out: &mut [f64]) {
    let p = u.len();
    let mut t = 0.0;
    for i in 1..p {
        t += wbar[i] * u[i];
    }
    out[0] = wbar[0] * u[0] - t;
    let coef = t / (1.0 + wbar[0]) - u[0];
    for i in 1..p {
        out[i] = u[i] + coef * wbar[i];
    }
}

/// Dense Cholesky factor of the normal-equations matrix `GᵀW⁻²G + reg·I`,
/// with `W⁻²` applied blockwise so assembly stays `O(m·n²)`.
struct NormalEquations {
    n: usize,
    l: Vec<f64>,
}

impl NormalEquations {
    fn factor(sf: &StandardForm, sc: &NtScaling) -> Option<Self> {
        let n = sf.n;
        let mut base = vec![0.0; n * n];
        // orthant rows: weight 1/w²
        for i in 0..sf.layout.nonneg {
            let w = sc.w_nonneg[i];
            rank1(&mut base, &sf.g[i * n..(i + 1) * n], 1.0 / (w * w), n);
        }
        // SOC blocks: W⁻² = η⁻²(2qqᵀ − J) with q = Jw̄ gives
        // GᵀW⁻²G = η⁻²(2uuᵀ − g₀g₀ᵀ + Σ_{r≥1} g_r g_rᵀ), u = GᵀJw̄ blockwise.
        let mut start = sf.layout.nonneg;
        let mut u = vec![0.0; n];
        for (scb, &p) in sc.socs.iter().zip(&sf.layout.socs) {
            let inv_e2 = 1.0 / (scb.eta * scb.eta);
            u.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..p {
                let q_r = if r == 0 { scb.wbar[0] } else { -scb.wbar[r] };
                axpy(q_r, &sf.g[(start + r) * n..(start + r + 1) * n], &mut u);
            }
            rank1(&mut base, &u, 2.0 * inv_e2, n);
            rank1(&mut base, &sf.g[start * n..(start + 1) * n], -inv_e2, n);
            for r in 1..p {
                rank1(
                    &mut base,
                    &sf.g[(start + r) * n..(start + r + 1) * n],
                    inv_e2,
                    n,
                );
            }
            start += p;
        }

        let mut diag_max = 0.0f64;
        for j in 0..n {
            diag_max = diag_max.max(base[j * n + j].abs());
        }
        let mut reg = 1e-14 * (1.0 + diag_max);
        for _ in 0..4 {
            let mut l = base.clone();
            for j in 0..n {
                l[j * n + j] += reg;
            }
            if cholesky_in_place(&mut l, n) {
                return Some(Self { n, l });
            }
            reg *= 1e4;
        }
        None
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let (n, l) = (self.n, &self.l);
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= l[i * n + k] * b[k];
            }
            b[i] = v / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in i + 1..n {
                v -= l[k * n + i] * b[k];
            }
            b[i] = v / l[i * n + i];
        }
    }
}

fn rank1(s: &mut [f64], v: &[f64], w: f64, n: usize) {
    if w == 0.0 {
        return;
    }
    for i in 0..n {
        let wv = w * v[i];
        if wv != 0.0 {
            for j in 0..n {
                s[i * n + j] += wv * v[j];
            }
        }
    }
}

fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    true
}

/// Solves the quasi-definite pair `Gᵀ·z = bx`, `G·x − W²·z = bz` through the
/// factored normal equations, with fixed-count iterative refinement against
/// the unregularized system.
struct KktSolver<'a> {
    sf: &'a StandardForm,
    sc: &'a NtScaling,
    ne: NormalEquations,
    /// Extra refinement once the path parameter gets tiny and the scaled
    /// system turns severely ill-conditioned.
    passes: usize,
}

impl<'a> KktSolver<'a> {
    fn new(sf: &'a StandardForm, sc: &'a NtScaling, passes: usize) -> Option<Self> {
        let ne = NormalEquations::factor(sf, sc)?;
        Some(Self { sf, sc, ne, passes })
    }

    fn solve(&self, bx: &[f64], bz: &[f64], dx: &mut Vec<f64>, dz: &mut Vec<f64>) {
        let (n, m) = (self.sf.n, self.sf.m);
        dx.iter_mut().for_each(|v| *v = 0.0);
        dz.iter_mut().for_each(|v| *v = 0.0);
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; m];
        let mut tmp_m = vec![0.0; m];
        let mut tmp_n = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut ddz = vec![0.0; m];

        for pass in 0..=self.passes {
            if pass == 0 {
                r1.copy_from_slice(bx);
                r2.copy_from_slice(bz);
            } else {
                // r1 = bx − Gᵀdz ; r2 = bz − G dx + W² dz
                self.sf.gt_mul(&self.sf.g, dz, &mut tmp_n);
                for j in 0..n {
                    r1[j] = bx[j] - tmp_n[j];
                }
                self.sf.g_mul(&self.sf.g, dx, &mut tmp_m);
                self.sc.apply_w2(&self.sf.layout, dz, &mut r2);
                for i in 0..m {
                    r2[i] = bz[i] - tmp_m[i] + r2[i];
                }
            }
            // rhs = r1 + GᵀW⁻²r2 ; ddx = S⁻¹rhs ; ddz = W⁻²(G ddx − r2)
            apply_winv2(self.sc, &self.sf.layout, &r2, &mut tmp_m);
            self.sf.gt_mul(&self.sf.g, &tmp_m, &mut rhs);
            for j in 0..n {
                rhs[j] += r1[j];
            }
            self.ne.solve_in_place(&mut rhs);
            self.sf.g_mul(&self.sf.g, &rhs, &mut tmp_m);
            for i in 0..m {
                tmp_m[i] -= r2[i];
            }
            apply_winv2(self.sc, &self.sf.layout, &tmp_m, &mut ddz);
            axpy(1.0, &rhs, dx);
            axpy(1.0, &ddz, dz);
        }
    }
}

/// `out = W⁻² u`
fn apply_winv2(sc: &NtScaling, layout: &Layout, u: &[f64], out: &mut [f64]) {
    for i in 0..layout.nonneg {
        let w = sc.w_nonneg[i];
        out[i] = u[i] / (w * w);
    }
    let mut start = layout.nonneg;
    for (scb, &p) in sc.socs.iter().zip(&layout.socs) {
        let ub = &u[start..start + p];
        let inv_e2 = 1.0 / (scb.eta * scb.eta);
        // W⁻² = η⁻²(2qqᵀ − J), q = Jw̄
        let mut qu = scb.wbar[0] * ub[0];
        for i in 1..p {
            qu -= scb.wbar[i] * ub[i];
        }
        out[start] = inv_e2 * (2.0 * scb.wbar[0] * qu - ub[0]);
        for i in 1..p {
            out[start + i] = inv_e2 * (-2.0 * scb.wbar[i] * qu + ub[i]);
        }
        start += p;
    }
}

#[derive(Clone, Copy)]
struct Metrics {
    pres: f64,
    dres: f64,
    relgap: f64,
    pinfeas: Option<f64>,
    dinfeas: Option<f64>,
}

/// Termination measures on the original (unequilibrated, unnormalized) data.
/// Infeasibility certificates are only assessed once the homogenizing
/// variable has collapsed relative to its dual (`τ ≪ κ`), the signature of
/// an infeasible embedding; feasible problems keep `τ` bounded away from
/// zero and must never trip the certificate path on transient iterates.
fn metrics(sf: &StandardForm, x: &[f64], s: &[f64], z: &[f64], tau: f64, kappa: f64) -> Metrics {
    let (n, m) = (sf.n, sf.m);
    let inv_tau = 1.0 / tau;
    // unscale: x̂_orig = dcol ∘ x, ŝ_orig = s/σ, ẑ_orig = σ·cost_scale·z
    let xh: Vec<f64> = x
        .iter()
        .zip(&sf.dcol)
        .map(|(v, d)| v * d * inv_tau)
        .collect();
    let sh: Vec<f64> = (0..m).map(|i| s[i] / sf.sigma[i] * inv_tau).collect();
    let zh: Vec<f64> = (0..m)
        .map(|i| z[i] * sf.sigma[i] * sf.cost_scale * inv_tau)
        .collect();

    let mut gx = vec![0.0; m];
    sf.g_mul(&sf.g0, &xh, &mut gx);
    let mut pr = vec![0.0; m];
    for i in 0..m {
        pr[i] = gx[i] + sh[i] - sf.h0[i];
    }
    let pscale = 1.0f64.max(sf.norm_h).max(norm2(&gx)).max(norm2(&sh));
    let pres = norm2(&pr) / pscale;

    let mut gtz = vec![0.0; n];
    sf.gt_mul(&sf.g0, &zh, &mut gtz);
    let mut dr = vec![0.0; n];
    for j in 0..n {
        dr[j] = gtz[j] + sf.c0[j];
    }
    let dscale = 1.0f64.max(sf.norm_c).max(norm2(&gtz));
    let dres = norm2(&dr) / dscale;

    let pcost = dot(&sf.c0, &xh);
    let absgap = dot(&sh, &zh);
    let relgap = absgap / pcost.abs().max(1.0);

    // Certificate quality, judged on the equilibrated data where every
    // block has unit peak magnitude. On the raw data a feasible but
    // badly-ranged problem can sit within tolerance of infeasibility, which
    // is exactly the ambiguity equilibration removes.
    let embedding_collapsed = tau < 1e-2 * kappa;
    let hz = dot(&sf.h, z);
    let pinfeas = if embedding_collapsed && hz < 0.0 {
        let mut gtz = vec![0.0; n];
        sf.gt_mul(&sf.g, z, &mut gtz);
        Some(norm2(&gtz) * (1.0 + norm2(&sf.h)) / (-hz))
    } else {
        None
    };
    let cx_scaled = dot(&sf.c, x);
    let dinfeas = if embedding_collapsed && cx_scaled < 0.0 {
        let mut gx = vec![0.0; m];
        sf.g_mul(&sf.g, x, &mut gx);
        for i in 0..m {
            gx[i] += s[i];
        }
        Some(norm2(&gx) * 2.0 / (-cx_scaled))
    } else {
        None
    };
    Metrics {
        pres,
        dres,
        relgap,
        pinfeas,
        dinfeas,
    }
}

pub(super) fn solve(prog: &ConeProgram, tol: f64, max_iter: usize) -> Solution {
    let sf = StandardForm::build(prog);
    let layout = &sf.layout;
    let (n, m) = (sf.n, sf.m);
    let degree = layout.degree() as f64;
    let e = cone_identity(layout);

    let mut x = vec![0.0; n];
    let mut s = e.clone();
    let mut z = e.clone();
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut rx = vec![0.0; n];
    let mut rz = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let mut tmp_m = vec![0.0; m];
    let mut ds = vec![0.0; m];
    let mut dsc = vec![0.0; m];
    let mut wds = vec![0.0; m];
    let mut bz = vec![0.0; m];
    let mut x1 = vec![0.0; n];
    let mut z1 = vec![0.0; m];
    let mut x2 = vec![0.0; n];
    let mut z2 = vec![0.0; m];
    let mut dx = vec![0.0; n];
    let mut dz = vec![0.0; m];
    let mut dsvec = vec![0.0; m];
    let mut scaled_s = vec![0.0; m];
    let mut scaled_z = vec![0.0; m];

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    // best iterate seen so far, by the worst of the three relative measures
    let mut best_x = x.clone();
    let mut best_z = z.clone();
    let mut best_tau = tau;
    let mut best_metrics = metrics(&sf, &x, &s, &z, tau, kappa);
    let mut best_composite = f64::INFINITY;

    // Iterate past the requested tolerance down to the numerical floor: the
    // sharper the complementarity, the sharper downstream argmin-dependent
    // checks (support identification, allocation identities).
    let deep_tol = tol * TOL_SAFETY;
    let mut no_improve = 0usize;
    let trace = std::env::var("NETLOC_SOLVER_TRACE").is_ok();
    for iter in 0..=max_iter {
        let mt = metrics(&sf, &x, &s, &z, tau, kappa);
        if trace {
            eprintln!(
                "iter {iter:3} pres {:9.3e} dres {:9.3e} relgap {:9.3e} tau {:9.3e} kappa {:9.3e} pinf {:?} dinf {:?}",
                mt.pres, mt.dres, mt.relgap, tau, kappa, mt.pinfeas, mt.dinfeas
            );
        }
        iterations = iter;
        let composite = mt.pres.max(mt.dres).max(mt.relgap);
        if composite < best_composite {
            best_composite = composite;
            best_x.copy_from_slice(&x);
            best_z.copy_from_slice(&z);
            best_tau = tau;
            best_metrics = mt;
            no_improve = 0;
        } else {
            no_improve += 1;
        }
        if best_composite <= deep_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if let Some(q) = mt.pinfeas {
            if q <= tol {
                status = SolveStatus::PrimalInfeasible;
                return extract(&sf, status, &x, &z, tau, iterations, &mt);
            }
        }
        if let Some(q) = mt.dinfeas {
            if q <= tol {
                status = SolveStatus::DualInfeasible;
                return extract(&sf, status, &x, &z, tau, iterations, &mt);
            }
        }
        if iter == max_iter {
            break;
        }
        // floor reached: residuals met the target and no longer improve
        if best_composite <= tol && (no_improve >= 2 || composite > 1e3 * best_composite) {
            status = SolveStatus::Optimal;
            break;
        }
        // hopeless plateau above the target
        if no_improve >= 10 {
            break;
        }

        let sc = match NtScaling::compute(layout, &s, &z) {
            Some(sc) => sc,
            None => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let mu_now = (dot(&s, &z) + tau * kappa) / (degree + 1.0);
        let passes = if mu_now < 1e-9 { 2 * REFINE_PASSES } else { REFINE_PASSES };
        let kkt = match KktSolver::new(&sf, &sc, passes) {
            Some(k) => k,
            None => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };

        // residuals of the embedding
        sf.gt_mul(&sf.g, &z, &mut rx);
        for j in 0..n {
            rx[j] += sf.c[j] * tau;
        }
        sf.g_mul(&sf.g, &x, &mut rz);
        for i in 0..m {
            rz[i] += s[i] - sf.h[i] * tau;
        }
        let rtau = kappa + dot(&sf.c, &x) + dot(&sf.h, &z);
        let mu = (dot(&s, &z) + tau * kappa) / (degree + 1.0);

        // constant-column solve: (x₁, z₁) = K⁻¹(−c, h)
        tmp_n.iter_mut().zip(&sf.c).for_each(|(v, c)| *v = -c);
        kkt.solve(&tmp_n, &sf.h, &mut x1, &mut z1);
        let denom = dot(&sf.c, &x1) + dot(&sf.h, &z1) - kappa / tau;
        if !denom.is_finite() || denom.abs() < f64::MIN_POSITIVE {
            status = SolveStatus::NumericalFailure;
            break;
        }

        // affine direction: d_s = λ∘λ, d_τκ = τκ, full residual reduction
        jordan_prod(layout, &sc.lambda, &sc.lambda, &mut ds);
        for j in 0..n {
            tmp_n[j] = -rx[j];
        }
        for i in 0..m {
            bz[i] = -rz[i] + s[i]; // W(λ \ λ∘λ) = Wλ = s
        }
        kkt.solve(&tmp_n, &bz, &mut x2, &mut z2);
        let btau = -rtau + kappa;
        let dtau_a = (btau - dot(&sf.c, &x2) - dot(&sf.h, &z2)) / denom;
        for j in 0..n {
            dx[j] = x2[j] + dtau_a * x1[j];
        }
        for i in 0..m {
            dz[i] = z2[i] + dtau_a * z1[i];
        }
        sc.apply_w2(layout, &dz, &mut tmp_m);
        for i in 0..m {
            dsvec[i] = -s[i] - tmp_m[i];
        }
        let dkappa_a = -(tau * kappa + kappa * dtau_a) / tau;

        let mut alpha = max_step(layout, &s, &dsvec)
            .min(max_step(layout, &z, &dz))
            .min(1.0);
        if dtau_a < 0.0 {
            alpha = alpha.min(-tau / dtau_a);
        }
        if dkappa_a < 0.0 {
            alpha = alpha.min(-kappa / dkappa_a);
        }
        let sigma = (1.0 - alpha.min(1.0)).powi(3).clamp(0.0, 1.0);

        // combined direction with Mehrotra correction in scaled space
        sc.apply_winv(layout, &dsvec, &mut scaled_s);
        sc.apply_w(layout, &dz, &mut scaled_z);
        jordan_prod(layout, &scaled_s, &scaled_z, &mut dsc);
        for i in 0..m {
            dsc[i] += ds[i] - sigma * mu * e[i];
        }
        let dtk = tau * kappa + dtau_a * dkappa_a - sigma * mu;

        let res_scale = 1.0 - sigma;
        jordan_div(layout, &sc.lambda, &dsc, &mut tmp_m);
        sc.apply_w(layout, &tmp_m, &mut wds);
        for j in 0..n {
            tmp_n[j] = -res_scale * rx[j];
        }
        for i in 0..m {
            bz[i] = -res_scale * rz[i] + wds[i];
        }
        kkt.solve(&tmp_n, &bz, &mut x2, &mut z2);
        let btau = -res_scale * rtau + dtk / tau;
        let dtau = (btau - dot(&sf.c, &x2) - dot(&sf.h, &z2)) / denom;
        for j in 0..n {
            dx[j] = x2[j] + dtau * x1[j];
        }
        for i in 0..m {
            dz[i] = z2[i] + dtau * z1[i];
        }
        sc.apply_w2(layout, &dz, &mut tmp_m);
        for i in 0..m {
            dsvec[i] = -wds[i] - tmp_m[i];
        }
        let dkappa = -(dtk + kappa * dtau) / tau;

        let mut step = max_step(layout, &s, &dsvec).min(max_step(layout, &z, &dz));
        if dtau < 0.0 {
            step = step.min(-tau / dtau);
        }
        if dkappa < 0.0 {
            step = step.min(-kappa / dkappa);
        }
        let step = (STEP_BACKOFF * step).min(1.0);
        if !step.is_finite() || step <= 0.0 {
            status = SolveStatus::NumericalFailure;
            break;
        }

        axpy(step, &dx, &mut x);
        axpy(step, &dz, &mut z);
        axpy(step, &dsvec, &mut s);
        tau += step * dtau;
        kappa += step * dkappa;
        if !tau.is_finite() || tau <= 0.0 || !kappa.is_finite() || kappa <= 0.0 {
            status = SolveStatus::NumericalFailure;
            break;
        }
    }

    // Report the best iterate; accept it as optimal whenever it meets the
    // requested tolerance even if the inner target was never reached.
    if status != SolveStatus::Optimal && best_composite <= tol {
        status = SolveStatus::Optimal;
    }
    extract(&sf, status, &best_x, &best_z, best_tau, iterations, &best_metrics)
}

#[allow(clippy::too_many_arguments)]
fn extract(
    sf: &StandardForm,
    status: SolveStatus,
    x: &[f64],
    z: &[f64],
    tau: f64,
    iterations: usize,
    mt: &Metrics,
) -> Solution {
    let m = sf.m;
    // original-scale iterates
    let z_raw: Vec<f64> = (0..m).map(|i| z[i] * sf.sigma[i]).collect();
    let x_raw: Vec<f64> = x.iter().zip(&sf.dcol).map(|(v, d)| v * d).collect();

    let (v, z_report, objective_value) = match status {
        SolveStatus::PrimalInfeasible => {
            let hz = dot(&sf.h0, &z_raw);
            let scale = if hz < 0.0 { -1.0 / hz } else { 1.0 };
            let cert: Vec<f64> = z_raw.iter().map(|v| v * scale).collect();
            (vec![0.0; sf.n], cert, f64::NAN)
        }
        SolveStatus::DualInfeasible => {
            let cx = dot(&sf.c0, &x_raw);
            let scale = if cx < 0.0 { -1.0 / cx } else { 1.0 };
            let ray: Vec<f64> = x_raw.iter().map(|v| v * scale).collect();
            (ray, vec![0.0; m], f64::NEG_INFINITY)
        }
        _ => {
            let inv_tau = 1.0 / tau;
            let v: Vec<f64> = x_raw.iter().map(|v| v * inv_tau).collect();
            let zh: Vec<f64> = z_raw
                .iter()
                .map(|v| v * inv_tau * sf.cost_scale)
                .collect();
            let obj = dot(&sf.c0, &v);
            (v, zh, obj)
        }
    };

    let mut nonneg_duals = Vec::with_capacity(sf.mask_rows);
    let mut linear_duals = Vec::with_capacity(sf.lin_rows);
    let mut soc_duals = Vec::with_capacity(sf.layout.socs.len());
    let mut row = 0;
    for _ in 0..sf.mask_rows {
        nonneg_duals.push(z_report[row]);
        row += 1;
    }
    for _ in 0..sf.lin_rows {
        linear_duals.push(z_report[row]);
        row += 1;
    }
    for &p in &sf.layout.socs {
        soc_duals.push(z_report[row..row + p].to_vec());
        row += p;
    }

    Solution {
        status,
        v,
        objective_value,
        iterations,
        residuals: Residuals {
            primal: mt.pres,
            dual: mt.dres,
            gap: mt.relgap,
        },
        soc_duals,
        linear_duals,
        nonneg_duals,
    }
}
