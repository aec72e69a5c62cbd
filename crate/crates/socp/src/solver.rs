//! Homogeneous self-dual interior-point method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.
//!
//! The Newton systems are reduced to the `n × n` normal matrix
//! `Gᵀ W⁻² G`, which is formed block by block and factored densely. This
//! suits programs with a few hundred variables and up to a few hundred
//! thousand cone rows. Equality constraints are eliminated beforehand
//! through an SVD null-space basis.

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::cones::{
    add_identity, jordan_divide, jordan_product, max_step, min_eigenvalue, NtScaling,
};
use crate::program::{dot, norm, Block, Cone, ConeProgram};

/// How linear equalities are handled before the conic iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualityMode {
    /// An inconsistent system (residual above the tolerance) is reported as
    /// infeasible.
    Strict,
    /// Equalities are replaced by their projection onto the range of the
    /// equality operator: the feasible affine set becomes the set of
    /// least-squares solutions. The residual is reported in the outcome.
    LeastSquares,
}

#[derive(Debug, Clone)]
pub struct Settings {
    /// Feasibility and duality-gap tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub equality: EqualityMode,
    /// Singular values below `rank_tol · σ_max` count as zero.
    pub rank_tol: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// If progress stalls before `tol` is met, an iterate whose residuals
    /// and gap are all below this value is still reported as optimal.
    pub reduced_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            equality: EqualityMode::Strict,
            rank_tol: 1e-9,
            step_fraction: 0.99,
            reduced_tol: 1e-7,
        }
    }
}

impl Settings {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// A primal infeasibility certificate was found.
    Infeasible,
    /// A dual infeasibility certificate (unbounded direction) was found.
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// Farkas certificate of primal infeasibility: `z ∈ K`, `Gᵀz + Aᵀy = 0`,
/// `hᵀz + bᵀy = -1`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖Gᵀz + Aᵀy‖` after normalization.
    pub residual: f64,
    /// Share of `hᵀz + bᵀy` contributed by each tag, largest first.
    pub family_weights: Vec<(String, f64)>,
}

impl Certificate {
    pub fn dominant_family(&self) -> Option<&str> {
        self.family_weights.first().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    /// Cone multipliers (zero unless a solution was found).
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Relative primal residual `‖s + Gx − h‖ / max(1, ‖h‖)`, measured on the
    /// equilibrated program.
    pub primal_residual: f64,
    /// Relative dual residual `‖Gᵀz + c‖ / max(1, ‖c‖)`, measured on the
    /// equilibrated program.
    pub dual_residual: f64,
    pub gap: f64,
    /// Unscaled largest cone violation of `h − Gx` at the returned `x`.
    pub cone_violation: f64,
    /// `‖Ax − b‖_∞` at the returned `x`.
    pub equality_residual: f64,
    pub certificate: Option<Certificate>,
}

impl SolveOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Solve with default settings and the given tolerance.
pub fn solve(prog: &ConeProgram, tol: f64) -> SolveOutcome {
    solve_with(prog, &Settings::with_tol(tol))
}

pub fn solve_with(prog: &ConeProgram, settings: &Settings) -> SolveOutcome {
    let n = prog.num_vars();
    if prog.num_eq() == 0 {
        let out = equilibrated(prog.objective(), prog.g(), prog.h(), prog.blocks(), n, settings);
        return finish(prog, out, None);
    }
    match eliminate_equalities(prog, settings) {
        Ok(elim) => {
            let out = equilibrated(&elim.c, &elim.g, &elim.h, prog.blocks(), elim.basis.ncols(), settings);
            finish(prog, out, Some(&elim))
        }
        Err(cert) => SolveOutcome {
            status: Status::Infeasible,
            x: vec![0.0; n],
            z: vec![0.0; prog.num_cone_rows()],
            objective: f64::NAN,
            iterations: 0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            gap: f64::NAN,
            cone_violation: f64::NAN,
            equality_residual: f64::NAN,
            certificate: Some(cert),
        },
    }
}

struct Elimination {
    x0: DVector<f64>,
    basis: DMatrix<f64>,
    c: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    residual: f64,
}

fn eliminate_equalities(prog: &ConeProgram, settings: &Settings) -> Result<Elimination, Certificate> {
    let n = prog.num_vars();
    let p = prog.num_eq();
    // pad to at least n rows so the SVD returns a full right basis
    let rows = p.max(n);
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for i in 0..p {
        for j in 0..n {
            a[(i, j)] = prog.eq_a()[i * n + j];
        }
    }
    let mut b = DVector::<f64>::zeros(rows);
    for i in 0..p {
        b[i] = prog.eq_b()[i];
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let sv = &svd.singular_values;
    // singular values are not guaranteed sorted; order them
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    let smax = sv[order[0]];
    let rank = order.iter().filter(|&&i| smax > 0.0 && sv[i] > settings.rank_tol * smax).count();
    let mut x0 = DVector::<f64>::zeros(n);
    for &k in order.iter().take(rank) {
        let coef = u.column(k).dot(&b) / sv[k];
        x0 += vt.row(k).transpose() * coef;
    }
    let resid_vec = &a * &x0 - &b;
    let residual = resid_vec.amax();
    let bscale = b.amax().max(1.0);
    if settings.equality == EqualityMode::Strict && residual > 1e2 * settings.tol.max(settings.rank_tol) * bscale {
        // y = (A x0 − b) satisfies Aᵀ y = 0 (least-squares optimality) and
        // bᵀ y = −‖A x0 − b‖² < 0.
        let y: Vec<f64> = resid_vec.iter().take(p).copied().collect();
        let by = dot(&y, prog.eq_b());
        let scale = -1.0 / by;
        let y: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let aty = (0..n)
            .map(|j| (0..p).map(|i| prog.eq_a()[i * n + j] * y[i]).sum::<f64>())
            .collect::<Vec<_>>();
        return Err(Certificate {
            z: vec![0.0; prog.num_cone_rows()],
            residual: norm(&aty),
            y,
            family_weights: vec![("equality".to_string(), 1.0)],
        });
    }
    let k = n - rank;
    let mut basis = DMatrix::<f64>::zeros(n, k);
    for (col, &idx) in order.iter().skip(rank).enumerate() {
        basis.set_column(col, &vt.row(idx).transpose());
    }
    let c = DVector::from_column_slice(prog.objective());
    let c_red = basis.tr_mul(&c);
    let m = prog.num_cone_rows();
    let gfull = DMatrix::from_row_slice(m, n, prog.g());
    let g_red = &gfull * &basis;
    let gx0 = &gfull * &x0;
    let h: Vec<f64> = prog.h().iter().zip(gx0.iter()).map(|(h, g)| h - g).collect();
    let mut g = vec![0.0; m * k];
    for i in 0..m {
        for j in 0..k {
            g[i * k + j] = g_red[(i, j)];
        }
    }
    debug!("equality presolve: {p} rows, rank {rank}, residual {residual:.3e}");
    Ok(Elimination { x0, basis, c: c_red.as_slice().to_vec(), g, h, residual })
}

struct RawOutcome {
    status: Status,
    x: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    iterations: usize,
    pres: f64,
    dres: f64,
    gap: f64,
}

fn finish(prog: &ConeProgram, raw: RawOutcome, elim: Option<&Elimination>) -> SolveOutcome {
    let n = prog.num_vars();
    let mut certificate = None;
    let x = match raw.status {
        Status::Infeasible => {
            let h = elim.map_or(prog.h(), |e| e.h.as_slice());
            let hz = dot(h, &raw.z);
            let z: Vec<f64> = raw.z.iter().map(|v| -v / hz).collect();
            let gtz = mat_t_vec(prog.g(), &z, n);
            // Gᵀz lies in the row space of A; recover y with Aᵀy = −Gᵀz
            let y = match elim {
                Some(_) => {
                    let at = DMatrix::from_row_slice(prog.num_eq(), n, prog.eq_a()).transpose();
                    let rhs = -DVector::from_vec(gtz.clone());
                    at.svd(true, true)
                        .solve(&rhs, 1e-12)
                        .map(|v| v.as_slice().to_vec())
                        .unwrap_or_else(|_| vec![0.0; prog.num_eq()])
                }
                None => Vec::new(),
            };
            let mut resid = gtz;
            for (i, yi) in y.iter().enumerate() {
                for j in 0..n {
                    resid[j] += prog.eq_a()[i * n + j] * yi;
                }
            }
            let mut weights: Vec<(String, f64)> = Vec::new();
            for b in prog.blocks() {
                let w: f64 = (b.start..b.start + b.cone.dim()).map(|i| -h[i] * z[i]).sum();
                let name = prog.tag_name(b.tag);
                match weights.iter_mut().find(|(n, _)| n == name) {
                    Some(e) => e.1 += w,
                    None => weights.push((name.to_string(), w)),
                }
            }
            weights.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
            certificate = Some(Certificate {
                z,
                y: if y.is_empty() { vec![0.0; prog.num_eq()] } else { y },
                residual: norm(&resid),
                family_weights: weights,
            });
            vec![0.0; n]
        }
        Status::Unbounded => match elim {
            Some(e) => (&e.basis * DVector::from_column_slice(&raw.x)).as_slice().to_vec(),
            None => raw.x.clone(),
        },
        _ => {
            let xs = DVector::from_iterator(raw.x.len(), raw.x.iter().map(|v| v / raw.tau));
            match elim {
                Some(e) => (&e.x0 + &e.basis * xs).as_slice().to_vec(),
                None => xs.as_slice().to_vec(),
            }
        }
    };
    let eq_residual = elim.map_or(0.0, |e| e.residual);
    let (objective, cone_violation, equality_residual) = match raw.status {
        Status::Infeasible | Status::Unbounded => (f64::NAN, f64::NAN, eq_residual),
        _ => (
            prog.objective_value(&x),
            prog.cone_violation(&x),
            if prog.num_eq() > 0 { prog.equality_violation(&x) } else { 0.0 },
        ),
    };
    let z = match raw.status {
        Status::Infeasible | Status::Unbounded => vec![0.0; prog.num_cone_rows()],
        _ => raw.z.iter().map(|v| v / raw.tau).collect(),
    };
    SolveOutcome {
        status: raw.status,
        x,
        z,
        objective,
        iterations: raw.iterations,
        primal_residual: raw.pres,
        dual_residual: raw.dres,
        gap: raw.gap,
        cone_violation,
        equality_residual,
        certificate,
    }
}

fn mat_vec(g: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    g.chunks_exact(n).map(|row| dot(row, x)).collect()
}

fn mat_t_vec(g: &[f64], z: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (row, zi) in g.chunks_exact(n).zip(z) {
        if *zi != 0.0 {
            for (o, r) in out.iter_mut().zip(row) {
                *o += r * zi;
            }
        }
    }
    out
}

/// Factored reduced KKT system for a fixed scaling.
struct Kkt<'a> {
    g: &'a [f64],
    blocks: &'a [Block],
    n: usize,
    w: NtScaling,
    chol: Factor,
}

const CHUNK_ROWS: usize = 1024;

impl<'a> Kkt<'a> {
    fn new(g: &'a [f64], blocks: &'a [Block], n: usize, w: NtScaling) -> Option<Self> {
        let h = normal_matrix(g, blocks, n, &w);
        let chol = factor(h)?;
        Some(Self { g, blocks, n, w, chol })
    }

    fn winv2(&self, u: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; u.len()];
        let mut out = vec![0.0; u.len()];
        self.w.apply_winv(self.blocks, u, &mut t);
        self.w.apply_winv(self.blocks, &t, &mut out);
        out
    }

    fn w2(&self, u: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; u.len()];
        let mut out = vec![0.0; u.len()];
        self.w.apply_w(self.blocks, u, &mut t);
        self.w.apply_w(self.blocks, &t, &mut out);
        out
    }

    /// Solve `[0 Gᵀ; G −W²] (dx, dz) = (bx, bz)`.
    fn solve_once(&self, bx: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.winv2(bz);
        let gt = mat_t_vec(self.g, &t, self.n);
        let rhs: Vec<f64> = bx.iter().zip(&gt).map(|(a, b)| a + b).collect();
        let dx = self.chol.solve(&rhs);
        let gdx = mat_vec(self.g, &dx, self.n);
        let diff: Vec<f64> = gdx.iter().zip(bz).map(|(a, b)| a - b).collect();
        (dx, self.winv2(&diff))
    }

    /// Residual of `(dx, dz)` in the KKT system.
    fn residual(&self, bx: &[f64], bz: &[f64], dx: &[f64], dz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gtdz = mat_t_vec(self.g, dz, self.n);
        let ex: Vec<f64> = bx.iter().zip(&gtdz).map(|(a, b)| a - b).collect();
        let gdx = mat_vec(self.g, dx, self.n);
        let w2dz = self.w2(dz);
        let ez: Vec<f64> = bz.iter().zip(gdx.iter().zip(&w2dz)).map(|(b, (g, w))| b - (g - w)).collect();
        (ex, ez)
    }

    /// Solve with iterative refinement while the residual is noticeable and
    /// still shrinking (at most three passes).
    fn solve(&self, bx: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dx, mut dz) = self.solve_once(bx, bz);
        let scale = norm(bx).max(norm(bz)).max(1e-300);
        let mut prev = f64::INFINITY;
        for _ in 0..3 {
            let (ex, ez) = self.residual(bx, bz, &dx, &dz);
            let r = norm(&ex).max(norm(&ez));
            if r <= 1e-12 * scale || r >= 0.5 * prev {
                break;
            }
            prev = r;
            let (cx, cz) = self.solve_once(&ex, &ez);
            dx.iter_mut().zip(&cx).for_each(|(a, b)| *a += b);
            dz.iter_mut().zip(&cz).for_each(|(a, b)| *a += b);
        }
        (dx, dz)
    }
}

/// Cholesky factor of `S H S` with `S = diag(H)^{-1/2}`.
struct Factor {
    chol: Cholesky<f64, Dyn>,
    scale: Vec<f64>,
}

impl Factor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_iterator(rhs.len(), rhs.iter().zip(&self.scale).map(|(r, s)| r * s));
        let y = self.chol.solve(&b);
        y.iter().zip(&self.scale).map(|(v, s)| v * s).collect()
    }
}

/// Factors the normal matrix after symmetric diagonal scaling, adding a
/// growing multiple of the identity only if the scaled matrix is still not
/// numerically positive definite.
fn factor(mut h: DMatrix<f64>) -> Option<Factor> {
    let n = h.nrows();
    let scale: Vec<f64> = (0..n).map(|i| if h[(i, i)] > 0.0 { 1.0 / h[(i, i)].sqrt() } else { 1.0 }).collect();
    for j in 0..n {
        for i in 0..n {
            h[(i, j)] *= scale[i] * scale[j];
        }
    }
    let mut reg = 0.0;
    for attempt in 0..8 {
        if let Some(chol) = Cholesky::new(h.clone()) {
            if attempt > 0 {
                debug!("scaled normal matrix regularized by {reg:.2e}");
            }
            return Some(Factor { chol, scale });
        }
        let next = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
        for i in 0..n {
            h[(i, i)] += next - reg;
        }
        reg = next;
    }
    None
}

/// `Gᵀ W⁻² G`, accumulated from chunks of scaled rows `W⁻¹ G`.
fn normal_matrix(g: &[f64], blocks: &[Block], n: usize, w: &NtScaling) -> DMatrix<f64> {
    let max_dim = blocks.iter().map(|b| b.cone.dim()).max().unwrap_or(0);
    let cap = CHUNK_ROWS.max(max_dim);
    // scaled rows are stored as columns of `st` (n × cap)
    let mut st = DMatrix::<f64>::zeros(n, cap);
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut filled = 0;
    let flush = |st: &DMatrix<f64>, filled: usize, h: &mut DMatrix<f64>| {
        if filled == 0 {
            return;
        }
        let part = st.columns(0, filled);
        let s = part.transpose();
        h.gemm(1.0, &part, &s, 1.0);
    };
    let mut scratch = vec![0.0; n];
    for (bi, b) in blocks.iter().enumerate() {
        let d = b.cone.dim();
        if filled + d > cap {
            flush(&st, filled, &mut h);
            filled = 0;
        }
        match b.cone {
            Cone::NonNeg(_) => {
                for r in 0..d {
                    let row = b.start + r;
                    let inv = 1.0 / w.v[row];
                    let src = &g[row * n..(row + 1) * n];
                    let mut col = st.column_mut(filled);
                    for j in 0..n {
                        col[j] = src[j] * inv;
                    }
                    filled += 1;
                }
            }
            Cone::Soc(_) => {
                let v = &w.v[b.start..b.start + d];
                let beta = w.beta[bi];
                // p = (J v)ᵀ G_blk
                scratch.iter_mut().for_each(|x| *x = 0.0);
                for r in 0..d {
                    let row = b.start + r;
                    let coef = if r == 0 { v[0] } else { -v[r] };
                    for (p, gv) in scratch.iter_mut().zip(&g[row * n..(row + 1) * n]) {
                        *p += coef * gv;
                    }
                }
                for r in 0..d {
                    let row = b.start + r;
                    let jv = if r == 0 { v[0] } else { -v[r] };
                    let jsign = if r == 0 { 1.0 } else { -1.0 };
                    let src = &g[row * n..(row + 1) * n];
                    let mut col = st.column_mut(filled);
                    for j in 0..n {
                        col[j] = (2.0 * jv * scratch[j] - jsign * src[j]) / beta;
                    }
                    filled += 1;
                }
            }
        }
    }
    flush(&st, filled, &mut h);
    // keep exact symmetry
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = avg;
            h[(j, i)] = avg;
        }
    }
    h
}

/// Ruiz equilibration passes applied before the interior-point iterations.
const RUIZ_PASSES: usize = 8;

/// Runs [`hsde`] on `E G D`, `E h`, `D c` with positive diagonal `E` (constant
/// on each second-order cone, so the cone is preserved) and `D`, chosen to
/// bring every row and column of `G` to unit infinity norm. The returned
/// `x` and `z` are mapped back to the original problem; residuals and gap
/// refer to the scaled one.
fn equilibrated(c: &[f64], g: &[f64], h: &[f64], blocks: &[Block], n: usize, st: &Settings) -> RawOutcome {
    let m = h.len();
    if n == 0 || m == 0 {
        return hsde(c, g, h, blocks, n, st);
    }
    let mut gs = g.to_vec();
    let mut e = vec![1.0; m];
    let mut d = vec![1.0; n];
    let clamp = |v: f64| if v > 0.0 { (1.0 / v.sqrt()).clamp(1e-4, 1e4) } else { 1.0 };
    for _ in 0..RUIZ_PASSES {
        let mut col = vec![0.0f64; n];
        for b in blocks {
            let rows = &mut gs[b.start * n..(b.start + b.cone.dim()) * n];
            let scale_rows = |rows: &mut [f64], f: f64| rows.iter_mut().for_each(|v| *v *= f);
            match b.cone {
                Cone::NonNeg(_) => {
                    for (i, row) in rows.chunks_exact_mut(n).enumerate() {
                        let f = clamp(row.iter().fold(0.0, |a, v| a.max(v.abs())));
                        scale_rows(row, f);
                        e[b.start + i] *= f;
                    }
                }
                Cone::Soc(dim) => {
                    let f = clamp(rows.iter().fold(0.0, |a, v| a.max(v.abs())));
                    scale_rows(rows, f);
                    e[b.start..b.start + dim].iter_mut().for_each(|v| *v *= f);
                }
            }
            for row in rows.chunks_exact(n) {
                for (cm, v) in col.iter_mut().zip(row) {
                    *cm = cm.max(v.abs());
                }
            }
        }
        let fc: Vec<f64> = col.iter().map(|v| clamp(*v)).collect();
        for row in gs.chunks_exact_mut(n) {
            row.iter_mut().zip(&fc).for_each(|(v, f)| *v *= f);
        }
        d.iter_mut().zip(&fc).for_each(|(a, f)| *a *= f);
    }
    let hs: Vec<f64> = h.iter().zip(&e).map(|(a, b)| a * b).collect();
    let cs: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a * b).collect();
    let mut out = hsde(&cs, &gs, &hs, blocks, n, st);
    out.x.iter_mut().zip(&d).for_each(|(a, b)| *a *= b);
    out.z.iter_mut().zip(&e).for_each(|(a, b)| *a *= b);
    out
}

#[allow(clippy::too_many_arguments)]
fn hsde(c: &[f64], g: &[f64], h: &[f64], blocks: &[Block], n: usize, st: &Settings) -> RawOutcome {
    let m = h.len();
    let degree: usize = blocks.iter().map(|b| b.cone.degree()).sum();
    let c_scale = norm(c).max(1.0);
    let h_scale = norm(h).max(1.0);

    let fail = |status, iterations| RawOutcome {
        status,
        x: vec![0.0; n],
        z: vec![0.0; m],
        tau: 1.0,
        iterations,
        pres: f64::NAN,
        dres: f64::NAN,
        gap: f64::NAN,
    };

    if n == 0 {
        // Pure feasibility of h ∈ K with no decision variables.
        let ok = min_eigenvalue(blocks, h) >= -st.tol * h_scale;
        return RawOutcome {
            status: if ok { Status::Optimal } else { Status::Infeasible },
            x: vec![],
            z: vec![0.0; m],
            tau: 1.0,
            iterations: 0,
            pres: 0.0,
            dres: 0.0,
            gap: 0.0,
        };
    }

    // Starting point from the identity-scaled KKT system.
    let ident = identity_scaling(blocks, m);
    let kkt0 = match Kkt::new(g, blocks, n, ident) {
        Some(k) => k,
        None => return fail(Status::NumericalFailure, 0),
    };
    let (mut x, zp) = kkt0.solve(&vec![0.0; n], h);
    let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
    let (_, mut z) = kkt0.solve(&c.iter().map(|v| -v).collect::<Vec<_>>(), &vec![0.0; m]);
    drop(kkt0);
    shift_interior(blocks, &mut s);
    shift_interior(blocks, &mut z);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    // iterate with the smallest worst-case residual, kept for stalls
    let mut best: Option<RawOutcome> = None;
    for iter in 0..=st.max_iter {
        let gx = mat_vec(g, &x, n);
        let gtz = mat_t_vec(g, &z, n);
        let cx = dot(c, &x);
        let hz = dot(h, &z);
        let rx: Vec<f64> = gtz.iter().zip(c).map(|(a, ci)| a + ci * tau).collect();
        let rz: Vec<f64> =
            (0..m).map(|i| s[i] + gx[i] - h[i] * tau).collect();
        let rt = kappa + cx + hz;
        let sz = dot(&s, &z);
        let mu = (sz + tau * kappa) / (degree as f64 + 1.0);

        let pres = norm(&rz) / tau / h_scale;
        let dres = norm(&rx) / tau / c_scale;
        let pcost = cx / tau;
        let dcost = -hz / tau;
        let gap = sz / (tau * tau);
        let merit = pres.max(dres).max(gap);
        if best.as_ref().map_or(true, |b| merit < b.pres.max(b.dres).max(b.gap)) {
            best = Some(RawOutcome { status: Status::NumericalFailure, x: x.clone(), z: z.clone(), tau, iterations: iter, pres, dres, gap });
        }
        debug!(
            "it {iter:3} pcost {pcost:+.8e} dcost {dcost:+.8e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} k/t {:.2e}",
            kappa / tau
        );
        let rel_ok = gap <= st.tol * pcost.abs().max(dcost.abs()).max(1e-300);
        if pres <= st.tol && dres <= st.tol && (gap <= st.tol || rel_ok) {
            return RawOutcome { status: Status::Optimal, x, z, tau, iterations: iter, pres, dres, gap };
        }
        if hz < 0.0 {
            let pinf = norm(&gtz) / c_scale / (-hz);
            if pinf <= st.tol {
                return RawOutcome { status: Status::Infeasible, x, z, tau, iterations: iter, pres, dres, gap };
            }
        }
        if cx < 0.0 {
            let sgx: Vec<f64> = s.iter().zip(&gx).map(|(a, b)| a + b).collect();
            let dinf = norm(&sgx) / h_scale / (-cx);
            if dinf <= st.tol {
                return RawOutcome { status: Status::Unbounded, x, z, tau, iterations: iter, pres, dres, gap };
            }
        }
        if iter == st.max_iter {
            break;
        }

        let (w, lambda) = NtScaling::compute(blocks, &s, &z);
        let kkt = match Kkt::new(g, blocks, n, w) {
            Some(k) => k,
            None => return stalled(best, iter, st),
        };
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        let (x1, z1) = kkt.solve(&neg_c, h);
        let denom = dot(c, &x1) + dot(h, &z1) - kappa / tau;

        let direction = |dsz: &[f64], dtk: f64, eta: f64| {
            let mut t = vec![0.0; m];
            jordan_divide(blocks, &lambda, dsz, &mut t);
            let mut wt = vec![0.0; m];
            kkt.w.apply_w(blocks, &t, &mut wt);
            let bx: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let bz: Vec<f64> = (0..m).map(|i| -eta * rz[i] - wt[i]).collect();
            let (x2, z2) = kkt.solve(&bx, &bz);
            let dtau = (-eta * rt - dtk / tau - dot(c, &x2) - dot(h, &z2)) / denom;
            let dx: Vec<f64> = x2.iter().zip(&x1).map(|(a, b)| a + dtau * b).collect();
            let dz: Vec<f64> = z2.iter().zip(&z1).map(|(a, b)| a + dtau * b).collect();
            let mut dz_s = vec![0.0; m];
            kkt.w.apply_w(blocks, &dz, &mut dz_s);
            let ds_s: Vec<f64> = t.iter().zip(&dz_s).map(|(a, b)| a - b).collect();
            let dkappa = (dtk - kappa * dtau) / tau;
            Step { dx, dz, dz_s, ds_s, dtau, dkappa }
        };
        let step_len = |d: &Step| {
            let mut a = max_step(blocks, &lambda, &d.ds_s).min(max_step(blocks, &lambda, &d.dz_s));
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        // predictor
        let mut ll = vec![0.0; m];
        jordan_product(blocks, &lambda, &lambda, &mut ll);
        let dsz_aff: Vec<f64> = ll.iter().map(|v| -v).collect();
        let aff = direction(&dsz_aff, -tau * kappa, 1.0);
        let alpha_aff = step_len(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // corrector
        let mut corr = vec![0.0; m];
        jordan_product(blocks, &aff.ds_s, &aff.dz_s, &mut corr);
        let mut dsz: Vec<f64> = (0..m).map(|i| -ll[i] - corr[i]).collect();
        add_identity(blocks, sigma * mu, &mut dsz);
        let dtk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let step = direction(&dsz, dtk, 1.0 - sigma);
        let alpha = (st.step_fraction * step_len(&step)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-12 {
            debug!("step length collapsed at iteration {iter}");
            return stalled(best, iter, st);
        }

        // s + α ds with ds = W ds̃
        let mut ds = vec![0.0; m];
        kkt.w.apply_w(blocks, &step.ds_s, &mut ds);
        let s_new: Vec<f64> = (0..m).map(|i| s[i] + alpha * ds[i]).collect();
        let z_new: Vec<f64> = (0..m).map(|i| z[i] + alpha * step.dz[i]).collect();
        if min_eigenvalue(blocks, &s_new) <= 0.0 || min_eigenvalue(blocks, &z_new) <= 0.0 {
            // rounding pushed the step onto the boundary; keep the last iterate
            return stalled(best, iter, st);
        }
        for i in 0..n {
            x[i] += alpha * step.dx[i];
        }
        s = s_new;
        z = z_new;
        tau += alpha * step.dtau;
        kappa += alpha * step.dkappa;
    }
    let mut out = stalled(best, st.max_iter, st);
    if out.status == Status::NumericalFailure {
        out.status = Status::MaxIterations;
    }
    out
}

/// Outcome when iterations cannot continue: accept the best iterate seen if
/// it meets the reduced accuracy threshold, otherwise report a numerical failure.
fn stalled(best: Option<RawOutcome>, iterations: usize, st: &Settings) -> RawOutcome {
    let mut out = best.expect("the first iteration always records an iterate");
    let chosen = out.iterations;
    out.iterations = iterations;
    let ok = out.pres <= st.reduced_tol && out.dres <= st.reduced_tol && out.gap <= st.reduced_tol;
    if ok {
        debug!("stalled; accepting iteration {chosen} at reduced accuracy: pres {:.2e} dres {:.2e} gap {:.2e}", out.pres, out.dres, out.gap);
    }
    out.status = if ok { Status::Optimal } else { Status::NumericalFailure };
    out
}

struct Step {
    dx: Vec<f64>,
    dz: Vec<f64>,
    dz_s: Vec<f64>,
    ds_s: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

fn identity_scaling(blocks: &[Block], m: usize) -> NtScaling {
    let mut v = vec![0.0; m];
    for b in blocks {
        match b.cone {
            Cone::NonNeg(d) => v[b.start..b.start + d].iter_mut().for_each(|x| *x = 1.0),
            // β = 1, v = e gives W = 2 e eᵀ − J = I
            Cone::Soc(_) => v[b.start] = 1.0,
        }
    }
    NtScaling { v, beta: vec![1.0; blocks.len()] }
}

fn shift_interior(blocks: &[Block], u: &mut [f64]) {
    let t = -min_eigenvalue(blocks, u);
    let scale = norm(u).max(1.0);
    if t >= -1e-8 * scale {
        add_identity(blocks, 1.0 + t, u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::Affine;

    #[test]
    fn abs_epigraph() {
        // min t s.t. |x − 1| ≤ t, vars (x, t)
        let mut p = ConeProgram::new(2);
        p.set_objective(&[0.0, 1.0]).unwrap();
        p.add_soc(&[Affine::new(&[0.0, 1.0], 0.0), Affine::new(&[1.0, 0.0], -1.0)]).unwrap();
        let out = solve(&p, 1e-9);
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x[0] - 1.0).abs() < 1e-6, "{:?}", out.x);
        assert!(out.objective.abs() < 1e-7);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = ConeProgram::new(1);
        p.add_nonneg(Affine::new(&[1.0], -1.0)).unwrap(); // x ≥ 1
        p.set_tag("upper");
        p.add_nonneg(Affine::new(&[-1.0], 0.0)).unwrap(); // x ≤ 0
        let out = solve(&p, 1e-8);
        assert_eq!(out.status, Status::Infeasible);
        let cert = out.certificate.unwrap();
        assert!(cert.residual < 1e-8);
        assert!(cert.z.iter().all(|z| *z >= -1e-12));
    }

    #[test]
    fn unbounded_direction_is_reported() {
        // min -x s.t. x ≥ 0
        let mut p = ConeProgram::new(1);
        p.set_objective(&[-1.0]).unwrap();
        p.add_nonneg(Affine::new(&[1.0], 0.0)).unwrap();
        assert_eq!(solve(&p, 1e-8).status, Status::Unbounded);
    }

    #[test]
    fn small_lp_with_equality() {
        // min x0 + 2 x1 s.t. x0 + x1 = 1, x ≥ 0  →  x = (1, 0)
        let mut p = ConeProgram::new(2);
        p.set_objective(&[1.0, 2.0]).unwrap();
        p.add_equality(&[1.0, 1.0], 1.0).unwrap();
        p.add_nonneg(Affine::new(&[1.0, 0.0], 0.0)).unwrap();
        p.add_nonneg(Affine::new(&[0.0, 1.0], 0.0)).unwrap();
        let out = solve(&p, 1e-9);
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x[0] - 1.0).abs() < 1e-7 && out.x[1].abs() < 1e-7);
        assert!((out.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut p = ConeProgram::new(1);
        p.add_equality(&[1.0], 1.0).unwrap();
        p.add_equality(&[1.0], 2.0).unwrap();
        p.add_soc(&[Affine::new(&[0.0], 10.0), Affine::new(&[1.0], 0.0)]).unwrap();
        let strict = solve(&p, 1e-8);
        assert_eq!(strict.status, Status::Infeasible);
        let ls = solve_with(&p, &Settings { equality: EqualityMode::LeastSquares, ..Settings::default() });
        assert_eq!(ls.status, Status::Optimal);
        assert!((ls.x[0] - 1.5).abs() < 1e-9);
        assert!((ls.equality_residual - 0.5).abs() < 1e-9);
    }

    #[test]
    fn norm_ball_projection() {
        // min ‖x − a‖ s.t. ‖x‖ ≤ 1 for a = (3, 4): x* = (0.6, 0.8), value 4
        let mut p = ConeProgram::new(3);
        p.set_objective(&[0.0, 0.0, 1.0]).unwrap();
        p.add_soc(&[
            Affine::new(&[0.0, 0.0, 1.0], 0.0),
            Affine::new(&[1.0, 0.0, 0.0], -3.0),
            Affine::new(&[0.0, 1.0, 0.0], -4.0),
        ])
        .unwrap();
        p.add_soc(&[
            Affine::new(&[0.0, 0.0, 0.0], 1.0),
            Affine::new(&[1.0, 0.0, 0.0], 0.0),
            Affine::new(&[0.0, 1.0, 0.0], 0.0),
        ])
        .unwrap();
        let out = solve(&p, 1e-9);
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective - 4.0).abs() < 1e-7);
        assert!((out.x[0] - 0.6).abs() < 1e-6 && (out.x[1] - 0.8).abs() < 1e-6);
    }
}
