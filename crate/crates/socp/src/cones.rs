//! Jordan-algebra helpers and Nesterov-Todd scaling for products of
//! nonnegative orthants and second-order cones.

use crate::program::{dot, Block, Cone};

/// Nesterov-Todd scaling `W` with `W z = W⁻¹ s = λ`.
///
/// Orthant rows store `w_i = √(s_i / z_i)`. A second-order block stores
/// `β` and the hyperbolic unit vector `v` (`vᵀJv = 1`) so that
/// `W = β (2 v vᵀ − J)` and `W⁻¹ = β⁻¹ (2 J v vᵀ J − J)`.
#[derive(Debug, Clone)]
pub struct NtScaling {
    /// Orthant diagonal or `v` entries, laid out like the cone rows.
    pub v: Vec<f64>,
    /// `β` per block (unused for orthant blocks).
    pub beta: Vec<f64>,
}

/// `√(u₀² − ‖u₁‖²)`, NaN-free for points inside the cone.
pub fn soc_jnorm(u: &[f64]) -> f64 {
    let r = crate::program::norm(&u[1..]);
    ((u[0] - r) * (u[0] + r)).max(0.0).sqrt()
}

impl NtScaling {
    /// Scaling and the scaled point `λ` for interior `s`, `z`.
    pub fn compute(blocks: &[Block], s: &[f64], z: &[f64]) -> (NtScaling, Vec<f64>) {
        let m = s.len();
        let mut v = vec![0.0; m];
        let mut beta = vec![1.0; blocks.len()];
        let mut lambda = vec![0.0; m];
        for (bi, b) in blocks.iter().enumerate() {
            let r = b.start..b.start + b.cone.dim();
            let (sb, zb) = (&s[r.clone()], &z[r.clone()]);
            match b.cone {
                Cone::NonNeg(_) => {
                    for (k, i) in r.clone().enumerate() {
                        v[i] = (sb[k] / zb[k]).sqrt();
                        lambda[i] = (sb[k] * zb[k]).sqrt();
                    }
                }
                Cone::Soc(d) => {
                    let aa = soc_jnorm(sb);
                    let bb = soc_jnorm(zb);
                    let bt = (aa / bb).sqrt();
                    let cc = ((dot(sb, zb) / (aa * bb) + 1.0) / 2.0).sqrt();
                    let vb = &mut v[r.clone()];
                    vb[0] = (sb[0] / aa + zb[0] / bb) / (2.0 * cc);
                    for k in 1..d {
                        vb[k] = (sb[k] / aa - zb[k] / bb) / (2.0 * cc);
                    }
                    // vb holds the normalized scaling point w̄; store
                    // v = (w̄ + e) / √(2 (w̄₀ + 1)) instead
                    let den = (2.0 * (vb[0] + 1.0)).sqrt();
                    vb[0] += 1.0;
                    vb.iter_mut().for_each(|x| *x /= den);
                    beta[bi] = bt;
                    let lb = &mut lambda[r.clone()];
                    soc_apply_w(vb, bt, zb, lb);
                }
            }
        }
        (NtScaling { v, beta }, lambda)
    }

    /// `out = W u` (`W` is symmetric).
    pub fn apply_w(&self, blocks: &[Block], u: &[f64], out: &mut [f64]) {
        for (bi, b) in blocks.iter().enumerate() {
            let r = b.start..b.start + b.cone.dim();
            match b.cone {
                Cone::NonNeg(_) => {
                    for i in r {
                        out[i] = self.v[i] * u[i];
                    }
                }
                Cone::Soc(_) => {
                    soc_apply_w(&self.v[r.clone()], self.beta[bi], &u[r.clone()], &mut out[r]);
                }
            }
        }
    }

    /// `out = W⁻¹ u`.
    pub fn apply_winv(&self, blocks: &[Block], u: &[f64], out: &mut [f64]) {
        for (bi, b) in blocks.iter().enumerate() {
            let r = b.start..b.start + b.cone.dim();
            match b.cone {
                Cone::NonNeg(_) => {
                    for i in r {
                        out[i] = u[i] / self.v[i];
                    }
                }
                Cone::Soc(_) => {
                    soc_apply_winv(&self.v[r.clone()], self.beta[bi], &u[r.clone()], &mut out[r]);
                }
            }
        }
    }
}

/// `out = β (2 v vᵀ − J) u`.
fn soc_apply_w(v: &[f64], beta: f64, u: &[f64], out: &mut [f64]) {
    let vu = dot(v, u);
    out[0] = beta * (2.0 * v[0] * vu - u[0]);
    for k in 1..v.len() {
        out[k] = beta * (2.0 * v[k] * vu + u[k]);
    }
}

/// `out = β⁻¹ (2 J v vᵀ J − J) u`.
fn soc_apply_winv(v: &[f64], beta: f64, u: &[f64], out: &mut [f64]) {
    // vᵀ J u
    let mut vju = v[0] * u[0];
    for k in 1..v.len() {
        vju -= v[k] * u[k];
    }
    out[0] = (2.0 * v[0] * vju - u[0]) / beta;
    for k in 1..v.len() {
        out[k] = (-2.0 * v[k] * vju + u[k]) / beta;
    }
}

/// Jordan product `u ∘ w`.
pub fn jordan_product(blocks: &[Block], u: &[f64], w: &[f64], out: &mut [f64]) {
    for b in blocks {
        let r = b.start..b.start + b.cone.dim();
        match b.cone {
            Cone::NonNeg(_) => {
                for i in r {
                    out[i] = u[i] * w[i];
                }
            }
            Cone::Soc(d) => {
                let (ub, wb) = (&u[r.clone()], &w[r.clone()]);
                let o = &mut out[r];
                o[0] = dot(ub, wb);
                for k in 1..d {
                    o[k] = ub[0] * wb[k] + wb[0] * ub[k];
                }
            }
        }
    }
}

/// Solve `λ ∘ out = y` for `out` (λ in the interior).
pub fn jordan_divide(blocks: &[Block], lambda: &[f64], y: &[f64], out: &mut [f64]) {
    for b in blocks {
        let r = b.start..b.start + b.cone.dim();
        match b.cone {
            Cone::NonNeg(_) => {
                for i in r {
                    out[i] = y[i] / lambda[i];
                }
            }
            Cone::Soc(d) => {
                let (l, yb) = (&lambda[r.clone()], &y[r.clone()]);
                let l1y1 = dot(&l[1..], &yb[1..]);
                let det = {
                    let n1 = crate::program::norm(&l[1..]);
                    (l[0] - n1) * (l[0] + n1)
                };
                let o = &mut out[r];
                o[0] = (l[0] * yb[0] - l1y1) / det;
                for k in 1..d {
                    o[k] = (yb[k] - o[0] * l[k]) / l[0];
                }
            }
        }
    }
}

/// Identity element `e` scaled by `alpha`, added to `u`.
pub fn add_identity(blocks: &[Block], alpha: f64, u: &mut [f64]) {
    for b in blocks {
        match b.cone {
            Cone::NonNeg(d) => u[b.start..b.start + d].iter_mut().for_each(|x| *x += alpha),
            Cone::Soc(_) => u[b.start] += alpha,
        }
    }
}

/// Smallest "eigenvalue" of `u` over all blocks (negative ⇒ outside `K`).
pub fn min_eigenvalue(blocks: &[Block], u: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for b in blocks {
        let r = b.start..b.start + b.cone.dim();
        match b.cone {
            Cone::NonNeg(_) => {
                for i in r {
                    m = m.min(u[i]);
                }
            }
            Cone::Soc(_) => {
                let ub = &u[r];
                m = m.min(ub[0] - crate::program::norm(&ub[1..]));
            }
        }
    }
    m
}

/// Largest `α ≥ 0` with `u + α d ∈ K`, for `u` in the interior.
/// Returns `f64::INFINITY` if the ray never leaves the cone.
pub fn max_step(blocks: &[Block], u: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for b in blocks {
        let r = b.start..b.start + b.cone.dim();
        match b.cone {
            Cone::NonNeg(_) => {
                for i in r {
                    if d[i] < 0.0 {
                        alpha = alpha.min(-u[i] / d[i]);
                    }
                }
            }
            Cone::Soc(_) => {
                let (ub, db) = (&u[r.clone()], &d[r]);
                // q(α) = a α² + 2 b α + c, with q(0) = c > 0
                let a = db[0] * db[0] - dot(&db[1..], &db[1..]);
                let bq = ub[0] * db[0] - dot(&ub[1..], &db[1..]);
                let c = {
                    let n1 = crate::program::norm(&ub[1..]);
                    (ub[0] - n1) * (ub[0] + n1)
                };
                let disc = bq * bq - a * c;
                if disc < 0.0 {
                    continue;
                }
                let denom = -bq + disc.sqrt();
                if denom > 0.0 {
                    alpha = alpha.min(c.max(0.0) / denom);
                }
            }
        }
    }
    alpha
}
