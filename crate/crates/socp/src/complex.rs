//! Real-valued encodings of complex modulus constraints.

use num_complex::Complex64;

use crate::error::SocpError;
use crate::program::{Affine, ConeProgram};

/// Right-hand side of a norm bound: `constant + var` (either part optional).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub var: Option<usize>,
    pub constant: f64,
}

impl Bound {
    pub fn var(index: usize) -> Self {
        Self { var: Some(index), constant: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self { var: None, constant: value }
    }

    pub fn var_plus(index: usize, constant: f64) -> Self {
        Self { var: Some(index), constant }
    }

    fn coeffs(&self, n: usize) -> Result<Vec<f64>, SocpError> {
        let mut c = vec![0.0; n];
        if let Some(v) = self.var {
            if v >= n {
                return Err(SocpError::VariableOutOfRange { index: v, num_vars: n });
            }
            c[v] = 1.0;
        }
        Ok(c)
    }
}

/// For each complex row `u_i` append `|u_iᵀx − d_i| ≤ bound`.
///
/// `rows` is row-major with `num_vars` columns. A row whose coefficients and
/// target are all real becomes the pair of linear inequalities
/// `−bound ≤ u_iᵀx − d_i ≤ bound`; otherwise a 3-dimensional second-order
/// cone on the real and imaginary parts is added.
pub fn add_complex_linf_epigraph(
    prog: &mut ConeProgram,
    rows: &[Complex64],
    rhs: &[Complex64],
    bound: Bound,
) -> Result<(), SocpError> {
    let n = prog.num_vars();
    if rhs.is_empty() {
        return Err(SocpError::NoRows);
    }
    if rows.len() != rhs.len() * n {
        return Err(SocpError::DimensionMismatch { expected: rhs.len() * n, found: rows.len() });
    }
    let t = bound.coeffs(n)?;
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut neg = vec![0.0; n];
    for (row, d) in rows.chunks_exact(n).zip(rhs) {
        for (j, u) in row.iter().enumerate() {
            re[j] = u.re;
            im[j] = u.im;
        }
        let real_row = d.im == 0.0 && im.iter().all(|v| *v == 0.0);
        if real_row {
            // bound − (uᵀx − d) ≥ 0  and  bound + (uᵀx − d) ≥ 0
            for j in 0..n {
                neg[j] = t[j] - re[j];
            }
            prog.add_nonneg(Affine::new(&neg, bound.constant + d.re))?;
            for j in 0..n {
                neg[j] = t[j] + re[j];
            }
            prog.add_nonneg(Affine::new(&neg, bound.constant - d.re))?;
        } else {
            prog.add_soc(&[
                Affine::new(&t, bound.constant),
                Affine::new(&re, -d.re),
                Affine::new(&im, -d.im),
            ])?;
        }
    }
    Ok(())
}

/// Append the convex white-noise-gain cone
///
/// `√floor · ‖A x‖₂ ≤ Re[e^{jωτ_d} gᵀx]`
///
/// as a `(2N + 1)`-dimensional second-order cone. `a_omega` is row-major
/// `N × num_vars`; `steer_row` has `num_vars` entries.
pub fn add_wng_cone(
    prog: &mut ConeProgram,
    a_omega: &[Complex64],
    steer_row: &[Complex64],
    tau_d: f64,
    omega: f64,
    floor: f64,
) -> Result<(), SocpError> {
    let n = prog.num_vars();
    if floor <= 0.0 || floor.is_nan() {
        return Err(SocpError::NonpositiveFloor(floor));
    }
    if steer_row.len() != n {
        return Err(SocpError::DimensionMismatch { expected: n, found: steer_row.len() });
    }
    if a_omega.is_empty() || a_omega.len() % n != 0 {
        return Err(SocpError::DimensionMismatch { expected: n, found: a_omega.len() });
    }
    let rot = Complex64::from_polar(1.0, omega * tau_d);
    let head: Vec<f64> = steer_row.iter().map(|g| (rot * g).re).collect();
    let sq = floor.sqrt();
    let mut store: Vec<Vec<f64>> = Vec::with_capacity(2 * a_omega.len() / n);
    for row in a_omega.chunks_exact(n) {
        store.push(row.iter().map(|a| sq * a.re).collect());
        store.push(row.iter().map(|a| sq * a.im).collect());
    }
    let mut rows = Vec::with_capacity(store.len() + 1);
    rows.push(Affine::new(&head, 0.0));
    rows.extend(store.iter().map(|r| Affine::new(r, 0.0)));
    prog.add_soc(&rows)
}
