//! Conic program container.
//!
//! A [`ConeProgram`] describes
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b
//!             h - G x ∈ K
//! ```
//!
//! where `K` is a product of nonnegative orthants and second-order cones
//! `{(t, u) : ‖u‖₂ ≤ t}`. Constraint rows are stored densely: the problems
//! this crate targets have few variables (hundreds) and many rows.

use std::io::Write;

use crate::error::SocpError;

/// One block of the cone `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `dim` independent rows, each required to be `≥ 0`.
    NonNeg(usize),
    /// Second-order cone of dimension `dim` (`t` plus `dim - 1` entries).
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(d) | Cone::Soc(d) => d,
        }
    }

    /// Barrier degree contributed by the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(d) => d,
            Cone::Soc(_) => 1,
        }
    }
}

/// A cone block together with its first row in `G`/`h` and a family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub cone: Cone,
    pub start: usize,
    pub tag: usize,
}

/// Affine expression `coeffsᵀx + constant` borrowed from caller storage.
#[derive(Debug, Clone, Copy)]
pub struct Affine<'a> {
    pub coeffs: &'a [f64],
    pub constant: f64,
}

impl<'a> Affine<'a> {
    pub fn new(coeffs: &'a [f64], constant: f64) -> Self {
        Self { coeffs, constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(self.coeffs, x) + self.constant
    }
}

#[derive(Debug, Clone)]
pub struct ConeProgram {
    n: usize,
    c: Vec<f64>,
    eq_a: Vec<f64>,
    eq_b: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    blocks: Vec<Block>,
    tags: Vec<String>,
    current_tag: usize,
}

impl ConeProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            n: num_vars,
            c: vec![0.0; num_vars],
            eq_a: Vec::new(),
            eq_b: Vec::new(),
            g: Vec::new(),
            h: Vec::new(),
            blocks: Vec::new(),
            tags: vec!["default".to_string()],
            current_tag: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Number of rows of `G` (total cone dimension).
    pub fn num_cone_rows(&self) -> usize {
        self.h.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_b.len()
    }

    pub fn num_rows(&self) -> usize {
        self.num_cone_rows() + self.num_eq()
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn eq_a(&self) -> &[f64] {
        &self.eq_a
    }

    pub fn eq_b(&self) -> &[f64] {
        &self.eq_b
    }

    pub fn tag_name(&self, tag: usize) -> &str {
        &self.tags[tag]
    }

    /// Total barrier degree of `K`.
    pub fn degree(&self) -> usize {
        self.blocks.iter().map(|b| b.cone.degree()).sum()
    }

    /// Label subsequently added blocks and equalities with `name`.
    ///
    /// Tags are used to attribute infeasibility certificates to constraint
    /// families.
    pub fn set_tag(&mut self, name: &str) {
        self.current_tag = match self.tags.iter().position(|t| t == name) {
            Some(i) => i,
            None => {
                self.tags.push(name.to_string());
                self.tags.len() - 1
            }
        };
    }

    pub fn set_objective(&mut self, c: &[f64]) -> Result<(), SocpError> {
        self.check_len(c.len())?;
        self.c.copy_from_slice(c);
        Ok(())
    }

    pub fn set_objective_coeff(&mut self, var: usize, value: f64) -> Result<(), SocpError> {
        if var >= self.n {
            return Err(SocpError::VariableOutOfRange { index: var, num_vars: self.n });
        }
        self.c[var] = value;
        Ok(())
    }

    /// Append `coeffsᵀx = rhs`.
    pub fn add_equality(&mut self, coeffs: &[f64], rhs: f64) -> Result<(), SocpError> {
        self.check_len(coeffs.len())?;
        self.eq_a.extend_from_slice(coeffs);
        self.eq_b.push(rhs);
        Ok(())
    }

    /// Append `expr ≥ 0`. Consecutive rows with the same tag share a block.
    pub fn add_nonneg(&mut self, expr: Affine<'_>) -> Result<(), SocpError> {
        self.check_len(expr.coeffs.len())?;
        let start = self.h.len();
        self.push_row(expr);
        match self.blocks.last_mut() {
            Some(Block { cone: Cone::NonNeg(d), start: s, tag })
                if *tag == self.current_tag && *s + *d == start =>
            {
                *d += 1;
            }
            _ => self.blocks.push(Block { cone: Cone::NonNeg(1), start, tag: self.current_tag }),
        }
        Ok(())
    }

    /// Append `‖(u_1, …, u_k)‖₂ ≤ t` where `rows = [t, u_1, …, u_k]`.
    pub fn add_soc(&mut self, rows: &[Affine<'_>]) -> Result<(), SocpError> {
        if rows.is_empty() {
            return Err(SocpError::EmptyCone);
        }
        for r in rows {
            self.check_len(r.coeffs.len())?;
        }
        let start = self.h.len();
        for r in rows {
            self.push_row(*r);
        }
        self.blocks.push(Block { cone: Cone::Soc(rows.len()), start, tag: self.current_tag });
        Ok(())
    }

    fn push_row(&mut self, expr: Affine<'_>) {
        // s = h - G x  with  s = coeffsᵀx + constant
        self.g.extend(expr.coeffs.iter().map(|v| -v));
        self.h.push(expr.constant);
    }

    fn check_len(&self, len: usize) -> Result<(), SocpError> {
        if len != self.n {
            return Err(SocpError::DimensionMismatch { expected: self.n, found: len });
        }
        Ok(())
    }

    /// Slack `s = h - G x`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.h
            .iter()
            .enumerate()
            .map(|(i, hi)| hi - dot(&self.g[i * n..(i + 1) * n], x))
            .collect()
    }

    /// Largest violation of the cone constraints at `x`, unscaled.
    ///
    /// For a second-order block this is `max(0, ‖u‖ - t)`, for orthant rows
    /// `max(0, -s_i)`.
    pub fn cone_violation(&self, x: &[f64]) -> f64 {
        let s = self.slack(x);
        self.blocks
            .iter()
            .map(|b| {
                let blk = &s[b.start..b.start + b.cone.dim()];
                match b.cone {
                    Cone::NonNeg(_) => blk.iter().fold(0.0_f64, |m, v| m.max(-v)),
                    Cone::Soc(_) => (norm(&blk[1..]) - blk[0]).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest equality residual `|A x - b|_∞` at `x`.
    pub fn equality_violation(&self, x: &[f64]) -> f64 {
        let n = self.n;
        self.eq_b
            .iter()
            .enumerate()
            .map(|(i, b)| (dot(&self.eq_a[i * n..(i + 1) * n], x) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }

    /// Write the program in a plain sparse text format.
    ///
    /// ```text
    /// # comment lines
    /// vars <n>
    /// c <col> <value>                      (nonzero objective entries)
    /// block <id> <nonneg|soc> <dim> <tag>  (one per block, in row order)
    /// G <block-id> <row-in-block> <col> <value>
    /// h <block-id> <row-in-block> <value>
    /// A <row> <col> <value>
    /// b <row> <value>
    /// ```
    ///
    /// `G`/`h` follow the convention `h - G x ∈ K`; only nonzeros are written.
    pub fn write_sparse<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.n;
        writeln!(out, "# conic program: minimize c'x s.t. A x = b, h - G x in K")?;
        writeln!(out, "vars {}", n)?;
        for (j, v) in self.c.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "c {} {:e}", j, v)?;
            }
        }
        for (id, b) in self.blocks.iter().enumerate() {
            let kind = match b.cone {
                Cone::NonNeg(_) => "nonneg",
                Cone::Soc(_) => "soc",
            };
            writeln!(out, "block {} {} {} {}", id, kind, b.cone.dim(), self.tags[b.tag])?;
        }
        for (id, b) in self.blocks.iter().enumerate() {
            for r in 0..b.cone.dim() {
                let row = b.start + r;
                for j in 0..n {
                    let v = self.g[row * n + j];
                    if v != 0.0 {
                        writeln!(out, "G {} {} {} {:e}", id, r, j, v)?;
                    }
                }
                if self.h[row] != 0.0 {
                    writeln!(out, "h {} {} {:e}", id, r, self.h[row])?;
                }
            }
        }
        for (i, bi) in self.eq_b.iter().enumerate() {
            for j in 0..n {
                let v = self.eq_a[i * n + j];
                if v != 0.0 {
                    writeln!(out, "A {} {} {:e}", i, j, v)?;
                }
            }
            if *bi != 0.0 {
                writeln!(out, "b {} {:e}", i, bi)?;
            }
        }
        Ok(())
    }

    /// Copy with blocks permuted; used to check order independence.
    pub fn with_block_order(&self, order: &[usize]) -> ConeProgram {
        let n = self.n;
        let mut out = ConeProgram::new(n);
        out.c = self.c.clone();
        out.eq_a = self.eq_a.clone();
        out.eq_b = self.eq_b.clone();
        out.tags = self.tags.clone();
        for &bi in order {
            let b = self.blocks[bi];
            let start = out.h.len();
            let d = b.cone.dim();
            out.g.extend_from_slice(&self.g[b.start * n..(b.start + d) * n]);
            out.h.extend_from_slice(&self.h[b.start..b.start + d]);
            out.blocks.push(Block { cone: b.cone, start, tag: b.tag });
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
