//! Affine expressions over program variables.
//!
//! A [`LinExpr`] is a sparse affine form `Σ cᵢ·xᵢ + k`. Expressions are the
//! currency of the whole IR: linear constraints, cone members, and the
//! objective are all stored as (canonicalized) expressions.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::program::VarId;

/// Sparse affine expression `Σ cᵢ·xᵢ + constant`.
///
/// Terms may be pushed in any order and may repeat a variable; call sites
/// that store expressions long-term canonicalize them (sorted by variable,
/// duplicates merged, zero coefficients dropped).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl LinExpr {
    /// The zero expression.
    pub fn zero() -> Self {
        Self::default()
    }

    /// A constant expression with no variable terms.
    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    /// The expression `coeff · var`.
    pub fn term(var: VarId, coeff: f64) -> Self {
        Self {
            terms: vec![(var, coeff)],
            constant: 0.0,
        }
    }

    /// The expression `1 · var`.
    pub fn var(var: VarId) -> Self {
        Self::term(var, 1.0)
    }

    /// Adds `coeff · var` in place.
    pub fn add_term(&mut self, var: VarId, coeff: f64) {
        self.terms.push((var, coeff));
    }

    /// Adds a constant offset in place.
    pub fn add_constant(&mut self, value: f64) {
        self.constant += value;
    }

    /// The constant part of the expression.
    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// The variable terms in storage order.
    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    /// True if the expression has no variable terms (after canonicalization
    /// this means it is genuinely constant).
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest variable index referenced, if any. Used for validation.
    pub(crate) fn max_var_index(&self) -> Option<u32> {
        self.terms.iter().map(|(v, _)| v.index()).max()
    }

    /// Sorts terms by variable, merges duplicates, and drops zero
    /// coefficients. Canonical expressions compare equal iff they are the
    /// same affine function.
    pub fn canonicalize(&mut self) {
        self.terms.sort_by_key(|(v, _)| *v);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
    }

    /// Returns the canonicalized copy of this expression.
    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// Evaluates the expression at a full primal point (indexed by variable).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for &(v, c) in &self.terms {
            acc += c * x[v.index() as usize];
        }
        acc
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::var(v)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.terms.extend_from_slice(&rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

impl AddAssign for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        self.terms.extend_from_slice(&rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: f64) -> LinExpr {
        self.constant += rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.terms
            .extend(rhs.terms.iter().map(|&(v, c)| (v, -c)));
        self.constant -= rhs.constant;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: f64) -> LinExpr {
        self.constant -= rhs;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(mut self) -> LinExpr {
        for (_, c) in &mut self.terms {
            *c = -*c;
        }
        self.constant = -self.constant;
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, rhs: f64) -> LinExpr {
        for (_, c) in &mut self.terms {
            *c *= rhs;
        }
        self.constant *= rhs;
        self
    }
}
