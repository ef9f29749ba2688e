//! Sparse multivariate polynomials over a coefficient ring.
//!
//! Variables are addressed by index only. Terms live in a `BTreeMap` keyed by
//! exponent vectors, so iteration (and therefore JSON output) is always in
//! lexicographic exponent order.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::scalar::{compensated_sum, Coefficient, Scalar};

/// Exponent vector of a monomial.
pub type Exponent = Vec<u32>;

/// Sparse polynomial in `num_vars` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    num_vars: usize,
    terms: BTreeMap<Exponent, T>,
}

impl<T: Coefficient> Polynomial<T> {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: T) -> Self {
        let mut p = Self::zero(num_vars);
        p.insert(vec![0; num_vars], c);
        p
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        assert!(i < num_vars, "variable index {i} out of range");
        let mut exp = vec![0; num_vars];
        exp[i] = 1;
        Self::monomial(exp, T::one())
    }

    pub fn monomial(exp: Exponent, coef: T) -> Self {
        let mut p = Self::zero(exp.len());
        p.insert(exp, coef);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing
    /// repeated exponents.
    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (Exponent, T)>) -> Result<Self> {
        let mut p = Self::zero(num_vars);
        for (exp, coef) in terms {
            check_dim(num_vars, exp.len(), "exponent length")?;
            let merged = match p.terms.remove(&exp) {
                Some(prev) => prev + coef,
                None => coef,
            };
            p.insert(exp, merged);
        }
        Ok(p)
    }

    fn insert(&mut self, exp: Exponent, coef: T) {
        if coef != T::zero() {
            self.terms.insert(exp, coef);
        }
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_negligible());
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exp: &[u32]) -> T {
        self.terms.get(exp).cloned().unwrap_or_else(T::zero)
    }

    /// Constant term, i.e. the value at the origin.
    pub fn constant_term(&self) -> T {
        self.coefficient(&vec![0; self.num_vars])
    }

    /// Maximum total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, k: &T) -> Self {
        Self {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.clone() * k.clone()))
                .collect(),
        }
        .prune()
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.num_vars, T::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Partial derivative with respect to `x_i`.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.num_vars, "variable index {i} out of range");
        let mut out = Self::zero(self.num_vars);
        for (exp, coef) in &self.terms {
            if exp[i] == 0 {
                continue;
            }
            let mut e = exp.clone();
            e[i] -= 1;
            out.insert(e, coef.clone() * T::from_exponent(exp[i]));
        }
        out.prune()
    }

    pub fn gradient(&self) -> PolyVector<T> {
        PolyVector {
            num_vars: self.num_vars,
            entries: (0..self.num_vars).map(|i| self.partial(i)).collect(),
        }
    }

    /// `∇p · f` as a polynomial.
    pub fn lie_derivative(&self, f: &PolyVector<T>) -> Result<Self> {
        check_dim(self.num_vars, f.len(), "vector field length")?;
        check_dim(self.num_vars, f.num_vars(), "vector field variables")?;
        let grad = self.gradient();
        let mut out = Self::zero(self.num_vars);
        for (dp, fi) in grad.iter().zip(f.iter()) {
            out = &out + &(dp * fi);
        }
        Ok(out)
    }

    /// Row vector `∇p · g[:, j]` for every column `j`.
    pub fn lie_derivative_g(&self, g: &PolyMatrix<T>) -> Result<PolyVector<T>> {
        check_dim(self.num_vars, g.rows(), "input matrix rows")?;
        check_dim(self.num_vars, g.num_vars(), "input matrix variables")?;
        let entries = (0..g.cols())
            .map(|j| self.lie_derivative(&g.column(j)))
            .collect::<Result<Vec<_>>>()?;
        PolyVector::new(entries)
    }

    /// Exact evaluation in the coefficient ring (no compensation).
    pub fn evaluate_exact(&self, x: &[T]) -> Result<T> {
        check_dim(self.num_vars, x.len(), "evaluation point")?;
        let mut acc = T::zero();
        for (exp, coef) in &self.terms {
            let mut m = coef.clone();
            for (xi, &e) in x.iter().zip(exp) {
                for _ in 0..e {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        Ok(acc)
    }

    /// Applies `f` to every coefficient (e.g. to change scalar type).
    pub fn map_coefficients<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        let mut out = Polynomial::zero(self.num_vars);
        for (e, c) in &self.terms {
            out.insert(e.clone(), f(c));
        }
        out
    }
}

impl<T: Scalar> Polynomial<T> {
    /// Evaluates with compensated summation over terms.
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        check_dim(self.num_vars, x.len(), "evaluation point")?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> T {
        compensated_sum(self.terms.iter().map(|(exp, &coef)| {
            exp.iter()
                .zip(x)
                .fold(coef, |m, (&e, &xi)| if e == 0 { m } else { m * xi.powi(e as i32) })
        }))
    }
}

impl<'a, T: Coefficient> Add<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;

    fn add(self, rhs: &'a Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            let merged = match out.terms.remove(e) {
                Some(prev) => prev + c.clone(),
                None => c.clone(),
            };
            out.insert(e.clone(), merged);
        }
        out.prune()
    }
}

impl<'a, T: Coefficient> Sub<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: &'a Polynomial<T>) -> Polynomial<T> {
        self + &(-rhs)
    }
}

impl<T: Coefficient> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        Polynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }
}

impl<'a, T: Coefficient> Mul<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: &'a Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial variable count mismatch");
        let mut acc: BTreeMap<Exponent, T> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let prod = ca.clone() * cb.clone();
                let slot = acc.entry(e).or_insert_with(T::zero);
                *slot = slot.clone() + prod;
            }
        }
        let mut out = Polynomial::zero(self.num_vars);
        for (e, c) in acc {
            out.insert(e, c);
        }
        out.prune()
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl<T: Coefficient> $tr<Polynomial<T>> for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $m(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl<T: Coefficient> Neg for Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

impl<T: Coefficient + fmt::Display> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (exp, coef)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{coef}")?;
            for (i, &e) in exp.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    num_vars: usize,
    terms: Vec<TermJson>,
}

impl<T: Scalar> Serialize for Polynomial<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exp: e.clone(),
                    coef: c.to_f64().unwrap_or(f64::NAN),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Polynomial<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PolyJson::deserialize(d)?;
        if raw.num_vars == 0 {
            return Err(D::Error::custom("num_vars must be positive"));
        }
        let mut p = Polynomial::zero(raw.num_vars);
        for t in raw.terms {
            if t.exp.len() != raw.num_vars {
                return Err(D::Error::custom(format!(
                    "exponent {:?} has length {}, expected {}",
                    t.exp,
                    t.exp.len(),
                    raw.num_vars
                )));
            }
            if !t.coef.is_finite() {
                return Err(D::Error::custom("non-finite coefficient"));
            }
            if p.terms.contains_key(&t.exp) {
                return Err(D::Error::custom(format!("duplicate exponent {:?}", t.exp)));
            }
            let c = T::from_f64(t.coef).ok_or_else(|| D::Error::custom("coefficient out of range"))?;
            p.insert(t.exp, c);
        }
        Ok(p)
    }
}

/// Non-empty list of polynomials over the same variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVector<T> {
    num_vars: usize,
    entries: Vec<Polynomial<T>>,
}

impl<T: Coefficient> PolyVector<T> {
    pub fn new(entries: Vec<Polynomial<T>>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::InvalidProblem("empty polynomial vector".into()))?;
        let num_vars = first.num_vars;
        for p in &entries {
            check_dim(num_vars, p.num_vars, "polynomial vector entry")?;
        }
        Ok(Self { num_vars, entries })
    }

    pub fn zeros(num_vars: usize, len: usize) -> Self {
        assert!(len > 0);
        Self {
            num_vars,
            entries: vec![Polynomial::zero(num_vars); len],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Polynomial<T>> {
        self.entries.iter()
    }

    pub fn get(&self, i: usize) -> &Polynomial<T> {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[Polynomial<T>] {
        &self.entries
    }

    /// True when every entry is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Polynomial::is_zero)
    }
}

impl<T: Scalar> PolyVector<T> {
    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.num_vars, x.len(), "evaluation point")?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> Vec<T> {
        self.entries.iter().map(|p| p.eval_unchecked(x)).collect()
    }
}

impl<T: Scalar> Serialize for PolyVector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PolyVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<Polynomial<T>>::deserialize(d)?;
        PolyVector::new(entries).map_err(serde::de::Error::custom)
    }
}

/// Dense `rows × cols` matrix of polynomials, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix<T> {
    num_vars: usize,
    rows: usize,
    cols: usize,
    entries: Vec<Polynomial<T>>,
}

impl<T: Coefficient> PolyMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<Polynomial<T>>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidProblem("empty polynomial matrix".into()));
        }
        let num_vars = rows[0][0].num_vars;
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            check_dim(n_cols, row.len(), "polynomial matrix row")?;
            for p in row {
                check_dim(num_vars, p.num_vars, "polynomial matrix entry")?;
                entries.push(p);
            }
        }
        Ok(Self {
            num_vars,
            rows: n_rows,
            cols: n_cols,
            entries,
        })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Polynomial::constant(n, T::one())
                        } else {
                            Polynomial::zero(n)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(rows).expect("identity is well formed")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial<T> {
        &self.entries[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> PolyVector<T> {
        PolyVector {
            num_vars: self.num_vars,
            entries: (0..self.rows).map(|i| self.get(i, j).clone()).collect(),
        }
    }
}

impl<T: Scalar> PolyMatrix<T> {
    /// Row-major values at `x`.
    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.num_vars, x.len(), "evaluation point")?;
        Ok(self.entries.iter().map(|p| p.eval_unchecked(x)).collect())
    }

    /// `g(x) u` for a row-major matrix evaluation.
    pub(crate) fn apply(values: &[T], cols: usize, u: &[T]) -> Vec<T> {
        values
            .chunks(cols)
            .map(|row| row.iter().zip(u).fold(T::zero(), |acc, (&g, &ui)| acc + g * ui))
            .collect()
    }
}

impl<T: Scalar> Serialize for PolyMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Polynomial<T>]> = self.entries.chunks(self.cols).collect();
        rows.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PolyMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Polynomial<T>>>::deserialize(d)?;
        PolyMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}
