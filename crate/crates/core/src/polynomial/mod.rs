//! Exact multivariate polynomials over the fixed variable set
//! `{q, x, y, t, v1, v2, w1}`.

mod bernstein;
pub(crate) mod tensor;
mod text;
mod univariate;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::rational::{binomial_q, int, Rational};
use crate::{Error, Result};

pub use bernstein::{certify_nonnegative, Box, PositivityVerdict};
pub use univariate::{isolate_real_roots, RootInterval, UniPoly};

/// Variables a [`RatPoly`] may mention. `T` holds the true per-item value θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Q,
    X,
    Y,
    T,
    V1,
    V2,
    W1,
}

pub const NVARS: usize = 7;

impl Var {
    pub const ALL: [Var; NVARS] = [Var::Q, Var::X, Var::Y, Var::T, Var::V1, Var::V2, Var::W1];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::Q => "q",
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::V1 => "v1",
            Var::V2 => "v2",
            Var::W1 => "w1",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type Exps = [u16; NVARS];

/// Sparse polynomial with exact rational coefficients. Zero coefficients are
/// never stored, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct RatPoly {
    terms: BTreeMap<Exps, Rational>,
}

impl fmt::Debug for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatPoly({self})")
    }
}

impl RatPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term([0; NVARS], c);
        p
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Rational::one(), &[(v, 1)])
    }

    pub fn monomial(c: Rational, powers: &[(Var, u16)]) -> Self {
        let mut e = [0; NVARS];
        for &(v, k) in powers {
            e[v.index()] += k;
        }
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    /// `c0 + Σ c_i · v_i`.
    pub fn linear(c0: Rational, coeffs: &[(Var, Rational)]) -> Self {
        let mut p = Self::constant(c0);
        for (v, c) in coeffs {
            let mut e = [0; NVARS];
            e[v.index()] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Exps, Rational)>) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, e: Exps, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            alloc::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the polynomial mentions no variable.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&[0; NVARS]).cloned(),
            _ => None,
        }
    }

    pub fn coefficient(&self, e: &Exps) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|e| e[v.index()] as u32).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as u32).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.terms.keys().any(|e| e[v.index()] > 0)
    }

    pub fn variables(&self) -> Vec<Var> {
        Var::ALL.into_iter().filter(|&v| self.mentions(v)).collect()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, k)| (*e, k * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Groups terms by the power of `v`: entry `j` is the coefficient of `v^j`.
    pub fn coefficients_in(&self, v: Var) -> Vec<RatPoly> {
        let d = self.degree_in(v) as usize;
        let mut out = alloc::vec![RatPoly::zero(); d + 1];
        for (e, c) in &self.terms {
            let mut e2 = *e;
            let j = e2[v.index()] as usize;
            e2[v.index()] = 0;
            out[j].add_term(e2, c.clone());
        }
        out
    }

    /// Replaces `v` by the constant `c`.
    pub fn substitute(&self, v: Var, c: &Rational) -> Self {
        if !self.mentions(v) {
            return self.clone();
        }
        let mut out = Self::zero();
        let mut powers: Vec<Rational> = alloc::vec![Rational::one()];
        for (e, k) in &self.terms {
            let j = e[v.index()] as usize;
            while powers.len() <= j {
                let next = powers.last().unwrap() * c;
                powers.push(next);
            }
            let mut e2 = *e;
            e2[v.index()] = 0;
            out.add_term(e2, k * &powers[j]);
        }
        out
    }

    pub fn substitute_all(&self, assignment: &[(Var, Rational)]) -> Self {
        assignment
            .iter()
            .fold(self.clone(), |p, (v, c)| p.substitute(*v, c))
    }

    /// Exact value; every mentioned variable must be assigned.
    pub fn evaluate(&self, assignment: &[(Var, Rational)]) -> Result<Rational> {
        let p = self.substitute_all(assignment);
        match p.as_constant() {
            Some(c) => Ok(c),
            None => Err(Error::UnboundVariable(p.variables()[0])),
        }
    }

    /// Replaces `v` by the polynomial `s` (Horner in `v`).
    pub fn compose(&self, v: Var, s: &RatPoly) -> Self {
        if !self.mentions(v) {
            return self.clone();
        }
        let coeffs = self.coefficients_in(v);
        let mut acc = RatPoly::zero();
        for c in coeffs.iter().rev() {
            acc = &(&acc * s) + c;
        }
        acc
    }

    pub fn rename(&self, from: Var, to: Var) -> Self {
        if from == to {
            return self.clone();
        }
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut e2 = *e;
            let k = e2[from.index()];
            e2[from.index()] = 0;
            e2[to.index()] += k;
            out.add_term(e2, c.clone());
        }
        out
    }

    pub fn differentiate(&self, v: Var) -> Self {
        let i = v.index();
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = *e;
                e2[i] -= 1;
                out.add_term(e2, c * int(e[i] as i64));
            }
        }
        out
    }

    /// Antiderivative in `v` with zero constant term.
    pub fn antiderivative(&self, v: Var) -> Self {
        let i = v.index();
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut e2 = *e;
            e2[i] += 1;
            out.add_term(e2, c / int(e2[i] as i64));
        }
        out
    }

    /// `∫_{lower}^{upper} p dv`, where the bounds must not mention `v`.
    pub fn integrate_definite(&self, v: Var, lower: &RatPoly, upper: &RatPoly) -> Result<Self> {
        if lower.mentions(v) || upper.mentions(v) {
            return Err(Error::BoundMentionsVariable(v));
        }
        let anti = self.antiderivative(v);
        Ok(&anti.compose(v, upper) - &anti.compose(v, lower))
    }

    /// Substitutes `v := a + b·v` (an affine change of one variable).
    pub fn affine_substitute(&self, v: Var, a: &Rational, b: &Rational) -> Self {
        let coeffs = self.coefficients_in(v);
        let mut out = Self::zero();
        let mut bpow = Rational::one();
        let d = coeffs.len();
        let mut apow: Vec<Rational> = Vec::with_capacity(d);
        apow.push(Rational::one());
        for j in 1..d {
            let next = &apow[j - 1] * a;
            apow.push(next);
        }
        for k in 0..d {
            // coefficient of v^k: Σ_{j≥k} c_j C(j,k) a^{j-k} b^k
            for (j, cj) in coeffs.iter().enumerate().skip(k) {
                if cj.is_zero() {
                    continue;
                }
                let f = binomial_q(j as u64, k as u64) * &apow[j - k] * &bpow;
                if f.is_zero() {
                    continue;
                }
                for (e, c) in cj.terms() {
                    let mut e2 = *e;
                    e2[v.index()] = k as u16;
                    out.add_term(e2, c * &f);
                }
            }
            bpow *= b;
        }
        out
    }

    pub fn to_univariate(&self, v: Var) -> Result<UniPoly> {
        if self.variables().iter().any(|&w| w != v) {
            return Err(Error::NotUnivariate);
        }
        let coeffs = self
            .coefficients_in(v)
            .into_iter()
            .map(|c| c.as_constant().expect("univariate"))
            .collect();
        Ok(UniPoly::new(coeffs))
    }

    pub fn from_univariate(p: &UniPoly, v: Var) -> Self {
        let mut out = Self::zero();
        for (j, c) in p.coeffs().iter().enumerate() {
            let mut e = [0; NVARS];
            e[v.index()] = j as u16;
            out.add_term(e, c.clone());
        }
        out
    }
}

impl From<Rational> for RatPoly {
    fn from(c: Rational) -> Self {
        Self::constant(c)
    }
}

impl From<Var> for RatPoly {
    fn from(v: Var) -> Self {
        Self::var(v)
    }
}

impl<'a> Add<&'a RatPoly> for &RatPoly {
    type Output = RatPoly;
    fn add(self, rhs: &'a RatPoly) -> RatPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> AddAssign<&'a RatPoly> for RatPoly {
    fn add_assign(&mut self, rhs: &'a RatPoly) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl<'a> SubAssign<&'a RatPoly> for RatPoly {
    fn sub_assign(&mut self, rhs: &'a RatPoly) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, -c.clone());
        }
    }
}

impl<'a> Sub<&'a RatPoly> for &RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: &'a RatPoly) -> RatPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<'a> Mul<&'a RatPoly> for &RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: &'a RatPoly) -> RatPoly {
        let mut out = RatPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let mut e = *ea;
                for i in 0..NVARS {
                    e[i] += eb[i];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        RatPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<RatPoly> for RatPoly {
            type Output = RatPoly;
            fn $m(self, rhs: RatPoly) -> RatPoly { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a RatPoly> for RatPoly {
            type Output = RatPoly;
            fn $m(self, rhs: &'a RatPoly) -> RatPoly { (&self).$m(rhs) }
        }
        impl $tr<RatPoly> for &RatPoly {
            type Output = RatPoly;
            fn $m(self, rhs: RatPoly) -> RatPoly { self.$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        -&self
    }
}
