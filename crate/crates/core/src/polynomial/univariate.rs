//! Dense univariate polynomials and real-root isolation by Bernstein sign
//! variations.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use super::RatPoly;
use crate::rational::{binomial_q, int, rat, simplest_between, Rational};
use crate::{Error, Result};

/// Coefficients low to high, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn sign_at(&self, x: &Rational) -> Ordering {
        self.eval(x).cmp(&Rational::zero())
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + crate::rational::to_f64(c);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * int(j as i64))
                .collect(),
        )
    }

    fn lead(&self) -> &Rational {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead().clone();
        Self::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    pub fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = d.degree();
        if rem.len() < d.coeffs.len() {
            return (UniPoly::default(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        let l = d.lead();
        for i in (0..quot.len()).rev() {
            let c = &rem[i + dd] / l;
            if !c.is_zero() {
                for (j, dj) in d.coeffs.iter().enumerate() {
                    rem[i + j] -= &c * dj;
                }
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p / gcd(p, p')`: same roots, all simple.
    pub fn square_free(&self) -> UniPoly {
        if self.degree() < 1 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    /// Bernstein coefficients of `self` on `[a, b]`, in degree `self.degree()`.
    pub fn bernstein(&self, a: &Rational, b: &Rational) -> Vec<Rational> {
        let d = self.degree();
        let w = b - a;
        // power coefficients of p(a + w u)
        let shifted = RatPoly::from_univariate(self, super::Var::Q)
            .affine_substitute(super::Var::Q, a, &w);
        let pc: Vec<Rational> = (0..=d)
            .map(|j| {
                let mut e = [0u16; super::NVARS];
                e[0] = j as u16;
                shifted.coefficient(&e)
            })
            .collect();
        (0..=d)
            .map(|i| {
                (0..=i).fold(Rational::zero(), |acc, j| {
                    acc + binomial_q(i as u64, j as u64) / binomial_q(d as u64, j as u64) * &pc[j]
                })
            })
            .collect()
    }
}

/// An interval containing exactly one real root of a square-free polynomial.
/// Either `lower == upper` (an exact rational root) or the polynomial has
/// nonzero values of opposite signs at the two ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootInterval {
    pub lower: Rational,
    pub upper: Rational,
    squarefree: Arc<UniPoly>,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lower + &self.upper) / int(2)
    }

    /// The square-free polynomial whose root this interval isolates.
    pub fn polynomial(&self) -> &UniPoly {
        &self.squarefree
    }

    /// Moves end-points that are roots themselves (neighbouring exact roots)
    /// inward, keeping the single interior root.
    fn clear_root_ends(&mut self) {
        if self.is_exact() {
            return;
        }
        loop {
            let sl = self.squarefree.sign_at(&self.lower);
            let su = self.squarefree.sign_at(&self.upper);
            if sl != Ordering::Equal && su != Ordering::Equal {
                return;
            }
            let m = self.midpoint();
            let sm = self.squarefree.sign_at(&m);
            if sm == Ordering::Equal {
                self.lower = m.clone();
                self.upper = m;
                return;
            }
            if sl == Ordering::Equal && su == Ordering::Equal {
                // simple root at `lower`: the sign just right of it is the
                // sign of the derivative there
                let s1 = self.squarefree.derivative().sign_at(&self.lower);
                if sm == s1 {
                    self.lower = m;
                } else {
                    self.upper = m;
                }
            } else if sl == Ordering::Equal {
                if sm != su {
                    self.lower = m;
                } else {
                    self.upper = m;
                }
            } else if sm != sl {
                self.upper = m;
            } else {
                self.lower = m;
            }
        }
    }

    /// Bisects until the width is at most `max_width` or the root is hit.
    pub fn refine(&mut self, max_width: &Rational) {
        if self.is_exact() {
            return;
        }
        let lo_sign = self.squarefree.sign_at(&self.lower);
        while &self.width() > max_width {
            let m = self.midpoint();
            match self.squarefree.sign_at(&m) {
                Ordering::Equal => {
                    self.lower = m.clone();
                    self.upper = m;
                    return;
                }
                s if s == lo_sign => self.lower = m,
                _ => self.upper = m,
            }
        }
    }

    /// Refines to `max_width` and returns the root exactly when it is the
    /// simplest rational in the refined interval.
    pub fn exact_rational(&mut self, max_width: &Rational) -> Option<Rational> {
        self.refine(max_width);
        if self.is_exact() {
            return Some(self.lower.clone());
        }
        let s = simplest_between(&self.lower, &self.upper);
        if self.squarefree.eval(&s).is_zero() {
            self.lower = s.clone();
            self.upper = s.clone();
            return Some(s);
        }
        None
    }
}

/// Isolates every real root of `p` in `[lo, hi]`, sorted ascending.
pub fn isolate_real_roots(p: &UniPoly, lo: &Rational, hi: &Rational) -> Result<Vec<RootInterval>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if lo > hi {
        return Err(Error::InvalidParameter("empty root interval".into()));
    }
    let sf = Arc::new(p.square_free());
    let mut out = Vec::new();
    if sf.degree() == 0 {
        return Ok(out);
    }
    let exact = |x: &Rational| RootInterval {
        lower: x.clone(),
        upper: x.clone(),
        squarefree: sf.clone(),
    };
    if sf.eval(lo).is_zero() {
        out.push(exact(lo));
    }
    if lo == hi {
        return Ok(out);
    }
    let mut stack = vec![(lo.clone(), hi.clone(), sf.bernstein(lo, hi))];
    let mut found = Vec::new();
    while let Some((a, b, coeffs)) = stack.pop() {
        match sign_variations(&coeffs) {
            0 => {}
            1 => found.push(RootInterval {
                lower: a,
                upper: b,
                squarefree: sf.clone(),
            }),
            _ => {
                let m = (&a + &b) / int(2);
                let (left, right) = de_casteljau_half(&coeffs);
                if left.last().unwrap().is_zero() {
                    found.push(exact(&m));
                }
                stack.push((m.clone(), b, right));
                stack.push((a, m, left));
            }
        }
    }
    for r in &mut found {
        r.clear_root_ends();
    }
    found.sort_by(|r, s| r.lower.cmp(&s.lower).then(r.upper.cmp(&s.upper)));
    out.extend(found);
    if sf.eval(hi).is_zero() {
        out.push(exact(hi));
    }
    Ok(out)
}

fn sign_variations(c: &[Rational]) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for x in c {
        let s = if x.is_positive() {
            1
        } else if x.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                n += 1;
            }
            last = s;
        }
    }
    n
}

fn de_casteljau_half(c: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let d = c.len() - 1;
    let half = rat(1, 2);
    let mut work = c.to_vec();
    let mut left = Vec::with_capacity(d + 1);
    let mut right = vec![Rational::zero(); d + 1];
    left.push(work[0].clone());
    right[d] = work[d].clone();
    for r in 1..=d {
        for i in 0..=d - r {
            work[i] = (&work[i] + &work[i + 1]) * &half;
        }
        left.push(work[0].clone());
        right[d - r] = work[d - r].clone();
    }
    (left, right)
}

impl From<Vec<Rational>> for UniPoly {
    fn from(c: Vec<Rational>) -> Self {
        UniPoly::new(c)
    }
}

impl UniPoly {
    pub fn one() -> Self {
        UniPoly::new(vec![Rational::one()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(i64, i64)]) -> UniPoly {
        UniPoly::new(c.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    #[test]
    fn rational_root_found_exactly() {
        // 2q^2 - 7q + 3 = (2q - 1)(q - 3)
        let p = poly(&[(3, 1), (-7, 1), (2, 1)]);
        let mut roots = isolate_real_roots(&p, &int(0), &int(1)).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].exact_rational(&rat(1, 1_000_000_000_000)), Some(rat(1, 2)));
    }

    #[test]
    fn irrational_root_refines() {
        let p = poly(&[(1, 2), (-6, 1), (1, 1)]);
        let mut roots = isolate_real_roots(&p, &int(0), &int(1)).unwrap();
        assert_eq!(roots.len(), 1);
        let eps = rat(1, 1_000_000_000_000);
        assert_eq!(roots[0].exact_rational(&eps), None);
        let r = &mut roots[0];
        assert!(r.width() <= eps);
        let want = (6.0 - libm::sqrt(34.0)) / 2.0;
        assert!((crate::rational::to_f64(&r.midpoint()) - want).abs() < 1e-11);
    }

    #[test]
    fn roots_at_endpoints_and_multiple() {
        let q = poly(&[(0, 1), (1, 1)]);
        let roots = isolate_real_roots(&q, &int(0), &int(1)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].is_exact() && roots[0].lower.is_zero());
        // (q - 1/2)^2 (q - 1)
        let p = poly(&[(-1, 4), (5, 4), (-2, 1), (1, 1)]);
        let roots = isolate_real_roots(&p, &int(0), &int(1)).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots[0].is_exact() && roots[0].lower == rat(1, 2));
        assert!(roots[1].is_exact() && roots[1].lower == int(1));
    }

    #[test]
    fn zero_rejected() {
        assert_eq!(
            isolate_real_roots(&UniPoly::default(), &int(0), &int(1)),
            Err(Error::ZeroPolynomial)
        );
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(isolate_real_roots(&poly(&[(3, 1)]), &int(0), &int(1))
            .unwrap()
            .is_empty());
    }
}
