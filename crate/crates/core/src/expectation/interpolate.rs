//! Recovers the expected difference as an exact polynomial in the attack and
//! type parameters by interpolation on chambers of parameter space.
//!
//! Chambers are boxes in `(t, x, s)` where `s = y / x`, so the canonical
//! domain `y <= x` becomes the unit cube. Polynomials are kept in these ratio
//! coordinates (the `y` variable holds `s`) and converted back on request.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::{binomial_mixture, expected_diff_poly_q, Scenario};
use crate::distributions::ValueDistribution;
use crate::mechanism::Demand;
use crate::polynomial::tensor::{indices, Tensor};
use crate::polynomial::{Box, RatPoly, Var, NVARS};
use crate::rational::{int, rat, Rational};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Range {
    Fixed(Rational),
    Interval(Rational, Rational),
}

impl Range {
    pub fn unit() -> Self {
        Range::Interval(Rational::zero(), Rational::one())
    }

    fn lo_hi(&self) -> (Rational, Rational) {
        match self {
            Range::Fixed(v) => (v.clone(), v.clone()),
            Range::Interval(lo, hi) => (lo.clone(), hi.clone()),
        }
    }

    fn at(&self, u: &Rational) -> Rational {
        let (lo, hi) = self.lo_hi();
        &lo + (&hi - &lo) * u
    }

    fn is_free(&self) -> bool {
        matches!(self, Range::Interval(..))
    }
}

/// A box of `(t, x, s)` parameter space with `s = y / x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chamber {
    pub theta: Range,
    pub x: Range,
    pub ratio: Range,
}

impl Chamber {
    /// `t = 1`, `0 <= y <= x <= 1`.
    pub fn theta_one() -> Self {
        Self {
            theta: Range::Fixed(Rational::one()),
            x: Range::unit(),
            ratio: Range::unit(),
        }
    }

    /// `x = 1`, `0 <= t <= 1`, `0 <= y <= 1`.
    pub fn x_one() -> Self {
        Self {
            theta: Range::unit(),
            x: Range::Fixed(Rational::one()),
            ratio: Range::unit(),
        }
    }

    pub fn full() -> Self {
        Self {
            theta: Range::unit(),
            x: Range::unit(),
            ratio: Range::unit(),
        }
    }

    fn ranges(&self) -> [(Var, &Range); 3] {
        [(Var::T, &self.theta), (Var::X, &self.x), (Var::Y, &self.ratio)]
    }

    /// Free variables in the order t, x, s (s reported as `Var::Y`).
    pub fn free_vars(&self) -> Vec<Var> {
        self.ranges()
            .iter()
            .filter(|(_, r)| r.is_free())
            .map(|(v, _)| *v)
            .collect()
    }

    /// The chamber's free variables plus `q ∈ [q_lo, 1]`.
    pub fn certification_box(&self, q_lo: &Rational) -> Box {
        let mut b: Vec<(Var, Rational, Rational)> = self
            .ranges()
            .iter()
            .filter(|(_, r)| r.is_free())
            .map(|(v, r)| {
                let (lo, hi) = r.lo_hi();
                (*v, lo, hi)
            })
            .collect();
        b.push((Var::Q, q_lo.clone(), Rational::one()));
        Box::new(b).expect("chamber ranges are ordered")
    }

    /// `(θ, x, y)` for local coordinates of the free variables.
    fn params(&self, u: &[Rational]) -> (Rational, Rational, Rational) {
        let mut it = u.iter();
        let mut take = |r: &Range| match r {
            Range::Fixed(v) => v.clone(),
            Range::Interval(..) => r.at(it.next().expect("one coordinate per free variable")),
        };
        let t = take(&self.theta);
        let x = take(&self.x);
        let s = take(&self.ratio);
        let y = &x * &s;
        (t, x, y)
    }

    /// `(θ, x, y)` for a point given in ratio coordinates.
    pub fn to_params(point: &[(Var, Rational)]) -> (Option<Rational>, Option<Rational>, Option<Rational>) {
        let get = |v: Var| point.iter().find(|(w, _)| *w == v).map(|(_, r)| r.clone());
        let x = get(Var::X);
        let y = match (&x, get(Var::Y)) {
            (Some(x), Some(s)) => Some(x * s),
            _ => None,
        };
        (get(Var::T), x, y)
    }

    fn validate(&self, demand: Demand) -> Result<()> {
        for (v, r) in self.ranges() {
            let (lo, hi) = r.lo_hi();
            if lo > hi || lo < Rational::zero() || hi > Rational::one() {
                return Err(Error::InvalidParameter(alloc::format!(
                    "chamber range for {v} must lie in [0, 1]"
                )));
            }
        }
        if demand == Demand::One && self.theta != Range::Fixed(Rational::one()) {
            return Err(Error::InvalidParameter(
                "demand-1 chambers fix theta = 1".into(),
            ));
        }
        Ok(())
    }

    fn split(&self, var: Var) -> (Chamber, Chamber) {
        let half = |r: &Range| -> (Range, Range) {
            let (lo, hi) = r.lo_hi();
            let mid = (&lo + &hi) / int(2);
            (Range::Interval(lo, mid.clone()), Range::Interval(mid, hi))
        };
        let (mut a, mut b) = (self.clone(), self.clone());
        match var {
            Var::T => (a.theta, b.theta) = half(&self.theta),
            Var::X => (a.x, b.x) = half(&self.x),
            _ => (a.ratio, b.ratio) = half(&self.ratio),
        }
        (a, b)
    }
}

/// The expected difference on one chamber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChamberPolynomial {
    pub chamber: Chamber,
    /// `Δ_k` in ratio coordinates, for `k = 0..=ñ`.
    pub per_k: Vec<RatPoly>,
    /// Binomial mixture of `per_k`, in ratio coordinates.
    pub ratio_form: RatPoly,
}

impl ChamberPolynomial {
    /// The polynomial in `(t, x, y, q)`, when the ratio form is polynomial in
    /// `y = s·x` (every monomial `x^a s^b` has `a >= b`).
    pub fn to_xy(&self) -> Option<RatPoly> {
        let mut out = RatPoly::zero();
        for (e, c) in self.ratio_form.terms() {
            let (a, b) = (e[Var::X.index()], e[Var::Y.index()]);
            if a < b {
                return None;
            }
            let mut e2 = *e;
            e2[Var::X.index()] = a - b;
            out.add_term(e2, c.clone());
        }
        Some(out)
    }
}

/// Per-variable degree bound for the given beta and population.
pub fn degree_bound(alpha: u32, beta: u32, n: usize) -> usize {
    (alpha + beta - 1) as usize * (n - 1) + 4
}

fn node(i: usize, count: usize) -> Rational {
    rat(i as i64 + 1, count as i64 + 1)
}

/// Deterministic interior points away from the tensor nodes.
fn held_out(j: usize, axis: usize) -> Rational {
    let p = [617usize, 389, 211][axis % 3];
    rat(((j * p + 101 * (axis + 1)) % 997) as i64 + 1, 999)
}

fn diff_at(demand: Demand, dist: &ValueDistribution, n: usize, chamber: &Chamber, u: &[Rational]) -> Result<Vec<Rational>> {
    let (t, x, y) = chamber.params(u);
    let s = Scenario::attack(demand, t, x, y, n)?;
    Ok(expected_diff_poly_q(&s, dist)?.per_k)
}

/// Monomial coefficients of the interpolant through `(z_i, f_i)`.
fn newton_to_monomial(z: &[Rational], f: &[Rational]) -> Vec<Rational> {
    let d = z.len() - 1;
    let mut c = f.to_vec();
    for j in 1..=d {
        for i in (j..=d).rev() {
            c[i] = (&c[i] - &c[i - 1]) / (&z[i] - &z[i - j]);
        }
    }
    let mut p = vec![c[d].clone()];
    for j in (0..d).rev() {
        // p <- p·(z - z_j) + c_j
        let mut next = vec![Rational::zero(); p.len() + 1];
        for (i, a) in p.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * &z[j];
        }
        next[0] += &c[j];
        p = next;
    }
    p
}

fn interpolate_local(
    values: &Tensor<Vec<Rational>>,
    nodes: &[Rational],
    free: &[Var],
    chamber: &Chamber,
    n_k: usize,
) -> Vec<RatPoly> {
    let mut out = Vec::with_capacity(n_k);
    for k in 0..n_k {
        let mut t = Tensor {
            shape: values.shape.clone(),
            data: values.data.iter().map(|v| v[k].clone()).collect(),
        };
        for axis in 0..free.len() {
            t = t.map_axis(axis, nodes.len(), |f| newton_to_monomial(nodes, f));
        }
        // local u ∈ [0,1] to chamber coordinates: u = (v - lo) / (hi - lo)
        let mut p = RatPoly::zero();
        for (idx, c) in indices(&t.shape).zip(t.data.iter()) {
            let mut e = [0u16; NVARS];
            for (a, v) in free.iter().enumerate() {
                e[v.index()] = idx[a] as u16;
            }
            p.add_term(e, c.clone());
        }
        for (v, r) in chamber.ranges() {
            if let Range::Interval(lo, hi) = r {
                let w = hi - lo;
                p = p.affine_substitute(v, &(-lo / &w), &(Rational::one() / &w));
            }
        }
        out.push(p);
    }
    out
}

fn eval_local(p: &RatPoly, free: &[Var], chamber: &Chamber, u: &[Rational]) -> Rational {
    let ranges = chamber.ranges();
    let assign: Vec<(Var, Rational)> = free
        .iter()
        .zip(u)
        .map(|(v, ui)| {
            let r = ranges.iter().find(|(w, _)| w == v).expect("free variable").1;
            (*v, r.at(ui))
        })
        .collect();
    p.evaluate(&assign).expect("chamber polynomial in its free variables")
}

/// Interpolates `Δ_k` on one chamber and validates at 20 held-out nodes.
/// Fails with [`Error::NotPolynomial`] when the chamber straddles a
/// breakpoint.
pub fn interpolate_diff_polynomial(
    demand: Demand,
    dist: &ValueDistribution,
    n: usize,
    chamber: &Chamber,
) -> Result<ChamberPolynomial> {
    let (alpha, beta) = match dist {
        ValueDistribution::Beta { alpha, beta } => (*alpha, *beta),
        ValueDistribution::Discrete(_) => {
            return Err(Error::UnsupportedDistribution("interpolation needs a beta distribution"))
        }
    };
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    chamber.validate(demand)?;
    let free = chamber.free_vars();
    let d = degree_bound(alpha, beta, n);
    let nodes: Vec<Rational> = (0..=d).map(|i| node(i, d + 1)).collect();
    let shape = vec![nodes.len(); free.len()];
    let mut data = Vec::new();
    for idx in indices(&shape) {
        let u: Vec<Rational> = idx.iter().map(|&i| nodes[i].clone()).collect();
        data.push(diff_at(demand, dist, n, chamber, &u)?);
    }
    let n_k = n;
    let values = Tensor { shape, data };
    let per_k = interpolate_local(&values, &nodes, &free, chamber, n_k);
    for j in 0..20 {
        let u: Vec<Rational> = (0..free.len()).map(|a| held_out(j, a)).collect();
        let direct = diff_at(demand, dist, n, chamber, &u)?;
        for (p, want) in per_k.iter().zip(&direct) {
            if &eval_local(p, &free, chamber, &u) != want {
                return Err(Error::NotPolynomial);
            }
        }
        if free.is_empty() {
            break;
        }
    }
    let ratio_form = binomial_mixture(&per_k);
    Ok(ChamberPolynomial {
        chamber: chamber.clone(),
        per_k,
        ratio_form,
    })
}

/// Whether `Δ` restricted to the line through the chamber centre along
/// `axis` is a polynomial of the bounded degree.
fn line_is_polynomial(demand: Demand, dist: &ValueDistribution, n: usize, chamber: &Chamber, axis: usize, d: usize) -> Result<bool> {
    let free = chamber.free_vars();
    let centre = |t: Rational| -> Vec<Rational> {
        (0..free.len())
            .map(|a| if a == axis { t.clone() } else { rat(1, 2) })
            .collect()
    };
    let nodes: Vec<Rational> = (0..=d).map(|i| node(i, d + 1)).collect();
    let mut vals = Vec::new();
    for z in &nodes {
        vals.push(diff_at(demand, dist, n, chamber, &centre(z.clone()))?);
    }
    for j in 0..3 {
        let z = held_out(j, axis);
        let direct = diff_at(demand, dist, n, chamber, &centre(z.clone()))?;
        for k in 0..direct.len() {
            let f: Vec<Rational> = vals.iter().map(|v| v[k].clone()).collect();
            let c = newton_to_monomial(&nodes, &f);
            let at = c.iter().rev().fold(Rational::zero(), |acc, ci| acc * &z + ci);
            if at != direct[k] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Covers `root` by chambers on which `Δ` is polynomial, bisecting at most
/// `max_splits` times along any branch. Identical neighbouring results are
/// merged back into `root` when every piece agrees.
pub fn interpolate_chambers(
    demand: Demand,
    dist: &ValueDistribution,
    n: usize,
    root: &Chamber,
    max_splits: u32,
) -> Result<Vec<ChamberPolynomial>> {
    let (alpha, beta) = match dist {
        ValueDistribution::Beta { alpha, beta } => (*alpha, *beta),
        ValueDistribution::Discrete(_) => {
            return Err(Error::UnsupportedDistribution("interpolation needs a beta distribution"))
        }
    };
    let d = degree_bound(alpha, beta, n);
    let mut done = Vec::new();
    let mut work = vec![(root.clone(), 0u32)];
    while let Some((ch, depth)) = work.pop() {
        match interpolate_diff_polynomial(demand, dist, n, &ch) {
            Ok(p) => done.push(p),
            Err(Error::NotPolynomial) => {
                if depth >= max_splits {
                    return Err(Error::NotPolynomial);
                }
                let free = ch.free_vars();
                let mut axis = None;
                for a in 0..free.len() {
                    if !line_is_polynomial(demand, dist, n, &ch, a, d)? {
                        axis = Some(a);
                        break;
                    }
                }
                let var = free[axis.unwrap_or(0)];
                let (a, b) = ch.split(var);
                work.push((b, depth + 1));
                work.push((a, depth + 1));
            }
            Err(e) => return Err(e),
        }
    }
    done.sort_by_key(|a| chamber_key(&a.chamber));
    if done.len() > 1 && done.iter().all(|p| p.per_k == done[0].per_k) {
        let mut merged = done.swap_remove(0);
        merged.chamber = root.clone();
        return Ok(vec![merged]);
    }
    Ok(done)
}

fn chamber_key(c: &Chamber) -> [Rational; 3] {
    [c.theta.lo_hi().0, c.x.lo_hi().0, c.ratio.lo_hi().0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_recovers_cubic() {
        let z: Vec<Rational> = (0..4).map(|i| node(i, 4)).collect();
        let f: Vec<Rational> = z.iter().map(|x| x * x * x - int(2) * x + rat(1, 3)).collect();
        let c = newton_to_monomial(&z, &f);
        assert_eq!(c, vec![rat(1, 3), int(-2), int(0), int(1)]);
    }

    #[test]
    fn uniform_two_type_slice() {
        let u = ValueDistribution::uniform();
        let chambers = interpolate_chambers(Demand::Two, &u, 3, &Chamber::theta_one(), 4).unwrap();
        for c in &chambers {
            assert_eq!(c.ratio_form.degree_in(Var::Q), 2);
            let xy = c.to_xy().expect("polynomial in y");
            let (_, x1) = (c.chamber.x.lo_hi().0, c.chamber.x.lo_hi().1);
            if x1 == int(1) && c.chamber.ratio.lo_hi().1 == int(1) {
                let v = xy
                    .evaluate(&[(Var::X, int(1)), (Var::Y, int(1)), (Var::Q, rat(1, 2))])
                    .unwrap();
                assert!(v.is_zero());
            }
        }
    }
}
