//! Nonnegativity certificates over boxes by Bernstein expansion and
//! subdivision.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::tensor::{indices, Tensor};
use super::{RatPoly, Var};
use crate::rational::{binomial_q, rat, to_f64, Rational};
use crate::{Error, Result};

/// Closed interval per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Box {
    bounds: Vec<(Var, Rational, Rational)>,
}

impl Box {
    pub fn new(bounds: Vec<(Var, Rational, Rational)>) -> Result<Self> {
        for (i, (v, lo, hi)) in bounds.iter().enumerate() {
            if lo > hi {
                return Err(Error::InvalidParameter(alloc::format!(
                    "box bound for {v} has lower > upper"
                )));
            }
            if bounds[..i].iter().any(|(w, _, _)| w == v) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "variable {v} bounded twice"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn unit(vars: &[Var]) -> Self {
        Self {
            bounds: vars
                .iter()
                .map(|&v| (v, Rational::zero(), Rational::one()))
                .collect(),
        }
    }

    pub fn bounds(&self) -> &[(Var, Rational, Rational)] {
        &self.bounds
    }

    pub fn contains(&self, point: &[(Var, Rational)]) -> bool {
        self.bounds.iter().all(|(v, lo, hi)| {
            point
                .iter()
                .find(|(w, _)| w == v)
                .is_some_and(|(_, x)| lo <= x && x <= hi)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PositivityVerdict {
    Certified,
    Counterexample {
        point: Vec<(Var, Rational)>,
        value: Rational,
    },
    Inconclusive {
        depth_reached: u32,
    },
}

impl PositivityVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, PositivityVerdict::Certified)
    }
}

const GRID: usize = 32;
const HUNT_CANDIDATES: usize = 4;

/// Decides `p ≥ 0` on `bx`. Every variable of `p` must be bounded by `bx`.
pub fn certify_nonnegative(p: &RatPoly, bx: &Box, max_depth: u32) -> Result<PositivityVerdict> {
    let vars: Vec<Var> = bx.bounds.iter().map(|b| b.0).collect();
    if let Some(v) = p.variables().into_iter().find(|v| !vars.contains(v)) {
        return Err(Error::UnboundVariable(v));
    }
    if p.is_zero() {
        return Ok(PositivityVerdict::Certified);
    }
    // local coordinates u ∈ [0,1] per axis
    let mut local = p.clone();
    for (v, lo, hi) in &bx.bounds {
        local = local.affine_substitute(*v, lo, &(hi - lo));
    }
    let to_point = |u: &[Rational]| -> Vec<(Var, Rational)> {
        bx.bounds
            .iter()
            .zip(u)
            .map(|((v, lo, hi), u)| (*v, lo + (hi - lo) * u))
            .collect()
    };
    let eval_local = |u: &[Rational]| -> Rational {
        let assign: Vec<(Var, Rational)> = vars.iter().cloned().zip(u.iter().cloned()).collect();
        local.evaluate(&assign).expect("all box variables assigned")
    };

    let shape: Vec<usize> = vars.iter().map(|&v| local.degree_in(v) as usize + 1).collect();
    let mut power = Tensor::filled(shape.clone(), Rational::zero());
    let strides = power.strides();
    for (e, c) in local.terms() {
        let off: usize = vars
            .iter()
            .zip(&strides)
            .map(|(v, s)| e[v.index()] as usize * s)
            .sum();
        power.data[off] = c.clone();
    }

    if let Some((u, value)) = hunt(&power, &eval_local) {
        return Ok(PositivityVerdict::Counterexample {
            point: to_point(&u),
            value,
        });
    }

    // power basis -> Bernstein basis, axis by axis
    let mut bern = power;
    for axis in 0..shape.len() {
        let d = shape[axis] - 1;
        bern = bern.map_axis(axis, d + 1, |a| {
            (0..=d)
                .map(|i| {
                    (0..=i).fold(Rational::zero(), |acc, j| {
                        acc + binomial_q(i as u64, j as u64) / binomial_q(d as u64, j as u64)
                            * &a[j]
                    })
                })
                .collect()
        });
    }
    let denom = bern
        .data
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let ints = Tensor {
        shape: bern.shape.clone(),
        data: bern
            .data
            .iter()
            .map(|r| (r * Rational::from_integer(denom.clone())).to_integer())
            .collect(),
    };

    let widths: Vec<Rational> = bx.bounds.iter().map(|(_, lo, hi)| hi - lo).collect();
    let mut stack = vec![Node {
        coeffs: ints,
        denom,
        lo: vec![Rational::zero(); vars.len()],
        level: vec![0; vars.len()],
        depth: 0,
    }];
    let mut inconclusive_depth: Option<u32> = None;
    while let Some(node) = stack.pop() {
        if let Some((u, value)) = negative_vertex(&node) {
            return Ok(PositivityVerdict::Counterexample {
                point: to_point(&u),
                value,
            });
        }
        if node.coeffs.data.iter().all(|c| !c.is_negative()) {
            continue;
        }
        if node.depth >= max_depth {
            inconclusive_depth = Some(node.depth);
            continue;
        }
        // widest splittable axis in original coordinates
        let axis = (0..vars.len())
            .filter(|&a| shape[a] > 1)
            .max_by(|&a, &b| {
                let wa = &widths[a] / Rational::from_integer(BigInt::one() << node.level[a]);
                let wb = &widths[b] / Rational::from_integer(BigInt::one() << node.level[b]);
                wa.cmp(&wb).then(b.cmp(&a))
            })
            .expect("a negative coefficient implies a nonconstant axis");
        let (left, right) = node.split(axis);
        stack.push(right);
        stack.push(left);
    }
    Ok(match inconclusive_depth {
        Some(depth_reached) => PositivityVerdict::Inconclusive { depth_reached },
        None => PositivityVerdict::Certified,
    })
}

struct Node {
    coeffs: Tensor<BigInt>,
    /// Bernstein coefficient `c` stands for the value `c / denom`.
    denom: BigInt,
    lo: Vec<Rational>,
    level: Vec<u32>,
    depth: u32,
}

impl Node {
    fn hi(&self, axis: usize) -> Rational {
        &self.lo[axis] + Rational::new(BigInt::one(), BigInt::one() << self.level[axis])
    }

    /// De Casteljau at the midpoint with integer arithmetic only: both halves
    /// are rescaled by `2^d`.
    fn split(&self, axis: usize) -> (Node, Node) {
        let d = self.coeffs.shape[axis] - 1;
        let mut right_parts: Vec<Vec<BigInt>> = Vec::new();
        let left = self.coeffs.map_axis(axis, d + 1, |b| {
            let mut work = b.to_vec();
            let mut l = Vec::with_capacity(d + 1);
            let mut r = vec![BigInt::zero(); d + 1];
            l.push(work[0].clone() << d);
            r[d] = work[d].clone() << d;
            for lvl in 1..=d {
                for i in 0..=d - lvl {
                    work[i] = &work[i] + &work[i + 1];
                }
                l.push(work[0].clone() << (d - lvl));
                r[d - lvl] = work[d - lvl].clone() << (d - lvl);
            }
            right_parts.push(r);
            l
        });
        let mut it = right_parts.into_iter();
        let right = self.coeffs.map_axis(axis, d + 1, |_| it.next().expect("one per fiber"));
        let denom = &self.denom << d;
        let mut level = self.level.clone();
        level[axis] += 1;
        let mid = self.hi(axis) - Rational::new(BigInt::one(), BigInt::one() << level[axis]);
        let mut rlo = self.lo.clone();
        rlo[axis] = mid;
        (
            Node {
                coeffs: left,
                denom: denom.clone(),
                lo: self.lo.clone(),
                level: level.clone(),
                depth: self.depth + 1,
            },
            Node {
                coeffs: right,
                denom,
                lo: rlo,
                level,
                depth: self.depth + 1,
            },
        )
    }
}

/// Vertex Bernstein coefficients are exact values at the box corners.
fn negative_vertex(node: &Node) -> Option<(Vec<Rational>, Rational)> {
    let n = node.coeffs.shape.len();
    for mask in 0..(1usize << n) {
        let idx: Vec<usize> = (0..n)
            .map(|a| {
                if mask >> a & 1 == 1 {
                    node.coeffs.shape[a] - 1
                } else {
                    0
                }
            })
            .collect();
        let c = node.coeffs.get(&idx);
        if c.is_negative() {
            let u = (0..n)
                .map(|a| {
                    if mask >> a & 1 == 1 {
                        node.hi(a)
                    } else {
                        node.lo[a].clone()
                    }
                })
                .collect();
            return Some((u, Rational::new(c.clone(), node.denom.clone())));
        }
    }
    None
}

/// Floating-point grid scan plus coordinate descent; candidates are
/// confirmed by exact evaluation before being reported.
fn hunt(
    power: &Tensor<Rational>,
    eval_exact: &dyn Fn(&[Rational]) -> Rational,
) -> Option<(Vec<Rational>, Rational)> {
    let n = power.shape.len();
    if n == 0 {
        let v = power.data[0].clone();
        return v.is_negative().then(|| (Vec::new(), v));
    }
    let fpow = Tensor {
        shape: power.shape.clone(),
        data: power.data.iter().map(to_f64).collect::<Vec<f64>>(),
    };
    let mut grid = fpow.clone();
    for axis in 0..n {
        grid = grid.map_axis(axis, GRID + 1, |c| {
            (0..=GRID)
                .map(|g| horner(c, g as f64 / GRID as f64))
                .collect()
        });
    }
    let mut order: Vec<usize> = (0..grid.data.len()).collect();
    order.sort_by(|&a, &b| grid.data[a].total_cmp(&grid.data[b]).then(a.cmp(&b)));
    let grid_shape = grid.shape.clone();
    let all: Vec<Vec<usize>> = indices(&grid_shape).collect();
    for &flat in order.iter().take(HUNT_CANDIDATES) {
        let u: Vec<Rational> = all[flat].iter().map(|&g| rat(g as i64, GRID as i64)).collect();
        let v = eval_exact(&u);
        if v.is_negative() {
            return Some((u, v));
        }
    }
    // coordinate descent on dyadic points from the best grid point
    let mut num: Vec<i64> = all[order[0]].iter().map(|&g| (g as i64) << 25).collect();
    let full = (GRID as i64) << 25;
    let eval_f = |num: &[i64]| {
        let u: Vec<f64> = num.iter().map(|&k| k as f64 / full as f64).collect();
        eval_tensor_f64(&fpow, &u)
    };
    let mut best = eval_f(&num);
    let mut step = 1i64 << 24;
    let mut evals = 0;
    while step > 0 && evals < 4000 {
        let mut improved = false;
        for a in 0..n {
            for dir in [-1i64, 1] {
                let cand = (num[a] + dir * step).clamp(0, full);
                if cand == num[a] {
                    continue;
                }
                let old = num[a];
                num[a] = cand;
                let v = eval_f(&num);
                evals += 1;
                if v < best {
                    best = v;
                    improved = true;
                } else {
                    num[a] = old;
                }
            }
        }
        if !improved {
            step /= 2;
        }
    }
    let u: Vec<Rational> = num.iter().map(|&k| Rational::new(k.into(), full.into())).collect();
    let v = eval_exact(&u);
    v.is_negative().then_some((u, v))
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

fn eval_tensor_f64(t: &Tensor<f64>, u: &[f64]) -> f64 {
    let mut cur = t.clone();
    for (axis, &x) in u.iter().enumerate() {
        cur = cur.map_axis(axis, 1, |c| vec![horner(c, x)]);
    }
    cur.data[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn x() -> RatPoly {
        RatPoly::var(Var::X)
    }
    fn y() -> RatPoly {
        RatPoly::var(Var::Y)
    }

    #[test]
    fn shifted_square_certified() {
        let d = &x() - &y();
        let p = &(&d * &d) + &RatPoly::constant(rat(1, 100));
        let v = certify_nonnegative(&p, &Box::unit(&[Var::X, Var::Y]), 12).unwrap();
        assert_eq!(v, PositivityVerdict::Certified);
    }

    #[test]
    fn zero_along_diagonal_is_inconclusive() {
        let d = &x() - &y();
        let v = certify_nonnegative(&(&d * &d), &Box::unit(&[Var::X, Var::Y]), 8).unwrap();
        assert_eq!(v, PositivityVerdict::Inconclusive { depth_reached: 8 });
    }

    #[test]
    fn linear_counterexample_at_origin() {
        let p = &x() - &RatPoly::constant(rat(1, 2));
        let v = certify_nonnegative(&p, &Box::unit(&[Var::X]), 12).unwrap();
        assert_eq!(
            v,
            PositivityVerdict::Counterexample {
                point: vec![(Var::X, int(0))],
                value: rat(-1, 2)
            }
        );
    }

    #[test]
    fn tiny_dip_found_by_subdivision_or_hunt() {
        // (x - 1/3)^2 - 1/10^6 dips below zero on a tiny interval around 1/3
        let d = &x() - &RatPoly::constant(rat(1, 3));
        let p = &(&d * &d) - &RatPoly::constant(rat(1, 1_000_000));
        match certify_nonnegative(&p, &Box::unit(&[Var::X]), 30).unwrap() {
            PositivityVerdict::Counterexample { point, value } => {
                assert!(value.is_negative());
                assert_eq!(p.evaluate(&point).unwrap(), value);
            }
            other => panic!("expected counterexample, got {other:?}"),
        }
    }

    #[test]
    fn interior_double_root_is_inconclusive() {
        let d = &x() - &RatPoly::constant(rat(1, 3));
        let p = &d * &d;
        let v = certify_nonnegative(&p, &Box::unit(&[Var::X]), 6).unwrap();
        assert_eq!(v, PositivityVerdict::Inconclusive { depth_reached: 6 });
    }

    #[test]
    fn unbounded_variable_rejected() {
        let r = certify_nonnegative(&x(), &Box::unit(&[Var::Y]), 4);
        assert_eq!(r, Err(Error::UnboundVariable(Var::X)));
    }

    #[test]
    fn non_unit_box() {
        // x - 2 on [3, 5] is positive; on [1, 5] it is not
        let p = &x() - &RatPoly::constant(int(2));
        let b = Box::new(vec![(Var::X, int(3), int(5))]).unwrap();
        assert!(certify_nonnegative(&p, &b, 4).unwrap().is_certified());
        let b = Box::new(vec![(Var::X, int(1), int(5))]).unwrap();
        match certify_nonnegative(&p, &b, 4).unwrap() {
            PositivityVerdict::Counterexample { point, value } => {
                assert_eq!(point, vec![(Var::X, int(1))]);
                assert_eq!(value, int(-1));
            }
            other => panic!("{other:?}"),
        }
    }
}
