//! Exact integration of a polynomial over a polytope cut out by linear
//! conditions, by splitting on which bound is active per variable.

use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use super::pieces::Cond;
use crate::polynomial::{RatPoly, Var, NVARS};
use crate::rational::Rational;

fn linear_coeff(e: &RatPoly, v: Var) -> Rational {
    let mut ex = [0u16; NVARS];
    ex[v.index()] = 1;
    e.coefficient(&ex)
}

/// Scales so the first mentioned variable has coefficient ±1.
fn normalize(c: &Cond) -> Cond {
    let lead = Var::ALL
        .into_iter()
        .map(|v| linear_coeff(&c.expr, v))
        .find(|k| !k.is_zero());
    match lead {
        Some(k) => Cond {
            expr: c.expr.scale(&(Rational::from_integer(1.into()) / k.abs())),
            strict: c.strict,
        },
        None => c.clone(),
    }
}

/// Drops satisfied constant conditions and duplicates; `None` when some
/// constant condition fails.
fn simplify(conds: Vec<Cond>) -> Option<Vec<Cond>> {
    let mut out: Vec<Cond> = Vec::with_capacity(conds.len());
    for c in conds {
        if let Some(k) = c.expr.as_constant() {
            let ok = if c.strict { k.is_positive() } else { !k.is_negative() };
            if !ok {
                return None;
            }
            continue;
        }
        let c = normalize(&c);
        if let Some(prev) = out.iter_mut().find(|p| p.expr == c.expr) {
            prev.strict |= c.strict;
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Whether the conditions, all read as strict, have a common solution
/// (Fourier-Motzkin elimination).
fn has_interior(conds: &[Cond], vars: &[Var]) -> bool {
    let mut cur: Vec<RatPoly> = conds.iter().map(|c| c.expr.clone()).collect();
    for &v in vars {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest: Vec<RatPoly> = Vec::new();
        for e in cur {
            let k = linear_coeff(&e, v);
            if k.is_positive() {
                pos.push(e.scale(&(Rational::from_integer(1.into()) / k)));
            } else if k.is_negative() {
                neg.push(e.scale(&(Rational::from_integer(1.into()) / -k)));
            } else {
                rest.push(e);
            }
        }
        for p in &pos {
            for n in &neg {
                rest.push(p + n);
            }
        }
        cur = Vec::new();
        for e in rest {
            if let Some(k) = e.as_constant() {
                if !k.is_positive() {
                    return false;
                }
            } else {
                let e = normalize(&Cond {
                    expr: e,
                    strict: true,
                })
                .expr;
                if !cur.contains(&e) {
                    cur.push(e);
                }
            }
        }
    }
    cur.iter().all(|e| e.as_constant().is_some_and(|k| k.is_positive()))
}

/// `∫ integrand` over the region where all `conds` hold, integrating the
/// variables of `order` from first to last. Every variable in `order` must
/// be bounded above and below by the conditions.
pub(crate) fn integrate(integrand: &RatPoly, conds: Vec<Cond>, order: &[Var]) -> Rational {
    let r = integrate_rec(integrand, conds, order);
    r.as_constant().expect("all variables integrated out")
}

fn integrate_rec(g: &RatPoly, conds: Vec<Cond>, order: &[Var]) -> RatPoly {
    let Some(conds) = simplify(conds) else {
        return RatPoly::zero();
    };
    if g.is_zero() {
        return RatPoly::zero();
    }
    let Some((&z, rest_order)) = order.split_first() else {
        return g.clone();
    };
    if !has_interior(&conds, order) {
        return RatPoly::zero();
    }
    let mut lowers: Vec<RatPoly> = Vec::new();
    let mut uppers: Vec<RatPoly> = Vec::new();
    let mut others: Vec<Cond> = Vec::new();
    let zpoly = RatPoly::var(z);
    for c in conds {
        let k = linear_coeff(&c.expr, z);
        if k.is_zero() {
            others.push(c);
            continue;
        }
        // k z + r >= 0  <=>  z >= -r/k (k > 0) or z <= -r/k (k < 0)
        let r = &c.expr - &zpoly.scale(&k);
        let bound = r.scale(&(-Rational::from_integer(1.into()) / &k));
        let list = if k.is_positive() { &mut lowers } else { &mut uppers };
        if !list.contains(&bound) {
            list.push(bound);
        }
    }
    assert!(
        !lowers.is_empty() && !uppers.is_empty(),
        "variable {z} is unbounded"
    );
    let mut total = RatPoly::zero();
    for (i, lo) in lowers.iter().enumerate() {
        for (j, hi) in uppers.iter().enumerate() {
            let mut sub = others.clone();
            for (k, other) in lowers.iter().enumerate() {
                if k != i {
                    sub.push(Cond {
                        expr: lo - other,
                        strict: k < i,
                    });
                }
            }
            for (k, other) in uppers.iter().enumerate() {
                if k != j {
                    sub.push(Cond {
                        expr: other - hi,
                        strict: k < j,
                    });
                }
            }
            sub.push(Cond {
                expr: hi - lo,
                strict: true,
            });
            let Some(sub) = simplify(sub) else { continue };
            if !has_interior(&sub, rest_order) {
                continue;
            }
            let inner = g
                .integrate_definite(z, lo, hi)
                .expect("bounds never mention their own variable");
            total += &integrate_rec(&inner, sub, rest_order);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use alloc::vec;

    fn ge(e: RatPoly) -> Cond {
        Cond { expr: e, strict: false }
    }

    #[test]
    fn triangle_area_and_moment() {
        // 0 <= v2 <= v1 <= 1
        let v1 = RatPoly::var(Var::V1);
        let v2 = RatPoly::var(Var::V2);
        let conds = vec![
            ge(v2.clone()),
            ge(&v1 - &v2),
            ge(&RatPoly::one() - &v1),
        ];
        assert_eq!(integrate(&RatPoly::one(), conds.clone(), &[Var::V2, Var::V1]), rat(1, 2));
        assert_eq!(integrate(&v1, conds, &[Var::V2, Var::V1]), rat(1, 3));
    }

    #[test]
    fn split_regions_sum_to_whole() {
        // unit square cut by w1 <= (v1 + 1/2)/2
        let w = RatPoly::var(Var::W1);
        let v = RatPoly::var(Var::V1);
        let sq = vec![
            ge(w.clone()),
            ge(&RatPoly::one() - &w),
            ge(v.clone()),
            ge(&RatPoly::one() - &v),
        ];
        let cut = &(&v.scale(&rat(1, 2)) + &RatPoly::constant(rat(1, 4))) - &w;
        let g = &w * &v;
        let mut a = sq.clone();
        a.push(ge(cut.clone()));
        let mut b = sq.clone();
        b.push(ge(-cut));
        let order = [Var::W1, Var::V1];
        let whole = integrate(&g, sq, &order);
        assert_eq!(whole, rat(1, 4));
        assert_eq!(integrate(&g, a, &order) + integrate(&g, b, &order), whole);
    }

    #[test]
    fn infeasible_is_zero() {
        let v = RatPoly::var(Var::V1);
        let conds = vec![ge(v.clone()), ge(&RatPoly::one() - &v), ge(&v - &RatPoly::constant(int(2)))];
        assert_eq!(integrate(&RatPoly::one(), conds, &[Var::V1]), int(0));
    }
}
