//! Reduced utility tables: the focal bidder's utility as a piecewise
//! polynomial in the top adversary statistics `(w1, v1, v2)`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::mechanism::Demand;
use crate::polynomial::{RatPoly, Var};
use crate::rational::{int, Rational};

/// `expr > 0` when strict, `expr >= 0` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Cond {
    pub expr: RatPoly,
    pub strict: bool,
}

impl Cond {
    pub fn holds_at(&self, point: &[(Var, Rational)]) -> bool {
        let v = self.expr.evaluate(point).expect("condition over w1, v1, v2");
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }

    pub fn substitute_all(&self, fixed: &[(Var, Rational)]) -> Cond {
        Cond {
            expr: self.expr.substitute_all(fixed),
            strict: self.strict,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub conds: Vec<Cond>,
    pub value: RatPoly,
}

/// `c0 + cw·w1 + c1·v1 + c2·v2` with integer coefficients on the statistics.
fn lin(c0: &Rational, cw: i64, c1: i64, c2: i64) -> RatPoly {
    RatPoly::linear(
        c0.clone(),
        &[(Var::W1, int(cw)), (Var::V1, int(c1)), (Var::V2, int(c2))],
    )
}

fn ge(e: RatPoly) -> Cond {
    Cond {
        expr: e,
        strict: false,
    }
}

fn gt(e: RatPoly) -> Cond {
    Cond {
        expr: e,
        strict: true,
    }
}

fn value_of(demand: Demand, theta: &Rational, items: u8) -> Rational {
    if items >= demand.items() {
        theta * int(demand.items() as i64)
    } else {
        Rational::zero()
    }
}

pub(crate) fn truth_pieces(demand: Demand, theta: &Rational) -> Vec<Piece> {
    let z = Rational::zero();
    match demand {
        // wins with the top 1-type v1 when θ beats v2 and θ + v1 > 2 w1;
        // pays max(v2, 2 w1 - v1)
        Demand::One => single_bid_pieces(demand, theta, theta),
        // wins when 2θ beats both v1 + v2 and 2 w1; pays max(v1 + v2, 2 w1)
        Demand::Two => vec![
            Piece {
                conds: vec![ge(lin(&(theta * int(2)), 0, -1, -1)), ge(lin(&z, -2, 1, 1))],
                value: lin(&(theta * int(2)), 0, -1, -1),
            },
            Piece {
                conds: vec![gt(lin(&z, 2, -1, -1)), ge(lin(theta, -1, 0, 0))],
                value: lin(&(theta * int(2)), -2, 0, 0),
            },
        ],
    }
}

/// One own 1-type bid `b` for a bidder of the given true type.
fn single_bid_pieces(demand: Demand, theta: &Rational, b: &Rational) -> Vec<Piece> {
    if b.is_zero() {
        // a zero bid never wins under the fewest-winners tie rule
        return Vec::new();
    }
    let z = Rational::zero();
    let v1 = value_of(demand, theta, 1);
    vec![
        Piece {
            conds: vec![ge(lin(b, 0, 0, -1)), ge(lin(&z, -2, 1, 1))],
            value: lin(&v1, 0, 0, -1),
        },
        Piece {
            conds: vec![
                ge(lin(b, 0, 0, -1)),
                gt(lin(&z, 2, -1, -1)),
                gt(lin(b, -2, 1, 0)),
            ],
            value: lin(&v1, -2, 1, 0),
        },
    ]
}

/// Own bids `(1, x), (1, y)` with `y <= x`.
pub(crate) fn attack_pieces(demand: Demand, theta: &Rational, x: &Rational, y: &Rational) -> Vec<Piece> {
    debug_assert!(y <= x);
    if y.is_zero() {
        return single_bid_pieces(demand, theta, x);
    }
    let z = Rational::zero();
    let v1 = value_of(demand, theta, 1);
    let v2 = value_of(demand, theta, 2);
    let xy = x + y;
    // A: v1 <= y, both own bids win when x + y > 2 w1
    let a = ge(lin(y, 0, -1, 0));
    // B: v2 <= y < v1, only x wins, paying max(y, 2 w1 - v1)
    let b = [ge(lin(y, 0, 0, -1)), gt(lin(&-y, 0, 1, 0))];
    // C: y < v2 <= x, only x wins, paying max(v2, 2 w1 - v1)
    let c = [gt(lin(&-y, 0, 0, 1)), ge(lin(x, 0, 0, -1))];
    vec![
        Piece {
            conds: vec![a.clone(), ge(lin(y, -2, 1, 0))],
            value: lin(&v2, 0, -2, 0),
        },
        Piece {
            conds: vec![a.clone(), gt(lin(&-y, 2, -1, 0)), ge(lin(x, -2, 1, 0))],
            value: lin(&(&v2 + y), -2, -1, 0),
        },
        Piece {
            conds: vec![a, gt(lin(&-x, 2, -1, 0)), gt(lin(&xy, -2, 0, 0))],
            value: lin(&(&v2 + &xy), -4, 0, 0),
        },
        Piece {
            conds: vec![b[0].clone(), b[1].clone(), ge(lin(y, -2, 1, 0))],
            value: lin(&(&v1 - y), 0, 0, 0),
        },
        Piece {
            conds: vec![b[0].clone(), b[1].clone(), gt(lin(&-y, 2, -1, 0)), gt(lin(x, -2, 1, 0))],
            value: lin(&v1, -2, 1, 0),
        },
        Piece {
            conds: vec![c[0].clone(), c[1].clone(), ge(lin(&z, -2, 1, 1))],
            value: lin(&v1, 0, 0, -1),
        },
        Piece {
            conds: vec![c[0].clone(), c[1].clone(), gt(lin(&z, 2, -1, -1)), gt(lin(x, -2, 1, 0))],
            value: lin(&v1, -2, 1, 0),
        },
    ]
}
