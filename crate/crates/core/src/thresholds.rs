//! Granularity thresholds `q*`, their global certification, impossibility
//! witnesses and grid search for beneficial attacks.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::distributions::{TypeModel, ValueDistribution};
use crate::expectation::{
    discrete_diff_by_k, expected_diff_poly_q, interpolate_chambers, Chamber, DiffByK, Range,
    Scenario, Strategy,
};
use crate::mechanism::Demand;
use crate::polynomial::{
    certify_nonnegative, isolate_real_roots, PositivityVerdict, RatPoly, RootInterval, Var,
};
use crate::rational::{int, rat, Rational};
use crate::{Error, Result};

/// Roots are refined to this width before looking for an exact value.
pub fn root_width() -> Rational {
    rat(1, 1_000_000_000_000)
}

/// Bisection budget per branch when searching for polynomial chambers.
pub const CHAMBER_SPLITS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QStar {
    Exact(Rational),
    Interval(RootInterval),
}

impl QStar {
    pub fn lower(&self) -> &Rational {
        match self {
            QStar::Exact(r) => r,
            QStar::Interval(i) => &i.lower,
        }
    }

    pub fn upper(&self) -> &Rational {
        match self {
            QStar::Exact(r) => r,
            QStar::Interval(i) => &i.upper,
        }
    }

    pub fn midpoint(&self) -> Rational {
        (self.lower() + self.upper()) / int(2)
    }

    pub fn to_f64(&self) -> f64 {
        crate::rational::to_f64(&self.midpoint())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    FixedAttack { scenario: Scenario },
    Global { dist: ValueDistribution, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdCertificate {
    pub q_star: QStar,
    pub scope: Scope,
    /// Truth-minus-attack difference in `q` (fixed attacks only).
    pub polynomial: Option<RatPoly>,
    /// Every root of `polynomial` in `[0, 1]`, ascending.
    pub roots: Vec<RootInterval>,
    /// Positivity on `q ∈ [q*, 1]` over all attacks (global scope only).
    pub verification: Option<PositivityVerdict>,
    /// Demand of the true type at which `verification` failed.
    pub violating_demand: Option<Demand>,
    /// A point `q` below `q*` where the difference is negative.
    pub falsification: Option<(Rational, Rational)>,
}

/// Largest `q̄` with `p >= 0` on `(q̄, 1]`, together with all roots in
/// `[0, 1]` and a negative sample below `q̄` when there is one.
pub fn threshold_of(p: &RatPoly) -> Result<(QStar, Vec<RootInterval>, Option<(Rational, Rational)>)> {
    if p.is_zero() {
        return Ok((QStar::Exact(Rational::zero()), Vec::new(), None));
    }
    let uni = p.to_univariate(Var::Q)?;
    let mut roots = isolate_real_roots(&uni, &Rational::zero(), &Rational::one())?;
    for r in &mut roots {
        r.refine(&root_width());
    }
    // one sample per gap between consecutive roots, highest gap first
    for i in (0..=roots.len()).rev() {
        let lo = if i == 0 { Rational::zero() } else { roots[i - 1].upper.clone() };
        let top = if i == roots.len() { Rational::one() } else { roots[i].lower.clone() };
        let s = (&lo + &top) / int(2);
        let v = uni.eval(&s);
        if v.is_zero() {
            // degenerate gap at a root
            continue;
        }
        if v.is_negative() {
            if i == roots.len() {
                return Ok((QStar::Exact(Rational::one()), roots, Some((s, v))));
            }
            let mut r = roots[i].clone();
            let q = match r.exact_rational(&root_width()) {
                Some(e) => QStar::Exact(e),
                None => QStar::Interval(r),
            };
            return Ok((q, roots, Some((s, v))));
        }
    }
    Ok((QStar::Exact(Rational::zero()), roots, None))
}

fn fixed_certificate(scenario: &Scenario, d: DiffByK) -> Result<ThresholdCertificate> {
    let (q_star, roots, falsification) = threshold_of(&d.q_poly)?;
    Ok(ThresholdCertificate {
        q_star,
        scope: Scope::FixedAttack {
            scenario: scenario.clone(),
        },
        polynomial: Some(d.q_poly),
        roots,
        verification: None,
        violating_demand: None,
        falsification,
    })
}

/// Threshold of one attack: beta models by integration, discrete ones by
/// enumeration.
pub fn qstar_fixed_attack(scenario: &Scenario, dist: &ValueDistribution) -> Result<ThresholdCertificate> {
    let d = match dist {
        ValueDistribution::Beta { .. } => expected_diff_poly_q(scenario, dist)?,
        ValueDistribution::Discrete(_) => {
            discrete_diff_by_k(&TypeModel::new(Rational::zero(), dist.clone())?, scenario)?
        }
    };
    fixed_certificate(scenario, d)
}

/// As [`qstar_fixed_attack`] for a discrete model with separate value
/// distributions for 1-type and 2-type adversaries (`model.q` is ignored).
pub fn qstar_fixed_attack_model(scenario: &Scenario, model: &TypeModel) -> Result<ThresholdCertificate> {
    fixed_certificate(scenario, discrete_diff_by_k(model, scenario)?)
}

fn range_value(r: &Range, free: Option<&Rational>) -> Rational {
    match (r, free) {
        (Range::Fixed(v), _) => v.clone(),
        (Range::Interval(..), Some(v)) => v.clone(),
        (Range::Interval(lo, _), None) => lo.clone(),
    }
}

/// Rewrites a point in ratio coordinates as `(θ, x, y, q)`.
fn attack_point(ch: &Chamber, point: &[(Var, Rational)]) -> Vec<(Var, Rational)> {
    let get = |v: Var| point.iter().find(|(w, _)| *w == v).map(|(_, r)| r);
    let t = range_value(&ch.theta, get(Var::T));
    let x = range_value(&ch.x, get(Var::X));
    let s = range_value(&ch.ratio, get(Var::Y));
    let q = get(Var::Q).cloned().unwrap_or_else(Rational::one);
    let y = &x * &s;
    vec![(Var::T, t), (Var::X, x), (Var::Y, y), (Var::Q, q)]
}

/// Chambers to certify for each demand. With `β = 1` the demand-2 region
/// reduces to the faces `t = 1` and `x = 1`.
pub fn global_regions(beta: u32) -> Vec<(Demand, Chamber)> {
    let mut out = vec![(Demand::One, Chamber::theta_one())];
    if beta == 1 {
        out.push((Demand::Two, Chamber::theta_one()));
        out.push((Demand::Two, Chamber::x_one()));
    } else {
        out.push((Demand::Two, Chamber::full()));
    }
    out
}

/// Certifies that no two-bid attack gains in expectation for any `q` in
/// `[q_guess, 1]`.
pub fn qstar_global(dist: &ValueDistribution, n: usize, q_guess: &Rational, max_depth: u32) -> Result<ThresholdCertificate> {
    let beta = match dist {
        ValueDistribution::Beta { beta, .. } => *beta,
        ValueDistribution::Discrete(_) => {
            return Err(Error::UnsupportedDistribution("global certification needs a beta distribution"))
        }
    };
    if q_guess < &Rational::zero() || q_guess > &Rational::one() {
        return Err(Error::InvalidParameter("q_guess outside [0, 1]".into()));
    }
    let mut verdict = PositivityVerdict::Certified;
    let mut violating = None;
    'regions: for (demand, root) in global_regions(beta) {
        let chambers = match interpolate_chambers(demand, dist, n, &root, CHAMBER_SPLITS) {
            Ok(c) => c,
            Err(Error::NotPolynomial) => {
                verdict = PositivityVerdict::Inconclusive { depth_reached: 0 };
                violating = Some(demand);
                continue;
            }
            Err(e) => return Err(e),
        };
        for ch in chambers {
            let bx = ch.chamber.certification_box(q_guess);
            match certify_nonnegative(&ch.ratio_form, &bx, max_depth)? {
                PositivityVerdict::Certified => {}
                PositivityVerdict::Counterexample { point, value } => {
                    verdict = PositivityVerdict::Counterexample {
                        point: attack_point(&ch.chamber, &point),
                        value,
                    };
                    violating = Some(demand);
                    break 'regions;
                }
                inc @ PositivityVerdict::Inconclusive { .. } => {
                    if verdict.is_certified() {
                        verdict = inc;
                        violating = Some(demand);
                    }
                }
            }
        }
    }
    Ok(ThresholdCertificate {
        q_star: QStar::Exact(q_guess.clone()),
        scope: Scope::Global {
            dist: dist.clone(),
            n,
        },
        polynomial: None,
        roots: Vec::new(),
        verification: Some(verdict),
        violating_demand: violating,
        falsification: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpossibilityWitness {
    pub q: Rational,
    pub n: usize,
    pub epsilon: Rational,
    pub distribution: ValueDistribution,
    pub scenario: Scenario,
    /// Truth minus attack at `q`; negative.
    pub diff: Rational,
}

/// Largest `k / den` in `[0, 1/2]` for which `ok` holds, assuming `ok` is
/// monotone (true below some threshold).
fn largest_fraction(den: &BigInt, ok: &dyn Fn(&Rational) -> bool) -> Rational {
    let (mut lo, mut hi) = (BigInt::zero(), den / 2 + 1);
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) / 2;
        if ok(&Rational::new(mid.clone(), den.clone())) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Rational::new(lo, den.clone())
}

/// A rational `ε` below each of the four bounds of the construction; the two
/// root bounds are tested through their monotone polynomial forms.
pub fn impossibility_epsilon(q: &Rational, n: usize) -> Result<Rational> {
    if q >= &Rational::one() || q.is_negative() {
        return Err(Error::InvalidParameter("witnesses need 0 <= q < 1".into()));
    }
    if n <= 2 {
        return Err(Error::InvalidParameter("witnesses need n > 2".into()));
    }
    let nt = n - 1;
    let one = Rational::one();
    let pw = |r: Rational| -> Rational { (0..nt).fold(Rational::one(), |acc, _| acc * &r) };
    let mut eps = rat(1, 1000);
    if q.is_positive() {
        eps = eps.min((&one - q) / (int(3000) * q * int(nt as i64)));
    }
    let floor4 = &one - pw(&one - q) / int(300);
    let ok = |r: &Rational| pw(&one - r * int(2)) >= rat(1, 5) && pw(&one - r) >= floor4;
    let mut den = BigInt::from(1_000_000_000u64);
    loop {
        let r = largest_fraction(&den, &ok);
        if r.is_positive() {
            return Ok(eps.min(r));
        }
        den *= 10;
    }
}

/// The three-atom distribution on which the attack `(1, 1), (1, 1/2)` beats
/// truthful bidding for the true type `(1, 1)` at `q`.
pub fn impossibility_witness(q: &Rational, n: usize) -> Result<ImpossibilityWitness> {
    let epsilon = impossibility_epsilon(q, n)?;
    let distribution = ValueDistribution::discrete(vec![
        (rat(1, 2), epsilon.clone()),
        (rat(3, 5), Rational::one() - &epsilon * int(2)),
        (int(1), epsilon.clone()),
    ])?;
    let scenario = Scenario::attack(Demand::One, int(1), int(1), rat(1, 2), n)?;
    let d = discrete_diff_by_k(&TypeModel::new(q.clone(), distribution.clone())?, &scenario)?;
    let diff = d.at(q);
    if !diff.is_negative() {
        return Err(Error::InvalidParameter(alloc::format!(
            "construction failed at q = {q}, n = {n}: diff = {diff}"
        )));
    }
    Ok(ImpossibilityWitness {
        q: q.clone(),
        n,
        epsilon,
        distribution,
        scenario,
        diff,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSearchReport {
    pub best: (Rational, Rational),
    /// Attack minus truth at `best`.
    pub best_diff: Rational,
    pub grid_step: Rational,
    /// Every grid point with a strictly positive gain.
    pub beneficial: Vec<((Rational, Rational), Rational)>,
}

/// Exact attack-minus-truth gain at every `(x, y)` on the grid with
/// `y <= x`; the maximum breaks ties toward larger `x`, then larger `y`.
pub fn best_attack_search(
    demand: Demand,
    theta: &Rational,
    dist: &ValueDistribution,
    n: usize,
    q: &Rational,
    grid_step: &Rational,
) -> Result<AttackSearchReport> {
    if !grid_step.is_positive() || grid_step > &rat(1, 4) {
        return Err(Error::InvalidParameter("grid step must lie in (0, 1/4]".into()));
    }
    let model = TypeModel::new(q.clone(), dist.clone())?;
    let gain = |x: &Rational, y: &Rational| -> Result<Rational> {
        let s = Scenario::new(
            demand,
            theta.clone(),
            Strategy::Attack {
                x: x.clone(),
                y: y.clone(),
            },
            n,
        )?;
        let d = match dist {
            ValueDistribution::Beta { .. } => expected_diff_poly_q(&s, dist)?,
            ValueDistribution::Discrete(_) => discrete_diff_by_k(&model, &s)?,
        };
        Ok(-d.at(q))
    };
    let steps = (Rational::one() / grid_step).floor().to_integer();
    let steps: u64 = steps.try_into().map_err(|_| Error::InvalidParameter("grid too fine".into()))?;
    let grid: Vec<Rational> = (0..=steps).map(|i| grid_step * int(i as i64)).collect();
    let mut best: Option<((Rational, Rational), Rational)> = None;
    let mut beneficial = Vec::new();
    for x in &grid {
        for y in grid.iter().take_while(|y| *y <= x) {
            let g = gain(x, y)?;
            if g.is_positive() {
                beneficial.push(((x.clone(), y.clone()), g.clone()));
            }
            // ascending scan: ties keep the later, larger point
            if best.as_ref().is_none_or(|(_, b)| &g >= b) {
                best = Some(((x.clone(), y.clone()), g));
            }
        }
    }
    let (best, best_diff) = best.expect("grid contains (0, 0)");
    Ok(AttackSearchReport {
        best,
        best_diff,
        grid_step: grid_step.clone(),
        beneficial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_uniform_n3_is_half() {
        let c = qstar_fixed_attack(&Scenario::split(3).unwrap(), &ValueDistribution::uniform()).unwrap();
        assert_eq!(c.q_star, QStar::Exact(rat(1, 2)));
        let (q, v) = c.falsification.unwrap();
        assert!(q < rat(1, 2) && v.is_negative());
    }

    #[test]
    fn threshold_of_examples() {
        let q = RatPoly::var(Var::Q);
        // (q - 1/3)^2 (q - 2/3): negative below 2/3 except at the double root
        let a = &q - &RatPoly::constant(rat(1, 3));
        let b = &q - &RatPoly::constant(rat(2, 3));
        let (t, roots, _) = threshold_of(&(&(&a * &a) * &b)).unwrap();
        assert_eq!(t, QStar::Exact(rat(2, 3)));
        assert_eq!(roots.len(), 2);
        // positive everywhere
        let (t, _, f) = threshold_of(&(&(&q * &q) + &RatPoly::one())).unwrap();
        assert_eq!(t, QStar::Exact(int(0)));
        assert!(f.is_none());
        // (q - 1/2)^2 touches zero but never goes negative
        let c = &q - &RatPoly::constant(rat(1, 2));
        assert_eq!(threshold_of(&(&c * &c)).unwrap().0, QStar::Exact(int(0)));
        // negative at 1
        assert_eq!(threshold_of(&(&RatPoly::constant(rat(1, 2)) - &q)).unwrap().0, QStar::Exact(int(1)));
        assert_eq!(threshold_of(&RatPoly::zero()).unwrap().0, QStar::Exact(int(0)));
    }

    #[test]
    fn irrational_threshold_is_narrow_interval() {
        // q^2 - 1/2
        let p = &RatPoly::var(Var::Q).pow(2) - &RatPoly::constant(rat(1, 2));
        match threshold_of(&p).unwrap().0 {
            QStar::Interval(i) => {
                assert!(i.width() <= root_width());
                assert!(crate::rational::to_f64(&i.lower) - core::f64::consts::FRAC_1_SQRT_2 < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn epsilon_bounds() {
        let e = impossibility_epsilon(&rat(9, 10), 3).unwrap();
        assert!(e.is_positive() && e <= rat(1, 1000));
        assert!(impossibility_epsilon(&int(1), 5).is_err());
        assert!(impossibility_epsilon(&rat(1, 2), 2).is_err());
        let e = impossibility_epsilon(&rat(99, 100), 6).unwrap();
        assert!(e.is_positive());
    }

    #[test]
    fn witness_small() {
        let w = impossibility_witness(&rat(1, 2), 4).unwrap();
        assert!(w.diff.is_negative());
    }
}
