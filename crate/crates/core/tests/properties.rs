//! Invariants over random inputs.

use proptest::prelude::*;

use fnvcg_core::distributions::{beta_pdf_cdf, ValueDistribution};
use fnvcg_core::expectation::{expected_diff_given_k, expected_diff_poly_q, reduced_utility, Scenario, TopStats};
use fnvcg_core::mechanism::{focal_utility, social_welfare, vcg_outcome, Bid, Demand};
use fnvcg_core::polynomial::{certify_nonnegative, isolate_real_roots, Box, PositivityVerdict, RatPoly, UniPoly, Var};
use fnvcg_core::rational::{int, parse_rational, rat, to_fraction_string, Rational};
use num_traits::{One, Zero};

const GRID: i64 = 1 << 10;

fn unit_value() -> impl Strategy<Value = Rational> {
    (0..=GRID).prop_map(|k| rat(k, GRID))
}

fn bid() -> impl Strategy<Value = Bid> {
    (1u8..=2, unit_value()).prop_map(|(g, v)| Bid::new(g, v).unwrap())
}

fn demand() -> impl Strategy<Value = Demand> {
    prop_oneof![Just(Demand::One), Just(Demand::Two)]
}

fn beta_dist() -> impl Strategy<Value = ValueDistribution> {
    (1u32..=3, 1u32..=3).prop_map(|(a, b)| ValueDistribution::beta(a, b).unwrap())
}

/// `(θ, x, y)` with `y <= x`.
fn attack_params() -> impl Strategy<Value = (Rational, Rational, Rational)> {
    (unit_value(), unit_value(), unit_value()).prop_map(|(t, a, b)| {
        if a >= b {
            (t, a, b)
        } else {
            (t, b, a)
        }
    })
}

/// Every feasible set has a distinct welfare, also with any one bid removed.
fn tie_free(bids: &[Bid]) -> bool {
    let feasible = |skip: Option<usize>| {
        let live: Vec<usize> = (0..bids.len()).filter(|i| Some(*i) != skip).collect();
        let mut w = vec![Rational::zero()];
        for &i in &live {
            w.push(bids[i].worth());
            for &j in &live {
                if j > i && bids[i].demand == Demand::One && bids[j].demand == Demand::One {
                    w.push(&bids[i].value + &bids[j].value);
                }
            }
        }
        w.sort();
        w.windows(2).all(|p| p[0] != p[1])
    };
    feasible(None) && (0..bids.len()).all(|i| feasible(Some(i)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn homogeneity(bids in prop::collection::vec(bid(), 1..7), c in 1i64..=GRID) {
        let c = rat(c, GRID);
        let scaled: Vec<Bid> = bids.iter().map(|b| Bid { demand: b.demand, value: &b.value * &c }).collect();
        let a = vcg_outcome(&bids);
        let b = vcg_outcome(&scaled);
        prop_assert_eq!(&a.winners, &b.winners);
        prop_assert_eq!(&a.welfare * &c, b.welfare);
        for (i, p) in &a.payments {
            prop_assert_eq!(p * &c, b.payments[i].clone());
        }
    }

    #[test]
    fn payments_bounded_by_worth(bids in prop::collection::vec(bid(), 1..7)) {
        let o = vcg_outcome(&bids);
        for (i, p) in &o.payments {
            prop_assert!(*p >= Rational::zero());
            prop_assert!(*p <= bids[*i].worth());
        }
        prop_assert_eq!(o.welfare.clone(), social_welfare(&bids));
        let total: Rational = o.winners.iter().map(|&i| bids[i].worth()).sum();
        prop_assert_eq!(total, o.welfare);
    }

    #[test]
    fn reduced_utility_matches_mechanism(
        d in demand(),
        (theta, x, y) in attack_params(),
        attack in any::<bool>(),
        adv in prop::collection::vec(bid(), 1..8),
    ) {
        let n = adv.len() + 1;
        let s = if attack {
            Scenario::attack(d, theta, x, y, n).unwrap()
        } else {
            Scenario::attack(d, theta, x, y, n).unwrap().truthful()
        };
        let report = s.report();
        let mut all = report.own_bids.clone();
        all.extend_from_slice(&adv);
        prop_assume!(tie_free(&all));
        let direct = focal_utility(&report, &adv);
        let reduced = reduced_utility(&s, &TopStats::from_profile(&adv)).unwrap();
        prop_assert_eq!(direct, reduced);
    }

    #[test]
    fn diff_by_k_endpoints(dist in beta_dist(), d in demand(), (theta, x, y) in attack_params(), n in 2usize..=5) {
        let s = Scenario::attack(d, theta, x, y, n).unwrap();
        let by_k = expected_diff_poly_q(&s, &dist).unwrap();
        prop_assert_eq!(by_k.at(&int(0)), by_k.per_k[0].clone());
        prop_assert_eq!(by_k.at(&int(1)), by_k.per_k[n - 1].clone());
        prop_assert!(by_k.q_poly.degree_in(Var::Q) as usize <= n - 1);
    }

    #[test]
    fn all_one_item_adversaries_never_reward_attacks(
        dist in beta_dist(), d in demand(), (theta, x, y) in attack_params(), n in 2usize..=9,
    ) {
        let s = Scenario::attack(d, theta, x, y, n).unwrap();
        prop_assert!(expected_diff_given_k(&s, &dist, n - 1).unwrap() >= Rational::zero());
    }

    #[test]
    fn isolated_roots_bracket_known_roots(
        roots in prop::collection::btree_set(0i64..=64, 1..6),
        irr in prop::collection::vec(2i64..=40, 0..3),
    ) {
        // rational roots k/64 plus roots of x^2 - c/41
        let mut p = UniPoly::new(vec![int(1)]);
        let mul = |p: &UniPoly, f: &[Rational]| {
            let mut c = vec![Rational::zero(); p.coeffs().len() + f.len() - 1];
            for (i, a) in p.coeffs().iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    c[i + j] += a * b;
                }
            }
            UniPoly::new(c)
        };
        for &r in &roots {
            p = mul(&p, &[-rat(r, 64), int(1)]);
        }
        let mut expected: Vec<f64> = roots.iter().map(|&r| r as f64 / 64.0).collect();
        for &c in &irr {
            p = mul(&p, &[-rat(c, 41), int(0), int(1)]);
            expected.push((c as f64 / 41.0).sqrt());
        }
        expected.sort_by(f64::total_cmp);
        expected.dedup();
        let found = isolate_real_roots(&p, &int(0), &int(1)).unwrap();
        prop_assert_eq!(found.len(), expected.len());
        for (r, e) in found.iter().zip(&expected) {
            prop_assert!(fnvcg_core::rational::to_f64(&r.lower) <= *e + 1e-12);
            prop_assert!(fnvcg_core::rational::to_f64(&r.upper) >= *e - 1e-12);
        }
    }

    #[test]
    fn bernstein_verdicts_are_sound(
        coeffs in prop::collection::vec(-8i64..=8, 6),
        shift in 0i64..=16,
        probes in prop::collection::vec((0i64..=32, 0i64..=32), 16),
    ) {
        let x = RatPoly::var(Var::X);
        let y = RatPoly::var(Var::Y);
        let mono = [RatPoly::one(), x.clone(), y.clone(), &x * &x, &x * &y, &y * &y];
        let mut p = RatPoly::constant(rat(shift, 4));
        for (c, m) in coeffs.iter().zip(&mono) {
            p += &m.scale(&rat(*c, 8));
        }
        let bx = Box::unit(&[Var::X, Var::Y]);
        match certify_nonnegative(&p, &bx, 8).unwrap() {
            PositivityVerdict::Certified => {
                for (a, b) in probes {
                    let v = p.evaluate(&[(Var::X, rat(a, 32)), (Var::Y, rat(b, 32))]).unwrap();
                    prop_assert!(v >= Rational::zero());
                }
            }
            PositivityVerdict::Counterexample { point, value } => {
                prop_assert!(value < Rational::zero());
                prop_assert!(bx.contains(&point));
                prop_assert_eq!(p.evaluate(&point).unwrap(), value);
            }
            PositivityVerdict::Inconclusive { .. } => {}
        }
    }

    #[test]
    fn polynomial_text_round_trip(
        terms in prop::collection::vec((-50i64..=50, 1i64..=12, 0u16..4, 0u16..4, 0u16..3), 0..8),
    ) {
        let mut p = RatPoly::zero();
        for (n, d, a, b, c) in terms {
            p += &RatPoly::monomial(rat(n, d), &[(Var::Q, a), (Var::X, b), (Var::W1, c)]);
        }
        let text = p.to_string();
        let back: RatPoly = text.parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn rational_text_round_trip(n in -1_000_000i64..=1_000_000, d in 1i64..=1_000_000) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rational(&to_fraction_string(&r)).unwrap(), r);
    }

    #[test]
    fn truncated_power_law_keeps_its_shape(alpha in 1u32..=6, m in 1i64..=GRID) {
        let m = rat(m, GRID);
        let (_, cdf) = beta_pdf_cdf(alpha, 1, Var::X).unwrap();
        let at_m = cdf.evaluate(&[(Var::X, m.clone())]).unwrap();
        let rescaled = cdf.affine_substitute(Var::X, &Rational::zero(), &m).scale(&(Rational::one() / at_m));
        prop_assert_eq!(rescaled, cdf);
    }
}
