//! Closed form of the per-k difference for the uniform split attack.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::{binomial_q, int, Rational};
use crate::{Error, Result};

fn pow2(e: usize) -> Rational {
    Rational::from_integer(BigInt::one() << e)
}

/// `Σ_{i=0}^{m} C(m, i) / (s + i)`.
fn binomial_harmonic(m: usize, s: usize) -> Rational {
    (0..=m).fold(Rational::zero(), |acc, i| {
        acc + binomial_q(m as u64, i as u64) / int((s + i) as i64)
    })
}

/// `Δ_k` for true type (2, 1) splitting into (1, 1), (1, 1) against `ñ`
/// uniform adversaries of which `k` demand one item.
pub fn uniform_split_closed_form(n_tilde: usize, k: usize) -> Result<Rational> {
    if n_tilde < 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "n_tilde = {n_tilde}, need at least 2"
        )));
    }
    if k > n_tilde {
        return Err(Error::KOutOfRange { k, n_tilde });
    }
    let nt = int(n_tilde as i64);
    let np1 = int(n_tilde as i64 + 1);
    let half_pow = pow2(n_tilde - 1);
    Ok(match k {
        0 => Rational::one() / (&np1 * &half_pow) - int(2) / &np1,
        1 => {
            int(8) / (&nt * &np1) - int(2) / &nt - int(3) / (&nt * &np1 * &half_pow)
        }
        k if k == n_tilde => Rational::one() / np1,
        k => {
            let m = n_tilde - k;
            let kq = int(k as i64);
            let scale = pow2(m + 1);
            let a = int(2) * &kq / &scale * binomial_harmonic(m + 1, k);
            let b = &kq * int(k as i64 - 1) / (&np1 * &scale) * binomial_harmonic(m + 1, k - 1);
            int(2) / int(m as i64 + 1) * (a - b - Rational::one())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn small_cases() {
        assert_eq!(uniform_split_closed_form(2, 2).unwrap(), rat(1, 3));
        assert_eq!(uniform_split_closed_form(2, 0).unwrap(), rat(-1, 2));
        assert_eq!(uniform_split_closed_form(2, 1).unwrap(), rat(1, 12));
        let sum: Rational = (0..=2)
            .map(|k| binomial_q(2, k as u64) * uniform_split_closed_form(2, k).unwrap())
            .sum();
        assert!(sum.is_zero());
        let f3: alloc::vec::Vec<Rational> = (0..=3)
            .map(|k| uniform_split_closed_form(3, k).unwrap())
            .collect();
        assert_eq!(f3, [rat(-7, 16), rat(-1, 16), rat(1, 8), rat(1, 4)]);
        let f4: alloc::vec::Vec<Rational> = (0..=4)
            .map(|k| uniform_split_closed_form(4, k).unwrap())
            .collect();
        assert_eq!(f4, [rat(-3, 8), rat(-19, 160), rat(1, 40), rat(1, 8), rat(1, 5)]);
    }

    #[test]
    fn out_of_range() {
        assert_eq!(
            uniform_split_closed_form(3, 4),
            Err(Error::KOutOfRange { k: 4, n_tilde: 3 })
        );
        assert!(uniform_split_closed_form(1, 0).is_err());
    }
}
