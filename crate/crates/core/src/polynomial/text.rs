//! Canonical text form: `-1/2 + 7/6 * q - 1/3 * q^2`.

use alloc::format;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Signed};

use super::{RatPoly, Var, NVARS};
use crate::rational::{parse_rational, to_fraction_string, Rational};
use crate::Error;

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            let shown = if i == 0 {
                to_fraction_string(c)
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
                to_fraction_string(&c.abs())
            };
            f.write_str(&shown)?;
            if e.iter().any(|&k| k > 0) {
                f.write_str(" *")?;
                for v in Var::ALL {
                    match e[v.index()] {
                        0 => {}
                        1 => write!(f, " {v}")?,
                        k => write!(f, " {v}^{k}")?,
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for RatPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = |m: &str| Error::Parse(format!("{m} in polynomial {s:?}"));
        let mut out = RatPoly::zero();
        let mut toks = s.split_whitespace().peekable();
        let mut first = true;
        while toks.peek().is_some() {
            let mut negate = false;
            if !first {
                match toks.next() {
                    Some("+") => {}
                    Some("-") => negate = true,
                    _ => return Err(bad("expected + or -")),
                }
            }
            first = false;
            let mut coeff = Rational::one();
            let mut exps = [0u16; NVARS];
            let tok = toks.next().ok_or_else(|| bad("dangling sign"))?;
            let mut pending_factor = None;
            match parse_rational(tok) {
                Ok(c) => {
                    coeff = c;
                    if toks.peek() == Some(&"*") {
                        toks.next();
                        pending_factor = Some(toks.next().ok_or_else(|| bad("dangling *"))?);
                    }
                }
                Err(_) => pending_factor = Some(tok),
            }
            if let Some(tok) = pending_factor {
                read_factor(tok, &mut exps).ok_or_else(|| bad("bad factor"))?;
                while let Some(&t) = toks.peek() {
                    if t == "+" || t == "-" {
                        break;
                    }
                    toks.next();
                    read_factor(t, &mut exps).ok_or_else(|| bad("bad factor"))?;
                }
            }
            if negate {
                coeff = -coeff;
            }
            out.add_term(exps, coeff);
        }
        if first {
            return Err(bad("empty input"));
        }
        Ok(out)
    }
}

fn read_factor(tok: &str, exps: &mut [u16; NVARS]) -> Option<()> {
    let (name, k) = match tok.split_once('^') {
        Some((n, k)) => (n, k.parse::<u16>().ok()?),
        None => (tok, 1),
    };
    let v = Var::from_name(name)?;
    exps[v.index()] = exps[v.index()].checked_add(k)?;
    Some(())
}
