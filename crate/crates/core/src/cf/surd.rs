//! Partial quotients of a quadratic irrational `(a + b*sqrt(d)) / c`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// State `(P + sqrt(D)) / Q` with `Q | D - P^2`, always holding the next
/// complete quotient.
pub(super) struct SurdStream {
    p: BigInt,
    q: BigInt,
    d: BigInt,
    root: BigInt,
}

/// Sign of `u + sqrt(d)` for a non-square `d > 0`.
fn sign_plus_root(u: &BigInt, d: &BigInt) -> Sign {
    if !u.is_negative() || d > &(u * u) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

impl SurdStream {
    pub(super) fn new(a: &BigInt, b: &BigInt, c: &BigInt, d: &BigUint) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::domain("surd radicand must be positive"));
        }
        let root = d.sqrt();
        if &root * &root == *d {
            return Err(Error::domain(format!(
                "radicand {d} is a perfect square; use a rational source"
            )));
        }
        if b.is_zero() || c.is_zero() {
            return Err(Error::domain("surd requires b != 0 and c != 0"));
        }
        // (a + b sqrt d)/c = (P0 + sqrt D)/Q0 with D = b^2 d.
        let big_d = BigInt::from_biguint(Sign::Plus, d.clone()) * b * b;
        let (mut p, mut q) = if b.is_positive() {
            (a.clone(), c.clone())
        } else {
            (-a, -c)
        };

        let positive = sign_plus_root(&p, &big_d) == q.sign();
        let below_one = sign_plus_root(&(&p - &q), &big_d) != q.sign();
        if !(positive && below_one) {
            return Err(Error::domain(format!(
                "({a} + {b}*sqrt({d}))/{c} is not in (0, 1)"
            )));
        }

        let mut big_d = big_d;
        if !(&big_d - &p * &p).is_multiple_of(&q) {
            let q_abs = q.abs();
            p *= &q_abs;
            big_d = big_d * &q_abs * &q_abs;
            q *= &q_abs;
        }
        // Move to the reciprocal 1/x, whose integer part is a_1.
        let q_next = (&big_d - &p * &p) / &q;
        let root = big_d.sqrt();
        Ok(SurdStream {
            p: -p,
            q: q_next,
            d: big_d,
            root,
        })
    }

    pub(super) fn next_quotient(&mut self) -> BigUint {
        let numerator = if self.q.is_positive() {
            &self.p + &self.root
        } else {
            &self.p + &self.root + 1
        };
        let a = numerator.div_floor(&self.q);
        let p_next = &a * &self.q - &self.p;
        let q_next = (&self.d - &p_next * &p_next) / &self.q;
        self.p = p_next;
        self.q = q_next;
        super::to_biguint(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quotients(a: i64, b: i64, c: i64, d: u64, n: usize) -> Vec<BigUint> {
        let mut s = SurdStream::new(&a.into(), &b.into(), &c.into(), &d.into()).unwrap();
        (0..n).map(|_| s.next_quotient()).collect()
    }

    fn nat(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn classical_expansions() {
        // sqrt(7) - 2 = [1, 1, 1, 4, ...]
        assert_eq!(quotients(-2, 1, 1, 7, 8), nat(&[1, 1, 1, 4, 1, 1, 1, 4]));
        // (3 - sqrt 3)/2 = 0.6339... = [1, 1, 1, 2, 1, 2, ...]
        assert_eq!(quotients(3, -1, 2, 3, 6), nat(&[1, 1, 1, 2, 1, 2]));
        // 2 - sqrt 2 = 0.5857... = [1, 1, 2, 2, ...], also written with a negative denominator
        assert_eq!(quotients(2, -1, 1, 2, 5), nat(&[1, 1, 2, 2, 2]));
        assert_eq!(quotients(-2, 1, -1, 2, 5), nat(&[1, 1, 2, 2, 2]));
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |a: i64, b: i64, c: i64, d: u64| {
            SurdStream::new(&a.into(), &b.into(), &c.into(), &d.into()).is_err()
        };
        assert!(bad(0, 1, 1, 4)); // square
        assert!(bad(0, 1, 3, 1)); // square (d = 1)
        assert!(bad(0, 1, 1, 3)); // sqrt 3 > 1
        assert!(bad(0, -1, 1, 3)); // negative
        assert!(bad(0, 1, 0, 3));
    }
}
