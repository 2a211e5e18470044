use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ContinuedFraction, Termination};
use crate::error::Result;
use crate::numeric::{ln_biguint, Bracket};

/// Stop refining the tail once consecutive tail denominators multiply past
/// this many bits; the tail bracket is then narrower than 2^-80.
const TAIL_BITS: u64 = 80;

/// One row of the approximation table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub n: usize,
    /// The partial quotient `a_n`.
    pub a: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    /// `q_{n+1}`; absent only for the last row of a finite expansion.
    pub q_next: Option<BigUint>,
    /// `||q_n alpha||`, the distance from `q_n alpha` to the nearest integer.
    pub err: Bracket,
    /// `err * q_{n+1}`.
    pub w: Option<Bracket>,
}

#[derive(Clone, Debug)]
pub struct ConvergentTable {
    pub rows: Vec<Convergent>,
    /// Set when the coefficient stream ran out before the requested depth.
    pub truncated: bool,
}

impl ConvergentTable {
    pub fn row(&self, n: usize) -> Option<&Convergent> {
        n.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    pub fn denominators(&self) -> impl Iterator<Item = &BigUint> {
        self.rows.iter().map(|r| &r.q)
    }
}

/// Natural logarithm of `q_n`.
pub fn log_q(conv: &Convergent) -> f64 {
    ln_biguint(&conv.q)
}

fn int(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// Unreduced fraction; gcd reduction of multi-megabit integers is too slow.
fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new_raw(int(num), int(den))
}

/// Two fractions `(P, Q)` enclosing a tail `[0; a_k, a_{k+1}, ...]`.
type TailEnds = ((BigUint, BigUint), (BigUint, BigUint));

/// `||q_n alpha|| = Q / (q_{n+1} Q + q_n P)` at each tail endpoint `P/Q`,
/// and `w_n = q_{n+1} ||q_n alpha||`.
fn error_brackets(q: &BigUint, q_next: &BigUint, tail: &TailEnds) -> (Bracket, Bracket) {
    let at = |(tp, tq): &(BigUint, BigUint)| {
        let den = q_next * tq + q * tp;
        (ratio(tq, &den), ratio(&(q_next * tq), &den))
    };
    let (err_a, w_a) = at(&tail.0);
    let (err_b, w_b) = at(&tail.1);
    (Bracket::new(err_a, err_b), Bracket::new(w_a, w_b))
}

/// Endpoints enclosing the tail `[0; a_start, a_{start+1}, ...]`.
fn tail_bracket(cf: &ContinuedFraction, start: usize) -> Result<TailEnds> {
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    let mut index = start;
    loop {
        let Some(b) = cf.coefficient(index)? else {
            return Ok(match cf.termination() {
                Some(Termination::Exact) => ((p.clone(), q.clone()), (p, q)),
                // Unknown complete quotient in [1, inf).
                _ => {
                    let mediant = (&p + &p_prev, &q + &q_prev);
                    ((p, q), mediant)
                }
            });
        };
        let p_new = &b * &p + &p_prev;
        let q_new = &b * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_new);
        q_prev = std::mem::replace(&mut q, q_new);
        index += 1;
        // Two steps keep both ends positive, so they lie strictly on either side.
        if index >= start + 2 && (&q * &q_prev).bits() > TAIL_BITS {
            return Ok(((p_prev, q_prev), (p, q)));
        }
    }
}

/// Denominators `q_0 = 1, q_1, ..., q_{n_max}`; shorter when the expansion ends.
pub fn continuants(cf: &ContinuedFraction, n_max: usize) -> Result<Vec<BigUint>> {
    let mut q = vec![BigUint::one()];
    let mut q_prev = BigUint::zero();
    for n in 1..=n_max {
        let Some(a) = cf.coefficient(n)? else { break };
        let q_new = &a * &q[n - 1] + &q_prev;
        q_prev = q[n - 1].clone();
        q.push(q_new);
    }
    Ok(q)
}

/// Convergents `p_n/q_n` for `n = 1..=n_max` with certified `||q_n alpha||`
/// and `w_n`. A stream that ends early yields a shorter table flagged
/// `truncated`; for a finite expansion the last row has `err = 0`.
pub fn convergents_up_to(cf: &ContinuedFraction, n_max: usize) -> Result<ConvergentTable> {
    assert!(n_max >= 1, "n_max must be at least 1");
    let mut rows = Vec::with_capacity(n_max);
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    let mut next_a = cf.coefficient(1)?;
    let mut truncated = false;
    for n in 1..=n_max {
        let Some(a) = next_a.take() else {
            truncated = true;
            break;
        };
        let p_new = &a * &p + &p_prev;
        let q_new = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_new);
        q_prev = std::mem::replace(&mut q, q_new);

        next_a = cf.coefficient(n + 1)?;
        let row = match &next_a {
            Some(a_next) => {
                let q_next = a_next * &q + &q_prev;
                let (err, w) = error_brackets(&q, &q_next, &tail_bracket(cf, n + 2)?);
                Convergent {
                    n,
                    a,
                    p: p.clone(),
                    q: q.clone(),
                    q_next: Some(q_next),
                    err,
                    w: Some(w),
                }
            }
            None if cf.termination() == Some(Termination::Exact) => Convergent {
                n,
                a,
                p: p.clone(),
                q: q.clone(),
                q_next: None,
                err: Bracket::exact(BigRational::zero()),
                w: None,
            },
            None => {
                truncated = true;
                break;
            }
        };
        rows.push(row);
    }
    Ok(ConvergentTable { rows, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn golden_denominators_are_fibonacci() {
        let table = convergents_up_to(&ContinuedFraction::golden(), 4).unwrap();
        let q: Vec<u64> = table.denominators().map(|q| q.to_u64().unwrap()).collect();
        assert_eq!(q, [1, 2, 3, 5]);
        assert!(!table.truncated);
    }

    #[test]
    fn golden_first_w() {
        // w_1 = (1 - (sqrt5 - 1)/2) * 2 = 3 - sqrt 5
        let table = convergents_up_to(&ContinuedFraction::golden(), 1).unwrap();
        let w = table.rows[0].w.as_ref().unwrap();
        assert!((w.to_f64() - (3.0 - 5f64.sqrt())).abs() < 1e-15);
        assert!(w.width() < BigRational::new(1.into(), BigInt::one() << 64usize));
    }

    #[test]
    fn rational_table_is_flagged_and_exact() {
        let cf = ContinuedFraction::from_rational(7, 10).unwrap();
        let table = convergents_up_to(&cf, 10).unwrap();
        assert!(table.truncated);
        assert_eq!(table.rows.len(), 3);
        let last = table.rows.last().unwrap();
        assert_eq!((last.p.to_u64(), last.q.to_u64()), (Some(7), Some(10)));
        assert!(last.err.lo.is_zero() && last.err.is_exact());
        // 7/10 - 2/3 = 1/30 -> ||3 alpha|| = 1/10 exactly
        let second = &table.rows[1];
        assert!(second.err.is_exact());
        assert_eq!(second.err.lo, BigRational::new(1.into(), 10.into()));
    }

    #[test]
    fn truncated_list_brackets_widen_toward_the_end() {
        let cf = ContinuedFraction::periodic(&[1, 2, 3, 4, 5], &[]).unwrap();
        let table = convergents_up_to(&cf, 10).unwrap();
        assert!(table.truncated);
        assert_eq!(table.rows.len(), 4);
        let first = table.rows[0].w.as_ref().unwrap().width();
        let last = table.rows[3].w.as_ref().unwrap().width();
        assert!(last > first);
    }
}
