//! Exact continued-fraction arithmetic for rotation numbers in (0, 1).
//!
//! A [`ContinuedFraction`] is a lazily extended stream of partial quotients
//! `a_1, a_2, ...` with `alpha = 1/(a_1 + 1/(a_2 + ...))`, produced from one of
//! a handful of sources. Convergents, approximation errors and fixed-point
//! realizations of `alpha` are computed from the stream with exact big-integer
//! arithmetic.

mod angle;
mod convergent;
mod record;
mod surd;

use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use angle::{angle_value, FixedPointAngle};
pub use convergent::{continuants, convergents_up_to, log_q, Convergent, ConvergentTable};
pub use record::{AlphaSpec, CfRecord};

use crate::error::{Error, Result};
use surd::SurdStream;

/// Largest coefficient (in bits) a generator rule may produce.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 26;

/// Where the partial quotients come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// `p/q` in lowest terms, `0 < p < q`.
    Rational { p: BigUint, q: BigUint },
    /// `(a + b*sqrt(d)) / c`.
    Surd {
        a: BigInt,
        b: BigInt,
        c: BigInt,
        d: BigUint,
    },
    /// Explicit list: `prefix` followed by `period` repeated forever. An empty
    /// period means only the prefix is known (a truncated irrational).
    Coefficients {
        prefix: Vec<BigUint>,
        period: Vec<BigUint>,
    },
    /// `a_n = c^ceil(b^n)`.
    Luczak { b: BigRational, c: BigUint },
}

/// How a finite coefficient stream ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The expansion is complete: alpha is the last convergent.
    Exact,
    /// Only a prefix of an infinite expansion is known.
    Truncated,
}

enum Generator {
    Euclid { num: BigUint, den: BigUint },
    Surd(SurdStream),
    Periodic,
    Luczak { next_index: usize, budget: u64 },
}

struct Stream {
    coefficients: Vec<BigUint>,
    generator: Generator,
    end: Option<Termination>,
}

struct Inner {
    source: Source,
    stream: RwLock<Stream>,
}

/// A rotation number given by its partial quotients. Cheap to clone; clones
/// share the materialized prefix.
#[derive(Clone)]
pub struct ContinuedFraction {
    inner: Arc<Inner>,
}

impl fmt::Debug for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stream = self.inner.stream.read().expect("poisoned");
        f.debug_struct("ContinuedFraction")
            .field("source", &self.inner.source)
            .field("materialized", &stream.coefficients.len())
            .finish()
    }
}

impl ContinuedFraction {
    fn with_generator(source: Source, generator: Generator) -> Self {
        ContinuedFraction {
            inner: Arc::new(Inner {
                source,
                stream: RwLock::new(Stream {
                    coefficients: Vec::new(),
                    generator,
                    end: None,
                }),
            }),
        }
    }

    /// Finite expansion of `p/q` by the Euclidean algorithm.
    pub fn from_rational(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let (p, q) = (p.into(), q.into());
        if !p.is_positive() || !q.is_positive() || p >= q {
            return Err(Error::domain(format!(
                "rational p/q requires 0 < p < q, got {p}/{q}"
            )));
        }
        let g = p.gcd(&q);
        let p = (p / &g).into_parts().1;
        let q = (q / &g).into_parts().1;
        let generator = Generator::Euclid {
            num: p.clone(),
            den: q.clone(),
        };
        Ok(Self::with_generator(Source::Rational { p, q }, generator))
    }

    /// Eventually periodic expansion of `(a + b*sqrt(d)) / c`.
    pub fn from_quadratic(
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        c: impl Into<BigInt>,
        d: impl Into<BigUint>,
    ) -> Result<Self> {
        let (a, b, c, d) = (a.into(), b.into(), c.into(), d.into());
        let stream = SurdStream::new(&a, &b, &c, &d)?;
        Ok(Self::with_generator(
            Source::Surd { a, b, c, d },
            Generator::Surd(stream),
        ))
    }

    /// The golden mean `(sqrt(5) - 1) / 2 = [1, 1, 1, ...]`.
    pub fn golden() -> Self {
        Self::from_quadratic(-1, 1, 2, 5u32).expect("valid surd")
    }

    /// `sqrt(2) - 1 = [2, 2, 2, ...]`.
    pub fn silver() -> Self {
        Self::from_quadratic(-1, 1, 1, 2u32).expect("valid surd")
    }

    /// Explicit coefficients: `prefix` then `period` repeated. With an empty
    /// period the stream is a truncated irrational and ends after the prefix.
    pub fn from_coefficients(prefix: Vec<BigUint>, period: Vec<BigUint>) -> Result<Self> {
        if prefix.is_empty() && period.is_empty() {
            return Err(Error::domain("coefficient list is empty"));
        }
        if let Some(bad) = prefix.iter().chain(&period).find(|a| a.is_zero()) {
            return Err(Error::domain(format!(
                "partial quotients must be >= 1, got {bad}"
            )));
        }
        Ok(Self::with_generator(
            Source::Coefficients { prefix, period },
            Generator::Periodic,
        ))
    }

    /// Convenience for small periodic patterns such as `[1, 2, 3, 1, 2, 3, ...]`.
    pub fn periodic(prefix: &[u64], period: &[u64]) -> Result<Self> {
        let conv = |v: &[u64]| v.iter().map(|&a| BigUint::from(a)).collect();
        Self::from_coefficients(conv(prefix), conv(period))
    }

    pub fn source(&self) -> &Source {
        &self.inner.source
    }

    /// True if the expansion is known to be finite and complete.
    pub fn is_rational(&self) -> bool {
        matches!(self.inner.source, Source::Rational { .. })
    }

    /// Materialize at least `count` coefficients if the stream has that many.
    /// Returns the number available (which is smaller only for finite streams).
    pub fn ensure(&self, count: usize) -> Result<usize> {
        {
            let stream = self.inner.stream.read().expect("poisoned");
            if stream.coefficients.len() >= count || stream.end.is_some() {
                return Ok(stream.coefficients.len().min(count));
            }
        }
        let mut stream = self.inner.stream.write().expect("poisoned");
        while stream.coefficients.len() < count && stream.end.is_none() {
            let index = stream.coefficients.len() + 1;
            match next_coefficient(&self.inner.source, &mut stream.generator, index)? {
                Some(a) => stream.coefficients.push(a),
                None => {
                    stream.end = Some(match self.inner.source {
                        Source::Rational { .. } => Termination::Exact,
                        _ => Termination::Truncated,
                    })
                }
            }
        }
        Ok(stream.coefficients.len().min(count))
    }

    /// `a_n` (1-based), or `None` past the end of a finite stream.
    pub fn coefficient(&self, n: usize) -> Result<Option<BigUint>> {
        assert!(n >= 1, "partial quotients are indexed from 1");
        self.ensure(n)?;
        let stream = self.inner.stream.read().expect("poisoned");
        Ok(stream.coefficients.get(n - 1).cloned())
    }

    /// The first `count` coefficients, or all of them for a shorter stream.
    pub fn prefix(&self, count: usize) -> Result<Vec<BigUint>> {
        let available = self.ensure(count)?;
        let stream = self.inner.stream.read().expect("poisoned");
        Ok(stream.coefficients[..available].to_vec())
    }

    /// How the stream ends, if it has been observed to end.
    pub fn termination(&self) -> Option<Termination> {
        self.inner.stream.read().expect("poisoned").end
    }

    /// Number of coefficients materialized so far.
    pub fn materialized(&self) -> usize {
        self.inner.stream.read().expect("poisoned").coefficients.len()
    }
}

fn next_coefficient(
    source: &Source,
    generator: &mut Generator,
    index: usize,
) -> Result<Option<BigUint>> {
    match generator {
        Generator::Euclid { num, den } => {
            if num.is_zero() {
                return Ok(None);
            }
            // alpha = num/den; a = floor(den/num), then alpha' = (den mod num)/num.
            let (a, r) = den.div_rem(num);
            *den = std::mem::replace(num, r);
            Ok(Some(a))
        }
        Generator::Surd(stream) => Ok(Some(stream.next_quotient())),
        Generator::Periodic => {
            let Source::Coefficients { prefix, period } = source else {
                unreachable!("periodic generator without coefficient source")
            };
            let i = index - 1;
            if i < prefix.len() {
                Ok(Some(prefix[i].clone()))
            } else if period.is_empty() {
                Ok(None)
            } else {
                Ok(Some(period[(i - prefix.len()) % period.len()].clone()))
            }
        }
        Generator::Luczak { next_index, budget } => {
            let Source::Luczak { b, c } = source else {
                unreachable!("luczak generator without luczak source")
            };
            debug_assert_eq!(*next_index, index);
            *next_index += 1;
            luczak_term(b, c, index, *budget).map(Some)
        }
    }
}

/// `c^ceil(b^n)` with a bit budget on the result.
fn luczak_term(b: &BigRational, c: &BigUint, n: usize, budget: u64) -> Result<BigUint> {
    let power = num_traits::pow(b.clone(), n);
    let exponent = power.ceil().to_integer();
    let too_big = |bits| Error::Resource {
        index: n,
        bits,
        budget,
    };
    let exponent = exponent.to_u64().ok_or_else(|| too_big(u64::MAX))?;
    let bits = (exponent as f64 * crate::numeric::ln_biguint(c) / std::f64::consts::LN_2).floor() as u64 + 1;
    if bits > budget {
        return Err(too_big(bits));
    }
    Ok(num_traits::pow(c.clone(), exponent as usize))
}

/// Rotation numbers with `a_n = c^ceil(b^n)`: the extravagance-0 family.
/// The first `count` coefficients are materialized eagerly so that budget
/// violations surface here; the stream extends lazily beyond them.
pub fn luczak_coefficients(b: &BigRational, c: &BigUint, count: usize) -> Result<ContinuedFraction> {
    luczak_with_budget(b, c, count, DEFAULT_BIT_BUDGET)
}

pub fn luczak_with_budget(
    b: &BigRational,
    c: &BigUint,
    count: usize,
    budget: u64,
) -> Result<ContinuedFraction> {
    if b <= &BigRational::one() {
        return Err(Error::domain(format!("Luczak base b must exceed 1, got {b}")));
    }
    if c <= &BigUint::one() {
        return Err(Error::domain(format!("Luczak base c must exceed 1, got {c}")));
    }
    if count == 0 {
        return Err(Error::domain("Luczak count must be at least 1"));
    }
    let cf = ContinuedFraction::with_generator(
        Source::Luczak {
            b: b.clone(),
            c: c.clone(),
        },
        Generator::Luczak {
            next_index: 1,
            budget,
        },
    );
    cf.ensure(count)?;
    Ok(cf)
}

/// Convenience wrapper taking `b = num/den` and `c` as machine integers.
pub fn luczak(b_num: u64, b_den: u64, c: u64, count: usize) -> Result<ContinuedFraction> {
    if b_den == 0 {
        return Err(Error::domain("Luczak base b has zero denominator"));
    }
    let b = BigRational::new(BigInt::from(b_num), BigInt::from(b_den));
    luczak_coefficients(&b, &BigUint::from(c), count)
}

pub(crate) fn to_biguint(x: BigInt) -> BigUint {
    match x.into_parts() {
        (Sign::Minus, _) => panic!("negative value where a natural number was expected"),
        (_, m) => m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cf: &ContinuedFraction, count: usize) -> Vec<u64> {
        cf.prefix(count)
            .unwrap()
            .iter()
            .map(|a| a.to_u64().unwrap())
            .collect()
    }

    #[test]
    fn rational_expansions() {
        assert_eq!(small(&ContinuedFraction::from_rational(7, 10).unwrap(), 10), [1, 2, 3]);
        assert_eq!(small(&ContinuedFraction::from_rational(1, 2).unwrap(), 10), [2]);
        assert_eq!(small(&ContinuedFraction::from_rational(2, 4).unwrap(), 10), [2]);
        let cf = ContinuedFraction::from_rational(7, 10).unwrap();
        cf.ensure(5).unwrap();
        assert_eq!(cf.termination(), Some(Termination::Exact));
    }

    #[test]
    fn rational_domain_errors() {
        for (p, q) in [(0, 3), (3, 3), (4, 3), (-1, 3), (1, 0), (1, -3)] {
            assert!(matches!(
                ContinuedFraction::from_rational(p, q),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn surd_expansions() {
        assert_eq!(small(&ContinuedFraction::golden(), 12), [1; 12]);
        assert_eq!(small(&ContinuedFraction::silver(), 12), [2; 12]);
        // sqrt(3) is not in (0, 1)
        assert!(matches!(
            ContinuedFraction::from_quadratic(0, 1, 3, 1u32),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn periodic_and_truncated_lists() {
        let cf = ContinuedFraction::periodic(&[1, 1], &[10, 1]).unwrap();
        assert_eq!(small(&cf, 7), [1, 1, 10, 1, 10, 1, 10]);
        let cf = ContinuedFraction::periodic(&[3, 4], &[]).unwrap();
        assert_eq!(small(&cf, 5), [3, 4]);
        assert_eq!(cf.termination(), Some(Termination::Truncated));
        assert!(ContinuedFraction::periodic(&[1, 0], &[]).is_err());
    }

    #[test]
    fn luczak_family() {
        let cf = luczak(2, 1, 2, 3).unwrap();
        assert_eq!(small(&cf, 3), [4, 16, 256]);
        let cf = luczak(2, 1, 3, 2).unwrap();
        assert_eq!(small(&cf, 2), [9, 81]);
        assert!(matches!(luczak(1, 1, 2, 1), Err(Error::Domain(_))));
        assert!(matches!(luczak(2, 1, 1, 1), Err(Error::Domain(_))));
        // b = 3/2: exponents ceil(1.5), ceil(2.25), ceil(3.375) = 2, 3, 4
        let cf = luczak(3, 2, 2, 3).unwrap();
        assert_eq!(small(&cf, 3), [4, 8, 16]);
    }

    #[test]
    fn luczak_budget_names_offending_index() {
        let b = BigRational::from_integer(BigInt::from(2));
        let err = luczak_with_budget(&b, &BigUint::from(2u32), 12, 1 << 10).unwrap_err();
        match err {
            Error::Resource { index, bits, .. } => {
                assert_eq!(index, 10);
                assert_eq!(bits, 1025);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clones_share_the_stream() {
        let cf = ContinuedFraction::golden();
        let other = cf.clone();
        cf.ensure(20).unwrap();
        assert_eq!(other.materialized(), 20);
    }
}
