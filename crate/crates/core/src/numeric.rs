//! Small numeric helpers shared across modules: exact rational brackets,
//! logarithms of big integers, compensated summation and output formatting.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A closed interval `[lo, hi]` with exact rational endpoints that is
/// guaranteed to contain some real quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bracket {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Bracket {
    pub fn exact(value: BigRational) -> Self {
        Bracket {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn new(a: BigRational, b: BigRational) -> Self {
        if a <= b {
            Bracket { lo: a, hi: b }
        } else {
            Bracket { lo: b, hi: a }
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    /// Nearest `f64` to the midpoint. Underflows to zero for tiny values.
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.midpoint())
    }

    /// True iff every point of the bracket lies strictly inside `(a, b)`.
    pub fn strictly_within(&self, a: &BigRational, b: &BigRational) -> bool {
        &self.lo > a && &self.hi < b
    }

    pub fn scale(&self, factor: &BigRational) -> Bracket {
        Bracket::new(&self.lo * factor, &self.hi * factor)
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_ratio_sci(&self.midpoint(), 17))
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let (log2, _) = ratio_log2_floor(r);
    if log2 < -1070 {
        return 0.0;
    }
    r.to_f64().unwrap_or(f64::NAN)
}

/// `floor(log2 |r|)` computed from bit lengths, plus the sign.
fn ratio_log2_floor(r: &BigRational) -> (i64, Sign) {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let mut e = num.bits() as i64 - den.bits() as i64;
    // Adjust so that 2^e <= |r| < 2^(e+1).
    let (n, d) = if e >= 0 {
        (num.clone(), den << (e as usize))
    } else {
        (num << ((-e) as usize), den.clone())
    };
    if n < d {
        e -= 1;
    }
    (e, r.numer().sign())
}

/// Scientific notation with `digits` significant digits, computed exactly
/// from the rational (works far outside the `f64` exponent range).
pub fn format_ratio_sci(r: &BigRational, digits: usize) -> String {
    if r.is_zero() {
        return format!("{:.*}e0", digits.saturating_sub(1), 0.0);
    }
    let negative = r.is_negative();
    let r = r.abs();
    let (log2, _) = ratio_log2_floor(&r);
    let mut exp10 = (log2 as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let ten = BigInt::from(10);
    loop {
        // scaled = r * 10^(digits-1-exp10), want it in [10^(digits-1), 10^digits)
        let shift = digits as i64 - 1 - exp10;
        let scaled = if shift >= 0 {
            &r * BigRational::from_integer(num_traits::pow(ten.clone(), shift as usize))
        } else {
            &r / BigRational::from_integer(num_traits::pow(ten.clone(), (-shift) as usize))
        };
        let two = BigInt::from(2);
        let rounded: BigInt =
            (scaled.numer() * &two + scaled.denom()).div_floor(&(scaled.denom() * &two));
        let lower = num_traits::pow(ten.clone(), digits - 1);
        let upper = &lower * &ten;
        if rounded < lower {
            exp10 -= 1;
            continue;
        }
        if rounded >= upper {
            exp10 += 1;
            continue;
        }
        let s = rounded.to_string();
        let (head, tail) = s.split_at(1);
        let sign = if negative { "-" } else { "" };
        return if tail.is_empty() {
            format!("{sign}{head}e{exp10}")
        } else {
            format!("{sign}{head}.{tail}e{exp10}")
        };
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Natural logarithm of a big integer from its bit length and leading 64
/// bits; relative error well below 2^-50 for every `q >= 2`.
pub fn ln_biguint(q: &BigUint) -> f64 {
    assert!(!q.is_zero(), "logarithm of zero");
    let bits = q.bits();
    if bits <= 64 {
        return (q.to_u64().expect("fits") as f64).ln();
    }
    let shift = bits - 64;
    let top = (q >> shift).to_u64().expect("64 leading bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln(q) * 2^frac_bits`, rounded down, with absolute error at most two
/// units in the last place. Pure integer arithmetic (atanh series).
pub fn ln_fixed(q: &BigUint, frac_bits: u32) -> BigInt {
    assert!(!q.is_zero(), "logarithm of zero");
    if q.is_one() {
        return BigInt::zero();
    }
    let k = q.bits() - 1;
    let guard = 40 + 64 - (k.max(1)).leading_zeros() as u64;
    let work = frac_bits as u64 + guard;
    let one = BigInt::one() << work as usize;

    // y = q / 2^k in [1, 2), as a fixed-point number with `work` bits.
    let y = BigInt::from_biguint(Sign::Plus, (q << work as usize) >> k as usize);
    let z = ((&y - &one) << work as usize) / (&y + &one);
    let ln_y = atanh_fixed(&z, work) << 1;

    let third = &one / BigInt::from(3);
    let ln2 = atanh_fixed(&third, work) << 1;

    let total = ln_y + ln2 * BigInt::from(k);
    total >> guard as usize
}

/// atanh(z) for fixed-point `z` in [0, 1/2] with `work` fractional bits.
fn atanh_fixed(z: &BigInt, work: u64) -> BigInt {
    let z2 = (z * z) >> work as usize;
    let mut power = z.clone();
    let mut sum = BigInt::zero();
    let mut denom = 1u64;
    while !power.is_zero() {
        sum += &power / BigInt::from(denom);
        power = (power * &z2) >> work as usize;
        denom += 2;
    }
    sum
}

/// Compare the integer `m` against the real number `factor * q * ln(q)`
/// exactly, where `factor` is a small positive integer and `q >= 2`.
/// Never returns `Equal`: `q ln q` is irrational for `q >= 2`.
pub fn cmp_int_with_q_ln_q(m: &BigUint, factor: u32, q: &BigUint) -> Ordering {
    assert!(q.bits() >= 2, "q must be at least 2");
    // Fast path on logarithms.
    let lhs = ln_biguint(m);
    let ln_q = ln_biguint(q);
    let rhs = (factor as f64).ln() + ln_q + ln_q.ln();
    let gap = lhs - rhs;
    if gap.abs() > 1e-9 * lhs.abs().max(1.0) {
        return if gap < 0.0 {
            Ordering::Less
        } else {
            Ordering::Greater
        };
    }
    let mut frac_bits = q.bits() as u32 + 64;
    loop {
        let ln = ln_fixed(q, frac_bits);
        let scale = BigInt::from_biguint(Sign::Plus, q.clone()) * BigInt::from(factor);
        let target = BigInt::from_biguint(Sign::Plus, m.clone()) << frac_bits as usize;
        let low = &scale * (&ln - 4);
        let high = &scale * (&ln + 4);
        if target < low {
            return Ordering::Less;
        }
        if target > high {
            return Ordering::Greater;
        }
        frac_bits *= 2;
    }
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    count: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Upper bound on the rounding error of `value()` for a sum of
    /// nonnegative terms.
    pub fn rounding_bound(&self) -> f64 {
        let u = f64::EPSILON / 2.0;
        let n = self.count as f64;
        (2.0 * u + 4.0 * n * u * u) * self.value().abs()
    }
}
