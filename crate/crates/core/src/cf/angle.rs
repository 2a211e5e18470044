use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{ContinuedFraction, Termination};
use crate::error::{Error, Result};

/// `alpha` realized as a `P`-bit binary fraction `mantissa / 2^P` together
/// with a certified bound on `|value - alpha|`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointAngle {
    mantissa: BigUint,
    bits: u32,
    error_bound: f64,
}

impl FixedPointAngle {
    /// Wrap an exact dyadic fraction `mantissa / 2^bits`.
    pub fn from_mantissa(mantissa: BigUint, bits: u32, error_bound: f64) -> Result<Self> {
        if mantissa.bits() > bits as u64 {
            return Err(Error::domain("fixed-point angle must lie in [0, 1)"));
        }
        Ok(FixedPointAngle {
            mantissa,
            bits,
            error_bound,
        })
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn precision_bits(&self) -> u32 {
        self.bits
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(
            BigInt::from_biguint(Sign::Plus, self.mantissa.clone()),
            BigInt::one() << self.bits as usize,
        )
    }

    pub fn to_f64(&self) -> f64 {
        self.to_ratio().to_f64().unwrap_or(f64::NAN)
    }

    /// The angle as a 128-bit fraction `value / 2^128`, and the certified
    /// error of that value (wider angles are truncated).
    pub fn to_u128(&self) -> (u128, f64) {
        if self.bits >= 128 {
            let shift = (self.bits - 128) as usize;
            let top = (&self.mantissa >> shift).to_u128().expect("128 bits");
            let truncation = if shift > 0 { 2f64.powi(-128) } else { 0.0 };
            (top, self.error_bound + truncation)
        } else {
            let v = self.mantissa.to_u128().expect("fits") << (128 - self.bits);
            (v, self.error_bound)
        }
    }
}

fn round_div(num: &BigUint, den: &BigUint) -> (BigUint, bool) {
    let (q, r) = num.div_rem(den);
    let exact = r.is_zero();
    if (&r << 1usize) >= *den {
        (q + 1u32, exact)
    } else {
        (q, exact)
    }
}

/// Realize `alpha` to within `2^-P` as a `P`-bit fixed-point fraction.
///
/// Uses the first convergent with `q_n q_{n+1} >= 2^(P+1)`, so the
/// approximation error and the final rounding each contribute at most
/// `2^(-P-1)`. Finite expansions are converted exactly.
pub fn angle_value(cf: &ContinuedFraction, precision_bits: u32) -> Result<FixedPointAngle> {
    if precision_bits < 64 {
        return Err(Error::domain(format!(
            "precision must be at least 64 bits, got {precision_bits}"
        )));
    }
    let scale = BigUint::one() << precision_bits as usize;
    let limit = BigUint::one() << (precision_bits as usize + 1);
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    let mut n = 1;
    loop {
        let Some(a) = cf.coefficient(n)? else {
            if cf.termination() == Some(Termination::Exact) && n > 1 {
                let (mut mantissa, exact) = round_div(&(&p * &scale), &q);
                clamp_below(&mut mantissa, &scale);
                let error_bound = if exact {
                    0.0
                } else {
                    2f64.powi(-(precision_bits as i32) - 1)
                };
                return FixedPointAngle::from_mantissa(mantissa, precision_bits, error_bound);
            }
            return Err(Error::Precision {
                message: format!(
                    "only {} coefficients known; cannot certify {precision_bits} bits",
                    n - 1
                ),
                required_bits: precision_bits,
            });
        };
        let p_new = &a * &p + &p_prev;
        let q_new = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_new);
        q_prev = std::mem::replace(&mut q, q_new);
        n += 1;
        // (p_prev, q_prev) and (p, q) are consecutive convergents.
        if &q * &q_prev >= limit {
            let (mut mantissa, _) = round_div(&(&p_prev * &scale), &q_prev);
            clamp_below(&mut mantissa, &scale);
            return FixedPointAngle::from_mantissa(
                mantissa,
                precision_bits,
                2f64.powi(-(precision_bits as i32)),
            );
        }
    }
}

fn clamp_below(mantissa: &mut BigUint, scale: &BigUint) {
    if &*mantissa >= scale {
        *mantissa = scale - 1u32;
    }
}
