//! Rotation orbits `x + k*alpha mod 1` in 128-bit fixed point.
//!
//! A point is stored as `value / 2^128`. Each orbit point is computed
//! directly as `x + k*A mod 2^128` from the mantissa `A` of the truncated
//! angle, so the only error is the truncation of `alpha` scaled by `k`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::cf::{continuants, ContinuedFraction, FixedPointAngle};
use crate::error::{Error, Result};

/// Fractional bits of a [`TorusPoint`].
pub const FRAC_BITS: u32 = 128;

/// Largest accumulated angle error accepted by [`Rotation::point`].
pub const MAX_ORBIT_ERROR: f64 = 1.0 / (1u64 << 52) as f64;

const TWO_POW_128: f64 = 340282366920938463463374607431768211456.0;

/// `v / 2^128` with relative error at most `2^-52`.
#[inline]
pub(crate) fn fixed_to_f64(v: u128) -> f64 {
    const HI: f64 = 1.0 / 18446744073709551616.0;
    const LO: f64 = HI * HI;
    ((v >> 64) as u64) as f64 * HI + (v as u64) as f64 * LO
}

/// A point of `R/Z` with a certified absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    value: u128,
    /// Error bound in units of `2^-128`, rounded up.
    error_ulps: u128,
}

impl TorusPoint {
    pub const ZERO: TorusPoint = TorusPoint {
        value: 0,
        error_ulps: 0,
    };

    pub fn from_fixed(value: u128) -> Self {
        TorusPoint {
            value,
            error_ulps: 0,
        }
    }

    pub fn with_error(value: u128, error_bound: f64) -> Self {
        TorusPoint {
            value,
            error_ulps: ulps(error_bound),
        }
    }

    /// Exact for dyadic `x` with at most 128 fractional bits, otherwise
    /// truncated with error below `2^-128`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::domain(format!("torus point must lie in [0, 1), got {x}")));
        }
        let scaled = x * TWO_POW_128;
        let value = scaled as u128;
        let exact = value as f64 == scaled;
        Ok(TorusPoint {
            value,
            error_ulps: u128::from(!exact),
        })
    }

    /// A sample drawn from 64 random bits: `bits / 2^64`, exact.
    pub fn from_u64_bits(bits: u64) -> Self {
        TorusPoint::from_fixed((bits as u128) << 64)
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn error_bound(&self) -> f64 {
        fixed_to_f64(self.error_ulps)
    }

    pub fn to_f64(&self) -> f64 {
        fixed_to_f64(self.value)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.value == 0 && self.error_ulps == 0
    }

    /// `self - other mod 1`.
    pub fn sub(&self, other: &TorusPoint) -> TorusPoint {
        TorusPoint {
            value: self.value.wrapping_sub(other.value),
            error_ulps: self.error_ulps.saturating_add(other.error_ulps),
        }
    }

    /// Torus distance to `0`.
    pub fn distance_to_zero(&self) -> Distance {
        Distance {
            raw: self.value.min(self.value.wrapping_neg()),
            error_ulps: self.error_ulps,
        }
    }
}

fn ulps(error: f64) -> u128 {
    assert!((0.0..1.0).contains(&error), "error bound out of range: {error}");
    (error * TWO_POW_128).ceil() as u128
}

/// A torus distance in `[0, 1/2]` as a 128-bit fixed-point number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Distance {
    raw: u128,
    error_ulps: u128,
}

impl Distance {
    pub(crate) fn from_parts(raw: u128, error_ulps: u128) -> Self {
        Distance { raw, error_ulps }
    }

    pub fn raw(&self) -> u128 {
        self.raw
    }

    pub fn to_f64(&self) -> f64 {
        fixed_to_f64(self.raw)
    }

    pub fn error_bound(&self) -> f64 {
        fixed_to_f64(self.error_ulps)
    }

    /// The singularity guard: a distance below twice its own error bound
    /// cannot be told apart from a hit on the pole.
    pub fn is_indeterminate(&self) -> bool {
        self.raw == 0 || self.raw / 2 < self.error_ulps
    }
}

pub fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> Distance {
    a.sub(b).distance_to_zero()
}

/// `alpha` truncated to 128 bits, ready for repeated orbit evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    step: u128,
    step_error: f64,
}

impl Rotation {
    pub fn new(alpha: &FixedPointAngle) -> Self {
        let (step, step_error) = alpha.to_u128();
        Rotation { step, step_error }
    }

    /// A rotation by an exact 128-bit fraction.
    pub fn exact(step: u128) -> Self {
        Rotation {
            step,
            step_error: 0.0,
        }
    }

    pub fn step(&self) -> u128 {
        self.step
    }

    pub fn step_error(&self) -> f64 {
        self.step_error
    }

    pub fn to_f64(&self) -> f64 {
        fixed_to_f64(self.step)
    }

    /// Error of `k * alpha` and whether it is within [`MAX_ORBIT_ERROR`].
    pub fn check_budget(&self, k: f64) -> Result<f64> {
        let err = k * self.step_error;
        if err <= MAX_ORBIT_ERROR {
            return Ok(err);
        }
        // k * 2^-P <= 2^-52
        let required = 52.0 + k.log2().ceil();
        Err(Error::Precision {
            message: format!(
                "orbit index {k:e} with an angle error of {:e} per step exceeds the 2^-52 budget{}",
                self.step_error,
                if required > FRAC_BITS as f64 {
                    "; orbit arithmetic is limited to 128 bits"
                } else {
                    ""
                }
            ),
            required_bits: required as u32,
        })
    }

    /// `x + k*alpha mod 1`.
    pub fn point(&self, x: &TorusPoint, k: u64) -> Result<TorusPoint> {
        let err = self.check_budget(k as f64)?;
        Ok(self.point_unchecked(x, k, err))
    }

    /// Like [`point`](Self::point) with the budget already checked for an
    /// index at least `k`; `err` is the angle error reported for it.
    pub(crate) fn point_unchecked(&self, x: &TorusPoint, k: u64, err: f64) -> TorusPoint {
        TorusPoint {
            value: x.value.wrapping_add(self.step.wrapping_mul(k as u128)),
            error_ulps: x.error_ulps.saturating_add(ulps(err)),
        }
    }
}

/// The points `x + k*alpha`, `0 <= k <= n_max`, sharing one error bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Orbit {
    x: u128,
    step: u128,
    n_max: u64,
    error_ulps: u128,
}

impl Orbit {
    pub fn new(x: &TorusPoint, rotation: &Rotation, n_max: u64) -> Result<Self> {
        let err = rotation.check_budget(n_max as f64)?;
        Ok(Orbit {
            x: x.value,
            step: rotation.step,
            n_max,
            error_ulps: x.error_ulps.saturating_add(ulps(err)),
        })
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub(crate) fn step(&self) -> u128 {
        self.step
    }

    pub(crate) fn error_ulps(&self) -> u128 {
        self.error_ulps
    }

    #[inline]
    pub fn point(&self, k: u64) -> TorusPoint {
        debug_assert!(k <= self.n_max, "orbit index {k} beyond {}", self.n_max);
        TorusPoint {
            value: self.x.wrapping_add(self.step.wrapping_mul(k as u128)),
            error_ulps: self.error_ulps,
        }
    }
}

/// `x + k*alpha mod 1` for a big index `k`.
pub fn orbit_point(x: &TorusPoint, alpha: &FixedPointAngle, k: &BigUint) -> Result<TorusPoint> {
    let rot = Rotation::new(alpha);
    let kf = k.to_f64().unwrap_or(f64::INFINITY);
    let err = rot.check_budget(kf)?;
    let low = (k & BigUint::from(u128::MAX)).to_u128().expect("masked to 128 bits");
    Ok(TorusPoint {
        value: x.value.wrapping_add(rot.step.wrapping_mul(low)),
        error_ulps: x.error_ulps.saturating_add(ulps(err)),
    })
}

/// The closest approach to `0` among the first `horizon` orbit points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinDistanceRecord {
    pub horizon: u64,
    pub x_min: Distance,
    pub argmin: u64,
}

/// First index scanned from `x`. The orbit of exactly `0` starts at `k = 1`:
/// its closest returns are the quantity of interest, not the start point.
fn first_index(x: &TorusPoint) -> u64 {
    u64::from(x.is_exact_zero())
}

/// Streaming scan of `d(0, x + k*alpha)` for `k = 0, 1, 2, ...`.
#[derive(Clone, Debug)]
pub struct MinDistanceScan {
    orbit: Orbit,
    next: u64,
    best: Option<(Distance, u64)>,
}

impl MinDistanceScan {
    /// A scan of at most `horizon` points.
    pub fn new(x: TorusPoint, rotation: Rotation, horizon: u64) -> Result<Self> {
        Ok(MinDistanceScan {
            orbit: Orbit::new(&x, &rotation, horizon)?,
            next: first_index(&x),
            best: None,
        })
    }

    /// Scan one more point; returns it and whether it set a new record.
    pub fn advance(&mut self) -> Result<(u64, Distance, bool)> {
        let k = self.next;
        if k > self.orbit.n_max {
            return Err(Error::domain(format!("scan horizon {} exhausted", self.orbit.n_max)));
        }
        let d = self.orbit.point(k).distance_to_zero();
        self.next += 1;
        let record = self.best.is_none_or(|(best, _)| d.raw < best.raw);
        if record {
            self.best = Some((d, k));
        }
        Ok((k, d, record))
    }

    pub fn record(&self) -> Option<MinDistanceRecord> {
        self.best.map(|(x_min, argmin)| MinDistanceRecord {
            horizon: self.next,
            x_min,
            argmin,
        })
    }
}

/// `min { d(0, x + k*alpha) : 0 <= k < horizon }`; for `x = 0` exactly the
/// scan starts at `k = 1`.
pub fn min_distance_prefix(
    x: &TorusPoint,
    alpha: &FixedPointAngle,
    horizon: u64,
) -> Result<MinDistanceRecord> {
    let records = min_distance_records(x, alpha, horizon)?;
    let &(argmin, x_min) = records
        .last()
        .ok_or_else(|| Error::domain(format!("empty scan: horizon {horizon} from x = {}", x.to_f64())))?;
    Ok(MinDistanceRecord {
        horizon,
        x_min,
        argmin,
    })
}

/// Every strict running minimum `(k, d)` of the scan up to `horizon`.
pub fn min_distance_records(
    x: &TorusPoint,
    alpha: &FixedPointAngle,
    horizon: u64,
) -> Result<Vec<(u64, Distance)>> {
    let mut scan = MinDistanceScan::new(*x, Rotation::new(alpha), horizon)?;
    let mut out = Vec::new();
    while scan.next < horizon {
        let (k, d, record) = scan.advance()?;
        if record {
            out.push((k, d));
        }
    }
    Ok(out)
}

/// Record minima of `||k alpha||` for `1 <= k < horizon`, read off the
/// continued fraction: they sit at `q_0 = 1` and at every `q_n`.
pub fn closest_returns_fast(
    alpha: &FixedPointAngle,
    cf: &ContinuedFraction,
    horizon: u64,
) -> Result<Vec<(u64, Distance)>> {
    let rotation = Rotation::new(alpha);
    rotation.check_budget(horizon as f64)?;
    let mut ks: Vec<u64> = vec![1];
    let mut depth = 8;
    'grow: loop {
        let qs = continuants(cf, depth)?;
        ks.truncate(1);
        for q in &qs[1..] {
            match q.to_u64() {
                Some(q) if q < horizon => {
                    if *ks.last().expect("non-empty") != q {
                        ks.push(q);
                    }
                }
                _ => break 'grow,
            }
        }
        if qs.len() <= depth {
            break;
        }
        depth *= 2;
    }
    ks.retain(|&k| k < horizon);
    ks.into_iter()
        .map(|k| Ok((k, rotation.point(&TorusPoint::ZERO, k)?.distance_to_zero())))
        .collect()
}

/// `count` points `u / 2^64` from consecutive outputs `u` of SplitMix64
/// seeded with `seed` (state initialized to `seed`).
pub fn sample_points(seed: u64, count: usize) -> Vec<TorusPoint> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..count).map(|_| TorusPoint::from_u64_bits(rng.next_u64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{angle_value, convergents_up_to};

    fn golden() -> (ContinuedFraction, FixedPointAngle) {
        let cf = ContinuedFraction::golden();
        let a = angle_value(&cf, 128).unwrap();
        (cf, a)
    }

    #[test]
    fn quarter_plus_three_halves() {
        let half = FixedPointAngle::from_mantissa(BigUint::from(1u64 << 63), 64, 0.0).unwrap();
        let x = TorusPoint::from_f64(0.25).unwrap();
        let p = orbit_point(&x, &half, &BigUint::from(3u32)).unwrap();
        assert_eq!(p.to_f64(), 0.75);
        assert_eq!(p.error_bound(), 0.0);
        assert_eq!(orbit_point(&x, &half, &BigUint::from(0u32)).unwrap(), x);
    }

    #[test]
    fn distances() {
        let p = |x: f64| TorusPoint::from_f64(x).unwrap();
        assert!((torus_distance(&p(0.1), &p(0.9)).to_f64() - 0.2).abs() < 1e-15);
        assert_eq!(torus_distance(&p(0.3), &p(0.3)).raw(), 0);
        assert_eq!(torus_distance(&p(0.0), &p(0.5)).to_f64(), 0.5);
    }

    #[test]
    fn return_to_zero_matches_convergent_error() {
        let (cf, a) = golden();
        let table = convergents_up_to(&cf, 30).unwrap();
        for row in &table.rows {
            let p = orbit_point(&TorusPoint::ZERO, &a, &row.q).unwrap();
            let d = p.distance_to_zero();
            let err = row.err.to_f64();
            assert!((d.to_f64() - err).abs() <= d.error_bound() + err * 1e-15, "n={}", row.n);
        }
    }

    #[test]
    fn single_point_horizon() {
        let (_, a) = golden();
        let x = TorusPoint::from_f64(0.25).unwrap();
        let r = min_distance_prefix(&x, &a, 1).unwrap();
        assert_eq!((r.argmin, r.x_min.to_f64()), (0, 0.25));
        assert!(min_distance_prefix(&TorusPoint::ZERO, &a, 1).is_err());
    }

    #[test]
    fn best_approximation_from_zero() {
        let (cf, a) = golden();
        let table = convergents_up_to(&cf, 20).unwrap();
        for n in 3..20 {
            let qn = table.row(n).unwrap().q.to_u64().unwrap();
            let prev = table.row(n - 1).unwrap().q.to_u64().unwrap();
            let r = min_distance_prefix(&TorusPoint::ZERO, &a, qn).unwrap();
            assert_eq!(r.argmin, prev, "n={n}");
        }
    }

    #[test]
    fn golden_and_silver_records() {
        let (cf, a) = golden();
        let fast = closest_returns_fast(&a, &cf, 10).unwrap();
        let ks: Vec<u64> = fast.iter().map(|r| r.0).collect();
        assert_eq!(ks, [1, 2, 3, 5, 8]);
        assert!(fast.windows(2).all(|w| w[1].1.raw() < w[0].1.raw()));
        let raw = |v: Vec<(u64, Distance)>| v.into_iter().map(|(k, d)| (k, d.raw())).collect::<Vec<_>>();
        assert_eq!(raw(fast), raw(min_distance_records(&TorusPoint::ZERO, &a, 10).unwrap()));

        let cf = ContinuedFraction::silver();
        let a = angle_value(&cf, 128).unwrap();
        let ks: Vec<u64> = closest_returns_fast(&a, &cf, 100)
            .unwrap()
            .iter()
            .map(|r| r.0)
            .collect();
        assert_eq!(ks, [1, 2, 5, 12, 29, 70]);
        assert!(closest_returns_fast(&a, &cf, 1).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let a = angle_value(&ContinuedFraction::golden(), 64).unwrap();
        let rot = Rotation::new(&a);
        assert!(rot.point(&TorusPoint::ZERO, 1 << 11).is_ok());
        match rot.point(&TorusPoint::ZERO, 1 << 20) {
            Err(Error::Precision { required_bits, .. }) => assert_eq!(required_bits, 72),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn guard_flags_near_hits() {
        let d = TorusPoint::with_error(3, 2f64.powi(-127)).distance_to_zero();
        assert!(d.is_indeterminate());
        let d = TorusPoint::with_error(1 << 20, 2f64.powi(-127)).distance_to_zero();
        assert!(!d.is_indeterminate());
    }

    #[test]
    fn splitmix_reference_output() {
        // First output of SplitMix64 from state 0.
        let x = sample_points(0, 2);
        assert_eq!(x[0].value() >> 64, 0xe220a8397b1dcdaf);
        assert_ne!(x[0], x[1]);
        assert_eq!(sample_points(0, 2), x);
    }

}
