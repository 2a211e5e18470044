//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use extravagance::cf::ContinuedFraction;
use extravagance::orbit::TorusPoint;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub const WIDE: usize = 256;

/// `floor(alpha * 2^bits)` (possibly one below) from convergents with
/// `q_n q_{n+1} > 2^(bits + 8)`.
pub fn wide_mantissa(cf: &ContinuedFraction, bits: usize) -> BigUint {
    let (mut p0, mut q0) = (BigUint::one(), BigUint::zero());
    let (mut p1, mut q1) = (BigUint::zero(), BigUint::one());
    let limit = BigUint::one() << (bits + 8);
    let mut n = 1;
    loop {
        let Some(a) = cf.coefficient(n).unwrap() else {
            return (&p1 << bits) / &q1;
        };
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if &q1 * &q2 > limit {
            return (&p2 << bits) / &q2;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        n += 1;
    }
}

pub fn widen(x: &TorusPoint) -> BigUint {
    BigUint::from(x.value()) << (WIDE - 128)
}

/// `d(0, v / 2^WIDE)` as a wide integer.
pub fn wide_distance(v: &BigUint) -> BigUint {
    let full = BigUint::one() << WIDE;
    let other = &full - v;
    if v <= &other {
        v.clone()
    } else {
        other
    }
}

pub fn wide_to_f64(v: &BigUint) -> f64 {
    let shift = v.bits().saturating_sub(64);
    (v >> shift).to_f64().unwrap() * 2f64.powi(shift as i32 - WIDE as i32)
}

/// Orbit points `x + k alpha` at `WIDE` bits for `k` in `start..horizon`.
pub struct WideOrbit {
    pub k: u64,
    v: BigUint,
    step: BigUint,
    full: BigUint,
}

impl WideOrbit {
    pub fn new(x: BigUint, step: BigUint, start: u64) -> Self {
        let full = BigUint::one() << WIDE;
        let v = (x + &step * BigUint::from(start)) % &full;
        WideOrbit { k: start, v, step, full }
    }

    /// Current `(k, point)`, then step forward.
    pub fn next_point(&mut self) -> (u64, BigUint) {
        let out = (self.k, self.v.clone());
        self.v += &self.step;
        if self.v >= self.full {
            self.v -= &self.full;
        }
        self.k += 1;
        out
    }
}

/// Strict running minima of `d(0, x + k alpha)` over `k` in `start..horizon`.
pub fn wide_records(x: BigUint, step: BigUint, start: u64, horizon: u64) -> Vec<(u64, BigUint)> {
    let mut orbit = WideOrbit::new(x, step, start);
    let mut out: Vec<(u64, BigUint)> = Vec::new();
    while orbit.k < horizon {
        let (k, v) = orbit.next_point();
        let d = wide_distance(&v);
        if out.last().is_none_or(|(_, best)| d.cmp(best) == Ordering::Less) {
            out.push((k, d));
        }
    }
    out
}

/// Sum with a double-double accumulator.
#[derive(Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// `phi(v / 2^WIDE)` from the wide point.
pub fn wide_phi(v: &BigUint) -> f64 {
    let full = BigUint::one() << WIDE;
    let d = wide_to_f64(v);
    let c = wide_to_f64(&(&full - v));
    1.0 / d + 1.0 / c
}

/// `S_N(phi)(x)` from wide orbit points.
pub fn wide_phi_sum(x: BigUint, step: BigUint, n: u64) -> f64 {
    let mut orbit = WideOrbit::new(x, step, 0);
    let mut sum = DoubleDouble::default();
    for _ in 0..n {
        sum.add(wide_phi(&orbit.next_point().1));
    }
    sum.value()
}

/// Median of a list of finite values.
pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
