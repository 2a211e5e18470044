//! Birkhoff sums `S_N(f)(x) = sum_{k<N} f(x + k*alpha)` of singular and
//! bounded-variation observables, streamed one orbit point at a time.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ratio_to_f64, CompensatedSum};
use crate::orbit::{fixed_to_f64, Distance, Orbit, Rotation, TorusPoint};

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Observable {
    /// `phi(x) = 1/x + 1/(1-x)`
    PhiStandard,
    /// `x^-gamma + (1-x)^-gamma` with `gamma > 1`
    PhiGamma(f64),
    Table(BvTable),
}

/// A value together with a bound on its absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub value: f64,
    pub error_bound: f64,
    pub distance: Distance,
}

impl Observable {
    pub fn phi_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Observable::PhiGamma(gamma))
    }

    /// True when the value is a decreasing function of the distance to `0`,
    /// so the largest term sits at the closest approach.
    pub fn peaks_at_zero(&self) -> bool {
        !matches!(self, Observable::Table(_))
    }

    /// Evaluate at an orbit point; `step` only labels guard errors.
    pub fn eval(&self, p: &TorusPoint, step: u64) -> Result<Term> {
        let distance = p.distance_to_zero();
        let (value, error_bound) = match self {
            Observable::Table(t) => t.eval(p),
            _ => {
                if distance.is_indeterminate() {
                    return Err(Error::NearSingularity {
                        step,
                        distance: distance.to_f64(),
                        bound: 2.0 * distance.error_bound(),
                    });
                }
                let d = distance.to_f64();
                let c = 1.0 - d;
                let e = distance.error_bound();
                match self {
                    Observable::PhiStandard => {
                        let value = 1.0 / (d * c);
                        // |phi'| <= phi^2, and phi(d - e) <= 2 phi(d) since d >= 2e
                        (value, 4.0 * e * value * value + 8.0 * UNIT_ROUNDOFF * value)
                    }
                    Observable::PhiGamma(g) => {
                        let value = d.powf(-g) + c.powf(-g);
                        let slope = g * ((d - e).powf(-g - 1.0) + (c - e).powf(-g - 1.0));
                        (value, e * slope + 16.0 * UNIT_ROUNDOFF * value)
                    }
                    Observable::Table(_) => unreachable!(),
                }
            }
        };
        Ok(Term {
            value,
            error_bound,
            distance,
        })
    }
}

/// A piecewise-linear function on the circle: on `[k_i, k_{i+1})` it runs
/// linearly from `left[i]` to the limit `right[i]`. Breakpoints and values are
/// exact rationals, so the total variation and the integral are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct BvTable {
    knots: Vec<BigRational>,
    left: Vec<BigRational>,
    right: Vec<BigRational>,
    knots_fixed: Vec<u128>,
    knots_f: Vec<f64>,
    left_f: Vec<f64>,
    right_f: Vec<f64>,
    max_slope: f64,
    max_jump: f64,
    variation: BigRational,
    integral: BigRational,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Smallest fixed-point value `v` with `v / 2^128 >= r`.
fn ceil_fixed(r: &BigRational) -> u128 {
    let scaled = r * BigRational::from_integer(BigInt::from(1) << 128usize);
    scaled.ceil().to_integer().to_u128().unwrap_or(u128::MAX)
}

impl BvTable {
    pub fn new(knots: Vec<BigRational>, left: Vec<BigRational>, right: Vec<BigRational>) -> Result<Self> {
        let m = knots.len();
        if m == 0 || left.len() != m || right.len() != m {
            return Err(Error::domain("table needs equally many knots, left and right values"));
        }
        if !knots[0].is_zero() {
            return Err(Error::domain("the first knot must be 0"));
        }
        let one = BigRational::from_integer(1.into());
        if knots.windows(2).any(|w| w[0] >= w[1]) || knots[m - 1] >= one {
            return Err(Error::domain("knots must increase strictly inside [0, 1)"));
        }
        let ends: Vec<BigRational> = knots[1..].iter().cloned().chain([one]).collect();

        let mut variation = BigRational::zero();
        let mut integral = BigRational::zero();
        let mut max_slope: f64 = 0.0;
        let mut max_jump: f64 = 0.0;
        for i in 0..m {
            let rise = (&right[i] - &left[i]).abs();
            let width = &ends[i] - &knots[i];
            max_slope = max_slope.max(ratio_to_f64(&(&rise / &width)));
            variation += &rise;
            let jump = (&left[(i + 1) % m] - &right[i]).abs();
            max_jump = max_jump.max(ratio_to_f64(&jump));
            variation += jump;
            integral += (&left[i] + &right[i]) * &width / rat(2, 1);
        }
        Ok(BvTable {
            knots_fixed: knots.iter().map(ceil_fixed).collect(),
            knots_f: knots.iter().chain([&ends[m - 1]]).map(ratio_to_f64).collect(),
            left_f: left.iter().map(ratio_to_f64).collect(),
            right_f: right.iter().map(ratio_to_f64).collect(),
            knots,
            left,
            right,
            max_slope,
            max_jump,
            variation,
            integral,
        })
    }

    /// Piecewise constant: `values[i]` on `[knots[i], knots[i+1])`.
    pub fn step(knots: Vec<BigRational>, values: Vec<BigRational>) -> Result<Self> {
        BvTable::new(knots, values.clone(), values)
    }

    pub fn constant(c: BigRational) -> Self {
        BvTable::step(vec![BigRational::zero()], vec![c]).expect("valid constant")
    }

    /// The indicator of `[a, b)` for `0 <= a < b <= 1`.
    pub fn indicator(a: BigRational, b: BigRational) -> Result<Self> {
        let (zero, one) = (BigRational::zero(), BigRational::from_integer(1.into()));
        if !(zero <= a && a < b && b <= one) {
            return Err(Error::domain("indicator needs 0 <= a < b <= 1"));
        }
        let mut knots = vec![zero.clone()];
        let mut values = vec![if a.is_zero() { one.clone() } else { zero.clone() }];
        if !a.is_zero() {
            knots.push(a);
            values.push(one.clone());
        }
        if b < one {
            knots.push(b);
            values.push(zero);
        }
        BvTable::step(knots, values)
    }

    /// `f(x) = x` on `[0, 1)`.
    pub fn sawtooth() -> Self {
        BvTable::new(vec![rat(0, 1)], vec![rat(0, 1)], vec![rat(1, 1)]).expect("valid sawtooth")
    }

    pub fn variation(&self) -> &BigRational {
        &self.variation
    }

    pub fn integral(&self) -> &BigRational {
        &self.integral
    }

    pub fn knots(&self) -> &[BigRational] {
        &self.knots
    }

    fn eval(&self, p: &TorusPoint) -> (f64, f64) {
        let v = p.value();
        let i = self.knots_fixed.partition_point(|&k| k <= v) - 1;
        let x = p.to_f64();
        let (k0, k1) = (self.knots_f[i], self.knots_f[i + 1]);
        let (l, r) = (self.left_f[i], self.right_f[i]);
        let value = if l == r { l } else { l + (r - l) * ((x - k0) / (k1 - k0)) };
        let e = p.error_bound();
        let mut error = self.max_slope * e + 4.0 * UNIT_ROUNDOFF * value.abs();
        if e > 0.0 {
            // Within the error of a knot the branch itself is uncertain.
            let reach = (e * 2f64.powi(128)).ceil() as u128 + 1;
            let near = |k: u128| v.abs_diff(k) <= reach || v.wrapping_neg() <= reach;
            if near(self.knots_fixed[i]) || self.knots_fixed.get(i + 1).is_some_and(|&k| near(k)) {
                error += self.max_jump;
            }
        }
        (value, error)
    }

    /// Exact value at a rational point, for oracles.
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        let i = self.knots.partition_point(|k| k <= x) - 1;
        let end = self
            .knots
            .get(i + 1)
            .cloned()
            .unwrap_or_else(|| BigRational::from_integer(1.into()));
        let t = (x - &self.knots[i]) / (end - &self.knots[i]);
        &self.left[i] + (&self.right[i] - &self.left[i]) * t
    }
}

/// Streaming state of one Birkhoff sum.
#[derive(Clone, Debug)]
pub struct BirkhoffAccumulator {
    observable: Observable,
    orbit: Orbit,
    n: u64,
    /// Every term except the current maximum.
    trimmed: CompensatedSum,
    max_entry: f64,
    argmax: u64,
    x_min: Option<(Distance, u64)>,
    last_term: f64,
    term_errors: f64,
}

impl BirkhoffAccumulator {
    /// Fails up front when `n_max` steps would exceed the orbit precision budget.
    pub fn new(observable: Observable, x: TorusPoint, rotation: Rotation, n_max: u64) -> Result<Self> {
        Ok(BirkhoffAccumulator {
            observable,
            // one extra point for a look-ahead term
            orbit: Orbit::new(&x, &rotation, n_max + 1)?,
            n: 0,
            trimmed: CompensatedSum::new(),
            max_entry: f64::NEG_INFINITY,
            argmax: 0,
            x_min: None,
            last_term: f64::NAN,
            term_errors: 0.0,
        })
    }

    /// The term `f(x + N*alpha)` that the next step will add.
    pub fn next_term(&self) -> Result<Term> {
        if self.n > self.orbit.n_max() {
            return Err(Error::domain(format!("accumulator sized for {} steps", self.orbit.n_max() - 1)));
        }
        self.observable.eval(&self.orbit.point(self.n), self.n)
    }

    /// Add a term produced by [`next_term`](Self::next_term).
    pub fn push(&mut self, term: Term) {
        let k = self.n;
        let closer = self.x_min.is_none_or(|(d, _)| term.distance.raw() < d.raw());
        if closer {
            self.x_min = Some((term.distance, k));
        }
        let new_max = if self.observable.peaks_at_zero() {
            closer
        } else {
            term.value > self.max_entry
        };
        if new_max {
            if k > 0 {
                self.trimmed.add(self.max_entry);
            }
            self.max_entry = term.value;
            self.argmax = k;
        } else {
            self.trimmed.add(term.value);
        }
        self.last_term = term.value;
        self.term_errors += term.error_bound;
        self.n += 1;
    }

    /// One step: `S_{N+1} = S_N + f(x + N*alpha)`.
    pub fn accumulate(&mut self) -> Result<Term> {
        let term = self.next_term()?;
        self.push(term);
        Ok(term)
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        if self.observable == Observable::PhiStandard {
            return self.run_phi(steps);
        }
        for _ in 0..steps {
            self.accumulate()?;
        }
        Ok(())
    }

    /// [`run`](Self::run) for `phi` with the term evaluation inlined; same
    /// values and bounds as [`Observable::eval`] followed by [`push`](Self::push).
    fn run_phi(&mut self, steps: u64) -> Result<()> {
        let end = self.n + steps;
        if end > self.orbit.n_max() + 1 {
            return Err(Error::domain(format!("accumulator sized for {} steps", self.orbit.n_max() - 1)));
        }
        let err_ulps = self.orbit.error_ulps();
        let e = fixed_to_f64(err_ulps);
        let step = self.orbit.step();
        let mut v = self.orbit.point(self.n).value();
        let mut best = self.x_min.map_or(u128::MAX, |(d, _)| d.raw());
        while self.n < end {
            let k = self.n;
            let raw = v.min(v.wrapping_neg());
            if raw == 0 || raw / 2 < err_ulps {
                return Err(Error::NearSingularity {
                    step: k,
                    distance: fixed_to_f64(raw),
                    bound: 2.0 * e,
                });
            }
            let d = fixed_to_f64(raw);
            let value = 1.0 / (d * (1.0 - d));
            self.term_errors += 4.0 * e * value * value + 8.0 * UNIT_ROUNDOFF * value;
            if raw < best {
                best = raw;
                self.x_min = Some((Distance::from_parts(raw, err_ulps), k));
                if k > 0 {
                    self.trimmed.add(self.max_entry);
                }
                self.max_entry = value;
                self.argmax = k;
            } else {
                self.trimmed.add(value);
            }
            self.last_term = value;
            self.n += 1;
            v = v.wrapping_add(step);
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `S_N`, equal to `trimmed_sum() + max_entry()`.
    pub fn sum(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.trimmed.value() + self.max_entry
        }
    }

    /// `S_N` minus its largest term.
    pub fn trimmed_sum(&self) -> f64 {
        self.trimmed.value()
    }

    pub fn max_entry(&self) -> f64 {
        self.max_entry
    }

    pub fn argmax(&self) -> u64 {
        self.argmax
    }

    /// Closest approach to `0` among the first `N` points and its index.
    pub fn x_min(&self) -> Option<(Distance, u64)> {
        self.x_min
    }

    pub fn last_term(&self) -> f64 {
        self.last_term
    }

    /// Certified bound on `|sum() - S_N|`: term errors plus summation rounding.
    pub fn error_bound(&self) -> f64 {
        self.term_errors
            + self.trimmed.rounding_bound()
            + 2.0 * UNIT_ROUNDOFF * self.sum().abs()
    }
}

/// `S_n(f)(x)` for a fresh accumulator.
pub fn birkhoff_sum(obs: &Observable, rotation: Rotation, x: TorusPoint, n: u64) -> Result<BirkhoffAccumulator> {
    let mut acc = BirkhoffAccumulator::new(obs.clone(), x, rotation, n)?;
    acc.run(n)?;
    Ok(acc)
}

/// Which `N` to emit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSchedule {
    pub powers_of_two: bool,
    /// Every `N` at which the orbit sets a new closest approach to `0`.
    pub records: bool,
    pub checkpoints: Vec<u64>,
    /// Running extremes only count `N >= burn_in`.
    pub burn_in: u64,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        SampleSchedule {
            powers_of_two: true,
            records: true,
            checkpoints: Vec::new(),
            burn_in: 1,
        }
    }
}

impl SampleSchedule {
    fn wants(&self, n: u64, record: bool, n_max: u64) -> bool {
        n == n_max
            || (self.powers_of_two && n.is_power_of_two())
            || (self.records && record)
            || self.checkpoints.contains(&n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioSample {
    pub n: u64,
    /// `f(x + N*alpha) / S_N`
    pub ratio: f64,
    /// Largest ratio over `burn_in <= N' <= N`; zero before the burn-in.
    pub running_max: f64,
}

/// Extravagance ratios `f(R^N x) / S_N(f)(x)` for `1 <= N <= n_max`.
pub fn extravagance_series(
    obs: &Observable,
    x: TorusPoint,
    rotation: Rotation,
    n_max: u64,
    schedule: &SampleSchedule,
) -> Result<Vec<RatioSample>> {
    let mut acc = BirkhoffAccumulator::new(obs.clone(), x, rotation, n_max)?;
    acc.accumulate()?;
    let mut running_max: f64 = 0.0;
    let mut out = Vec::new();
    for n in 1..=n_max {
        let term = acc.next_term()?;
        let record = acc.x_min.is_some_and(|(d, _)| term.distance.raw() < d.raw());
        let ratio = term.value / acc.sum();
        if n >= schedule.burn_in {
            running_max = running_max.max(ratio);
        }
        if schedule.wants(n, record, n_max) {
            out.push(RatioSample {
                n,
                ratio,
                running_max,
            });
        }
        if n < n_max {
            acc.push(term);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaSample {
    pub n: u64,
    /// `S_N(phi)(x) / S_N(phi)(x - beta)`
    pub theta: f64,
    /// Extremes of `Theta` over `burn_in <= N' <= N`.
    pub max: f64,
    pub min: f64,
    pub relative_error: f64,
}

/// Largest relative error accepted for a `Theta` value.
pub const THETA_TOLERANCE: f64 = 1e-6;

/// `Theta_N^beta(x)` for `1 <= N <= n_max`, with its running extremes.
pub fn theta_series(
    x: TorusPoint,
    beta: TorusPoint,
    rotation: Rotation,
    n_max: u64,
    schedule: &SampleSchedule,
) -> Result<Vec<ThetaSample>> {
    let shifted = x.sub(&beta);
    let mut num = BirkhoffAccumulator::new(Observable::PhiStandard, x, rotation, n_max)?;
    let mut den = BirkhoffAccumulator::new(Observable::PhiStandard, shifted, rotation, n_max)?;
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut out = Vec::new();
    for n in 1..=n_max {
        let a = num.next_term()?;
        let b = den.next_term()?;
        let record = num.x_min.is_none_or(|(d, _)| a.distance.raw() < d.raw())
            || den.x_min.is_none_or(|(d, _)| b.distance.raw() < d.raw());
        num.push(a);
        den.push(b);
        let theta = num.sum() / den.sum();
        let relative_error = num.error_bound() / num.sum() + den.error_bound() / den.sum();
        if relative_error > THETA_TOLERANCE {
            return Err(Error::Precision {
                message: format!("Theta_{n} has relative error {relative_error:e}"),
                required_bits: 128,
            });
        }
        if n >= schedule.burn_in {
            max = max.max(theta);
            min = min.min(theta);
        }
        if schedule.wants(n, record, n_max) {
            out.push(ThetaSample {
                n,
                theta,
                max,
                min,
                relative_error,
            });
        }
    }
    Ok(out)
}

/// Run one stream past every checkpoint (any order, repeats allowed) and
/// report the accumulator state at each, in the order given.
fn at_checkpoints<T>(
    obs: &Observable,
    rotation: Rotation,
    x: TorusPoint,
    checkpoints: &[u64],
    mut read: impl FnMut(usize, &BirkhoffAccumulator) -> T,
) -> Result<Vec<T>> {
    let mut order: Vec<usize> = (0..checkpoints.len()).collect();
    order.sort_by_key(|&i| checkpoints[i]);
    let n_max = checkpoints.iter().copied().max().unwrap_or(0);
    let mut acc = BirkhoffAccumulator::new(obs.clone(), x, rotation, n_max)?;
    let mut out: Vec<Option<T>> = (0..checkpoints.len()).map(|_| None).collect();
    for i in order {
        acc.run(checkpoints[i] - acc.n())?;
        out[i] = Some(read(i, &acc));
    }
    Ok(out.into_iter().map(|v| v.expect("every checkpoint visited")).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DkResidual {
    pub q: u64,
    pub residual: f64,
    pub variation: f64,
    pub pass: bool,
}

/// `|S_q(f)(x) - q * int f|` against the bound `Var(f)`, for each `q`.
pub fn dk_residuals(f: &BvTable, rotation: Rotation, x: TorusPoint, qs: &[u64]) -> Result<Vec<DkResidual>> {
    let integral = ratio_to_f64(f.integral());
    let variation = ratio_to_f64(f.variation());
    at_checkpoints(&Observable::Table(f.clone()), rotation, x, qs, |i, acc| {
        let residual = (acc.sum() - integral * qs[i] as f64).abs();
        DkResidual {
            q: qs[i],
            residual,
            variation,
            pass: residual <= variation,
        }
    })
}

pub fn dk_residual(f: &BvTable, rotation: Rotation, x: TorusPoint, q: u64) -> Result<DkResidual> {
    Ok(dk_residuals(f, rotation, x, &[q])?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub q: u64,
    pub lhs: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Constant in `|S_q(phi)(x) - 2 q log q - phi(x_min,q)| <= C q`.
pub const LEMMA_DK_CONSTANT: f64 = 2.0;

/// `|S_q(phi)(x) - 2 q log q - phi(x_min,q)| <= c q` at each denominator `q`.
pub fn lemma_dk_adapted_checks(rotation: Rotation, x: TorusPoint, qs: &[u64], c: f64) -> Result<Vec<BoundCheck>> {
    at_checkpoints(&Observable::PhiStandard, rotation, x, qs, |i, acc| {
        let qf = qs[i] as f64;
        // The largest term is phi(x_min,q).
        let lhs = (acc.trimmed_sum() - 2.0 * qf * qf.ln()).abs();
        let bound = c * qf;
        BoundCheck {
            q: qs[i],
            lhs,
            bound,
            pass: lhs <= bound,
        }
    })
}

pub fn lemma_dk_adapted_check(rotation: Rotation, x: TorusPoint, q: u64, c: f64) -> Result<BoundCheck> {
    Ok(lemma_dk_adapted_checks(rotation, x, &[q], c)?.remove(0))
}

/// `k` in the block `[j q_n, (j+1) q_n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub q: u64,
    pub q_next: u64,
    pub j: u64,
    pub k: u64,
}

impl Block {
    /// Requires `(j+1) q_n < q_{n+1}`; `k` defaults to the block midpoint.
    pub fn new(q: u64, q_next: u64, j: u64, k: Option<u64>) -> Result<Block> {
        if j == 0 || (j + 1) * q >= q_next {
            return Err(Error::domain(format!(
                "empty block: j = {j}, q_n = {q}, q_n+1 = {q_next}"
            )));
        }
        let k = k.unwrap_or((2 * j + 1) * q / 2);
        if k < j * q || k > (j + 1) * q {
            return Err(Error::domain(format!("k = {k} lies outside [{}, {}]", j * q, (j + 1) * q)));
        }
        Ok(Block { q, q_next, j, k })
    }

    /// Every nonempty block `j = 1, 2, ...` between `q_n` and `q_{n+1}`, at midpoints.
    pub fn all(q: u64, q_next: u64) -> Vec<Block> {
        (1..)
            .map_while(|j| Block::new(q, q_next, j, None).ok())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockCheck {
    pub block: Block,
    /// `S_k(phi)(x) - phi(x_min,k)`
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// `2j q log q - 2j q <= S_k - phi(x_min,k) <= 2(j+1) q log q + 2(j+1) q + 4 q_{n+1} (2 + log j)`.
pub fn lemma_block_bounds_checks(rotation: Rotation, x: TorusPoint, blocks: &[Block]) -> Result<Vec<BlockCheck>> {
    let ks: Vec<u64> = blocks.iter().map(|b| b.k).collect();
    at_checkpoints(&Observable::PhiStandard, rotation, x, &ks, |i, acc| {
        let block = blocks[i];
        let (qf, jf) = (block.q as f64, block.j as f64);
        let log_q = qf.ln();
        let lower = 2.0 * jf * qf * log_q - 2.0 * jf * qf;
        let upper = 2.0 * (jf + 1.0) * qf * log_q
            + 2.0 * (jf + 1.0) * qf
            + 4.0 * block.q_next as f64 * (2.0 + jf.ln());
        let value = acc.trimmed_sum();
        BlockCheck {
            block,
            value,
            lower,
            upper,
            pass: lower <= value && value <= upper,
        }
    })
}

pub fn lemma_block_bounds_check(
    rotation: Rotation,
    x: TorusPoint,
    q: u64,
    q_next: u64,
    j: u64,
    k: Option<u64>,
) -> Result<BlockCheck> {
    let block = Block::new(q, q_next, j, k)?;
    Ok(lemma_block_bounds_checks(rotation, x, &[block])?.remove(0))
}

/// `S_q(phi_gamma)(x) <= C (q^gamma + phi_gamma(x_min,q))` at each `q`.
pub fn phigamma_sum_checks(rotation: Rotation, x: TorusPoint, gamma: f64, qs: &[u64], c: f64) -> Result<Vec<BoundCheck>> {
    let obs = Observable::phi_gamma(gamma)?;
    at_checkpoints(&obs, rotation, x, qs, |i, acc| {
        let bound = c * ((qs[i] as f64).powf(gamma) + acc.max_entry());
        let lhs = acc.sum();
        BoundCheck {
            q: qs[i],
            lhs,
            bound,
            pass: lhs <= bound,
        }
    })
}

pub fn phigamma_sum_check(rotation: Rotation, x: TorusPoint, gamma: f64, q: u64, c: f64) -> Result<BoundCheck> {
    Ok(phigamma_sum_checks(rotation, x, gamma, &[q], c)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{angle_value, ContinuedFraction};

    fn golden() -> Rotation {
        Rotation::new(&angle_value(&ContinuedFraction::golden(), 128).unwrap())
    }

    fn point(x: f64) -> TorusPoint {
        TorusPoint::from_f64(x).unwrap()
    }

    #[test]
    fn first_terms() {
        let acc = birkhoff_sum(&Observable::PhiStandard, golden(), point(0.5), 1).unwrap();
        assert_eq!(acc.sum(), 4.0);
        let acc = birkhoff_sum(&Observable::PhiStandard, golden(), point(0.25), 1).unwrap();
        assert!((acc.sum() - 16.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trimming_identity_and_argmax() {
        let mut acc = BirkhoffAccumulator::new(Observable::PhiStandard, point(0.3), golden(), 5000).unwrap();
        let mut prev = 0.0;
        for _ in 0..5000 {
            acc.accumulate().unwrap();
            assert_eq!(acc.sum(), acc.trimmed_sum() + acc.max_entry());
            let (d, k) = acc.x_min().unwrap();
            assert_eq!(k, acc.argmax());
            assert_eq!(acc.max_entry(), 1.0 / (d.to_f64() * (1.0 - d.to_f64())));
            assert!(acc.sum() > prev);
            assert!(acc.sum() >= 4.0 * acc.n() as f64);
            prev = acc.sum();
        }
    }

    #[test]
    fn pole_trips_the_guard() {
        let err = birkhoff_sum(&Observable::PhiStandard, golden(), TorusPoint::ZERO, 3).unwrap_err();
        assert!(matches!(err, Error::NearSingularity { step: 0, .. }));
    }

    #[test]
    fn first_ratio() {
        let x = point(0.3);
        let s = extravagance_series(&Observable::PhiStandard, x, golden(), 4, &SampleSchedule::default()).unwrap();
        let phi0 = Observable::PhiStandard.eval(&x, 0).unwrap().value;
        let p1 = golden().point(&x, 1).unwrap();
        let phi1 = Observable::PhiStandard.eval(&p1, 1).unwrap().value;
        assert_eq!(s[0].n, 1);
        assert_eq!(s[0].ratio, phi1 / phi0);
    }

    #[test]
    fn theta_with_zero_shift_is_one() {
        let s = theta_series(point(0.3), TorusPoint::ZERO, golden(), 1000, &SampleSchedule::default()).unwrap();
        assert!(s.iter().all(|t| t.theta == 1.0));
    }

    #[test]
    fn table_variation_and_integral() {
        let half = BvTable::indicator(rat(0, 1), rat(1, 2)).unwrap();
        assert_eq!(*half.variation(), rat(2, 1));
        assert_eq!(*half.integral(), rat(1, 2));
        let mid = BvTable::indicator(rat(1, 4), rat(1, 2)).unwrap();
        assert_eq!(*mid.variation(), rat(2, 1));
        assert_eq!(*mid.integral(), rat(1, 4));
        let saw = BvTable::sawtooth();
        assert_eq!(*saw.variation(), rat(2, 1));
        assert_eq!(*saw.integral(), rat(1, 2));
        assert_eq!(saw.eval_exact(&rat(1, 3)), rat(1, 3));
        assert!(BvTable::indicator(rat(1, 2), rat(1, 2)).is_err());
    }

    #[test]
    fn denjoy_koksma_examples() {
        let f = BvTable::indicator(rat(0, 1), rat(1, 2)).unwrap();
        // q_10 of the golden mean
        let r = dk_residual(&f, golden(), point(0.3), 89).unwrap();
        assert!(r.pass && r.variation == 2.0);
        let c = BvTable::constant(rat(3, 4));
        let r = dk_residual(&c, golden(), point(0.3), 89).unwrap();
        assert_eq!((r.residual, r.variation), (0.0, 0.0));
    }

    #[test]
    fn block_outside_range_is_rejected() {
        assert!(lemma_block_bounds_check(golden(), point(0.3), 5, 8, 1, None).is_err());
        assert!(lemma_block_bounds_check(golden(), point(0.3), 5, 8, 0, None).is_err());
    }

    #[test]
    fn gamma_must_exceed_one() {
        assert!(phigamma_sum_check(golden(), point(0.3), 1.0, 8, 50.0).is_err());
    }

    #[test]
    fn fast_run_matches_term_by_term() {
        let x = point(0.3141592653589793);
        let mut fast = BirkhoffAccumulator::new(Observable::PhiStandard, x, golden(), 5000).unwrap();
        let mut slow = fast.clone();
        fast.run(1234).unwrap();
        fast.run(3000).unwrap();
        for _ in 0..4234 {
            slow.accumulate().unwrap();
        }
        assert_eq!(fast.sum(), slow.sum());
        assert_eq!(fast.trimmed_sum(), slow.trimmed_sum());
        assert_eq!((fast.max_entry(), fast.argmax()), (slow.max_entry(), slow.argmax()));
        assert_eq!(fast.x_min(), slow.x_min());
        assert_eq!(fast.error_bound(), slow.error_bound());
        assert_eq!(fast.last_term(), slow.last_term());
    }

}
