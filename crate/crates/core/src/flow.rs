//! The time change of the linear flow on `T^2` with velocity `rho(z) (1, alpha)`.
//!
//! The orbit is the straight line `z(s) = z0 + s (1, alpha)`, so the position is
//! exact in the arc parameter `s` and only the elapsed time
//! `t(s) = int_0^s ds / rho(z(s))` needs numerical integration. The line is cut
//! into pieces: outside the two `eps`-balls `rho` is bounded below and the
//! integral is smooth; inside a ball the substitution `s - s* = (a/L) tan(theta)`
//! around the closest approach `s*` (impact distance `a`, `L = |(1, alpha)|`)
//! removes the near-pole of `1/rho`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{Rotation, TorusPoint};

/// Relative tolerance of every piece of the time integral.
pub const TIME_TOLERANCE: f64 = 1e-10;

/// Longest stretch of line integrated as one piece outside the balls.
const MAX_OUTSIDE_PIECE: f64 = 0.5;

/// Recursion limit of the adaptive quadrature.
const MAX_DEPTH: u32 = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedKind {
    /// `rho = f_p f_q`, `f_w(z) = sin^2(pi (z_x - w_x)) + sin^2(pi (z_y - w_y))`.
    ProductSineSquares,
    /// `rho = 1`: the plain linear flow, for testing.
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ball {
    P,
    Q,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowParams {
    alpha: f64,
    rotation: Rotation,
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub speed: SpeedKind,
    pub epsilon: f64,
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed representative of `x mod 1` in `[-1/2, 1/2)`.
fn centered(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

fn torus_gap(a: [f64; 2], b: [f64; 2]) -> f64 {
    centered(a[0] - b[0]).hypot(centered(a[1] - b[1]))
}

fn sine_squares(dx: f64, dy: f64) -> f64 {
    let (sx, sy) = ((PI * dx).sin(), (PI * dy).sin());
    sx * sx + sy * sy
}

impl FlowParams {
    pub fn new(rotation: Rotation, p: [f64; 2], q: [f64; 2], speed: SpeedKind, epsilon: f64) -> Result<Self> {
        let in_unit = |w: [f64; 2]| w.iter().all(|c| (0.0..1.0).contains(c));
        if !in_unit(p) || !in_unit(q) {
            return Err(Error::domain("stopping points must have coordinates in [0, 1)"));
        }
        if !(epsilon > 0.0 && epsilon < 0.125) {
            return Err(Error::domain(format!("ball radius must lie in (0, 1/8), got {epsilon}")));
        }
        if torus_gap(p, q) <= 2.0 * epsilon {
            return Err(Error::domain(format!(
                "stopping points are {} apart; the balls of radius {epsilon} must be disjoint",
                torus_gap(p, q)
            )));
        }
        Ok(FlowParams {
            alpha: rotation.to_f64(),
            rotation,
            p,
            q,
            speed,
            epsilon,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn center(&self, ball: Ball) -> [f64; 2] {
        match ball {
            Ball::P => self.p,
            Ball::Q => self.q,
        }
    }

    fn other(&self, ball: Ball) -> [f64; 2] {
        match ball {
            Ball::P => self.q,
            Ball::Q => self.p,
        }
    }
}

/// `rho(z)`; zero exactly at `p` and `q` for the product family.
pub fn speed(params: &FlowParams, z: [f64; 2]) -> f64 {
    match params.speed {
        SpeedKind::Unit => 1.0,
        SpeedKind::ProductSineSquares => {
            let f = |w: [f64; 2]| sine_squares(z[0] - w[0], z[1] - w[1]);
            f(params.p) * f(params.q)
        }
    }
}

/// The lift `z0 + s (1, alpha)`. Whole units of `s` are rotated exactly in
/// fixed point so positions stay accurate far along the line.
#[derive(Clone, Copy, Debug)]
struct Line {
    origin: [f64; 2],
    alpha: f64,
    rotation: Rotation,
}

impl Line {
    /// `frac(alpha * i)`.
    fn turn(&self, i: f64) -> f64 {
        let k = i as i64;
        let p = self.rotation.point_unchecked(&TorusPoint::ZERO, k.unsigned_abs(), 0.0);
        let f = p.to_f64();
        if k < 0 {
            frac(-f)
        } else {
            f
        }
    }

    fn point(&self, s: f64) -> [f64; 2] {
        let whole = s.floor();
        let part = s - whole;
        [
            frac(self.origin[0] + part),
            frac(self.origin[1] + self.turn(whole) + self.alpha * part),
        ]
    }
}

/// Where the line passes a stopping point `w` near `x = w_x + i`.
#[derive(Clone, Copy, Debug)]
struct Passage {
    ball: Ball,
    /// Arc parameter of the closest approach.
    s_star: f64,
    /// Signed offset `delta` along `y` at `x = w_x + i`.
    delta: f64,
    /// Impact distance `|delta| / L`.
    impact: f64,
    /// Half-length (in `s`) of the chord inside the ball.
    half: f64,
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Outside { s0: f64, s1: f64 },
    Inside { passage: Passage, s0: f64, s1: f64 },
}

impl Piece {
    fn end(&self) -> f64 {
        match *self {
            Piece::Outside { s1, .. } | Piece::Inside { s1, .. } => s1,
        }
    }

    fn ball(&self) -> Option<Ball> {
        match self {
            Piece::Outside { .. } => None,
            Piece::Inside { passage, .. } => Some(passage.ball),
        }
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 on `[a, b]`: the estimate and its error.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let center = f(c);
    let mut kronrod = GK_WEIGHTS[7] * center;
    let mut gauss = GAUSS_WEIGHTS[3] * center;
    for i in 0..7 {
        let (lo, hi) = (f(c - h * GK_NODES[i]), f(c + h * GK_NODES[i]));
        kronrod += GK_WEIGHTS[i] * (lo + hi);
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * (lo + hi);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: (f64, f64), depth: u32) -> Result<f64> {
        let (value, err) = whole;
        if !value.is_finite() {
            return Err(Error::Integration(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= TIME_TOLERANCE * value.abs() || err < 1e-300 {
            return Ok(value);
        }
        if depth == MAX_DEPTH {
            return Err(Error::Integration(format!(
                "no convergence on [{a:e}, {b:e}]: estimate {value:e}, error {err:e}"
            )));
        }
        let m = 0.5 * (a + b);
        Ok(go(f, a, m, gk15(f, a, m), depth + 1)? + go(f, m, b, gk15(f, m, b), depth + 1)?)
    }
    if b <= a {
        return Ok(0.0);
    }
    go(f, a, b, gk15(f, a, b), 0)
}

/// Smallest `x` in `[lo, hi]` with `g(x) >= target` for nondecreasing `g`,
/// to relative width `1e-14`.
fn bisect(g: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        if g(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Walks the line piece by piece from an arc parameter onward.
struct Walker<'a> {
    params: &'a FlowParams,
    line: Line,
    s: f64,
    next_lift: [f64; 2],
}

impl<'a> Walker<'a> {
    fn new(params: &'a FlowParams, origin: [f64; 2], s: f64) -> Self {
        let line = Line {
            origin,
            alpha: params.alpha,
            rotation: params.rotation,
        };
        let first = |w: [f64; 2]| (s - (w[0] - origin[0])).floor() - 1.0;
        Walker {
            params,
            line,
            s,
            next_lift: [first(params.p), first(params.q)],
        }
    }

    fn passage(&self, ball: Ball, i: f64) -> Passage {
        let w = self.params.center(ball);
        let alpha = self.params.alpha;
        let dx = w[0] + i - self.line.origin[0];
        // y of the line at x = w_x + i, minus w_y, reduced mod 1
        let whole = dx.floor();
        let part = dx - whole;
        let delta = centered(self.line.origin[1] + self.line.turn(whole) + alpha * part - w[1]);
        let l2 = 1.0 + alpha * alpha;
        let impact = delta.abs() / l2.sqrt();
        let eps = self.params.epsilon;
        let half = if impact < eps {
            ((eps - impact) * (eps + impact)).sqrt() / l2.sqrt()
        } else {
            -1.0
        };
        Passage {
            ball,
            s_star: dx - alpha * delta / l2,
            delta,
            impact,
            half,
        }
    }

    /// The next passage through a ball that ends after `self.s`.
    fn upcoming(&mut self, idx: usize) -> Passage {
        let ball = if idx == 0 { Ball::P } else { Ball::Q };
        loop {
            let p = self.passage(ball, self.next_lift[idx]);
            if p.half >= 0.0 && p.s_star + p.half > self.s {
                return p;
            }
            self.next_lift[idx] += 1.0;
        }
    }

    fn next_piece(&mut self) -> Piece {
        let a = self.upcoming(0);
        let b = self.upcoming(1);
        let (first, idx) = if a.s_star - a.half <= b.s_star - b.half {
            (a, 0)
        } else {
            (b, 1)
        };
        let start = first.s_star - first.half;
        let piece = if start <= self.s {
            self.next_lift[idx] += 1.0;
            Piece::Inside {
                passage: first,
                s0: self.s,
                s1: first.s_star + first.half,
            }
        } else {
            Piece::Outside {
                s0: self.s,
                s1: start.min(self.s + MAX_OUTSIDE_PIECE),
            }
        };
        self.s = piece.end();
        piece
    }

    /// Offset from the ball's center at arc parameter `s_star + u`.
    fn offset(&self, passage: &Passage, u: f64) -> [f64; 2] {
        let alpha = self.params.alpha;
        // u measured from x = w_x + i
        let from_x = u - alpha * passage.delta / (1.0 + alpha * alpha);
        [from_x, passage.delta + alpha * from_x]
    }

    fn theta(&self, passage: &Passage, s: f64) -> f64 {
        let l = (1.0 + self.params.alpha * self.params.alpha).sqrt();
        (l * (s - passage.s_star)).atan2(passage.impact)
    }

    /// Time spent on the piece up to arc parameter `s`.
    fn time_to(&self, piece: &Piece, s: f64) -> Result<f64> {
        let params = self.params;
        if params.speed == SpeedKind::Unit {
            let s0 = match *piece {
                Piece::Outside { s0, .. } | Piece::Inside { s0, .. } => s0,
            };
            return Ok(s - s0);
        }
        match *piece {
            Piece::Outside { s0, .. } => {
                integrate(&|s| 1.0 / speed(params, self.line.point(s)), s0, s)
            }
            Piece::Inside { passage, s0, .. } => {
                if passage.impact == 0.0 {
                    // The line runs into the stopping point and never arrives.
                    if s >= passage.s_star {
                        return Ok(f64::INFINITY);
                    }
                    return integrate(&|s| 1.0 / speed(params, self.line.point(s)), s0, s);
                }
                let alpha = params.alpha;
                let l = (1.0 + alpha * alpha).sqrt();
                let a = passage.impact;
                let w = params.center(passage.ball);
                let other = params.other(passage.ball);
                let integrand = |theta: f64| {
                    let u = a / l * theta.tan();
                    let d = self.offset(&passage, u);
                    let r2 = d[0] * d[0] + d[1] * d[1];
                    let near = PI * PI * r2 / sine_squares(d[0], d[1]);
                    let far = sine_squares(w[0] + d[0] - other[0], w[1] + d[1] - other[1]);
                    near / far
                };
                let scale = 1.0 / (PI * PI * a * l);
                Ok(scale * integrate(&integrand, self.theta(&passage, s0), self.theta(&passage, s))?)
            }
        }
    }

    /// Arc parameter on the piece at which `elapsed` time has passed.
    fn locate(&self, piece: &Piece, elapsed: f64) -> Result<f64> {
        let (s0, s1) = match *piece {
            Piece::Outside { s0, s1 } | Piece::Inside { s0, s1, .. } => (s0, s1),
        };
        if self.params.speed == SpeedKind::Unit {
            return Ok((s0 + elapsed).min(s1));
        }
        let hi = match piece {
            Piece::Inside { passage, .. } if passage.impact == 0.0 => passage.s_star,
            _ => s1,
        };
        bisect(|s| self.time_to(piece, s), s0, hi, elapsed)
    }
}

/// Position on the flow line and elapsed time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowState {
    /// Start of the flow line.
    pub origin: [f64; 2],
    /// Current point of `T^2`.
    pub z: [f64; 2],
    pub t: f64,
    /// Arc parameter: `z = origin + s (1, alpha) mod 1`.
    pub s: f64,
}

impl FlowState {
    pub fn start(z: [f64; 2]) -> Result<Self> {
        if !z.iter().all(|c| (0.0..1.0).contains(c)) {
            return Err(Error::domain("start point must have coordinates in [0, 1)"));
        }
        Ok(FlowState {
            origin: z,
            z,
            t: 0.0,
            s: 0.0,
        })
    }

    /// How far `z` is from the flow line: with the lift `Z_x = z0_x + s`,
    /// the larger of `|z_x - Z_x|` and `|(z_y - z0_y) - alpha (Z_x - z0_x)|`,
    /// both taken mod 1.
    pub fn line_defect(&self, params: &FlowParams) -> f64 {
        let line = Line {
            origin: self.origin,
            alpha: params.alpha,
            rotation: params.rotation,
        };
        let whole = self.s.floor();
        let x_gap = centered(self.z[0] - self.origin[0] - (self.s - whole));
        let y_gap = centered(self.z[1] - self.origin[1] - line.turn(whole) - params.alpha * (self.s - whole));
        x_gap.abs().max(y_gap.abs())
    }

    fn stationary(&self, params: &FlowParams) -> bool {
        params.speed != SpeedKind::Unit && speed(params, self.z) == 0.0
    }
}

/// Flow for time `dt`. Negative `dt` is accepted only at unit speed.
pub fn advance(state: &FlowState, params: &FlowParams, dt: f64) -> Result<FlowState> {
    if !dt.is_finite() {
        return Err(Error::domain("time step must be finite"));
    }
    if dt <= 0.0 && (params.speed != SpeedKind::Unit || dt == 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let mut next = *state;
    next.t = state.t + dt;
    if state.stationary(params) {
        return Ok(next);
    }
    if params.speed == SpeedKind::Unit {
        next.s = state.s + dt;
        next.z = Walker::new(params, state.origin, next.s).line.point(next.s);
        return Ok(next);
    }
    let mut walker = Walker::new(params, state.origin, state.s);
    let mut remaining = dt;
    loop {
        let piece = walker.next_piece();
        let spent = walker.time_to(&piece, piece.end())?;
        if spent >= remaining {
            next.s = walker.locate(&piece, remaining)?;
            next.z = walker.line.point(next.s);
            return Ok(next);
        }
        remaining -= spent;
    }
}

/// Occupation of the two balls along one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub t_grid: Vec<f64>,
    pub z: Vec<[f64; 2]>,
    pub mass_p: Vec<f64>,
    pub mass_q: Vec<f64>,
    pub mass_else: Vec<f64>,
}

/// `n` logarithmically spaced times from `t_min` to `t_max`.
pub fn log_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && n >= 2) {
        return Err(Error::domain("log grid needs 0 < t_min < t_max and n >= 2"));
    }
    let ratio = (t_max / t_min).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { t_max } else { t_min * (ratio * i as f64).exp() })
        .collect())
}

/// Empirical measures `mu_t` of the two balls at each grid time, from exact
/// sojourn bookkeeping: time is split into pieces inside `B(p)`, inside
/// `B(q)` and elsewhere.
pub fn empirical_measures(start: [f64; 2], params: &FlowParams, grid: &[f64]) -> Result<EmpiricalReport> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("time grid must be positive and strictly increasing"));
    }
    let state = FlowState::start(start)?;
    let mut report = EmpiricalReport {
        t_grid: grid.to_vec(),
        z: Vec::with_capacity(grid.len()),
        mass_p: Vec::with_capacity(grid.len()),
        mass_q: Vec::with_capacity(grid.len()),
        mass_else: Vec::with_capacity(grid.len()),
    };
    let mut push = |z: [f64; 2], t: f64, in_p: f64, in_q: f64| {
        let (mp, mq) = ((in_p / t).clamp(0.0, 1.0), (in_q / t).clamp(0.0, 1.0));
        report.z.push(z);
        report.mass_p.push(mp);
        report.mass_q.push(mq);
        report.mass_else.push((1.0 - mp - mq).max(0.0));
    };
    if state.stationary(params) {
        let at_p = torus_gap(start, params.p) < params.epsilon;
        for &t in grid {
            if at_p {
                push(start, t, t, 0.0);
            } else {
                push(start, t, 0.0, t);
            }
        }
        return Ok(report);
    }

    let mut walker = Walker::new(params, start, 0.0);
    let (mut t, mut in_p, mut in_q) = (0.0, 0.0, 0.0);
    let mut next = 0;
    while next < grid.len() {
        let piece = walker.next_piece();
        let spent = walker.time_to(&piece, piece.end())?;
        while next < grid.len() && t + spent >= grid[next] {
            let elapsed = grid[next] - t;
            let s = walker.locate(&piece, elapsed)?;
            let (p, q) = match piece.ball() {
                Some(Ball::P) => (in_p + elapsed, in_q),
                Some(Ball::Q) => (in_p, in_q + elapsed),
                None => (in_p, in_q),
            };
            push(walker.line.point(s), grid[next], p, q);
            next += 1;
        }
        match piece.ball() {
            Some(Ball::P) => in_p += spent,
            Some(Ball::Q) => in_q += spent,
            None => {}
        }
        t += spent;
    }
    Ok(report)
}

/// Late-time extremes of the ball masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistoricIndicator {
    pub limsup_p: f64,
    pub liminf_p: f64,
    pub limsup_q: f64,
    pub liminf_q: f64,
    /// Both balls come close to full and to empty mass.
    pub extreme: bool,
}

/// Masses above this count as "close to full" for the extreme flag.
pub const EXTREME_HIGH: f64 = 0.9;
/// Masses below this count as "close to empty".
pub const EXTREME_LOW: f64 = 0.1;

/// Running sup/inf of the masses over the last decade of the grid.
pub fn historic_indicator(report: &EmpiricalReport) -> Result<HistoricIndicator> {
    let (first, last) = match (report.t_grid.first(), report.t_grid.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::domain("empty report")),
    };
    if last < 100.0 * first {
        return Err(Error::domain(format!(
            "grid spans {first:e}..{last:e}, less than two decades"
        )));
    }
    let late: Vec<usize> = (0..report.t_grid.len())
        .filter(|&i| report.t_grid[i] >= last / 10.0)
        .collect();
    let extremes = |m: &[f64]| {
        late.iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &i| (hi.max(m[i]), lo.min(m[i])))
    };
    let (limsup_p, liminf_p) = extremes(&report.mass_p);
    let (limsup_q, liminf_q) = extremes(&report.mass_q);
    Ok(HistoricIndicator {
        limsup_p,
        liminf_p,
        limsup_q,
        liminf_q,
        extreme: limsup_p > EXTREME_HIGH
            && limsup_q > EXTREME_HIGH
            && liminf_p < EXTREME_LOW
            && liminf_q < EXTREME_LOW,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{angle_value, ContinuedFraction};

    fn golden() -> Rotation {
        Rotation::new(&angle_value(&ContinuedFraction::golden(), 128).unwrap())
    }

    fn params(speed: SpeedKind) -> FlowParams {
        FlowParams::new(golden(), [0.0, 0.0], [0.5, 0.5], speed, 0.05).unwrap()
    }

    #[test]
    fn speed_values() {
        let p = params(SpeedKind::ProductSineSquares);
        assert_eq!(speed(&p, [0.0, 0.0]), 0.0);
        assert_eq!(speed(&p, [0.5, 0.5]), 0.0);
        assert!((speed(&p, [0.25, 0.25]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_overlapping_balls() {
        assert!(FlowParams::new(golden(), [0.0, 0.0], [0.05, 0.0], SpeedKind::Unit, 0.05).is_err());
        assert!(FlowParams::new(golden(), [0.0, 0.0], [0.5, 0.5], SpeedKind::Unit, 0.2).is_err());
    }

    #[test]
    fn gauss_kronrod_is_exact_for_polynomials() {
        let v = integrate(&|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        let v = integrate(&|x: f64| 1.0 / (1.0 + x * x), -1e3, 1e3).unwrap();
        assert!((v - 2.0 * 1e3f64.atan()).abs() < 1e-9);
    }

    #[test]
    fn unit_speed_moves_along_the_line() {
        let p = params(SpeedKind::Unit);
        let s0 = FlowState::start([0.3, 0.7]).unwrap();
        let s1 = advance(&s0, &p, 2.5).unwrap();
        assert_eq!(s1.s, 2.5);
        let expect = [frac(0.3 + 2.5), frac(0.7 + 2.5 * p.alpha())];
        assert!(torus_gap(s1.z, expect) < 1e-14);
        let back = advance(&s1, &p, -2.5).unwrap();
        assert!(torus_gap(back.z, s0.z) < 1e-12);
    }

    #[test]
    fn start_at_stopping_point_is_stationary() {
        let p = params(SpeedKind::ProductSineSquares);
        let s = advance(&FlowState::start([0.0, 0.0]).unwrap(), &p, 5.0).unwrap();
        assert_eq!((s.z, s.t), ([0.0, 0.0], 5.0));
        let r = empirical_measures([0.0, 0.0], &p, &[1.0, 10.0]).unwrap();
        assert_eq!(r.mass_p, [1.0, 1.0]);
    }

    #[test]
    fn time_is_additive() {
        let p = params(SpeedKind::ProductSineSquares);
        let s0 = FlowState::start([0.3, 0.1]).unwrap();
        let once = advance(&s0, &p, 7.0).unwrap();
        let twice = advance(&advance(&s0, &p, 3.0).unwrap(), &p, 4.0).unwrap();
        assert!((once.s - twice.s).abs() < 1e-8, "{} {}", once.s, twice.s);
        assert!(once.line_defect(&p) < 1e-12);
    }

    #[test]
    fn masses_partition_time() {
        let p = params(SpeedKind::ProductSineSquares);
        let r = empirical_measures([0.3, 0.1], &p, &log_grid(1.0, 1e3, 20).unwrap()).unwrap();
        for i in 0..r.t_grid.len() {
            let total = r.mass_p[i] + r.mass_q[i] + r.mass_else[i];
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn indicator_needs_two_decades() {
        let r = EmpiricalReport {
            t_grid: vec![1.0, 10.0],
            z: vec![[0.0; 2]; 2],
            mass_p: vec![0.2; 2],
            mass_q: vec![0.2; 2],
            mass_else: vec![0.6; 2],
        };
        assert!(historic_indicator(&r).is_err());
        let r = EmpiricalReport {
            t_grid: vec![1.0, 10.0, 100.0],
            z: vec![[0.0; 2]; 3],
            mass_p: vec![0.2; 3],
            mass_q: vec![0.3; 3],
            mass_else: vec![0.5; 3],
        };
        let h = historic_indicator(&r).unwrap();
        assert_eq!((h.limsup_p, h.liminf_p, h.limsup_q, h.liminf_q), (0.2, 0.2, 0.3, 0.3));
        assert!(!h.extreme);
    }
}
