//! The series `sum W_n(alpha)` whose convergence separates rotation numbers
//! with extravagance 0 from those with extravagance infinity, and a
//! three-valued heuristic classifier for finite prefixes of it.
//!
//! ```text
//! W_n = (log q_{n+1} - log q_n) / log q_n                          if q_{n+1} <  2 q_n log q_n
//! W_n = max{1, loglog q_n - loglog(q_{n+1} / (q_n log q_n))} / log q_n   otherwise
//! ```
//!
//! All logarithms are natural. Terms with `q_n < 3` are skipped.

use std::cmp::Ordering;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize, Serializer};

use crate::cf::{continuants, ContinuedFraction, ConvergentTable};
use crate::error::{Error, Result};
use crate::numeric::{cmp_int_with_q_ln_q, ln_biguint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `q_{n+1} < 2 q_n log q_n`
    SmallGap,
    /// `q_{n+1} >= 2 q_n log q_n`
    LargeGap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WTerm {
    pub n: usize,
    pub regime: Regime,
    pub value: f64,
    pub log_qn: f64,
    pub log_qn1: f64,
}

/// Exact regime decision; the threshold `2 q_n log q_n` is irrational, so
/// the comparison never ties.
pub fn regime_for(q_n: &BigUint, q_next: &BigUint) -> Regime {
    match cmp_int_with_q_ln_q(q_next, 2, q_n) {
        Ordering::Less => Regime::SmallGap,
        _ => Regime::LargeGap,
    }
}

/// `W_n` from the two denominators, or `None` when `q_n < 3`.
pub fn w_from_denominators(n: usize, q_n: &BigUint, q_next: &BigUint) -> Option<WTerm> {
    if *q_n < BigUint::from(3u32) {
        return None;
    }
    let log_qn = ln_biguint(q_n);
    let log_qn1 = ln_biguint(q_next);
    let regime = regime_for(q_n, q_next);
    let value = match regime {
        Regime::SmallGap => (log_qn1 - log_qn) / log_qn,
        Regime::LargeGap => {
            let loglog = log_qn.ln();
            // log(q_{n+1} / (q_n log q_n)) >= log 2 in this regime
            let inner = (log_qn1 - log_qn - loglog).max(std::f64::consts::LN_2);
            1f64.max(loglog - inner.ln()) / log_qn
        }
    };
    Some(WTerm {
        n,
        regime,
        value,
        log_qn,
        log_qn1,
    })
}

/// `W_n` for row `n` of a convergent table. `Ok(None)` signals a skipped
/// leading term (`q_n < 3`).
pub fn w_term(table: &ConvergentTable, n: usize) -> Result<Option<WTerm>> {
    let row = table
        .row(n)
        .ok_or_else(|| Error::domain(format!("convergent table has no row {n}")))?;
    let q_next = row
        .q_next
        .as_ref()
        .ok_or_else(|| Error::domain(format!("row {n} has no successor denominator")))?;
    Ok(w_from_denominators(n, &row.q, q_next))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    ConvergesHeuristic,
    DivergesHeuristic,
    Inconclusive,
}

/// Thresholds of the two heuristic rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyParams {
    /// Harmonic minorant: diverges if the late terms all satisfy `W_n >= kappa / n`.
    pub kappa: f64,
    /// Converges if the fitted geometric tail is below this.
    pub tail_tolerance: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            kappa: 0.1,
            tail_tolerance: 1e-6,
        }
    }
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesVerdict {
    pub n_max: usize,
    /// Number of terms that entered the partial sum.
    pub n_terms: usize,
    pub partial_sum: f64,
    /// Geometric bound on the remaining tail; infinite when no decay was fitted.
    #[serde(serialize_with = "finite_or_null")]
    pub tail_estimate: f64,
    pub verdict: Verdict,
    pub rationale: String,
    pub truncated: bool,
    pub params: ClassifyParams,
    #[serde(skip)]
    pub terms: Vec<WTerm>,
    #[serde(skip)]
    pub partial_sums: Vec<f64>,
}

pub fn classify(cf: &ContinuedFraction, n_max: usize) -> Result<SeriesVerdict> {
    classify_with(cf, n_max, ClassifyParams::default())
}

pub fn classify_with(
    cf: &ContinuedFraction,
    n_max: usize,
    params: ClassifyParams,
) -> Result<SeriesVerdict> {
    if n_max < 10 {
        return Err(Error::domain(format!("classify needs n_max >= 10, got {n_max}")));
    }
    // Only denominators are needed.
    let q = continuants(cf, n_max + 1)?;
    let available = q.len().saturating_sub(2).min(n_max);
    let truncated = available < n_max;

    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut sum = 0.0;
    for n in 1..=available {
        if let Some(term) = w_from_denominators(n, &q[n], &q[n + 1]) {
            sum += term.value;
            partial_sums.push(sum);
            terms.push(term);
        }
    }

    let window = available.div_ceil(2);
    let first_in_window = available + 1 - window;
    let late: Vec<&WTerm> = terms.iter().filter(|t| t.n >= first_in_window).collect();
    let window_complete = late.len() == window && window > 0;

    let diverges = window_complete
        && late
            .iter()
            .all(|t| t.value >= params.kappa / t.n as f64);

    let mut ratio = f64::INFINITY;
    if window_complete && late.len() >= 2 {
        ratio = late
            .windows(2)
            .map(|w| w[1].value / w[0].value)
            .fold(0.0, f64::max);
    }
    let tail_estimate = match late.last() {
        Some(last) if ratio < 1.0 => last.value * ratio / (1.0 - ratio),
        _ => f64::INFINITY,
    };

    let (verdict, rationale) = if diverges {
        (
            Verdict::DivergesHeuristic,
            format!(
                "harmonic minorant: W_n >= {}/n for all n in [{first_in_window}, {available}]",
                params.kappa
            ),
        )
    } else if tail_estimate < params.tail_tolerance {
        (
            Verdict::ConvergesHeuristic,
            format!(
                "geometric tail: max ratio {ratio:.6e} over n in [{first_in_window}, {available}] \
                 bounds the tail by {tail_estimate:.6e} < {}",
                params.tail_tolerance
            ),
        )
    } else {
        let fit = if ratio < 1.0 {
            format!("geometric tail bound {tail_estimate:.6e} >= {}", params.tail_tolerance)
        } else {
            "no geometric decay (max ratio >= 1)".to_string()
        };
        (
            Verdict::Inconclusive,
            format!(
                "neither rule fired over n in [{first_in_window}, {available}]: \
                 some W_n < {}/n and {fit}",
                params.kappa
            ),
        )
    };

    Ok(SeriesVerdict {
        n_max,
        n_terms: terms.len(),
        partial_sum: sum,
        tail_estimate,
        verdict,
        rationale,
        truncated,
        params,
        terms,
        partial_sums,
    })
}
