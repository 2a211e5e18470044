//! Self-describing text form of a continued fraction: the source kind, its
//! parameters and the materialized coefficient prefix, all big integers as
//! decimal strings.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{luczak_coefficients, ContinuedFraction, Source};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSpec {
    Rational {
        p: String,
        q: String,
    },
    /// `(a + b*sqrt(d)) / c`
    Surd {
        a: String,
        b: String,
        c: String,
        d: String,
    },
    Coefficients {
        prefix: Vec<String>,
        #[serde(default)]
        period: Vec<String>,
    },
    /// `a_n = c^ceil(b^n)`; `b` may be written as `"3/2"`.
    Luczak {
        b: String,
        c: String,
        #[serde(default = "default_luczak_count")]
        count: usize,
    },
    Golden,
    Silver,
}

fn default_luczak_count() -> usize {
    1
}

fn parse<T: FromStr>(field: &str, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::domain(format!("field `{field}`: cannot parse {text:?} as an integer")))
}

fn parse_ratio(field: &str, text: &str) -> Result<BigRational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = parse(field, d)?;
            if d == BigInt::from(0) {
                return Err(Error::domain(format!("field `{field}`: zero denominator")));
            }
            Ok(BigRational::new(parse(field, n)?, d))
        }
        None => Ok(BigRational::from_integer(parse(field, text)?)),
    }
}

fn parse_list(field: &str, items: &[String]) -> Result<Vec<BigUint>> {
    items.iter().map(|s| parse(field, s)).collect()
}

impl AlphaSpec {
    pub fn build(&self) -> Result<ContinuedFraction> {
        match self {
            AlphaSpec::Rational { p, q } => {
                ContinuedFraction::from_rational(parse::<BigInt>("p", p)?, parse::<BigInt>("q", q)?)
            }
            AlphaSpec::Surd { a, b, c, d } => ContinuedFraction::from_quadratic(
                parse::<BigInt>("a", a)?,
                parse::<BigInt>("b", b)?,
                parse::<BigInt>("c", c)?,
                parse::<BigUint>("d", d)?,
            ),
            AlphaSpec::Coefficients { prefix, period } => ContinuedFraction::from_coefficients(
                parse_list("prefix", prefix)?,
                parse_list("period", period)?,
            ),
            AlphaSpec::Luczak { b, c, count } => {
                luczak_coefficients(&parse_ratio("b", b)?, &parse("c", c)?, *count)
            }
            AlphaSpec::Golden => Ok(ContinuedFraction::golden()),
            AlphaSpec::Silver => Ok(ContinuedFraction::silver()),
        }
    }

    pub fn of(cf: &ContinuedFraction) -> AlphaSpec {
        let list = |v: &[BigUint]| v.iter().map(|a| a.to_string()).collect();
        match cf.source() {
            Source::Rational { p, q } => AlphaSpec::Rational {
                p: p.to_string(),
                q: q.to_string(),
            },
            Source::Surd { a, b, c, d } => AlphaSpec::Surd {
                a: a.to_string(),
                b: b.to_string(),
                c: c.to_string(),
                d: d.to_string(),
            },
            Source::Coefficients { prefix, period } => AlphaSpec::Coefficients {
                prefix: list(prefix),
                period: list(period),
            },
            Source::Luczak { b, c } => AlphaSpec::Luczak {
                b: b.to_string(),
                c: c.to_string(),
                count: cf.materialized().max(1),
            },
        }
    }
}

/// A continued fraction together with its materialized prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfRecord {
    pub source: AlphaSpec,
    pub coefficients: Vec<String>,
}

impl CfRecord {
    pub fn capture(cf: &ContinuedFraction, count: usize) -> Result<CfRecord> {
        let coefficients = cf.prefix(count)?.iter().map(|a| a.to_string()).collect();
        Ok(CfRecord {
            source: AlphaSpec::of(cf),
            coefficients,
        })
    }

    /// Rebuild the continued fraction and check that its coefficients agree
    /// with the recorded prefix.
    pub fn restore(&self) -> Result<ContinuedFraction> {
        let cf = self.source.build()?;
        let recorded = parse_list("coefficients", &self.coefficients)?;
        let actual = cf.prefix(recorded.len())?;
        if actual != recorded {
            return Err(Error::domain(
                "field `coefficients`: recorded prefix disagrees with the source",
            ));
        }
        Ok(cf)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<CfRecord> {
        serde_json::from_str(text).map_err(|e| Error::domain(format!("cf record: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luczak_record_round_trips() {
        let cf = super::super::luczak(3, 2, 2, 4).unwrap();
        let record = CfRecord::capture(&cf, 4).unwrap();
        let text = record.to_json();
        assert!(text.contains("\"kind\": \"luczak\""));
        assert!(text.contains("\"3/2\""));
        let back = CfRecord::from_json(&text).unwrap().restore().unwrap();
        assert_eq!(back.prefix(4).unwrap(), cf.prefix(4).unwrap());
    }

    #[test]
    fn tampered_prefix_is_rejected() {
        let cf = ContinuedFraction::golden();
        let mut record = CfRecord::capture(&cf, 3).unwrap();
        record.coefficients[2] = "2".into();
        assert!(matches!(record.restore(), Err(Error::Domain(_))));
    }

    #[test]
    fn bad_integer_names_the_field() {
        let spec = AlphaSpec::Rational {
            p: "x".into(),
            q: "3".into(),
        };
        let err = spec.build().unwrap_err().to_string();
        assert!(err.contains("`p`"), "{err}");
    }
}
