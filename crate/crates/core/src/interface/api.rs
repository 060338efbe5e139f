//! Request and response types shared by the CLI and the HTTP service.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, OptimalP};
use crate::distributions::DistributionSpec;
use crate::empirical::{BandwidthRule, Sample};
use crate::error::{Error, Result};
use crate::intervals::{self, IntervalEstimate, Method, TestResult};
use crate::interface::input;

/// Any interval method, or Shoemaker's test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Interval(Method),
    Shoemaker,
}

impl FromStr for EstimateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("shoemaker") {
            Ok(EstimateMethod::Shoemaker)
        } else {
            s.parse::<Method>().map(EstimateMethod::Interval).map_err(|_| {
                Error::Parse(format!("unknown method '{s}'; expected one of rq, riqr, rvar, pb, f, shoemaker"))
            })
        }
    }
}

impl fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimateMethod::Interval(m) => m.fmt(f),
            EstimateMethod::Shoemaker => f.write_str("shoemaker"),
        }
    }
}

impl Serialize for EstimateMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimateMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn default_alpha() -> f64 {
    0.05
}

/// Two samples, given either as arrays (`x`, `y`) or as CSV text
/// (`x_csv`, `y_csv`) in the single-column format of the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_csv: Option<String>,
    pub method: EstimateMethod,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShoemakerOutput {
    pub method: EstimateMethod,
    #[serde(flatten)]
    pub result: TestResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimateOutput {
    Interval(IntervalEstimate),
    Test(ShoemakerOutput),
}

impl fmt::Display for EstimateOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimateOutput::Interval(e) => {
                write!(f, "{}", e.method)?;
                if let Some(p) = e.p {
                    write!(f, " (p = {p})")?;
                }
                write!(
                    f,
                    ": point {:.6}, {}% interval [{:.6}, {:.6}]",
                    e.point,
                    100.0 * (1.0 - e.alpha),
                    e.lower,
                    e.upper
                )
            }
            EstimateOutput::Test(t) => write!(
                f,
                "shoemaker (p = {}): Z = {:.6}, two-sided p-value {:.6}",
                t.result.p, t.result.statistic, t.result.p_value
            ),
        }
    }
}

/// Failure of a request, split by whether the request itself was invalid or a
/// well-formed request hit a method precondition on the data.
#[derive(Debug, Clone, PartialEq)]
pub enum RequestError {
    Invalid(Error),
    Precondition(Error),
}

impl RequestError {
    pub fn error(&self) -> &Error {
        match self {
            RequestError::Invalid(e) | RequestError::Precondition(e) => e,
        }
    }
}

impl fmt::Display for RequestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error().fmt(f)
    }
}

impl std::error::Error for RequestError {}

fn sample_from(values: Option<Vec<f64>>, csv: Option<String>, name: &str) -> Result<Sample> {
    let values = match (values, csv) {
        (Some(v), None) => v,
        (None, Some(text)) => {
            input::parse_column_str(&text).map_err(|e| Error::Parse(format!("{name}_csv: {e}")))?
        }
        (Some(_), Some(_)) => return Err(Error::Parse(format!("give either {name} or {name}_csv, not both"))),
        (None, None) => return Err(Error::Parse(format!("missing sample {name}"))),
    };
    if values.is_empty() {
        return Err(Error::Parse(format!("sample {name} is empty")));
    }
    Sample::new(values)
}

impl EstimateRequest {
    pub fn from_samples(x: Vec<f64>, y: Vec<f64>, method: EstimateMethod, p: Option<f64>, alpha: f64) -> Self {
        EstimateRequest {
            x: Some(x),
            y: Some(y),
            x_csv: None,
            y_csv: None,
            method,
            p,
            alpha,
            bandwidth: BandwidthRule::default(),
        }
    }

    pub fn run(self) -> std::result::Result<EstimateOutput, RequestError> {
        use RequestError::{Invalid, Precondition};
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Invalid(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha))));
        }
        match self.method {
            EstimateMethod::Interval(m) => m.check_p(self.p).map_err(Invalid)?,
            EstimateMethod::Shoemaker => match self.p {
                Some(p) if p > 0.0 && p < 0.5 => {}
                Some(p) => return Err(Invalid(Error::Domain(format!("shoemaker needs p in (0, 0.5), got {p}")))),
                None => return Err(Invalid(Error::Domain("shoemaker requires p".into()))),
            },
        }
        if let BandwidthRule::Fixed { b } = self.bandwidth {
            if !(b > 0.0 && b < 1.0) {
                return Err(Invalid(Error::Domain(format!("bandwidth must lie in (0, 1), got {b}"))));
            }
        }
        let x = sample_from(self.x, self.x_csv, "x").map_err(Invalid)?;
        let y = sample_from(self.y, self.y_csv, "y").map_err(Invalid)?;
        match self.method {
            EstimateMethod::Interval(m) => intervals::estimate(m, &x, &y, self.p, self.alpha, self.bandwidth)
                .map(EstimateOutput::Interval)
                .map_err(Precondition),
            EstimateMethod::Shoemaker => intervals::shoemaker_test(&x, &y, self.p.unwrap_or_default())
                .map(|result| EstimateOutput::Test(ShoemakerOutput { method: EstimateMethod::Shoemaker, result }))
                .map_err(Precondition),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalPOutput {
    pub dist: DistributionSpec,
    /// Minimiser at grid resolution; 0 when the minimum is at the lower edge.
    pub p: f64,
    pub p_exact: f64,
    pub asv: f64,
    pub boundary: bool,
}

impl From<(DistributionSpec, OptimalP)> for OptimalPOutput {
    fn from((dist, o): (DistributionSpec, OptimalP)) -> Self {
        OptimalPOutput { dist, p: o.reported(), p_exact: o.p, asv: o.asv, boundary: o.boundary }
    }
}

impl fmt::Display for OptimalPOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: p = {:.3}", self.dist, self.p)?;
        if self.boundary {
            write!(f, " (minimum on the search boundary)")
        } else {
            write!(f, " (ASV {:.6})", self.asv)
        }
    }
}

pub fn optimal_p(dist: &str, step: f64) -> std::result::Result<OptimalPOutput, RequestError> {
    let dist: DistributionSpec = dist.parse().map_err(RequestError::Invalid)?;
    if !(step > 0.0 && step <= 0.1) {
        return Err(RequestError::Invalid(Error::Domain(format!("grid step must lie in (0, 0.1], got {step}"))));
    }
    asymptotics::optimal_p(&dist, step)
        .map(|o| (dist, o).into())
        .map_err(RequestError::Precondition)
}
