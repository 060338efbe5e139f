//! Interval estimators for the two-sample ratios and Shoemaker's IQR test.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{iqr_bracket, shoemaker_omega_sq};
use crate::empirical::{
    estimate_quantile_density, pb_median_log_variance, sample_iqr, sample_quantile,
    shoemaker_density_quantile, standardized_fourth_moment, BandwidthRule, Sample,
};
use crate::error::{Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(alias = "rq")]
    RatioQuantiles,
    #[serde(alias = "rvar")]
    RatioVariances,
    #[serde(alias = "riqr")]
    SqIqrRatio,
    #[serde(alias = "pb")]
    PbMedianRatio,
    #[serde(alias = "f")]
    FInterval,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::RatioQuantiles,
        Method::RatioVariances,
        Method::SqIqrRatio,
        Method::PbMedianRatio,
        Method::FInterval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RatioQuantiles => "ratio_quantiles",
            Method::RatioVariances => "ratio_variances",
            Method::SqIqrRatio => "sq_iqr_ratio",
            Method::PbMedianRatio => "pb_median_ratio",
            Method::FInterval => "f_interval",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Method::RatioQuantiles => "rq",
            Method::RatioVariances => "rvar",
            Method::SqIqrRatio => "riqr",
            Method::PbMedianRatio => "pb",
            Method::FInterval => "f",
        }
    }

    pub fn takes_p(self) -> bool {
        matches!(self, Method::RatioQuantiles | Method::SqIqrRatio)
    }

    /// Checks `p` against the method: required and in range for the quantile
    /// methods, absent for the others.
    pub fn check_p(self, p: Option<f64>) -> Result<()> {
        match (self, p) {
            (Method::RatioQuantiles, Some(p)) if p > 0.0 && p < 1.0 => Ok(()),
            (Method::SqIqrRatio, Some(p)) if p > 0.0 && p < 0.5 => Ok(()),
            (Method::RatioQuantiles, Some(p)) => {
                Err(Error::domain(format!("ratio_quantiles needs p in (0, 1), got {p}")))
            }
            (Method::SqIqrRatio, Some(p)) => {
                Err(Error::domain(format!("sq_iqr_ratio needs p in (0, 0.5), got {p}")))
            }
            (m, None) if m.takes_p() => Err(Error::domain(format!("{m} requires p"))),
            (m, Some(_)) if !m.takes_p() => Err(Error::domain(format!("{m} does not take p"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == key || m.short_name() == key)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown method '{s}'; expected one of rq, riqr, rvar, pb, f or their long names"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub method: Method,
    pub p: Option<f64>,
    pub alpha: f64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// Elementwise square root; turns a squared-IQR-ratio interval into one
    /// for the IQR ratio itself.
    pub fn sqrt(&self) -> IntervalEstimate {
        IntervalEstimate {
            point: self.point.sqrt(),
            lower: self.lower.sqrt(),
            upper: self.upper.sqrt(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub p: f64,
}

fn critical_value(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(special::normal_quantile(1.0 - 0.5 * alpha))
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn weights(x: &Sample, y: &Sample) -> (f64, f64, f64) {
    let n = (x.len() + y.len()) as f64;
    (n, x.len() as f64 / n, y.len() as f64 / n)
}

/// `θ exp(±z sqrt(var)/θ)` for a positive `θ`.
fn log_symmetric(method: Method, p: Option<f64>, alpha: f64, point: f64, var: f64) -> Result<IntervalEstimate> {
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::degenerate(format!("estimated variance {var} is not positive")));
    }
    let z = critical_value(alpha)?;
    let half = z * var.sqrt() / point;
    Ok(IntervalEstimate {
        method,
        p,
        alpha,
        point,
        lower: point * (-half).exp(),
        upper: point * half.exp(),
    })
}

/// Interval for `r_p = x_p / y_p` from the delta-method variance
/// `p(1-p) r̂²/(n1+n2) { ĝ1²/(w1 x̂_p²) + ĝ2²/(w2 ŷ_p²) }`.
pub fn ci_ratio_quantiles(x: &Sample, y: &Sample, p: f64, alpha: f64, rule: BandwidthRule) -> Result<IntervalEstimate> {
    Method::RatioQuantiles.check_p(Some(p))?;
    critical_value(alpha)?;
    let xp = sample_quantile(x, p)?;
    let yp = sample_quantile(y, p)?;
    if yp == 0.0 {
        return Err(Error::domain(format!("sample {p} quantile of y is zero")));
    }
    let r = xp / yp;
    if !(r > 0.0) {
        return Err(Error::LogDomain(format!(
            "quantiles {xp} and {yp} do not share a sign; the ratio has no logarithm"
        )));
    }
    let g1 = estimate_quantile_density(x, p, rule)?;
    let g2 = estimate_quantile_density(y, p, rule)?;
    let (n, w1, w2) = weights(x, y);
    let var = p * (1.0 - p) * r * r / n * (g1 * g1 / (w1 * xp * xp) + g2 * g2 / (w2 * yp * yp));
    log_symmetric(Method::RatioQuantiles, Some(p), alpha, r, var)
}

/// Interval for `R_p` from `4p R̂²/(n1+n2) { B̂1/(w1 IQR̂1²) + B̂2/(w2 IQR̂2²) }`.
pub fn ci_sq_iqr_ratio(x: &Sample, y: &Sample, p: f64, alpha: f64, rule: BandwidthRule) -> Result<IntervalEstimate> {
    Method::SqIqrRatio.check_p(Some(p))?;
    critical_value(alpha)?;
    let i1 = sample_iqr(x, p)?;
    let i2 = sample_iqr(y, p)?;
    if !(i1 > 0.0 && i2 > 0.0) {
        return Err(Error::degenerate(format!("sample IQRs at p={p} must be positive, got {i1} and {i2}")));
    }
    let bracket = |s: &Sample| -> Result<f64> {
        Ok(iqr_bracket(
            estimate_quantile_density(s, p, rule)?,
            estimate_quantile_density(s, 1.0 - p, rule)?,
            p,
        ))
    };
    let r = (i1 / i2).powi(2);
    let (n, w1, w2) = weights(x, y);
    let var = 4.0 * p * r * r / n * (bracket(x)? / (w1 * i1 * i1) + bracket(y)? / (w2 * i2 * i2));
    log_symmetric(Method::SqIqrRatio, Some(p), alpha, r, var)
}

/// Interval for the IQR ratio, the square root of [`ci_sq_iqr_ratio`].
pub fn ci_iqr_ratio(x: &Sample, y: &Sample, p: f64, alpha: f64, rule: BandwidthRule) -> Result<IntervalEstimate> {
    ci_sq_iqr_ratio(x, y, p, alpha, rule).map(|e| e.sqrt())
}

fn variance_ratio(x: &Sample, y: &Sample) -> Result<f64> {
    let s1 = x.variance()?;
    let s2 = y.variance()?;
    if s1 == 0.0 || s2 == 0.0 {
        return Err(Error::degenerate("zero sample variance"));
    }
    Ok(s1 / s2)
}

/// Interval for `ρ` from `ρ̂²/(n1+n2) { (Z̄1⁴ - 1)/w1 + (Z̄2⁴ - 1)/w2 }`.
pub fn ci_ratio_variances(x: &Sample, y: &Sample, alpha: f64) -> Result<IntervalEstimate> {
    critical_value(alpha)?;
    let rho = variance_ratio(x, y)?;
    let k1 = standardized_fourth_moment(x)?;
    let k2 = standardized_fourth_moment(y)?;
    let (n, w1, w2) = weights(x, y);
    let var = rho * rho / n * ((k1 - 1.0) / w1 + (k2 - 1.0) / w2);
    log_symmetric(Method::RatioVariances, None, alpha, rho, var)
}

/// Price–Bonett interval for a ratio of medians.
pub fn ci_median_ratio_pb(x: &Sample, y: &Sample, alpha: f64) -> Result<IntervalEstimate> {
    let z = critical_value(alpha)?;
    let v = pb_median_log_variance(x)? + pb_median_log_variance(y)?;
    let point = sample_quantile(x, 0.5)? / sample_quantile(y, 0.5)?;
    let half = z * v.sqrt();
    Ok(IntervalEstimate {
        method: Method::PbMedianRatio,
        p: None,
        alpha,
        point,
        lower: point * (-half).exp(),
        upper: point * half.exp(),
    })
}

/// Normal-theory interval `[ρ̂ / F_{1-α/2}, ρ̂ / F_{α/2}]` on `(n1-1, n2-1)` df.
pub fn ci_f_interval(x: &Sample, y: &Sample, alpha: f64) -> Result<IntervalEstimate> {
    critical_value(alpha)?;
    let rho = variance_ratio(x, y)?;
    let d1 = (x.len() - 1) as f64;
    let d2 = (y.len() - 1) as f64;
    Ok(IntervalEstimate {
        method: Method::FInterval,
        p: None,
        alpha,
        point: rho,
        lower: rho / special::f_quantile(1.0 - 0.5 * alpha, d1, d2),
        upper: rho / special::f_quantile(0.5 * alpha, d1, d2),
    })
}

/// Dispatches on `method`; `p` is required exactly for the quantile methods.
pub fn estimate(
    method: Method,
    x: &Sample,
    y: &Sample,
    p: Option<f64>,
    alpha: f64,
    rule: BandwidthRule,
) -> Result<IntervalEstimate> {
    method.check_p(p)?;
    match method {
        Method::RatioQuantiles => ci_ratio_quantiles(x, y, p.unwrap_or_default(), alpha, rule),
        Method::SqIqrRatio => ci_sq_iqr_ratio(x, y, p.unwrap_or_default(), alpha, rule),
        Method::RatioVariances => ci_ratio_variances(x, y, alpha),
        Method::PbMedianRatio => ci_median_ratio_pb(x, y, alpha),
        Method::FInterval => ci_f_interval(x, y, alpha),
    }
}

/// Shoemaker's large-sample test of equal `p` interquantile ranges.
pub fn shoemaker_test(x: &Sample, y: &Sample, p: f64) -> Result<TestResult> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::domain(format!("shoemaker test needs p in (0, 0.5), got {p}")));
    }
    let omega = |s: &Sample| -> Result<f64> {
        let q_lo = shoemaker_density_quantile(s, p)?;
        let q_hi = shoemaker_density_quantile(s, 1.0 - p)?;
        if q_lo == 0.0 || q_hi == 0.0 {
            return Err(Error::Singularity("zero density estimate; ω² is undefined".into()));
        }
        Ok(shoemaker_omega_sq(q_lo, q_hi, p))
    };
    let diff = sample_iqr(x, p)? - sample_iqr(y, p)?;
    let se2 = omega(x)? / x.len() as f64 + omega(y)? / y.len() as f64;
    if !(se2 > 0.0) {
        return Err(Error::degenerate("non-positive variance of the IQR difference"));
    }
    let statistic = diff / se2.sqrt();
    Ok(TestResult { statistic, p_value: 2.0 * special::normal_sf(statistic.abs()), p })
}
