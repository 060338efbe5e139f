//! Sample-based estimators: type-7 quantiles, kernel quantile-density
//! estimation, standardized fourth moments, the log-median variance used by
//! the Price–Bonett interval and Shoemaker's histogram density estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// A batch of observations from one group, kept sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Sorts `values`; rejects NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite observation {} at index {bad}",
                values[bad]
            )));
        }
        Ok(Self::from_finite(values))
    }

    pub(crate) fn from_finite(mut values: Vec<f64>) -> Self {
        values.sort_unstable_by(f64::total_cmp);
        Sample { values }
    }

    /// Order statistics, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `X_(i)` with 1-based `i`.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased (divisor `n - 1`) sample variance.
    pub fn variance(&self) -> Result<f64> {
        let n = self.len();
        if n < 2 {
            return Err(Error::SampleTooSmall(format!("variance needs n >= 2, got {n}")));
        }
        let m = self.mean();
        Ok(self.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64)
    }

    pub fn std_dev(&self) -> Result<f64> {
        self.variance().map(f64::sqrt)
    }

    pub fn all_positive(&self) -> bool {
        self.values.first().is_some_and(|&v| v > 0.0)
    }

    /// Same data mapped through `x -> a * x + c`.
    pub fn affine(&self, a: f64, c: f64) -> Sample {
        Sample::from_finite(self.values.iter().map(|x| a * x + c).collect())
    }
}

/// Type-7 (linear interpolation) sample quantile: `h = (n - 1)p + 1`.
pub fn sample_quantile(s: &Sample, p: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::SampleTooSmall("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    let x = s.values();
    let h = (x.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= x.len() {
        return Ok(x[x.len() - 1]);
    }
    Ok(x[lo] + frac * (x[lo + 1] - x[lo]))
}

/// `IQR_p = Q(1 - p) - Q(p)`.
pub fn sample_iqr(s: &Sample, p: f64) -> Result<f64> {
    Ok(sample_quantile(s, 1.0 - p)? - sample_quantile(s, p)?)
}

/// Epanechnikov kernel `0.75 (1 - u^2)` on `[-1, 1]`.
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Rescaled kernel `k_b(u) = k(u / b) / b`.
pub fn scaled_kernel(u: f64, b: f64) -> f64 {
    epanechnikov(u / b) / b
}

/// Kernel estimate of the quantile density,
/// `ĝ(p) = Σ X_(i) [k_b(p - (i-1)/n) - k_b(p - i/n)]`.
///
/// The sum is evaluated as written, also when `p ± b` leaves `[0, 1]`. Only
/// indices whose kernel arguments can fall inside the support are visited.
pub fn kernel_quantile_density(s: &Sample, p: f64, b: f64) -> Result<f64> {
    let n = s.len();
    if n < 2 {
        return Err(Error::SampleTooSmall(format!(
            "quantile density estimation needs n >= 2, got {n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0, 1)")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain(format!("bandwidth must be positive, got {b}")));
    }
    let nf = n as f64;
    let first = ((nf * (p - b)).floor() as i64).max(1) as usize;
    let last = (((nf * (p + b)).ceil() as i64) + 1).clamp(1, n as i64) as usize;
    let mut sum = 0.0;
    for i in first..=last {
        let w = scaled_kernel(p - (i - 1) as f64 / nf, b) - scaled_kernel(p - i as f64 / nf, b);
        sum += s.order_stat(i) * w;
    }
    Ok(sum)
}

/// Default multiplier applied to the normal-reference AMSE bandwidth.
pub const DEFAULT_BANDWIDTH_SCALE: f64 = 0.75;

/// Bandwidth selector for [`kernel_quantile_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `scale * [g(p)^2 R(k) / (n μ2(k)^2 g''(p)^2)]^(1/5)` with `g` taken
    /// from the standard normal, where `g'' = g^3 (1 + 2 z_p^2)`. For the
    /// Epanechnikov kernel `R(k) = 3/5` and `μ2(k) = 1/5`, so the bracket
    /// reduces to `15 φ(z_p)^4 / (n (1 + 2 z_p^2)^2)`.
    PlugIn {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Fixed { b: f64 },
}

fn default_scale() -> f64 {
    DEFAULT_BANDWIDTH_SCALE
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::PlugIn { scale: DEFAULT_BANDWIDTH_SCALE }
    }
}

/// Unscaled normal-reference AMSE-optimal bandwidth.
pub fn normal_reference_bandwidth(n: usize, p: f64) -> f64 {
    let z = special::normal_quantile(p);
    let phi = special::normal_pdf(z);
    let roughness = 0.6;
    let mu2 = 0.2;
    // g^2 / g''^2 = φ^4 / (1 + 2z^2)^2
    let ratio = phi.powi(4) / (1.0 + 2.0 * z * z).powi(2);
    (ratio * roughness / (n as f64 * mu2 * mu2)).powf(0.2)
}

pub fn select_bandwidth(rule: BandwidthRule, n: usize, p: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::SampleTooSmall(format!("bandwidth selection needs n >= 2, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0, 1)")));
    }
    let b = match rule {
        BandwidthRule::PlugIn { scale } => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::domain(format!("bandwidth scale must be positive, got {scale}")));
            }
            scale * normal_reference_bandwidth(n, p)
        }
        BandwidthRule::Fixed { b } => b,
    };
    if b > 0.0 && b < 1.0 {
        Ok(b)
    } else {
        Err(Error::domain(format!("bandwidth must lie in (0, 1), got {b}")))
    }
}

/// `ĝ(p)` with the bandwidth chosen by `rule`.
pub fn estimate_quantile_density(s: &Sample, p: f64, rule: BandwidthRule) -> Result<f64> {
    let b = select_bandwidth(rule, s.len(), p)?;
    kernel_quantile_density(s, p, b)
}

/// `(1/n) Σ ((X_i - X̄) / S)^4` with `S` the divisor-`(n-1)` standard deviation.
pub fn standardized_fourth_moment(s: &Sample) -> Result<f64> {
    let sd = s.std_dev()?;
    if sd == 0.0 {
        return Err(Error::degenerate("zero sample variance"));
    }
    let m = s.mean();
    Ok(s.values().iter().map(|x| ((x - m) / sd).powi(4)).sum::<f64>() / s.len() as f64)
}

/// Order-statistic index `c = round((n + 1)/2 - sqrt(n))`, ties to even.
pub fn pb_order_index(n: usize) -> i64 {
    let nf = n as f64;
    ((nf + 1.0) / 2.0 - nf.sqrt()).round_ties_even() as i64
}

/// `(p1, z)` with `p1 = P(Bin(n, 1/2) <= c - 1)` and `z = Φ^{-1}(1 - p1)`.
pub fn pb_tail_and_z(n: usize) -> (f64, f64) {
    let c = pb_order_index(n);
    let p1 = special::binomial_half_cdf(n as u64, c - 1);
    (p1, special::normal_quantile(1.0 - p1))
}

/// Distribution-free variance of the log-scale sample median,
/// `((X*_(n-c+1) - X*_(c)) / (2z))^2` with `X* = ln X`.
pub fn pb_median_log_variance(s: &Sample) -> Result<f64> {
    let n = s.len();
    if n < 5 {
        return Err(Error::SampleTooSmall(format!("PB variance needs n >= 5, got {n}")));
    }
    if !s.all_positive() {
        return Err(Error::domain("PB requires strictly positive data"));
    }
    let c = pb_order_index(n);
    if c < 1 || (n as i64 - c + 1) > n as i64 {
        return Err(Error::SampleTooSmall(format!("order index c={c} out of range for n={n}")));
    }
    let c = c as usize;
    let (_, z) = pb_tail_and_z(n);
    let spread = s.order_stat(n - c + 1).ln() - s.order_stat(c).ln();
    Ok((spread / (2.0 * z)).powi(2))
}

/// Histogram bandwidth `h_n = 1.3 s / n^(1/5)`.
pub fn shoemaker_bandwidth(s: &Sample) -> Result<f64> {
    let sd = s.std_dev()?;
    if sd == 0.0 {
        return Err(Error::degenerate("zero standard deviation"));
    }
    Ok(1.3 * sd / (s.len() as f64).powf(0.2))
}

/// Count of observations in `[x - h, x + h]` divided by `2 n h`.
pub fn histogram_density(s: &Sample, x: f64, h: f64) -> f64 {
    let v = s.values();
    let lo = v.partition_point(|&t| t < x - h);
    let hi = v.partition_point(|&t| t <= x + h);
    (hi - lo) as f64 / (2.0 * s.len() as f64 * h)
}

/// Shoemaker's estimate of the density at the sample `p` quantile.
pub fn shoemaker_density_quantile(s: &Sample, p: f64) -> Result<f64> {
    let h = shoemaker_bandwidth(s)?;
    Ok(histogram_density(s, sample_quantile(s, p)?, h))
}
