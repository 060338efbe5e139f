//! Parametric families with exact pdf, cdf, quantile, quantile density,
//! moments and seeded sampling.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::Distribution;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::empirical::Sample;
use crate::error::{Error, Result};
use crate::rng::{self, open01};
use crate::special;

/// A fully parameterised continuous distribution.
///
/// `Pareto2` is the Lomax form `F(x) = 1 - (1 + x/scale)^(-shape)` on `x >= 0`.
/// `Gamma` and `Weibull` carry a scale that defaults to 1 when parsed from a
/// one-argument string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    LogNormal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    ChiSquared { k: f64 },
    Pareto2 { scale: f64, shape: f64 },
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
}

pub const GRAMMAR_HINT: &str = "expected name(p1[,p2]) with name one of lognormal, exp, chisq, \
pareto2, normal, uniform, beta, gamma, weibull; e.g. lognormal(0,1), pareto2(1,3)";

/// Name and parameter schema of a family, as advertised by the HTTP service.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub params: Vec<ParamInfo>,
    pub example: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub constraint: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<f64>,
}

fn param(name: &'static str, constraint: &'static str) -> ParamInfo {
    ParamInfo { name, constraint, default: None }
}

pub fn families() -> Vec<FamilyInfo> {
    vec![
        FamilyInfo {
            name: "lognormal",
            params: vec![param("mu", "real"), param("sigma", "> 0")],
            example: "lognormal(0,1)",
        },
        FamilyInfo { name: "exp", params: vec![param("rate", "> 0")], example: "exp(1)" },
        FamilyInfo { name: "chisq", params: vec![param("k", "> 0")], example: "chisq(5)" },
        FamilyInfo {
            name: "pareto2",
            params: vec![param("scale", "> 0"), param("shape", "> 0")],
            example: "pareto2(1,3)",
        },
        FamilyInfo {
            name: "normal",
            params: vec![param("mu", "real"), param("sigma", "> 0")],
            example: "normal(0,1)",
        },
        FamilyInfo {
            name: "uniform",
            params: vec![param("a", "real"), param("b", "> a")],
            example: "uniform(0,1)",
        },
        FamilyInfo {
            name: "beta",
            params: vec![param("a", "> 0"), param("b", "> 0")],
            example: "beta(10,10)",
        },
        FamilyInfo {
            name: "gamma",
            params: vec![
                param("shape", "> 0"),
                ParamInfo { name: "scale", constraint: "> 0", default: Some(1.0) },
            ],
            example: "gamma(2)",
        },
        FamilyInfo {
            name: "weibull",
            params: vec![
                param("shape", "> 0"),
                ParamInfo { name: "scale", constraint: "> 0", default: Some(1.0) },
            ],
            example: "weibull(2)",
        },
    ]
}

fn check_prob(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {p} outside (0, 1)")))
    }
}

impl DistributionSpec {
    /// Checks parameter constraints; every constructor path goes through here.
    pub fn validated(self) -> Result<Self> {
        use DistributionSpec::*;
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let pos = |name: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be strictly positive, got {v}")))
            }
        };
        match self {
            LogNormal { mu, sigma } | Normal { mu, sigma } => {
                if !finite(&[mu, sigma]) {
                    return Err(Error::domain("non-finite parameter"));
                }
                pos("sigma", sigma)?
            }
            Exponential { rate } => {
                if !rate.is_finite() {
                    return Err(Error::domain("non-finite parameter"));
                }
                pos("rate", rate)?
            }
            ChiSquared { k } => {
                if !k.is_finite() {
                    return Err(Error::domain("non-finite parameter"));
                }
                pos("k", k)?
            }
            Pareto2 { scale, shape } | Gamma { shape, scale } | Weibull { shape, scale } => {
                if !finite(&[scale, shape]) {
                    return Err(Error::domain("non-finite parameter"));
                }
                pos("scale", scale)?;
                pos("shape", shape)?
            }
            Beta { a, b } => {
                if !finite(&[a, b]) {
                    return Err(Error::domain("non-finite parameter"));
                }
                pos("a", a)?;
                pos("b", b)?
            }
            Uniform { a, b } => {
                if !finite(&[a, b]) {
                    return Err(Error::domain("non-finite parameter"));
                }
                if a >= b {
                    return Err(Error::domain(format!("uniform requires a < b, got a={a}, b={b}")));
                }
            }
        }
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        use DistributionSpec::*;
        match self {
            LogNormal { .. } => "lognormal",
            Exponential { .. } => "exp",
            ChiSquared { .. } => "chisq",
            Pareto2 { .. } => "pareto2",
            Normal { .. } => "normal",
            Uniform { .. } => "uniform",
            Beta { .. } => "beta",
            Gamma { .. } => "gamma",
            Weibull { .. } => "weibull",
        }
    }

    /// Closure of the support, `(lower, upper)`.
    pub fn support(&self) -> (f64, f64) {
        use DistributionSpec::*;
        match *self {
            Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Uniform { a, b } => (a, b),
            Beta { .. } => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - mu) / sigma;
                special::normal_pdf(z) / (sigma * x)
            }
            Exponential { rate } => rate * (-rate * x).exp(),
            ChiSquared { k } => gamma_pdf(0.5 * k, 2.0, x),
            Pareto2 { scale, shape } => shape / scale * (-(shape + 1.0) * (x / scale).ln_1p()).exp(),
            Normal { mu, sigma } => special::normal_pdf((x - mu) / sigma) / sigma,
            Uniform { a, b } => 1.0 / (b - a),
            Beta { a, b } => special::beta_pdf(a, b, x),
            Gamma { shape, scale } => gamma_pdf(shape, scale, x),
            Weibull { shape, scale } => {
                let t = x / scale;
                if t == 0.0 {
                    return match shape {
                        s if s < 1.0 => f64::INFINITY,
                        s if s == 1.0 => 1.0 / scale,
                        _ => 0.0,
                    };
                }
                shape / scale * t.powf(shape - 1.0) * (-t.powf(shape)).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match *self {
            LogNormal { mu, sigma } => special::normal_cdf((x.ln() - mu) / sigma),
            Exponential { rate } => -(-rate * x).exp_m1(),
            ChiSquared { k } => special::reg_lower_gamma(0.5 * k, 0.5 * x),
            Pareto2 { scale, shape } => -(-shape * (x / scale).ln_1p()).exp_m1(),
            Normal { mu, sigma } => special::normal_cdf((x - mu) / sigma),
            Uniform { a, b } => (x - a) / (b - a),
            Beta { a, b } => special::reg_inc_beta(a, b, x),
            Gamma { shape, scale } => special::reg_lower_gamma(shape, x / scale),
            Weibull { shape, scale } => -(-(x / scale).powf(shape)).exp_m1(),
        }
    }

    /// `x_p = F^{-1}(p)`. Closed form where one exists, otherwise a
    /// safeguarded Newton inversion of the cdf.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_prob(p)?;
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        use DistributionSpec::*;
        match *self {
            LogNormal { mu, sigma } => (mu + sigma * special::normal_quantile(p)).exp(),
            Exponential { rate } => -(-p).ln_1p() / rate,
            Pareto2 { scale, shape } => scale * ((-(-p).ln_1p() / shape).exp_m1()),
            Normal { mu, sigma } => mu + sigma * special::normal_quantile(p),
            Uniform { a, b } => a + (b - a) * p,
            Weibull { shape, scale } => scale * (-(-p).ln_1p()).powf(1.0 / shape),
            Beta { a, b } => special::inv_reg_inc_beta(a, b, p),
            ChiSquared { k } => 2.0 * gamma_quantile(0.5 * k, p),
            Gamma { shape, scale } => scale * gamma_quantile(shape, p),
        }
    }

    /// Quantile density `g(p) = 1 / f(x_p)`.
    pub fn quantile_density(&self, p: f64) -> Result<f64> {
        let x = self.quantile(p)?;
        let f = match *self {
            DistributionSpec::Beta { a, b } if p > 0.5 => {
                special::beta_pdf(b, a, special::inv_reg_inc_beta(b, a, 1.0 - p))
            }
            _ => self.pdf(x),
        };
        if f > 0.0 && f.is_finite() {
            Ok(1.0 / f)
        } else {
            Err(Error::Singularity(format!(
                "{self}: density at the {p} quantile ({x}) is {f}"
            )))
        }
    }

    pub fn mean(&self) -> Result<f64> {
        use DistributionSpec::*;
        Ok(match *self {
            LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Exponential { rate } => 1.0 / rate,
            ChiSquared { k } => k,
            Pareto2 { scale, shape } => {
                if shape <= 1.0 {
                    return Err(Error::Moment(format!("{self} has no finite mean")));
                }
                scale / (shape - 1.0)
            }
            Normal { mu, .. } => mu,
            Uniform { a, b } => 0.5 * (a + b),
            Beta { a, b } => a / (a + b),
            Gamma { shape, scale } => shape * scale,
            Weibull { shape, scale } => scale * special::gamma(1.0 + 1.0 / shape),
        })
    }

    pub fn variance(&self) -> Result<f64> {
        use DistributionSpec::*;
        Ok(match *self {
            LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                s2.exp_m1() * (2.0 * mu + s2).exp()
            }
            Exponential { rate } => 1.0 / (rate * rate),
            ChiSquared { k } => 2.0 * k,
            Pareto2 { scale, shape } => {
                if shape <= 2.0 {
                    return Err(Error::Moment(format!("{self} has infinite variance")));
                }
                scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0))
            }
            Normal { sigma, .. } => sigma * sigma,
            Uniform { a, b } => (b - a).powi(2) / 12.0,
            Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            Gamma { shape, scale } => shape * scale * scale,
            Weibull { shape, scale } => {
                let g1 = special::gamma(1.0 + 1.0 / shape);
                let g2 = special::gamma(1.0 + 2.0 / shape);
                scale * scale * (g2 - g1 * g1)
            }
        })
    }

    /// Standardized fourth central moment `E[((X - μ)/σ)^4]`.
    pub fn standardized_fourth_moment(&self) -> Result<f64> {
        use DistributionSpec::*;
        Ok(match *self {
            LogNormal { sigma, .. } => {
                let s2 = sigma * sigma;
                (4.0 * s2).exp() + 2.0 * (3.0 * s2).exp() + 3.0 * (2.0 * s2).exp() - 3.0
            }
            Exponential { .. } => 9.0,
            ChiSquared { k } => 3.0 + 12.0 / k,
            Pareto2 { shape: a, .. } => {
                if a <= 4.0 {
                    return Err(Error::Moment(format!("{self} has infinite fourth moment")));
                }
                3.0 + 6.0 * (a.powi(3) + a * a - 6.0 * a - 2.0) / (a * (a - 3.0) * (a - 4.0))
            }
            Normal { .. } => 3.0,
            Uniform { .. } => 1.8,
            Beta { a, b } => {
                let s = a + b;
                3.0 + 6.0 * ((a - b).powi(2) * (s + 1.0) - a * b * (s + 2.0))
                    / (a * b * (s + 2.0) * (s + 3.0))
            }
            Gamma { shape, .. } => 3.0 + 6.0 / shape,
            Weibull { shape, .. } => {
                let g = |i: f64| special::gamma(1.0 + i / shape);
                let (g1, g2, g3, g4) = (g(1.0), g(2.0), g(3.0), g(4.0));
                let var = g2 - g1 * g1;
                (g4 - 4.0 * g3 * g1 + 6.0 * g2 * g1 * g1 - 3.0 * g1.powi(4)) / (var * var)
            }
        })
    }

    /// Draws `n` values from `rng`.
    ///
    /// Families with a closed-form quantile use inverse transform on an open
    /// uniform; gamma and beta use the Marsaglia–Tsang based samplers of
    /// `rand_distr`; integer chi-squared degrees of freedom up to 100 are
    /// sums of squared standard normals.
    pub fn draw<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        use DistributionSpec::*;
        match *self {
            ChiSquared { k } if k.fract() == 0.0 && k <= 100.0 => (0..n)
                .map(|_| {
                    (0..k as usize)
                        .map(|_| special::normal_quantile(open01(rng)).powi(2))
                        .sum()
                })
                .collect(),
            ChiSquared { k } => {
                let g = rand_distr::Gamma::new(0.5 * k, 2.0).expect("validated parameters");
                (0..n).map(|_| g.sample(rng)).collect()
            }
            Gamma { shape, scale } => {
                let g = rand_distr::Gamma::new(shape, scale).expect("validated parameters");
                (0..n).map(|_| g.sample(rng)).collect()
            }
            Beta { a, b } => {
                let d = rand_distr::Beta::new(a, b).expect("validated parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            _ => (0..n).map(|_| self.quantile_unchecked(open01(rng))).collect(),
        }
    }

    /// `n` independent draws, fully determined by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Sample {
        let mut rng = rng::seeded(seed);
        Sample::from_finite(self.draw(n, &mut rng))
    }
}

fn gamma_pdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match shape {
            s if s < 1.0 => f64::INFINITY,
            s if s == 1.0 => 1.0 / scale,
            _ => 0.0,
        };
    }
    let t = x / scale;
    ((shape - 1.0) * t.ln() - t - special::ln_gamma(shape)).exp() / scale
}

/// Quantile of the unit-scale gamma law.
fn gamma_quantile(shape: f64, p: f64) -> f64 {
    // Wilson–Hilferty start; small shapes use the lower-tail power law.
    let z = special::normal_quantile(p);
    let wh = shape * (1.0 - 1.0 / (9.0 * shape) + z / (3.0 * shape.sqrt())).powi(3);
    let guess = if shape < 1.0 || wh <= 0.0 {
        (p * special::gamma(shape + 1.0)).powf(1.0 / shape)
    } else {
        wh
    };
    let cdf = |x: f64| special::reg_lower_gamma(shape, x);
    let pdf = |x: f64| gamma_pdf(shape, 1.0, x);
    let hi = special::expand_upper(p, guess * 2.0, cdf);
    special::invert_cdf(p, (0.0, hi), guess, cdf, pdf)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DistributionSpec::*;
        let args: Vec<f64> = match *self {
            LogNormal { mu, sigma } | Normal { mu, sigma } => vec![mu, sigma],
            Exponential { rate } => vec![rate],
            ChiSquared { k } => vec![k],
            Pareto2 { scale, shape } => vec![scale, shape],
            Uniform { a, b } | Beta { a, b } => vec![a, b],
            Gamma { shape, scale } | Weibull { shape, scale } => {
                if scale == 1.0 {
                    vec![shape]
                } else {
                    vec![shape, scale]
                }
            }
        };
        let args: Vec<String> = args.into_iter().map(fmt_num).collect();
        write!(f, "{}({})", self.name(), args.join(","))
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed distribution '{s}': {GRAMMAR_HINT}"));
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(bad)?;
        if !s_trim.ends_with(')') {
            return Err(bad());
        }
        let name = s_trim[..open].trim().to_ascii_lowercase();
        let inner = &s_trim[open + 1..s_trim.len() - 1];
        let args: Vec<f64> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        let arity = |want: &[usize]| {
            if want.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "{name} takes {} parameter(s), got {}: {GRAMMAR_HINT}",
                    want.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" or "),
                    args.len()
                )))
            }
        };
        let spec = match name.as_str() {
            "lognormal" | "lnorm" => {
                arity(&[2])?;
                DistributionSpec::LogNormal { mu: args[0], sigma: args[1] }
            }
            "exp" | "exponential" => {
                arity(&[1])?;
                DistributionSpec::Exponential { rate: args[0] }
            }
            "chisq" | "chi2" | "chisquared" => {
                arity(&[1])?;
                DistributionSpec::ChiSquared { k: args[0] }
            }
            "pareto2" | "par" | "lomax" => {
                arity(&[1, 2])?;
                if args.len() == 1 {
                    DistributionSpec::Pareto2 { scale: 1.0, shape: args[0] }
                } else {
                    DistributionSpec::Pareto2 { scale: args[0], shape: args[1] }
                }
            }
            "normal" | "norm" => {
                arity(&[2])?;
                DistributionSpec::Normal { mu: args[0], sigma: args[1] }
            }
            "uniform" | "unif" => {
                arity(&[2])?;
                DistributionSpec::Uniform { a: args[0], b: args[1] }
            }
            "beta" => {
                arity(&[2])?;
                DistributionSpec::Beta { a: args[0], b: args[1] }
            }
            "gamma" => {
                arity(&[1, 2])?;
                DistributionSpec::Gamma { shape: args[0], scale: args.get(1).copied().unwrap_or(1.0) }
            }
            "weibull" => {
                arity(&[1, 2])?;
                DistributionSpec::Weibull { shape: args[0], scale: args.get(1).copied().unwrap_or(1.0) }
            }
            _ => return Err(bad()),
        };
        spec.validated()
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
