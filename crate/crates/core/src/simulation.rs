//! Monte Carlo coverage engine.
//!
//! A run sweeps the configured sample-size pairs; within a pair every method
//! is evaluated on the same simulated samples. Trial `t` of pair `c` draws
//! from `rng::trial_stream(master_seed, c, t)`, `x` first and then `y`, and
//! per-trial outcomes are reduced in trial order, so results are identical
//! for any worker count.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::asymptotics;
use crate::distributions::DistributionSpec;
use crate::empirical::{BandwidthRule, Sample};
use crate::error::{Error, Result};
use crate::intervals::{self, Method};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthSummary {
    Mean,
    Median,
    #[default]
    Both,
}

/// A method together with its probability level, written `rq:0.5` or
/// `{ method = "ratio_quantiles", p = 0.5 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodSpec {
    pub method: Method,
    pub p: Option<f64>,
}

impl MethodSpec {
    pub fn new(method: Method, p: Option<f64>) -> Result<Self> {
        method.check_p(p)?;
        Ok(MethodSpec { method, p })
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p {
            Some(p) => write!(f, "{}:{p}", self.method.short_name()),
            None => f.write_str(self.method.short_name()),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = match s.split_once(':') {
            Some((name, p)) => {
                let p = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad probability in method '{s}'")))?;
                (name, Some(p))
            }
            None => (s, None),
        };
        MethodSpec::new(name.parse()?, p)
    }
}

impl<'de> Deserialize<'de> for MethodSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Table { method: Method, #[serde(default)] p: Option<f64> },
        }
        let spec = match Repr::deserialize(de)? {
            Repr::Text(s) => s.parse(),
            Repr::Table { method, p } => MethodSpec::new(method, p),
        };
        spec.map_err(serde::de::Error::custom)
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_trials() -> u32 {
    2000
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
    pub sample_sizes: Vec<(usize, usize)>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub width_summary: WidthSummary,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
}

pub const CONFIG_KEYS: [&str; 9] = [
    "dist1",
    "dist2",
    "sample_sizes",
    "methods",
    "alpha",
    "trials",
    "master_seed",
    "width_summary",
    "bandwidth",
];

/// Rejects keys outside [`CONFIG_KEYS`], naming all of them.
pub fn check_config_keys<'a>(keys: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let unknown: BTreeSet<&str> = keys.into_iter().filter(|k| !CONFIG_KEYS.contains(k)).collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        let list: Vec<&str> = unknown.into_iter().collect();
        Err(Error::Config(format!("unknown config keys: {}", list.join(", "))))
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        check_config_keys(table.keys().map(String::as_str))?;
        let config: SimConfig = table.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        if let Some(obj) = value.as_object() {
            check_config_keys(obj.keys().map(String::as_str))?;
        }
        let config: SimConfig = serde_json::from_value(value).map_err(|e| Error::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("sample_sizes is empty".into()));
        }
        if let Some(&(n1, n2)) = self.sample_sizes.iter().find(|&&(a, b)| a < 2 || b < 2) {
            return Err(Error::Config(format!("sample sizes must be at least 2, got ({n1}, {n2})")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods is empty".into()));
        }
        for m in &self.methods {
            m.method.check_p(m.p).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.dist1.validated().map_err(|e| Error::Config(e.to_string()))?;
        self.dist2.validated().map_err(|e| Error::Config(e.to_string()))?;
        if let BandwidthRule::Fixed { b } = self.bandwidth {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Config(format!("fixed bandwidth must lie in (0, 1), got {b}")));
            }
        }
        Ok(())
    }

    /// Number of (size pair, method) cells.
    pub fn cell_count(&self) -> usize {
        self.sample_sizes.len() * self.methods.len()
    }

    /// Total observations drawn, used to size server work.
    pub fn workload(&self) -> u64 {
        let per_trial: u64 = self.sample_sizes.iter().map(|&(a, b)| (a + b) as u64).sum();
        per_trial * self.trials as u64
    }
}

/// Population value that the interval for `method` targets.
pub fn true_value(dist1: &DistributionSpec, dist2: &DistributionSpec, method: Method, p: Option<f64>) -> Result<f64> {
    method.check_p(p)?;
    match method {
        Method::RatioQuantiles => asymptotics::ratio_of_quantiles(dist1, dist2, p.unwrap_or_default()),
        Method::SqIqrRatio => asymptotics::squared_iqr_ratio(dist1, dist2, p.unwrap_or_default()),
        Method::RatioVariances | Method::FInterval => asymptotics::ratio_of_variances(dist1, dist2),
        Method::PbMedianRatio => asymptotics::ratio_of_quantiles(dist1, dist2, 0.5),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCellResult {
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
    pub n1: usize,
    pub n2: usize,
    pub method: Method,
    pub p: Option<f64>,
    pub alpha: f64,
    pub trials: u32,
    /// `None` when every trial failed.
    pub coverage: Option<f64>,
    pub mean_width: Option<f64>,
    pub median_width: Option<f64>,
    pub failures: u32,
    pub trials_effective: u32,
    pub true_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn cell_note(dist1: &DistributionSpec, dist2: &DistributionSpec, method: Method) -> Option<String> {
    if method != Method::RatioVariances {
        return None;
    }
    [dist1, dist2].into_iter().find_map(|d| {
        d.standardized_fourth_moment()
            .err()
            .map(|_| format!("{d} has no finite fourth moment; the asymptotic variance does not exist"))
    })
}

type Outcome = Option<(bool, f64)>;

fn trial_outcomes(
    config: &SimConfig,
    targets: &[f64],
    (n1, n2): (usize, usize),
    cell: u32,
    trial: u32,
) -> Vec<Outcome> {
    let mut rng = rng::trial_stream(config.master_seed, cell, trial);
    let x = Sample::from_finite(config.dist1.draw(n1, &mut rng));
    let y = Sample::from_finite(config.dist2.draw(n2, &mut rng));
    config
        .methods
        .iter()
        .zip(targets)
        .map(|(m, &target)| {
            let e = intervals::estimate(m.method, &x, &y, m.p, config.alpha, config.bandwidth).ok()?;
            let width = e.width();
            (e.lower.is_finite() && e.upper.is_finite() && width > 0.0).then(|| (e.contains(target), width))
        })
        .collect()
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

fn summarize(config: &SimConfig, (n1, n2): (usize, usize), k: usize, target: f64, outcomes: &[Vec<Outcome>]) -> SimCellResult {
    let spec = config.methods[k];
    let mut widths = Vec::with_capacity(outcomes.len());
    let mut covered = 0u32;
    for (hit, width) in outcomes.iter().filter_map(|trial| trial[k]) {
        covered += hit as u32;
        widths.push(width);
    }
    let effective = widths.len() as u32;
    let mean_width = (effective > 0).then(|| widths.iter().sum::<f64>() / effective as f64);
    let median_width = median(&mut widths);
    SimCellResult {
        dist1: config.dist1,
        dist2: config.dist2,
        n1,
        n2,
        method: spec.method,
        p: spec.p,
        alpha: config.alpha,
        trials: config.trials,
        coverage: (effective > 0).then(|| covered as f64 / effective as f64),
        mean_width: mean_width.filter(|_| config.width_summary != WidthSummary::Median),
        median_width: median_width.filter(|_| config.width_summary != WidthSummary::Mean),
        failures: config.trials - effective,
        trials_effective: effective,
        true_value: target,
        note: cell_note(&config.dist1, &config.dist2, spec.method),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every (size pair, method) cell of `config`; results are ordered by
/// size pair, then by method as listed.
pub fn run_table(config: &SimConfig, workers: usize) -> Result<Vec<SimCellResult>> {
    run_table_observed(config, workers, &AtomicU64::new(0))
}

/// As [`run_table`], adding one to `progress` per completed trial.
pub fn run_table_observed(config: &SimConfig, workers: usize, progress: &AtomicU64) -> Result<Vec<SimCellResult>> {
    config.validate()?;
    let targets = config
        .methods
        .iter()
        .map(|m| true_value(&config.dist1, &config.dist2, m.method, m.p))
        .collect::<Result<Vec<_>>>()?;
    let pool = pool(workers)?;
    let mut results = Vec::with_capacity(config.cell_count());
    for (cell, &sizes) in config.sample_sizes.iter().enumerate() {
        let outcomes: Vec<Vec<Outcome>> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let o = trial_outcomes(config, &targets, sizes, cell as u32, t);
                    progress.fetch_add(1, Ordering::Relaxed);
                    o
                })
                .collect()
        });
        for (k, &target) in targets.iter().enumerate() {
            results.push(summarize(config, sizes, k, target, &outcomes));
        }
    }
    Ok(results)
}

/// One method at one size pair; equal to the matching cell of a one-pair table.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    dist1: DistributionSpec,
    dist2: DistributionSpec,
    sizes: (usize, usize),
    method: MethodSpec,
    alpha: f64,
    trials: u32,
    master_seed: u64,
    workers: usize,
) -> Result<SimCellResult> {
    let config = SimConfig {
        dist1,
        dist2,
        sample_sizes: vec![sizes],
        methods: vec![method],
        alpha,
        trials,
        master_seed,
        width_summary: WidthSummary::Both,
        bandwidth: BandwidthRule::default(),
    };
    Ok(run_table(&config, workers)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionRate {
    pub rate: f64,
    pub rejections: u32,
    pub failures: u32,
    pub trials: u32,
}

/// Fraction of trials in which Shoemaker's two-sided test rejects at `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn shoemaker_rejection_rate(
    dist1: DistributionSpec,
    dist2: DistributionSpec,
    (n1, n2): (usize, usize),
    p: f64,
    alpha: f64,
    trials: u32,
    master_seed: u64,
    workers: usize,
) -> Result<RejectionRate> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let outcomes: Vec<Option<bool>> = pool(workers)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::trial_stream(master_seed, 0, t);
                let x = Sample::from_finite(dist1.draw(n1, &mut rng));
                let y = Sample::from_finite(dist2.draw(n2, &mut rng));
                intervals::shoemaker_test(&x, &y, p).ok().map(|r| r.p_value < alpha)
            })
            .collect()
    });
    let rejections = outcomes.iter().filter(|o| **o == Some(true)).count() as u32;
    let failures = outcomes.iter().filter(|o| o.is_none()).count() as u32;
    let effective = trials - failures;
    Ok(RejectionRate {
        rate: if effective > 0 { rejections as f64 / effective as f64 } else { f64::NAN },
        rejections,
        failures,
        trials,
    })
}

pub const CSV_COLUMNS: [&str; 12] = [
    "dist1",
    "dist2",
    "n1",
    "n2",
    "method",
    "p",
    "alpha",
    "trials",
    "coverage",
    "mean_width",
    "median_width",
    "failures",
];

#[derive(Serialize)]
struct CsvRow {
    dist1: String,
    dist2: String,
    n1: usize,
    n2: usize,
    method: &'static str,
    p: Option<f64>,
    alpha: f64,
    trials: u32,
    coverage: Option<f64>,
    mean_width: Option<f64>,
    median_width: Option<f64>,
    failures: u32,
}

pub fn write_csv<W: Write>(results: &[SimCellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    if results.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(io)?;
    }
    for r in results {
        w.serialize(CsvRow {
            dist1: r.dist1.to_string(),
            dist2: r.dist2.to_string(),
            n1: r.n1,
            n2: r.n2,
            method: r.method.as_str(),
            p: r.p,
            alpha: r.alpha,
            trials: r.trials,
            coverage: r.coverage,
            mean_width: r.mean_width,
            median_width: r.median_width,
            failures: r.failures,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))
}

pub fn to_csv_string(results: &[SimCellResult]) -> String {
    let mut buf = Vec::new();
    write_csv(results, &mut buf).expect("in-memory CSV");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

/// Plain-text table with one line per cell; starred widths are medians.
pub fn render_table(results: &[SimCellResult]) -> String {
    let mut out = String::new();
    if let Some(first) = results.first() {
        out.push_str(&format!("{} vs {}, alpha = {}\n", first.dist1, first.dist2, first.alpha));
    }
    out.push_str(&format!(
        "{:>6} {:>6}  {:<16} {:>6}  {:>8}  {:>20}  {:>8}\n",
        "n1", "n2", "method", "p", "coverage", "width", "failures"
    ));
    for r in results {
        let width = match (r.mean_width, r.median_width) {
            (Some(m), Some(d)) => format!("{m:.3} ({d:.3}*)"),
            (Some(m), None) => format!("{m:.3}"),
            (None, Some(d)) => format!("{d:.3}*"),
            (None, None) => "-".into(),
        };
        out.push_str(&format!(
            "{:>6} {:>6}  {:<16} {:>6}  {:>8}  {:>20}  {:>8}\n",
            r.n1,
            r.n2,
            r.method.as_str(),
            r.p.map_or("-".into(), |p| p.to_string()),
            opt(r.coverage, 4),
            width,
            r.failures
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    fn config(trials: u32) -> SimConfig {
        SimConfig {
            dist1: d("lognormal(0,1)"),
            dist2: d("lognormal(0,1)"),
            sample_sizes: vec![(20, 25), (40, 30)],
            methods: vec!["rq:0.5".parse().unwrap(), "pb".parse().unwrap(), "rvar".parse().unwrap()],
            alpha: 0.05,
            trials,
            master_seed: 99,
            width_summary: WidthSummary::Both,
            bandwidth: BandwidthRule::default(),
        }
    }

    #[test]
    fn true_values() {
        let ln = d("lognormal(0,1)");
        for m in Method::ALL {
            let p = if m.takes_p() { Some(0.2) } else { None };
            assert!((true_value(&ln, &ln, m, p).unwrap() - 1.0).abs() < 1e-12);
        }
        let v = true_value(&d("chisq(5)"), &d("chisq(2)"), Method::RatioVariances, None).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        for i in 1..50 {
            let p = i as f64 * 0.01;
            let r = true_value(&d("normal(0,2)"), &d("normal(0,1)"), Method::SqIqrRatio, Some(p)).unwrap();
            assert!((r - 4.0).abs() < 1e-9);
        }
        assert!(matches!(
            true_value(&d("pareto2(1,2)"), &ln, Method::FInterval, None),
            Err(Error::Moment(_))
        ));
        assert!(true_value(&d("pareto2(1,2)"), &ln, Method::RatioQuantiles, Some(0.5)).is_ok());
    }

    #[test]
    fn single_trial_is_reproducible() {
        let a = run_table(&config(1), 1).unwrap();
        let b = run_table(&config(1), 3).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!(matches!(r.coverage, Some(c) if c == 0.0 || c == 1.0));
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = config(64);
        let one = to_csv_string(&run_table(&cfg, 1).unwrap());
        let many = to_csv_string(&run_table(&cfg, 6).unwrap());
        assert_eq!(one, many);
        assert!(one.starts_with(&CSV_COLUMNS.join(",")));
        assert_eq!(one.lines().count(), 1 + cfg.cell_count());
    }

    #[test]
    fn one_cell_grid_matches_run_cell() {
        let mut cfg = config(30);
        cfg.sample_sizes.truncate(1);
        cfg.methods = vec!["pb".parse().unwrap()];
        let table = run_table(&cfg, 2).unwrap();
        let cell = run_cell(cfg.dist1, cfg.dist2, (20, 25), cfg.methods[0], 0.05, 30, 99, 1).unwrap();
        assert_eq!(table, vec![cell]);
    }

    #[test]
    fn methods_share_draws_within_a_pair() {
        // the same interval method listed twice must give identical cells
        let mut cfg = config(20);
        cfg.methods = vec!["rq:0.5".parse().unwrap(), "rq:0.5".parse().unwrap()];
        let r = run_table(&cfg, 2).unwrap();
        assert_eq!(r[0], r[1]);
    }

    #[test]
    fn failures_are_counted() {
        // PB needs n >= 5 and the quantile ratio of mixed-sign samples fails
        let mut cfg = config(40);
        cfg.dist1 = d("normal(0.2,1)");
        cfg.dist2 = d("normal(0.2,1)");
        cfg.sample_sizes = vec![(3, 3)];
        let r = run_table(&cfg, 2).unwrap();
        let pb = r.iter().find(|c| c.method == Method::PbMedianRatio).unwrap();
        assert_eq!(pb.failures, 40);
        assert_eq!(pb.coverage, None);
        let rq = r.iter().find(|c| c.method == Method::RatioQuantiles).unwrap();
        assert!(rq.failures > 0);
        for c in &r {
            assert_eq!(c.failures + c.trials_effective, c.trials);
        }
    }

    #[test]
    fn width_summary_selects_columns() {
        let mut cfg = config(10);
        cfg.width_summary = WidthSummary::Median;
        let r = run_table(&cfg, 1).unwrap();
        assert!(r.iter().all(|c| c.mean_width.is_none() && c.median_width.unwrap() > 0.0));
        assert!(render_table(&r).contains('*'));
    }

    #[test]
    fn fourth_moment_note() {
        let mut cfg = config(5);
        cfg.dist1 = d("pareto2(1,3)");
        let r = run_table(&cfg, 1).unwrap();
        let rvar = r.iter().find(|c| c.method == Method::RatioVariances).unwrap();
        assert!(rvar.note.is_some());
        assert!(r.iter().filter(|c| c.method != Method::RatioVariances).all(|c| c.note.is_none()));
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let text = r#"
            dist1 = "lognormal(0,1)"
            dist2 = "lognormal(0,1)"
            sample_sizes = [[50, 50], [100, 100]]
            methods = ["pb", "rq:0.5", { method = "sq_iqr_ratio", p = 0.2 }, { method = "f" }]
            trials = 500
            width_summary = "median"
            bandwidth = { kind = "fixed", b = 0.1 }
        "#;
        let cfg = SimConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.methods.len(), 4);
        assert_eq!(cfg.methods[2], MethodSpec { method: Method::SqIqrRatio, p: Some(0.2) });
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.bandwidth, BandwidthRule::Fixed { b: 0.1 });
        assert_eq!(SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);

        let bad = format!("{text}\ntrails = 3\ncolour = \"red\"\n");
        let err = SimConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("colour") && err.contains("trails"), "{err}");
        let zero = text.replace("trials = 500", "trials = 0");
        assert!(SimConfig::from_toml_str(&zero).is_err());
        let no_p = text.replace("\"rq:0.5\"", "\"rq\"");
        assert!(SimConfig::from_toml_str(&no_p).is_err());
    }

    #[test]
    fn json_config() {
        let v = serde_json::json!({
            "dist1": "exp(1)", "dist2": "exp(2)",
            "sample_sizes": [[30, 30]], "methods": ["riqr:0.25"], "trials": 10
        });
        let cfg = SimConfig::from_json_value(v).unwrap();
        assert_eq!(cfg.master_seed, 1);
        let bad = serde_json::json!({"dist1": "exp(1)", "extra": 1});
        assert!(SimConfig::from_json_value(bad).unwrap_err().to_string().contains("extra"));
    }
}
