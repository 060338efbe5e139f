//! Influence functions, partial influence functions and asymptotic variances
//! of the two-sample ratio functionals, and the search for the `p` that
//! minimises the asymptotic variance of the squared IQR ratio.

use serde::Serialize;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};

/// Which population receives the contamination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    First,
    Second,
}

/// Two populations and the sample sizes that fix the weights `w_i = n_i / (n1 + n2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleDesign {
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
    pub n1: usize,
    pub n2: usize,
}

impl TwoSampleDesign {
    pub fn new(dist1: DistributionSpec, dist2: DistributionSpec, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::domain("sample sizes must be at least 1"));
        }
        Ok(TwoSampleDesign { dist1, dist2, n1, n2 })
    }

    /// Equal-weight design, the form used for the one-family `p` search.
    pub fn balanced(dist1: DistributionSpec, dist2: DistributionSpec) -> Self {
        TwoSampleDesign { dist1, dist2, n1: 1, n2: 1 }
    }

    pub fn w1(&self) -> f64 {
        self.n1 as f64 / (self.n1 + self.n2) as f64
    }

    pub fn w2(&self) -> f64 {
        self.n2 as f64 / (self.n1 + self.n2) as f64
    }

    fn dist(&self, group: Group) -> &DistributionSpec {
        match group {
            Group::First => &self.dist1,
            Group::Second => &self.dist2,
        }
    }
}

fn check_lower_half(p: f64) -> Result<()> {
    if p > 0.0 && p < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("interquantile range needs p in (0, 0.5), got {p}")))
    }
}

fn iqr(dist: &DistributionSpec, p: f64) -> Result<f64> {
    let width = dist.quantile(1.0 - p)? - dist.quantile(p)?;
    if width > 0.0 {
        Ok(width)
    } else {
        Err(Error::degenerate(format!("{dist} has zero IQR at p={p}")))
    }
}

/// Population ratio of quantiles `r_p = x_p / y_p`.
pub fn ratio_of_quantiles(dist1: &DistributionSpec, dist2: &DistributionSpec, p: f64) -> Result<f64> {
    let y = dist2.quantile(p)?;
    if y == 0.0 {
        return Err(Error::domain(format!("{dist2} has a zero {p} quantile")));
    }
    Ok(dist1.quantile(p)? / y)
}

/// Population squared IQR ratio `R_p = [IQR_p(X) / IQR_p(Y)]^2`.
pub fn squared_iqr_ratio(dist1: &DistributionSpec, dist2: &DistributionSpec, p: f64) -> Result<f64> {
    check_lower_half(p)?;
    Ok((iqr(dist1, p)? / iqr(dist2, p)?).powi(2))
}

/// Population variance ratio `ρ = σ1² / σ2²`.
pub fn ratio_of_variances(dist1: &DistributionSpec, dist2: &DistributionSpec) -> Result<f64> {
    Ok(dist1.variance()? / dist2.variance()?)
}

/// `IF(x0; Q_p, F) = [p - I(x_p >= x0)] g(p)`.
pub fn if_quantile(x0: f64, p: f64, dist: &DistributionSpec) -> Result<f64> {
    let g = dist.quantile_density(p)?;
    let xp = dist.quantile(p)?;
    let indicator = if xp >= x0 { 1.0 } else { 0.0 };
    Ok((p - indicator) * g)
}

/// Partial influence functions of `r_p`:
/// `PIF1 = IF(x0; Q_p, F1) / y_p`, `PIF2 = -r_p IF(x0; Q_p, F2) / y_p`.
pub fn pif_ratio_quantiles(group: Group, x0: f64, p: f64, design: &TwoSampleDesign) -> Result<f64> {
    let yp = design.dist2.quantile(p)?;
    if yp == 0.0 {
        return Err(Error::domain("zero denominator quantile"));
    }
    let influence = if_quantile(x0, p, design.dist(group))?;
    Ok(match group {
        Group::First => influence / yp,
        Group::Second => -ratio_of_quantiles(&design.dist1, &design.dist2, p)? * influence / yp,
    })
}

/// Partial influence functions of `R_p`:
/// `±2 R_p [IF_{1-p} - IF_p] / IQR_p` of the contaminated population.
pub fn pif_sq_iqr_ratio(group: Group, x0: f64, p: f64, design: &TwoSampleDesign) -> Result<f64> {
    check_lower_half(p)?;
    let r = squared_iqr_ratio(&design.dist1, &design.dist2, p)?;
    let dist = design.dist(group);
    let diff = if_quantile(x0, 1.0 - p, dist)? - if_quantile(x0, p, dist)?;
    let value = 2.0 * r * diff / iqr(dist, p)?;
    Ok(match group {
        Group::First => value,
        Group::Second => -value,
    })
}

/// Partial influence functions of `ρ`: `ρ(z1² - 1)` and `-ρ(z2² - 1)`.
pub fn pif_ratio_variances(group: Group, x0: f64, design: &TwoSampleDesign) -> Result<f64> {
    let rho = ratio_of_variances(&design.dist1, &design.dist2)?;
    let dist = design.dist(group);
    let z = (x0 - dist.mean()?) / dist.variance()?.sqrt();
    Ok(match group {
        Group::First => rho * (z * z - 1.0),
        Group::Second => -rho * (z * z - 1.0),
    })
}

/// ASV of `sqrt(n1 + n2) r̂_p`:
/// `p(1-p) r_p² { g1²/(w1 x_p²) + g2²/(w2 y_p²) }`.
pub fn asv_ratio_quantiles(design: &TwoSampleDesign, p: f64) -> Result<f64> {
    let xp = design.dist1.quantile(p)?;
    let yp = design.dist2.quantile(p)?;
    if xp == 0.0 || yp == 0.0 {
        return Err(Error::domain(format!("zero quantile at p={p}")));
    }
    let g1 = design.dist1.quantile_density(p)?;
    let g2 = design.dist2.quantile_density(p)?;
    let r = xp / yp;
    Ok(p * (1.0 - p) * r * r * (g1 * g1 / (design.w1() * xp * xp) + g2 * g2 / (design.w2() * yp * yp)))
}

/// `g(p)² + g(1-p)² - p [g(p) + g(1-p)]²`, the per-population IQR bracket.
pub fn iqr_bracket(g_lo: f64, g_hi: f64, p: f64) -> f64 {
    g_lo * g_lo + g_hi * g_hi - p * (g_lo + g_hi).powi(2)
}

/// ASV of `sqrt(n1 + n2) R̂_p`:
/// `4p R_p² { B1 / (w1 IQR1²) + B2 / (w2 IQR2²) }` with `B` from [`iqr_bracket`].
pub fn asv_sq_iqr_ratio(design: &TwoSampleDesign, p: f64) -> Result<f64> {
    check_lower_half(p)?;
    let term = |dist: &DistributionSpec, w: f64| -> Result<f64> {
        let b = iqr_bracket(dist.quantile_density(p)?, dist.quantile_density(1.0 - p)?, p);
        Ok(b / (w * iqr(dist, p)?.powi(2)))
    };
    let r = squared_iqr_ratio(&design.dist1, &design.dist2, p)?;
    Ok(4.0 * p * r * r * (term(&design.dist1, design.w1())? + term(&design.dist2, design.w2())?))
}

/// ASV of `sqrt(n1 + n2) ρ̂`: `ρ² { (E Z1⁴ - 1)/w1 + (E Z2⁴ - 1)/w2 }`.
pub fn asv_ratio_variances(design: &TwoSampleDesign) -> Result<f64> {
    let rho = ratio_of_variances(&design.dist1, &design.dist2)?;
    let k1 = design.dist1.standardized_fourth_moment()?;
    let k2 = design.dist2.standardized_fourth_moment()?;
    Ok(rho * rho * ((k1 - 1.0) / design.w1() + (k2 - 1.0) / design.w2()))
}

/// Asymptotic variance of `sqrt(n) IQR̂_p` in density-quantile form,
/// `p { q_p² + q_{1-p}² - p (q_p + q_{1-p})² } / (q_p² q_{1-p}²)`.
pub fn shoemaker_asv(dist: &DistributionSpec, p: f64) -> Result<f64> {
    check_lower_half(p)?;
    let q_lo = 1.0 / dist.quantile_density(p)?;
    let q_hi = 1.0 / dist.quantile_density(1.0 - p)?;
    Ok(shoemaker_omega_sq(q_lo, q_hi, p))
}

/// ω² from density-quantile values; shared with the sample plug-in.
pub fn shoemaker_omega_sq(q_lo: f64, q_hi: f64, p: f64) -> f64 {
    p * (q_lo * q_lo + q_hi * q_hi - p * (q_lo + q_hi).powi(2)) / (q_lo * q_lo * q_hi * q_hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalP {
    pub p: f64,
    /// Objective (balanced-design ASV of the squared IQR ratio) at `p`.
    pub asv: f64,
    /// The minimum sits on the edge of the searched range.
    pub boundary: bool,
}

impl OptimalP {
    /// `p` at grid resolution, with a minimum at the lower edge reported as 0.
    pub fn reported(&self) -> f64 {
        if self.boundary && self.p <= OPTIMAL_P_RANGE.0 {
            0.0
        } else {
            (self.p * 1000.0).round() / 1000.0
        }
    }
}

pub const OPTIMAL_P_RANGE: (f64, f64) = (0.005, 0.495);
pub const DEFAULT_GRID_STEP: f64 = 0.001;

/// Minimises the balanced one-family ASV of `R̂_p` over `p`: grid search at
/// `step` over [0.005, 0.495] followed by golden-section refinement to 1e-4.
pub fn optimal_p(dist: &DistributionSpec, step: f64) -> Result<OptimalP> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::domain(format!("grid step must lie in (0, 0.1], got {step}")));
    }
    let design = TwoSampleDesign::balanced(*dist, *dist);
    let objective = |p: f64| asv_sq_iqr_ratio(&design, p).unwrap_or(f64::NAN);
    let (lo, hi) = OPTIMAL_P_RANGE;
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    let (best, best_val) = grid
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, objective(p)))
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Singularity(format!("ASV undefined on the whole grid for {dist}")))?;
    if best == 0 || best == grid.len() - 1 {
        return Ok(OptimalP { p: grid[best], asv: best_val, boundary: true });
    }
    let p = golden_section(objective, grid[best - 1], grid[best + 1], 1e-4);
    let v = objective(p);
    if v.is_finite() && v <= best_val {
        Ok(OptimalP { p, asv: v, boundary: false })
    } else {
        Ok(OptimalP { p: grid[best], asv: best_val, boundary: false })
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    #[test]
    fn quantile_influence_plateaus() {
        let e = d("exp(1)");
        assert!((if_quantile(0.0, 0.5, &e).unwrap() + 1.0).abs() < 1e-14);
        assert!((if_quantile(3.0, 0.5, &e).unwrap() - 1.0).abs() < 1e-14);
        let xp = e.quantile(0.5).unwrap();
        // jump at x0 = x_p: the indicator includes equality
        assert!((if_quantile(xp, 0.5, &e).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn ratio_quantile_pif_identical_populations() {
        let e = d("exp(1)");
        let design = TwoSampleDesign::new(e, e, 10, 10).unwrap();
        let xp = e.quantile(0.3).unwrap();
        let g = e.quantile_density(0.3).unwrap();
        let pif1 = pif_ratio_quantiles(Group::First, 5.0, 0.3, &design).unwrap();
        assert!((pif1 - 0.3 * g / xp).abs() < 1e-13);
        let pif2 = pif_ratio_quantiles(Group::Second, 5.0, 0.3, &design).unwrap();
        assert!((pif2 + pif1).abs() < 1e-13);
    }

    #[test]
    fn squared_iqr_pif_between_quartiles() {
        let e = d("exp(1)");
        let design = TwoSampleDesign::balanced(e, e);
        // IF_{0.75}(1) = (0.75 - 1) * 4 = -1; IF_{0.25}(1) = 0.25 * 4/3 = 1/3
        let expected = 2.0 * (-1.0 - 1.0 / 3.0) / 3f64.ln();
        let got = pif_sq_iqr_ratio(Group::First, 1.0, 0.25, &design).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!((got + 2.427_304_604_338_233).abs() < 1e-9);
    }

    #[test]
    fn squared_iqr_pif_three_plateaus() {
        let n = d("normal(0,1)");
        let design = TwoSampleDesign::balanced(n, d("normal(0,2)"));
        let p = 0.2;
        let low = pif_sq_iqr_ratio(Group::First, -10.0, p, &design).unwrap();
        let mid = pif_sq_iqr_ratio(Group::First, 0.0, p, &design).unwrap();
        let high = pif_sq_iqr_ratio(Group::First, 10.0, p, &design).unwrap();
        let g = n.quantile_density(p).unwrap();
        let r = squared_iqr_ratio(&design.dist1, &design.dist2, p).unwrap();
        let width = iqr(&n, p).unwrap();
        let outer = 2.0 * r * (1.0 - 2.0 * p) * g / width;
        assert!((low - outer).abs() < 1e-12);
        assert!((high - outer).abs() < 1e-12);
        assert!((mid + 4.0 * r * p * g / width).abs() < 1e-12);
        // mean zero under F1
        assert!((2.0 * p * outer + (1.0 - 2.0 * p) * mid).abs() < 1e-12);
    }

    #[test]
    fn variance_ratio_pif_values() {
        let design = TwoSampleDesign::balanced(d("normal(1,2)"), d("normal(0,1)"));
        assert!(pif_ratio_variances(Group::First, 3.0, &design).unwrap().abs() < 1e-14);
        assert!((pif_ratio_variances(Group::First, 1.0, &design).unwrap() + 4.0).abs() < 1e-14);
        let heavy = TwoSampleDesign::balanced(d("pareto2(1,2)"), d("normal(0,1)"));
        assert!(matches!(pif_ratio_variances(Group::First, 1.0, &heavy), Err(Error::Moment(_))));
    }

    #[test]
    fn asv_ratio_quantiles_reference() {
        let e = d("exp(1)");
        let v = asv_ratio_quantiles(&TwoSampleDesign::balanced(e, e), 0.5).unwrap();
        let l2 = std::f64::consts::LN_2.powi(2);
        assert!((v - 0.25 * 2.0 * 4.0 / (0.5 * l2)).abs() < 1e-12);
        assert!((v - 8.3255).abs() < 1e-3);
        // scaling X by c multiplies the ASV by c^2
        let scaled = TwoSampleDesign::balanced(d("exp(0.5)"), e);
        let vs = asv_ratio_quantiles(&scaled, 0.5).unwrap();
        assert!((vs - 4.0 * v).abs() < 1e-10);
    }

    #[test]
    fn asv_ratio_variances_reference() {
        let nn = TwoSampleDesign::balanced(d("normal(0,1)"), d("normal(3,1)"));
        assert!((asv_ratio_variances(&nn).unwrap() - 8.0).abs() < 1e-12);
        let nn2 = TwoSampleDesign::balanced(d("normal(0,3)"), d("normal(0,1)"));
        assert!((asv_ratio_variances(&nn2).unwrap() - 8.0 * 81.0).abs() < 1e-9);
        let ee = TwoSampleDesign::balanced(d("exp(0.5)"), d("exp(1)"));
        assert!((asv_ratio_variances(&ee).unwrap() - 32.0 * 16.0).abs() < 1e-9);
        let heavy = TwoSampleDesign::balanced(d("pareto2(1,3)"), d("exp(1)"));
        assert!(matches!(asv_ratio_variances(&heavy), Err(Error::Moment(_))));
    }

    #[test]
    fn iqr_bracket_identity() {
        for &(a, b, p) in &[(1.3, 4.0, 0.25), (0.2, 9.1, 0.1), (5.0, 5.0, 0.4), (-1.0, 2.0, 0.3)] {
            let lhs = p * iqr_bracket(a, b, p);
            let rhs = p * ((1.0 - p) * (a * a + b * b) - 2.0 * p * a * b);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn shoemaker_asv_values() {
        let w = shoemaker_asv(&d("exp(1)"), 0.25).unwrap();
        assert!((w - 8.0 / 3.0).abs() < 1e-12, "{w}");
        let n = d("normal(0,1)");
        let p = 0.1;
        let g = n.quantile_density(p).unwrap();
        assert!((shoemaker_asv(&n, p).unwrap() - 2.0 * p * (1.0 - 2.0 * p) * g * g).abs() < 1e-10);
    }

    #[test]
    fn shoemaker_asv_matches_one_sample_iqr_bracket() {
        let dist = d("lognormal(0,1)");
        for &p in &[0.05, 0.2, 0.35] {
            let g_lo = dist.quantile_density(p).unwrap();
            let g_hi = dist.quantile_density(1.0 - p).unwrap();
            let via_bracket = p * iqr_bracket(g_lo, g_hi, p);
            assert!((shoemaker_asv(&dist, p).unwrap() - via_bracket).abs() < 1e-9 * via_bracket);
        }
    }

    #[test]
    fn closed_form_for_location_scale_pairs() {
        let base = d("normal(0,1)");
        let p = 0.15;
        let g0 = base.quantile_density(p).unwrap();
        let q = iqr(&base, p).unwrap();
        for &(s1, s2, n1, n2) in &[(1.0, 1.0, 5, 5), (2.0, 0.5, 30, 10), (3.0, 1.0, 1, 4)] {
            let design = TwoSampleDesign::new(
                DistributionSpec::Normal { mu: 4.0, sigma: s1 },
                DistributionSpec::Normal { mu: -2.0, sigma: s2 },
                n1,
                n2,
            )
            .unwrap();
            let w1 = design.w1();
            let closed =
                4.0 * p * (s1 / s2).powi(4) * iqr_bracket(g0, g0, p) / (w1 * (1.0 - w1) * q * q);
            let v = asv_sq_iqr_ratio(&design, p).unwrap();
            assert!((v - closed).abs() < 1e-9 * closed);
        }
    }

    #[test]
    fn optimal_p_argument_checks() {
        assert!(optimal_p(&d("exp(1)"), 0.0).is_err());
        let u = optimal_p(&d("uniform(0,1)"), DEFAULT_GRID_STEP).unwrap();
        assert!(u.boundary);
        assert!((u.p - 0.005).abs() < 1e-12);
    }
}
