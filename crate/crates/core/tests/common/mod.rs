//! Numerical oracles for the integration and acceptance tests: adaptive
//! Gauss–Kronrod quadrature on finite and infinite ranges, expectations under
//! a density with breakpoints, and ε-contaminated functionals evaluated by
//! bisection on the contaminated CDF.

#![allow(dead_code)]

use qratio::DistributionSpec;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (est, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * est.abs()) || depth == 0 {
        return est;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` for finite or infinite endpoints.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    integrate_dyn(&f, a, b, tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let depth = 40;
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, tol, depth),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, tol, depth)
        }
        (false, true) => {
            let g = |t: f64| f(b - (1.0 - t) / t) / (t * t);
            adaptive(&g, 0.0, 1.0, tol, depth)
        }
        (false, false) => {
            integrate_dyn(f, f64::NEG_INFINITY, 0.0, 0.5 * tol) + integrate_dyn(f, 0.0, f64::INFINITY, 0.5 * tol)
        }
    }
}

/// `E[h(X)]` by quadrature of `h * pdf`, split at `breaks` inside the support.
pub fn expect(dist: &DistributionSpec, h: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let (lo, hi) = dist.support();
    let mut points = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(f64::total_cmp);
    points.extend(inner);
    points.push(hi);
    points
        .windows(2)
        .map(|w| integrate(|x| h(x) * dist.pdf(x), w[0], w[1], 1e-13))
        .sum()
}

pub fn mean_and_variance(dist: &DistributionSpec) -> (f64, f64) {
    let m = expect(dist, |x| x, &[]);
    let v = expect(dist, |x| (x - m).powi(2), &[m]);
    (m, v)
}

/// `inf{x : (1-ε) F(x) + ε 1[x >= x0] >= p}` by bisection.
pub fn contaminated_quantile(dist: &DistributionSpec, p: f64, eps: f64, x0: f64) -> f64 {
    let g = |x: f64| (1.0 - eps) * dist.cdf(x) + if x >= x0 { eps } else { 0.0 };
    let mut lo = dist.quantile(p - 0.01).unwrap();
    let mut hi = dist.quantile(p + 0.01).unwrap();
    assert!(g(lo) < p && g(hi) >= p);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Variance of `(1-ε) F + ε δ_{x0}` given the mean and variance of `F`.
pub fn contaminated_variance((m, v): (f64, f64), eps: f64, x0: f64) -> f64 {
    let me = (1.0 - eps) * m + eps * x0;
    (1.0 - eps) * (v + (m - me).powi(2)) + eps * (x0 - me).powi(2)
}
