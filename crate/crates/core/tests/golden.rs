//! End-to-end interval values frozen from the independent NumPy/SciPy
//! evaluation in `tests/oracles/golden.py`.

use qratio::empirical::{pb_order_index, pb_tail_and_z};
use qratio::intervals::{
    ci_f_interval, ci_median_ratio_pb, ci_ratio_quantiles, ci_ratio_variances, ci_sq_iqr_ratio,
    shoemaker_test, IntervalEstimate,
};
use qratio::{BandwidthRule, Sample};

const GOLD: f64 = 0.6180339887498949;
const PLASTIC: f64 = 0.7548776662466927;

fn dataset(n: usize, step: f64, offset: f64, scale: f64) -> Sample {
    let values = (1..=n)
        .map(|i| {
            let u = i as f64 * step + offset;
            let u = u - u.floor();
            -(-u).ln_1p() * scale
        })
        .collect();
    Sample::new(values).unwrap()
}

fn pair() -> (Sample, Sample) {
    (dataset(500, GOLD, 0.0, 1.0), dataset(400, PLASTIC, 0.1, 1.5))
}

fn check(e: IntervalEstimate, expected: (f64, f64, f64)) {
    let tol = 1e-9;
    for (got, want) in [(e.point, expected.0), (e.lower, expected.1), (e.upper, expected.2)] {
        assert!((got / want - 1.0).abs() < tol, "{:?}: got {got}, want {want}", e.method);
    }
}

#[test]
fn ratio_of_medians_interval() {
    let (x, y) = pair();
    let e = ci_ratio_quantiles(&x, &y, 0.5, 0.05, BandwidthRule::default()).unwrap();
    check(e, (0.66218052938441, 0.5446173747703819, 0.8051213086631471));
}

#[test]
fn squared_iqr_ratio_interval() {
    let (x, y) = pair();
    let e = ci_sq_iqr_ratio(&x, &y, 0.2, 0.05, BandwidthRule::default()).unwrap();
    check(e, (0.4416246030901646, 0.29718228091896165, 0.6562715968511211));
}

#[test]
fn variance_ratio_interval() {
    let (x, y) = pair();
    check(
        ci_ratio_variances(&x, &y, 0.05).unwrap(),
        (0.3659252205851995, 0.23040629113060546, 0.5811528253125049),
    );
}

#[test]
fn f_interval() {
    let (x, y) = pair();
    check(
        ci_f_interval(&x, &y, 0.05).unwrap(),
        (0.3659252205851995, 0.3034013519707189, 0.4404694976441874),
    );
}

#[test]
fn price_bonett_interval() {
    let (x, y) = pair();
    check(
        ci_median_ratio_pb(&x, &y, 0.05).unwrap(),
        (0.66218052938441, 0.5483062499080599, 0.7997046423770336),
    );
}

#[test]
fn price_bonett_ingredients() {
    assert_eq!(pb_order_index(50), 18);
    let (p1, z) = pb_tail_and_z(50);
    assert!((p1 - 0.016419568782134242).abs() < 1e-12);
    assert!((z - 2.1340445091200535).abs() < 1e-9);
    let (p1, z) = pb_tail_and_z(25);
    assert!((p1 - 0.021642625331878662).abs() < 1e-12);
    assert!((z - 2.020947011260227).abs() < 1e-9);
}

#[test]
fn shoemaker_statistic() {
    let (x, y) = pair();
    let t = shoemaker_test(&x, &y, 0.25).unwrap();
    assert!((t.statistic / -3.9709169316378863 - 1.0).abs() < 1e-9, "{}", t.statistic);
    assert!((t.p_value / 7.159654173685455e-05 - 1.0).abs() < 1e-6, "{}", t.p_value);
}
