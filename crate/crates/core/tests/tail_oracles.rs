use exdev::quadrature::{integrate, QuadOptions};
use exdev::*;

#[test]
fn legendre_oracle_agrees() {
    let d = builtin_weibull(2.0).unwrap();
    for x in [1.0, 1.5, 3.0, 6.0, 12.0] {
        let a = rate_i(&d, x).unwrap();
        let b = rate_legendre(&d, x).unwrap();
        assert!((a - b).abs() <= 1e-8 * b, "x={x}: {a} vs {b}");
    }
}

#[test]
fn n1_same_order_as_quadrature() {
    let d = builtin_weibull(2.0).unwrap();
    for a in [2.0, 3.0] {
        let est = tail_prob_with(&d, 1, a, 0.0).unwrap();
        let exact = integrate(|x| d.pdf(x).unwrap(), a, a + 20.0, QuadOptions::default())
            .unwrap()
            .0;
        let r = est.prob / exact;
        assert!(r > 0.3 && r < 3.0, "a={a}: ratio {r}");
    }
}

#[test]
fn tail_monotone_in_level_and_n() {
    let d = builtin_weibull(2.0).unwrap();
    let p = |n, a| tail_prob_with(&d, n, a, 0.0).unwrap().log_prob;
    assert!(p(10, 2.0) > p(10, 2.5) && p(10, 2.5) > p(10, 3.0));
    assert!(p(10, 2.0) > p(20, 2.0) && p(20, 2.0) > p(40, 2.0));
}

#[test]
fn lambda_increases_with_n() {
    let d = builtin_weibull(2.0).unwrap();
    let l: Vec<f64> = [10u64, 100, 1000]
        .iter()
        .map(|&n| tail_prob(&d, n, 3.0).unwrap().lambda_n)
        .collect();
    assert!(l[0] < l[1] && l[1] < l[2]);
}

#[test]
fn log_prob_over_n_tends_to_minus_rate() {
    let d = builtin_weibull(2.0).unwrap();
    let i = rate_i(&d, 2.0).unwrap();
    let gaps: Vec<f64> = [10u64, 100, 1000, 10_000]
        .iter()
        .map(|&n| (tail_prob_with(&d, n, 2.0, 0.0).unwrap().log_prob / n as f64 + i).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn is_oracle_at_mean_is_plain_monte_carlo() {
    let d = builtin_weibull(2.0).unwrap();
    let n = 100u64;
    let e = tail_prob_is_oracle(&d, n, d.mean(), 200_000, 3).unwrap();
    assert_eq!(e.t, 0.0);
    let skew = cumulants(&d, 0.0).unwrap().skewness();
    // one-term Edgeworth value of P(Z > 0)
    let expect = 0.5 - skew / (6.0 * (2.0 * std::f64::consts::PI * n as f64).sqrt());
    assert!(
        (e.estimate - expect).abs() < 3.0 * e.std_error + 2e-3,
        "{} vs {expect}",
        e.estimate
    );
}

#[test]
fn is_oracle_brackets_quadrature_at_n1() {
    let d = builtin_weibull(2.0).unwrap();
    let exact = integrate(|x| d.pdf(x).unwrap(), 3.0, 20.0, QuadOptions::default())
        .unwrap()
        .0;
    let e = tail_prob_is_oracle(&d, 1, 3.0, 200_000, 11).unwrap();
    assert!(
        (e.estimate - exact).abs() < 3.0 * e.std_error,
        "{} ± {} vs {exact}",
        e.estimate,
        e.std_error
    );
}

#[test]
fn is_std_error_scales_with_samples() {
    let d = builtin_weibull(2.0).unwrap();
    let a = tail_prob_is_oracle(&d, 10, 3.0, 50_000, 1).unwrap();
    let b = tail_prob_is_oracle(&d, 10, 3.0, 200_000, 1).unwrap();
    let r = b.std_error / a.std_error;
    assert!((r - 0.5).abs() < 0.1, "{r}");
}

#[test]
fn is_oracle_deterministic_and_budgeted() {
    let d = builtin_weibull(2.0).unwrap();
    let a = tail_prob_is_oracle(&d, 10, 3.0, 10_000, 5).unwrap();
    let b = tail_prob_is_oracle(&d, 10, 3.0, 10_000, 5).unwrap();
    assert_eq!(a.estimate, b.estimate);
    assert!(tail_prob_is_oracle(&d, 1 << 20, 3.0, 1 << 20, 5).is_err());
}
