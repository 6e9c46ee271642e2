use exdev::conditional::*;
use exdev::quadrature::{integrate, QuadOptions};
use exdev::*;

fn short() -> GibbsConfig {
    GibbsConfig {
        chains: 4,
        draws_per_chain: 5000,
        ..Default::default()
    }
}

#[test]
fn n2_marginal_is_the_quadrature_conditional() {
    let d = builtin_weibull(2.5).unwrap();
    let a = 1.6;
    let s = sample_point_conditional(&d, &ConditionDescriptor::point(2, a), &short()).unwrap();
    let f = |u: f64| (d.ln_pdf_unchecked(u) + d.ln_pdf_unchecked(2.0 * a - u)).exp();
    let opts = QuadOptions::default();
    let z = integrate(f, 0.0, 2.0 * a, opts).unwrap().0;
    let cdf = |x: f64| integrate(f, 0.0, x.clamp(1e-300, 2.0 * a), opts).unwrap().0 / z;
    let dks = ks_one_sample(&s.x1, cdf);
    let p = ks_pvalue(dks, s.len() as f64);
    assert!(p > 0.01, "D = {dks}, p = {p}");
}

#[test]
fn constraint_holds_at_every_retained_state() {
    let d = builtin_weibull(2.5).unwrap();
    for n in [3usize, 17, 64] {
        let a = (n as f64).powf(0.35);
        let s = sample_point_conditional(&d, &ConditionDescriptor::point(n, a), &short()).unwrap();
        assert!(s.max_residual < 1e-9, "n={n}: {}", s.max_residual);
        assert!(s.x1.iter().all(|&x| x >= 0.0 && x <= n as f64 * a));
    }
}

#[test]
fn first_coordinate_mean_is_level() {
    let d = builtin_weibull(2.5).unwrap();
    let n = 16;
    let a = 2.5;
    let cfg = short();
    let s = sample_point_conditional(&d, &ConditionDescriptor::point(n, a), &cfg).unwrap();
    // chain means as batches
    let means: Vec<f64> = s
        .x1
        .chunks(cfg.draws_per_chain)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let k = means.len() as f64;
    let m = means.iter().sum::<f64>() / k;
    let se = (means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0) / k).sqrt();
    assert!((m - a).abs() < 4.0 * se.max(1e-4), "{m} vs {a} (se {se})");
}

#[test]
fn coordinates_are_exchangeable() {
    let d = builtin_weibull(2.5).unwrap();
    let s = sample_point_conditional(&d, &ConditionDescriptor::point(8, 2.0), &short()).unwrap();
    let dks = ks_two_sample(&s.x1, &s.x2);
    // thinned chain draws are mildly correlated; use a third of the nominal size
    let neff = s.len() as f64 / 3.0;
    assert!(dks < 1.63 * (2.0 / neff).sqrt(), "{dks}");
}

#[test]
fn deterministic_given_seed() {
    let d = builtin_weibull(2.5).unwrap();
    let cond = ConditionDescriptor::point(8, 2.0);
    let cfg = GibbsConfig {
        chains: 3,
        draws_per_chain: 200,
        ..Default::default()
    };
    let a = sample_point_conditional(&d, &cond, &cfg).unwrap();
    let b = sample_point_conditional(&d, &cond, &cfg).unwrap();
    assert_eq!(a.x1, b.x1);
    let c = sample_point_conditional(&d, &cond, &GibbsConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(a.x1, c.x1);
}

#[test]
fn invalid_conditions_are_rejected() {
    let d = builtin_weibull(2.5).unwrap();
    assert!(sample_point_conditional(&d, &ConditionDescriptor::point(1, 2.0), &short()).is_err());
    let e = sample_point_conditional(&d, &ConditionDescriptor::point(4, -1.0), &short()).unwrap_err();
    assert!(matches!(e, Error::InfeasibleStart(_)));
    assert!(sample_point_conditional(&d, &ConditionDescriptor::exceedance(4, 2.0), &short()).is_err());
}

#[test]
fn exceedance_acceptance_near_half_and_sums_above_level() {
    for d in [builtin_weibull(2.0).unwrap(), builtin_double_exp().unwrap()] {
        let n = 10;
        let a = 2.0 * d.mean() + 0.5;
        let s = sample_exceedance_conditional(
            &d,
            &ConditionDescriptor::exceedance(n, a),
            20_000,
            ProposalTilt::Matched,
            4,
        )
        .unwrap();
        assert!((s.acceptance_rate - 0.5).abs() < 0.15, "{}", s.acceptance_rate);
        assert!(s.blocks.iter().all(|b| b.sum >= n as f64 * a));
    }
}

#[test]
fn weighted_tilt_agrees_with_plain_rejection() {
    let d = builtin_weibull(2.0).unwrap();
    let n = 3;
    let a = d.mean() + 0.3;
    let cond = ConditionDescriptor::exceedance(n, a);
    let tilted = sample_exceedance_conditional(&d, &cond, 200_000, ProposalTilt::Matched, 1).unwrap();
    let plain = sample_exceedance_conditional(&d, &cond, 400_000, ProposalTilt::Fixed(0.0), 2).unwrap();
    assert!(plain.blocks.iter().all(|b| b.weight == 1.0));
    for cut in [a, a + 0.5] {
        let (p1, s1) = tilted.probability(|b| b.x1 > cut);
        let (p2, s2) = plain.probability(|b| b.x1 > cut);
        assert!((p1 - p2).abs() < 4.0 * (s1 * s1 + s2 * s2).sqrt(), "cut {cut}: {p1} vs {p2}");
    }
}

#[test]
fn low_acceptance_is_reported() {
    let d = builtin_weibull(2.0).unwrap();
    let e = sample_exceedance_conditional(
        &d,
        &ConditionDescriptor::exceedance(20, 3.0),
        10_000,
        ProposalTilt::Fixed(0.0),
        1,
    )
    .unwrap_err();
    assert!(matches!(e, Error::LowAcceptance(_)));
}

#[test]
fn local_check_ratios() {
    let d = builtin_weibull(2.5).unwrap();
    let grid: Vec<f64> = (0..=40).map(|i| 0.05 + 0.1 * i as f64).collect();
    let (n2, _) = gibbs_local_check(&d, &ConditionDescriptor::point(2, 1.8), &grid, &short()).unwrap();
    // n = 2 is far from the limit: the exact ratio is visibly off 1 somewhere on the bulk
    assert!(n2.iter().any(|r| (r.exact_ratio - 1.0).abs() > 0.2));
    // the kernel estimate integrates against π to about one over the grid
    let td = TiltedDensity::with_mean(&d, 1.8).unwrap();
    let mass: f64 = n2.iter().map(|r| r.ratio * r.tilted * 0.1).sum();
    let pi_mass = td.mass_between(0.0, 4.1).unwrap();
    assert!((mass - 1.0).abs() < 0.05 && pi_mass > 0.99, "{mass}");

    let mut last = f64::INFINITY;
    for n in [8usize, 32, 128] {
        let a = (n as f64).powf(0.35);
        let ex = exact_point_marginal(&d, n, a).unwrap();
        let td = ex.tilted().clone();
        let dev = (ex.pdf(a) / td.pdf(a) - 1.0).abs();
        assert!(dev < last, "n={n}: {dev}");
        last = dev;
    }
}

#[test]
fn location_law_near_gaussian_and_concentrating() {
    let d = builtin_weibull(3.0).unwrap();
    let rows = location_law_check(&d, &[5.0, 20.0, 80.0], 20_000, 1).unwrap();
    assert!(rows[0].ks_exact > rows[1].ks_exact && rows[1].ks_exact > rows[2].ks_exact);
    assert!(rows[0].s > rows[1].s && rows[1].s > rows[2].s);
    let crit = 1.63 / (20_000f64).sqrt();
    for r in &rows {
        assert!(r.ks < r.ks_exact + crit, "{r:?}");
    }
}

#[test]
fn dlp_estimate_monotone_in_window() {
    let d = builtin_weibull(2.5).unwrap();
    for n in [16usize, 64] {
        let a = (n as f64).powf(0.4);
        let c = invert_m(&d, a).unwrap();
        let w = epsilon_schedule_unchecked(2.5, n, a).unwrap();
        let eps = 3.0 * c.s();
        let e = dlp_check(&d, &ConditionDescriptor::exceedance(n, a), &w.with_epsilon(eps), 20_000, 0.0, 1).unwrap();
        assert!(e.condition_proxy > 0.5);
        assert!(e.estimate > 0.0 && e.estimate <= 1.0);
        let wide = DlpEstimate::from_sample(
            &d,
            &sample_exceedance_conditional(&d, &ConditionDescriptor::exceedance(n, a), 20_000, ProposalTilt::Matched, 1)
                .unwrap(),
            &w,
            0.0,
        );
        assert!(wide.estimate >= e.estimate);
    }
}

#[test]
fn null_tv_floor_below_five_percent() {
    let d = builtin_weibull(2.5).unwrap();
    let td = TiltedDensity::with_mean(&d, 3.0).unwrap();
    let xs = sampler_tilted(&td, 100_000, 9).unwrap();
    let e = marginal_tv(&xs, &td, 2).unwrap();
    assert!(e.tv < 0.05 && e.ci_low <= e.tv && e.tv <= e.ci_high);
}

#[test]
fn exact_tv_decreases_along_admissible_schedule() {
    let d = builtin_weibull(2.5).unwrap();
    let tvs: Vec<f64> = [8usize, 32, 128]
        .iter()
        .map(|&n| {
            let a = (n as f64).powf(0.35);
            let ex = exact_point_marginal(&d, n, a).unwrap();
            tv_by_quadrature(&ex, ex.tilted()).unwrap()
        })
        .collect();
    assert!(tvs[0] > tvs[1] && tvs[1] > tvs[2], "{tvs:?}");
}
