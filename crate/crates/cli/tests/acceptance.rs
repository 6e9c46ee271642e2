//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use exdev::conditional::{
    ks_one_sample, ks_pvalue, sample_point_conditional, AmbientLaw, ConditionDescriptor,
    GibbsConfig,
};
use exdev::edgeworth::std_normal_pdf;
use exdev::quadrature::{integrate, QuadOptions};
use exdev::*;
use exdev_cli::config::{DlpParams, EquivParams, GibbsTvParams, LevelsetParams};
use exdev_cli::experiments;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let r = (hi / lo).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo * (r * i as f64).exp() })
        .collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn builtins() -> Vec<(&'static str, LightTailDensity)> {
    vec![
        ("weibull(2)", builtin_weibull(2.0).unwrap()),
        ("weibull(3)", builtin_weibull(3.0).unwrap()),
        ("double_exp", builtin_double_exp().unwrap()),
    ]
}

fn c1_abelian() -> Outcome {
    let grid = geometric(10.0, 1e4, 25);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, d) in builtins() {
        let r = abelian_check(&d, &grid).unwrap();
        let s = &r.summary;
        let ok = s.m_dev_last < s.m_dev_first
            && s.s2_dev_last < s.s2_dev_first
            && s.skewness_monotone
            && s.skewness_last.abs() < 0.1;
        pass &= ok;
        parts.push(format!(
            "{name}: |m/ψ−1| {:.2e}→{:.2e}, |s²/ψ'−1| {:.2e}→{:.2e}, skew {:.3}→{:.4}",
            s.m_dev_first, s.m_dev_last, s.s2_dev_first, s.s2_dev_last, s.skewness_first, s.skewness_last
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c2_self_neglect() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, d) in builtins() {
        let sups: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&t| self_neglect_check(&d, t, (-3.0, 3.0)).unwrap())
            .collect();
        pass &= strictly_decreasing(&sups);
        parts.push(format!("{name}: {:.4} {:.4} {:.4}", sups[0], sups[1], sups[2]));
    }
    outcome(pass, format!("sup over t = 1e2, 1e3, 1e4: {}", parts.join("; ")))
}

fn c3_edgeworth() -> Outcome {
    let d = builtin_weibull(3.0).unwrap();
    let td = TiltedDensity::with_mean(&d, 20.0).unwrap();
    let skew = td.cumulants().skewness();
    let mut edge = Vec::new();
    let mut gauss = Vec::new();
    for n in [4usize, 16, 64] {
        let tab = convolve_oracle(&td, n, GridSpec::default()).unwrap();
        edge.push(tab.sup_distance(|x| edgeworth_density(&td, n, x).unwrap().value, 8.0));
        gauss.push(tab.sup_distance(std_normal_pdf, 8.0));
    }
    let f1 = edge[0] / edge[1];
    let f2 = edge[1] / edge[2];
    let gauss_applies = skew.abs() > 0.05;
    let gauss_ok = gauss[0] >= edge[0];
    let pass = f1 >= 1.5 && f2 >= 1.5 && (!gauss_applies || gauss_ok);
    outcome(
        pass,
        format!(
            "sup err {:.3e}/{:.3e}/{:.3e} at n=4/16/64, factors {f1:.2} and {f2:.2}; skew {skew:.4} ({}); gaussian err at n=4 {:.3e} ({})",
            edge[0],
            edge[1],
            edge[2],
            if gauss_applies { "gaussian check applies" } else { "|skew| ≤ 0.05, gaussian check not required" },
            gauss[0],
            if gauss_ok { "≥ edgeworth" } else { "< edgeworth" },
        ),
    )
}

fn c4_tail() -> Outcome {
    let d = builtin_weibull(2.0).unwrap();
    let sp = match tail_prob(&d, 10, 3.0) {
        Ok(sp) => sp,
        Err(e) => return outcome(false, format!("saddlepoint refused: {e}")),
    };
    let lambda_ok = sp.lambda_n >= 5.0;
    let or = tail_prob_is_oracle(&d, 10, 3.0, 10_000_000, 1).unwrap();
    let rel = (sp.prob / or.estimate - 1.0).abs();
    let tol = (3.0 * or.rel_std_error).max(0.1);
    outcome(
        lambda_ok && rel <= tol,
        format!(
            "λ_n = {:.2}; saddlepoint {:.5e}, IS {:.5e} ± {:.2e} (1e7 draws); rel diff {rel:.4} vs tolerance {tol:.3}",
            sp.lambda_n, sp.prob, or.estimate, or.std_error
        ),
    )
}

fn c5_rate() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut convex = true;
    let mut pairs = 0;
    for (_, d) in builtins() {
        let m = d.mean();
        let xs: Vec<f64> = (1..=20).map(|i| m + 0.4 * i as f64).collect();
        let rates: Vec<f64> = xs.iter().map(|&x| rate_i(&d, x).unwrap()).collect();
        for (&x, &r) in xs.iter().zip(&rates) {
            let l = rate_legendre(&d, x).unwrap();
            worst = worst.max((r - l).abs() / l.abs());
        }
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                let mid = rate_i(&d, 0.5 * (xs[i] + xs[j])).unwrap();
                convex &= mid <= 0.5 * (rates[i] + rates[j]) * (1.0 + 1e-12);
                pairs += 1;
            }
        }
    }
    outcome(
        worst < 1e-8 && convex,
        format!("worst relative gap {worst:.2e} on 3×20 points; midpoint convexity on {pairs} pairs: {convex}"),
    )
}

fn c6_gibbs_tv() -> Outcome {
    let d = builtin_weibull(2.5).unwrap();
    let p = GibbsTvParams {
        n_list: vec![8, 32, 128],
        alpha: 0.35,
        chains: 8,
        steps: 12_500,
        burn_in_factor: 1000,
        stride_factor: 4,
        null_test: true,
    };
    let (r, _) = experiments::gibbs_tv(&d, &p, 1).unwrap();
    let tv: Vec<f64> = r.rows.iter().map(|r| r.tv.tv).collect();
    let floor = r.null_floor.unwrap().tv;
    let pass = strictly_decreasing(&tv) && tv[2] < 0.1 && floor < 0.05;
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={} TV {:.4} [{:.4}, {:.4}] (exact {:.4})",
                r.n, r.tv.tv, r.tv.ci_low, r.tv.ci_high, r.exact_tv
            )
        })
        .collect();
    outcome(
        pass,
        format!(
            "{}; null floor {floor:.4}; {} draws, stride 4n",
            rows.join(", "),
            r.rows[0].tv.sample_size
        ),
    )
}

fn c7_n2_exact() -> Outcome {
    let d = builtin_weibull(2.5).unwrap();
    let a = 1.6;
    let s = sample_point_conditional(&d, &ConditionDescriptor::point(2, a), &GibbsConfig::default())
        .unwrap();
    let f = |u: f64| (d.ln_pdf_unchecked(u) + d.ln_pdf_unchecked(2.0 * a - u)).exp();
    let opts = QuadOptions::default();
    let z = integrate(f, 0.0, 2.0 * a, opts).unwrap().0;
    let cdf = |x: f64| integrate(f, 0.0, x.clamp(1e-300, 2.0 * a), opts).unwrap().0 / z;
    let dks = ks_one_sample(&s.x1, cdf);
    let p = ks_pvalue(dks, s.len() as f64);
    outcome(
        p > 0.01,
        format!("weibull(2.5), a = {a}, {} draws: D = {dks:.5}, p = {p:.3}", s.len()),
    )
}

fn c8_dlp() -> Outcome {
    let spec = DensitySpec::Weibull { k: 2.5 };
    let d = spec.build().unwrap();
    let p = DlpParams {
        k: Some(2.5),
        alpha: 0.4,
        n_list: vec![16, 64, 256],
        count: 200_000,
        delta: 0.0,
    };
    let (r, _) = experiments::dlp(&d, &spec, &p, 1).unwrap();
    let est: Vec<String> = r
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={} ε/a={:.2} P={:.4}±{:.4}",
                r.n, r.window.epsilon_over_a, r.estimate.estimate, r.estimate.std_error
            )
        })
        .collect();
    let diag: Vec<String> = r
        .rows
        .iter()
        .map(|r| format!("{:.4}", r.diagnostic.estimate))
        .collect();
    let c = &r.checks;
    outcome(
        c.estimate_non_decreasing && c.last_above_0_9,
        format!(
            "{}; strictly increasing: {}; schedule vacuous (window reaches below 0): {}; report-only window n^0.1·s·√(2 log n): {}",
            est.join(", "),
            c.estimate_strictly_increasing,
            c.schedule_vacuous,
            diag.join(" → ")
        ),
    )
}

fn c9_equiv() -> Outcome {
    let d = builtin_weibull(2.5).unwrap();
    let p = EquivParams {
        n: 128,
        alpha: 0.35,
        a: None,
        count: 200_000,
        half_widths: vec![1.0],
        band: (0.8, 1.2),
    };
    let (r, _) = experiments::equiv(&d, &p, 1).unwrap();
    let row = &r.report.rows[0];
    outcome(
        r.checks.ratios_in_band,
        format!(
            "n = 128, a = {:.3}, s = {:.3}: ratio {:.4}, MC band [{:.4}, {:.4}], mass {:.4} vs {:.4}, ESS {:.0}",
            r.report.a_n,
            r.report.s,
            row.ratio,
            row.band_low,
            row.band_high,
            row.exceedance_mass,
            row.tilted_mass,
            r.report.effective_sample_size
        ),
    )
}

fn c10_levelset() -> Outcome {
    let d = builtin_weibull(3.0).unwrap();
    let p = LevelsetParams {
        f: "sumsq".into(),
        dim: 1,
        a_list: vec![5.0, 20.0, 80.0],
        count: 100_000,
        epsilon_rel: 0.05,
        ambient: "signed_root".into(),
    };
    let (r, _) = experiments::levelset(&d, &p, 1).unwrap();
    // independent route: Metropolis on the same f-tilt
    let mh: Vec<f64> = p
        .a_list
        .iter()
        .map(|&a| {
            let law = exdev::conditional::f_tilted_density(
                AmbientLaw::SignedRoot(d.clone()),
                1,
                exdev::conditional::FCatalog::Sumsq,
                a,
                1,
            )
            .unwrap();
            let run = law.metropolis(50_000, 20_000, 1, 2).unwrap();
            let rad: Vec<f64> = run.f_values.iter().map(|v| v.sqrt()).collect();
            let m = rad.iter().sum::<f64>() / rad.len() as f64;
            (rad.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (rad.len() - 1) as f64).sqrt()
        })
        .collect();
    let rows: Vec<String> = r
        .rows
        .iter()
        .zip(&mh)
        .map(|(r, m)| {
            format!(
                "a={}: sd {:.4} (metropolis {m:.4}), sd/√a {:.5}",
                r.tilt.a, r.radial_sd, r.relative_radial_sd
            )
        })
        .collect();
    outcome(
        r.checks.radial_sd_decreasing && r.checks.relative_radial_sd_decreasing,
        format!("|X| − √a under X² ~ weibull(3): {}", rows.join(", ")),
    )
}

fn c11_cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_exdev");
    let configs: [(&str, &str); 7] = [
        ("tilt", "[density]\nkind = \"weibull\"\nk = 3.0\n[tilt]\ngrid = \"10:10000:12\"\n"),
        ("edgeworth", "[density]\nkind = \"weibull\"\nk = 3.0\n[edgeworth]\nn_list = [4, 16]\nx_points = 41\n"),
        ("tail", "[density]\nkind = \"weibull\"\nk = 2.0\n[tail]\noracle_samples = 100000\n"),
        ("gibbs-tv", "[density]\nkind = \"weibull\"\nk = 2.5\n[gibbs_tv]\nn_list = [8, 32]\nchains = 4\nsteps = 1000\n"),
        ("dlp", "[dlp]\nk = 2.5\nn_list = [16, 64]\ncount = 20000\n"),
        ("levelset", "[density]\nkind = \"weibull\"\nk = 3.0\n[levelset]\ncount = 5000\n"),
        ("equiv", "[density]\nkind = \"weibull\"\nk = 2.5\n[equiv]\ncount = 50000\n"),
    ];
    let run = |dir: &Path, args: &[&str]| {
        Command::new(bin)
            .args(args)
            .current_dir(dir)
            .env_remove("EXDEV_THREADS")
            .output()
            .unwrap()
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut identical = 0;
    let mut mismatched = Vec::new();
    for (kind, body) in configs {
        let mut outputs = Vec::new();
        for (i, dir) in dirs.iter().enumerate() {
            let cfg = format!("experiment = \"{kind}\"\nseed = 11\n{body}");
            fs::write(dir.path().join("cfg.toml"), cfg).unwrap();
            let threads = if i == 0 { "1" } else { "4" };
            let o = run(dir.path(), &["run", "--config", "cfg.toml", "--threads", threads]);
            if !o.status.success() {
                mismatched.push(format!("{kind} failed: {}", String::from_utf8_lossy(&o.stderr)));
                continue;
            }
            outputs.push((
                fs::read(dir.path().join(format!("{kind}.json"))).unwrap(),
                fs::read(dir.path().join(format!("{kind}.csv"))).unwrap(),
            ));
        }
        if outputs.len() == 2 && outputs[0] == outputs[1] {
            identical += 1;
        } else {
            mismatched.push(kind.to_string());
        }
    }

    let p = dirs[0].path();
    fs::write(p.join("bad.toml"), "experiment = \"tail\"\n[tail\n").unwrap();
    fs::write(p.join("unknown.toml"), "experiment = \"tail\"\nsede = 3\n").unwrap();
    fs::write(p.join("neg.toml"), "experiment = \"tail\"\n[density]\nkind = \"weibull\"\nk = 2.0\n[tail]\noracle_samples = 0\n").unwrap();
    fs::write(p.join("badk.toml"), "experiment = \"tilt\"\n[density]\nkind = \"weibull\"\nk = -2.0\n").unwrap();
    let cases: [(&[&str], &str); 8] = [
        (&["tilt", "--density", "nowhere.toml"], "CONFIG_MISSING"),
        (&["run", "--config", "nowhere.toml"], "CONFIG_MISSING"),
        (&["run", "--config", "bad.toml"], "CONFIG_PARSE"),
        (&["run", "--config", "unknown.toml"], "CONFIG_PARSE"),
        (&["run", "--config", "neg.toml"], "CONFIG_INVALID"),
        (&["run", "--config", "badk.toml"], "INVALID_PARAMETER"),
        (&["gibbs-tv", "--steps", "many"], "CONFIG_INVALID"),
        (&["run"], "CONFIG_INVALID"),
    ];
    let mut tagged = 0;
    for (args, tag) in cases {
        let o = run(p, args);
        let err = String::from_utf8_lossy(&o.stderr);
        if o.status.code() == Some(2) && err.starts_with(&format!("{tag}: ")) && err.lines().count() == 1 {
            tagged += 1;
        } else {
            mismatched.push(format!("{args:?} → {:?} {err}", o.status.code()));
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{identical}/7 subcommands byte-identical across runs (threads 1 vs 4); {tagged}/8 invalid configs exit 2 with tag{}",
            if mismatched.is_empty() { String::new() } else { format!("; problems: {}", mismatched.join(" | ")) }
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    let criteria: [Criterion; 11] = [
        (1, "Abelian ratios", Duration::from_secs(60), c1_abelian),
        (2, "self-neglecting s²", Duration::from_secs(60), c2_self_neglect),
        (3, "Edgeworth vs convolution oracle", Duration::from_secs(120), c3_edgeworth),
        (4, "saddlepoint tail", Duration::from_secs(180), c4_tail),
        (5, "rate function", Duration::from_secs(30), c5_rate),
        (6, "Gibbs TV principle", Duration::from_secs(600), c6_gibbs_tv),
        (7, "n=2 exactness", Duration::from_secs(60), c7_n2_exact),
        (8, "DLP trend", Duration::from_secs(600), c8_dlp),
        (9, "exceedance/point equivalence", Duration::from_secs(300), c9_equiv),
        (10, "X² concentration", Duration::from_secs(180), c10_levelset),
        (11, "CLI determinism and robustness", Duration::from_secs(600), c11_cli),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let got = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let (pass, detail) = match got {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = elapsed <= budget;
        let ok = pass && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name}: {detail} ({:.1}s{})",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { String::new() } else { format!(", over {}s budget", budget.as_secs()) }
        );
    }
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
