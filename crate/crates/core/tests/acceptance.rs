//! Acceptance suite: fifteen numbered criteria at their stated tolerances.
//!
//! Each criterion prints one `PASS`/`FAIL` line (written straight to stderr,
//! so it shows without `--nocapture`). The test fails if any criterion does.

use hdclt::anticoncentration::{factor_bound, levy_concentration_curve, max_window_fraction, nazarov_bound};
use hdclt::bounds::tail_moment_check;
use hdclt::data::{gaussian_analog_sample, map_samples, CovarianceModel, GeneratorSpec, SubExponentialShape};
use hdclt::experiments::{
    nemirovski_check, run_bootstrap_coverage, run_convergence_sweep, run_cramer_ratio_check, run_lindeberg_swap,
    run_lower_bound_demo, run_stein_route, DRule, ExperimentConfig, ExperimentKind,
};
use hdclt::multipliers::{
    hoeffding_bound, linear_form_kernel_deviation, sample_beta_precursor, sample_multipliers, standard_test_family,
    verify_stein_identity, MultiplierLaw, TestFunction,
};
use hdclt::smoothing::{smooth_max, smooth_max_gradient, IntervalSet, SmoothIndicator, SmoothMaxParams};
use hdclt::stats::Moments;
use hdclt::RngContract;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::time::Instant;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn z_of(m: &Moments, target: f64) -> f64 {
    let e = m.estimate();
    (e.mean - target) / e.se
}

fn c01_multiplier_moments() -> Outcome {
    let n = 1_000_000;
    let eta = sample_beta_precursor(n, RngContract::new(SEED, 1));
    let mut mean = Moments::default();
    eta.iter().for_each(|v| mean.push(*v));
    let mut var = Moments::default();
    eta.iter().for_each(|v| var.push((v - 0.25).powi(2)));
    let xi = sample_multipliers(&MultiplierLaw::BetaTransformed, n, RngContract::new(SEED, 2)).unwrap();
    let mut third = Moments::default();
    xi.iter().for_each(|v| third.push(v.powi(3)));
    let z = [z_of(&mean, 0.25), z_of(&var, 1.0 / 16.0), z_of(&third, 1.0)];
    outcome(
        z.iter().all(|v| v.abs() <= 3.0),
        format!("z(E eta) = {:.2}, z(Var eta) = {:.2}, z(E xi^3) = {:.2} at 1e6 draws", z[0], z[1], z[2]),
    )
}

fn c02_stein_identity() -> Outcome {
    let res = verify_stein_identity(&MultiplierLaw::BetaTransformed, &standard_test_family(), 64).unwrap();
    let family = standard_test_family();
    let mut worst_mono = 0.0f64;
    let mut worst_other = 0.0f64;
    for (r, f) in res.iter().zip(&family) {
        match f {
            TestFunction::Monomial(_) => worst_mono = worst_mono.max(r.residual),
            _ => worst_other = worst_other.max(r.residual),
        }
    }
    outcome(
        worst_mono < 1e-8 && worst_other < 1e-6,
        format!("max residual: monomials {worst_mono:.2e}, cos/exp {worst_other:.2e}"),
    )
}

fn c03_smooth_max() -> Outcome {
    let mut rng = RngContract::new(SEED, 3).rng();
    let mut bracket_violations = 0;
    let mut worst_grad = 0.0f64;
    for &d in &[3usize, 100, 10_000] {
        let mut x = vec![0.0; d];
        for _ in 0..10_000 {
            let beta = 10f64.powf(rng.random_range(-0.3..1.7));
            let scale = 10f64.powf(rng.random_range(-1.0..1.0));
            x.iter_mut().for_each(|v| *v = scale * rng.sample::<f64, _>(StandardNormal));
            let p = SmoothMaxParams::new(beta).unwrap();
            let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s = smooth_max(&x, &p);
            if !(s - m >= -1e-12 && s - m <= (d as f64).ln() / beta + 1e-12) {
                bracket_violations += 1;
            }
            let g = smooth_max_gradient(&x, &p);
            let h = 1e-6;
            for _ in 0..2 {
                let j = rng.random_range(0..d);
                let orig = x[j];
                x[j] = orig + h;
                let up = smooth_max(&x, &p);
                x[j] = orig - h;
                let dn = smooth_max(&x, &p);
                x[j] = orig;
                worst_grad = worst_grad.max(((up - dn) / (2.0 * h) - g[j]).abs());
            }
        }
    }
    outcome(
        bracket_violations == 0 && worst_grad <= 1e-6,
        format!("{bracket_violations} bracket violations in 3e4 vectors; max |grad - FD| = {worst_grad:.2e}"),
    )
}

fn c04_smooth_indicator() -> Outcome {
    let mut sandwich_violations = 0;
    let mut worst_ratio = 0.0f64;
    for &eps in &[0.05, 0.5, 5.0] {
        let sets = [
            IntervalSet::half_line(0.0),
            IntervalSet::interval(-eps, 2.0 * eps).unwrap(),
            IntervalSet::new(vec![(-3.0 * eps, 0.0), (7.0 * eps, 9.0 * eps)]).unwrap(),
        ];
        for set in sets {
            let h = SmoothIndicator::build(set.clone(), eps).unwrap();
            let (lo, hi) = (-8.0 * eps, 16.0 * eps);
            for k in 0..1000 {
                let x = lo + (hi - lo) * k as f64 / 999.0;
                let v = h.eval(x);
                let lower = f64::from(u8::from(set.contains(x)));
                let upper = f64::from(u8::from(set.contains_inflated(x, 3.0 * eps)));
                if !(lower <= v && v <= upper) {
                    sandwich_violations += 1;
                }
            }
            // r-th derivative by central differences of the analytic (r−1)-th
            let step = 1e-4 * eps;
            for r in 1..=4 {
                let mut sup = 0.0f64;
                for k in 0..20_000 {
                    let x = lo + (hi - lo) * k as f64 / 19_999.0;
                    let fd = (h.derivative(x + step, r - 1) - h.derivative(x - step, r - 1)) / (2.0 * step);
                    sup = sup.max(fd.abs());
                }
                worst_ratio = worst_ratio.max(sup / (h.derivative_bound(r) * 1.001));
            }
        }
    }
    outcome(
        sandwich_violations == 0 && worst_ratio <= 1.0,
        format!("{sandwich_violations} sandwich violations; max FD sup / (1.001 C_r eps^-r) = {worst_ratio:.4}"),
    )
}

fn random_covariance(d: usize, rng: &mut impl Rng) -> CovarianceModel {
    let k = d + 3;
    let g = Array2::from_shape_fn((d, k), |_| rng.sample::<f64, _>(StandardNormal));
    let w = g.dot(&g.t()) / k as f64;
    let scales: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-0.5..0.5))).collect();
    let c = Array2::from_shape_fn((d, d), |(i, j)| w[[i, j]] / (w[[i, i]] * w[[j, j]]).sqrt() * scales[i] * scales[j]);
    CovarianceModel::from_matrix(c).unwrap()
}

fn c05_nazarov() -> Outcome {
    let mut rng = RngContract::new(SEED, 5).rng();
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for k in 0..20 {
        let d = rng.random_range(3..=50);
        let c = random_covariance(d, &mut rng);
        let s = c.sigma_min();
        let z = gaussian_analog_sample(&c, 100_000, RngContract::new(SEED, 500 + k));
        let eps: Vec<f64> = [0.05, 0.1, 0.2].iter().map(|f| f * s).collect();
        for est in levy_concentration_curve(z.view(), &eps).unwrap() {
            let bound = nazarov_bound(s, d as f64, est.epsilon).unwrap();
            worst = worst.max(est.value - bound - 3.0 * est.se);
            checks += 1;
        }
    }
    outcome(worst <= 0.0, format!("{checks} checks; max (estimate - bound - 3 se) = {worst:.4}"))
}

fn c06_factor() -> Outcome {
    let a = 1.0;
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    for &d in &[10usize, 1000] {
        let c = CovarianceModel::factor(vec![a; d], 1.0).unwrap();
        let mut m = map_samples(&c, 100_000, RngContract::new(SEED, 600 + d as u64), |x| {
            x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        });
        m.sort_by(f64::total_cmp);
        for &eps in &[0.05, 0.1, 0.2] {
            let (p, _) = max_window_fraction(&m, eps);
            let se = (p * (1.0 - p) / m.len() as f64).sqrt();
            let bound = factor_bound(a, eps).unwrap();
            worst = worst.max(p - bound - 3.0 * se);
            if eps == 0.2 {
                detail.push_str(&format!("d={d}: C(0.2) = {p:.4} vs {bound:.4}; "));
            }
        }
    }
    let d_free = factor_bound(a, 0.1).unwrap() == 0.1 / ((2.0 * std::f64::consts::PI).sqrt() * a);
    outcome(worst <= 0.0 && d_free, format!("{detail}max excess = {worst:.4}; bound d-free = {d_free}"))
}

fn c07_linear_form_kernel() -> Outcome {
    let mut rng = RngContract::new(SEED, 7).rng();
    let mut min_margin = f64::INFINITY;
    for k in 0..10 {
        let n = rng.random_range(20..=400);
        let d = rng.random_range(3..=20);
        let a = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt());
        let law = MultiplierLaw::BetaTransformed;
        let dev = linear_form_kernel_deviation(a.view(), &law, 2000, RngContract::new(SEED, 700 + k)).unwrap();
        let bound = hoeffding_bound(a.view(), &law).unwrap();
        min_margin = min_margin.min(bound - dev.mean);
    }
    outcome(min_margin > 0.0, format!("min (hoeffding - MC deviation) over 10 matrices = {min_margin:.4}"))
}

fn c08_nemirovski() -> Outcome {
    let gauss = GeneratorSpec::Gaussian { scale: 1.0 };
    let subexp = GeneratorSpec::SubExponentialIid {
        scale: 1.0,
        shape: SubExponentialShape::Exponential,
    };
    let configs = [(50, 5), (200, 20), (500, 50), (1000, 10), (100, 100)];
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, &(n, d)) in configs.iter().enumerate() {
        for (j, spec) in [&gauss, &subexp].into_iter().enumerate() {
            let c = nemirovski_check(spec, n, d, 40, RngContract::new(SEED, 800 + 10 * k as u64 + j as u64)).unwrap();
            worst = worst.max(c.lhs.mean / c.rhs);
            count += 1;
        }
    }
    outcome(worst <= 1.0, format!("{count} configurations; max lhs/rhs = {worst:.3}"))
}

fn c09_stein_route() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::SteinRoute);
    cfg.master_seed = SEED;
    let out = run_stein_route(&cfg).unwrap();
    let t = out.table("stein_route").unwrap();
    let margins = t.column("margin").unwrap();
    let gaps = t.column("gap").unwrap();
    let ratio = t
        .column("rhs")
        .unwrap()
        .iter()
        .zip(&gaps)
        .map(|(r, g)| g / r)
        .fold(0.0f64, f64::max);
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        min_margin >= 0.0,
        format!("{} grid points over n in {{100, 400}}, d in {{5, 20}}, 5 draws; max gap/rhs = {ratio:.2e}", margins.len()),
    )
}

fn c10_convergence() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::ConvergenceSweep);
    cfg.master_seed = SEED;
    let out = run_convergence_sweep(&cfg).unwrap();
    let ks = out.table("convergence_sweep").unwrap().column("ks_max").unwrap();
    let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
    let last = *ks.last().unwrap();
    outcome(
        decreasing && last < 0.05,
        format!("ks_max = {}", ks.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")),
    )
}

fn c11_lindeberg() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::LindebergSwap);
    cfg.master_seed = SEED;
    cfg.n_grid = vec![100, 1600];
    let out = run_lindeberg_swap(&cfg).unwrap();
    let t = out.table("lindeberg_swap").unwrap();
    let laws = t.text_column("law").unwrap();
    let gap = t.column("gap").unwrap();
    let se = t.column("se").unwrap();
    let pick = |law: &str, k: usize| {
        let rows: Vec<usize> = (0..laws.len()).filter(|i| laws[*i] == law).collect();
        (gap[rows[k]], se[rows[k]])
    };
    let beta = MultiplierLaw::BetaTransformed.name();
    let rade = MultiplierLaw::Rademacher.name();
    let (g100, _) = pick(&beta, 0);
    let (g1600, s1600) = pick(&beta, 1);
    // MC resolution: the n = 1600 gap is compared at its 2-se upper reach
    let scaling = g100 >= 4.0 * g1600 || g100 >= 4.0 * (g1600 - 2.0 * s1600).max(0.0);
    let (r100, _) = pick(&rade, 0);
    let (r1600, _) = pick(&rade, 1);
    let mismatch = r100 > g100 && r1600 > g1600;
    outcome(
        scaling && mismatch,
        format!(
            "beta gap n=100 {g100:.5}, n=1600 {g1600:.5} (se {s1600:.5}), ratio {:.2}; rademacher {r100:.5}, {r1600:.5}",
            g100 / g1600
        ),
    )
}

fn c12_lower_bound() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::LowerBoundDemo);
    cfg.master_seed = SEED;
    let out = run_lower_bound_demo(&cfg).unwrap();
    let t = out.table("lower_bound_demo").unwrap();
    let labels = t.text_column("generator").unwrap();
    let gaps = t.column("abs_gap").unwrap();
    let signed = t.column("gap").unwrap();
    let predicted = t.column("predicted_gap").unwrap();
    let main: Vec<usize> = (0..labels.len()).filter(|i| labels[*i].starts_with("main")).collect();
    let control: Vec<usize> = (0..labels.len()).filter(|i| labels[*i].starts_with("control")).collect();
    let all_large = main.iter().all(|i| gaps[*i] >= 0.05);
    let last = *main.last().unwrap();
    let near_prediction = (signed[last] - predicted[last]).abs() <= 0.08;
    let control_small = gaps[*control.last().unwrap()] < 0.03;
    outcome(
        all_large && near_prediction && control_small,
        format!(
            "gaps {} (predicted {:.4}); control gap at n=1000 {:.4}",
            main.iter().map(|i| format!("{:.4}", signed[*i])).collect::<Vec<_>>().join(", "),
            predicted[last],
            signed[*control.last().unwrap()]
        ),
    )
}

fn c13_cramer() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::CramerRatioCheck);
    cfg.master_seed = SEED;
    cfg.n_grid = vec![1000];
    cfg.x_grid = vec![2.0];
    cfg.reps = 10_000_000;
    cfg.d_rule = DRule::Fixed { d: 1 };
    let out = run_cramer_ratio_check(&cfg).unwrap();
    let t = out.table("cramer_ratio_check").unwrap();
    let ratio = t.column("ratio_hat").unwrap()[0];
    let se = t.column("ratio_se").unwrap()[0];
    let target = 0.919;
    outcome(
        (ratio / target - 1.0).abs() <= 0.2,
        format!("ratio {ratio:.4} (se {se:.4}) vs {target}; formula {:.4}", t.column("cramer_ratio").unwrap()[0]),
    )
}

fn c14_tail_lemma() -> Outcome {
    let mut failures = 0;
    let mut total = 0;
    for &a in &[1.0, 2.0, std::f64::consts::E, 10.0, 100.0] {
        for &b in &[0.5, 1.0, 2.0, 5.0] {
            for p in 1..=6u32 {
                for &t in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
                    total += 1;
                    if !tail_moment_check(a, b, p, t).unwrap().ok {
                        failures += 1;
                    }
                }
            }
        }
    }
    // A = 1, t = 0: Y ~ Exp(scale B) and E Y^p = p! B^p exactly
    let mut worst_eq = 0.0f64;
    for &b in &[0.5, 1.0, 2.0, 5.0] {
        for p in 1..=6u32 {
            let c = tail_moment_check(1.0, b, p, 0.0).unwrap();
            worst_eq = worst_eq.max((c.lhs / c.rhs - 1.0).abs());
        }
    }
    outcome(
        failures == 0 && worst_eq < 1e-10,
        format!("{failures}/{total} grid failures; max relative gap at equality cases {worst_eq:.1e}"),
    )
}

fn c15_bootstrap() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::BootstrapCoverage);
    cfg.master_seed = SEED;
    let out = run_bootstrap_coverage(&cfg).unwrap();
    let cov = out.table("bootstrap_coverage").unwrap().column("coverage").unwrap()[0];
    let max_z = out.table("bootstrap_covariance").unwrap().column("max_z").unwrap()[0];
    let rho = out.table("bootstrap_rho_wb").unwrap().column("rect_mean").unwrap();
    let decreasing = rho.windows(2).all(|w| w[1] < w[0]);
    // reported only: skewed exponential data at the same n, d
    let mut skewed = cfg.clone();
    skewed.generator = GeneratorSpec::SubExponentialIid {
        scale: 1.0,
        shape: SubExponentialShape::Exponential,
    };
    skewed.trend_n_grid = vec![50];
    skewed.data_draws = 2;
    let skewed_cov = run_bootstrap_coverage(&skewed).unwrap().table("bootstrap_coverage").unwrap().column("coverage").unwrap()[0];
    outcome(
        max_z <= 4.0 && (0.85..=0.95).contains(&cov) && decreasing,
        format!(
            "covariance max z {max_z:.2}; coverage {cov:.3} (skewed data: {skewed_cov:.3}); rho_WB {}",
            rho.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("C01 multiplier moments", c01_multiplier_moments),
        ("C02 Stein identity quadrature", c02_stein_identity),
        ("C03 smooth max", c03_smooth_max),
        ("C04 smooth indicator", c04_smooth_indicator),
        ("C05 Nazarov anti-concentration", c05_nazarov),
        ("C06 factor anti-concentration", c06_factor),
        ("C07 linear-form Stein kernel", c07_linear_form_kernel),
        ("C08 Nemirovski", c08_nemirovski),
        ("C09 Stein-route dominance", c09_stein_route),
        ("C10 convergence sweep", c10_convergence),
        ("C11 Lindeberg swap scaling", c11_lindeberg),
        ("C12 lower bound", c12_lower_bound),
        ("C13 Cramer ratio", c13_cramer),
        ("C14 tail lemma", c14_tail_lemma),
        ("C15 wild bootstrap", c15_bootstrap),
    ];
    let only = std::env::var("ACCEPTANCE_ONLY").ok();
    let mut failed = Vec::new();
    for (name, f) in criteria {
        if let Some(sel) = &only {
            if !sel.split(',').any(|s| name.starts_with(s.trim())) {
                continue;
            }
        }
        let start = Instant::now();
        let o = f();
        let line = format!(
            "{} {name}: {} ({:.1} s)\n",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        std::io::stderr().write_all(line.as_bytes()).unwrap();
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
