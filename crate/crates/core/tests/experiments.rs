use hdclt::experiments::{self, ExperimentConfig, ExperimentKind};
use hdclt::Error;

fn small(kind: ExperimentKind, toml: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(kind, toml).unwrap()
}

#[test]
fn runs_are_pure_functions_of_the_config() {
    let cfg = small(
        ExperimentKind::ConvergenceSweep,
        "n_grid = [50, 100]\nd_rule = { kind = \"fixed\", d = 10 }\nreps = 3000\nrectangles = 50\n",
    );
    let a = experiments::run(&cfg).unwrap();
    let b = experiments::run(&cfg).unwrap();
    assert_eq!(a, b);
    let t = a.table("convergence_sweep").unwrap();
    assert_eq!(t.rows.len(), 2);
    let mut other = cfg.clone();
    other.master_seed += 1;
    assert_ne!(experiments::run(&other).unwrap().table("convergence_sweep").unwrap().column("ks_max"), t.column("ks_max"));
}

#[test]
fn manifest_hash_tracks_the_config() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::SteinCheck);
    let m1 = experiments::manifest(&cfg, 0.0);
    let m2 = experiments::manifest(&cfg, 5.0);
    assert_eq!(m1.config_sha256, m2.config_sha256);
    assert_eq!(m1.config_sha256.len(), 64);
    let mut other = cfg.clone();
    other.reps += 1;
    assert_ne!(experiments::manifest(&other, 0.0).config_sha256, m1.config_sha256);
}

#[test]
fn outputs_land_in_the_directory_with_manifest_last() {
    let mut cfg = small(ExperimentKind::SteinCheck, "reps = 2000\n");
    let dir = std::env::temp_dir().join(format!("hdclt-experiments-{}", std::process::id()));
    cfg.out_dir = dir.clone();
    let out = experiments::run(&cfg).unwrap();
    let paths = experiments::write_outputs(&dir, &out, experiments::manifest(&cfg, 0.1)).unwrap();
    let names: Vec<String> = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["stein_check.csv", "multiplier_moments.csv", "manifest.json"]);
    let csv = std::fs::read_to_string(dir.join("stein_check.csv")).unwrap();
    assert!(csv.starts_with("law,function,nodes,lhs,rhs,residual\n"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn oversized_plans_fail_before_running() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::ConvergenceSweep);
    cfg.reps = 1_000_000_000;
    assert!(matches!(experiments::run(&cfg), Err(Error::Planning(_))));
}

#[test]
fn generator_kind_mismatch_is_a_config_error() {
    let cfg = small(ExperimentKind::LowerBoundDemo, "generator = { family = \"gaussian\" }\n");
    assert!(matches!(experiments::run(&cfg), Err(Error::Config(_))));
}
