use hdclt::bounds::{rate_terms, truncation_level_psi1, truncation_remainder_norm};
use hdclt::data::{GeneratorSpec, SubExponentialShape};
use hdclt::stats::loglog_slope;
use hdclt::RngContract;
use std::io::Write;

/// The tail remainder past `κ = 2 B_n log n` stays below `√δ_{n,2}`. With
/// sub-exponential data the remainder is almost surely zero at this level,
/// so its size is set by the recentering constant and the fitted slope
/// against `√δ_{n,2}` carries no information; it is printed, not asserted.
#[test]
fn remainder_is_dominated_by_root_delta_n2() {
    let spec = GeneratorSpec::SubExponentialIid {
        scale: 1.0,
        shape: SubExponentialShape::Exponential,
    };
    let b_n = 3.0; // √E X⁴ for E − 1
    let mut root = Vec::new();
    let mut norms = Vec::new();
    for (k, &(n, d)) in [(50usize, 10usize), (100, 30), (200, 60), (400, 120)].iter().enumerate() {
        let kappa = truncation_level_psi1(b_n, n as f64);
        let est = truncation_remainder_norm(&spec, n, d, kappa, 400, RngContract::new(17, k as u64)).unwrap();
        let r = rate_terms(b_n, b_n, 4.0, n as f64, d as f64).unwrap().delta_n2.sqrt();
        assert!(est.mean <= r, "n={n} d={d}: {} > {r}", est.mean);
        root.push(r);
        norms.push(est.mean.max(f64::MIN_POSITIVE));
    }
    let line = format!("truncation remainder {norms:?} vs sqrt(delta_n2) {root:?}; slope {:.2}\n", loglog_slope(&root, &norms));
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}
