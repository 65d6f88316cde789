use hdclt_wasm::{concentration_values, indicator_values, lower_bound_values};

#[test]
fn indicator_layout_and_plateau() {
    let v = indicator_values(-1.0, 1.0, 0.25, 101).unwrap();
    assert_eq!(v.len(), 4 * 101);
    let (x, h) = (&v[..101], &v[101..202]);
    for (xi, hi) in x.iter().zip(h) {
        if xi.abs() <= 1.0 {
            assert_eq!(*hi, 1.0);
        }
        if xi.abs() >= 1.5 {
            assert_eq!(*hi, 0.0);
        }
    }
    let smax = &v[303..];
    assert!(x.iter().zip(smax).all(|(xi, s)| *s >= xi.max(0.0)));
}

#[test]
fn concentration_stays_below_factor_bound() {
    let v = concentration_values(50, 1.0, 4000, 3, 5).unwrap();
    assert_eq!(v.len(), 25);
    let (est, se, factor) = (&v[5..10], &v[10..15], &v[20..25]);
    for k in 0..5 {
        assert!(est[k] <= factor[k] + 4.0 * se[k], "{v:?}");
    }
}

#[test]
fn lower_bound_rows_are_flat() {
    let v = lower_bound_values(&[100], -2.0, 0.25, 500, 1).unwrap();
    assert_eq!(v.len(), 5);
    assert_eq!(v[0], 100.0);
    assert!(v[4] > 0.1);
    assert!(lower_bound_values(&[100], 0.0, 0.25, 500, 1).is_err());
}
