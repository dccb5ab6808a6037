use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use slowkill::thresholding::{group_quantile_threshold, quantile_threshold, select_largest, ThresholdPolicy, TieMode};

fn vec_and_q() -> impl Strategy<Value = (Vec<f64>, usize)> {
    prop::collection::vec(-100.0f64..100.0, 1..40).prop_flat_map(|v| {
        let p = v.len();
        (Just(v), 0..=p)
    })
}

proptest! {
    #[test]
    fn keeps_at_most_q_and_shrinks_uniformly((s, q) in vec_and_q(), eta in 0.0f64..10.0) {
        let out = quantile_threshold(&s, q, eta, &ThresholdPolicy::default()).unwrap();
        let kept: Vec<usize> = (0..s.len()).filter(|&j| out[j] != 0.0).collect();
        prop_assert!(kept.len() <= q);
        for &j in &kept {
            prop_assert!((out[j] * (1.0 + eta) - s[j]).abs() <= 1e-12 * s[j].abs().max(1.0));
        }
    }

    #[test]
    fn kept_magnitudes_dominate_dropped((s, q) in vec_and_q()) {
        let keep = select_largest(&s.iter().map(|v| v.abs()).collect::<Vec<_>>(), q, &ThresholdPolicy::default()).unwrap();
        prop_assert_eq!(keep.len(), q);
        let min_kept = keep.iter().map(|&j| s[j].abs()).fold(f64::INFINITY, f64::min);
        for j in (0..s.len()).filter(|j| !keep.contains(j)) {
            prop_assert!(s[j].abs() <= min_kept);
        }
    }

    #[test]
    fn idempotent_without_shrinkage((s, q) in vec_and_q()) {
        let policy = ThresholdPolicy::default();
        let once = quantile_threshold(&s, q, 0.0, &policy).unwrap();
        let twice = quantile_threshold(&once, q, 0.0, &policy).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn protected_entries_pass_through((s, q) in vec_and_q(), eta in 0.0f64..5.0) {
        prop_assume!(s.len() >= 2);
        let q = q.min(s.len() - 1);
        let policy = ThresholdPolicy::default().with_protected([0]);
        let out = quantile_threshold(&s, q, eta, &policy).unwrap();
        prop_assert_eq!(out[0], s[0]);
        prop_assert!(out[1..].iter().filter(|v| **v != 0.0).count() <= q);
    }

    #[test]
    fn single_column_group_matches_elementwise((s, q) in vec_and_q(), eta in 0.0f64..5.0) {
        let policy = ThresholdPolicy::default();
        let flat = quantile_threshold(&s, q, eta, &policy).unwrap();
        let block = Array2::from_shape_vec((s.len(), 1), s.clone()).unwrap();
        let grouped = group_quantile_threshold(block.view(), q, eta, &policy).unwrap();
        prop_assert_eq!(grouped.column(0).to_vec(), flat);
    }

    #[test]
    fn complex_rows_ranked_by_norm(
        rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 2..20),
        eta in 0.0f64..3.0,
    ) {
        let p = rows.len();
        let q = p / 2;
        let block = Array2::from_shape_fn((p, 2), |(i, k)| {
            let r = rows[i];
            if k == 0 { Complex64::new(r.0, r.1) } else { Complex64::new(r.2, r.3) }
        });
        let out = group_quantile_threshold(block.view(), q, eta, &ThresholdPolicy::default()).unwrap();
        let norm = |i: usize| block.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>();
        let kept: Vec<usize> = (0..p).filter(|&i| out.row(i).iter().any(|v| v.norm() > 0.0)).collect();
        prop_assert!(kept.len() <= q);
        let min_kept = kept.iter().map(|&i| norm(i)).fold(f64::INFINITY, f64::min);
        for i in (0..p).filter(|i| !kept.contains(i)) {
            prop_assert!(norm(i) <= min_kept || norm(i) == 0.0 && kept.len() < q);
        }
    }
}

#[test]
fn ties_go_to_lower_index() {
    let s = [1.0, -3.0, 3.0, 3.0, 0.5];
    assert_eq!(select_largest(&s.map(f64::abs), 2, &ThresholdPolicy::default()).unwrap(), vec![1, 2]);
    let strict = ThresholdPolicy::new(TieMode::StrictError);
    assert!(select_largest(&s.map(f64::abs), 2, &strict).is_err());
    assert!(select_largest(&s.map(f64::abs), 3, &strict).is_ok());
}

#[test]
fn rejects_q_beyond_free_coordinates() {
    let policy = ThresholdPolicy::default().with_protected([1]);
    assert!(quantile_threshold(&[1.0, 2.0, 3.0], 3, 0.0, &policy).is_err());
    assert!(quantile_threshold(&[1.0, f64::NAN], 1, 0.0, &ThresholdPolicy::default()).is_err());
}
