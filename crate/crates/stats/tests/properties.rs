use std::collections::BTreeMap;

use fstlab_core::FstLabel;
use fstlab_stats::{
    confusion_matrix, exact_agreement, fisher_z_compare, pearson, pearson_f64, within_k_agreement,
    LabelVectorPair,
};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = FstLabel> {
    (0usize..7).prop_map(|i| FstLabel::from_index(i).unwrap())
}

fn labels(n: usize) -> impl Strategy<Value = Vec<(FstLabel, FstLabel)>> {
    prop::collection::vec((label(), label()), 1..n)
}

fn as_maps(pairs: &[(FstLabel, FstLabel)]) -> (BTreeMap<String, FstLabel>, BTreeMap<String, FstLabel>) {
    let a = pairs.iter().enumerate().map(|(i, p)| (format!("i{i:04}"), p.0)).collect();
    let b = pairs.iter().enumerate().map(|(i, p)| (format!("i{i:04}"), p.1)).collect();
    (a, b)
}

#[test]
fn six_pair_fixture_matches_tally() {
    use FstLabel::*;
    let pairs = [(I, I), (I, II), (II, II), (NotApplicable, III), (V, IV), (I, II)];
    let (a, b) = as_maps(&pairs);
    let m = confusion_matrix(&a, &b).unwrap();
    for i in 0..7 {
        for j in 0..7 {
            let want = pairs
                .iter()
                .filter(|(x, y)| x.index() == i && y.index() == j)
                .count() as u64;
            assert_eq!(m.counts[i][j], want);
        }
    }
    assert_eq!(m.get(I, II), 2);
    assert_eq!(m.total, 6);
}

proptest! {
    #[test]
    fn pearson_is_symmetric(pairs in labels(60)) {
        let ab = LabelVectorPair::new(pairs.clone());
        let ba = LabelVectorPair::new(pairs.iter().map(|&(a, b)| (b, a)).collect());
        match (pearson(&ab), pearson(&ba)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
    }

    #[test]
    fn pearson_scale_shift_invariant(
        xy in prop::collection::vec((1u8..=6, 1u8..=6), 3..50),
        sa in 0.1f64..10.0, sb in -20.0f64..20.0, ta in 0.1f64..10.0, tb in -20.0f64..20.0,
    ) {
        let x: Vec<f64> = xy.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = xy.iter().map(|p| f64::from(p.1)).collect();
        if let Ok(r) = pearson_f64(&x, &y) {
            let x2: Vec<f64> = x.iter().map(|v| sa * v + sb).collect();
            let y2: Vec<f64> = y.iter().map(|v| ta * v + tb).collect();
            let r2 = pearson_f64(&x2, &y2).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((pearson_f64(&neg, &y).unwrap() + r).abs() < 1e-12);
        }
    }

    #[test]
    fn n_effective_counts_applicable_pairs(pairs in labels(40)) {
        let lv = LabelVectorPair::new(pairs.clone());
        let want = pairs.iter().filter(|(a, b)| *a != FstLabel::NotApplicable && *b != FstLabel::NotApplicable).count();
        prop_assert_eq!(lv.n_effective(), want);
        prop_assert_eq!(lv.numeric().0.len(), want);
    }

    #[test]
    fn p_shrinks_as_rhos_separate(r2 in -0.95f64..0.95, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5, n in 4usize..2000, up: bool) {
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let s = if up { 1.0 } else { -1.0 };
        let (a, b) = (r2 + s * near, r2 + s * far);
        prop_assume!(a.abs() < 0.999 && b.abs() < 0.999);
        let pa = fisher_z_compare(a, r2, n).unwrap().p_two_sided;
        let pb = fisher_z_compare(b, r2, n).unwrap().p_two_sided;
        prop_assert!(pb <= pa + 1e-15);
        prop_assert!((0.0..=1.0).contains(&pa));
        prop_assert_eq!(fisher_z_compare(r2, r2, n).unwrap().p_two_sided, 1.0);
    }

    #[test]
    fn confusion_totals_and_percentages(pairs in labels(80)) {
        let (a, b) = as_maps(&pairs);
        let m = confusion_matrix(&a, &b).unwrap();
        prop_assert_eq!(m.total, pairs.len() as u64);
        prop_assert_eq!(m.counts.iter().flatten().sum::<u64>(), m.total);
        let cp = m.col_percentages();
        let rp = m.row_percentages();
        let cols = m.col_totals();
        let rows = m.row_totals();
        for j in 0..7 {
            let s: f64 = (0..7).map(|i| cp[i][j]).sum();
            if cols[j] > 0 { prop_assert!((s - 100.0).abs() < 0.5); } else { prop_assert_eq!(s, 0.0); }
            let s: f64 = rp[j].iter().sum();
            if rows[j] > 0 { prop_assert!((s - 100.0).abs() < 0.5); }
        }
    }

    #[test]
    fn exact_agreement_matches_diagonal(pairs in labels(80)) {
        let (a, b) = as_maps(&pairs);
        let m = confusion_matrix(&a, &b).unwrap();
        let applicable: u64 = (1..7).flat_map(|i| (1..7).map(move |j| (i, j))).map(|(i, j)| m.counts[i][j]).sum();
        let diag: u64 = (1..7).map(|i| m.counts[i][i]).sum();
        let lv = LabelVectorPair::align(&a, &b);
        match exact_agreement(&lv) {
            Ok(x) => prop_assert!((x - diag as f64 / applicable as f64).abs() < 1e-12),
            Err(_) => prop_assert_eq!(applicable, 0),
        }
    }

    #[test]
    fn within_k_is_monotone_in_k(pairs in labels(80)) {
        let lv = LabelVectorPair::new(pairs);
        if let Ok(first) = within_k_agreement(&lv, 0) {
            let mut prev = first;
            for k in 1..=5 {
                let cur = within_k_agreement(&lv, k).unwrap();
                prop_assert!(cur >= prev);
                prev = cur;
            }
            prop_assert_eq!(prev, 1.0);
        }
    }
}
