use proptest::prelude::*;

use algomarket::distributions::{
    build_distribution, ranked_view, spearman, RankedView, Support, TupleDistribution,
};

fn bits_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 1..400)
}

fn counts_strategy(n: usize) -> impl Strategy<Value = TupleDistribution> {
    prop::collection::vec(0u64..50, 1usize << n).prop_map(move |counts| {
        let pairs = counts
            .into_iter()
            .enumerate()
            .map(|(code, c)| (format!("{code:0n$b}"), c));
        TupleDistribution::from_counts(n, pairs, "p").unwrap()
    })
}

/// Classical no-tie Spearman formula.
fn d2_formula(ra: &[usize], rb: &[usize]) -> f64 {
    let m = ra.len() as f64;
    let d2: f64 = ra
        .iter()
        .zip(rb)
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum();
    1.0 - 6.0 * d2 / (m * (m * m - 1.0))
}

proptest! {
    #[test]
    fn partition_conserves_mass(bits in bits_strategy(), n in 1usize..12) {
        prop_assume!(bits.len() >= n);
        let d = build_distribution(&bits, n).unwrap();
        let remainder = bits.len() - d.total() as usize * n;
        prop_assert!(remainder < n);
        prop_assert_eq!(d.counts().values().sum::<u64>(), d.total());
        prop_assert!(d.len() <= 1 << n);
        prop_assert!(d.counts().keys().all(|k| k.len() == n));
    }

    #[test]
    fn ranked_view_is_a_stable_permutation(d in counts_strategy(4)) {
        prop_assume!(d.total() > 0);
        let r = ranked_view(&d).unwrap();
        prop_assert_eq!(r.entries.len(), d.len());
        let mut keys: Vec<_> = r.entries.iter().map(|(t, _)| t.clone()).collect();
        keys.sort();
        prop_assert_eq!(keys, d.counts().keys().cloned().collect::<Vec<_>>());
        let sum: f64 = r.entries.iter().map(|(_, p)| p).sum();
        prop_assert!(sum <= 1.0 + 1e-12);
        prop_assert_eq!(r.reranked(), r.clone());
        let shuffled = RankedView { entries: r.entries.iter().rev().cloned().collect() };
        prop_assert_eq!(shuffled.reranked(), r);
    }

    #[test]
    fn spearman_symmetric(a in counts_strategy(4), b in counts_strategy(4)) {
        for support in [Support::Intersection, Support::Union] {
            let ab = spearman(&a, &b, support).unwrap();
            let ba = spearman(&b, &a, support).unwrap();
            prop_assert_eq!(ab.n_compared, ba.n_compared);
            match (ab.rho, ba.rho) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12),
                (None, None) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }

    #[test]
    fn spearman_scale_invariant(a in counts_strategy(3), b in counts_strategy(3), k in 2u64..1000) {
        let scaled = TupleDistribution::from_counts(
            3,
            b.counts().iter().map(|(t, &c)| (t.clone(), c * k)),
            "s",
        ).unwrap();
        let x = spearman(&a, &b, Support::Intersection).unwrap();
        let y = spearman(&a, &scaled, Support::Intersection).unwrap();
        prop_assert_eq!(x.n_compared, y.n_compared);
        match (x.rho, y.rho) {
            (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-12),
            (None, None) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn spearman_matches_d2_formula_without_ties(
        perm in (4usize..=64).prop_flat_map(|m| Just((0..m).collect::<Vec<_>>()).prop_shuffle())
    ) {
        let m = perm.len();
        // a ranks tuple i at position i + 1, b at perm[i] + 1
        let a = TupleDistribution::from_counts(
            6, (0..m).map(|i| (format!("{i:06b}"), (m - i) as u64)), "a").unwrap();
        let b = TupleDistribution::from_counts(
            6, (0..m).map(|i| (format!("{i:06b}"), (m - perm[i]) as u64)), "b").unwrap();
        let ra: Vec<usize> = (1..=m).collect();
        let rb: Vec<usize> = perm.iter().map(|p| p + 1).collect();
        let rho = spearman(&a, &b, Support::Intersection).unwrap().rho.unwrap();
        prop_assert!((rho - d2_formula(&ra, &rb)).abs() <= 1e-12);
    }

    #[test]
    fn merge_is_commutative_and_associative(
        a in counts_strategy(3), b in counts_strategy(3), c in counts_strategy(3)
    ) {
        use algomarket::merge_shards;
        let abc = merge_shards(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let cba = merge_shards(&[c.clone(), b.clone(), a.clone()]).unwrap();
        let nested = merge_shards(&[merge_shards(&[a.clone(), b]).unwrap(), c]).unwrap();
        prop_assert_eq!(abc.counts(), cba.counts());
        prop_assert_eq!(abc.counts(), nested.counts());
        prop_assert_eq!(abc.total(), nested.total());
    }
}
