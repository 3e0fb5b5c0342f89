mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use factor_atlas::matrix::{
    column_variances, compute_stats, filter_by_variance, ingest_edge_list, subset, IngestOptions,
};
use factor_atlas::{CitationMatrix, ErrorKind, JournalId};

use common::{dense, random_matrix};

fn edge_lines(m: &CitationMatrix) -> Vec<String> {
    m.cells()
        .map(|(a, b, c)| format!("{a}\t{b}\t{c}"))
        .collect()
}

fn ingest(lines: &[String]) -> CitationMatrix {
    ingest_edge_list(lines.join("\n").as_bytes(), None, IngestOptions::default()).unwrap()
}

#[test]
fn stats_match_a_full_recount() {
    for seed in 0..5 {
        let m = random_matrix(40, 30, 0.2, 50, seed);
        let d = dense(&m);
        let links = d.iter().flatten().filter(|&&c| c > 0).count();
        let total: u64 = d.iter().flatten().sum();
        let s = compute_stats(&m);
        assert_eq!(s.n_links, links);
        assert_eq!(s.total_citations, total);
        assert!((s.density - links as f64 / 1200.0).abs() < 1e-15);
        assert!((s.mean_per_link - total as f64 / links as f64).abs() < 1e-12);
        assert!(s.mean_per_link >= 1.0 && (0.0..=1.0).contains(&s.density));
    }
}

#[test]
fn filter_keeps_exactly_the_high_variance_columns() {
    let m = random_matrix(25, 20, 0.5, 8, 7);
    let d = dense(&m);
    let oracle: BTreeSet<JournalId> = (0..m.n_vars())
        .filter(|&j| {
            let col: Vec<f64> = d.iter().map(|r| r[j] as f64).collect();
            common::variance(&col) >= 8.0
        })
        .map(|j| m.variables()[j])
        .collect();
    assert!(!oracle.is_empty() && oracle.len() < m.n_vars());
    let f = filter_by_variance(&m, 8.0).unwrap();
    let kept: BTreeSet<JournalId> = f.matrix.variables().iter().copied().collect();
    assert_eq!(kept, oracle);
    assert_eq!(f.dropped.len() + kept.len(), m.n_vars());
}

#[test]
fn subset_shapes_follow_citing_membership() {
    // 600 journals; the first 15 of a 585 selection never cite anything.
    let n = 600u64;
    let mut cells = Vec::new();
    for i in 1..=n {
        for d in 1..=3u64 {
            let citing = (i + d - 1) % n + 1;
            if !(1..=15).contains(&citing) {
                cells.push((JournalId(i), JournalId(citing), d + i % 4));
            }
        }
    }
    let citing: BTreeSet<JournalId> = cells.iter().map(|c| c.1).collect();
    let m = CitationMatrix::from_cells((1..=n).map(JournalId), citing, cells, Default::default())
        .unwrap();

    let chem: BTreeSet<JournalId> = (1..=585).map(JournalId).collect();
    let s = subset(&m, &chem).unwrap();
    assert_eq!(s.matrix.n_cases(), 585);
    assert_eq!(s.citing_less.len(), 15);
    assert_eq!(s.matrix.n_vars() + s.zero_variance.len(), 570);

    let biochem: BTreeSet<JournalId> = (15..=111).map(JournalId).collect();
    let s = subset(&m, &biochem).unwrap();
    assert_eq!(s.matrix.n_cases(), 97);
    assert_eq!(s.citing_less, vec![JournalId(15)]);
    assert_eq!(s.matrix.n_vars() + s.zero_variance.len(), 96);
}

#[test]
fn subset_of_everything_keeps_citing_cases() {
    let m = random_matrix(10, 10, 0.6, 9, 3);
    // Cases 1..=10, variables 1001..; no case cites, so nothing is left.
    let all: BTreeSet<JournalId> = m.cases().iter().copied().collect();
    assert_eq!(subset(&m, &all).unwrap_err().kind(), ErrorKind::Data);

    let sq = common::square(&[vec![1, 2, 0], vec![3, 0, 4], vec![0, 5, 6]]);
    let all: BTreeSet<JournalId> = sq.cases().iter().copied().collect();
    let s = subset(&sq, &all).unwrap();
    assert_eq!(s.matrix, sq);
    assert!(s.citing_less.is_empty());
}

fn arb_matrix() -> impl Strategy<Value = CitationMatrix> {
    (2usize..12, 2usize..12, 0.1f64..0.9, any::<u64>())
        .prop_map(|(r, c, d, seed)| random_matrix(r, c, d, 30, seed))
        .prop_filter("needs a link", |m| m.n_links() > 0)
}

proptest! {
    #[test]
    fn ingest_ignores_line_order(m in arb_matrix(), shuffle_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let lines = edge_lines(&m);
        let mut shuffled = lines.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed));
        let a = ingest(&lines);
        let b = ingest(&shuffled);
        prop_assert_eq!(compute_stats(&a), compute_stats(&b));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn filtering_is_idempotent(m in arb_matrix(), t in 0.0f64..40.0) {
        if let Ok(once) = filter_by_variance(&m, t) {
            let twice = filter_by_variance(&once.matrix, t).unwrap();
            prop_assert!(twice.dropped.is_empty());
            prop_assert_eq!(&twice.matrix, &once.matrix);
        }
    }

    #[test]
    fn variances_are_population_moments(m in arb_matrix()) {
        let d = dense(&m);
        for (j, v) in column_variances(&m).into_iter().enumerate() {
            let col: Vec<f64> = d.iter().map(|r| r[j] as f64).collect();
            prop_assert!((v - common::variance(&col)).abs() <= 1e-9 * v.max(1.0));
        }
    }

    #[test]
    fn nested_subsets_compose(n in 6usize..20, seed in any::<u64>(), cut in 0.3f64..0.9) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let counts: Vec<Vec<u64>> = (0..n)
            .map(|_| (0..n).map(|_| if rng.random::<f64>() < 0.6 { rng.random_range(1..20) } else { 0 }).collect())
            .collect();
        let m = common::square(&counts);
        let outer: BTreeSet<JournalId> = m.cases().iter().copied().filter(|_| rng.random::<f64>() < cut).collect();
        let inner: BTreeSet<JournalId> = outer.iter().copied().filter(|_| rng.random::<f64>() < cut).collect();
        prop_assume!(!inner.is_empty());
        let (Ok(o), Ok(direct)) = (subset(&m, &outer), subset(&m, &inner)) else {
            return Ok(());
        };
        // Variables dropped at the outer level are constant there, hence
        // constant over any sub-selection.
        match subset(&o.matrix, &inner) {
            Ok(two) => prop_assert_eq!(&two.matrix, &direct.matrix),
            Err(e) => prop_assert_eq!(e.kind(), ErrorKind::Data),
        }
        for (a, b, c) in direct.matrix.cells() {
            prop_assert!(inner.contains(&a) && inner.contains(&b));
            prop_assert_eq!(m.count(a, b), c);
        }
    }
}
