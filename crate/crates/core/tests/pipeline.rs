use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smutf_core::bench::{fabricate, pair_counts, FabricationMode, FabricationParams, NameNoise};
use smutf_core::matcher::select_one_to_one;
use smutf_core::{Column, Schema};

fn table(rows: usize, cols: usize, seed: u64) -> Schema {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..cols)
        .map(|c| {
            let values = (0..rows)
                .map(|r| {
                    if c == 0 {
                        format!("id{r}")
                    } else {
                        format!("v{c}_{}", rng.gen_range(0..40))
                    }
                })
                .collect();
            Column::new(format!("field_{c}"), values)
        })
        .collect();
    Schema::new("t", columns).unwrap()
}

fn source_column<'a>(source: &'a Schema, name: &str) -> &'a Column {
    source.columns.iter().find(|c| c.name == name).unwrap()
}

fn ids(s: &Schema) -> HashSet<&String> {
    source_column(s, "field_0").values.iter().collect()
}

/// Checks that a set of picks is what greedy selection must produce: a matching
/// in which every unpicked candidate conflicts with an earlier-ranked pick.
fn assert_greedy(candidates: &[(usize, usize, f64)], picked: &[(usize, usize, f64)]) {
    let rank = |a: &(usize, usize, f64)| (-a.2, a.0, a.1);
    let earlier = |a: &(usize, usize, f64), b: &(usize, usize, f64)| {
        rank(a).partial_cmp(&rank(b)).unwrap().is_lt()
    };
    for (k, p) in picked.iter().enumerate() {
        for q in &picked[k + 1..] {
            assert!(p.0 != q.0 && p.1 != q.1, "not a matching: {p:?} {q:?}");
        }
    }
    for c in candidates {
        if picked.contains(c) {
            continue;
        }
        assert!(
            picked.iter().any(|p| (p.0 == c.0 || p.1 == c.1) && earlier(p, c)),
            "{c:?} was free to take"
        );
    }
}

#[test]
fn greedy_selection_is_priority_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..500 {
        let n = rng.gen_range(0..30);
        let mut seen = BTreeSet::new();
        let candidates: Vec<(usize, usize, f64)> = (0..n)
            .filter_map(|_| {
                let (i, j) = (rng.gen_range(0..6), rng.gen_range(0..6));
                seen.insert((i, j)).then(|| (i, j, rng.gen_range(0..5) as f64 / 4.0))
            })
            .collect();
        let picked = select_one_to_one(&candidates);
        assert_greedy(&candidates, &picked);
        let mut shuffled = candidates.clone();
        shuffled.reverse();
        let mut again = select_one_to_one(&shuffled);
        let mut sorted = picked.clone();
        again.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, again);
    }
}

#[test]
fn pair_counts_match_set_overlap() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let mut draw = |n| -> BTreeSet<(usize, usize)> {
            (0..n).map(|_| (rng.gen_range(0..5), rng.gen_range(0..5))).collect()
        };
        let (pred, gold) = (draw(6), draw(6));
        let counts = pair_counts(&pred, &gold);
        let tp = pred.intersection(&gold).count();
        assert_eq!((counts.tp, counts.fp, counts.fn_), (tp, pred.len() - tp, gold.len() - tp));
        let expected = if pred.is_empty() && gold.is_empty() {
            1.0
        } else {
            2.0 * tp as f64 / (pred.len() + gold.len()) as f64
        };
        assert!((counts.f1() - expected).abs() < 1e-12);
    }
}

#[test]
fn unionable_pairs_split_rows_and_keep_columns() {
    let source = table(80, 8, 1);
    let params = FabricationParams {
        row_overlap: 0.5,
        ..FabricationParams::default()
    };
    for seed in 0..20 {
        let pair = fabricate(&source, FabricationMode::Unionable, &params, seed).unwrap();
        assert_eq!(pair.left.len(), 8);
        assert_eq!(pair.right.len(), 8);
        assert_eq!(pair.left.row_count(), pair.right.row_count());
        let shared = ids(&pair.left).intersection(&ids(&pair.right)).count();
        assert!((2 * shared).abs_diff(pair.left.row_count()) <= 1, "seed {seed}: {shared}");
        let gold = pair.gold.resolve(&pair.left, &pair.right).unwrap();
        assert_eq!(gold.len(), 8);
        for p in &pair.gold.pairs {
            assert_eq!(p.left, p.right);
        }
    }
}

#[test]
fn gold_pairs_point_at_the_same_source_column() {
    let source = table(80, 8, 2);
    let modes = [
        FabricationMode::Unionable,
        FabricationMode::ViewUnionable,
        FabricationMode::Joinable,
        FabricationMode::SemJoinable,
    ];
    let params = FabricationParams {
        noise: 0.7,
        ..FabricationParams::default()
    };
    for mode in modes {
        for seed in 0..10 {
            let pair = fabricate(&source, mode, &params, seed).unwrap();
            for (i, j) in pair.gold.resolve(&pair.left, &pair.right).unwrap() {
                let origin = source_column(&source, &pair.left.columns[i].name);
                let allowed: HashSet<&String> = origin.values.iter().collect();
                assert!(pair.right.columns[j].values.iter().all(|v| allowed.contains(v)), "{mode} seed {seed}");
            }
        }
    }
}

#[test]
fn view_unionable_has_disjoint_rows() {
    let source = table(80, 8, 3);
    let params = FabricationParams {
        col_overlap: 0.5,
        ..FabricationParams::default()
    };
    for seed in 0..10 {
        let pair = fabricate(&source, FabricationMode::ViewUnionable, &params, seed).unwrap();
        let left_ids: HashSet<&String> = pair.left.columns.iter().flat_map(|c| &c.values).collect();
        let right_ids: HashSet<&String> = pair.right.columns.iter().flat_map(|c| &c.values).collect();
        // Row ids are unique to a row, so any shared id would mean a shared row.
        assert!(left_ids.iter().filter(|v| v.starts_with("id")).all(|v| !right_ids.contains(v)));
        assert!(!pair.gold.pairs.is_empty());
    }
}

#[test]
fn forced_masking_names_every_shared_column() {
    let source = table(60, 8, 4);
    let params = FabricationParams {
        noise: 1.0,
        noise_ops: vec![NameNoise::Mask],
        ..FabricationParams::default()
    };
    let pattern = |name: &str| {
        name.strip_prefix("col").is_some_and(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
    };
    for seed in 0..10 {
        let pair = fabricate(&source, FabricationMode::SemJoinable, &params, seed).unwrap();
        assert!(!pair.gold.pairs.is_empty());
        for p in &pair.gold.pairs {
            assert!(pattern(&p.right), "{}", p.right);
        }
    }
}

#[test]
fn fabrication_is_seeded() {
    let source = table(60, 8, 5);
    let params = FabricationParams {
        noise: 0.5,
        value_typo_rate: 0.2,
        ..FabricationParams::default()
    };
    let a = fabricate(&source, FabricationMode::SemJoinable, &params, 3).unwrap();
    let b = fabricate(&source, FabricationMode::SemJoinable, &params, 3).unwrap();
    let c = fabricate(&source, FabricationMode::SemJoinable, &params, 4).unwrap();
    assert_eq!((&a.left, &a.right, &a.gold), (&b.left, &b.right, &b.gold));
    assert_ne!((&a.left, &a.right), (&c.left, &c.right));
}
