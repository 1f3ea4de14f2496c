use islandga_fss::{
    accuracy, build_tree, crossing_folding_fitness, exhaustive_best_subset, parse_dataset,
    project, AttributeMask, Dataset, Node,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn entropy_of(labels: &[&str]) -> f64 {
    let mut seen: Vec<&str> = labels.to_vec();
    seen.sort();
    seen.dedup();
    let n = labels.len() as f64;
    seen.iter()
        .map(|c| {
            let p = labels.iter().filter(|l| *l == c).count() as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Gain ratio of splitting `(x, label)` pairs at `x <= t`, from scratch.
fn brute_gain_ratio(points: &[(f64, &str)], t: f64) -> f64 {
    let all: Vec<&str> = points.iter().map(|p| p.1).collect();
    let left: Vec<&str> = points.iter().filter(|p| p.0 <= t).map(|p| p.1).collect();
    let right: Vec<&str> = points.iter().filter(|p| p.0 > t).map(|p| p.1).collect();
    let n = all.len() as f64;
    let (wl, wr) = (left.len() as f64 / n, right.len() as f64 / n);
    let gain = entropy_of(&all) - wl * entropy_of(&left) - wr * entropy_of(&right);
    let split = -wl * wl.log2() - wr * wr.log2();
    gain / split
}

#[test]
fn threshold_matches_brute_force_gain_ratio() {
    let points = [(1.0, "a"), (2.0, "a"), (3.0, "b"), (4.0, "b")];
    let candidates = [1.5, 2.5, 3.5];
    let best = candidates
        .iter()
        .copied()
        .max_by(|&a, &b| brute_gain_ratio(&points, a).total_cmp(&brute_gain_ratio(&points, b)))
        .unwrap();
    assert_eq!(best, 2.5);

    let d = parse_dataset("x,c\n1,a\n2,a\n3,b\n4,b\n").unwrap();
    match build_tree(&d).unwrap().root {
        Node::Numeric { threshold, .. } => assert_eq!(threshold, best),
        other => panic!("expected a numeric split, got {other:?}"),
    }
}

#[test]
fn uneven_threshold_matches_brute_force() {
    let xs = [0.3, 1.1, 1.7, 2.2, 4.0, 5.5, 6.1, 7.9];
    let labels = ["p", "p", "q", "p", "q", "q", "q", "p"];
    let points: Vec<(f64, &str)> = xs.iter().copied().zip(labels).collect();
    let best = xs
        .windows(2)
        .map(|w| (w[0] + w[1]) / 2.0)
        .max_by(|&a, &b| brute_gain_ratio(&points, a).total_cmp(&brute_gain_ratio(&points, b)))
        .unwrap();
    let mut text = String::from("x,c\n");
    for (x, l) in &points {
        text.push_str(&format!("{x},{l}\n"));
    }
    let d = parse_dataset(&text).unwrap();
    match build_tree(&d).unwrap().root {
        Node::Numeric { threshold, .. } => assert!((threshold - best).abs() < 1e-12),
        other => panic!("expected a numeric split, got {other:?}"),
    }
}

const NINE: &str = "a,c\np,y\np,y\nq,y\np,y\nq,n\nq,y\np,n\nq,n\np,y\n";

#[test]
fn three_folds_by_hand() {
    // fold 0: train rows 4-9 gives p->y, q->n; rows 1-3 score 2/3
    // fold 1: train 1,2,3,7,8,9 gives p->y, q->tie->y; rows 4-6 score 2/3
    // fold 2: train rows 1-6 predicts y everywhere; rows 7-9 score 1/3
    let d = parse_dataset(NINE).unwrap();
    let all = d.instances();
    let expected = [2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0];
    for (f, want) in expected.iter().enumerate() {
        let test = all[3 * f..3 * f + 3].to_vec();
        let train: Vec<_> = all[..3 * f].iter().chain(&all[3 * f + 3..]).cloned().collect();
        let tree = build_tree(&d.with_instances(train)).unwrap();
        assert_eq!(accuracy(&tree, &d.with_instances(test)).unwrap(), *want, "fold {f}");
    }
    assert_eq!(crossing_folding_fitness(&d, &AttributeMask::all(1), 3).unwrap(), 2.0 / 3.0);
}

#[test]
fn halves_both_learnable() {
    let d = parse_dataset("a,c\nx,1\ny,0\nx,1\ny,0\nx,1\ny,0\nx,1\ny,0\n").unwrap();
    assert_eq!(crossing_folding_fitness(&d, &AttributeMask::all(1), 2).unwrap(), 1.0);
}

fn informative_first(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("a0,a1,a2,a3,class\n");
    for _ in 0..n {
        let a0 = rng.gen_bool(0.5);
        let noise: Vec<&str> = (0..3).map(|_| if rng.gen_bool(0.5) { "u" } else { "v" }).collect();
        text.push_str(&format!(
            "{},{},{}\n",
            if a0 { "s" } else { "t" },
            noise.join(","),
            if a0 { "pos" } else { "neg" }
        ));
    }
    parse_dataset(&text).unwrap()
}

#[test]
fn oracle_keeps_only_the_informative_attribute() {
    let d = informative_first(120, 4);
    let (mask, fitness) = exhaustive_best_subset(&d, 5, None).unwrap();
    assert_eq!(mask.to_string(), "1000");
    assert_eq!(fitness, 1.0);
}

#[test]
fn oracle_dominates_every_mask() {
    let d = informative_first(60, 9);
    let (_, best) = exhaustive_best_subset(&d, 3, None).unwrap();
    for code in 0..16u32 {
        let mask = AttributeMask((0..4).map(|i| code >> i & 1 == 1).collect());
        assert!(crossing_folding_fitness(&d, &mask, 3).unwrap() <= best);
    }
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    (2usize..30, 1usize..4, any::<u64>()).prop_map(|(n, m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
        let mut text = format!("{},c\n", names.join(","));
        for _ in 0..n {
            let row: Vec<String> = (0..m).map(|_| format!("{:.2}", rng.gen_range(0.0..4.0))).collect();
            text.push_str(&format!("{},{}\n", row.join(","), rng.gen_range(0..3)));
        }
        parse_dataset(&text).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accuracy_in_unit_interval(d in arb_dataset(), k in 2usize..5) {
        let tree = build_tree(&d).unwrap();
        let acc = accuracy(&tree, &d).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        if k <= d.len() {
            let f = crossing_folding_fitness(&d, &AttributeMask::all(d.num_attributes()), k).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn grown_tree_fits_consistent_training_data(d in arb_dataset()) {
        // with several attributes an XOR-like node can have no positive-gain
        // split, so only single-attribute data must always be fitted exactly
        prop_assume!(d.num_attributes() == 1);
        let mut kept = Vec::new();
        for inst in d.instances() {
            let clash = d.instances().iter().any(|o| o.values == inst.values && o.class != inst.class);
            if !clash {
                kept.push(inst.clone());
            }
        }
        prop_assume!(!kept.is_empty());
        let clean = d.with_instances(kept);
        let tree = build_tree(&clean).unwrap();
        prop_assert_eq!(accuracy(&tree, &clean).unwrap(), 1.0);
    }

    #[test]
    fn projection_keeps_order_and_class(d in arb_dataset(), bits in prop::collection::vec(any::<bool>(), 3)) {
        let m = d.num_attributes();
        let mask = AttributeMask(bits[..m].to_vec());
        let p = project(&d, &mask).unwrap();
        prop_assert_eq!(p.num_attributes(), mask.count());
        for (a, b) in d.instances().iter().zip(p.instances()) {
            prop_assert_eq!(a.class, b.class);
        }
    }
}

#[test]
fn load_dataset_reads_files_and_names_missing_ones() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "x,colour,class\n1.5,red,a\n2,blue,b\n").unwrap();
    let d = islandga_fss::load_dataset(&path).unwrap();
    assert_eq!((d.len(), d.num_attributes(), d.classes().len()), (2, 2, 2));
    let missing = dir.path().join("absent.csv");
    let err = islandga_fss::load_dataset(&missing).unwrap_err();
    assert!(err.to_string().contains("absent.csv"), "{err}");
}
