mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use seeker_core::benchgen::{
    build_bundle, bundle_dir, generate_bundle, load_bundle, load_reveal, parse_verdicts, reveal_labels, reveal_path,
    score_game, seal_labels, write_verdicts, InsertionOrder, Verdict,
};
use seeker_core::{
    check_equiv, from_netlist, parse_bench, to_netlist, BenchgenError, BundleConfig, Composition, EquivResult,
    GateLibrary, Label, Netlist, PipelineId, TrojanParams,
};
use sha2::{Digest, Sha256};

use common::random_aig;

fn sources() -> Vec<Netlist> {
    (0..3)
        .map(|k| to_netlist(&random_aig(500 + k, 16, 140, 6), GateLibrary::Mixed).with_name(format!("src{k}")))
        .collect()
}

fn config(composition: Composition, seed: u64) -> BundleConfig {
    BundleConfig {
        bundle_id: "b1".into(),
        sources: Vec::new(),
        composition,
        pipelines: [2, 9, 14, 18].map(|i| PipelineId::new(i).unwrap()).to_vec(),
        master_seed: seed,
        trojan: TrojanParams { r: 2, theta: 0.25 },
        order: InsertionOrder::InsertThenRestructure,
        salt: None,
    }
}

#[test]
fn layout_digests_and_certificates() {
    let src = sources();
    let cfg = config(Composition::Bernoulli { n_instances: 16, p_infect: 0.5 }, 31);
    let dir = tempfile::tempdir().unwrap();
    let b = generate_bundle(&cfg, &src, dir.path()).unwrap();
    let root = bundle_dir(dir.path(), "b1");
    assert_eq!(root, dir.path().join("bundle/b1"));
    assert!(root.join("manifest.json").is_file());
    assert!(reveal_path(dir.path(), "b1").is_file());

    let (manifest, circuits) = load_bundle(&root).unwrap();
    assert_eq!(manifest, b.manifest);
    let reveal = load_reveal(&reveal_path(dir.path(), "b1")).unwrap();
    let salt = hex::decode(&reveal.salt).unwrap();
    assert_eq!(salt.len(), 16);

    let by_name: BTreeMap<&str, &Netlist> = src.iter().map(|n| (n.name(), n)).collect();
    for (entry, circuit) in manifest.instances.iter().zip(&circuits) {
        assert!(root.join(&entry.file).is_file());
        assert!(entry.file.starts_with("circuits/") && entry.file.ends_with(".bench"));
        let label = reveal.labels[&entry.instance_id];
        let mut h = Sha256::new();
        h.update(format!("{}{}", entry.instance_id, label.as_str()));
        h.update(&salt);
        assert_eq!(manifest.sealed_key[&entry.instance_id], hex::encode(h.finalize()));

        let golden = from_netlist(by_name[entry.source.as_str()]).unwrap();
        let got = from_netlist(circuit).unwrap();
        let verdict = check_equiv(&golden, &got).unwrap();
        match label {
            Label::Clean => assert_eq!(verdict, EquivResult::Equivalent),
            Label::Infected => assert!(!verdict.is_equivalent()),
        }
        assert_eq!(reveal.trojans.contains_key(&entry.instance_id), label == Label::Infected);
    }
    assert_eq!(reveal_labels(&manifest.sealed_key, &reveal).unwrap(), reveal.labels);
}

#[test]
fn composition_modes() {
    let src = sources();
    let all = |p| {
        let b = build_bundle(&config(Composition::Bernoulli { n_instances: 6, p_infect: p }, 2), &src).unwrap();
        b.reveal.labels.values().filter(|&&l| l == Label::Infected).count()
    };
    assert_eq!((all(0.0), all(1.0)), (0, 6));
    let fixed = build_bundle(&config(Composition::FixedK { n_instances: 9, k: 4 }, 5), &src).unwrap();
    assert_eq!(fixed.reveal.labels.values().filter(|&&l| l == Label::Infected).count(), 4);

    let grid = build_bundle(&config(Composition::Grid { trojans_per_circuit: 1, clean_per_pipeline: 1 }, 5), &src)
        .unwrap();
    assert_eq!(grid.manifest.n_instances, 3 * 4 * 2);
    // one Trojan per source, shared by its four pipeline versions
    let mut shared: BTreeMap<(String, usize), Vec<String>> = BTreeMap::new();
    for (id, rec) in &grid.reveal.trojans {
        let inst = &grid.reveal.instances[id];
        shared.entry((inst.source.clone(), inst.trojan_index.unwrap())).or_default().push(rec.host_hash.clone());
    }
    assert_eq!(shared.len(), 3);
    assert!(shared.values().all(|v| v.len() == 4 && v.iter().all(|h| h == &v[0])));
}

#[test]
fn restructure_then_insert_order() {
    let mut cfg = config(Composition::FixedK { n_instances: 6, k: 6 }, 8);
    cfg.order = InsertionOrder::RestructureThenInsert;
    let b = build_bundle(&cfg, &sources()).unwrap();
    assert_eq!(b.reveal.trojans.len(), 6);
    for (_, text) in &b.circuits {
        parse_bench(text).unwrap();
    }
}

#[test]
fn seeds_change_bundles_and_configs_are_checked() {
    let src = sources();
    let a = build_bundle(&config(Composition::Bernoulli { n_instances: 8, p_infect: 0.5 }, 1), &src).unwrap();
    let b = build_bundle(&config(Composition::Bernoulli { n_instances: 8, p_infect: 0.5 }, 2), &src).unwrap();
    assert_ne!(a.manifest.sealed_key, b.manifest.sealed_key);
    let bad = config(Composition::Bernoulli { n_instances: 4, p_infect: 1.5 }, 1);
    assert!(matches!(build_bundle(&bad, &src), Err(BenchgenError::InvalidConfig(_))));
}

#[test]
fn scoring_examples() {
    let labels: BTreeMap<String, Label> = (0..10)
        .map(|i| (format!("i{i}"), if i < 3 { Label::Infected } else { Label::Clean }))
        .collect();
    let perfect: BTreeMap<String, Verdict> =
        labels.iter().map(|(k, &l)| (k.clone(), Verdict { label: l, queries_used: 10 })).collect();
    let r = score_game(&perfect, &labels).unwrap();
    assert_eq!(r.balanced_accuracy, 1.0);
    assert_eq!(r.total_queries, 100);
    assert_eq!(r.hider_score, 0.0);
}

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Infected), Just(Label::Clean)]
}

proptest! {
    #[test]
    fn sealing_round_trips_and_catches_any_flip(
        labels in prop::collection::btree_map("[a-z0-9_]{1,12}", label(), 1..30),
        salt in prop::collection::vec(any::<u8>(), 16),
        pick in any::<prop::sample::Index>(),
    ) {
        let sealed = seal_labels(&labels, &salt).unwrap();
        prop_assert!(sealed.values().all(|d| d.len() == 64 && d.chars().all(|c| matches!(c, '0'..='9' | 'a'..='f'))));
        let victim = labels.keys().nth(pick.index(labels.len())).unwrap().clone();
        let mut flipped = labels.clone();
        let l = flipped.get_mut(&victim).unwrap();
        *l = if *l == Label::Clean { Label::Infected } else { Label::Clean };
        let resealed = seal_labels(&flipped, &salt).unwrap();
        let differing: Vec<&String> = sealed.keys().filter(|k| sealed[*k] != resealed[*k]).collect();
        prop_assert_eq!(differing, vec![&victim]);
    }

    #[test]
    fn verdict_files_round_trip(
        v in prop::collection::btree_map("inst_[0-9]{4}", (label(), 0u64..1_000_000), 0..40),
    ) {
        let verdicts: BTreeMap<String, Verdict> =
            v.into_iter().map(|(k, (label, q))| (k, Verdict { label, queries_used: q })).collect();
        prop_assert_eq!(parse_verdicts(&write_verdicts(&verdicts)).unwrap(), verdicts);
    }

    #[test]
    fn confusion_counts_sum(truth in prop::collection::vec((label(), label()), 1..60)) {
        let labels: BTreeMap<String, Label> = truth.iter().enumerate().map(|(i, p)| (format!("i{i}"), p.0)).collect();
        let verdicts: BTreeMap<String, Verdict> = truth
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("i{i}"), Verdict { label: p.1, queries_used: 1 }))
            .collect();
        let r = score_game(&verdicts, &labels).unwrap();
        let c = r.confusion;
        prop_assert_eq!(c.tp + c.fp + c.tn + c.fn_, truth.len() as u64);
        prop_assert!((0.0..=1.0).contains(&r.balanced_accuracy));
        prop_assert!((r.hider_score - (1.0 - r.balanced_accuracy)).abs() < 1e-15);
    }
}

/// Full 8 x 100 x 18 grid. Takes hours on a single core; run with
/// `cargo test --release -- --ignored full_grid`.
#[test]
#[ignore]
fn full_grid_generation() {
    let src: Vec<Netlist> = common::ISCAS.iter().map(|n| common::iscas(n)).collect();
    let cfg = BundleConfig {
        bundle_id: "full".into(),
        sources: Vec::new(),
        composition: Composition::Grid { trojans_per_circuit: 100, clean_per_pipeline: 0 },
        pipelines: PipelineId::all().collect(),
        master_seed: 2024,
        trojan: TrojanParams::default(),
        order: InsertionOrder::InsertThenRestructure,
        salt: None,
    };
    let b = build_bundle(&cfg, &src).unwrap();
    assert_eq!(b.reveal.labels.values().filter(|&&l| l == Label::Infected).count(), 14_400);
}
