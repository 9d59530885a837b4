mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use seeker_core::benchgen::{build_bundle, Bundle, Verdict};
use seeker_core::detect::{detect_bundle, heatmap_accuracy, D};
use seeker_core::restructure::pipeline_netlist;
use seeker_core::{
    check_equiv, extract_features, from_netlist, golden_model_detect, parse_bench, to_netlist, BundleConfig,
    Composition, GateLibrary, Label, Netlist, PipelineId, Strategy, TrojanParams,
};

use common::{netlist_eval, random_aig};

const GOLDEN: &str = "INPUT(x0)\nINPUT(x1)\nINPUT(x2)\nINPUT(x3)\nINPUT(x4)\nINPUT(x5)\nINPUT(x6)\nINPUT(x7)\n\
OUTPUT(y0)\nOUTPUT(y1)\ny0 = XOR(x4, x5, x6, x7)\ny1 = OR(x0, x5)\n";

/// Same as the golden circuit except y0 flips when x0..x3 are all 1 (p = 1/16).
const SUSPECT: &str = "INPUT(x0)\nINPUT(x1)\nINPUT(x2)\nINPUT(x3)\nINPUT(x4)\nINPUT(x5)\nINPUT(x6)\nINPUT(x7)\n\
OUTPUT(y0)\nOUTPUT(y1)\nt = AND(x0, x1, x2, x3)\np = XOR(x4, x5, x6, x7)\ny0 = XOR(p, t)\ny1 = OR(x0, x5)\n";

#[test]
fn sixteenth_activation_is_found_within_200_vectors() {
    let (g, s) = (parse_bench(GOLDEN).unwrap(), parse_bench(SUSPECT).unwrap());
    let mut hits = 0;
    for seed in 0..100 {
        let d = golden_model_detect(&s, &g, 200, Strategy::Uniform, seed).unwrap();
        if d.verdict == Label::Infected {
            let w = d.witness.unwrap();
            assert!(w[..4].iter().all(|&b| b));
            assert_ne!(netlist_eval(&g, &w), netlist_eval(&s, &w));
            hits += 1;
        }
    }
    // 1 - (15/16)^200 > 1 - 3e-6
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn restructuring_moves_features_not_function() {
    let mut moved = 0;
    let mut total = 0;
    for c in 0..10u64 {
        let g = random_aig(300 + c, 16, 100, 6);
        let base = extract_features(&to_netlist(&g, GateLibrary::AndNot));
        for p in PipelineId::all() {
            let out = pipeline_netlist(&g, p, c);
            assert!(check_equiv(&g, &from_netlist(&out).unwrap()).unwrap().is_equivalent());
            total += 1;
            if extract_features(&out).distance(&base) > 0.0 {
                moved += 1;
            }
        }
    }
    assert!(moved * 10 >= total * 9, "{moved}/{total}");
}

fn small_grid() -> (Bundle, Vec<Netlist>) {
    let sources: Vec<Netlist> = (0..2)
        .map(|k| to_netlist(&random_aig(70 + k, 14, 120, 5), GateLibrary::Mixed).with_name(format!("r{k}")))
        .collect();
    let cfg = BundleConfig {
        bundle_id: "grid".into(),
        sources: Vec::new(),
        composition: Composition::Grid { trojans_per_circuit: 2, clean_per_pipeline: 1 },
        pipelines: [1, 7, 17].map(|i| PipelineId::new(i).unwrap()).to_vec(),
        master_seed: 12,
        trojan: TrojanParams { r: 2, theta: 0.2 },
        order: Default::default(),
        salt: None,
    };
    (build_bundle(&cfg, &sources).unwrap(), sources)
}

fn run_detect(b: &Bundle, sources: &[Netlist], strategy: Strategy, seed: u64) -> BTreeMap<String, Verdict> {
    let circuits: Vec<Netlist> = b.circuits.iter().map(|(_, t)| parse_bench(t).unwrap()).collect();
    let goldens = sources.iter().map(|n| (n.name().to_string(), n.clone())).collect();
    detect_bundle(&b.manifest, &circuits, &goldens, 512, strategy, seed).unwrap()
}

#[test]
fn bundle_detection_is_deterministic_and_never_false_positive() {
    let (b, sources) = small_grid();
    for strategy in [Strategy::Uniform, Strategy::RareGuided] {
        let v = run_detect(&b, &sources, strategy, 4);
        assert_eq!(v, run_detect(&b, &sources, strategy, 4));
        for (id, label) in &b.reveal.labels {
            if *label == Label::Clean {
                assert_eq!(v[id].label, Label::Clean, "{id}");
                assert_eq!(v[id].queries_used, 512);
            }
        }
    }
}

#[test]
fn heatmap_extremes() {
    let (b, _) = small_grid();
    let perfect: BTreeMap<String, Verdict> =
        b.reveal.labels.iter().map(|(id, &l)| (id.clone(), Verdict { label: l, queries_used: 1 })).collect();
    let silent: BTreeMap<String, Verdict> =
        b.reveal.labels.keys().map(|id| (id.clone(), Verdict { label: Label::Clean, queries_used: 1 })).collect();
    let hp = heatmap_accuracy(&perfect, &b.reveal).unwrap();
    let hs = heatmap_accuracy(&silent, &b.reveal).unwrap();
    assert_eq!(hp.circuits, vec!["r0", "r1"]);
    for (row_p, row_s) in hp.cells.iter().zip(&hs.cells) {
        for (k, (p, s)) in row_p.iter().zip(row_s).enumerate() {
            if [0, 6, 16].contains(&k) {
                assert_eq!((*p, *s), (Some(100.0), Some(0.0)));
            } else {
                assert_eq!((*p, *s), (None, None));
            }
        }
    }
    let csv = hp.to_csv();
    assert!(csv.starts_with("circuit,1,2,3"));
    assert_eq!(csv.lines().count(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn features_are_deterministic_and_finite(seed in any::<u64>(), n_in in 2usize..24) {
        let n = to_netlist(&random_aig(seed, n_in, 60, 3), GateLibrary::Mixed);
        let f = extract_features(&n);
        prop_assert_eq!(f.as_slice().len(), D);
        prop_assert!(f.as_slice().iter().all(|v| v.is_finite()));
        prop_assert_eq!(f, extract_features(&n));
    }

    #[test]
    fn equivalent_suspect_is_always_clean(seed in any::<u64>(), p in 1u8..=18, rare in any::<bool>()) {
        let g = random_aig(seed, 12, 90, 4);
        let golden = to_netlist(&g, GateLibrary::AndNot);
        let suspect = pipeline_netlist(&g, PipelineId::new(p).unwrap(), seed);
        let strategy = if rare { Strategy::RareGuided } else { Strategy::Uniform };
        let d = golden_model_detect(&suspect, &golden, 300, strategy, seed).unwrap();
        prop_assert_eq!(d.verdict, Label::Clean);
        prop_assert_eq!(d.queries_used, 300);
        prop_assert!(d.witness.is_none());
    }
}
