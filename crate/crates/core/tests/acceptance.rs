//! End-to-end acceptance suite. Runs every criterion, prints one
//! PASS/FAIL line each and exits non-zero if any failed.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use seeker_core::analysis::{convex_hull, covariance, hulls_overlap, Point};
use seeker_core::benchgen::{
    build_bundle, bundle_dir, plan_bundle, reveal_labels, reveal_path, write_bundle, Bundle, RevealFile,
};
use seeker_core::detect::{detect_bundle, heatmap_accuracy, GoldenModel, Standardizer};
use seeker_core::equiv::{sat_solve, Cnf, SatStatus};
use seeker_core::netlist::simulate;
use seeker_core::restructure::pipeline_netlist;
use seeker_core::trojan::plant_trojan;
use seeker_core::{
    check_equiv, extract_features, from_netlist, knn_classify, parse_bench, pca_fit, project, to_netlist,
    BundleConfig, Composition, ConfusionMatrix, FeatureVector, GateLibrary, Label, Netlist, PipelineId, SplitMix64,
    Strategy, TrainingScenario, TrojanParams,
};

use common::{all_rows, brute_force_sat, iscas, netlist_eval, oracle_eigenvalues, random_3cnf, random_aig, ISCAS};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn all_pipelines() -> Vec<PipelineId> {
    PipelineId::all().collect()
}

fn bundle_config(id: &str, seed: u64, composition: Composition, n_sources: usize) -> BundleConfig {
    let cfg = BundleConfig {
        bundle_id: id.to_string(),
        sources: Vec::new(),
        composition,
        pipelines: all_pipelines(),
        master_seed: seed,
        trojan: TrojanParams::default(),
        order: Default::default(),
        salt: None,
    };
    cfg.validate(n_sources).expect("valid config");
    cfg
}

fn parsed_circuits(b: &Bundle) -> Vec<Netlist> {
    b.circuits.iter().map(|(_, text)| parse_bench(text).unwrap()).collect()
}

fn goldens(sources: &[Netlist]) -> BTreeMap<String, Netlist> {
    sources.iter().map(|n| (n.name().to_string(), n.clone())).collect()
}

fn confusion(verdicts: &BTreeMap<String, seeker_core::benchgen::Verdict>, reveal: &RevealFile) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for (id, &truth) in &reveal.labels {
        cm.record(truth, verdicts[id].label);
    }
    cm
}

fn criterion_1() -> Outcome {
    let mut equivalent = 0;
    let mut exhaustive = 0;
    let mut runs = 0;
    for i in 0..20u64 {
        // alternate narrow (exhaustively checkable) and wide circuits
        let n_in = if i % 2 == 0 { 6 + (i as usize % 7) } else { 14 + (i as usize % 11) };
        let n_ands = 60 + (i as usize * 7) % 141;
        let g = random_aig(1000 + i, n_in, n_ands, 4);
        assert!(g.n_ands() <= 200);
        let reference = to_netlist(&g, GateLibrary::AndNot);
        let rows = (n_in <= 12).then(|| all_rows(n_in));
        let expected = rows.as_ref().map(|r| simulate(&reference, r).unwrap());
        for p in PipelineId::all() {
            runs += 1;
            let out = pipeline_netlist(&g, p, 77 + i);
            let back = from_netlist(&out).map_err(|e| e.to_string())?;
            if check_equiv(&g, &back).map_err(|e| e.to_string())?.is_equivalent() {
                equivalent += 1;
            }
            if let (Some(rows), Some(expected)) = (&rows, &expected) {
                ensure!(out.inputs() == reference.inputs(), "circuit {i} pipeline {p}: input order changed");
                ensure!(
                    &simulate(&out, rows).unwrap() == expected,
                    "circuit {i} pipeline {p}: truth table differs"
                );
                exhaustive += 1;
            }
        }
    }
    ensure!(equivalent == runs, "check_equiv Equivalent on {equivalent}/{runs}");
    Ok(format!("check_equiv Equivalent {equivalent}/{runs}; exhaustive truth tables equal {exhaustive}/{exhaustive}"))
}

fn criterion_2() -> Outcome {
    let hosts: Vec<Netlist> = ISCAS.iter().map(|n| iscas(n)).collect();
    let aigs: Vec<_> = hosts.iter().map(|n| from_netlist(n).unwrap()).collect();
    let mut passed = 0;
    for i in 0..100u64 {
        let k = i as usize % hosts.len();
        let (infected, _rec, report) = plant_trojan(&aigs[k], TrojanParams::default(), 5000 + i, &format!("t{i}"))
            .map_err(|e| format!("{} seed {}: {e}", ISCAS[k], 5000 + i))?;
        ensure!(report.stealthy && report.effective, "{} seed {}: validation flags false", ISCAS[k], 5000 + i);
        let infected_nl = to_netlist(&infected, GateLibrary::Mixed);
        let golden = netlist_eval(&hosts[k], &report.witness);
        let suspect = netlist_eval(&infected_nl, &report.witness);
        ensure!(golden != suspect, "{} seed {}: witness does not replay", ISCAS[k], 5000 + i);
        passed += 1;
    }
    Ok(format!("stealth and effectiveness proven on {passed}/100; every witness replays by gate-level simulation"))
}

fn criterion_3(b: &Bundle, sources: &[Netlist]) -> Outcome {
    let circuits = parsed_circuits(b);
    let g = goldens(sources);
    let mut parts = Vec::new();
    for strategy in [Strategy::Uniform, Strategy::RareGuided] {
        let v = detect_bundle(&b.manifest, &circuits, &g, 1000, strategy, 99).map_err(|e| e.to_string())?;
        let cm = confusion(&v, &b.reveal);
        ensure!(cm.fp == 0, "{strategy}: FP = {} (TP {} TN {} FN {})", cm.fp, cm.tp, cm.tn, cm.fn_);
        parts.push(format!("{strategy}: TP {} FP {} TN {} FN {}", cm.tp, cm.fp, cm.tn, cm.fn_));
    }
    Ok(format!("{}-instance bundle, {}", b.manifest.n_instances, parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let params = TrojanParams { r: 2, theta: 0.1 };
    for s in 0..50u64 {
        let host = random_aig(40 + s, 12, 160, 6);
        let Ok((infected, _, _)) = plant_trojan(&host, params, 7 + s, "t") else { continue };
        let golden = to_netlist(&host, GateLibrary::AndNot);
        let suspect = to_netlist(&infected, GateLibrary::AndNot);
        let rows = all_rows(host.n_inputs());
        let a = simulate(&golden, &rows).unwrap();
        let b = simulate(&suspect, &rows).unwrap();
        let hits = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        let p = hits as f64 / rows.len() as f64;
        // budget that puts the expected rate near 0.8
        let l = ((0.2f64).ln() / (1.0 - p).ln()).round().max(1.0) as u64;
        let expected = 1.0 - (1.0 - p).powi(l as i32);
        let model = GoldenModel::new(&golden);
        let mut detected = 0;
        for t in 0..1000u64 {
            let d = model.detect(&suspect, l, Strategy::Uniform, 31_337 + t).map_err(|e| e.to_string())?;
            if d.verdict == Label::Infected {
                detected += 1;
            }
        }
        let rate = detected as f64 / 1000.0;
        ensure!(
            (rate - expected).abs() <= 0.03,
            "p = {hits}/4096, L = {l}: rate {rate:.3} vs expected {expected:.3}"
        );
        return Ok(format!(
            "p = {hits}/4096 exactly, L = {l}: observed {rate:.3}, predicted {expected:.3} (|diff| {:.3} <= 0.03)",
            (rate - expected).abs()
        ));
    }
    Err("no host accepted a Trojan".into())
}

fn criterion_5() -> Outcome {
    let mut rng = SplitMix64::new(555);
    let (mut worst_rec, mut worst_eig, mut worst_sum) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let x: Vec<Vec<f64>> =
            (0..10).map(|_| (0..5).map(|_| rng.next_f64() * 4.0 - 2.0).collect()).collect();
        let model = pca_fit(&x, 5).map_err(|e| e.to_string())?;
        let (_, cov) = covariance(&x).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let r: f64 = (0..5).map(|k| model.components[k][i] * model.eigenvalues[k] * model.components[k][j]).sum();
                worst_rec = worst_rec.max((r - cov[i][j]).abs());
            }
        }
        let mut oracle = oracle_eigenvalues(&cov);
        oracle.reverse();
        for (a, b) in model.eigenvalues.iter().zip(&oracle) {
            worst_eig = worst_eig.max((a - b).abs() / b.abs().max(1e-300));
        }
        worst_sum = worst_sum.max((model.explained_ratio.iter().sum::<f64>() - 1.0).abs());
    }
    ensure!(worst_rec < 1e-9, "reconstruction error {worst_rec:e}");
    ensure!(worst_eig < 1e-8, "eigenvalue relative error {worst_eig:e}");
    ensure!(worst_sum <= 1e-9, "explained ratio sum off by {worst_sum:e}");
    Ok(format!(
        "50 matrices: max reconstruction error {worst_rec:.1e}, max eigenvalue rel. error {worst_eig:.1e}, max |sum ratio - 1| {worst_sum:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = SplitMix64::new(666);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..500 {
        let m = 78 + rng.below_usize(16);
        let clauses = random_3cnf(&mut rng, 20, m);
        let mut f = Cnf::new(20);
        for c in &clauses {
            f.add_clause(c);
        }
        let truth = brute_force_sat(20, &clauses);
        let r = sat_solve(&f, &[]).map_err(|e| format!("formula {i}: {e}"))?;
        match r.status {
            SatStatus::Sat => {
                ensure!(truth, "formula {i}: solver SAT, brute force UNSAT");
                let model = r.model.ok_or(format!("formula {i}: SAT without model"))?;
                let holds = clauses.iter().all(|c| {
                    c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0))
                });
                ensure!(holds, "formula {i}: model violates a clause");
                sat += 1;
            }
            SatStatus::Unsat => {
                ensure!(!truth, "formula {i}: solver UNSAT, brute force SAT");
                unsat += 1;
            }
        }
    }
    Ok(format!("500/500 match brute force ({sat} SAT with verified models, {unsat} UNSAT)"))
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn criterion_7() -> Outcome {
    let sources: Vec<Netlist> = ["c880", "c1355", "c1908"].iter().map(|n| iscas(n)).collect();
    let cfg = bundle_config("det", 4242, Composition::Bernoulli { n_instances: 24, p_infect: 0.5 }, sources.len());
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        let b = build_bundle(&cfg, &sources).map_err(|e| e.to_string())?;
        write_bundle(&b, d.path()).map_err(|e| e.to_string())?;
    }
    let (f1, f2) = (files_under(d1.path()), files_under(d2.path()));
    ensure!(f1 == f2, "bundle trees differ");
    let public = files_under(&bundle_dir(d1.path(), "det"));
    for (path, bytes) in &public {
        let text = String::from_utf8_lossy(bytes).to_ascii_lowercase();
        ensure!(!text.contains("infected") && !text.contains("clean"), "label plaintext in {}", path.display());
    }
    let manifest = seeker_core::benchgen::load_manifest(&bundle_dir(d1.path(), "det")).map_err(|e| e.to_string())?;
    let mut reveal = seeker_core::benchgen::load_reveal(&reveal_path(d1.path(), "det")).map_err(|e| e.to_string())?;
    let labels = reveal_labels(&manifest.sealed_key, &reveal).map_err(|e| e.to_string())?;
    ensure!(labels == reveal.labels, "round trip changed labels");
    let victim = labels.keys().nth(labels.len() / 2).unwrap().clone();
    let flipped = match labels[&victim] {
        Label::Infected => Label::Clean,
        Label::Clean => Label::Infected,
    };
    reveal.labels.insert(victim.clone(), flipped);
    match reveal_labels(&manifest.sealed_key, &reveal) {
        Err(seeker_core::BenchgenError::DigestMismatch { instances }) => {
            ensure!(instances == vec![victim.clone()], "tamper reported {instances:?}");
        }
        other => return Err(format!("tampered label accepted: {other:?}")),
    }
    Ok(format!(
        "{} files byte-identical across two runs; {} public files label-free; round trip ok; tamper of {victim} detected",
        f1.len(),
        public.len()
    ))
}

fn hull_overlap_for(b: &Bundle) -> Result<bool, String> {
    let feats: Vec<FeatureVector> = parsed_circuits(b).iter().map(extract_features).collect();
    let st = Standardizer::fit(&feats);
    let x: Vec<Vec<f64>> = feats.iter().map(|f| st.apply(f)).collect();
    let model = pca_fit(&x, 2).map_err(|e| e.to_string())?;
    let scores = project(&model, &x).map_err(|e| e.to_string())?;
    let (mut inf, mut cln): (Vec<Point>, Vec<Point>) = (Vec::new(), Vec::new());
    for (entry, s) in b.manifest.instances.iter().zip(&scores) {
        match b.reveal.labels[&entry.instance_id] {
            Label::Infected => inf.push((s[0], s[1])),
            Label::Clean => cln.push((s[0], s[1])),
        }
    }
    if inf.is_empty() || cln.is_empty() {
        return Err(format!("bundle {} lacks a class", b.manifest.bundle_id));
    }
    Ok(hulls_overlap(&convex_hull(&inf), &convex_hull(&cln)))
}

fn criterion_8(main: &Bundle, sources: &[Netlist]) -> Outcome {
    // (a) full 8 x 100 x 18 grid: exact instance count from the planner, and a
    // reduced grid (one Trojan per circuit) actually generated and scored.
    let grid = |t| bundle_config("grid", 8, Composition::Grid { trojans_per_circuit: t, clean_per_pipeline: 0 }, 8);
    let plan = plan_bundle(&grid(100), sources.len()).map_err(|e| e.to_string())?;
    let n_infected = plan.iter().filter(|p| p.label == Label::Infected).count();
    ensure!(n_infected == 14_400 && plan.len() == 14_400, "full grid plans {n_infected} infected of {}", plan.len());
    let small = build_bundle(&grid(1), sources).map_err(|e| e.to_string())?;
    ensure!(small.manifest.n_instances == 144, "reduced grid has {} instances", small.manifest.n_instances);
    let v = detect_bundle(&small.manifest, &parsed_circuits(&small), &goldens(sources), 1000, Strategy::Uniform, 3)
        .map_err(|e| e.to_string())?;
    let heat = heatmap_accuracy(&v, &small.reveal).map_err(|e| e.to_string())?;
    ensure!(heat.circuits.len() == 8 && heat.cells.iter().all(|r| r.len() == 18), "heatmap is not 8 x 18");
    ensure!(heat.cells.iter().flatten().all(Option::is_some), "reduced grid leaves empty heatmap cells");

    // (b) class overlap in the PCA plane on at least one of three bundles
    let light: Vec<Netlist> = sources.iter().filter(|n| n.name() != "c6288").cloned().collect();
    let mut overlaps = vec![hull_overlap_for(main)?];
    for seed in [2025u64, 2026] {
        let cfg = bundle_config(
            &format!("pca{seed}"),
            seed,
            Composition::Bernoulli { n_instances: 60, p_infect: 0.5 },
            light.len(),
        );
        overlaps.push(hull_overlap_for(&build_bundle(&cfg, &light).map_err(|e| e.to_string())?)?);
    }
    let n_overlap = overlaps.iter().filter(|&&o| o).count();
    ensure!(n_overlap >= 1, "no bundle has overlapping class hulls");

    // (c) label imbalance: adding clean rows must not lower false negatives
    let feats: Vec<FeatureVector> = parsed_circuits(main).iter().map(extract_features).collect();
    let labels: Vec<Label> = main.manifest.instances.iter().map(|e| main.reveal.labels[&e.instance_id]).collect();
    let infected: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Infected).collect();
    let clean: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Clean).collect();
    ensure!(infected.len() > 26 && clean.len() > 27, "bundle too small for the split");
    let s1: Vec<usize> = infected[..26].iter().chain(&clean[..11]).copied().collect();
    let s2: Vec<usize> = s1.iter().chain(&clean[11..27]).copied().collect();
    let test: Vec<usize> = (0..labels.len()).filter(|i| !s2.contains(i)).collect();
    let fn_count = |train: &[usize]| -> Result<usize, String> {
        let scenario = TrainingScenario {
            id: String::new(),
            features: train.iter().map(|&i| feats[i].clone()).collect(),
            labels: train.iter().map(|&i| labels[i]).collect(),
        };
        let x: Vec<FeatureVector> = test.iter().map(|&i| feats[i].clone()).collect();
        let out = knn_classify(&scenario, &x, 3).map_err(|e| e.to_string())?;
        Ok(test.iter().zip(&out).filter(|(&i, v)| labels[i] == Label::Infected && v.label == Label::Clean).count())
    };
    let (fn1, fn2) = (fn_count(&s1)?, fn_count(&s2)?);
    ensure!(fn2 >= fn1, "FN(S2) = {fn2} < FN(S1) = {fn1}");
    Ok(format!(
        "(a) grid plans 14400 infected, reduced 8x18 grid generated and scored; (b) hulls overlap on {n_overlap}/3 bundles; (c) FN(S1) = {fn1}, FN(S2) = {fn2} over {} test instances",
        test.len()
    ))
}

fn run(n: u32, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panic: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match &r {
        Ok(m) => println!("criterion {n}: PASS ({secs:.1}s) {m}"),
        Err(m) => println!("criterion {n}: FAIL ({secs:.1}s) {m}"),
    }
    r.is_ok()
}

fn main() {
    let sources: Vec<Netlist> = ISCAS.iter().map(|n| iscas(n)).collect();
    let mixed = {
        let cfg = bundle_config("mixed", 2024, Composition::Bernoulli { n_instances: 200, p_infect: 0.5 }, 8);
        build_bundle(&cfg, &sources)
    };
    let mut ok = vec![
        run(1, criterion_1),
        run(2, criterion_2),
    ];
    match &mixed {
        Ok(b) => {
            ok.push(run(3, || criterion_3(b, &sources)));
            ok.push(run(4, criterion_4));
            ok.push(run(5, criterion_5));
            ok.push(run(6, criterion_6));
            ok.push(run(7, criterion_7));
            ok.push(run(8, || criterion_8(b, &sources)));
        }
        Err(e) => {
            println!("criterion 3: FAIL mixed bundle not built: {e}");
            ok.push(false);
            ok.extend([run(4, criterion_4), run(5, criterion_5), run(6, criterion_6), run(7, criterion_7)]);
            println!("criterion 8: FAIL mixed bundle not built: {e}");
            ok.push(false);
        }
    }
    let passed = ok.iter().filter(|&&o| o).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
