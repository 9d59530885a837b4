use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use seeker_core::analysis::{self, convex_hull, hulls_overlap, PcaMeta};
use seeker_core::benchgen::{self, BundleConfig, Composition, InsertionOrder, Label};
use seeker_core::detect::{self, FeatureVector, Standardizer, Strategy, D, FEATURE_NAMES};
use seeker_core::equiv::check_equiv_with_budget;
use seeker_core::restructure::pipeline_netlist;
use seeker_core::trojan::plant_trojan;
use seeker_core::{
    from_netlist, parse_bench, to_netlist, write_bench, AnalysisError, EquivResult, Error, GateLibrary, Netlist,
    PipelineId, TrojanParams,
};

use crate::settings::Settings;
use crate::{Command, Common};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
    Io(String),
    /// `check-equiv` found a distinguishing input; already reported.
    NotEquivalent,
}

impl CliError {
    pub fn io(path: &Path, e: impl fmt::Display) -> CliError {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Domain(e) => e.name(),
            CliError::Io(_) => "Io",
            CliError::NotEquivalent => "NotEquivalent",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::NotEquivalent => f.write_str("circuits are not equivalent"),
        }
    }
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Domain(e.into())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    write_text(path, &s)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "circuit".into(), |s| s.to_string_lossy().into_owned())
}

/// Parses a BENCH file and names the netlist after the file stem.
fn load_circuit(path: &Path) -> Result<Netlist, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_bench(&text)?.with_name(stem(path)))
}

fn pipeline_id(s: &str) -> Result<PipelineId, CliError> {
    s.trim()
        .parse::<u8>()
        .ok()
        .and_then(PipelineId::new)
        .ok_or_else(|| CliError::Usage(format!("pipeline {s:?} is not in 1..=18")))
}

fn trojan_params(st: &Settings) -> Result<TrojanParams, CliError> {
    let d = TrojanParams::default();
    let r = st.u64("r")?.map_or(d.r, |r| r as usize);
    let theta = st.f64("theta")?.unwrap_or(d.theta);
    if !(2..=8).contains(&r) {
        return Err(CliError::Usage("--r must be in 2..=8".into()));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(CliError::Usage("--theta must be in [0, 1]".into()));
    }
    Ok(TrojanParams { r, theta })
}

pub fn run(command: Command, common: Common) -> Result<(), CliError> {
    let st = Settings::resolve(&common)?;
    if let Some(n) = st.u64("jobs")? {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
    }
    match command {
        Command::Parse { file } => parse(&st, &file),
        Command::Restructure { file } => restructure(&st, &file),
        Command::InsertHt { file } => insert_ht(&st, &file),
        Command::CheckEquiv { a, b } => check_equiv(&st, &a, &b),
        Command::GenBundle => gen_bundle(&st),
        Command::Detect { bundle, golden } => run_detect(&st, &bundle, &golden),
        Command::Score { bundle, reveal, verdicts } => score(&st, &bundle, &reveal, &verdicts),
        Command::Features { bundle, files } => features(&st, bundle.as_deref(), &files),
        Command::Pca { features, reveal, components } => pca(&st, &features, reveal.as_deref(), components),
    }
}

fn parse(st: &Settings, file: &Path) -> Result<(), CliError> {
    let c = load_circuit(file)?;
    let s = c.stats();
    println!(
        "{}: {} inputs, {} outputs, {} gates, depth {}",
        c.name(),
        s.n_inputs,
        s.n_outputs,
        s.n_gates,
        s.depth
    );
    for (k, n) in &s.gate_histogram {
        println!("  {k:<5} {n}");
    }
    if let Some(out) = st.out_opt()? {
        write_json(&out.join("stats.json"), &s)?;
        st.log_run("parse", &out, json!({ "file": file }))?;
    }
    Ok(())
}

fn restructure(st: &Settings, file: &Path) -> Result<(), CliError> {
    let out = st.out()?;
    let p = pipeline_id(&st.string("pipeline")?.ok_or_else(|| CliError::Usage("--pipeline is required".into()))?)?;
    let seed = st.seed()?;
    let c = load_circuit(file)?;
    let g = from_netlist(&c)?;
    let n = pipeline_netlist(&g, p, seed).with_name(format!("{}_p{p}", c.name()));
    let h = from_netlist(&n)?;
    if !check_equiv_with_budget(&g, &h, None)?.is_equivalent() {
        return Err(CliError::Io(format!("pipeline {p} changed the function of {}", c.name())));
    }
    let path = out.join(format!("{}.bench", n.name()));
    write_text(&path, &write_bench(&n))?;
    st.log_run("restructure", &out, json!({ "file": file, "output": path }))?;
    let (m0, m1) = (g.metrics(), h.metrics());
    println!("{} pipeline {p} [{}]", c.name(), p.descriptor());
    println!("  AND nodes {} -> {}, levels {} -> {}, equivalent", m0.n_ands, m1.n_ands, m0.n_levels, m1.n_levels);
    println!("  wrote {}", path.display());
    Ok(())
}

fn insert_ht(st: &Settings, file: &Path) -> Result<(), CliError> {
    let out = st.out()?;
    let seed = st.seed()?;
    let params = trojan_params(st)?;
    let c = load_circuit(file)?;
    let g = from_netlist(&c)?;
    let (infected, record, report) = plant_trojan(&g, params, seed, c.name())?;
    let n = to_netlist(&infected, GateLibrary::AndNot).with_name(format!("{}_ht", c.name()));
    let path = out.join(format!("{}.bench", n.name()));
    write_text(&path, &write_bench(&n))?;
    write_json(&out.join("trojan.json"), &json!({ "record": record, "validation": report }))?;
    st.log_run("insert-ht", &out, json!({ "file": file, "output": path }))?;
    println!(
        "{}: trigger of {} nets (estimated activation {:.3e}), payload node {}",
        c.name(),
        record.trigger.nets.len(),
        record.trigger.estimated_activation,
        record.payload_node
    );
    println!("  stealthy and effective; wrote {}", path.display());
    Ok(())
}

fn check_equiv(st: &Settings, a: &Path, b: &Path) -> Result<(), CliError> {
    let ca = load_circuit(a)?;
    let cb = load_circuit(b)?;
    let result = check_equiv_with_budget(&from_netlist(&ca)?, &from_netlist(&cb)?, st.u64("budget")?)?;
    if let Some(out) = st.out_opt()? {
        write_json(&out.join("equiv.json"), &result)?;
        st.log_run("check-equiv", &out, json!({ "a": a, "b": b }))?;
    }
    match result {
        EquivResult::Equivalent => {
            println!("EQUIVALENT");
            Ok(())
        }
        EquivResult::Counterexample(v) => {
            println!("NOT EQUIVALENT");
            let bits: Vec<String> = ca.inputs().iter().zip(&v).map(|(n, &b)| format!("{n}={}", b as u8)).collect();
            println!("counterexample: {}", bits.join(" "));
            Err(CliError::NotEquivalent)
        }
    }
}

/// Builds the bundle config from the resolved settings. The config file
/// holds a bundle config; `seed`, `p_infect`, `r`, `theta` and `pipeline`
/// override `master_seed`, the Bernoulli rate, the Trojan parameters and
/// the pipeline list.
fn bundle_config(st: &Settings) -> Result<BundleConfig, CliError> {
    let mut v = Value::Object(st.values.clone());
    let obj = v.as_object_mut().expect("object");
    let seed = st.u64("seed")?.or(st.u64("master_seed")?).ok_or_else(|| CliError::Usage("--seed is required".into()))?;
    obj.insert("master_seed".into(), json!(seed));
    obj.entry("bundle_id").or_insert(json!("bundle"));
    if let Some(p) = st.string("pipeline")? {
        let ids: Vec<PipelineId> = p.split(',').map(pipeline_id).collect::<Result<_, _>>()?;
        obj.insert("pipelines".into(), json!(ids));
    }
    obj.entry("pipelines").or_insert_with(|| json!(PipelineId::all().collect::<Vec<_>>()));
    if !obj.contains_key("composition") {
        let n = st.u64("n_instances")?.ok_or_else(|| CliError::Usage("config needs composition or n_instances".into()))?;
        let p = st.f64("p_infect")?.unwrap_or(0.5);
        obj.insert("composition".into(), json!(Composition::Bernoulli { n_instances: n as usize, p_infect: p }));
    }
    let d = TrojanParams::default();
    let mut trojan = obj.get("trojan").cloned().unwrap_or_else(|| json!(d));
    if let Some(r) = st.u64("r")? {
        trojan["r"] = json!(r);
    }
    if let Some(t) = st.f64("theta")? {
        trojan["theta"] = json!(t);
    }
    obj.insert("trojan".into(), trojan);
    let mut cfg: BundleConfig = serde_json::from_value(v).map_err(|e| CliError::Usage(format!("bundle config: {e}")))?;
    if let (Some(p), Composition::Bernoulli { p_infect, .. }) = (st.f64("p_infect")?, &mut cfg.composition) {
        *p_infect = p;
    }
    Ok(cfg)
}

fn gen_bundle(st: &Settings) -> Result<(), CliError> {
    let out = st.out()?;
    let cfg = bundle_config(st)?;
    if cfg.sources.is_empty() {
        return Err(CliError::Usage("config lists no sources".into()));
    }
    let paths: Vec<PathBuf> = cfg.sources.iter().map(|s| st.base.join(s)).collect();
    let sources: Vec<Netlist> = paths.iter().map(|p| load_circuit(p)).collect::<Result<_, _>>()?;
    let bundle = benchgen::generate_bundle(&cfg, &sources, &out)?;
    st.log_run("gen-bundle", &out, json!({ "resolved_bundle_config": cfg }))?;
    println!(
        "bundle {}: {} instances from {} circuits over {} pipelines ({})",
        cfg.bundle_id,
        bundle.manifest.n_instances,
        sources.len(),
        cfg.pipelines.len(),
        match cfg.order {
            InsertionOrder::InsertThenRestructure => "insert then restructure",
            InsertionOrder::RestructureThenInsert => "restructure then insert",
        }
    );
    println!("  public: {}", benchgen::bundle_dir(&out, &cfg.bundle_id).display());
    println!("  reveal: {}", benchgen::reveal_path(&out, &cfg.bundle_id).display());
    Ok(())
}

fn run_detect(st: &Settings, bundle: &Path, golden: &[PathBuf]) -> Result<(), CliError> {
    let out = st.out()?;
    let seed = st.seed()?;
    let budget = st.u64("budget")?.unwrap_or(1000);
    let strategy: Strategy = st.string("strategy")?.map_or(Ok(Strategy::Uniform), |s| s.parse().map_err(CliError::Usage))?;
    let (manifest, circuits) = benchgen::load_bundle(bundle)?;
    let goldens: BTreeMap<String, Netlist> =
        golden.iter().map(|p| load_circuit(p).map(|c| (c.name().to_string(), c))).collect::<Result<_, _>>()?;
    let verdicts = detect::detect_bundle(&manifest, &circuits, &goldens, budget, strategy, seed)?;
    write_text(&out.join("verdicts.csv"), &benchgen::write_verdicts(&verdicts))?;
    st.log_run("detect", &out, json!({ "bundle": bundle, "golden": golden }))?;
    let flagged = verdicts.values().filter(|v| v.label == Label::Infected).count();
    let queries: u64 = verdicts.values().map(|v| v.queries_used).sum();
    println!("{} instances, {flagged} flagged infected, {queries} vectors applied ({strategy})", verdicts.len());
    Ok(())
}

fn score(st: &Settings, bundle: &Path, reveal: &Path, verdicts: &Path) -> Result<(), CliError> {
    let out = st.out()?;
    let manifest = benchgen::load_manifest(bundle)?;
    let reveal = benchgen::load_reveal(reveal)?;
    let labels = benchgen::reveal_labels(&manifest.sealed_key, &reveal)?;
    let text = fs::read_to_string(verdicts).map_err(|e| CliError::io(verdicts, e))?;
    let v = benchgen::parse_verdicts(&text)?;
    let report = benchgen::score_game(&v, &labels)?;
    let heat = detect::heatmap_accuracy(&v, &reveal)?;
    write_json(&out.join("score.json"), &report)?;
    write_text(&out.join("heatmap.csv"), &heat.to_csv())?;
    st.log_run("score", &out, json!({ "bundle": bundle, "verdicts": verdicts }))?;
    let c = report.confusion;
    println!("TP {} FP {} TN {} FN {}", c.tp, c.fp, c.tn, c.fn_);
    println!("balanced accuracy {:.4}, total queries {}", report.balanced_accuracy, report.total_queries);
    println!("hider score ({:.4}, {})", report.hider_score, report.total_queries);
    Ok(())
}

fn features(st: &Settings, bundle: Option<&Path>, files: &[PathBuf]) -> Result<(), CliError> {
    let out = st.out()?;
    let (ids, circuits): (Vec<String>, Vec<Netlist>) = match bundle {
        Some(dir) => {
            let (m, c) = benchgen::load_bundle(dir)?;
            (m.instances.into_iter().map(|e| e.instance_id).collect(), c)
        }
        None if files.is_empty() => return Err(CliError::Usage("give --bundle or circuit files".into())),
        None => {
            let c: Vec<Netlist> = files.iter().map(|p| load_circuit(p)).collect::<Result<_, _>>()?;
            (c.iter().map(|n| n.name().to_string()).collect(), c)
        }
    };
    let feats: Vec<FeatureVector> = circuits.par_iter().map(detect::extract_features).collect();
    let mut csv = format!("id,{}\n", FEATURE_NAMES.join(","));
    for (id, f) in ids.iter().zip(&feats) {
        let row: Vec<String> = f.as_slice().iter().map(f64::to_string).collect();
        csv.push_str(&format!("{id},{}\n", row.join(",")));
    }
    write_text(&out.join("features.csv"), &csv)?;
    st.log_run("features", &out, json!({ "bundle": bundle, "files": files }))?;
    println!("{} feature vectors of dimension {D}", feats.len());
    Ok(())
}

fn read_features(path: &Path) -> Result<(Vec<String>, Vec<FeatureVector>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let bad = |m: String| CliError::Io(format!("{}: {m}", path.display()));
        ids.push(rec.get(0).ok_or_else(|| bad("empty record".into()))?.to_string());
        let row: Vec<f64> =
            rec.iter().skip(1).map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| bad(e.to_string()))?;
        if row.len() != D || row.iter().any(|x| !x.is_finite()) {
            return Err(AnalysisError::DimensionMismatch { expected: D, found: row.len() }.into());
        }
        rows.push(FeatureVector::new(row));
    }
    Ok((ids, rows))
}

fn pca(st: &Settings, features: &Path, reveal: Option<&Path>, m: usize) -> Result<(), CliError> {
    let out = st.out()?;
    if m < 2 {
        return Err(CliError::Usage("--components must be at least 2 for the scatter output".into()));
    }
    let (ids, feats) = read_features(features)?;
    let scaler = Standardizer::fit(&feats);
    let z: Vec<Vec<f64>> = feats.iter().map(|f| scaler.apply(f)).collect();
    let model = analysis::pca_fit(&z, m)?;
    let scores = analysis::project(&model, &z)?;
    let labels = reveal.map(benchgen::load_reveal).transpose()?.map(|r| r.labels);
    let classes: Vec<Option<Label>> = ids.iter().map(|id| labels.as_ref().and_then(|l| l.get(id).copied())).collect();
    write_text(&out.join("scatter.csv"), &analysis::scatter_csv(&ids, &scores, &classes))?;
    write_text(&out.join("variance.csv"), &analysis::variance_csv(&model))?;
    let meta = PcaMeta {
        fit: "joint".into(),
        standardized: true,
        n_samples: z.len(),
        n_features: D,
        n_components: m,
        explained_ratio: model.explained_ratio.clone(),
    };
    write_json(&out.join("pca_meta.json"), &meta)?;
    write_json(&out.join("pca_model.json"), &model)?;
    st.log_run("pca", &out, json!({ "features": features, "reveal": reveal, "components": m }))?;
    let pct: Vec<String> = model.explained_ratio.iter().map(|r| format!("{:.1}%", 100.0 * r)).collect();
    println!("{} samples; explained variance {}", z.len(), pct.join(", "));
    if labels.is_some() {
        let pick = |want: Label| -> Vec<(f64, f64)> {
            classes.iter().zip(&scores).filter(|(c, _)| **c == Some(want)).map(|(_, s)| (s[0], s[1])).collect()
        };
        let overlap = hulls_overlap(&convex_hull(&pick(Label::Infected)), &convex_hull(&pick(Label::Clean)));
        println!("PC1/PC2 class hulls overlap: {}", if overlap { "yes" } else { "no" });
    }
    Ok(())
}
