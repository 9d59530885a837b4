//! Benchmark bundles with sealed labels.
//!
//! Layout under an output root:
//!
//! ```text
//! bundle/<id>/circuits/<instance_id>.bench
//! bundle/<id>/manifest.json
//! reveal/<id>.json
//! ```
//!
//! The manifest lists every instance with its source circuit and pipeline
//! and a sealed key: `sha256(instance_id ‖ label ‖ salt)` per instance, in
//! lowercase hex, where `label` is the ASCII word for the class and `salt`
//! the raw salt bytes. The reveal file holds the salt, the labels and the
//! Trojan records.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aig::{from_netlist, to_netlist, Aig};
use crate::detect::ConfusionMatrix;
use crate::equiv::check_equiv;
use crate::netlist::{parse_bench, write_bench, Netlist};
use crate::restructure::{apply_pipeline, pipeline_netlist, PipelineId};
use crate::rng::{derive_seed, derive_seed_path, SplitMix64};
use crate::trojan::{plant_trojan, TrojanParams, TrojanRecord};

pub const SALT_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchgenError {
    #[error("instance {instance_id} failed validation: {reason}")]
    ValidationFailed { instance_id: String, reason: String },
    #[error("digest mismatch for {}", instances.join(", "))]
    DigestMismatch { instances: Vec<String> },
    #[error("no verdict for {}", instances.join(", "))]
    MissingVerdict { instances: Vec<String> },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("salt must be at least 16 bytes")]
    InvalidSalt,
    #[error("{0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl BenchgenError {
    pub fn name(&self) -> &'static str {
        match self {
            BenchgenError::ValidationFailed { .. } => "ValidationFailed",
            BenchgenError::DigestMismatch { .. } => "DigestMismatch",
            BenchgenError::MissingVerdict { .. } => "MissingVerdict",
            BenchgenError::InvalidConfig(_) => "InvalidConfig",
            BenchgenError::InvalidSalt => "InvalidSalt",
            BenchgenError::Io(_) => "Io",
            BenchgenError::Malformed(_) => "Malformed",
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> BenchgenError {
    BenchgenError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Infected,
    Clean,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Infected => "infected",
            Label::Clean => "clean",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "infected" => Ok(Label::Infected),
            "clean" => Ok(Label::Clean),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

/// How many instances there are and which of them carry a Trojan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Composition {
    /// Each instance is infected independently with probability `p_infect`.
    Bernoulli { n_instances: usize, p_infect: f64 },
    /// Exactly `k` seed-chosen instances are infected.
    FixedK { n_instances: usize, k: usize },
    /// Every source gets `trojans_per_circuit` Trojans, each restructured by
    /// every pipeline, plus `clean_per_pipeline` clean versions per
    /// (source, pipeline).
    Grid { trojans_per_circuit: usize, clean_per_pipeline: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InsertionOrder {
    #[default]
    InsertThenRestructure,
    RestructureThenInsert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    pub bundle_id: String,
    /// Source circuit paths (used by the CLI; the library takes parsed netlists).
    #[serde(default)]
    pub sources: Vec<String>,
    pub composition: Composition,
    pub pipelines: Vec<PipelineId>,
    pub master_seed: u64,
    #[serde(default)]
    pub trojan: TrojanParams,
    #[serde(default)]
    pub order: InsertionOrder,
    /// Hex salt; derived from `master_seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salt: Option<String>,
}

impl BundleConfig {
    pub fn validate(&self, n_sources: usize) -> Result<(), BenchgenError> {
        let bad = |m: &str| Err(BenchgenError::InvalidConfig(m.to_string()));
        if n_sources == 0 {
            return bad("no source circuits");
        }
        if self.pipelines.is_empty() {
            return bad("no pipelines");
        }
        if self.bundle_id.is_empty() || !self.bundle_id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return bad("bundle_id must be non-empty and use [A-Za-z0-9_.-]");
        }
        if !(2..=8).contains(&self.trojan.r) {
            return bad("r must be in 2..=8");
        }
        if !(0.0..=1.0).contains(&self.trojan.theta) {
            return bad("theta must be in [0, 1]");
        }
        match self.composition {
            Composition::Bernoulli { n_instances, p_infect } => {
                if n_instances == 0 {
                    return bad("n_instances must be at least 1");
                }
                if !(0.0..=1.0).contains(&p_infect) {
                    return bad("p_infect must be in [0, 1]");
                }
            }
            Composition::FixedK { n_instances, k } => {
                if n_instances == 0 || k > n_instances {
                    return bad("need 1 <= n_instances and k <= n_instances");
                }
            }
            Composition::Grid { trojans_per_circuit, clean_per_pipeline } => {
                if trojans_per_circuit + clean_per_pipeline == 0 {
                    return bad("grid is empty");
                }
            }
        }
        self.salt_bytes().map(|_| ())
    }

    pub fn salt_bytes(&self) -> Result<Vec<u8>, BenchgenError> {
        match &self.salt {
            Some(h) => {
                let s = hex::decode(h).map_err(|_| BenchgenError::InvalidSalt)?;
                if s.len() < SALT_LEN {
                    return Err(BenchgenError::InvalidSalt);
                }
                Ok(s)
            }
            None => {
                let mut s = vec![0u8; SALT_LEN];
                SplitMix64::new(derive_seed(self.master_seed, SALT_DOMAIN)).fill_bytes(&mut s);
                Ok(s)
            }
        }
    }
}

const SALT_DOMAIN: u64 = 0x5a17;

/// One planned instance before ids are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePlan {
    pub source: usize,
    pub pipeline: PipelineId,
    pub label: Label,
    /// Trojans shared across pipelines (grid mode) have the same index.
    pub trojan_index: Option<usize>,
    pub seed: u64,
}

/// Deterministic instance plan, in grid order (not yet shuffled).
pub fn plan_bundle(cfg: &BundleConfig, n_sources: usize) -> Result<Vec<InstancePlan>, BenchgenError> {
    cfg.validate(n_sources)?;
    let seed_of = |i: usize| derive_seed_path(cfg.master_seed, &[2, i as u64]);
    let n_p = cfg.pipelines.len();
    let mut plan = Vec::new();
    match cfg.composition {
        Composition::Bernoulli { n_instances, p_infect } => {
            let mut rng = SplitMix64::new(derive_seed(cfg.master_seed, 0));
            for i in 0..n_instances {
                let infected = rng.bernoulli(p_infect);
                plan.push(InstancePlan {
                    source: i % n_sources,
                    pipeline: cfg.pipelines[(i / n_sources) % n_p],
                    label: if infected { Label::Infected } else { Label::Clean },
                    trojan_index: infected.then_some(i),
                    seed: seed_of(i),
                });
            }
        }
        Composition::FixedK { n_instances, k } => {
            let mut rng = SplitMix64::new(derive_seed(cfg.master_seed, 0));
            let mut infected = vec![false; n_instances];
            for i in rng.sample_indices(n_instances, k) {
                infected[i] = true;
            }
            for (i, &inf) in infected.iter().enumerate() {
                plan.push(InstancePlan {
                    source: i % n_sources,
                    pipeline: cfg.pipelines[(i / n_sources) % n_p],
                    label: if inf { Label::Infected } else { Label::Clean },
                    trojan_index: inf.then_some(i),
                    seed: seed_of(i),
                });
            }
        }
        Composition::Grid { trojans_per_circuit, clean_per_pipeline } => {
            for source in 0..n_sources {
                for t in 0..trojans_per_circuit {
                    for &pipeline in &cfg.pipelines {
                        let i = plan.len();
                        plan.push(InstancePlan {
                            source,
                            pipeline,
                            label: Label::Infected,
                            trojan_index: Some(t),
                            seed: seed_of(i),
                        });
                    }
                }
                for _ in 0..clean_per_pipeline {
                    for &pipeline in &cfg.pipelines {
                        let i = plan.len();
                        plan.push(InstancePlan { source, pipeline, label: Label::Clean, trojan_index: None, seed: seed_of(i) });
                    }
                }
            }
        }
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub file: String,
    pub source: String,
    pub pipeline: PipelineId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub bundle_id: String,
    pub n_instances: usize,
    pub instances: Vec<ManifestEntry>,
    /// Instance id to lowercase hex digest.
    pub sealed_key: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealInstance {
    pub source: String,
    pub pipeline: PipelineId,
    pub trojan_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealFile {
    pub bundle_id: String,
    pub salt: String,
    pub labels: BTreeMap<String, Label>,
    pub instances: BTreeMap<String, RevealInstance>,
    pub trojans: BTreeMap<String, TrojanRecord>,
    pub config: BundleConfig,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: BenchmarkManifest,
    /// (file name, BENCH text) in manifest order.
    pub circuits: Vec<(String, String)>,
    pub reveal: RevealFile,
}

fn digest(instance_id: &str, label: Label, salt: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(instance_id.as_bytes());
    h.update(label.as_str().as_bytes());
    h.update(salt);
    hex::encode(h.finalize())
}

pub fn seal_labels(labels: &BTreeMap<String, Label>, salt: &[u8]) -> Result<BTreeMap<String, String>, BenchgenError> {
    if salt.len() < SALT_LEN {
        return Err(BenchgenError::InvalidSalt);
    }
    Ok(labels.iter().map(|(id, &l)| (id.clone(), digest(id, l, salt))).collect())
}

/// Recomputes every digest from the reveal file; any disagreement (or an
/// instance missing on either side) is reported by instance id.
pub fn reveal_labels(
    sealed: &BTreeMap<String, String>,
    reveal: &RevealFile,
) -> Result<BTreeMap<String, Label>, BenchgenError> {
    let salt = hex::decode(&reveal.salt).map_err(|_| BenchgenError::InvalidSalt)?;
    if salt.len() < SALT_LEN {
        return Err(BenchgenError::InvalidSalt);
    }
    let mut bad: Vec<String> = sealed
        .iter()
        .filter(|(id, d)| reveal.labels.get(*id).map_or(true, |&l| digest(id, l, &salt) != **d))
        .map(|(id, _)| id.clone())
        .collect();
    bad.extend(reveal.labels.keys().filter(|id| !sealed.contains_key(*id)).cloned());
    if bad.is_empty() {
        Ok(reveal.labels.clone())
    } else {
        bad.sort();
        Err(BenchgenError::DigestMismatch { instances: bad })
    }
}

fn check(id: &str, what: &str, a: &Aig, b: &Aig) -> Result<(), BenchgenError> {
    match check_equiv(a, b) {
        Ok(r) if r.is_equivalent() => Ok(()),
        Ok(_) => Err(BenchgenError::ValidationFailed { instance_id: id.into(), reason: format!("{what}: not equivalent") }),
        Err(e) => Err(BenchgenError::ValidationFailed { instance_id: id.into(), reason: format!("{what}: {e}") }),
    }
}

fn fail(id: &str, e: impl fmt::Display) -> BenchgenError {
    BenchgenError::ValidationFailed { instance_id: id.into(), reason: e.to_string() }
}

struct Built {
    text: String,
    record: Option<TrojanRecord>,
}

fn build_instance(
    cfg: &BundleConfig,
    id: &str,
    host: &Aig,
    plan: &InstancePlan,
    shared: Option<&(Aig, TrojanRecord)>,
) -> Result<Built, BenchgenError> {
    let p = plan.pipeline;
    let (netlist, reference, record): (Netlist, Aig, Option<TrojanRecord>) = match (plan.label, cfg.order) {
        (Label::Clean, _) => (pipeline_netlist(host, p, plan.seed), host.clone(), None),
        (Label::Infected, InsertionOrder::InsertThenRestructure) => {
            let (infected, rec) = shared.expect("planted before instances are built");
            (pipeline_netlist(infected, p, plan.seed), infected.clone(), Some(rec.clone()))
        }
        (Label::Infected, InsertionOrder::RestructureThenInsert) => {
            let restructured = apply_pipeline(host, p, plan.seed);
            check(id, "restructuring", host, &restructured)?;
            let tseed = derive_seed(plan.seed, 1);
            let (infected, rec, _) = plant_trojan(&restructured, cfg.trojan, tseed, id).map_err(|e| fail(id, e))?;
            (to_netlist(&infected, p.library()), infected, Some(rec))
        }
    };
    let netlist = netlist.with_name(id);
    let emitted = from_netlist(&netlist).map_err(|e| fail(id, e))?;
    check(id, "emitted circuit", &reference, &emitted)?;
    let record = record.map(|mut r| {
        r.instance_id = id.to_string();
        r
    });
    Ok(Built { text: write_bench(&netlist), record })
}

/// Builds a bundle in memory. Every instance is checked before it is
/// emitted: Trojans by `validate_trojan`, every circuit by `check_equiv`
/// against its reference (the source for clean instances, source plus
/// Trojan for infected ones).
pub fn build_bundle(cfg: &BundleConfig, sources: &[Netlist]) -> Result<Bundle, BenchgenError> {
    let mut plan = plan_bundle(cfg, sources.len())?;
    let salt = cfg.salt_bytes()?;
    let hosts: Vec<Aig> = sources
        .iter()
        .map(|n| from_netlist(n).map_err(|e| BenchgenError::Malformed(format!("{}: {e}", n.name()))))
        .collect::<Result<_, _>>()?;

    SplitMix64::new(derive_seed(cfg.master_seed, 1)).shuffle(&mut plan);
    let width = plan.len().saturating_sub(1).to_string().len().max(4);
    let ids: Vec<String> = (0..plan.len()).map(|i| format!("inst_{i:0width$}")).collect();

    // Trojans planted before restructuring are shared by every pipeline
    // version of the same (source, index).
    let mut keys: Vec<(usize, usize)> = Vec::new();
    if cfg.order == InsertionOrder::InsertThenRestructure {
        keys = plan.iter().filter_map(|p| p.trojan_index.map(|t| (p.source, t))).collect();
        keys.sort_unstable();
        keys.dedup();
    }
    let planted: Vec<(Aig, TrojanRecord)> = keys
        .par_iter()
        .map(|&(s, t)| {
            let seed = derive_seed_path(cfg.master_seed, &[3, s as u64, t as u64]);
            let label = format!("{}#{t}", sources[s].name());
            plant_trojan(&hosts[s], cfg.trojan, seed, &label)
                .map(|(g, r, _)| (g, r))
                .map_err(|e| fail(&label, e))
        })
        .collect::<Result<_, _>>()?;
    let shared = |p: &InstancePlan| {
        p.trojan_index
            .and_then(|t| keys.binary_search(&(p.source, t)).ok())
            .map(|i| &planted[i])
    };

    let built: Vec<Built> = plan
        .par_iter()
        .zip(ids.par_iter())
        .map(|(p, id)| build_instance(cfg, id, &hosts[p.source], p, shared(p)))
        .collect::<Result<_, _>>()?;

    let mut labels = BTreeMap::new();
    let mut instances = Vec::with_capacity(plan.len());
    let mut reveal_instances = BTreeMap::new();
    let mut trojans = BTreeMap::new();
    let mut circuits = Vec::with_capacity(plan.len());
    for ((p, id), b) in plan.iter().zip(&ids).zip(built) {
        let file = format!("circuits/{id}.bench");
        let source = sources[p.source].name().to_string();
        instances.push(ManifestEntry { instance_id: id.clone(), file: file.clone(), source: source.clone(), pipeline: p.pipeline });
        reveal_instances.insert(id.clone(), RevealInstance { source, pipeline: p.pipeline, trojan_index: p.trojan_index });
        labels.insert(id.clone(), p.label);
        if let Some(r) = b.record {
            trojans.insert(id.clone(), r);
        }
        circuits.push((file, b.text));
    }
    let sealed_key = seal_labels(&labels, &salt)?;
    let manifest = BenchmarkManifest { bundle_id: cfg.bundle_id.clone(), n_instances: instances.len(), instances, sealed_key };
    let reveal = RevealFile {
        bundle_id: cfg.bundle_id.clone(),
        salt: hex::encode(&salt),
        labels,
        instances: reveal_instances,
        trojans,
        config: cfg.clone(),
    };
    Ok(Bundle { manifest, circuits, reveal })
}

pub fn bundle_dir(root: &Path, bundle_id: &str) -> PathBuf {
    root.join("bundle").join(bundle_id)
}

pub fn reveal_path(root: &Path, bundle_id: &str) -> PathBuf {
    root.join("reveal").join(format!("{bundle_id}.json"))
}

fn write_file(path: &Path, text: &str) -> Result<(), BenchgenError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes the public bundle and the reveal file under `root`.
pub fn write_bundle(bundle: &Bundle, root: &Path) -> Result<(), BenchgenError> {
    let dir = bundle_dir(root, &bundle.manifest.bundle_id);
    for (file, text) in &bundle.circuits {
        write_file(&dir.join(file), text)?;
    }
    write_file(&dir.join("manifest.json"), &to_json(&bundle.manifest))?;
    write_file(&reveal_path(root, &bundle.manifest.bundle_id), &to_json(&bundle.reveal))
}

pub fn generate_bundle(cfg: &BundleConfig, sources: &[Netlist], root: &Path) -> Result<Bundle, BenchgenError> {
    let bundle = build_bundle(cfg, sources)?;
    write_bundle(&bundle, root)?;
    Ok(bundle)
}

pub fn load_manifest(dir: &Path) -> Result<BenchmarkManifest, BenchgenError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| BenchgenError::Malformed(format!("{}: {e}", path.display())))
}

/// Reads a manifest and parses every circuit it lists.
pub fn load_bundle(dir: &Path) -> Result<(BenchmarkManifest, Vec<Netlist>), BenchgenError> {
    let manifest = load_manifest(dir)?;
    let circuits = manifest
        .instances
        .iter()
        .map(|m| {
            let p = dir.join(&m.file);
            let t = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
            parse_bench(&t).map_err(|e| BenchgenError::Malformed(format!("{}: {e}", p.display())))
        })
        .collect::<Result<_, _>>()?;
    Ok((manifest, circuits))
}

pub fn load_reveal(path: &Path) -> Result<RevealFile, BenchgenError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| BenchgenError::Malformed(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub queries_used: u64,
}

/// `instance_id,verdict,queries_used`, one line per instance, sorted by id.
pub fn write_verdicts(verdicts: &BTreeMap<String, Verdict>) -> String {
    verdicts.iter().map(|(id, v)| format!("{id},{},{}\n", v.label, v.queries_used)).collect()
}

/// Parses verdict lines; a leading `instance_id,verdict,queries_used` header
/// and `#` comment lines are skipped.
pub fn parse_verdicts(text: &str) -> Result<BTreeMap<String, Verdict>, BenchgenError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let err = |m: String| BenchgenError::Malformed(format!("verdicts record {}: {m}", i + 1));
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if i == 0 && rec.get(0) == Some("instance_id") {
            continue;
        }
        if rec.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", rec.len())));
        }
        let label = rec[1].parse().map_err(err)?;
        let queries_used = rec[2].parse().map_err(|_| err(format!("bad query count {:?}", &rec[2])))?;
        out.insert(rec[0].to_string(), Verdict { label, queries_used });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub confusion: ConfusionMatrix,
    pub balanced_accuracy: f64,
    pub total_queries: u64,
    pub per_instance_queries: BTreeMap<String, u64>,
    /// `1 - balanced_accuracy`, reported together with `total_queries`.
    pub hider_score: f64,
}

/// Scores verdicts against revealed labels.
pub fn score_game(
    verdicts: &BTreeMap<String, Verdict>,
    labels: &BTreeMap<String, Label>,
) -> Result<ScoreReport, BenchgenError> {
    let missing: Vec<String> = labels.keys().filter(|id| !verdicts.contains_key(*id)).cloned().collect();
    if !missing.is_empty() {
        return Err(BenchgenError::MissingVerdict { instances: missing });
    }
    let mut cm = ConfusionMatrix::default();
    let mut per = BTreeMap::new();
    for (id, &truth) in labels {
        let v = &verdicts[id];
        cm.record(truth, v.label);
        per.insert(id.clone(), v.queries_used);
    }
    let ba = cm.balanced_accuracy();
    Ok(ScoreReport {
        confusion: cm,
        balanced_accuracy: ba,
        total_queries: per.values().sum(),
        per_instance_queries: per,
        hider_score: 1.0 - ba,
    })
}
