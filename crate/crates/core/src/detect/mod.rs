//! The seeker's side: golden-model testing, structural features and a
//! k-NN classifier, plus scoring helpers.

mod features;
mod knn;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{from_netlist, random_input_words, Aig, Lit, NodeId};
use crate::benchgen::{BenchmarkManifest, Label, RevealFile, Verdict};
use crate::equiv::{miter_parts, AigSolver, EquivError};
use crate::netlist::{sim_pack, Netlist};
use crate::restructure::PipelineId;
use crate::rng::{derive_seed, SplitMix64};
use crate::trojan::{estimate_signal_probs, Sampling};

pub use features::{extract_features, FeatureVector, D, FEATURE_NAMES, RARE_THRESHOLDS};
pub use knn::{knn_classify, KnnVerdict, Standardizer, TrainingScenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),
    #[error("k = {k} must be odd and at most {n}")]
    InvalidK { k: usize, n: usize },
    #[error("no verdict for {0}")]
    MissingVerdict(String),
    #[error("no golden model named {0}")]
    MissingGolden(String),
}

impl DetectError {
    pub fn name(&self) -> &'static str {
        match self {
            DetectError::InterfaceMismatch(_) => "InterfaceMismatch",
            DetectError::DegenerateTraining(_) => "DegenerateTraining",
            DetectError::InvalidK { .. } => "InvalidK",
            DetectError::MissingVerdict(_) => "MissingVerdict",
            DetectError::MissingGolden(_) => "MissingGolden",
        }
    }
}

/// Detection outcome counts. `Infected` is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn rate(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Label, verdict: Label) {
        match (truth, verdict) {
            (Label::Infected, Label::Infected) => self.tp += 1,
            (Label::Infected, Label::Clean) => self.fn_ += 1,
            (Label::Clean, Label::Infected) => self.fp += 1,
            (Label::Clean, Label::Clean) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        rate(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        rate(self.fp, self.fp + self.tn)
    }

    pub fn tnr(&self) -> Option<f64> {
        rate(self.tn, self.fp + self.tn)
    }

    pub fn accuracy(&self) -> Option<f64> {
        rate(self.tp + self.tn, self.total())
    }

    /// Mean of TPR and TNR over the classes that occur; 0 for an empty matrix.
    pub fn balanced_accuracy(&self) -> f64 {
        let rates: Vec<f64> = [self.tpr(), self.tnr()].into_iter().flatten().collect();
        if rates.is_empty() {
            0.0
        } else {
            rates.iter().sum::<f64>() / rates.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Uniform,
    RareGuided,
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "rare_guided" | "rare-guided" => Ok(Strategy::RareGuided),
            _ => Err(format!("unknown strategy {s:?} (expected uniform or rare_guided)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Uniform => "uniform",
            Strategy::RareGuided => "rare_guided",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub verdict: Label,
    pub queries_used: u64,
    /// Input vector (golden input order) on which the outputs differ.
    pub witness: Option<Vec<bool>>,
}

/// Nets whose rare value has probability below this are targeted by the
/// rare-guided strategy.
pub const RARE_TARGET: f64 = 0.1;
const TARGET_CONFLICTS: u64 = 1_000;

/// A trusted reference circuit, prepared once and reused across suspects.
#[derive(Debug, Clone)]
pub struct GoldenModel {
    aig: Aig,
    rare: Vec<(NodeId, bool)>,
}

impl GoldenModel {
    pub fn new(golden: &Netlist) -> GoldenModel {
        let aig = from_netlist(golden).expect("validated netlist converts");
        let probs = estimate_signal_probs(&aig, Sampling::auto(aig.n_inputs()), 0);
        let rare = (0..aig.n_nodes() as NodeId)
            .filter(|&i| aig.is_and(i))
            .map(|i| (i, probs.rarity(i)))
            .filter(|&(_, (_, p))| p > 0.0 && p < RARE_TARGET)
            .map(|(i, (v, _))| (i, v))
            .collect();
        GoldenModel { aig, rare }
    }

    pub fn aig(&self) -> &Aig {
        &self.aig
    }

    /// Applies up to `budget` vectors to both circuits and stops at the
    /// first output difference.
    pub fn detect(&self, suspect: &Netlist, budget: u64, strategy: Strategy, seed: u64) -> Result<Detection, DetectError> {
        let s = from_netlist(suspect).expect("validated netlist converts");
        let miter = miter_parts(&self.aig, &s).map_err(|e| match e {
            EquivError::InterfaceMismatch(m) => DetectError::InterfaceMismatch(m),
            other => DetectError::InterfaceMismatch(other.to_string()),
        })?;
        let out = miter.output();
        let n = self.aig.n_inputs();
        let mut rng = SplitMix64::new(seed);
        let mut targeter = (strategy == Strategy::RareGuided && !self.rare.is_empty()).then(|| Targeter::new(self));
        let mut used = 0u64;
        while used < budget {
            let batch = (budget - used).min(64) as usize;
            let (words, rows) = match targeter.as_mut() {
                None => {
                    let w: Vec<u64> = random_input_words(n, 1, &mut rng).into_iter().map(|v| v[0]).collect();
                    (w, None)
                }
                Some(t) => {
                    let rows: Vec<Vec<bool>> = (0..batch).map(|_| t.vector(&mut rng)).collect();
                    (sim_pack(&rows, n), Some(rows))
                }
            };
            let nodes = miter.aig.simulate_nodes(&words);
            let mut diff = nodes[out.index()] ^ if out.is_complemented() { !0 } else { 0 };
            if batch < 64 {
                diff &= (1u64 << batch) - 1;
            }
            if diff != 0 {
                let bit = diff.trailing_zeros() as usize;
                let witness = match rows {
                    Some(r) => r[bit].clone(),
                    None => words.iter().map(|w| (w >> bit) & 1 == 1).collect(),
                };
                return Ok(Detection { verdict: Label::Infected, queries_used: used + bit as u64 + 1, witness: Some(witness) });
            }
            used += batch as u64;
        }
        Ok(Detection { verdict: Label::Clean, queries_used: used, witness: None })
    }
}

/// Produces vectors that drive a random rare net to its rare value.
struct Targeter<'a> {
    model: &'a GoldenModel,
    solver: AigSolver,
    support: HashMap<NodeId, Vec<usize>>,
}

impl<'a> Targeter<'a> {
    fn new(model: &'a GoldenModel) -> Self {
        let mut solver = AigSolver::new(&model.aig);
        solver.set_conflict_budget(Some(TARGET_CONFLICTS));
        Targeter { model, solver, support: HashMap::new() }
    }

    fn vector(&mut self, rng: &mut SplitMix64) -> Vec<bool> {
        let g = &self.model.aig;
        let mut v: Vec<bool> = (0..g.n_inputs()).map(|_| rng.next_bool()).collect();
        let (node, value) = self.model.rare[rng.below_usize(self.model.rare.len())];
        let support = self.support.entry(node).or_insert_with(|| {
            let tfi = g.transitive_fanin([node]);
            g.inputs().iter().enumerate().filter(|(_, (id, _))| tfi[*id as usize]).map(|(k, _)| k).collect()
        });
        let target = Lit::new(node, !value);
        // Pin a random half of the support to the random draw for variety,
        // and drop the pins if they make the target unreachable.
        let pins: Vec<Lit> = support
            .iter()
            .filter(|_| rng.next_bool())
            .map(|&k| g.input_lit(k).negate_if(!v[k]))
            .collect();
        let mut assume = vec![target];
        assume.extend(pins);
        let model = match self.solver.solve(&assume) {
            Ok(Some(m)) => Some(m),
            _ => self.solver.solve(&[target]).ok().flatten(),
        };
        if let Some(m) = model {
            for &k in support.iter() {
                v[k] = m[k];
            }
        }
        v
    }
}

/// One-off form of [`GoldenModel::detect`].
pub fn golden_model_detect(
    suspect: &Netlist,
    golden: &Netlist,
    budget: u64,
    strategy: Strategy,
    seed: u64,
) -> Result<Detection, DetectError> {
    GoldenModel::new(golden).detect(suspect, budget, strategy, seed)
}

/// Runs the golden-model detector over a bundle in parallel. `goldens` maps
/// source circuit names to their netlists; instance `i` of the manifest uses
/// seed `derive_seed(seed, i)`.
pub fn detect_bundle(
    manifest: &BenchmarkManifest,
    circuits: &[Netlist],
    goldens: &BTreeMap<String, Netlist>,
    budget: u64,
    strategy: Strategy,
    seed: u64,
) -> Result<BTreeMap<String, Verdict>, DetectError> {
    let models: BTreeMap<&str, GoldenModel> = goldens.iter().map(|(k, v)| (k.as_str(), GoldenModel::new(v))).collect();
    let results: Vec<(String, Verdict)> = manifest
        .instances
        .par_iter()
        .zip(circuits.par_iter())
        .enumerate()
        .map(|(i, (entry, c))| {
            let m = models.get(entry.source.as_str()).ok_or_else(|| DetectError::MissingGolden(entry.source.clone()))?;
            let d = m.detect(c, budget, strategy, derive_seed(seed, i as u64))?;
            Ok((entry.instance_id.clone(), Verdict { label: d.verdict, queries_used: d.queries_used }))
        })
        .collect::<Result<_, DetectError>>()?;
    Ok(results.into_iter().collect())
}

/// Per-(circuit, pipeline) true-positive percentage over infected
/// instances. Cells without infected instances are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub circuits: Vec<String>,
    pub pipelines: Vec<PipelineId>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    /// Header `circuit,1,...,18`; empty cells are left blank.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("circuit");
        for p in &self.pipelines {
            s.push_str(&format!(",{}", p.index()));
        }
        s.push('\n');
        for (c, row) in self.circuits.iter().zip(&self.cells) {
            s.push_str(c);
            for cell in row {
                s.push(',');
                if let Some(v) = cell {
                    s.push_str(&format!("{v:.2}"));
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn heatmap_accuracy(verdicts: &BTreeMap<String, Verdict>, reveal: &RevealFile) -> Result<Heatmap, DetectError> {
    let circuits: Vec<String> = reveal.instances.values().map(|i| i.source.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let pipelines: Vec<PipelineId> = PipelineId::all().collect();
    let mut counts = vec![vec![(0u64, 0u64); pipelines.len()]; circuits.len()];
    for (id, inst) in &reveal.instances {
        if reveal.labels.get(id) != Some(&Label::Infected) {
            continue;
        }
        let v = verdicts.get(id).ok_or_else(|| DetectError::MissingVerdict(id.clone()))?;
        let r = circuits.binary_search(&inst.source).expect("collected above");
        let cell = &mut counts[r][inst.pipeline.index() as usize - 1];
        cell.1 += 1;
        if v.label == Label::Infected {
            cell.0 += 1;
        }
    }
    let cells = counts
        .iter()
        .map(|row| row.iter().map(|&(hit, n)| (n > 0).then(|| 100.0 * hit as f64 / n as f64)).collect())
        .collect();
    Ok(Heatmap { circuits, pipelines, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    const AND2: &str = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n";

    #[test]
    fn single_and_features() {
        let c = parse_bench(AND2).unwrap();
        let f = extract_features(&c);
        assert_eq!(f.as_slice().len(), D);
        assert_eq!(f.as_slice()[0], 1.0);
        assert_eq!(f.as_slice()[11], 1.0);
        assert_eq!(f, extract_features(&c));
    }

    #[test]
    fn identical_circuits_are_clean() {
        let c = parse_bench(AND2).unwrap();
        for s in [Strategy::Uniform, Strategy::RareGuided] {
            let d = golden_model_detect(&c, &c, 100, s, 3).unwrap();
            assert_eq!(d, Detection { verdict: Label::Clean, queries_used: 100, witness: None });
        }
    }

    #[test]
    fn early_stop_and_witness() {
        let golden = parse_bench(AND2).unwrap();
        let bad = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = OR(a, b)\n").unwrap();
        let d = golden_model_detect(&bad, &golden, 1000, Strategy::Uniform, 9).unwrap();
        assert_eq!(d.verdict, Label::Infected);
        let w = d.witness.unwrap();
        assert_ne!(w[0] & w[1], w[0] | w[1]);
        assert!(d.queries_used >= 1 && d.queries_used < 1000);
    }

    #[test]
    fn interface_mismatch() {
        let golden = parse_bench(AND2).unwrap();
        let other = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        assert!(matches!(
            golden_model_detect(&other, &golden, 10, Strategy::Uniform, 0),
            Err(DetectError::InterfaceMismatch(_))
        ));
    }

    #[test]
    fn confusion_rates() {
        let mut cm = ConfusionMatrix::default();
        for _ in 0..3 {
            cm.record(Label::Infected, Label::Clean);
        }
        for _ in 0..7 {
            cm.record(Label::Clean, Label::Clean);
        }
        assert_eq!(cm.total(), 10);
        assert_eq!(cm.tpr(), Some(0.0));
        assert_eq!(cm.fpr(), Some(0.0));
        assert_eq!(cm.accuracy(), Some(0.7));
        assert_eq!(cm.balanced_accuracy(), 0.5);
        let json = serde_json::to_string(&cm).unwrap();
        assert!(json.contains("\"fn\":3"));
    }
}
