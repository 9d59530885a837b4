//! Rare-net hardware Trojan insertion and its SAT-checked contract.
//!
//! A Trojan is an AND tree over `r` rarely-taken (net, value) pairs whose
//! output XOR-flips one internal payload net. Nets are AIG node ids of the
//! host graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{exhaustive_input_words, random_input_words, Aig, Lit, Node, NodeId};
use crate::equiv::{miter_parts, AigSolver, EquivError, SatError};
use crate::rng::{derive_seed, derive_seed_path, SplitMix64};
use crate::truth::MAX_VARS;

pub const DEFAULT_R: usize = 4;
pub const DEFAULT_THETA: f64 = 0.1;
pub const DEFAULT_VECTORS: usize = 65_536;
pub const MIN_VECTORS: usize = 1024;
/// Attempts made by [`plant_trojan`] before giving up.
pub const MAX_ATTEMPTS: u64 = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrojanError {
    #[error("only {found} nets have rarity at most theta, {needed} needed")]
    InsufficientRareNets { found: usize, needed: usize },
    #[error("trigger size {0} outside 2..=8")]
    InvalidTriggerSize(usize),
    #[error("no payload net reaches an output outside the trigger cone")]
    NoValidPayload,
    #[error("outputs deviate while the trigger is inactive")]
    StealthViolation { witness: Vec<bool> },
    #[error("trojan never changes any output")]
    IneffectiveTrojan,
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("conflict budget of {budget} exceeded")]
    ResourceLimit { budget: u64 },
}

impl TrojanError {
    pub fn name(&self) -> &'static str {
        match self {
            TrojanError::InsufficientRareNets { .. } => "InsufficientRareNets",
            TrojanError::InvalidTriggerSize(_) => "InvalidTriggerSize",
            TrojanError::NoValidPayload => "NoValidPayload",
            TrojanError::StealthViolation { .. } => "StealthViolation",
            TrojanError::IneffectiveTrojan => "IneffectiveTrojan",
            TrojanError::InterfaceMismatch(_) => "InterfaceMismatch",
            TrojanError::ResourceLimit { .. } => "ResourceLimit",
        }
    }
}

impl From<EquivError> for TrojanError {
    fn from(e: EquivError) -> Self {
        match e {
            EquivError::InterfaceMismatch(m) => TrojanError::InterfaceMismatch(m),
            EquivError::ResourceLimit { budget } => TrojanError::ResourceLimit { budget },
        }
    }
}

impl From<SatError> for TrojanError {
    fn from(e: SatError) -> Self {
        match e {
            SatError::ResourceLimit { budget } => TrojanError::ResourceLimit { budget },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Exhaustive,
    MonteCarlo(usize),
}

impl Sampling {
    /// Exhaustive up to 16 inputs, otherwise 65,536 random vectors.
    pub fn auto(n_inputs: usize) -> Self {
        if n_inputs <= MAX_VARS {
            Sampling::Exhaustive
        } else {
            Sampling::MonteCarlo(DEFAULT_VECTORS)
        }
    }
}

/// Probability of logic 1 for every node of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProbMap {
    pub probs: Vec<f64>,
    pub n_samples: u64,
    pub exhaustive: bool,
}

impl SignalProbMap {
    /// Rare value of `node` and its probability.
    pub fn rarity(&self, node: NodeId) -> (bool, f64) {
        let p = self.probs[node as usize];
        if p <= 1.0 - p {
            (true, p)
        } else {
            (false, 1.0 - p)
        }
    }
}

const CHUNK_WORDS: usize = 64;

/// Per-node signal probabilities under uniform independent inputs.
/// Monte-Carlo sample counts are rounded up to whole 64-bit words and never
/// go below 1024.
pub fn estimate_signal_probs(g: &Aig, sampling: Sampling, seed: u64) -> SignalProbMap {
    let n = g.n_inputs();
    let mut ones = vec![0u64; g.n_nodes()];
    let (total, exhaustive) = match sampling {
        Sampling::Exhaustive => {
            assert!(n <= MAX_VARS, "exhaustive sampling needs at most 16 inputs");
            let words = exhaustive_input_words(n);
            let tail = if n < 6 { (1u64 << (1 << n)) - 1 } else { !0 };
            let width = words.first().map_or(1, Vec::len);
            for start in (0..width).step_by(CHUNK_WORDS) {
                let end = (start + CHUNK_WORDS).min(width);
                let chunk: Vec<Vec<u64>> = words.iter().map(|w| w[start..end].to_vec()).collect();
                accumulate(g, &chunk, tail, &mut ones);
            }
            (1u64 << n, true)
        }
        Sampling::MonteCarlo(k) => {
            let width = k.max(MIN_VECTORS).div_ceil(64);
            let mut rng = SplitMix64::new(seed);
            let mut done = 0;
            while done < width {
                let w = CHUNK_WORDS.min(width - done);
                let chunk = random_input_words(n, w, &mut rng);
                accumulate(g, &chunk, !0, &mut ones);
                done += w;
            }
            (width as u64 * 64, false)
        }
    };
    SignalProbMap {
        probs: ones.iter().map(|&c| c as f64 / total as f64).collect(),
        n_samples: total,
        exhaustive,
    }
}

fn accumulate(g: &Aig, inputs: &[Vec<u64>], tail: u64, ones: &mut [u64]) {
    if g.n_inputs() == 0 {
        return;
    }
    let sim = g.simulate_wide(inputs);
    for (i, c) in ones.iter_mut().enumerate() {
        *c += sim.node(i).iter().map(|w| (w & tail).count_ones() as u64).sum::<u64>();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerNet {
    pub node: NodeId,
    /// Value the net must take for the trigger to fire.
    pub value: bool,
    /// Estimated probability of that value.
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub nets: Vec<TriggerNet>,
    pub theta: f64,
    /// Product of member rarities (independence approximation).
    pub estimated_activation: f64,
}

impl TriggerSpec {
    pub fn new(nets: Vec<TriggerNet>, theta: f64) -> Self {
        let estimated_activation = nets.iter().map(|t| t.prob).product();
        TriggerSpec { nets, theta, estimated_activation }
    }

    /// The trigger as a literal of `dst`, with host nodes mapped by `map`.
    pub fn build(&self, dst: &mut Aig, map: &[Lit]) -> Lit {
        let lits: Vec<Lit> = self.nets.iter().map(|t| map[t.node as usize].negate_if(!t.value)).collect();
        dst.and_many(&lits)
    }
}

/// Seeded choice of `r` distinct nets whose rare value has probability in
/// `(0, theta]`. Candidates are ordered by (probability, node id) before
/// sampling. Nets that never take their rare value are not eligible.
pub fn select_trigger(probs: &SignalProbMap, r: usize, theta: f64, seed: u64) -> Result<TriggerSpec, TrojanError> {
    if !(2..=8).contains(&r) {
        return Err(TrojanError::InvalidTriggerSize(r));
    }
    let candidates = rare_candidates(probs, theta);
    if candidates.len() < r {
        return Err(TrojanError::InsufficientRareNets { found: candidates.len(), needed: r });
    }
    let mut picked = SplitMix64::new(seed).sample_indices(candidates.len(), r);
    picked.sort_unstable();
    Ok(TriggerSpec::new(picked.into_iter().map(|i| candidates[i]).collect(), theta))
}

/// Like [`select_trigger`], but members are drawn one at a time in seeded
/// order and a net is skipped when its rare value is incompatible with
/// the members already taken (checked by SAT on `g`). The result can
/// always fire.
pub fn select_satisfiable_trigger(
    g: &Aig,
    probs: &SignalProbMap,
    r: usize,
    theta: f64,
    seed: u64,
) -> Result<TriggerSpec, TrojanError> {
    if !(2..=8).contains(&r) {
        return Err(TrojanError::InvalidTriggerSize(r));
    }
    let mut candidates = rare_candidates(probs, theta);
    if candidates.len() < r {
        return Err(TrojanError::InsufficientRareNets { found: candidates.len(), needed: r });
    }
    SplitMix64::new(seed).shuffle(&mut candidates);
    let mut solver = AigSolver::new(g);
    solver.set_conflict_budget(Some(COMPAT_BUDGET));
    let mut taken: Vec<TriggerNet> = Vec::with_capacity(r);
    let mut assume: Vec<Lit> = Vec::with_capacity(r);
    for c in candidates {
        assume.push(Lit::new(c.node, !c.value));
        match solver.solve(&assume) {
            Ok(Some(_)) => taken.push(c),
            _ => {
                assume.pop();
            }
        }
        if taken.len() == r {
            taken.sort_by(|a, b| a.prob.total_cmp(&b.prob).then(a.node.cmp(&b.node)));
            return Ok(TriggerSpec::new(taken, theta));
        }
    }
    Err(TrojanError::InsufficientRareNets { found: taken.len(), needed: r })
}

const COMPAT_BUDGET: u64 = 10_000;

fn rare_candidates(probs: &SignalProbMap, theta: f64) -> Vec<TriggerNet> {
    let mut candidates: Vec<TriggerNet> = (1..probs.probs.len() as NodeId)
        .filter_map(|node| {
            let (value, prob) = probs.rarity(node);
            (prob > 0.0 && prob <= theta).then_some(TriggerNet { node, value, prob })
        })
        .collect();
    candidates.sort_by(|a, b| a.prob.total_cmp(&b.prob).then(a.node.cmp(&b.node)));
    candidates
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    XorFlip,
}

/// The hider's secret for one infected instance. Node ids refer to the
/// host graph the Trojan was inserted into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrojanRecord {
    pub instance_id: String,
    pub seed: u64,
    pub trigger: TriggerSpec,
    pub payload_node: NodeId,
    pub payload_kind: PayloadKind,
    pub host_hash: String,
}

/// Nodes eligible as payload: AND nodes that reach an output and are not
/// in the fan-in cone of any trigger net.
pub fn payload_candidates(g: &Aig, trigger: &TriggerSpec) -> Vec<NodeId> {
    let live = g.reachable_from_outputs();
    let cone = g.transitive_fanin(trigger.nets.iter().map(|t| t.node).collect::<Vec<_>>());
    (0..g.n_nodes() as NodeId)
        .filter(|&n| g.is_and(n) && live[n as usize] && !cone[n as usize])
        .collect()
}

/// Inserts the trigger and an XOR payload on a seed-chosen eligible net.
/// Every use of the payload net, outputs included, sees the flipped value.
pub fn insert_trojan(g: &Aig, trigger: &TriggerSpec, seed: u64) -> Result<(Aig, TrojanRecord), TrojanError> {
    let candidates = payload_candidates(g, trigger);
    if candidates.is_empty() {
        return Err(TrojanError::NoValidPayload);
    }
    let payload = candidates[SplitMix64::new(seed).below_usize(candidates.len())];
    let infected = insert_at(g, trigger, payload);
    let record = TrojanRecord {
        instance_id: String::new(),
        seed,
        trigger: trigger.clone(),
        payload_node: payload,
        payload_kind: PayloadKind::XorFlip,
        host_hash: g.structural_hash(),
    };
    Ok((infected, record))
}

fn insert_at(g: &Aig, trigger: &TriggerSpec, payload: NodeId) -> Aig {
    let tfo = g.transitive_fanout(payload);
    let mut h = g.with_same_inputs();
    let mut map = vec![Lit::FALSE; g.n_nodes()];
    let copy = |h: &mut Aig, map: &mut Vec<Lit>, i: usize| {
        map[i] = match g.node(i as NodeId) {
            Node::Const => Lit::FALSE,
            Node::Input(k) => h.input_lit(k),
            Node::And(a, b) => h.and2(Aig::remap(map, a), Aig::remap(map, b)),
        };
    };
    // Outside the payload's fan-out cone first; the trigger lives there.
    for i in 0..g.n_nodes() {
        if !tfo[i] || i == payload as usize {
            copy(&mut h, &mut map, i);
        }
    }
    let t = trigger.build(&mut h, &map);
    map[payload as usize] = h.xor2(map[payload as usize], t);
    for i in 0..g.n_nodes() {
        if tfo[i] && i != payload as usize {
            copy(&mut h, &mut map, i);
        }
    }
    for (name, l) in g.outputs() {
        h.add_output(name.clone(), Aig::remap(&map, *l));
    }
    h.cleanup()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub stealthy: bool,
    pub effective: bool,
    /// Input vector on which the outputs differ.
    pub witness: Vec<bool>,
}

/// Proves (a) no output deviates while the trigger is inactive and
/// (b) some input makes an output deviate.
pub fn validate_trojan(original: &Aig, infected: &Aig, rec: &TrojanRecord) -> Result<ValidationReport, TrojanError> {
    let mut m = miter_parts(original, infected)?;
    let out = m.output();
    let t = rec.trigger.build(&mut m.aig, &m.left);

    // Stealth: miter ∧ ¬T. Uses of the trigger node are replaced by the
    // value that makes T false while the node itself stays constrained, so
    // the query is unchanged but the payload XOR folds away structurally.
    let (quiet, t_own) = cofactor_uses(&m.aig, t.node(), Lit::FALSE.negate_if(t.is_complemented()));
    let t_quiet = t_own.negate_if(t.is_complemented());
    let mut s = AigSolver::new(&quiet);
    if let Some(w) = s.solve(&[quiet.outputs()[0].1, !t_quiet])? {
        return Err(TrojanError::StealthViolation { witness: w });
    }
    let mut s = AigSolver::new(&m.aig);
    let witness = s.solve(&[out, t])?.ok_or(TrojanError::IneffectiveTrojan)?;
    assert_ne!(
        original.simulate_vectors(&[witness.clone()]),
        infected.simulate_vectors(&[witness.clone()]),
        "witness failed to replay"
    );
    Ok(ValidationReport { stealthy: true, effective: true, witness })
}

/// Copy of `g` in which every fan-out of `node` reads `value` instead.
/// Returns the copy and the literal of `node` itself inside it.
fn cofactor_uses(g: &Aig, node: NodeId, value: Lit) -> (Aig, Lit) {
    let mut h = g.with_same_inputs();
    let mut map = vec![Lit::FALSE; g.n_nodes()];
    let mut own = Lit::FALSE;
    for i in 0..g.n_nodes() {
        map[i] = match g.node(i as NodeId) {
            Node::Const => Lit::FALSE,
            Node::Input(k) => h.input_lit(k),
            Node::And(a, b) => h.and2(Aig::remap(&map, a), Aig::remap(&map, b)),
        };
        if i == node as usize {
            own = map[i];
            map[i] = value;
        }
    }
    for (name, l) in g.outputs() {
        h.add_output(name.clone(), Aig::remap(&map, *l));
    }
    (h, own)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrojanParams {
    pub r: usize,
    pub theta: f64,
}

impl Default for TrojanParams {
    fn default() -> Self {
        TrojanParams { r: DEFAULT_R, theta: DEFAULT_THETA }
    }
}

/// Trojan with a full certificate: satisfiable trigger selection,
/// insertion and validation, retried with fresh derived seeds (at most
/// [`MAX_ATTEMPTS`]) when an attempt has no payload or its flip never
/// reaches an output.
pub fn plant_trojan(
    g: &Aig,
    params: TrojanParams,
    seed: u64,
    instance_id: &str,
) -> Result<(Aig, TrojanRecord, ValidationReport), TrojanError> {
    let probs = estimate_signal_probs(g, Sampling::auto(g.n_inputs()), derive_seed(seed, 0));
    let mut last = TrojanError::NoValidPayload;
    for attempt in 0..MAX_ATTEMPTS {
        let trig_seed = derive_seed_path(seed, &[1, attempt]);
        let trigger = select_satisfiable_trigger(g, &probs, params.r, params.theta, trig_seed)?;
        let ins_seed = derive_seed_path(seed, &[2, attempt]);
        let (infected, mut rec) = match insert_trojan(g, &trigger, ins_seed) {
            Ok(x) => x,
            Err(e) => {
                last = e;
                continue;
            }
        };
        rec.instance_id = instance_id.to_string();
        match validate_trojan(g, &infected, &rec) {
            Ok(report) => return Ok((infected, rec, report)),
            Err(e @ TrojanError::IneffectiveTrojan) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}
