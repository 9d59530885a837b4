//! SAT sweeping: merges internally equivalent nodes of a miter, proving each
//! merge with small-budget SAT calls, so that structurally similar circuits
//! (e.g. restructured multipliers) reduce to a trivial final query.

use std::collections::HashMap;

use crate::aig::{random_input_words, Aig, Lit, Node};
use crate::rng::SplitMix64;

use super::sat::{self, SatError, SatStatus, Solver};

const SIM_WORDS: usize = 32;
const PAIR_BUDGET: u64 = 2_000;

/// Solver over a graph that grows while it is being queried; clauses for
/// a node are added the first time the node is needed.
struct LazyEncoder {
    solver: Solver,
    var: Vec<Option<sat::Var>>,
}

impl LazyEncoder {
    fn new() -> Self {
        LazyEncoder { solver: Solver::new(), var: Vec::new() }
    }

    fn lit(&mut self, g: &Aig, l: Lit) -> sat::Lit {
        let v = self.encode(g, l.index());
        sat::Lit::new(v, l.is_complemented())
    }

    fn encode(&mut self, g: &Aig, root: usize) -> sat::Var {
        if self.var.len() < g.n_nodes() {
            self.var.resize(g.n_nodes(), None);
        }
        let mut stack = vec![root];
        while let Some(&n) = stack.last() {
            if self.var[n].is_some() {
                stack.pop();
                continue;
            }
            match g.node(n as u32) {
                Node::Const => {
                    let v = self.solver.new_var();
                    self.solver.add_clause(&[sat::Lit::new(v, true)]);
                    self.var[n] = Some(v);
                    stack.pop();
                }
                Node::Input(_) => {
                    self.var[n] = Some(self.solver.new_var());
                    stack.pop();
                }
                Node::And(a, b) => {
                    let pending: Vec<usize> =
                        [a.index(), b.index()].into_iter().filter(|&c| self.var[c].is_none()).collect();
                    if !pending.is_empty() {
                        stack.extend(pending);
                        continue;
                    }
                    let y = self.solver.new_var();
                    let la = sat::Lit::new(self.var[a.index()].unwrap(), a.is_complemented());
                    let lb = sat::Lit::new(self.var[b.index()].unwrap(), b.is_complemented());
                    let ly = sat::Lit::pos(y);
                    self.solver.add_clause(&[!ly, la]);
                    self.solver.add_clause(&[!ly, lb]);
                    self.solver.add_clause(&[!la, !lb, ly]);
                    self.var[n] = Some(y);
                    stack.pop();
                }
            }
        }
        self.var[root].unwrap()
    }

    fn input_vector(&self, g: &Aig) -> Vec<bool> {
        g.inputs()
            .iter()
            .map(|(id, _)| self.var.get(*id as usize).copied().flatten().is_some_and(|v| self.solver.model_value(v)))
            .collect()
    }
}

/// Decides whether output 0 of `m` can be 1. Returns a witness input
/// vector, or `None` if the output is constant false.
pub fn sweep_solve(m: &Aig, budget: Option<u64>) -> Result<Option<Vec<bool>>, SatError> {
    let n = m.n_nodes();
    let mut rng = SplitMix64::new(0x5eed);
    let words = random_input_words(m.n_inputs(), SIM_WORDS, &mut rng);
    let sim = m.simulate_wide(&words);
    // Refinement patterns: words built from counterexamples of failed merges.
    let mut cex_inputs: Vec<Vec<u64>> = vec![Vec::new(); m.n_inputs()];
    let mut cex_count = 0usize;
    let mut cex_sim: Option<crate::aig::NodeWords> = None;

    let phase: Vec<bool> = (0..n).map(|i| sim.node(i)[0] & 1 == 1).collect();
    let key = |i: usize| -> Vec<u64> {
        let mask = if phase[i] { !0 } else { 0 };
        sim.node(i).iter().map(|w| w ^ mask).collect()
    };
    let mut classes: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();

    let mut r = m.with_same_inputs();
    let mut enc = LazyEncoder::new();
    let mut map = vec![Lit::FALSE; n];
    for (i, node) in m.nodes().iter().enumerate() {
        let built = match *node {
            Node::Const => Lit::FALSE,
            Node::Input(k) => r.input_lit(k),
            Node::And(a, b) => r.and2(Aig::remap(&map, a), Aig::remap(&map, b)),
        };
        map[i] = built;
        if matches!(node, Node::Input(_)) {
            continue;
        }
        let k = key(i);
        let heads = classes.entry(k).or_default();
        let mut merged = false;
        for &h in heads.iter() {
            let target = map[h].negate_if(phase[h] != phase[i]);
            if target == built {
                merged = true;
                break;
            }
            if let Some(cs) = &cex_sim {
                let flip = if phase[h] != phase[i] { !0 } else { 0 };
                if cs.node(h).iter().zip(cs.node(i)).any(|(x, y)| x ^ flip != *y) {
                    continue;
                }
            }
            match prove_equal(&mut enc, &r, built, target)? {
                Proof::Equal => {
                    map[i] = target;
                    merged = true;
                }
                Proof::Differ(v) => {
                    push_pattern(&mut cex_inputs, cex_count, &v);
                    cex_count += 1;
                    cex_sim = Some(m.simulate_wide(&cex_inputs));
                }
                Proof::Unknown => {}
            }
            break;
        }
        if !merged {
            classes.get_mut(&key(i)).unwrap().push(i);
        }
    }
    let out = Aig::remap(&map, m.outputs()[0].1);
    if out == Lit::FALSE {
        return Ok(None);
    }
    let lit = enc.lit(&r, out);
    enc.solver.set_conflict_budget(budget);
    match enc.solver.solve(&[lit])? {
        SatStatus::Unsat => Ok(None),
        SatStatus::Sat => Ok(Some(enc.input_vector(&r))),
    }
}

enum Proof {
    Equal,
    Differ(Vec<bool>),
    Unknown,
}

fn prove_equal(enc: &mut LazyEncoder, r: &Aig, x: Lit, y: Lit) -> Result<Proof, SatError> {
    let (lx, ly) = (enc.lit(r, x), enc.lit(r, y));
    enc.solver.set_conflict_budget(Some(PAIR_BUDGET));
    for (p, q) in [(lx, !ly), (!lx, ly)] {
        match enc.solver.solve(&[p, q]) {
            Ok(SatStatus::Unsat) => {}
            Ok(SatStatus::Sat) => return Ok(Proof::Differ(enc.input_vector(r))),
            Err(SatError::ResourceLimit { .. }) => return Ok(Proof::Unknown),
        }
    }
    // Both polarities refuted: record the equivalence for later queries.
    enc.solver.add_clause(&[!lx, ly]);
    enc.solver.add_clause(&[lx, !ly]);
    Ok(Proof::Equal)
}

fn push_pattern(words: &mut [Vec<u64>], index: usize, v: &[bool]) {
    let (w, bit) = (index / 64, index % 64);
    for (input, &val) in words.iter_mut().zip(v) {
        if input.len() <= w {
            input.push(0);
        }
        if val {
            input[w] |= 1 << bit;
        }
    }
}
