//! Functionality-preserving restructuring passes and the fixed catalog of
//! 18 seeded pipelines built from them.
//!
//! | id | passes                                   | export    |
//! |----|------------------------------------------|-----------|
//! | 1  | balance                                  | AND_NOT   |
//! | 2  | rewrite(A)                               | AND_NOT   |
//! | 3  | refactor(6, A)                           | AND_NOT   |
//! | 4  | balance(shuffled ties)                   | AND_NOT   |
//! | 5  | rewrite(B)                               | AND_NOT   |
//! | 6  | refactor(6, B)                           | AND_NOT   |
//! | 7  | balance, rewrite(A)                      | AND_NOT   |
//! | 8  | rewrite(A), balance                      | AND_NOT   |
//! | 9  | balance, refactor(6, A)                  | MIXED     |
//! | 10 | refactor(6, A), balance                  | MIXED     |
//! | 11 | rewrite(A), refactor(6, A)               | MIXED     |
//! | 12 | refactor(6, A), rewrite(A)               | MIXED     |
//! | 13 | balance, rewrite(A), refactor(4, A)      | MIXED     |
//! | 14 | rewrite(B), refactor(6, B), balance      | MIXED     |
//! | 15 | refactor(8, A), rewrite(A), balance      | MIXED     |
//! | 16 | refactor(4, B), balance, rewrite(B)      | MIXED     |
//! | 17 | balance, rewrite(A), refactor(6, A)      | NAND_ONLY |
//! | 18 | rewrite(B), refactor(6, B), balance      | NOR_ONLY  |
//!
//! Seed class A selects each candidate node with probability 1/2, class B
//! selects every candidate. Step `s` of pipeline `p` runs with seed
//! `derive_seed_path(seed, [p, s])`.

mod balance;
pub mod npn;
mod refactor;
mod rewrite;
pub mod synth;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aig::{to_netlist, Aig, GateLibrary, Lit, Node, NodeId};
use crate::netlist::Netlist;
use crate::rng::derive_seed_path;

pub use balance::{balance, balance_shuffled};
pub use refactor::refactor_with;
pub use rewrite::rewrite_with;

/// Largest accepted size of a rewritten graph relative to its input.
pub const MAX_GROWTH: f64 = 1.25;

pub fn rewrite(g: &Aig, seed: u64) -> Aig {
    rewrite_with(g, seed, SeedClass::A.p_select())
}

pub fn refactor(g: &Aig, seed: u64, max_cone_inputs: usize) -> Aig {
    refactor_with(g, seed, max_cone_inputs, SeedClass::A.p_select())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedClass {
    A,
    B,
}

impl SeedClass {
    fn p_select(self) -> f64 {
        match self {
            SeedClass::A => 0.5,
            SeedClass::B => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Balance,
    BalanceShuffled,
    Rewrite(SeedClass),
    Refactor(usize, SeedClass),
}

impl Pass {
    pub fn run(self, g: &Aig, seed: u64) -> Aig {
        match self {
            Pass::Balance => balance(g),
            Pass::BalanceShuffled => balance_shuffled(g, seed),
            Pass::Rewrite(c) => rewrite_with(g, seed, c.p_select()),
            Pass::Refactor(k, c) => refactor_with(g, seed, k, c.p_select()),
        }
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pass::Balance => write!(f, "balance"),
            Pass::BalanceShuffled => write!(f, "balance(shuffled)"),
            Pass::Rewrite(c) => write!(f, "rewrite({c:?})"),
            Pass::Refactor(k, c) => write!(f, "refactor({k},{c:?})"),
        }
    }
}

/// Index into the pipeline catalog, 1 to 18.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PipelineId(u8);

impl TryFrom<u8> for PipelineId {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        PipelineId::new(v).ok_or_else(|| format!("pipeline {v} is not in 1..=18"))
    }
}

impl From<PipelineId> for u8 {
    fn from(p: PipelineId) -> u8 {
        p.0
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const N_PIPELINES: u8 = 18;

impl PipelineId {
    pub fn new(index: u8) -> Option<Self> {
        (1..=N_PIPELINES).contains(&index).then_some(PipelineId(index))
    }

    pub fn all() -> impl Iterator<Item = PipelineId> {
        (1..=N_PIPELINES).map(PipelineId)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn passes(self) -> &'static [Pass] {
        use Pass::*;
        use SeedClass::{A, B};
        const CATALOG: [&[Pass]; 18] = [
            &[Balance],
            &[Rewrite(A)],
            &[Refactor(6, A)],
            &[BalanceShuffled],
            &[Rewrite(B)],
            &[Refactor(6, B)],
            &[Balance, Rewrite(A)],
            &[Rewrite(A), Balance],
            &[Balance, Refactor(6, A)],
            &[Refactor(6, A), Balance],
            &[Rewrite(A), Refactor(6, A)],
            &[Refactor(6, A), Rewrite(A)],
            &[Balance, Rewrite(A), Refactor(4, A)],
            &[Rewrite(B), Refactor(6, B), Balance],
            &[Refactor(8, A), Rewrite(A), Balance],
            &[Refactor(4, B), Balance, Rewrite(B)],
            &[Balance, Rewrite(A), Refactor(6, A)],
            &[Rewrite(B), Refactor(6, B), Balance],
        ];
        CATALOG[self.0 as usize - 1]
    }

    pub fn library(self) -> GateLibrary {
        match self.0 {
            1..=8 => GateLibrary::AndNot,
            9..=16 => GateLibrary::Mixed,
            17 => GateLibrary::NandOnly,
            _ => GateLibrary::NorOnly,
        }
    }

    /// Human-readable pass sequence, e.g. `balance -> rewrite(A) | AND_NOT`.
    pub fn descriptor(self) -> String {
        let passes: Vec<String> = self.passes().iter().map(Pass::to_string).collect();
        format!("{} | {}", passes.join(" -> "), self.library())
    }
}

pub fn apply_pipeline(g: &Aig, p: PipelineId, seed: u64) -> Aig {
    let mut cur = g.clone();
    for (step, pass) in p.passes().iter().enumerate() {
        let s = derive_seed_path(seed, &[p.index() as u64, step as u64]);
        cur = pass.run(&cur, s);
    }
    cur
}

/// Runs the pipeline and exports with its gate library.
pub fn pipeline_netlist(g: &Aig, p: PipelineId, seed: u64) -> Netlist {
    to_netlist(&apply_pipeline(g, p, seed), p.library())
}

pub(crate) struct Replacement<'a> {
    pub root: NodeId,
    pub build: Box<dyn Fn(&mut Aig, &[Lit]) -> Lit + 'a>,
}

/// Copies `g` in id order, building each replaced root through its
/// callback (which sees the already-built map), then drops dead logic.
fn rebuild(g: &Aig, replacements: &[Replacement<'_>]) -> Aig {
    let by_root: HashMap<NodeId, &Replacement<'_>> = replacements.iter().map(|r| (r.root, r)).collect();
    let mut out = g.with_same_inputs();
    let mut map = vec![Lit::FALSE; g.n_nodes()];
    for (i, node) in g.nodes().iter().enumerate() {
        map[i] = match *node {
            Node::Const => Lit::FALSE,
            Node::Input(k) => out.input_lit(k),
            Node::And(a, b) => match by_root.get(&(i as NodeId)) {
                Some(r) => (r.build)(&mut out, &map),
                None => out.and2(Aig::remap(&map, a), Aig::remap(&map, b)),
            },
        };
    }
    for (name, l) in g.outputs() {
        out.add_output(name.clone(), Aig::remap(&map, *l));
    }
    out.cleanup()
}

/// Applies the first `k` of `n_picks` replacements, halving `k` until the
/// result stays within [`MAX_GROWTH`] of the input size.
fn rebuild_capped<'a>(g: &Aig, n_picks: usize, make: impl Fn(usize) -> Vec<Replacement<'a>>) -> Aig {
    let limit = MAX_GROWTH * g.n_ands() as f64;
    let mut k = n_picks;
    while k > 0 {
        let out = rebuild(g, &make(k));
        if out.n_ands() as f64 <= limit {
            return out;
        }
        k /= 2;
    }
    g.clone()
}
