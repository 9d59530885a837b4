//! Structurally hashed And-Inverter Graphs with complemented edges.
//!
//! Node 0 is the constant FALSE. Every AND node's fan-ins have smaller ids
//! than the node itself, so id order is always a valid evaluation order.

mod cone;
mod convert;
mod sim;

use std::collections::HashMap;
use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cone::{cut_truth_table, extract_cone, reconvergent_cut, Cone, ConeError};
pub use convert::{from_netlist, to_netlist, GateLibrary};
pub use sim::{exhaustive_input_words, random_input_words, NodeWords};

pub type NodeId = u32;

/// An edge into the graph: a node id plus a complement flag, packed as
/// `node << 1 | complemented`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    pub fn new(node: NodeId, complemented: bool) -> Self {
        Lit(node << 1 | complemented as u32)
    }

    pub fn node(self) -> NodeId {
        self.0 >> 1
    }

    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn regular(self) -> Lit {
        Lit(self.0 & !1)
    }

    pub fn negate_if(self, c: bool) -> Lit {
        Lit(self.0 ^ c as u32)
    }

    pub fn is_const(self) -> bool {
        self.node() == 0
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_complemented() {
            write!(f, "!{}", self.node())
        } else {
            write!(f, "{}", self.node())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Const,
    /// Primary input with its position in the input list.
    Input(usize),
    And(Lit, Lit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AigMetrics {
    pub n_ands: usize,
    pub n_levels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aig {
    name: String,
    nodes: Vec<Node>,
    inputs: Vec<(NodeId, String)>,
    outputs: Vec<(String, Lit)>,
    strash: HashMap<(Lit, Lit), NodeId>,
}

impl Default for Aig {
    fn default() -> Self {
        Self::new("top")
    }
}

impl Aig {
    pub fn new(name: impl Into<String>) -> Self {
        Aig {
            name: name.into(),
            nodes: vec![Node::Const],
            inputs: Vec::new(),
            outputs: Vec::new(),
            strash: HashMap::new(),
        }
    }

    /// An empty graph with the same name and inputs as `self`, no outputs.
    pub fn with_same_inputs(&self) -> Aig {
        let mut g = Aig::new(self.name.clone());
        for (_, name) in &self.inputs {
            g.add_input(name.clone());
        }
        g
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn add_input(&mut self, name: impl Into<String>) -> Lit {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node::Input(self.inputs.len()));
        self.inputs.push((id, name.into()));
        Lit::new(id, false)
    }

    pub fn add_output(&mut self, name: impl Into<String>, lit: Lit) {
        debug_assert!(lit.index() < self.nodes.len());
        self.outputs.push((name.into(), lit));
    }

    pub fn set_output_lit(&mut self, index: usize, lit: Lit) {
        self.outputs[index].1 = lit;
    }

    /// AND of two literals with constant folding, idempotence,
    /// contradiction detection and one-level structural hashing.
    pub fn and2(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Lit::FALSE {
            return Lit::FALSE;
        }
        if a == Lit::TRUE {
            return b;
        }
        if a == b {
            return a;
        }
        if a == !b {
            return Lit::FALSE;
        }
        if let Some(&id) = self.strash.get(&(a, b)) {
            return Lit::new(id, false);
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node::And(a, b));
        self.strash.insert((a, b), id);
        Lit::new(id, false)
    }

    pub fn or2(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and2(!a, !b)
    }

    /// `a XOR b` as `!(!(a & !b) & !(!a & b))`: three AND nodes.
    pub fn xor2(&mut self, a: Lit, b: Lit) -> Lit {
        let p = self.and2(a, !b);
        let q = self.and2(!a, b);
        self.or2(p, q)
    }

    /// `if sel { hi } else { lo }`.
    pub fn mux(&mut self, sel: Lit, hi: Lit, lo: Lit) -> Lit {
        if hi == lo {
            return hi;
        }
        if hi == !lo {
            return self.xor2(sel, lo);
        }
        let p = self.and2(sel, hi);
        let q = self.and2(!sel, lo);
        self.or2(p, q)
    }

    /// AND over any number of literals as a balanced tree.
    pub fn and_many(&mut self, lits: &[Lit]) -> Lit {
        match lits.len() {
            0 => Lit::TRUE,
            1 => lits[0],
            n => {
                let (l, r) = lits.split_at(n / 2);
                let a = self.and_many(l);
                let b = self.and_many(r);
                self.and2(a, b)
            }
        }
    }

    pub fn or_many(&mut self, lits: &[Lit]) -> Lit {
        let negated: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        !self.and_many(&negated)
    }

    pub fn xor_many(&mut self, lits: &[Lit]) -> Lit {
        match lits.len() {
            0 => Lit::FALSE,
            1 => lits[0],
            n => {
                let (l, r) = lits.split_at(n / 2);
                let a = self.xor_many(l);
                let b = self.xor_many(r);
                self.xor2(a, b)
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_ands(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::And(..))).count()
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn fanins(&self, id: NodeId) -> Option<(Lit, Lit)> {
        match self.nodes[id as usize] {
            Node::And(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn is_and(&self, id: NodeId) -> bool {
        matches!(self.nodes[id as usize], Node::And(..))
    }

    pub fn inputs(&self) -> &[(NodeId, String)] {
        &self.inputs
    }

    pub fn input_lit(&self, index: usize) -> Lit {
        Lit::new(self.inputs[index].0, false)
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|(_, n)| n.as_str())
    }

    pub fn outputs(&self) -> &[(String, Lit)] {
        &self.outputs
    }

    pub fn output_lits(&self) -> impl Iterator<Item = Lit> + '_ {
        self.outputs.iter().map(|(_, l)| *l)
    }

    /// Depth of every node counted in AND nodes (inputs and constant are 0).
    pub fn levels(&self) -> Vec<u32> {
        let mut level = vec![0u32; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::And(a, b) = node {
                level[i] = 1 + level[a.index()].max(level[b.index()]);
            }
        }
        level
    }

    pub fn metrics(&self) -> AigMetrics {
        let level = self.levels();
        AigMetrics {
            n_ands: self.n_ands(),
            n_levels: self.output_lits().map(|l| level[l.index()] as usize).max().unwrap_or(0),
        }
    }

    /// References to each node from AND fan-ins and primary outputs.
    pub fn fanout_counts(&self) -> Vec<u32> {
        let mut count = vec![0u32; self.nodes.len()];
        for node in &self.nodes {
            if let Node::And(a, b) = node {
                count[a.index()] += 1;
                count[b.index()] += 1;
            }
        }
        for l in self.output_lits() {
            count[l.index()] += 1;
        }
        count
    }

    /// Marks the transitive fan-in of `roots` (roots included).
    pub fn transitive_fanin(&self, roots: impl IntoIterator<Item = NodeId>) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = roots.into_iter().collect();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut mark[id as usize], true) {
                continue;
            }
            if let Node::And(a, b) = self.nodes[id as usize] {
                stack.push(a.node());
                stack.push(b.node());
            }
        }
        mark
    }

    /// Marks the transitive fan-out of `root` (root included).
    pub fn transitive_fanout(&self, root: NodeId) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        mark[root as usize] = true;
        for (i, node) in self.nodes.iter().enumerate().skip(root as usize + 1) {
            if let Node::And(a, b) = node {
                if mark[a.index()] || mark[b.index()] {
                    mark[i] = true;
                }
            }
        }
        mark
    }

    /// Nodes reachable from some primary output.
    pub fn reachable_from_outputs(&self) -> Vec<bool> {
        self.transitive_fanin(self.output_lits().map(|l| l.node()).collect::<Vec<_>>())
    }

    /// Copies the nodes of `self` into `dst`, substituting `input_map[i]`
    /// for input `i`. Returns the literal of every source node in `dst`.
    pub fn copy_into(&self, dst: &mut Aig, input_map: &[Lit]) -> Vec<Lit> {
        assert_eq!(input_map.len(), self.inputs.len());
        let mut map = vec![Lit::FALSE; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            map[i] = match *node {
                Node::Const => Lit::FALSE,
                Node::Input(k) => input_map[k],
                Node::And(a, b) => {
                    let fa = map[a.index()].negate_if(a.is_complemented());
                    let fb = map[b.index()].negate_if(b.is_complemented());
                    dst.and2(fa, fb)
                }
            };
        }
        map
    }

    /// Rebuilds the graph keeping only logic reachable from the outputs.
    /// Inputs and their order are always kept.
    pub fn cleanup(&self) -> Aig {
        let keep = self.reachable_from_outputs();
        let mut g = self.with_same_inputs();
        let mut map = vec![Lit::FALSE; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            map[i] = match *node {
                Node::Const => Lit::FALSE,
                Node::Input(k) => g.input_lit(k),
                Node::And(a, b) if keep[i] => {
                    let fa = map[a.index()].negate_if(a.is_complemented());
                    let fb = map[b.index()].negate_if(b.is_complemented());
                    g.and2(fa, fb)
                }
                Node::And(..) => Lit::FALSE,
            };
        }
        for (name, l) in &self.outputs {
            g.add_output(name.clone(), map[l.index()].negate_if(l.is_complemented()));
        }
        g
    }

    /// Literal of `lit` after remapping its node through `map`.
    pub fn remap(map: &[Lit], lit: Lit) -> Lit {
        map[lit.index()].negate_if(lit.is_complemented())
    }

    /// SHA-256 over the node list and outputs, as lowercase hex. Two graphs
    /// with the same hash have the same structure, names aside.
    pub fn structural_hash(&self) -> String {
        let mut h = Sha256::new();
        for node in &self.nodes {
            match node {
                Node::Const => h.update([0u8]),
                Node::Input(k) => {
                    h.update([1u8]);
                    h.update((*k as u64).to_le_bytes());
                }
                Node::And(a, b) => {
                    h.update([2u8]);
                    h.update(a.raw().to_le_bytes());
                    h.update(b.raw().to_le_bytes());
                }
            }
        }
        for (_, l) in &self.outputs {
            h.update([3u8]);
            h.update(l.raw().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Checks the structural invariants; used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            match (i, node) {
                (0, Node::Const) => {}
                (0, _) | (_, Node::Const) => return Err(format!("node {i}: constant misplaced")),
                (_, Node::Input(k)) => {
                    if self.inputs.get(*k).map(|(id, _)| *id as usize) != Some(i) {
                        return Err(format!("node {i}: input index {k} inconsistent"));
                    }
                }
                (_, Node::And(a, b)) => {
                    if a.index() >= i || b.index() >= i {
                        return Err(format!("node {i}: fan-in not topological"));
                    }
                    if a > b {
                        return Err(format!("node {i}: fan-ins not canonically ordered"));
                    }
                    if seen.insert((*a, *b), i).is_some() {
                        return Err(format!("node {i}: duplicate fan-in pair"));
                    }
                }
            }
        }
        Ok(())
    }
}
