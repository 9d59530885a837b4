//! Gate-level combinational netlists in the ISCAS BENCH dialect.

mod bench;
mod sim;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{parse_bench, write_bench};
pub use sim::{pack_rows as sim_pack, simulate, unpack_rows as sim_unpack, CompiledNetlist};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("line {line}: syntax error: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("{}net `{net}` is never driven", at(*line))]
    UndefinedNet { line: Option<usize>, net: String },
    #[error("{}net `{net}` has more than one driver", at(*line))]
    DuplicateDriver { line: Option<usize>, net: String },
    #[error("combinational cycle through net `{net}`")]
    CycleDetected { net: String },
    #[error("{}gate `{net}` of kind {kind} cannot take {arity} inputs", at(*line))]
    BadArity {
        line: Option<usize>,
        net: String,
        kind: GateKind,
        arity: usize,
    },
    #[error("expected {expected} input bits per vector, got {found}")]
    WidthMismatch { expected: usize, found: usize },
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl NetlistError {
    pub fn name(&self) -> &'static str {
        match self {
            NetlistError::SyntaxError { .. } => "SyntaxError",
            NetlistError::UndefinedNet { .. } => "UndefinedNet",
            NetlistError::DuplicateDriver { .. } => "DuplicateDriver",
            NetlistError::CycleDetected { .. } => "CycleDetected",
            NetlistError::BadArity { .. } => "BadArity",
            NetlistError::WidthMismatch { .. } => "WidthMismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buf)
    }

    pub fn accepts_arity(self, arity: usize) -> bool {
        if self.is_unary() {
            arity == 1
        } else {
            arity >= 2
        }
    }

    /// Evaluates the gate over 64 parallel patterns.
    pub fn eval_words(self, inputs: impl Iterator<Item = u64>) -> u64 {
        match self {
            GateKind::And => inputs.fold(!0, |a, b| a & b),
            GateKind::Nand => !inputs.fold(!0, |a, b| a & b),
            GateKind::Or => inputs.fold(0, |a, b| a | b),
            GateKind::Nor => !inputs.fold(0, |a, b| a | b),
            GateKind::Xor => inputs.fold(0, |a, b| a ^ b),
            GateKind::Xnor => !inputs.fold(0, |a, b| a ^ b),
            GateKind::Not => !inputs.fold(0, |a, b| a | b),
            GateKind::Buf => inputs.fold(0, |a, b| a | b),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub output: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
}

impl Gate {
    pub fn new(output: impl Into<String>, kind: GateKind, inputs: &[&str]) -> Self {
        Gate {
            output: output.into(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A validated combinational netlist. Construct with [`Netlist::new`] or
/// [`parse_bench`]; the fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub n_gates: usize,
    pub depth: usize,
    pub gate_histogram: BTreeMap<GateKind, usize>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl Netlist {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        gates: Vec<Gate>,
    ) -> Result<Self, NetlistError> {
        Self::validated(name.into(), inputs, outputs, gates, None)
    }

    /// Shared validation; `lines` carries source line numbers when parsing
    /// (inputs, outputs, gates in that order).
    pub(crate) fn validated(
        name: String,
        inputs: Vec<String>,
        outputs: Vec<String>,
        gates: Vec<Gate>,
        lines: Option<&SourceLines>,
    ) -> Result<Self, NetlistError> {
        let input_line = |i: usize| lines.map(|l| l.inputs[i]);
        let output_line = |i: usize| lines.map(|l| l.outputs[i]);
        let gate_line = |i: usize| lines.map(|l| l.gates[i]);

        let mut drivers: HashMap<&str, Option<usize>> = HashMap::new();
        for (i, net) in inputs.iter().enumerate() {
            if !is_identifier(net) {
                return Err(NetlistError::SyntaxError {
                    line: input_line(i).unwrap_or(0),
                    message: format!("bad net name `{net}`"),
                });
            }
            if drivers.insert(net, None).is_some() {
                return Err(NetlistError::DuplicateDriver { line: input_line(i), net: net.clone() });
            }
        }
        for (i, gate) in gates.iter().enumerate() {
            if !gate.kind.accepts_arity(gate.inputs.len()) {
                return Err(NetlistError::BadArity {
                    line: gate_line(i),
                    net: gate.output.clone(),
                    kind: gate.kind,
                    arity: gate.inputs.len(),
                });
            }
            for net in std::iter::once(&gate.output).chain(&gate.inputs) {
                if !is_identifier(net) {
                    return Err(NetlistError::SyntaxError {
                        line: gate_line(i).unwrap_or(0),
                        message: format!("bad net name `{net}`"),
                    });
                }
            }
            if drivers.insert(&gate.output, Some(i)).is_some() {
                return Err(NetlistError::DuplicateDriver {
                    line: gate_line(i),
                    net: gate.output.clone(),
                });
            }
        }
        for (i, gate) in gates.iter().enumerate() {
            if let Some(net) = gate.inputs.iter().find(|n| !drivers.contains_key(n.as_str())) {
                return Err(NetlistError::UndefinedNet { line: gate_line(i), net: net.clone() });
            }
        }
        let mut seen_outputs = HashSet::new();
        for (i, net) in outputs.iter().enumerate() {
            if !drivers.contains_key(net.as_str()) {
                return Err(NetlistError::UndefinedNet { line: output_line(i), net: net.clone() });
            }
            if !seen_outputs.insert(net) {
                return Err(NetlistError::SyntaxError {
                    line: output_line(i).unwrap_or(0),
                    message: format!("output `{net}` declared twice"),
                });
            }
        }

        let netlist = Netlist { name, inputs, outputs, gates };
        netlist.topological_order()?;
        Ok(netlist)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Gate indices in an order where every gate follows its drivers.
    ///
    /// The order is stable: among ready gates the one declared first goes
    /// first, so an already topological netlist comes back unchanged.
    pub fn topological_order(&self) -> Result<Vec<usize>, NetlistError> {
        let driver: HashMap<&str, usize> = self
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| (g.output.as_str(), i))
            .collect();
        let n = self.gates.len();
        let mut pending = vec![0usize; n];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, g) in self.gates.iter().enumerate() {
            for input in &g.inputs {
                if let Some(&d) = driver.get(input.as_str()) {
                    pending[i] += 1;
                    users[d].push(i);
                }
            }
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..n).filter(|&i| pending[i] == 0).map(std::cmp::Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            order.push(i);
            for &u in &users[i] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.push(std::cmp::Reverse(u));
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| pending[i] > 0).unwrap();
            return Err(NetlistError::CycleDetected { net: self.gates[stuck].output.clone() });
        }
        Ok(order)
    }

    /// Logic level of every gate output (primary inputs are level 0).
    pub fn levels(&self) -> HashMap<&str, usize> {
        let order = self.topological_order().expect("validated netlist is acyclic");
        let mut level: HashMap<&str, usize> = self.inputs.iter().map(|n| (n.as_str(), 0)).collect();
        for i in order {
            let g = &self.gates[i];
            let l = 1 + g.inputs.iter().map(|n| level[n.as_str()]).max().unwrap_or(0);
            level.insert(&g.output, l);
        }
        level
    }

    pub fn stats(&self) -> CircuitStats {
        let mut gate_histogram = BTreeMap::new();
        for g in &self.gates {
            *gate_histogram.entry(g.kind).or_insert(0) += 1;
        }
        let depth = self.levels().values().copied().max().unwrap_or(0);
        CircuitStats {
            n_inputs: self.inputs.len(),
            n_outputs: self.outputs.len(),
            n_gates: self.gates.len(),
            depth,
            gate_histogram,
        }
    }

    /// Number of gate inputs plus primary outputs fed by each net.
    pub fn fanout_counts(&self) -> HashMap<&str, usize> {
        let mut counts: HashMap<&str, usize> = self
            .inputs
            .iter()
            .map(|n| (n.as_str(), 0))
            .chain(self.gates.iter().map(|g| (g.output.as_str(), 0)))
            .collect();
        for g in &self.gates {
            for i in &g.inputs {
                *counts.get_mut(i.as_str()).unwrap() += 1;
            }
        }
        for o in &self.outputs {
            *counts.get_mut(o.as_str()).unwrap() += 1;
        }
        counts
    }
}

pub(crate) struct SourceLines {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub gates: Vec<usize>,
}
