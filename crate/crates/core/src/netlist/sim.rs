use std::collections::HashMap;

use super::{GateKind, Netlist, NetlistError};

/// A netlist flattened to index form for 64-way bit-parallel evaluation.
///
/// Net `i < n_inputs` is primary input `i`; the rest are gate outputs in
/// topological order.
#[derive(Debug, Clone)]
pub struct CompiledNetlist {
    n_inputs: usize,
    ops: Vec<(GateKind, Vec<usize>)>,
    outputs: Vec<usize>,
    names: Vec<String>,
}

impl CompiledNetlist {
    pub fn new(netlist: &Netlist) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut names: Vec<String> = Vec::new();
        for name in netlist.inputs() {
            index.insert(name, names.len());
            names.push(name.clone());
        }
        let order = netlist.topological_order().expect("validated netlist is acyclic");
        let mut ops = Vec::with_capacity(order.len());
        for i in order {
            let g = &netlist.gates()[i];
            let args = g.inputs.iter().map(|n| index[n.as_str()]).collect();
            ops.push((g.kind, args));
            index.insert(&g.output, names.len());
            names.push(g.output.clone());
        }
        let outputs = netlist.outputs().iter().map(|n| index[n.as_str()]).collect();
        CompiledNetlist { n_inputs: netlist.inputs().len(), ops, outputs, names }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_nets(&self) -> usize {
        self.names.len()
    }

    pub fn net_names(&self) -> &[String] {
        &self.names
    }

    /// Value words of every net for one word of patterns per input.
    pub fn eval_nets(&self, input_words: &[u64]) -> Vec<u64> {
        assert_eq!(input_words.len(), self.n_inputs);
        let mut values = Vec::with_capacity(self.names.len());
        values.extend_from_slice(input_words);
        for (kind, args) in &self.ops {
            let v = kind.eval_words(args.iter().map(|&a| values[a]));
            values.push(v);
        }
        values
    }

    pub fn eval_outputs(&self, input_words: &[u64]) -> Vec<u64> {
        let values = self.eval_nets(input_words);
        self.outputs.iter().map(|&o| values[o]).collect()
    }
}

/// Simulates `vectors` (one row of input bits per vector), 64 rows per pass.
pub fn simulate(netlist: &Netlist, vectors: &[Vec<bool>]) -> Result<Vec<Vec<bool>>, NetlistError> {
    let compiled = CompiledNetlist::new(netlist);
    let width = compiled.n_inputs();
    if let Some(bad) = vectors.iter().find(|v| v.len() != width) {
        return Err(NetlistError::WidthMismatch { expected: width, found: bad.len() });
    }
    let mut result = Vec::with_capacity(vectors.len());
    for chunk in vectors.chunks(64) {
        let words = pack_rows(chunk, width);
        let outs = compiled.eval_outputs(&words);
        result.extend(unpack_rows(&outs, chunk.len()));
    }
    Ok(result)
}

/// Transposes up to 64 rows of bits into one word per column.
pub fn pack_rows(rows: &[Vec<bool>], width: usize) -> Vec<u64> {
    debug_assert!(rows.len() <= 64);
    let mut words = vec![0u64; width];
    for (r, row) in rows.iter().enumerate() {
        for (c, &bit) in row.iter().enumerate() {
            words[c] |= (bit as u64) << r;
        }
    }
    words
}

/// Inverse of [`pack_rows`] for the first `n_rows` bit positions.
pub fn unpack_rows(words: &[u64], n_rows: usize) -> Vec<Vec<bool>> {
    (0..n_rows)
        .map(|r| words.iter().map(|w| (w >> r) & 1 == 1).collect())
        .collect()
}
