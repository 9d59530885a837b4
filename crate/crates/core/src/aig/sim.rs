use crate::rng::SplitMix64;
use crate::truth::TruthTable;

use super::{Aig, Lit, Node};

/// Per-input pattern words that enumerate all `2^n` input combinations;
/// row `m` assigns input `i` the value of bit `i` of `m`.
pub fn exhaustive_input_words(n_inputs: usize) -> Vec<Vec<u64>> {
    (0..n_inputs).map(|i| TruthTable::var(n_inputs, i).words().to_vec()).collect()
}

/// `width` words of uniform random patterns per input.
pub fn random_input_words(n_inputs: usize, width: usize, rng: &mut SplitMix64) -> Vec<Vec<u64>> {
    (0..n_inputs).map(|_| (0..width).map(|_| rng.next_u64()).collect()).collect()
}

/// Node values over `width` words of patterns, stored node-major.
#[derive(Debug, Clone)]
pub struct NodeWords {
    width: usize,
    data: Vec<u64>,
}

impl NodeWords {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn node(&self, id: usize) -> &[u64] {
        &self.data[id * self.width..(id + 1) * self.width]
    }

    pub fn lit(&self, lit: Lit) -> Vec<u64> {
        let mask = if lit.is_complemented() { !0 } else { 0 };
        self.node(lit.index()).iter().map(|w| w ^ mask).collect()
    }
}

impl Aig {
    /// One word (64 patterns) per input; returns one word per node.
    pub fn simulate_nodes(&self, input_words: &[u64]) -> Vec<u64> {
        assert_eq!(input_words.len(), self.n_inputs());
        let mut v = vec![0u64; self.n_nodes()];
        for (i, node) in self.nodes().iter().enumerate() {
            v[i] = match *node {
                Node::Const => 0,
                Node::Input(k) => input_words[k],
                Node::And(a, b) => lit_word(&v, a) & lit_word(&v, b),
            };
        }
        v
    }

    /// Bit-parallel simulation: one word per input, one word per output.
    pub fn simulate(&self, input_words: &[u64]) -> Vec<u64> {
        let v = self.simulate_nodes(input_words);
        self.output_lits().map(|l| lit_word(&v, l)).collect()
    }

    /// Simulation over `width` words per input.
    pub fn simulate_wide(&self, inputs: &[Vec<u64>]) -> NodeWords {
        assert_eq!(inputs.len(), self.n_inputs());
        let width = inputs.first().map_or(1, |w| w.len());
        let mut data = vec![0u64; self.n_nodes() * width];
        for (i, node) in self.nodes().iter().enumerate() {
            let (done, rest) = data.split_at_mut(i * width);
            let out = &mut rest[..width];
            match *node {
                Node::Const => {}
                Node::Input(k) => out.copy_from_slice(&inputs[k]),
                Node::And(a, b) => {
                    let ma = if a.is_complemented() { !0 } else { 0 };
                    let mb = if b.is_complemented() { !0 } else { 0 };
                    let wa = &done[a.index() * width..(a.index() + 1) * width];
                    let wb = &done[b.index() * width..(b.index() + 1) * width];
                    for j in 0..width {
                        out[j] = (wa[j] ^ ma) & (wb[j] ^ mb);
                    }
                }
            }
        }
        NodeWords { width, data }
    }

    /// Row-oriented convenience wrapper around [`Aig::simulate`].
    pub fn simulate_vectors(&self, vectors: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let mut result = Vec::with_capacity(vectors.len());
        for chunk in vectors.chunks(64) {
            let words = crate::netlist::sim_pack(chunk, self.n_inputs());
            let out = self.simulate(&words);
            result.extend(crate::netlist::sim_unpack(&out, chunk.len()));
        }
        result
    }

    /// Truth table of every output; requires at most 16 inputs.
    pub fn output_truth_tables(&self) -> Vec<TruthTable> {
        let n = self.n_inputs();
        assert!(n <= crate::truth::MAX_VARS, "too many inputs for a truth table");
        let words = self.simulate_wide(&exhaustive_input_words(n));
        self.output_lits()
            .map(|l| TruthTable::from_words(n, words.lit(l)))
            .collect()
    }
}

pub(crate) fn lit_word(values: &[u64], lit: Lit) -> u64 {
    let w = values[lit.index()];
    if lit.is_complemented() {
        !w
    } else {
        w
    }
}
