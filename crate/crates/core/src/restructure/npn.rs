//! NPN classification of 4-input functions and a library of alternative
//! implementations per class.

use std::sync::OnceLock;

use crate::aig::{Aig, Lit};
use crate::truth::TruthTable;

use super::synth;

/// `g(x) = out ^ f(y)` with `y_j = x[perm[j]] ^ neg_j`, where `f` is the
/// class representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NpnTransform {
    pub perm: [u8; 4],
    pub neg: u8,
    pub out: bool,
}

impl NpnTransform {
    pub fn apply(&self, f: u16) -> u16 {
        let mut g = 0u16;
        for m in 0..16u16 {
            let mut y = 0;
            for j in 0..4 {
                let bit = (m >> self.perm[j]) & 1 ^ u16::from(self.neg >> j & 1);
                y |= bit << j;
            }
            if (f >> y & 1 == 1) != self.out {
                g |= 1 << m;
            }
        }
        g
    }
}

fn permutations() -> Vec<[u8; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4u8 {
        for b in (0..4).filter(|&b| b != a) {
            for c in (0..4).filter(|&c| c != a && c != b) {
                out.push([a, b, c, 6 - a - b - c]);
            }
        }
    }
    out
}

pub struct NpnLibrary {
    class_of: Vec<u16>,
    transform: Vec<NpnTransform>,
    representatives: Vec<u16>,
    /// Per class: single-output graphs over inputs `y0..y3`.
    implementations: Vec<Vec<Aig>>,
}

/// Shared library, built on first use.
pub fn library() -> &'static NpnLibrary {
    static LIB: OnceLock<NpnLibrary> = OnceLock::new();
    LIB.get_or_init(NpnLibrary::build)
}

impl NpnLibrary {
    fn build() -> Self {
        let perms = permutations();
        let mut class_of = vec![u16::MAX; 1 << 16];
        let mut transform = vec![NpnTransform::default(); 1 << 16];
        let mut representatives = Vec::new();
        // Scanning in increasing order makes each representative the
        // smallest member of its class.
        for f in 0..=u16::MAX {
            if class_of[f as usize] != u16::MAX {
                continue;
            }
            let class = representatives.len() as u16;
            representatives.push(f);
            for &perm in &perms {
                for neg in 0..16u8 {
                    for out in [false, true] {
                        let t = NpnTransform { perm, neg, out };
                        let g = t.apply(f) as usize;
                        if class_of[g] == u16::MAX {
                            class_of[g] = class;
                            transform[g] = t;
                        }
                    }
                }
            }
        }
        let implementations = representatives.iter().map(|&f| implementations_of(f)).collect();
        NpnLibrary { class_of, transform, representatives, implementations }
    }

    pub fn n_classes(&self) -> usize {
        self.representatives.len()
    }

    pub fn class_of(&self, f: u16) -> usize {
        self.class_of[f as usize] as usize
    }

    pub fn transform(&self, f: u16) -> NpnTransform {
        self.transform[f as usize]
    }

    pub fn representative(&self, class: usize) -> u16 {
        self.representatives[class]
    }

    pub fn implementations(&self, class: usize) -> &[Aig] {
        &self.implementations[class]
    }

    /// Builds implementation `choice` of function `f` over `leaves`
    /// (variable `i` is `leaves[i]`; unused leaves may be anything).
    pub fn instantiate(&self, dst: &mut Aig, f: u16, leaves: &[Lit; 4], choice: usize) -> Lit {
        let class = self.class_of(f);
        let t = self.transform(f);
        let template = &self.implementations[class][choice];
        let input_map: Vec<Lit> = (0..4).map(|j| leaves[t.perm[j] as usize].negate_if(t.neg >> j & 1 == 1)).collect();
        let map = template.copy_into(dst, &input_map);
        Aig::remap(&map, template.outputs()[0].1).negate_if(t.out)
    }
}

fn implementations_of(f: u16) -> Vec<Aig> {
    let tt = TruthTable::from_u64(4, f as u64);
    let orders: [[usize; 4]; 3] = [[0, 1, 2, 3], [3, 2, 1, 0], [1, 3, 0, 2]];
    let mut builders: Vec<Box<dyn Fn(&mut Aig, &[Lit]) -> Lit>> = Vec::new();
    for order in orders {
        let tt = tt.clone();
        builders.push(Box::new(move |g, l| synth::shannon(g, &tt, l, &order)));
    }
    let (sop, _) = synth::isop(&tt, &tt);
    builders.push(Box::new(move |g, l| synth::build_sop(g, &sop, l)));
    let (pos, _) = synth::isop(&!&tt, &!&tt);
    builders.push(Box::new(move |g, l| !synth::build_sop(g, &pos, l)));

    let mut out: Vec<Aig> = Vec::new();
    let mut hashes = Vec::new();
    for build in builders {
        let mut g = Aig::new("npn");
        let leaves: Vec<Lit> = (0..4).map(|i| g.add_input(format!("y{i}"))).collect();
        let y = build(&mut g, &leaves);
        g.add_output("f", y);
        let g = g.cleanup();
        let h = g.structural_hash();
        if !hashes.contains(&h) {
            hashes.push(h);
            out.push(g);
        }
    }
    out
}

/// Spreads a table over `k <= 4` variables to 16 bits.
pub fn widen_to_4(tt: &TruthTable) -> u16 {
    let k = tt.n_vars();
    assert!(k <= 4);
    let mask = (1usize << k) - 1;
    (0..16).fold(0u16, |acc, m| acc | (u16::from(tt.bit(m & mask)) << m))
}
