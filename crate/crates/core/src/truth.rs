//! Dense truth tables over up to 16 variables.

use std::ops::{BitAnd, BitOr, BitXor, Not};

pub const MAX_VARS: usize = 16;

const VAR_MASKS: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

/// Bit `m` holds the function value on minterm `m`, where variable `i` is
/// bit `i` of `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    n_vars: usize,
    words: Vec<u64>,
}

fn n_words(n_vars: usize) -> usize {
    if n_vars <= 6 {
        1
    } else {
        1 << (n_vars - 6)
    }
}

fn tail_mask(n_vars: usize) -> u64 {
    if n_vars >= 6 {
        !0
    } else {
        (1u64 << (1 << n_vars)) - 1
    }
}

impl TruthTable {
    pub fn zero(n_vars: usize) -> Self {
        assert!(n_vars <= MAX_VARS);
        TruthTable { n_vars, words: vec![0; n_words(n_vars)] }
    }

    pub fn one(n_vars: usize) -> Self {
        !Self::zero(n_vars)
    }

    pub fn constant(n_vars: usize, value: bool) -> Self {
        if value {
            Self::one(n_vars)
        } else {
            Self::zero(n_vars)
        }
    }

    /// The projection function of variable `var`.
    pub fn var(n_vars: usize, var: usize) -> Self {
        assert!(var < n_vars);
        let mut t = Self::zero(n_vars);
        if var < 6 {
            for w in &mut t.words {
                *w = VAR_MASKS[var];
            }
        } else {
            let stride = 1 << (var - 6);
            for (i, w) in t.words.iter_mut().enumerate() {
                if (i / stride) % 2 == 1 {
                    *w = !0;
                }
            }
        }
        t.mask_tail();
        t
    }

    pub fn from_words(n_vars: usize, words: Vec<u64>) -> Self {
        assert_eq!(words.len(), n_words(n_vars));
        let mut t = TruthTable { n_vars, words };
        t.mask_tail();
        t
    }

    /// Builds a table from its low `2^n_vars` bits (`n_vars <= 6`).
    pub fn from_u64(n_vars: usize, bits: u64) -> Self {
        assert!(n_vars <= 6);
        Self::from_words(n_vars, vec![bits])
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn n_bits(&self) -> usize {
        1 << self.n_vars
    }

    pub fn bit(&self, minterm: usize) -> bool {
        (self.words[minterm / 64] >> (minterm % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, minterm: usize, value: bool) {
        let w = &mut self.words[minterm / 64];
        if value {
            *w |= 1 << (minterm % 64);
        } else {
            *w &= !(1 << (minterm % 64));
        }
    }

    /// Low 64 bits, convenient for tables over at most 6 variables.
    pub fn as_u64(&self) -> u64 {
        self.words[0]
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one(self.n_vars)
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn mask_tail(&mut self) {
        if self.n_vars < 6 {
            self.words[0] &= tail_mask(self.n_vars);
        }
    }

    /// Cofactor with `var` fixed to `value`, still expressed over all variables.
    pub fn cofactor(&self, var: usize, value: bool) -> Self {
        let mut t = self.clone();
        if var < 6 {
            let shift = 1 << var;
            let mask = VAR_MASKS[var];
            for w in &mut t.words {
                *w = if value {
                    (*w & mask) | ((*w & mask) >> shift)
                } else {
                    (*w & !mask) | ((*w & !mask) << shift)
                };
            }
        } else {
            let stride = 1 << (var - 6);
            for i in 0..t.words.len() {
                let high = (i / stride) % 2 == 1;
                let src = if value { i | stride } else { i & !stride };
                if high != value || src != i {
                    t.words[i] = self.words[src];
                }
            }
        }
        t.mask_tail();
        t
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.cofactor(var, false) != self.cofactor(var, true)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_vars).filter(|&v| self.depends_on(v)).collect()
    }

    /// Evaluates by enumerating minterms with `f(minterm)`.
    pub fn from_fn(n_vars: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut t = Self::zero(n_vars);
        for m in 0..(1usize << n_vars) {
            if f(m) {
                t.set_bit(m, true);
            }
        }
        t
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.n_vars, other.n_vars);
        let words = self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect();
        let mut t = TruthTable { n_vars: self.n_vars, words };
        t.mask_tail();
        t
    }
}

impl Not for TruthTable {
    type Output = TruthTable;
    fn not(mut self) -> TruthTable {
        for w in &mut self.words {
            *w = !*w;
        }
        self.mask_tail();
        self
    }
}

impl Not for &TruthTable {
    type Output = TruthTable;
    fn not(self) -> TruthTable {
        !self.clone()
    }
}

impl BitAnd for &TruthTable {
    type Output = TruthTable;
    fn bitand(self, rhs: &TruthTable) -> TruthTable {
        self.zip(rhs, |a, b| a & b)
    }
}

impl BitOr for &TruthTable {
    type Output = TruthTable;
    fn bitor(self, rhs: &TruthTable) -> TruthTable {
        self.zip(rhs, |a, b| a | b)
    }
}

impl BitXor for &TruthTable {
    type Output = TruthTable;
    fn bitxor(self, rhs: &TruthTable) -> TruthTable {
        self.zip(rhs, |a, b| a ^ b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_match_minterm_bits() {
        for n in 1..=9 {
            for v in 0..n {
                let t = TruthTable::var(n, v);
                for m in 0..(1usize << n) {
                    assert_eq!(t.bit(m), (m >> v) & 1 == 1, "n={n} v={v} m={m}");
                }
            }
        }
    }

    #[test]
    fn cofactors_agree_with_enumeration() {
        for n in [3usize, 7, 8] {
            let f = TruthTable::from_fn(n, |m| (m * 2654435761usize >> 7) & 1 == 1);
            for v in 0..n {
                for value in [false, true] {
                    let c = f.cofactor(v, value);
                    for m in 0..(1usize << n) {
                        let src = if value { m | (1 << v) } else { m & !(1 << v) };
                        assert_eq!(c.bit(m), f.bit(src));
                    }
                }
            }
        }
    }

    #[test]
    fn support_of_and() {
        let t = &TruthTable::var(4, 0) & &TruthTable::var(4, 2);
        assert_eq!(t.support(), vec![0, 2]);
        assert_eq!(t.count_ones(), 4);
        assert!((!TruthTable::zero(3)).is_one());
    }
}
