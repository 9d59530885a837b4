//! Two-level and mux-tree synthesis of truth tables into an AIG.

use std::collections::HashMap;

use crate::aig::{Aig, Lit};
use crate::truth::TruthTable;

/// Builds `f` as a Shannon mux tree, splitting on variables in `order`.
/// Variable `i` of `f` is `leaves[i]`. Cofactors are memoized up to
/// complement, so shared sub-functions are built once.
pub fn shannon(g: &mut Aig, f: &TruthTable, leaves: &[Lit], order: &[usize]) -> Lit {
    let mut memo = HashMap::new();
    shannon_rec(g, f, leaves, order, &mut memo)
}

fn shannon_rec(
    g: &mut Aig,
    f: &TruthTable,
    leaves: &[Lit],
    order: &[usize],
    memo: &mut HashMap<TruthTable, Lit>,
) -> Lit {
    if f.is_zero() {
        return Lit::FALSE;
    }
    if f.is_one() {
        return Lit::TRUE;
    }
    if let Some(&l) = memo.get(f) {
        return l;
    }
    let v = *order.iter().find(|&&v| f.depends_on(v)).expect("non-constant function has support");
    let f0 = f.cofactor(v, false);
    let f1 = f.cofactor(v, true);
    let x = leaves[v];
    let r = if f0.is_zero() && f1.is_one() {
        x
    } else if f0.is_one() && f1.is_zero() {
        !x
    } else {
        let hi = shannon_rec(g, &f1, leaves, order, memo);
        let lo = shannon_rec(g, &f0, leaves, order, memo);
        g.mux(x, hi, lo)
    };
    memo.insert(!f, !r);
    memo.insert(f.clone(), r);
    r
}

/// Product term: bit `i` of `pos`/`neg` selects `x_i` / `!x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cube {
    pub pos: u32,
    pub neg: u32,
}

/// Irredundant sum of products for any function between `lower` and
/// `upper` (Minato-Morreale). Returns the cover and its function.
pub fn isop(lower: &TruthTable, upper: &TruthTable) -> (Vec<Cube>, TruthTable) {
    let (cover, cubes) = isop_rec(lower, upper, lower.n_vars());
    (cubes, cover)
}

fn isop_rec(l: &TruthTable, u: &TruthTable, bound: usize) -> (TruthTable, Vec<Cube>) {
    let n = l.n_vars();
    if l.is_zero() {
        return (TruthTable::zero(n), Vec::new());
    }
    if u.is_one() {
        return (TruthTable::one(n), vec![Cube { pos: 0, neg: 0 }]);
    }
    let v = (0..bound)
        .rev()
        .find(|&v| l.depends_on(v) || u.depends_on(v))
        .expect("l < u forces some dependence");
    let (l0, l1) = (l.cofactor(v, false), l.cofactor(v, true));
    let (u0, u1) = (u.cofactor(v, false), u.cofactor(v, true));
    let (r0, c0) = isop_rec(&(&l0 & &!&u1), &u0, v);
    let (r1, c1) = isop_rec(&(&l1 & &!&u0), &u1, v);
    let rest = &(&l0 & &!&r0) | &(&l1 & &!&r1);
    let (rs, cs) = isop_rec(&rest, &(&u0 & &u1), v);
    let x = TruthTable::var(n, v);
    let cover = &(&(&!&x & &r0) | &(&x & &r1)) | &rs;
    let mut cubes = Vec::with_capacity(c0.len() + c1.len() + cs.len());
    cubes.extend(c0.into_iter().map(|c| Cube { neg: c.neg | 1 << v, ..c }));
    cubes.extend(c1.into_iter().map(|c| Cube { pos: c.pos | 1 << v, ..c }));
    cubes.extend(cs);
    (cover, cubes)
}

pub fn build_sop(g: &mut Aig, cubes: &[Cube], leaves: &[Lit]) -> Lit {
    let terms: Vec<Lit> = cubes
        .iter()
        .map(|c| {
            let lits: Vec<Lit> = (0..leaves.len())
                .filter_map(|i| {
                    if c.pos >> i & 1 == 1 {
                        Some(leaves[i])
                    } else if c.neg >> i & 1 == 1 {
                        Some(!leaves[i])
                    } else {
                        None
                    }
                })
                .collect();
            g.and_many(&lits)
        })
        .collect();
    g.or_many(&terms)
}
