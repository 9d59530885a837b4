use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::aig::{Aig, Lit, Node};
use crate::rng::SplitMix64;

/// Rebuilds every maximal same-polarity AND tree (a supergate) as a
/// balanced tree. Leaves are paired lowest level first; ties go to the
/// earlier leaf in depth-first order.
pub fn balance(g: &Aig) -> Aig {
    balance_impl(g, None)
}

/// Like [`balance`], with ties between equal-level leaves broken by `seed`.
pub fn balance_shuffled(g: &Aig, seed: u64) -> Aig {
    balance_impl(g, Some(SplitMix64::new(seed)))
}

fn balance_impl(g: &Aig, mut rng: Option<SplitMix64>) -> Aig {
    let n = g.n_nodes();
    // A node is absorbed into its parent's supergate when its only
    // reference is a non-complemented AND fan-in.
    let fanout = g.fanout_counts();
    let mut absorbed = vec![false; n];
    for node in g.nodes() {
        if let Node::And(a, b) = *node {
            for l in [a, b] {
                if !l.is_complemented() && g.is_and(l.node()) && fanout[l.index()] == 1 {
                    absorbed[l.index()] = true;
                }
            }
        }
    }
    for l in g.output_lits() {
        absorbed[l.index()] = false;
    }

    let mut out = g.with_same_inputs();
    let mut level: Vec<u32> = vec![0; out.n_nodes()];
    let mut map = vec![Lit::FALSE; n];
    for (i, node) in g.nodes().iter().enumerate() {
        map[i] = match *node {
            Node::Const => Lit::FALSE,
            Node::Input(k) => out.input_lit(k),
            Node::And(..) if absorbed[i] => continue,
            Node::And(..) => {
                let mut leaves = Vec::new();
                collect_leaves(g, Lit::new(i as u32, false), &absorbed, &mut leaves, true);
                let mapped: Vec<Lit> = leaves.iter().map(|&l| Aig::remap(&map, l)).collect();
                build_balanced(&mut out, &mut level, &mapped, rng.as_mut())
            }
        };
    }
    for (name, l) in g.outputs() {
        out.add_output(name.clone(), Aig::remap(&map, *l));
    }
    out.cleanup()
}

fn collect_leaves(g: &Aig, lit: Lit, absorbed: &[bool], leaves: &mut Vec<Lit>, root: bool) {
    if root || (!lit.is_complemented() && absorbed[lit.index()]) {
        let (a, b) = g.fanins(lit.node()).unwrap();
        collect_leaves(g, a, absorbed, leaves, false);
        collect_leaves(g, b, absorbed, leaves, false);
    } else {
        leaves.push(lit);
    }
}

fn build_balanced(out: &mut Aig, level: &mut Vec<u32>, leaves: &[Lit], mut rng: Option<&mut SplitMix64>) -> Lit {
    let mut uniq: Vec<Lit> = Vec::with_capacity(leaves.len());
    for &l in leaves {
        if l == Lit::FALSE || uniq.contains(&!l) {
            return Lit::FALSE;
        }
        if l != Lit::TRUE && !uniq.contains(&l) {
            uniq.push(l);
        }
    }
    if uniq.is_empty() {
        return Lit::TRUE;
    }
    let mut tick = 0u64;
    let mut key = |rng: &mut Option<&mut SplitMix64>| {
        tick += 1;
        match rng {
            Some(r) => r.next_u64(),
            None => tick,
        }
    };
    let mut heap = BinaryHeap::new();
    for l in uniq {
        heap.push(Reverse((level[l.index()], key(&mut rng), l)));
    }
    while heap.len() > 1 {
        let Reverse((la, _, a)) = heap.pop().unwrap();
        let Reverse((lb, _, b)) = heap.pop().unwrap();
        let y = out.and2(a, b);
        if y.index() >= level.len() {
            level.resize(y.index() + 1, 0);
            level[y.index()] = la.max(lb) + 1;
        }
        heap.push(Reverse((level[y.index()], key(&mut rng), y)));
    }
    heap.pop().unwrap().0 .2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_four_becomes_depth_two() {
        let mut g = Aig::new("t");
        let x: Vec<Lit> = (0..4).map(|i| g.add_input(format!("x{i}"))).collect();
        let mut y = x[0];
        for &l in &x[1..] {
            y = g.and2(y, l);
        }
        g.add_output("y", y);
        assert_eq!(g.metrics().n_levels, 3);
        let b = balance(&g);
        assert_eq!(b.metrics().n_levels, 2);
        assert_eq!(b.output_truth_tables(), g.output_truth_tables());
    }

    #[test]
    fn balanced_tree_is_unchanged() {
        let mut g = Aig::new("t");
        let x: Vec<Lit> = (0..4).map(|i| g.add_input(format!("x{i}"))).collect();
        let y = g.and_many(&x);
        g.add_output("y", y);
        assert_eq!(balance(&g).structural_hash(), g.structural_hash());
    }

    #[test]
    fn shared_and_complemented_nodes_stay_boundaries() {
        let mut g = Aig::new("t");
        let x: Vec<Lit> = (0..5).map(|i| g.add_input(format!("x{i}"))).collect();
        let ab = g.and2(x[0], x[1]);
        let abc = g.and2(ab, x[2]);
        let y1 = g.and2(!abc, x[3]);
        let y2 = g.and2(ab, x[4]);
        g.add_output("y1", y1);
        g.add_output("y2", y2);
        let b = balance(&g);
        assert_eq!(b.output_truth_tables(), g.output_truth_tables());
        assert!(b.metrics().n_levels <= g.metrics().n_levels);
    }
}
