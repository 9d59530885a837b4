use crate::aig::{cut_truth_table, reconvergent_cut, Aig, Lit, NodeId};
use crate::rng::SplitMix64;

use super::npn::{self, library};
use super::{rebuild_capped, Replacement};

/// Cut rewriting: AND nodes are visited in a seeded random order, each is
/// picked with probability `p_select`, and a picked node's 4-input cut is
/// replaced by a seed-chosen stored implementation of its NPN class.
pub fn rewrite_with(g: &Aig, seed: u64, p_select: f64) -> Aig {
    let lib = library();
    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<NodeId> = (0..g.n_nodes() as NodeId).filter(|&i| g.is_and(i)).collect();
    rng.shuffle(&mut order);
    let mut picks: Vec<(NodeId, Vec<NodeId>, u16, usize)> = Vec::new();
    for id in order {
        if !rng.bernoulli(p_select) {
            continue;
        }
        let leaves = reconvergent_cut(g, id, 4);
        let Some(tt) = cut_truth_table(g, Lit::new(id, false), &leaves) else { continue };
        let f = npn::widen_to_4(&tt);
        let n_impl = lib.implementations(lib.class_of(f)).len();
        let choice = rng.below_usize(n_impl);
        picks.push((id, leaves, f, choice));
    }
    rebuild_capped(g, picks.len(), |k| {
        picks[..k]
            .iter()
            .map(|(id, leaves, f, choice)| {
                let (leaves, f, choice) = (leaves.clone(), *f, *choice);
                Replacement {
                    root: *id,
                    build: Box::new(move |dst: &mut Aig, map: &[Lit]| {
                        let mut x = [Lit::FALSE; 4];
                        for (slot, &leaf) in x.iter_mut().zip(&leaves) {
                            *slot = map[leaf as usize];
                        }
                        lib.instantiate(dst, f, &x, choice)
                    }),
                }
            })
            .collect()
    })
}
