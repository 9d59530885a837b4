use crate::aig::{extract_cone, Aig, Lit, Node, NodeId};
use crate::rng::SplitMix64;

use super::synth::shannon;
use super::{rebuild_capped, Replacement};

/// Cone resynthesis: every AND node whose full input cone has at most
/// `max_cone_inputs` primary inputs is a candidate; candidates are picked
/// with probability `p_select` and rebuilt from their truth table by
/// Shannon decomposition in a seed-permuted variable order. Nodes whose
/// cone overflows the limit are left alone.
pub fn refactor_with(g: &Aig, seed: u64, max_cone_inputs: usize, p_select: f64) -> Aig {
    assert!(max_cone_inputs <= 8, "max_cone_inputs must be at most 8");
    if max_cone_inputs <= 1 {
        return g.clone();
    }
    let small = small_support(g, max_cone_inputs);
    let mut rng = SplitMix64::new(seed);
    let mut candidates: Vec<NodeId> = (0..g.n_nodes() as NodeId)
        .filter(|&i| g.is_and(i) && small[i as usize])
        .collect();
    rng.shuffle(&mut candidates);
    let mut picks = Vec::new();
    for id in candidates {
        if !rng.bernoulli(p_select) {
            continue;
        }
        let cone = match extract_cone(g, Lit::new(id, false), max_cone_inputs) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let mut order: Vec<usize> = (0..cone.support.len()).collect();
        rng.shuffle(&mut order);
        picks.push((id, cone, order));
    }
    if picks.is_empty() {
        return g.clone();
    }
    rebuild_capped(g, picks.len(), |k| {
        picks[..k]
            .iter()
            .map(|(id, cone, order)| Replacement {
                root: *id,
                build: Box::new(move |dst: &mut Aig, map: &[Lit]| {
                    let leaves: Vec<Lit> = cone.support.iter().map(|&s| map[s as usize]).collect();
                    shannon(dst, &cone.table, &leaves, order)
                }),
            })
            .collect()
    })
}

/// Whether each node's primary-input support has at most `k` members.
fn small_support(g: &Aig, k: usize) -> Vec<bool> {
    let mut support: Vec<Option<Vec<NodeId>>> = Vec::with_capacity(g.n_nodes());
    for (i, node) in g.nodes().iter().enumerate() {
        let s = match *node {
            Node::Const => Some(Vec::new()),
            Node::Input(_) => Some(vec![i as NodeId]),
            Node::And(a, b) => match (&support[a.index()], &support[b.index()]) {
                (Some(x), Some(y)) => {
                    let mut s: Vec<NodeId> = x.iter().chain(y).copied().collect();
                    s.sort_unstable();
                    s.dedup();
                    (s.len() <= k).then_some(s)
                }
                _ => None,
            },
        };
        support.push(s);
    }
    support.iter().map(Option::is_some).collect()
}
