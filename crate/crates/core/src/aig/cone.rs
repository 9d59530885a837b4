use std::collections::HashMap;

use thiserror::Error;

use crate::truth::{TruthTable, MAX_VARS};

use super::{Aig, Lit, Node, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConeError {
    #[error("cone support has {support} inputs, limit is {limit}")]
    Overflow { support: usize, limit: usize },
}

/// A logic cone collapsed to its function over its support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    /// Support nodes in ascending id order; variable `i` of `table` is `support[i]`.
    pub support: Vec<NodeId>,
    pub table: TruthTable,
}

/// Collapses the full cone of `root` down to primary inputs.
pub fn extract_cone(g: &Aig, root: Lit, max_inputs: usize) -> Result<Cone, ConeError> {
    assert!(max_inputs <= MAX_VARS);
    let tfi = g.transitive_fanin([root.node()]);
    let support: Vec<NodeId> = g
        .inputs()
        .iter()
        .map(|(id, _)| *id)
        .filter(|&id| tfi[id as usize])
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if support.len() > max_inputs {
        return Err(ConeError::Overflow { support: support.len(), limit: max_inputs });
    }
    let table = cut_truth_table(g, root, &support).expect("inputs always form a cut");
    Ok(Cone { support, table })
}

/// Function of `root` over the cut `leaves` (variable `i` is `leaves[i]`).
/// Returns `None` if `leaves` does not separate `root` from the inputs.
pub fn cut_truth_table(g: &Aig, root: Lit, leaves: &[NodeId]) -> Option<TruthTable> {
    let n = leaves.len();
    assert!(n <= MAX_VARS);
    let mut tables: HashMap<NodeId, TruthTable> = HashMap::new();
    for (i, &leaf) in leaves.iter().enumerate() {
        tables.insert(leaf, TruthTable::var(n, i));
    }
    tables.insert(0, TruthTable::zero(n));

    // Collect interior nodes, then evaluate them in id (topological) order.
    let mut interior = Vec::new();
    let mut stack = vec![root.node()];
    let mut seen = std::collections::HashSet::new();
    while let Some(id) = stack.pop() {
        if tables.contains_key(&id) || !seen.insert(id) {
            continue;
        }
        match g.node(id) {
            Node::And(a, b) => {
                interior.push(id);
                stack.push(a.node());
                stack.push(b.node());
            }
            Node::Input(_) => return None,
            Node::Const => {}
        }
    }
    interior.sort_unstable();
    for id in interior {
        let (a, b) = g.fanins(id).unwrap();
        let ta = lit_table(&tables, a);
        let tb = lit_table(&tables, b);
        tables.insert(id, &ta & &tb);
    }
    Some(lit_table(&tables, root))
}

fn lit_table(tables: &HashMap<NodeId, TruthTable>, lit: Lit) -> TruthTable {
    let t = tables[&lit.node()].clone();
    if lit.is_complemented() {
        !t
    } else {
        t
    }
}

/// Reconvergence-driven cut of at most `max_leaves` leaves under AND node
/// `root`: starting from its fan-ins, repeatedly expand the leaf whose
/// expansion adds the fewest new leaves (ties: highest id first).
pub fn reconvergent_cut(g: &Aig, root: NodeId, max_leaves: usize) -> Vec<NodeId> {
    let (a, b) = g.fanins(root).expect("cut root must be an AND node");
    let mut leaves: Vec<NodeId> = vec![a.node(), b.node()];
    leaves.sort_unstable();
    leaves.dedup();
    let mut visited: std::collections::HashSet<NodeId> = leaves.iter().copied().collect();
    visited.insert(root);
    loop {
        let mut best: Option<(usize, NodeId)> = None;
        for &leaf in &leaves {
            let Some((fa, fb)) = g.fanins(leaf) else { continue };
            let cost = [fa.node(), fb.node()]
                .iter()
                .filter(|&&f| f != 0 && !visited.contains(&f))
                .count();
            let better = match best {
                None => true,
                Some((c, id)) => cost < c || (cost == c && leaf > id),
            };
            if better {
                best = Some((cost, leaf));
            }
        }
        let Some((cost, leaf)) = best else { break };
        if leaves.len() - 1 + cost > max_leaves {
            break;
        }
        let (fa, fb) = g.fanins(leaf).unwrap();
        leaves.retain(|&l| l != leaf);
        for f in [fa.node(), fb.node()] {
            if f != 0 && visited.insert(f) {
                leaves.push(f);
            }
        }
    }
    leaves.sort_unstable();
    leaves
}
