use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::netlist::{Gate, GateKind, Netlist, NetlistError};

use super::{Aig, Lit, Node, NodeId};

/// Builds an AIG computing the same outputs as `netlist`. OR/NOR/NAND are
/// expressed through complemented edges, wide gates become balanced trees.
pub fn from_netlist(netlist: &Netlist) -> Result<Aig, NetlistError> {
    let order = netlist.topological_order()?;
    let mut g = Aig::new(netlist.name());
    let mut net: HashMap<&str, Lit> = HashMap::new();
    for name in netlist.inputs() {
        let l = g.add_input(name.clone());
        net.insert(name, l);
    }
    for i in order {
        let gate = &netlist.gates()[i];
        let args: Vec<Lit> = gate.inputs.iter().map(|n| net[n.as_str()]).collect();
        let lit = match gate.kind {
            GateKind::And => g.and_many(&args),
            GateKind::Nand => !g.and_many(&args),
            GateKind::Or => g.or_many(&args),
            GateKind::Nor => !g.or_many(&args),
            GateKind::Xor => g.xor_many(&args),
            GateKind::Xnor => !g.xor_many(&args),
            GateKind::Not => !args[0],
            GateKind::Buf => args[0],
        };
        net.insert(&gate.output, lit);
    }
    for name in netlist.outputs() {
        g.add_output(name.clone(), net[name.as_str()]);
    }
    Ok(g.cleanup())
}

/// Gate alphabet used when exporting an AIG back to BENCH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateLibrary {
    /// AND gates, with NOT gates for complemented edges.
    AndNot,
    NandOnly,
    NorOnly,
    /// AND/NAND/OR/NOR chosen per node from its fan-in polarities, NOT otherwise.
    Mixed,
}

impl GateLibrary {
    pub const ALL: [GateLibrary; 4] =
        [GateLibrary::AndNot, GateLibrary::NandOnly, GateLibrary::NorOnly, GateLibrary::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            GateLibrary::AndNot => "AND_NOT",
            GateLibrary::NandOnly => "NAND_ONLY",
            GateLibrary::NorOnly => "NOR_ONLY",
            GateLibrary::Mixed => "MIXED",
        }
    }
}

impl fmt::Display for GateLibrary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateLibrary {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        GateLibrary::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown gate library `{s}`"))
    }
}

// Each node can be exported in two polarities: POS carries the node's value,
// NEG its complement. A literal refers to (node, polarity).
const POS: usize = 0;
const NEG: usize = 1;

#[derive(Clone, Copy)]
enum Operand {
    Lit(Lit),
    /// The other polarity of the node being emitted.
    Own(usize),
}

struct Recipe {
    kind: GateKind,
    args: Vec<Operand>,
}

fn recipe(kind: GateKind, args: &[Operand]) -> Recipe {
    Recipe { kind, args: args.to_vec() }
}

/// How `library` realizes polarity `pol` of `node`. `None` for the positive
/// polarity of a primary input, which is the input net itself.
fn node_recipe(library: GateLibrary, node: Node, first_input: Lit, pol: usize) -> Option<Recipe> {
    use GateKind::*;
    use Operand::{Lit as L, Own};
    let (a, b) = match node {
        Node::Input(_) if pol == POS => return None,
        Node::Input(_) => {
            return Some(match library {
                GateLibrary::NandOnly => recipe(Nand, &[Own(POS), Own(POS)]),
                GateLibrary::NorOnly => recipe(Nor, &[Own(POS), Own(POS)]),
                _ => recipe(Not, &[Own(POS)]),
            });
        }
        Node::Const => {
            let (x, nx) = (L(first_input), L(!first_input));
            return Some(match (library, pol) {
                (GateLibrary::NandOnly, NEG) => recipe(Nand, &[x, nx]),
                (GateLibrary::NandOnly, _) => recipe(Nand, &[Own(NEG), Own(NEG)]),
                (GateLibrary::NorOnly, POS) => recipe(Nor, &[x, nx]),
                (GateLibrary::NorOnly, _) => recipe(Nor, &[Own(POS), Own(POS)]),
                (_, POS) => recipe(And, &[x, nx]),
                (_, _) => recipe(Not, &[Own(POS)]),
            });
        }
        Node::And(a, b) => (a, b),
    };
    Some(match (library, pol) {
        (GateLibrary::AndNot, POS) => recipe(And, &[L(a), L(b)]),
        (GateLibrary::AndNot, _) => recipe(Not, &[Own(POS)]),
        (GateLibrary::NandOnly, NEG) => recipe(Nand, &[L(a), L(b)]),
        (GateLibrary::NandOnly, _) => recipe(Nand, &[Own(NEG), Own(NEG)]),
        (GateLibrary::NorOnly, POS) => recipe(Nor, &[L(!a), L(!b)]),
        (GateLibrary::NorOnly, _) => recipe(Nor, &[Own(POS), Own(POS)]),
        (GateLibrary::Mixed, _) => match (a.is_complemented(), b.is_complemented(), pol) {
            (false, false, POS) => recipe(And, &[L(a), L(b)]),
            (false, false, _) => recipe(Nand, &[L(a), L(b)]),
            (true, true, POS) => recipe(Nor, &[L(!a), L(!b)]),
            (true, true, _) => recipe(Or, &[L(!a), L(!b)]),
            (_, _, POS) => recipe(And, &[L(a), L(b)]),
            (_, _, _) => recipe(Not, &[Own(POS)]),
        },
    })
}

/// A gate driving output `name` from an existing net of the same value.
fn alias_recipe(library: GateLibrary, lit: Lit) -> Recipe {
    match library {
        GateLibrary::NandOnly => recipe(GateKind::Nand, &[Operand::Lit(!lit), Operand::Lit(!lit)]),
        GateLibrary::NorOnly => recipe(GateKind::Nor, &[Operand::Lit(!lit), Operand::Lit(!lit)]),
        _ => recipe(GateKind::Buf, &[Operand::Lit(lit)]),
    }
}

fn pol_of(l: Lit) -> usize {
    l.is_complemented() as usize
}

/// Exports `aig` as a netlist over `library`'s gate alphabet.
///
/// Internal nets are named `<prefix><node>` (and `<prefix><node>_n` for the
/// complement), with a prefix chosen not to clash with interface names.
/// Constants are realized as `x AND NOT x` over the first input (or the
/// library's equivalent); a graph with no inputs gets one extra input to
/// build them from.
pub fn to_netlist(aig: &Aig, library: GateLibrary) -> Netlist {
    let interface: HashSet<&str> =
        aig.input_names().chain(aig.outputs().iter().map(|(n, _)| n.as_str())).collect();
    let mut prefix = String::from("_n");
    while interface.iter().any(|n| n.starts_with(&prefix)) {
        prefix.insert(0, '_');
    }

    let mut input_names: Vec<String> = aig.input_names().map(str::to_string).collect();
    let first_input = if aig.n_inputs() > 0 {
        aig.input_lit(0)
    } else {
        // Placeholder node id one past the end; only used for constants.
        input_names.push(format!("{prefix}const_src"));
        Lit::new(aig.n_nodes() as NodeId, false)
    };
    let node_of = |id: usize| -> Node {
        if id < aig.n_nodes() {
            aig.nodes()[id]
        } else {
            Node::Input(usize::MAX)
        }
    };
    let n_slots = aig.n_nodes() + 1;

    // Output naming: the first output asking for a node polarity names that
    // net; later ones (and outputs of primary inputs) get an alias gate.
    let mut claimed: Vec<[Option<String>; 2]> = vec![[None, None]; n_slots];
    let mut aliases: Vec<(String, Lit)> = Vec::new();
    let input_name_set: HashSet<&str> = aig.input_names().collect();
    for (name, lit) in aig.outputs() {
        let node = aig.node(lit.node());
        if input_name_set.contains(name.as_str()) {
            // Same-named output and input: the output must be that input.
            debug_assert!(matches!(node, Node::Input(_)) && !lit.is_complemented());
            continue;
        }
        let is_pi_pos = matches!(node, Node::Input(_)) && !lit.is_complemented();
        let slot = &mut claimed[lit.index()][pol_of(*lit)];
        if !is_pi_pos && slot.is_none() {
            *slot = Some(name.clone());
        } else {
            aliases.push((name.clone(), *lit));
        }
    }

    // Demand propagation, highest node first.
    let mut demand = vec![[false; 2]; n_slots];
    for (id, c) in claimed.iter().enumerate() {
        for pol in [POS, NEG] {
            demand[id][pol] |= c[pol].is_some();
        }
    }
    for (_, lit) in &aliases {
        for op in alias_recipe(library, *lit).args {
            if let Operand::Lit(l) = op {
                demand[l.index()][pol_of(l)] = true;
            }
        }
    }
    for id in (0..n_slots).rev() {
        // Own-references close within the node first (at most one step).
        for _ in 0..2 {
            for pol in [POS, NEG] {
                if !demand[id][pol] {
                    continue;
                }
                if let Some(r) = node_recipe(library, node_of(id), first_input, pol) {
                    for op in &r.args {
                        match *op {
                            Operand::Own(p) => demand[id][p] = true,
                            Operand::Lit(l) => demand[l.index()][pol_of(l)] = true,
                        }
                    }
                }
            }
        }
    }

    let net_name = |id: usize, pol: usize| -> String {
        if let Some(n) = &claimed[id][pol] {
            return n.clone();
        }
        match node_of(id) {
            Node::Input(k) if pol == POS => {
                if k == usize::MAX {
                    input_names.last().unwrap().clone()
                } else {
                    aig.inputs()[k].1.clone()
                }
            }
            _ if pol == POS => format!("{prefix}{id}"),
            _ => format!("{prefix}{id}_n"),
        }
    };
    let operand_name = |id: usize, op: &Operand| -> String {
        match *op {
            Operand::Own(p) => net_name(id, p),
            Operand::Lit(l) => net_name(l.index(), pol_of(l)),
        }
    };

    // The placeholder constant source is emitted before everything else.
    let mut emit_order: Vec<usize> = Vec::with_capacity(n_slots);
    if aig.n_inputs() == 0 {
        emit_order.push(aig.n_nodes());
    }
    emit_order.extend(0..aig.n_nodes());

    let mut gates = Vec::new();
    for id in emit_order {
        let mut pols = vec![];
        for pol in [POS, NEG] {
            if demand[id][pol] {
                if let Some(r) = node_recipe(library, node_of(id), first_input, pol) {
                    pols.push((pol, r));
                }
            }
        }
        // Recipes without self-references go first.
        pols.sort_by_key(|(_, r)| r.args.iter().any(|a| matches!(a, Operand::Own(_))));
        for (pol, r) in pols {
            gates.push(Gate {
                output: net_name(id, pol),
                kind: r.kind,
                inputs: r.args.iter().map(|a| operand_name(id, a)).collect(),
            });
        }
    }
    for (name, lit) in &aliases {
        let r = alias_recipe(library, *lit);
        gates.push(Gate {
            output: name.clone(),
            kind: r.kind,
            inputs: r.args.iter().map(|a| operand_name(lit.index(), a)).collect(),
        });
    }

    let outputs = aig.outputs().iter().map(|(n, _)| n.clone()).collect();
    Netlist::new(aig.name(), input_names, outputs, gates).expect("exported netlist is well formed")
}
