mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use seeker_core::aig::{extract_cone, Node};
use seeker_core::netlist::simulate;
use seeker_core::{check_equiv, from_netlist, to_netlist, GateLibrary};

use common::{all_rows, iscas, random_aig, random_netlist};

#[test]
fn iscas_conversion_round_trips_by_sat() {
    for name in ["c880", "c1355", "c1908"] {
        let n = iscas(name);
        let g = from_netlist(&n).unwrap();
        let back = from_netlist(&to_netlist(&g, GateLibrary::Mixed)).unwrap();
        assert!(check_equiv(&g, &back).unwrap().is_equivalent(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conversion_preserves_function(seed in any::<u64>(), n_in in 1usize..=10, n_gates in 1usize..40) {
        let n = random_netlist(seed, n_in, n_gates, 3);
        let g = from_netlist(&n).unwrap();
        let rows = all_rows(n_in);
        let want = simulate(&n, &rows).unwrap();
        prop_assert_eq!(&g.simulate_vectors(&rows), &want);
        for lib in GateLibrary::ALL {
            prop_assert_eq!(&simulate(&to_netlist(&g, lib), &rows).unwrap(), &want);
        }
    }

    #[test]
    fn strash_and_topological_ids(seed in any::<u64>(), n_ands in 1usize..150) {
        let g = random_aig(seed, 8, n_ands, 3);
        let mut pairs = HashSet::new();
        for (id, node) in g.nodes().iter().enumerate() {
            if let Node::And(a, b) = *node {
                prop_assert!(a.index() < id && b.index() < id);
                prop_assert!(pairs.insert((a.min(b), a.max(b))), "duplicate pair at {}", id);
            }
        }
        prop_assert!(g.check_invariants().is_ok());
    }

    #[test]
    fn cone_table_matches_simulation(seed in any::<u64>(), n_ands in 1usize..60) {
        let g = random_aig(seed, 6, n_ands, 1);
        let root = g.outputs()[0].1;
        let cone = extract_cone(&g, root, 16).unwrap();
        for row in all_rows(6) {
            let want = g.simulate_vectors(std::slice::from_ref(&row))[0][0];
            let idx = cone
                .support
                .iter()
                .enumerate()
                .map(|(k, &id)| {
                    let pos = g.inputs().iter().position(|(i, _)| *i == id).unwrap();
                    (row[pos] as usize) << k
                })
                .sum::<usize>();
            prop_assert_eq!(cone.table.bit(idx), want);
        }
    }
}
