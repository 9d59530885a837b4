//! Shared fixtures for the criterion benches.

use std::path::PathBuf;

use seeker_core::equiv::Cnf;
use seeker_core::{parse_bench, Netlist, SplitMix64};

/// One of the ISCAS-85 circuits shipped with the core test data.
pub fn iscas(name: &str) -> Netlist {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../core/tests/data/iscas85/{name}.bench"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_bench(&text).expect("valid BENCH").with_name(name)
}

/// Uniform random 3-CNF with distinct variables per clause.
pub fn random_3cnf(seed: u64, n_vars: usize, n_clauses: usize) -> Cnf {
    let mut rng = SplitMix64::new(seed);
    let mut f = Cnf::new(n_vars);
    for _ in 0..n_clauses {
        let c: Vec<i32> = rng
            .sample_indices(n_vars, 3)
            .into_iter()
            .map(|v| if rng.next_bool() { -(v as i32 + 1) } else { v as i32 + 1 })
            .collect();
        f.add_clause(&c);
    }
    f
}
