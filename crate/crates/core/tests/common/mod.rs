//! Test fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use seeker_core::netlist::simulate;
use seeker_core::{parse_bench, Aig, Gate, GateKind, Lit, Netlist, SplitMix64};

pub const ISCAS: [&str; 8] = ["c880", "c1355", "c1908", "c2670", "c3540", "c5315", "c6288", "c7552"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/iscas85")
}

pub fn iscas(name: &str) -> Netlist {
    let text = std::fs::read_to_string(data_dir().join(format!("{name}.bench"))).unwrap();
    parse_bench(&text).unwrap().with_name(name)
}

/// Random AIG: `n_ands` gates over uniformly chosen earlier signals with
/// random polarities; outputs are the last gates.
pub fn random_aig(seed: u64, n_inputs: usize, n_ands: usize, n_outputs: usize) -> Aig {
    let mut rng = SplitMix64::new(seed);
    let mut g = Aig::new(format!("rand{seed}"));
    let mut sig: Vec<Lit> = (0..n_inputs).map(|i| g.add_input(format!("i{i}"))).collect();
    let mut made = Vec::new();
    while made.len() < n_ands {
        let a = sig[rng.below_usize(sig.len())].negate_if(rng.next_bool());
        let b = sig[rng.below_usize(sig.len())].negate_if(rng.next_bool());
        let y = g.and2(a, b);
        if y.is_const() || sig.contains(&y.regular()) {
            // keep trying so the gate count is exact
            if rng.below(8) == 0 {
                made.push(y);
            }
            continue;
        }
        sig.push(y.regular());
        made.push(y);
    }
    for (k, &l) in made.iter().rev().take(n_outputs).enumerate() {
        g.add_output(format!("o{k}"), l);
    }
    g
}

/// Random valid netlist over every gate kind. Gates read earlier nets
/// only; the last `n_outputs` nets (or inputs, if there are no gates) are
/// outputs.
pub fn random_netlist(seed: u64, n_inputs: usize, n_gates: usize, n_outputs: usize) -> Netlist {
    let mut rng = SplitMix64::new(seed);
    let inputs: Vec<String> = (0..n_inputs).map(|i| format!("x{i}")).collect();
    let mut nets = inputs.clone();
    let mut gates = Vec::new();
    for k in 0..n_gates {
        let kind = GateKind::ALL[rng.below_usize(GateKind::ALL.len())];
        let arity = if kind.is_unary() { 1 } else { 2 + rng.below_usize(3) };
        let args: Vec<String> = (0..arity).map(|_| nets[rng.below_usize(nets.len())].clone()).collect();
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let name = format!("g{k}");
        gates.push(Gate::new(name.clone(), kind, &refs));
        nets.push(name);
    }
    let outputs = nets.iter().rev().take(n_outputs).cloned().collect();
    Netlist::new(format!("rn{seed}"), inputs, outputs, gates).unwrap()
}

/// Tree-walking interpreter: evaluates each output by recursion over the
/// driver of every net, without any levelization or bit-parallelism.
pub fn naive_eval(n: &Netlist, row: &[bool]) -> Vec<bool> {
    let drivers: HashMap<&str, &Gate> = n.gates().iter().map(|g| (g.output.as_str(), g)).collect();
    let pis: HashMap<&str, bool> = n.inputs().iter().map(String::as_str).zip(row.iter().copied()).collect();
    fn eval(net: &str, d: &HashMap<&str, &Gate>, pis: &HashMap<&str, bool>) -> bool {
        if let Some(&v) = pis.get(net) {
            return v;
        }
        let g = d[net];
        let a: Vec<bool> = g.inputs.iter().map(|i| eval(i, d, pis)).collect();
        let and = a.iter().all(|&b| b);
        let or = a.iter().any(|&b| b);
        let xor = a.iter().filter(|&&b| b).count() % 2 == 1;
        match g.kind {
            GateKind::And => and,
            GateKind::Nand => !and,
            GateKind::Or => or,
            GateKind::Nor => !or,
            GateKind::Xor => xor,
            GateKind::Xnor => !xor,
            GateKind::Not => !a[0],
            GateKind::Buf => a[0],
        }
    }
    n.outputs().iter().map(|o| eval(o, &drivers, &pis)).collect()
}

/// Every 2^n input row, input 0 as the least significant bit.
pub fn all_rows(n: usize) -> Vec<Vec<bool>> {
    (0..1u64 << n).map(|r| (0..n).map(|i| (r >> i) & 1 == 1).collect()).collect()
}

/// Gate-level simulation of a netlist on explicit rows (independent of the AIG).
pub fn netlist_eval(n: &Netlist, row: &[bool]) -> Vec<bool> {
    simulate(n, &[row.to_vec()]).unwrap().remove(0)
}

/// Random 3-CNF over `n_vars` variables in DIMACS literals.
pub fn random_3cnf(rng: &mut SplitMix64, n_vars: usize, n_clauses: usize) -> Vec<[i32; 3]> {
    (0..n_clauses)
        .map(|_| {
            let v = rng.sample_indices(n_vars, 3);
            [0, 1, 2].map(|j| {
                let x = v[j] as i32 + 1;
                if rng.next_bool() {
                    -x
                } else {
                    x
                }
            })
        })
        .collect()
}

/// Exhaustive satisfiability over all `2^n` assignments, 64 at a time.
/// Variables 1..=6 vary inside a word, the rest across words.
pub fn brute_force_sat(n_vars: usize, clauses: &[[i32; 3]]) -> bool {
    assert!((6..=24).contains(&n_vars));
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    for w in 0u64..(1 << (n_vars - 6)) {
        let value = |lit: i32| -> u64 {
            let v = lit.unsigned_abs() as usize - 1;
            let word = if v < 6 {
                LOW[v]
            } else if (w >> (v - 6)) & 1 == 1 {
                !0
            } else {
                0
            };
            if lit < 0 {
                !word
            } else {
                word
            }
        };
        let mut all = !0u64;
        for c in clauses {
            all &= value(c[0]) | value(c[1]) | value(c[2]);
            if all == 0 {
                break;
            }
        }
        if all != 0 {
            return true;
        }
    }
    false
}

/// Eigenvalues of a symmetric matrix, ascending, by Householder reduction
/// to tridiagonal form followed by Sturm-sequence bisection.
pub fn oracle_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| m[i][k]).collect();
        let alpha = -x[0].signum() * x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let mut v = x.clone();
        v[0] -= alpha;
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|t| *t /= norm);
        // H = I - 2 v vᵀ on rows/cols k+1..n; m <- H m H
        let full = |i: usize| if i > k { v[i - k - 1] } else { 0.0 };
        let p: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * full(j)).sum()).collect();
        let vp: f64 = (0..n).map(|i| full(i) * p[i]).sum();
        let q: Vec<f64> = (0..n).map(|i| 2.0 * p[i] - 2.0 * vp * full(i)).collect();
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= full(i) * q[j] + q[i] * full(j);
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let e: Vec<f64> = (1..n).map(|i| m[i][i - 1]).collect();
    // number of eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1e-300) } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let radius = (0..n)
        .map(|i| d[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 })
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-radius, radius);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}
