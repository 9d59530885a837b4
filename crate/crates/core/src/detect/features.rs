use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::aig::from_netlist;
use crate::netlist::{GateKind, Netlist};
use crate::trojan::{estimate_signal_probs, Sampling};

/// Feature vector length.
pub const D: usize = 64;

/// Signal-probability thresholds counted by features 30..38.
pub const RARE_THRESHOLDS: [f64; 4] = [0.25, 0.1, 0.05, 0.01];

/// Human-readable name of every feature index, in order.
///
/// Counts that grow with circuit size are stored as `log2(1 + x)`.
pub const FEATURE_NAMES: [&str; D] = [
    "frac_and", "frac_nand", "frac_or", "frac_nor", "frac_xor", "frac_xnor", "frac_not", "frac_buf",
    "log_gates", "log_inputs", "log_outputs", "depth",
    "fanin_min", "fanin_q25", "fanin_q50", "fanin_q75", "fanin_max", "fanin_mean",
    "fanout_min", "fanout_q25", "fanout_q50", "fanout_q75", "fanout_max", "fanout_mean",
    "frac_fanout_1", "frac_fanout_ge4",
    "log_aig_ands", "aig_levels", "aig_ands_per_gate", "log_aig_ands_per_level",
    "log_rare_025", "log_rare_010", "log_rare_005", "log_rare_001",
    "frac_rare_025", "frac_rare_010", "frac_rare_005", "frac_rare_001",
    "aig_fanout_q50", "aig_fanout_q75", "aig_fanout_q90", "aig_fanout_max",
    "level_band_0", "level_band_1", "level_band_2", "level_band_3",
    "prob_bin_0", "prob_bin_1", "prob_bin_2", "prob_bin_3",
    "prob_bin_4", "prob_bin_5", "prob_bin_6", "prob_bin_7",
    "prob_mean", "prob_std",
    "frac_complemented_fanins", "frac_complemented_outputs", "mean_output_level",
    "log_gates_per_output", "frac_multi_fanout_ands", "frac_wide_gates",
    "inputs_per_output", "mean_gate_level",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Panics unless `values` has exactly [`D`] finite entries.
    pub fn new(values: Vec<f64>) -> Self {
        assert_eq!(values.len(), D, "feature vectors have {D} entries");
        assert!(values.iter().all(|v| v.is_finite()), "feature entries must be finite");
        FeatureVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

fn log1p2(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// Nearest-rank quantile of sorted data (`q = 0` is the minimum); 0 for
/// empty input.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Structural and probabilistic features of a circuit; see [`FEATURE_NAMES`].
/// Signal probabilities are exact up to 16 inputs, otherwise estimated from
/// 65,536 random vectors drawn with seed 0.
pub fn extract_features(c: &Netlist) -> FeatureVector {
    let mut f = Vec::with_capacity(D);
    let gates = c.gates();
    let n_gates = gates.len() as f64;

    let mut hist = [0usize; 8];
    for g in gates {
        hist[g.kind.index()] += 1;
    }
    debug_assert_eq!(GateKind::Buf.index(), 7);
    f.extend(hist.iter().map(|&h| ratio(h as f64, n_gates)));

    let levels = c.levels();
    let depth = levels.values().copied().max().unwrap_or(0) as f64;
    f.extend([
        log1p2(n_gates),
        log1p2(c.inputs().len() as f64),
        log1p2(c.outputs().len() as f64),
        depth,
    ]);

    let mut fanin: Vec<f64> = gates.iter().map(|g| g.inputs.len() as f64).collect();
    fanin.sort_by(f64::total_cmp);
    f.extend([0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&fanin, q)));
    f.push(mean(&fanin));

    let counts: HashMap<&str, usize> = c.fanout_counts();
    let mut fanout: Vec<f64> = c
        .inputs()
        .iter()
        .map(String::as_str)
        .chain(gates.iter().map(|g| g.output.as_str()))
        .map(|n| counts.get(n).copied().unwrap_or(0) as f64)
        .collect();
    fanout.sort_by(f64::total_cmp);
    f.extend([0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&fanout, q)));
    f.push(mean(&fanout));
    let n_nets = fanout.len() as f64;
    f.push(ratio(fanout.iter().filter(|&&x| x == 1.0).count() as f64, n_nets));
    f.push(ratio(fanout.iter().filter(|&&x| x >= 4.0).count() as f64, n_nets));

    let g = from_netlist(c).expect("validated netlist converts");
    let ands: Vec<usize> = (0..g.n_nodes()).filter(|&i| g.is_and(i as u32)).collect();
    let n_ands = ands.len() as f64;
    let aig_levels = g.levels();
    let out_levels: Vec<f64> = g.output_lits().map(|l| aig_levels[l.index()] as f64).collect();
    let max_level = out_levels.iter().copied().fold(0.0, f64::max);
    f.extend([
        log1p2(n_ands),
        max_level,
        ratio(n_ands, n_gates),
        log1p2(ratio(n_ands, max_level)),
    ]);

    let probs = estimate_signal_probs(&g, Sampling::auto(g.n_inputs()), 0);
    let and_probs: Vec<f64> = ands.iter().map(|&i| probs.probs[i]).collect();
    let rare: Vec<f64> = RARE_THRESHOLDS
        .iter()
        .map(|&t| ands.iter().filter(|&&i| probs.rarity(i as u32).1 < t).count() as f64)
        .collect();
    f.extend(rare.iter().map(|&r| log1p2(r)));
    f.extend(rare.iter().map(|&r| ratio(r, n_ands)));

    let fo = g.fanout_counts();
    let mut and_fanout: Vec<f64> = ands.iter().map(|&i| fo[i] as f64).collect();
    and_fanout.sort_by(f64::total_cmp);
    f.extend([0.5, 0.75, 0.9, 1.0].map(|q| quantile(&and_fanout, q)));

    let mut bands = [0.0; 4];
    for &i in &ands {
        let rel = ratio(aig_levels[i] as f64, max_level);
        bands[((rel * 4.0) as usize).min(3)] += 1.0;
    }
    f.extend(bands.map(|b| ratio(b, n_ands)));

    let mut bins = [0.0; 8];
    for &p in &and_probs {
        bins[((p * 8.0) as usize).min(7)] += 1.0;
    }
    f.extend(bins.map(|b| ratio(b, n_ands)));
    let pm = mean(&and_probs);
    let var = mean(&and_probs.iter().map(|p| (p - pm) * (p - pm)).collect::<Vec<_>>());
    f.extend([pm, var.sqrt()]);

    let compl = ands
        .iter()
        .filter_map(|&i| g.fanins(i as u32))
        .map(|(a, b)| a.is_complemented() as usize + b.is_complemented() as usize)
        .sum::<usize>() as f64;
    let n_out = g.n_outputs() as f64;
    f.extend([
        ratio(compl, 2.0 * n_ands),
        ratio(g.output_lits().filter(|l| l.is_complemented()).count() as f64, n_out),
        ratio(mean(&out_levels), max_level),
        log1p2(ratio(n_gates, n_out)),
        ratio(fo.iter().enumerate().filter(|&(i, &k)| k > 1 && g.is_and(i as u32)).count() as f64, n_ands),
        ratio(fanin.iter().filter(|&&k| k > 2.0).count() as f64, n_gates),
        ratio(c.inputs().len() as f64, n_out),
        ratio(mean(&gates.iter().map(|gt| levels[gt.output.as_str()] as f64).collect::<Vec<_>>()), depth),
    ]);
    FeatureVector::new(f)
}
