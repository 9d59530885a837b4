//! Combinational equivalence checking: miters, Tseitin CNF and a CDCL
//! solver.

mod cnf;
pub mod sat;
mod sweep;

use thiserror::Error;

use crate::aig::{Aig, Lit};

pub use cnf::{sat_solve, sat_solve_with_budget, tseitin_cnf, AigSolver, Cnf, SatResult, VarMap};
pub use sat::{SatError, SatStatus};
pub use sweep::sweep_solve;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("conflict budget of {budget} exceeded")]
    ResourceLimit { budget: u64 },
}

impl EquivError {
    pub fn name(&self) -> &'static str {
        match self {
            EquivError::InterfaceMismatch(_) => "InterfaceMismatch",
            EquivError::ResourceLimit { .. } => "ResourceLimit",
        }
    }
}

impl From<SatError> for EquivError {
    fn from(e: SatError) -> Self {
        match e {
            SatError::ResourceLimit { budget } => EquivError::ResourceLimit { budget },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivResult {
    Equivalent,
    /// Input vector on which the two circuits produce different outputs.
    Counterexample(Vec<bool>),
}

impl EquivResult {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivResult::Equivalent)
    }
}

/// Both circuits copied over shared inputs, with the miter output
/// attached. `left`/`right` map the nodes of each circuit into `aig`.
#[derive(Debug, Clone)]
pub struct Miter {
    pub aig: Aig,
    pub left: Vec<Lit>,
    pub right: Vec<Lit>,
}

impl Miter {
    pub fn output(&self) -> Lit {
        self.aig.outputs()[0].1
    }
}

pub fn check_interfaces(a: &Aig, b: &Aig) -> Result<(), EquivError> {
    if a.n_inputs() != b.n_inputs() {
        return Err(EquivError::InterfaceMismatch(format!(
            "{} inputs vs {}",
            a.n_inputs(),
            b.n_inputs()
        )));
    }
    if let Some((x, y)) = a.input_names().zip(b.input_names()).find(|(x, y)| x != y) {
        return Err(EquivError::InterfaceMismatch(format!("input {x} vs {y}")));
    }
    if a.n_outputs() != b.n_outputs() {
        return Err(EquivError::InterfaceMismatch(format!(
            "{} outputs vs {}",
            a.n_outputs(),
            b.n_outputs()
        )));
    }
    Ok(())
}

/// Miter without cleanup, keeping the node maps of both sides.
pub fn miter_parts(a: &Aig, b: &Aig) -> Result<Miter, EquivError> {
    check_interfaces(a, b)?;
    let mut m = Aig::new("miter");
    let ins: Vec<Lit> = a.input_names().map(|n| m.add_input(n)).collect();
    let left = a.copy_into(&mut m, &ins);
    let right = b.copy_into(&mut m, &ins);
    let diffs: Vec<Lit> = a
        .output_lits()
        .zip(b.output_lits())
        .map(|(x, y)| {
            let (x, y) = (Aig::remap(&left, x), Aig::remap(&right, y));
            m.xor2(x, y)
        })
        .collect();
    let out = m.or_many(&diffs);
    m.add_output("miter", out);
    Ok(Miter { aig: m, left, right })
}

/// Single-output graph that is 1 exactly where some output of `a` and `b` differs.
pub fn build_miter(a: &Aig, b: &Aig) -> Result<Aig, EquivError> {
    Ok(miter_parts(a, b)?.aig.cleanup())
}

/// Number of 64-pattern words simulated before calling the solver.
const PRESIM_WORDS: usize = 16;

/// Conflicts allowed for the direct miter query before falling back to
/// SAT sweeping.
const DIRECT_BUDGET: u64 = 20_000;

pub fn check_equiv(a: &Aig, b: &Aig) -> Result<EquivResult, EquivError> {
    check_equiv_with_budget(a, b, Some(sat::DEFAULT_CONFLICT_BUDGET))
}

/// Equivalence check. Random simulation runs first so that most
/// non-equivalent pairs never reach the solver. The miter is then solved
/// directly; if that exhausts a small budget, SAT sweeping takes over with
/// the full `budget`. Every counterexample is replayed on both circuits
/// before it is returned.
pub fn check_equiv_with_budget(a: &Aig, b: &Aig, budget: Option<u64>) -> Result<EquivResult, EquivError> {
    let m = build_miter(a, b)?;
    let out = m.outputs()[0].1;
    if out == Lit::FALSE {
        return Ok(EquivResult::Equivalent);
    }
    let cex = match find_by_simulation(&m, out) {
        Some(v) => Some(v),
        None => {
            let mut s = AigSolver::new(&m);
            s.set_conflict_budget(Some(budget.map_or(DIRECT_BUDGET, |b| b.min(DIRECT_BUDGET))));
            match s.solve(&[out]) {
                Ok(r) => r,
                Err(_) if budget.map_or(true, |b| b > DIRECT_BUDGET) => sweep_solve(&m, budget)?,
                Err(e) => return Err(e.into()),
            }
        }
    };
    match cex {
        None => Ok(EquivResult::Equivalent),
        Some(v) => {
            let (ra, rb) = (a.simulate_vectors(&[v.clone()]), b.simulate_vectors(&[v.clone()]));
            assert_ne!(ra, rb, "counterexample failed to replay");
            Ok(EquivResult::Counterexample(v))
        }
    }
}

fn find_by_simulation(m: &Aig, out: Lit) -> Option<Vec<bool>> {
    let mut rng = crate::rng::SplitMix64::new(0);
    let words = crate::aig::random_input_words(m.n_inputs(), PRESIM_WORDS, &mut rng);
    let sim = m.simulate_wide(&words);
    let hits = sim.lit(out);
    let (w, word) = hits.iter().enumerate().find(|(_, w)| **w != 0)?;
    let bit = word.trailing_zeros();
    Some(words.iter().map(|iw| iw[w] >> bit & 1 == 1).collect())
}
