use std::fmt::Write as _;

use crate::aig::{Aig, Lit, Node};

use super::sat::{self, SatError, SatStatus, Solver};

/// Clause set over variables `1..=n_vars`, DIMACS-signed literals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub n_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn new(n_vars: usize) -> Self {
        Cnf { n_vars, clauses: Vec::new() }
    }

    pub fn add_clause(&mut self, clause: &[i32]) {
        debug_assert!(clause.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= self.n_vars));
        self.clauses.push(clause.to_vec());
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.n_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                write!(s, "{l} ").unwrap();
            }
            s.push_str("0\n");
        }
        s
    }

    /// Parses DIMACS text; `c` lines are comments.
    pub fn from_dimacs(text: &str) -> Result<Cnf, String> {
        let mut cnf: Option<Cnf> = None;
        let mut current = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 3 || f[0] != "cnf" {
                    return Err(format!("line {}: bad header", i + 1));
                }
                let n = f[1].parse().map_err(|_| format!("line {}: bad variable count", i + 1))?;
                cnf = Some(Cnf::new(n));
                continue;
            }
            let c = cnf.as_mut().ok_or_else(|| format!("line {}: clause before header", i + 1))?;
            for tok in line.split_whitespace() {
                let l: i32 = tok.parse().map_err(|_| format!("line {}: bad literal {tok}", i + 1))?;
                if l == 0 {
                    c.clauses.push(std::mem::take(&mut current));
                } else {
                    if l.unsigned_abs() as usize > c.n_vars {
                        return Err(format!("line {}: variable {} out of range", i + 1, l.abs()));
                    }
                    current.push(l);
                }
            }
        }
        let mut cnf = cnf.ok_or("missing header")?;
        if !current.is_empty() {
            cnf.clauses.push(current);
        }
        Ok(cnf)
    }

    /// Whether `model` (indexed by variable - 1) satisfies every clause.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatResult {
    pub status: SatStatus,
    /// Present iff satisfiable; indexed by variable - 1.
    pub model: Option<Vec<bool>>,
}

/// Solves `f` under DIMACS-signed `assumptions` with the default budget.
pub fn sat_solve(f: &Cnf, assumptions: &[i32]) -> Result<SatResult, SatError> {
    sat_solve_with_budget(f, assumptions, Some(sat::DEFAULT_CONFLICT_BUDGET))
}

pub fn sat_solve_with_budget(f: &Cnf, assumptions: &[i32], budget: Option<u64>) -> Result<SatResult, SatError> {
    let mut s = Solver::new();
    s.set_conflict_budget(budget);
    s.ensure_vars(f.n_vars);
    for c in &f.clauses {
        let lits: Vec<sat::Lit> = c.iter().map(|&l| sat::Lit::from_dimacs(l)).collect();
        if !s.add_clause(&lits) {
            break;
        }
    }
    let assumptions: Vec<sat::Lit> = assumptions.iter().map(|&l| sat::Lit::from_dimacs(l)).collect();
    let status = s.solve(&assumptions)?;
    let model = (status == SatStatus::Sat).then(|| {
        let mut m = s.model().to_vec();
        m.resize(f.n_vars, false);
        m
    });
    Ok(SatResult { status, model })
}

/// CNF variable of every AIG node that received one.
#[derive(Debug, Clone)]
pub struct VarMap {
    vars: Vec<Option<i32>>,
}

impl VarMap {
    pub fn var(&self, node: usize) -> Option<i32> {
        self.vars[node]
    }

    /// DIMACS literal for an AIG literal whose node has a variable.
    pub fn lit(&self, lit: Lit) -> i32 {
        let v = self.vars[lit.index()].expect("node has no CNF variable");
        if lit.is_complemented() {
            -v
        } else {
            v
        }
    }
}

/// Tseitin encoding: a variable per input and AND node (and for the
/// constant node when some AND or output refers to it), three clauses per
/// AND node, and a unit clause fixing the constant.
pub fn tseitin_cnf(g: &Aig) -> (Cnf, VarMap) {
    let const_used = g.nodes().iter().any(|n| matches!(n, Node::And(a, b) if a.index() == 0 || b.index() == 0))
        || g.output_lits().any(|l| l.index() == 0);
    let mut vars = vec![None; g.n_nodes()];
    let mut n = 0i32;
    for (i, node) in g.nodes().iter().enumerate() {
        if matches!(node, Node::Const) && !const_used {
            continue;
        }
        n += 1;
        vars[i] = Some(n);
    }
    let map = VarMap { vars };
    let mut cnf = Cnf::new(n as usize);
    if const_used {
        cnf.add_clause(&[-map.vars[0].unwrap()]);
    }
    for (i, node) in g.nodes().iter().enumerate() {
        if let Node::And(a, b) = *node {
            let y = map.vars[i].unwrap();
            let (la, lb) = (map.lit(a), map.lit(b));
            cnf.add_clause(&[-y, la]);
            cnf.add_clause(&[-y, lb]);
            cnf.add_clause(&[-la, -lb, y]);
        }
    }
    (cnf, map)
}

/// Incremental solver loaded with the Tseitin encoding of one graph.
/// Queries are phrased as assumptions on AIG literals; models come back as
/// primary input vectors.
#[derive(Debug, Clone)]
pub struct AigSolver {
    solver: Solver,
    map: VarMap,
    input_nodes: Vec<usize>,
}

impl AigSolver {
    pub fn new(g: &Aig) -> Self {
        let (cnf, map) = tseitin_cnf(g);
        let mut solver = Solver::new();
        solver.ensure_vars(cnf.n_vars);
        for c in &cnf.clauses {
            let lits: Vec<sat::Lit> = c.iter().map(|&l| sat::Lit::from_dimacs(l)).collect();
            solver.add_clause(&lits);
        }
        let input_nodes = g.inputs().iter().map(|(id, _)| *id as usize).collect();
        AigSolver { solver, map, input_nodes }
    }

    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.solver.set_conflict_budget(budget);
    }

    fn sat_lit(&self, l: Lit) -> Option<sat::Lit> {
        if l.is_const() && self.map.var(0).is_none() {
            return None;
        }
        Some(sat::Lit::from_dimacs(self.map.lit(l)))
    }

    /// Finds an input vector making every literal in `assume` true.
    pub fn solve(&mut self, assume: &[Lit]) -> Result<Option<Vec<bool>>, SatError> {
        let mut lits = Vec::with_capacity(assume.len());
        for &l in assume {
            match self.sat_lit(l) {
                Some(s) => lits.push(s),
                // Constant without a variable: TRUE is vacuous, FALSE is unsatisfiable.
                None if l == Lit::TRUE => {}
                None => return Ok(None),
            }
        }
        match self.solver.solve(&lits)? {
            SatStatus::Unsat => Ok(None),
            SatStatus::Sat => Ok(Some(
                self.input_nodes
                    .iter()
                    .map(|&n| self.solver.model_value(sat::Lit::from_dimacs(self.map.var(n).unwrap()).var()))
                    .collect(),
            )),
        }
    }

    pub fn conflicts(&self) -> u64 {
        self.solver.stats.conflicts
    }
}
