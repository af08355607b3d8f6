//! CNF formulas: DIMACS I/O, seeded random k-CNF generation and classical
//! evaluation.
//!
//! Random instances are drawn from a ChaCha8 stream seeded with
//! `ChaCha8Rng::seed_from_u64`, so an ensemble is reproducible from its
//! `(n, m, k, seed)` tuple on every platform.

use std::fmt::{self, Write as _};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("line {line}: malformed header, expected `p cnf <vars> <clauses>`")]
    MalformedHeader { line: usize },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: unparsable token `{token}`")]
    BadToken { line: usize, token: String },
    #[error("literal {literal} out of range for {num_vars} variables")]
    LiteralOutOfRange { literal: i64, num_vars: usize },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("empty clause (formula would be constant false)")]
    EmptyClause,
    #[error("clause width {k} exceeds variable count {n}")]
    WidthExceedsVars { k: usize, n: usize },
    #[error("formula needs at least one variable and one clause")]
    Degenerate,
    #[error("assignment has {got} bits, formula has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no phase-transition ratio known for k={0}; supply one")]
    UnknownRatio(usize),
}

/// A literal over 1-based variable indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: u32,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: u32) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: u32) -> Self {
        Literal { var, negated: true }
    }

    pub fn from_dimacs(v: i64) -> Self {
        Literal { var: v.unsigned_abs() as u32, negated: v < 0 }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    /// Value of the literal under `x`, where `x[0]` is variable 1.
    #[inline]
    pub fn eval(self, x: &[bool]) -> bool {
        x[self.var as usize - 1] != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

/// Result of normalizing a raw literal list.
#[derive(Debug, PartialEq, Eq)]
pub enum Normalized {
    Clause(Clause),
    /// Contains both `x` and `¬x`; always true.
    Tautology,
}

impl Clause {
    /// Builds a clause from distinct, non-complementary literals.
    pub fn new(literals: Vec<Literal>) -> Result<Self, CnfError> {
        match Self::normalize(literals)? {
            Normalized::Clause(c) => Ok(c),
            Normalized::Tautology => Err(CnfError::EmptyClause),
        }
    }

    /// Drops repeated literals (keeping first occurrence order) and detects
    /// tautologies.
    pub fn normalize(literals: Vec<Literal>) -> Result<Normalized, CnfError> {
        if literals.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        let mut out: Vec<Literal> = Vec::with_capacity(literals.len());
        for lit in literals {
            if out.iter().any(|l| l.var == lit.var && l.negated != lit.negated) {
                return Ok(Normalized::Tautology);
            }
            if !out.contains(&lit) {
                out.push(lit);
            }
        }
        Ok(Normalized::Clause(Clause { literals: out }))
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn eval(&self, x: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(x))
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.literals.iter().map(|l| l.var)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: usize,
    width: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        if num_vars == 0 || clauses.is_empty() {
            return Err(CnfError::Degenerate);
        }
        for c in &clauses {
            for l in c.literals() {
                if l.var == 0 || l.var as usize > num_vars {
                    return Err(CnfError::LiteralOutOfRange { literal: l.to_dimacs(), num_vars });
                }
            }
        }
        let width = clauses.iter().map(Clause::width).max().unwrap_or(0);
        Ok(CnfFormula { num_vars, width, clauses })
    }

    /// Convenience constructor from DIMACS-style signed integers.
    pub fn from_ints(num_vars: usize, clauses: &[&[i64]]) -> Result<Self, CnfError> {
        let clauses = clauses
            .iter()
            .map(|c| Clause::new(c.iter().map(|&v| Literal::from_dimacs(v)).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(num_vars, clauses)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Maximum clause width `k`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn evaluate(&self, x: &[bool]) -> Result<bool, CnfError> {
        if x.len() != self.num_vars {
            return Err(CnfError::LengthMismatch { expected: self.num_vars, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.eval(x))
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c.literals() {
                let _ = write!(s, "{} ", l.to_dimacs());
            }
            s.push_str("0\n");
        }
        s
    }
}

/// Parses DIMACS CNF. Repeated literals are merged; tautological clauses are
/// dropped after being counted against the header.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, CnfError> {
    let mut header: Option<(usize, usize)> = None;
    let mut raw: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" || header.is_some() {
                return Err(CnfError::MalformedHeader { line: lineno });
            }
            let n = parts[2].parse().map_err(|_| CnfError::MalformedHeader { line: lineno })?;
            let m = parts[3].parse().map_err(|_| CnfError::MalformedHeader { line: lineno })?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or(CnfError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| CnfError::BadToken { line: lineno, token: tok.to_string() })?;
            if v == 0 {
                if current.is_empty() {
                    return Err(CnfError::EmptyClause);
                }
                raw.push(std::mem::take(&mut current));
            } else {
                if v.unsigned_abs() as usize > n {
                    return Err(CnfError::LiteralOutOfRange { literal: v, num_vars: n });
                }
                current.push(Literal::from_dimacs(v));
            }
        }
    }
    let (n, m) = header.ok_or(CnfError::MissingHeader)?;
    if !current.is_empty() {
        // tolerate a missing final terminator
        raw.push(current);
    }
    if raw.len() != m {
        return Err(CnfError::ClauseCountMismatch { declared: m, found: raw.len() });
    }
    let mut clauses = Vec::with_capacity(m);
    for lits in raw {
        if let Normalized::Clause(c) = Clause::normalize(lits)? {
            clauses.push(c);
        }
    }
    CnfFormula::new(n, clauses)
}

/// Samples a random k-CNF: every clause picks `k` distinct variables
/// uniformly and negates each with probability 1/2. Clauses are independent,
/// so duplicates can occur.
pub fn random_kcnf(n: usize, m: usize, k: usize, seed: u64) -> Result<CnfFormula, CnfError> {
    if k > n {
        return Err(CnfError::WidthExceedsVars { k, n });
    }
    if n == 0 || m == 0 || k == 0 {
        return Err(CnfError::Degenerate);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u32> = (1..=n as u32).collect();
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        // partial Fisher-Yates over the persistent pool
        for i in 0..k {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        let lits = pool[..k].iter().map(|&v| Literal { var: v, negated: rng.gen::<bool>() }).collect();
        clauses.push(Clause { literals: lits });
    }
    CnfFormula::new(n, clauses)
}

/// Clause count at the satisfiability threshold: `⌊ratio·n⌋` with the
/// standard ratios 4.267 (k=3) and 9.931 (k=4) unless `ratio` overrides.
pub fn phase_transition_m(n: usize, k: usize, ratio: Option<f64>) -> Result<usize, CnfError> {
    let r = match (ratio, k) {
        (Some(r), _) => r,
        (None, 3) => 4.267,
        (None, 4) => 9.931,
        (None, _) => return Err(CnfError::UnknownRatio(k)),
    };
    Ok((r * n as f64).floor() as usize)
}
