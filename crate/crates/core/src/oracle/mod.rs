//! Exact reasoning for TBoxes without existential restrictions.
//!
//! An interpretation of `k` concept names is summarized, up to scaling, by
//! how much of the domain falls into each of the `2^k` types (a type fixes
//! membership in every name). Every conditional becomes two homogeneous
//! linear constraints on these masses, and the tightest entailed interval of
//! a query is found by two linear programs after normalizing the mass of the
//! query body to 1.

pub mod brute;
pub mod lp;

use std::collections::BTreeSet;

use crate::interval::ProbInterval;
use crate::ontology::{Concept, Conditional, TBox};
use lp::{LinearProgram, LpOutcome, Relation, Sense};

pub use brute::{brute_force_bounds, brute_force_range};

/// Largest number of concept names the oracle accepts.
pub const MAX_NAMES: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("existential restrictions are not supported: `{0}`")]
    Roles(String),
    #[error("{0} concept names exceed the limit of {1}")]
    TooManyNames(usize, usize),
    #[error("the TBox is inconsistent")]
    Inconsistent,
    #[error("domain size {0} or name count {1} exceeds the enumeration limits")]
    LimitsExceeded(usize, usize),
    #[error("linear program unexpectedly unbounded")]
    Unbounded,
}

/// The `2^k` types over a list of concept names; type `t` contains name `i`
/// iff bit `i` of `t` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeSystem {
    names: Vec<String>,
}

impl TypeSystem {
    pub fn new(names: impl IntoIterator<Item = String>) -> Result<Self, OracleError> {
        let names: Vec<String> = names.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if names.len() > MAX_NAMES {
            return Err(OracleError::TooManyNames(names.len(), MAX_NAMES));
        }
        Ok(TypeSystem { names })
    }

    /// Types over the names of `t` and of the extra concepts.
    pub fn for_tbox<'a>(t: &TBox, extra: impl IntoIterator<Item = &'a Concept>) -> Result<Self, OracleError> {
        let mut concepts = t.signature().concepts.clone();
        let mut roles = t.signature().roles.clone();
        for c in extra {
            c.collect_names(&mut concepts, &mut roles);
        }
        if let Some(r) = roles.into_iter().next() {
            return Err(OracleError::Roles(r));
        }
        Self::new(concepts)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_types(&self) -> usize {
        1 << self.names.len()
    }

    /// Membership of every type in `c`.
    pub fn extension(&self, c: &Concept) -> Result<Vec<bool>, OracleError> {
        Ok(match c {
            Concept::Top => vec![true; self.num_types()],
            Concept::Atomic(name) => {
                let i = self.names.binary_search(name).expect("type system covers every name");
                (0..self.num_types()).map(|t| t >> i & 1 == 1).collect()
            }
            Concept::And(l, r) => {
                let (a, b) = (self.extension(l)?, self.extension(r)?);
                a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
            }
            Concept::Exists(..) => return Err(OracleError::Roles(c.to_string())),
        })
    }
}

/// Homogeneous constraints `Σ_t a_t · x_t ≤ 0` over type masses.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub types: TypeSystem,
    pub rows: Vec<Vec<f64>>,
}

/// `l·mass(C) − mass(C ⊓ D) ≤ 0` and `mass(C ⊓ D) − u·mass(C) ≤ 0` per conditional.
pub fn compile(t: &TBox, types: TypeSystem) -> Result<ConstraintSet, OracleError> {
    let mut rows = Vec::with_capacity(2 * t.len());
    for c in t {
        rows.extend(conditional_rows(c, &types)?);
    }
    Ok(ConstraintSet { types, rows })
}

fn conditional_rows(c: &Conditional, types: &TypeSystem) -> Result<[Vec<f64>; 2], OracleError> {
    let body = types.extension(&c.body)?;
    let head = types.extension(&c.head)?;
    let (l, u) = c.bounds();
    let mut lower = vec![0.0; types.num_types()];
    let mut upper = vec![0.0; types.num_types()];
    for t in 0..types.num_types() {
        if body[t] {
            let d = if head[t] { 1.0 } else { 0.0 };
            lower[t] = l - d;
            upper[t] = d - u;
        }
    }
    Ok([lower, upper])
}

impl ConstraintSet {
    fn program(&self, sense: Sense) -> LinearProgram {
        let mut lp = LinearProgram::new(self.types.num_types(), sense);
        for row in &self.rows {
            lp.add(row.clone(), Relation::Le, 0.0);
        }
        lp
    }

    fn indicator(ext: &[bool]) -> Vec<f64> {
        ext.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect()
    }

    /// True if some non-zero mass assignment satisfies every row.
    pub fn is_feasible(&self) -> bool {
        let mut lp = self.program(Sense::Minimize);
        lp.add(vec![1.0; self.types.num_types()], Relation::Eq, 1.0);
        !matches!(lp.solve(), LpOutcome::Infeasible)
    }

    /// Min and max of `mass(body ⊓ head)` subject to `mass(body) = scale`,
    /// divided by `scale`. `None` if the body must be empty.
    pub fn proportion_range(&self, head: &Concept, body: &Concept, scale: f64) -> Result<Option<(f64, f64)>, OracleError> {
        let b = self.types.extension(body)?;
        let h = self.types.extension(head)?;
        let meet: Vec<bool> = b.iter().zip(&h).map(|(x, y)| *x && *y).collect();
        let mut out = [0.0; 2];
        for (slot, sense) in out.iter_mut().zip([Sense::Minimize, Sense::Maximize]) {
            let mut lp = self.program(sense);
            lp.add(Self::indicator(&b), Relation::Eq, scale);
            lp.objective = Self::indicator(&meet);
            match lp.solve() {
                LpOutcome::Optimal { value, .. } => *slot = (value / scale).clamp(0.0, 1.0),
                LpOutcome::Infeasible => return Ok(None),
                LpOutcome::Unbounded => return Err(OracleError::Unbounded),
            }
        }
        Ok(Some((out[0], out[1].max(out[0]))))
    }
}

/// True iff `t` has a model (a non-empty finite interpretation).
pub fn check_consistency(t: &TBox) -> Result<bool, OracleError> {
    let types = TypeSystem::for_tbox(t, [])?;
    Ok(compile(t, types)?.is_feasible())
}

/// Tightest interval `[l, u]` such that `t` entails `(head | body)[l, u]`.
pub fn query_bounds(t: &TBox, head: &Concept, body: &Concept) -> Result<ProbInterval, OracleError> {
    query_bounds_with_scale(t, head, body, 1.0)
}

/// Same as [`query_bounds`] with the body mass normalized to `scale`; the
/// answer does not depend on `scale` because the constraints are homogeneous.
pub fn query_bounds_with_scale(t: &TBox, head: &Concept, body: &Concept, scale: f64) -> Result<ProbInterval, OracleError> {
    let types = TypeSystem::for_tbox(t, [head, body])?;
    let set = compile(t, types)?;
    if !set.is_feasible() {
        return Err(OracleError::Inconsistent);
    }
    Ok(match set.proportion_range(head, body, scale)? {
        Some((lower, upper)) => ProbInterval::Bounds { lower, upper },
        None => ProbInterval::Vacuous,
    })
}
