//! Exhaustive search over small finite interpretations.
//!
//! Interpretations of `k` names over a domain of size `d` are counted up to
//! isomorphism by how many elements fall into each of the `2^k` types.

use super::{OracleError, TypeSystem};
use crate::interval::ProbInterval;
use crate::ontology::{Concept, TBox};

/// Enumeration limits of [`brute_force_bounds`].
pub const MAX_DOMAIN: usize = 5;
pub const MAX_BRUTE_NAMES: usize = 3;

/// Tolerance on the counting inequalities.
const EPS: f64 = 1e-12;

struct Compiled {
    /// Per conditional: body and head-and-body membership per type, bounds.
    conditionals: Vec<(Vec<bool>, Vec<bool>, f64, f64)>,
    body: Vec<bool>,
    meet: Vec<bool>,
}

fn compile(t: &TBox, head: &Concept, body: &Concept) -> Result<(TypeSystem, Compiled), OracleError> {
    let types = TypeSystem::for_tbox(t, [head, body])?;
    let both = |b: &[bool], h: &[bool]| -> Vec<bool> { b.iter().zip(h).map(|(x, y)| *x && *y).collect() };
    let mut conditionals = Vec::with_capacity(t.len());
    for c in t {
        let b = types.extension(&c.body)?;
        let m = both(&b, &types.extension(&c.head)?);
        conditionals.push((b, m, c.lower(), c.upper()));
    }
    let b = types.extension(body)?;
    let meet = both(&b, &types.extension(head)?);
    Ok((types, Compiled { conditionals, body: b, meet }))
}

fn mass(counts: &[usize], ext: &[bool]) -> usize {
    counts.iter().zip(ext).filter(|(_, e)| **e).map(|(c, _)| c).sum()
}

impl Compiled {
    fn satisfied(&self, counts: &[usize]) -> bool {
        self.conditionals.iter().all(|(b, m, l, u)| {
            let (nb, nm) = (mass(counts, b) as f64, mass(counts, m) as f64);
            nb == 0.0 || (l * nb <= nm + EPS && nm <= u * nb + EPS)
        })
    }
}

/// Calls `f` on every vector of `slots` non-negative counts summing to `total`.
fn compositions(slots: usize, total: usize, f: &mut impl FnMut(&[usize])) {
    fn go(counts: &mut Vec<usize>, i: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if i + 1 == counts.len() {
            counts[i] = left;
            f(counts);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            go(counts, i + 1, left - c, f);
        }
    }
    let mut counts = vec![0; slots];
    go(&mut counts, 0, total, f);
}

/// Range of `|head ∩ body| / |body|` over all models of `t` with domain
/// size `1..=max_domain` and non-empty body, or `None` if there is none.
/// The cost grows like `max_domain^(2^k)`; no limits are enforced.
pub fn brute_force_range(t: &TBox, head: &Concept, body: &Concept, max_domain: usize) -> Result<Option<(f64, f64)>, OracleError> {
    let (types, compiled) = compile(t, head, body)?;
    let mut range: Option<(f64, f64)> = None;
    for d in 1..=max_domain {
        compositions(types.num_types(), d, &mut |counts| {
            let nb = mass(counts, &compiled.body);
            if nb == 0 || !compiled.satisfied(counts) {
                return;
            }
            let p = mass(counts, &compiled.meet) as f64 / nb as f64;
            range = Some(match range {
                None => (p, p),
                Some((lo, hi)) => (lo.min(p), hi.max(p)),
            });
        });
    }
    Ok(range)
}

/// [`brute_force_range`] within the limits `max_domain ≤ 5` and at most
/// `max_names ≤ 3` names; `Vacuous` if no model with non-empty body exists
/// at these sizes.
pub fn brute_force_bounds(
    t: &TBox,
    head: &Concept,
    body: &Concept,
    max_domain: usize,
    max_names: usize,
) -> Result<ProbInterval, OracleError> {
    let k = TypeSystem::for_tbox(t, [head, body])?.names().len();
    if max_domain > MAX_DOMAIN || max_names > MAX_BRUTE_NAMES || k > max_names {
        return Err(OracleError::LimitsExceeded(max_domain, k.max(max_names)));
    }
    Ok(match brute_force_range(t, head, body, max_domain)? {
        Some((lower, upper)) => ProbInterval::Bounds { lower, upper },
        None => ProbInterval::Vacuous,
    })
}
