//! Probabilistic Modus Ponens and the query sets used to evaluate embeddings.
//!
//! From `(A | Q1)[l1, u1]` and `(Q2 | A ⊓ Q1)[l2, u2]` one may conclude
//! `(Q2 | Q1)[l1·l2, min(1, u1·u2 + 1 − l1)]`.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::interval::ProbInterval;
use crate::ontology::{Concept, Conditional, TBox};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PmpError {
    #[error("malformed premise interval [{0}, {1}]")]
    Malformed(f64, f64),
    #[error("query fraction {0} outside (0, 1]")]
    Fraction(f64),
    #[error("no conditional has an atomic body")]
    NoGeneralConcept,
    #[error("no query has both premises available")]
    NoEligibleQueries,
    #[error("missing premise for query `{0}`")]
    MissingPremise(String),
}

/// Which upper bound to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpperBoundRule {
    /// `min(1, u1·u2 + 1 − l1)`.
    #[default]
    Proposition,
    /// `min(1, u1·u2 + 1 − l2)`, the variant printed in the evaluation
    /// pseudocode; identical inputs with point premises give `q1·q2 + 1 − q2`.
    Pseudocode,
}

fn check(l: f64, u: f64) -> Result<(), PmpError> {
    if (0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&u) && l <= u {
        Ok(())
    } else {
        Err(PmpError::Malformed(l, u))
    }
}

pub fn pmp(l1: f64, u1: f64, l2: f64, u2: f64) -> Result<ProbInterval, PmpError> {
    pmp_with(UpperBoundRule::Proposition, l1, u1, l2, u2)
}

pub fn pmp_with(rule: UpperBoundRule, l1: f64, u1: f64, l2: f64, u2: f64) -> Result<ProbInterval, PmpError> {
    check(l1, u1)?;
    check(l2, u2)?;
    let slack = match rule {
        UpperBoundRule::Proposition => 1.0 - l1,
        UpperBoundRule::Pseudocode => 1.0 - l2,
    };
    Ok(ProbInterval::Bounds {
        lower: l1 * l2,
        upper: (u1 * u2 + slack).min(1.0),
    })
}

/// A held-out query together with the two premises that license PMP.
#[derive(Debug, Clone, PartialEq)]
pub struct PmpPremises {
    /// The held-out conditional `(Q2 | Q1)[p]`.
    pub query: Conditional,
    pub mediator: Concept,
    /// `(A | Q1)`.
    pub premise1: Conditional,
    /// `(Q2 | A ⊓ Q1)`.
    pub premise2: Conditional,
}

impl PmpPremises {
    pub fn head(&self) -> &Concept {
        &self.query.head
    }

    pub fn body(&self) -> &Concept {
        &self.query.body
    }
}

fn is_meet_of(c: &Concept, a: &Concept, b: &Concept) -> bool {
    match c {
        Concept::And(l, r) => (**l == *a && **r == *b) || (**l == *b && **r == *a),
        _ => false,
    }
}

/// Finds premises for `(head | body)` in `t`, taking mediators in the order
/// their first premise appears. `skip` lists indices of `t` that may not
/// serve as premises.
fn premises_in(t: &TBox, head: &Concept, body: &Concept, skip: &HashSet<usize>) -> Option<(usize, usize)> {
    let conds = t.conditionals();
    for (i, p1) in conds.iter().enumerate() {
        if skip.contains(&i) || p1.body != *body || p1.head == *head || p1.head == *body {
            continue;
        }
        let found = conds
            .iter()
            .enumerate()
            .find(|(j, p2)| !skip.contains(j) && p2.head == *head && is_meet_of(&p2.body, &p1.head, body));
        if let Some((j, _)) = found {
            return Some((i, j));
        }
    }
    None
}

/// Looks up the premises of a query in a training TBox.
pub fn find_premises(training: &TBox, query: &Conditional) -> Result<PmpPremises, PmpError> {
    let (i, j) = premises_in(training, &query.head, &query.body, &HashSet::new())
        .ok_or_else(|| PmpError::MissingPremise(query.to_string()))?;
    let p1 = training.conditionals()[i].clone();
    Ok(PmpPremises {
        query: query.clone(),
        mediator: p1.head.clone(),
        premise1: p1,
        premise2: training.conditionals()[j].clone(),
    })
}

/// PMP interval for a query from its premises' bounds.
pub fn pmp_bounds_for_query(training: &TBox, q: &PmpPremises, rule: UpperBoundRule) -> Result<ProbInterval, PmpError> {
    let has = |c: &Conditional| training.iter().any(|t| t == c);
    if !has(&q.premise1) || !has(&q.premise2) {
        return Err(PmpError::MissingPremise(q.query.to_string()));
    }
    let (l1, u1) = q.premise1.bounds();
    let (l2, u2) = q.premise2.bounds();
    pmp_with(rule, l1, u1, l2, u2)
}

/// The atomic concept that is the body of the most conditionals; ties go to
/// the lexicographically smallest name.
pub fn most_general_concept(t: &TBox) -> Option<Concept> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in t {
        if let Some(name) = c.body.as_name() {
            *counts.entry(name).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    counts
        .into_iter()
        .find(|(_, n)| *n == best)
        .map(|(name, _)| Concept::atomic(name))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub queries: Vec<PmpPremises>,
    /// `t` without the queries, in the original order.
    pub training: TBox,
}

/// Samples `round(fraction · |D'|)` queries (at least one) from the
/// conditionals `D'` whose body is the most general concept.
///
/// Candidates are visited in a seeded random order. A candidate is accepted
/// if both premises exist among conditionals that are neither queries nor
/// the candidate itself; the first premise of every accepted query is then
/// kept out of the query set. Candidates without premises are passed over,
/// so fewer queries than requested are returned only when candidates run
/// out.
pub fn generate_query_set(t: &TBox, fraction: f64, seed: u64) -> Result<QuerySet, PmpError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PmpError::Fraction(fraction));
    }
    let general = most_general_concept(t).ok_or(PmpError::NoGeneralConcept)?;
    let mut candidates: Vec<usize> = t
        .iter()
        .enumerate()
        .filter(|(_, c)| c.body == general)
        .map(|(i, _)| i)
        .collect();
    let target = ((fraction * candidates.len() as f64).round() as usize).max(1);
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut chosen: Vec<(usize, usize, usize)> = Vec::new();
    let mut held_out: HashSet<usize> = HashSet::new();
    let mut protected: HashSet<usize> = HashSet::new();
    for &q in &candidates {
        if chosen.len() == target {
            break;
        }
        if protected.contains(&q) {
            continue;
        }
        let c = &t.conditionals()[q];
        held_out.insert(q);
        match premises_in(t, &c.head, &c.body, &held_out) {
            Some((p1, p2)) => {
                protected.insert(p1);
                chosen.push((q, p1, p2));
            }
            None => {
                held_out.remove(&q);
            }
        }
    }
    if chosen.is_empty() {
        return Err(PmpError::NoEligibleQueries);
    }
    chosen.sort_unstable();
    let conds = t.conditionals();
    let queries = chosen
        .iter()
        .map(|&(q, p1, p2)| PmpPremises {
            query: conds[q].clone(),
            mediator: conds[p1].head.clone(),
            premise1: conds[p1].clone(),
            premise2: conds[p2].clone(),
        })
        .collect();
    let training = conds
        .iter()
        .enumerate()
        .filter(|(i, _)| !held_out.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    Ok(QuerySet { queries, training })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::parse_tbox;
    use proptest::prelude::*;

    fn close(iv: ProbInterval, l: f64, u: f64) -> bool {
        let (a, b) = iv.bounds().unwrap();
        (a - l).abs() < 1e-12 && (b - u).abs() < 1e-12
    }

    #[test]
    fn rule_values() {
        assert!(close(pmp(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0, 1.0));
        assert!(close(pmp(1.0, 1.0, 0.3, 0.6).unwrap(), 0.3, 0.6));
        assert!(close(pmp(0.5, 0.6, 0.4, 0.7).unwrap(), 0.2, 0.92));
        assert!(close(pmp(0.5, 0.5, 0.5, 0.5).unwrap(), 0.25, 0.75));
        assert!(close(pmp(0.0, 0.0, 0.3, 0.3).unwrap(), 0.0, 1.0));
        assert!(close(pmp_with(UpperBoundRule::Pseudocode, 0.5, 0.5, 0.2, 0.2).unwrap(), 0.1, 0.9));
        assert!(pmp(0.6, 0.5, 0.1, 0.2).is_err());
        assert!(pmp(0.1, 1.5, 0.1, 0.2).is_err());
    }

    fn unit() -> impl Strategy<Value = (f64, f64)> {
        (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| (a.min(b), a.max(b)))
    }

    proptest! {
        #[test]
        fn output_is_valid_and_monotone((l1, u1) in unit(), (l2, u2) in unit(), w in unit(), v in unit()) {
            let inner = pmp(l1, u1, l2, u2).unwrap();
            let (lo, hi) = inner.bounds().unwrap();
            prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
            // Widening both premises.
            let outer = pmp(l1 * w.0, u1 + (1.0 - u1) * w.1, l2 * v.0, u2 + (1.0 - u2) * v.1).unwrap();
            prop_assert!(outer.contains(&inner, 1e-12));
        }
    }

    fn kb() -> TBox {
        parse_tbox(
            "cond 0.5 0.5 A | S\n\
             cond 0.4 0.4 B | S\n\
             cond 0.3 0.3 C | S\n\
             cond 0.2 0.2 B | (and A S)\n\
             cond 0.7 0.7 C | (and S A)\n\
             cond 0.1 0.1 A | B\n",
        )
        .unwrap()
    }

    #[test]
    fn general_concept() {
        assert_eq!(most_general_concept(&kb()), Some(Concept::atomic("S")));
        let tie = parse_tbox("cond 0.5 0.5 A | Y\ncond 0.5 0.5 A | X").unwrap();
        assert_eq!(most_general_concept(&tie), Some(Concept::atomic("X")));
        assert_eq!(most_general_concept(&TBox::new()), None);
    }

    #[test]
    fn premises_are_found_in_either_conjunct_order() {
        let t = kb();
        let q = &t.conditionals()[2];
        let p = find_premises(&t, q).unwrap();
        assert_eq!(p.mediator, Concept::atomic("A"));
        assert_eq!(p.premise2, t.conditionals()[4]);
        let iv = pmp_bounds_for_query(&t, &p, UpperBoundRule::Proposition).unwrap();
        assert!(close(iv, 0.35, 0.85));
    }

    #[test]
    fn query_sets() {
        let t = kb();
        for seed in 0..20 {
            let qs = generate_query_set(&t, 1.0, seed).unwrap();
            // (A | S) is the only possible first premise and is never held out.
            assert_eq!(qs.queries.len(), 2);
            assert_eq!(qs.training.len(), t.len() - 2);
            for q in &qs.queries {
                assert!(!qs.training.iter().any(|c| *c == q.query));
                assert!(qs.training.iter().any(|c| *c == q.premise1));
                assert!(qs.training.iter().any(|c| *c == q.premise2));
                assert_eq!(find_premises(&qs.training, &q.query).unwrap(), *q);
            }
        }
        let one = generate_query_set(&t, 0.3, 4).unwrap();
        assert_eq!(one.queries.len(), 1);
        assert_eq!(one, generate_query_set(&t, 0.3, 4).unwrap());
    }

    #[test]
    fn counts_follow_the_fraction() {
        let mut text = String::new();
        for i in 0..10 {
            text.push_str(&format!("cond 0.5 0.5 M | S\ncond 0.{i} 0.{i} H{i} | S\ncond 0.5 0.5 H{i} | (and M S)\n"));
        }
        let t = parse_tbox(&text).unwrap();
        let qs = generate_query_set(&t, 0.3, 1).unwrap();
        // Twenty conditionals have body S (ten copies of (M | S)).
        assert_eq!(qs.queries.len(), 6);
        assert_eq!(qs.training.len(), t.len() - 6);
    }

    #[test]
    fn query_set_errors() {
        let t = parse_tbox("cond 0.5 0.5 A | S\ncond 0.4 0.4 B | S").unwrap();
        assert_eq!(generate_query_set(&t, 1.0, 0), Err(PmpError::NoEligibleQueries));
        assert_eq!(generate_query_set(&t, 0.0, 0), Err(PmpError::Fraction(0.0)));
        assert_eq!(generate_query_set(&TBox::new(), 0.5, 0), Err(PmpError::NoGeneralConcept));
    }
}
