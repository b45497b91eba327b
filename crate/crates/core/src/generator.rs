//! Synthetic TBoxes read off a random finite interpretation.
//!
//! Concepts form a random hierarchy: `C0` is the whole domain and every
//! other concept is a random subset of a random earlier concept. Each role
//! links some members of a domain concept to members of a range concept.
//! The TBox lists every conditional of the four supported shapes together
//! with its exact proportion in that interpretation, so the interpretation
//! is a model of the TBox.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ontology::{Concept, Conditional, TBox};

/// Resampling attempts for a concept that came out empty.
const MAX_RETRIES: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("at least 2 concepts are required")]
    TooFewConcepts,
    #[error("the domain must have at least 10 elements")]
    DomainTooSmall,
    #[error("could not sample a non-empty extension for `{0}`")]
    Degenerate(String),
    #[error("slack {0} outside [0, 1]")]
    Slack(f64),
    #[error("role probability {0} outside [0, 1]")]
    RoleProbability(f64),
    #[error("unknown name `{0}` in ground truth query")]
    UnknownName(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub concepts: usize,
    pub roles: usize,
    pub domain: usize,
    pub seed: u64,
    /// Emitted intervals are `[p − slack, p + slack]` clipped to `[0, 1]`.
    pub slack: f64,
    /// Chance that a member of a role's domain concept has successors.
    pub role_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            concepts: 20,
            roles: 2,
            domain: 1000,
            seed: 0,
            slack: 0.0,
            role_probability: 0.5,
        }
    }
}

/// A finite interpretation over the elements `0..domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub domain: usize,
    /// Sorted members of each concept.
    pub concepts: BTreeMap<String, Vec<usize>>,
    /// Sorted pairs of each role.
    pub roles: BTreeMap<String, Vec<(usize, usize)>>,
    /// The concept each non-root concept was sampled from.
    pub parents: BTreeMap<String, String>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GenError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Membership vector of `c`.
    pub fn extension(&self, c: &Concept) -> Result<Vec<bool>, GenError> {
        Ok(match c {
            Concept::Top => vec![true; self.domain],
            Concept::Atomic(name) => {
                let members = self.concepts.get(name).ok_or_else(|| GenError::UnknownName(name.clone()))?;
                let mut v = vec![false; self.domain];
                for &x in members {
                    v[x] = true;
                }
                v
            }
            Concept::And(l, r) => {
                let (a, b) = (self.extension(l)?, self.extension(r)?);
                a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
            }
            Concept::Exists(role, filler) => {
                let pairs = self.roles.get(role).ok_or_else(|| GenError::UnknownName(role.clone()))?;
                let f = self.extension(filler)?;
                let mut v = vec![false; self.domain];
                for &(x, y) in pairs {
                    if f[y] {
                        v[x] = true;
                    }
                }
                v
            }
        })
    }

    /// `|head ∩ body| / |body|`, or `None` for an empty body.
    pub fn proportion(&self, head: &Concept, body: &Concept) -> Result<Option<f64>, GenError> {
        let (b, h) = (self.extension(body)?, self.extension(head)?);
        Ok(ratio(&b, &h))
    }

    /// True if the conditional holds by counting (empty bodies hold vacuously).
    pub fn satisfies(&self, c: &Conditional) -> Result<bool, GenError> {
        let (b, h) = (self.extension(&c.body)?, self.extension(&c.head)?);
        let nb = b.iter().filter(|x| **x).count() as f64;
        let nm = b.iter().zip(&h).filter(|(x, y)| **x && **y).count() as f64;
        Ok(nb == 0.0 || (c.lower() * nb <= nm + 1e-9 && nm <= c.upper() * nb + 1e-9))
    }
}

fn count(v: &[bool]) -> usize {
    v.iter().filter(|x| **x).count()
}

fn ratio(body: &[bool], head: &[bool]) -> Option<f64> {
    let nb = count(body);
    if nb == 0 {
        return None;
    }
    let nm = body.iter().zip(head).filter(|(x, y)| **x && **y).count();
    Some(nm as f64 / nb as f64)
}

fn sample_subset(rng: &mut ChaCha8Rng, parent: &[usize], domain: usize, name: &str) -> Result<Vec<bool>, GenError> {
    for _ in 0..MAX_RETRIES {
        let q = rng.gen_range(0.2..=0.8);
        let mut ext = vec![false; domain];
        for &x in parent {
            ext[x] = rng.gen_bool(q);
        }
        if ext.iter().any(|x| *x) {
            return Ok(ext);
        }
    }
    Err(GenError::Degenerate(name.to_string()))
}

fn members(ext: &[bool]) -> Vec<usize> {
    ext.iter().enumerate().filter(|(_, x)| **x).map(|(i, _)| i).collect()
}

/// Samples a ground truth interpretation.
pub fn sample_ground_truth(cfg: &GeneratorConfig) -> Result<GroundTruth, GenError> {
    if cfg.concepts < 2 {
        return Err(GenError::TooFewConcepts);
    }
    if cfg.domain < 10 {
        return Err(GenError::DomainTooSmall);
    }
    if !(0.0..=1.0).contains(&cfg.role_probability) {
        return Err(GenError::RoleProbability(cfg.role_probability));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names: Vec<String> = (0..cfg.concepts).map(|i| format!("C{i}")).collect();
    let mut exts: Vec<Vec<usize>> = vec![(0..cfg.domain).collect()];
    let mut parents = BTreeMap::new();
    for name in names.iter().skip(1) {
        let p = rng.gen_range(0..exts.len());
        let ext = sample_subset(&mut rng, &exts[p], cfg.domain, name)?;
        parents.insert(name.clone(), names[p].clone());
        exts.push(members(&ext));
    }
    let mut roles = BTreeMap::new();
    for r in 0..cfg.roles {
        let dom = rng.gen_range(0..exts.len());
        let range = rng.gen_range(0..exts.len());
        let mut pairs = Vec::new();
        for &x in &exts[dom] {
            if rng.gen_bool(cfg.role_probability) {
                let n = rng.gen_range(1..=3);
                for &y in exts[range].choose_multiple(&mut rng, n) {
                    pairs.push((x, y));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        roles.insert(format!("r{r}"), pairs);
    }
    Ok(GroundTruth {
        domain: cfg.domain,
        concepts: names.into_iter().zip(exts).collect(),
        roles,
        parents,
    })
}

fn ancestors(gt: &GroundTruth, name: &str) -> Vec<String> {
    let mut out = vec![name.to_string()];
    let mut cur = name;
    while let Some(p) = gt.parents.get(cur) {
        out.push(p.clone());
        cur = p;
    }
    out
}

/// True if `A` and `B` are disjoint only because some pair of their
/// ancestors (other than the pair itself) already is.
fn implied_disjoint(gt: &GroundTruth, exts: &BTreeMap<&str, Vec<bool>>, a: &str, b: &str) -> bool {
    let (aa, bb) = (ancestors(gt, a), ancestors(gt, b));
    aa.iter().any(|x| {
        bb.iter().any(|y| {
            (x != a || y != b) && !exts[x.as_str()].iter().zip(&exts[y.as_str()]).any(|(p, q)| *p && *q)
        })
    })
}

fn emit(t: &mut TBox, head: Concept, body: Concept, p: f64, slack: f64) {
    let (l, u) = ((p - slack).max(0.0), (p + slack).min(1.0));
    t.push(Conditional::new(head, body, l, u).expect("proportions lie in [0, 1]"));
}

/// Every supported conditional with a defined, non-redundant proportion in `gt`.
pub fn conditionals_of(gt: &GroundTruth, slack: f64) -> TBox {
    let names: Vec<&str> = gt.concepts.keys().map(String::as_str).collect();
    let exts: BTreeMap<&str, Vec<bool>> = names
        .iter()
        .map(|n| (*n, gt.extension(&Concept::atomic(*n)).expect("own name")))
        .collect();
    let atom = |n: &str| Concept::atomic(n);
    let mut t = TBox::new();

    for &a in &names {
        for &b in &names {
            if a == b {
                continue;
            }
            let p = ratio(&exts[a], &exts[b]).expect("concepts are non-empty");
            if p == 0.0 && implied_disjoint(gt, &exts, a, b) {
                continue;
            }
            emit(&mut t, atom(b), atom(a), p, slack);
        }
    }
    for (i, &a1) in names.iter().enumerate() {
        for &a2 in &names[i + 1..] {
            let body: Vec<bool> = exts[a1].iter().zip(&exts[a2]).map(|(x, y)| *x && *y).collect();
            if count(&body) == 0 {
                continue;
            }
            for &b in &names {
                if b == a1 || b == a2 {
                    continue;
                }
                let p = ratio(&body, &exts[b]).expect("non-empty body");
                emit(&mut t, atom(b), Concept::and(atom(a1), atom(a2)), p, slack);
            }
        }
    }
    for role in gt.roles.keys() {
        for &a in &names {
            let some = gt.extension(&Concept::exists(role.as_str(), atom(a))).expect("own names");
            if count(&some) == 0 {
                continue;
            }
            for &b in &names {
                let p = ratio(&some, &exts[b]).expect("non-empty body");
                emit(&mut t, atom(b), Concept::exists(role.as_str(), atom(a)), p, slack);
            }
        }
    }
    for role in gt.roles.keys() {
        for &b in &names {
            let some = gt.extension(&Concept::exists(role.as_str(), atom(b))).expect("own names");
            for &a in &names {
                let p = ratio(&exts[a], &some).expect("concepts are non-empty");
                emit(&mut t, Concept::exists(role.as_str(), atom(b)), atom(a), p, slack);
            }
        }
    }
    t
}

/// Samples a ground truth and reads its TBox off it.
pub fn generate(cfg: &GeneratorConfig) -> Result<(GroundTruth, TBox), GenError> {
    if !(0.0..=1.0).contains(&cfg.slack) {
        return Err(GenError::Slack(cfg.slack));
    }
    let gt = sample_ground_truth(cfg)?;
    let t = conditionals_of(&gt, cfg.slack);
    Ok((gt, t))
}

/// The conditionals that mention no role.
pub fn role_free_projection(t: &TBox) -> TBox {
    t.iter()
        .filter(|c| !c.body.has_roles() && !c.head.has_roles())
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{parse_tbox, Shape};

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            concepts: 6,
            roles: 1,
            domain: 60,
            seed,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let (g1, t1) = generate(&small(3)).unwrap();
        let (g2, t2) = generate(&small(3)).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(t1, t2);
        assert_ne!(t1, generate(&small(4)).unwrap().1);
    }

    #[test]
    fn witness_property() {
        for seed in 0..5 {
            let (gt, t) = generate(&small(seed)).unwrap();
            assert!(!t.is_empty());
            for c in &t {
                assert!(gt.satisfies(c).unwrap(), "{c}");
                let p = gt.proportion(&c.head, &c.body).unwrap().expect("defined proportion");
                assert_eq!(c.bounds(), (p, p));
            }
        }
    }

    #[test]
    fn hierarchy_and_nonempty_concepts() {
        let gt = sample_ground_truth(&small(1)).unwrap();
        assert_eq!(gt.concepts["C0"].len(), 60);
        for (child, parent) in &gt.parents {
            let p = &gt.concepts[parent];
            assert!(!gt.concepts[child].is_empty());
            assert!(gt.concepts[child].iter().all(|x| p.binary_search(x).is_ok()));
        }
    }

    #[test]
    fn counting_example() {
        let mut gt = GroundTruth {
            domain: 20,
            concepts: BTreeMap::new(),
            roles: BTreeMap::new(),
            parents: BTreeMap::new(),
        };
        gt.concepts.insert("A".into(), (0..10).collect());
        gt.concepts.insert("B".into(), vec![0, 1, 2, 15]);
        gt.concepts.insert("D".into(), vec![16, 17]);
        let t = conditionals_of(&gt, 0.0);
        let text = crate::ontology::serialize_tbox(&t);
        assert!(text.contains("cond 0.3 0.3 B | A\n"), "{text}");
        // A ⊓ D is empty, so no conditional has it as body.
        assert!(!t.iter().any(|c| c.body == Concept::and(Concept::atomic("A"), Concept::atomic("D"))));
    }

    #[test]
    fn redundant_disjointness_is_dropped() {
        let mut gt = GroundTruth {
            domain: 12,
            concepts: BTreeMap::new(),
            roles: BTreeMap::new(),
            parents: BTreeMap::new(),
        };
        gt.concepts.insert("P".into(), (0..6).collect());
        gt.concepts.insert("Q".into(), (6..12).collect());
        gt.concepts.insert("P1".into(), vec![0, 1]);
        gt.parents.insert("P1".into(), "P".into());
        let t = conditionals_of(&gt, 0.0);
        let has = |h: &str, b: &str| t.iter().any(|c| c.head == Concept::atomic(h) && c.body == Concept::atomic(b));
        assert!(has("Q", "P"));
        assert!(!has("Q", "P1"));
        assert!(!has("P1", "Q"));
        assert!(has("P1", "P"));
    }

    #[test]
    fn slack_widens_intervals() {
        let cfg = GeneratorConfig { slack: 0.05, ..small(2) };
        let (gt, t) = generate(&cfg).unwrap();
        for c in &t {
            let p = gt.proportion(&c.head, &c.body).unwrap().unwrap();
            assert!(c.lower() <= p && p <= c.upper());
            assert!(c.upper() - c.lower() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn all_shapes_appear() {
        let (_, t) = generate(&small(0)).unwrap();
        for shape in [Shape::Pnf1, Shape::Pnf2, Shape::Pnf3, Shape::Pnf4] {
            assert!(t.iter().any(|c| c.shape() == shape), "{shape:?}");
        }
        assert!(t.iter().all(|c| c.shape() != Shape::Other));
    }

    #[test]
    fn projection() {
        let t = parse_tbox("cond 0.1 0.1 B | A\ncond 0.2 0.2 B | (and A C)\ncond 0.3 0.3 B | (some r A)\ncond 0.4 0.4 (some r B) | A").unwrap();
        let p = role_free_projection(&t);
        assert_eq!(p.conditionals(), &t.conditionals()[..2]);
        let only_roles: TBox = t.iter().skip(2).cloned().collect();
        assert!(role_free_projection(&only_roles).is_empty());
        assert_eq!(role_free_projection(&p), p);
    }

    #[test]
    fn json_round_trip() {
        let gt = sample_ground_truth(&small(5)).unwrap();
        assert_eq!(GroundTruth::from_json(&gt.to_json()).unwrap(), gt);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(generate(&GeneratorConfig { concepts: 1, ..small(0) }), Err(GenError::TooFewConcepts)));
        assert!(matches!(generate(&GeneratorConfig { domain: 9, ..small(0) }), Err(GenError::DomainTooSmall)));
    }
}
