//! Concepts, conditionals and TBoxes of Statistical EL.
//!
//! A conditional `(D | C)[l, u]` states that the proportion of `C`s that are
//! also `D`s lies in `[l, u]`. Deterministic conditionals (`l = u = 1`) are
//! ordinary concept inclusions `C ⊑ D`.

mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use parse::{parse_concept, parse_query, parse_tbox, parse_tbox_with, ParseError, ParseOptions};

/// Prefix reserved for names introduced by normalization.
pub const FRESH_PREFIX: &str = "_N";

/// Returns true if `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn is_reserved_name(name: &str) -> bool {
    name.starts_with(FRESH_PREFIX)
}

/// An EL concept description.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Top,
    Atomic(String),
    And(Box<Concept>, Box<Concept>),
    Exists(String, Box<Concept>),
}

impl Concept {
    pub fn atomic(name: impl Into<String>) -> Self {
        Concept::Atomic(name.into())
    }

    pub fn and(left: Concept, right: Concept) -> Self {
        Concept::And(Box::new(left), Box::new(right))
    }

    pub fn exists(role: impl Into<String>, filler: Concept) -> Self {
        Concept::Exists(role.into(), Box::new(filler))
    }

    /// Number of constructors. Names and `top` count one.
    pub fn size(&self) -> usize {
        match self {
            Concept::Top | Concept::Atomic(_) => 1,
            Concept::And(l, r) => 1 + l.size() + r.size(),
            Concept::Exists(_, c) => 1 + c.size(),
        }
    }

    /// Concept names and `top` are atomic; everything else is complex.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Concept::Top | Concept::Atomic(_))
    }

    pub fn as_name(&self) -> Option<&str> {
        match self {
            Concept::Atomic(name) => Some(name),
            _ => None,
        }
    }

    pub fn has_roles(&self) -> bool {
        match self {
            Concept::Top | Concept::Atomic(_) => false,
            Concept::And(l, r) => l.has_roles() || r.has_roles(),
            Concept::Exists(..) => true,
        }
    }

    pub fn contains_top(&self) -> bool {
        match self {
            Concept::Top => true,
            Concept::Atomic(_) => false,
            Concept::And(l, r) => l.contains_top() || r.contains_top(),
            Concept::Exists(_, c) => c.contains_top(),
        }
    }

    pub fn collect_names(&self, concepts: &mut BTreeSet<String>, roles: &mut BTreeSet<String>) {
        match self {
            Concept::Top => {}
            Concept::Atomic(name) => {
                concepts.insert(name.clone());
            }
            Concept::And(l, r) => {
                l.collect_names(concepts, roles);
                r.collect_names(concepts, roles);
            }
            Concept::Exists(role, c) => {
                roles.insert(role.clone());
                c.collect_names(concepts, roles);
            }
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Top => f.write_str("top"),
            Concept::Atomic(name) => f.write_str(name),
            Concept::And(l, r) => write!(f, "(and {l} {r})"),
            Concept::Exists(role, c) => write!(f, "(some {role} {c})"),
        }
    }
}

/// A probability bound. The decimal text it was parsed from, if any, is kept
/// so that serialization echoes the input exactly. Equality compares values.
#[derive(Clone, Debug)]
pub struct Probability {
    value: f64,
    text: Option<String>,
}

impl Probability {
    pub fn new(value: f64) -> Self {
        Probability { value, text: None }
    }

    pub(crate) fn with_text(value: f64, text: String) -> Self {
        Probability {
            value,
            text: Some(text),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl PartialEq for Probability {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl From<f64> for Probability {
    fn from(value: f64) -> Self {
        Probability::new(value)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.text {
            Some(text) => f.write_str(text),
            None => write!(f, "{}", self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConditionalError {
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("lower bound {lower} exceeds upper bound {upper}")]
    Inverted { lower: f64, upper: f64 },
}

/// `(head | body)[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub body: Concept,
    pub head: Concept,
    lower: Probability,
    upper: Probability,
}

impl Conditional {
    pub fn new(
        head: Concept,
        body: Concept,
        lower: impl Into<Probability>,
        upper: impl Into<Probability>,
    ) -> Result<Self, ConditionalError> {
        let (lower, upper) = (lower.into(), upper.into());
        for p in [lower.value, upper.value] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConditionalError::OutOfRange(p));
            }
        }
        if lower.value > upper.value {
            return Err(ConditionalError::Inverted {
                lower: lower.value,
                upper: upper.value,
            });
        }
        Ok(Conditional {
            body,
            head,
            lower,
            upper,
        })
    }

    /// The deterministic conditional `(head | body)[1, 1]`, i.e. `body ⊑ head`.
    pub fn certain(head: Concept, body: Concept) -> Self {
        Conditional {
            body,
            head,
            lower: Probability::new(1.0),
            upper: Probability::new(1.0),
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower.value
    }

    pub fn upper(&self) -> f64 {
        self.upper.value
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower.value, self.upper.value)
    }

    pub fn is_deterministic(&self) -> bool {
        self.lower.value == 1.0 && self.upper.value == 1.0
    }

    pub fn size(&self) -> usize {
        self.body.size() + self.head.size()
    }

    pub fn lower_prob(&self) -> &Probability {
        &self.lower
    }

    pub fn upper_prob(&self) -> &Probability {
        &self.upper
    }
}

/// Syntactic shape of a conditional over concept names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    /// `(B | A)`
    Pnf1,
    /// `(B | A1 ⊓ A2)`
    Pnf2,
    /// `(B | ∃r.A)`
    Pnf3,
    /// `(∃r.B | A)`
    Pnf4,
    Other,
}

impl Shape {
    pub const ALL: [Shape; 5] = [Shape::Pnf1, Shape::Pnf2, Shape::Pnf3, Shape::Pnf4, Shape::Other];

    pub fn label(self) -> &'static str {
        match self {
            Shape::Pnf1 => "pnf1",
            Shape::Pnf2 => "pnf2",
            Shape::Pnf3 => "pnf3",
            Shape::Pnf4 => "pnf4",
            Shape::Other => "other",
        }
    }
}

impl Conditional {
    pub fn shape(&self) -> Shape {
        let name = |c: &Concept| matches!(c, Concept::Atomic(_));
        match (&self.body, &self.head) {
            (b, h) if name(b) && name(h) => Shape::Pnf1,
            (Concept::And(l, r), h) if name(l) && name(r) && name(h) => Shape::Pnf2,
            (Concept::Exists(_, f), h) if name(f) && name(h) => Shape::Pnf3,
            (b, Concept::Exists(_, f)) if name(b) && name(f) => Shape::Pnf4,
            _ => Shape::Other,
        }
    }
}

impl fmt::Display for Conditional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cond {} {} {} | {}", self.lower, self.upper, self.head, self.body)
    }
}

/// Concept and role names occurring in a TBox.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub concepts: BTreeSet<String>,
    pub roles: BTreeSet<String>,
}

impl Signature {
    pub fn add_concept(&mut self, c: &Concept) {
        c.collect_names(&mut self.concepts, &mut self.roles);
    }
}

/// An ordered list of conditionals together with its signature.
#[derive(Clone, Debug, Default)]
pub struct TBox {
    conditionals: Vec<Conditional>,
    signature: Signature,
}

impl PartialEq for TBox {
    fn eq(&self, other: &Self) -> bool {
        self.conditionals == other.conditionals
    }
}

impl TBox {
    pub fn new() -> Self {
        TBox::default()
    }

    pub fn from_conditionals(conditionals: impl IntoIterator<Item = Conditional>) -> Self {
        let mut t = TBox::new();
        for c in conditionals {
            t.push(c);
        }
        t
    }

    pub fn push(&mut self, c: Conditional) {
        self.signature.add_concept(&c.body);
        self.signature.add_concept(&c.head);
        self.conditionals.push(c);
    }

    pub fn conditionals(&self) -> &[Conditional] {
        &self.conditionals
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn len(&self) -> usize {
        self.conditionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditionals.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Conditional> {
        self.conditionals.iter()
    }

    pub fn size(&self) -> usize {
        self.conditionals.iter().map(Conditional::size).sum()
    }

    pub fn has_roles(&self) -> bool {
        !self.signature.roles.is_empty()
    }
}

impl<'a> IntoIterator for &'a TBox {
    type Item = &'a Conditional;
    type IntoIter = std::slice::Iter<'a, Conditional>;

    fn into_iter(self) -> Self::IntoIter {
        self.conditionals.iter()
    }
}

impl FromIterator<Conditional> for TBox {
    fn from_iter<I: IntoIterator<Item = Conditional>>(iter: I) -> Self {
        TBox::from_conditionals(iter)
    }
}

/// Number of constructors in `c`.
pub fn concept_size(c: &Concept) -> usize {
    c.size()
}

/// One `cond` line per conditional.
pub fn serialize_tbox(t: &TBox) -> String {
    let mut out = String::new();
    for c in t {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}
