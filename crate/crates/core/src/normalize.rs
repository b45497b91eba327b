//! Normal form for Statistical EL TBoxes.
//!
//! Probabilistic conditionals with a complex side are rewritten to a
//! conditional between two fresh names plus equivalences tying the names to the
//! original sides. All concept inclusions are then brought into EL normal form
//! (`A ⊑ B`, `A1 ⊓ A2 ⊑ B`, `A ⊑ ∃r.B`, `∃r.A ⊑ B`, with `top` allowed in place
//! of a name) and converted back into deterministic conditionals.

use std::collections::{BTreeSet, HashMap};

use crate::ontology::{Concept, Conditional, TBox, FRESH_PREFIX};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("conditional `{0}` is not deterministic")]
    NotDeterministic(String),
    #[error("TBox is not in normal form: `{0}`")]
    NotNormalized(String),
}

/// Issues `_N0`, `_N1`, … starting past any `_N` index already in use.
#[derive(Debug, Clone)]
pub struct FreshNameCounter {
    next: usize,
}

impl FreshNameCounter {
    pub fn new() -> Self {
        FreshNameCounter { next: 0 }
    }

    /// A counter whose names cannot collide with any concept name in `t`.
    pub fn avoiding(t: &TBox) -> Self {
        let next = t
            .signature()
            .concepts
            .iter()
            .filter_map(|n| n.strip_prefix(FRESH_PREFIX)?.parse::<usize>().ok())
            .map(|i| i + 1)
            .max()
            .unwrap_or(0);
        FreshNameCounter { next }
    }

    pub fn fresh(&mut self) -> Concept {
        let c = Concept::Atomic(format!("{FRESH_PREFIX}{}", self.next));
        self.next += 1;
        c
    }
}

impl Default for FreshNameCounter {
    fn default() -> Self {
        Self::new()
    }
}

/// `C ⊑ D` as the conditional `(D | C)[1, 1]`.
pub fn gci_to_conditional(body: Concept, head: Concept) -> Conditional {
    Conditional::certain(head, body)
}

/// Inverse of [`gci_to_conditional`]; returns `(sub, sup)`.
pub fn conditional_to_gci(c: &Conditional) -> Result<(Concept, Concept), NormalizeError> {
    if !c.is_deterministic() {
        return Err(NormalizeError::NotDeterministic(c.to_string()));
    }
    Ok((c.body.clone(), c.head.clone()))
}

/// Rewrites `t` into normal form. Fresh names are issued in traversal order.
pub fn normalize(t: &TBox) -> TBox {
    normalize_with(t, NormalizeOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NormalizeOptions {
    /// Rename only the complex side of a probabilistic conditional and
    /// reuse one fresh name per distinct complex concept. The default
    /// renames both sides afresh for every conditional.
    pub share: bool,
    /// Leave every probabilistic conditional untouched and normalize the
    /// GCIs only.
    pub keep_conditionals: bool,
}

pub fn normalize_with(t: &TBox, opts: NormalizeOptions) -> TBox {
    let mut names = FreshNameCounter::avoiding(t);
    let mut shared: HashMap<Concept, Concept> = HashMap::new();
    let mut out = TBox::new();
    for c in t {
        if c.is_deterministic() {
            normalize_gci(c.body.clone(), c.head.clone(), &mut names, &mut out);
        } else if opts.keep_conditionals || (c.body.is_atomic() && c.head.is_atomic()) {
            out.push(c.clone());
        } else {
            // (original side, its name, whether the name is new)
            let mut rename = |side: &Concept| -> (Concept, Concept, bool) {
                if !opts.share {
                    return (side.clone(), names.fresh(), true);
                }
                if side.is_atomic() {
                    return (side.clone(), side.clone(), false);
                }
                if let Some(name) = shared.get(side) {
                    return (side.clone(), name.clone(), false);
                }
                let name = names.fresh();
                shared.insert(side.clone(), name.clone());
                (side.clone(), name, true)
            };
            let body = rename(&c.body);
            let head = rename(&c.head);
            let mut renamed = c.clone();
            renamed.body = body.1.clone();
            renamed.head = head.1.clone();
            out.push(renamed);
            for (original, name, new) in [body, head] {
                if new {
                    normalize_gci(original.clone(), name.clone(), &mut names, &mut out);
                    normalize_gci(name, original, &mut names, &mut out);
                }
            }
        }
    }
    out
}

fn normalize_gci(sub: Concept, sup: Concept, names: &mut FreshNameCounter, out: &mut TBox) {
    if !sub.is_atomic() && !sup.is_atomic() {
        let a = names.fresh();
        normalize_gci(sub, a.clone(), names, out);
        normalize_gci(a, sup, names, out);
        return;
    }
    match (sub, sup) {
        (Concept::And(l, r), sup) if !r.is_atomic() => {
            let a = names.fresh();
            normalize_gci(*r, a.clone(), names, out);
            normalize_gci(Concept::And(l, Box::new(a)), sup, names, out);
        }
        (Concept::And(l, r), sup) if !l.is_atomic() => {
            let a = names.fresh();
            normalize_gci(*l, a.clone(), names, out);
            normalize_gci(Concept::And(Box::new(a), r), sup, names, out);
        }
        (Concept::Exists(role, filler), sup) if !filler.is_atomic() => {
            let a = names.fresh();
            normalize_gci(*filler, a.clone(), names, out);
            normalize_gci(Concept::Exists(role, Box::new(a)), sup, names, out);
        }
        (sub, Concept::Exists(role, filler)) if !filler.is_atomic() => {
            let a = names.fresh();
            normalize_gci(a.clone(), *filler, names, out);
            normalize_gci(sub, Concept::Exists(role, Box::new(a)), names, out);
        }
        (sub, Concept::And(l, r)) => {
            normalize_gci(sub.clone(), *l, names, out);
            normalize_gci(sub, *r, names, out);
        }
        (sub, sup) => out.push(gci_to_conditional(sub, sup)),
    }
}

/// True for the four EL normal-form inclusion shapes.
pub fn is_normal_gci(sub: &Concept, sup: &Concept) -> bool {
    match (sub, sup) {
        (s, t) if s.is_atomic() && t.is_atomic() => true,
        (Concept::And(l, r), t) => l.is_atomic() && r.is_atomic() && t.is_atomic(),
        (s, Concept::Exists(_, f)) => s.is_atomic() && f.is_atomic(),
        (Concept::Exists(_, f), t) => f.is_atomic() && t.is_atomic(),
        _ => false,
    }
}

pub fn is_normal_conditional(c: &Conditional) -> bool {
    if c.is_deterministic() {
        is_normal_gci(&c.body, &c.head)
    } else {
        c.body.is_atomic() && c.head.is_atomic()
    }
}

pub fn is_normal_form(t: &TBox) -> bool {
    t.iter().all(is_normal_conditional)
}

/// Names provably equivalent to `top` by a syntactic closure over the
/// deterministic inclusions of `t`: a name `A` joins the set when some member
/// `X` (initially `top`) has `X ⊑ A`.
pub fn top_equivalent_names(t: &TBox) -> BTreeSet<String> {
    let mut equivalent: BTreeSet<String> = BTreeSet::new();
    loop {
        let before = equivalent.len();
        for c in t.iter().filter(|c| c.is_deterministic()) {
            let sub_is_top = match &c.body {
                Concept::Top => true,
                Concept::Atomic(n) => equivalent.contains(n),
                _ => false,
            };
            if let (true, Concept::Atomic(n)) = (sub_is_top, &c.head) {
                equivalent.insert(n.clone());
            }
        }
        if equivalent.len() == before {
            return equivalent;
        }
    }
}

/// Syntactic safety check: no probabilistic conditional mentions a concept
/// equivalent to `top`.
pub fn is_safe(t: &TBox) -> Result<bool, NormalizeError> {
    if let Some(c) = t.iter().find(|c| !is_normal_conditional(c)) {
        return Err(NormalizeError::NotNormalized(c.to_string()));
    }
    let tops = top_equivalent_names(t);
    let is_top = |c: &Concept| match c {
        Concept::Top => true,
        Concept::Atomic(n) => tops.contains(n),
        _ => false,
    };
    Ok(t
        .iter()
        .filter(|c| !c.is_deterministic())
        .all(|c| !is_top(&c.body) && !is_top(&c.head)))
}
