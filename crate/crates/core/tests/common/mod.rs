#![allow(dead_code)]

pub mod gradients;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use selbox::{Concept, Conditional, TBox};

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("A{i}")).collect()
}

/// An atomic concept or a conjunction of two distinct names.
pub fn random_concept(rng: &mut ChaCha8Rng, names: &[String]) -> Concept {
    let i = rng.gen_range(0..names.len());
    if names.len() > 1 && rng.gen_bool(0.3) {
        let mut j = rng.gen_range(0..names.len() - 1);
        if j >= i {
            j += 1;
        }
        Concept::and(Concept::atomic(&names[i]), Concept::atomic(&names[j]))
    } else {
        Concept::atomic(&names[i])
    }
}

/// Type masses of a random finite model: element counts per type. One
/// element belongs to every name, so no concept is empty.
pub fn random_model(rng: &mut ChaCha8Rng, k: usize, domain: usize) -> Vec<usize> {
    let mut counts = vec![0; 1 << k];
    let types = counts.len();
    counts[types - 1] = 1;
    for _ in 1..domain.max(1) {
        counts[rng.gen_range(0..types)] += 1;
    }
    counts
}

pub fn member(names: &[String], t: usize, c: &Concept) -> bool {
    match c {
        Concept::Top => true,
        Concept::Atomic(n) => t >> names.iter().position(|x| x == n).unwrap() & 1 == 1,
        Concept::And(l, r) => member(names, t, l) && member(names, t, r),
        Concept::Exists(..) => unreachable!("role-free"),
    }
}

pub fn proportion(names: &[String], counts: &[usize], head: &Concept, body: &Concept) -> Option<f64> {
    let (mut nb, mut nm) = (0, 0);
    for (t, &c) in counts.iter().enumerate() {
        if member(names, t, body) {
            nb += c;
            if member(names, t, head) {
                nm += c;
            }
        }
    }
    (nb > 0).then(|| nm as f64 / nb as f64)
}

/// `n` conditionals true in `counts`, widened by up to `slack` on each side.
pub fn tbox_of_model(rng: &mut ChaCha8Rng, names: &[String], counts: &[usize], n: usize, slack: f64) -> TBox {
    let mut t = TBox::new();
    while t.len() < n {
        let (head, body) = (random_concept(rng, names), random_concept(rng, names));
        if head == body {
            continue;
        }
        let Some(p) = proportion(names, counts, &head, &body) else { continue };
        let l = (p - rng.gen_range(0.0..=slack)).max(0.0);
        let u = (p + rng.gen_range(0.0..=slack)).min(1.0);
        t.push(Conditional::new(head, body, l, u).unwrap());
    }
    t
}
