//! Analytic loss gradients against central finite differences.
//!
//! Every configuration is resampled until no hinge argument, intersection
//! tie or regularizer threshold lies within `KINK_MARGIN` of its kink, so the
//! loss is smooth on the finite-difference stencil.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selbox::geometry::{apply_affine, intersect, invert_affine, AxisBox, VolumeKind};
use selbox::loss::{regularizer_loss, AxiomTerm, BoxTerm, Gradient, LossConfig};
use selbox::ontology::{Conditional, Signature};
use selbox::{BoxEmbedding, Concept, EmbeddingMeta, RelationMode};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Gradients below this are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-6;
const KINK_MARGIN: f64 = 1e-3;
pub const CONFIGS_PER_TERM: usize = 100;

fn random_embedding(rng: &mut ChaCha8Rng, dim: usize, mode: RelationMode) -> BoxEmbedding {
    let sig = Signature {
        concepts: ["A", "B", "C"].iter().map(|s| s.to_string()).collect(),
        roles: ["r"].iter().map(|s| s.to_string()).collect(),
    };
    let meta = EmbeddingMeta {
        relation_mode: mode,
        ..EmbeddingMeta::default()
    };
    let mut e = BoxEmbedding::zeros(&sig, dim, meta);
    for id in 0..3 {
        let m: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2..0.9)).collect();
        e.set_concept(id, &m, &d);
    }
    let ld: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.7..0.7)).collect();
    e.set_role(0, &ld, &b);
    e
}

fn apart(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() > KINK_MARGIN)
}

fn meet_is_smooth(a: &AxisBox, b: &AxisBox) -> bool {
    apart(&a.lower, &b.lower) && apart(&a.upper, &b.upper)
}

/// Relative error per entry, measured against the larger of the two
/// gradients' magnitude, a floor tied to the gradient's overall scale and
/// `ABS_FLOOR`.
pub fn check(analytic: &Gradient, e: &BoxEmbedding, f: impl Fn(&BoxEmbedding) -> f64) -> Result<f64, String> {
    let mut probe = e.clone();
    let n = e.parameter_count();
    let mut numeric = Vec::with_capacity(n);
    for k in 0..n {
        let original = *probe.parameters().nth(k).unwrap();
        *probe.parameters_mut().nth(k).unwrap() = original + STEP;
        let plus = f(&probe);
        *probe.parameters_mut().nth(k).unwrap() = original - STEP;
        let minus = f(&probe);
        *probe.parameters_mut().nth(k).unwrap() = original;
        numeric.push((plus - minus) / (2.0 * STEP));
    }
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
    let mut worst = 0.0f64;
    for (k, (a, g)) in analytic.iter().zip(&numeric).enumerate() {
        let rel = (a - g).abs() / a.abs().max(g.abs()).max(1e-3 * scale).max(ABS_FLOOR);
        if rel >= TOLERANCE {
            return Err(format!("parameter {k}: analytic {a}, numeric {g}, rel {rel}"));
        }
        worst = worst.max(rel);
    }
    Ok(worst)
}

struct Case {
    name: &'static str,
    build: fn(&BoxEmbedding) -> Option<AxiomTerm>,
}

fn boxes(e: &BoxEmbedding) -> (AxisBox, AxisBox, AxisBox) {
    (e.concept_box(0), e.concept_box(1), e.concept_box(2))
}

fn compile(c: Conditional, e: &BoxEmbedding) -> AxiomTerm {
    AxiomTerm::compile(&c, e).unwrap()
}

pub fn a(n: &str) -> Concept {
    Concept::atomic(n)
}

fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "atomic subsumption",
            build: |e| {
                let (ba, bb, _) = boxes(e);
                meet_is_smooth(&ba, &bb).then(|| compile(Conditional::certain(a("B"), a("A")), e))
            },
        },
        Case {
            name: "conjunctive subsumption",
            build: |e| {
                let (ba, bb, bc) = boxes(e);
                let ab = intersect(&ba, &bb).unwrap();
                (meet_is_smooth(&ba, &bb) && meet_is_smooth(&ab, &bc))
                    .then(|| compile(Conditional::certain(a("C"), Concept::and(a("A"), a("B"))), e))
            },
        },
        Case {
            name: "right existential",
            build: |e| {
                let (ba, bb, _) = boxes(e);
                let image = apply_affine(&e.role_map(0), &ba);
                meet_is_smooth(&image, &bb).then(|| compile(Conditional::certain(Concept::exists("r", a("B")), a("A")), e))
            },
        },
        Case {
            name: "left existential",
            build: |e| {
                let (ba, bb, _) = boxes(e);
                let pre = apply_affine(&invert_affine(&e.role_map(0)), &ba);
                meet_is_smooth(&pre, &bb).then(|| compile(Conditional::certain(a("B"), Concept::exists("r", a("A"))), e))
            },
        },
        Case {
            name: "subsumption by bottom",
            build: |_| Some(AxiomTerm::bottom(0)),
        },
        Case {
            name: "conjunction disjointness",
            build: |e| {
                let (ba, bb, _) = boxes(e);
                meet_is_smooth(&ba, &bb).then(|| AxiomTerm::disjoint_names(0, 1))
            },
        },
        Case {
            name: "probabilistic lower and upper",
            build: |e| {
                let (ba, bb, _) = boxes(e);
                if !meet_is_smooth(&ba, &bb) {
                    return None;
                }
                // Bounds placed on both sides of the realized proportion, away from it.
                let p = VolumeKind::Hard.volume(&intersect(&ba, &bb).unwrap()) / VolumeKind::Hard.volume(&ba);
                let (l, u) = if p < 0.5 { (p + 0.2, 0.95) } else { (0.05, p - 0.2) };
                let (l, u) = if l <= u { (l, u) } else { (u, l) };
                let c = Conditional::new(a("B"), a("A"), l, u).unwrap();
                Some(compile(c, e))
            },
        },
        Case {
            name: "probabilistic complex sides",
            build: |e| {
                let (ba, bb, bc) = boxes(e);
                let pre = apply_affine(&invert_affine(&e.role_map(0)), &bb);
                let ac = intersect(&ba, &bc).ok()?;
                if !(meet_is_smooth(&ba, &bc) && meet_is_smooth(&ac, &pre)) {
                    return None;
                }
                let c = Conditional::new(Concept::exists("r", a("B")), Concept::and(a("A"), a("C")), 0.3, 0.6).unwrap();
                Some(compile(c, e))
            },
        },
    ]
}

/// The softplus value of a hinge argument must be away from zero; checked on
/// the compiled term at the evaluation temperature.
fn hinge_is_smooth(term: &AxiomTerm, e: &BoxEmbedding, cfg: &LossConfig) -> bool {
    match term {
        AxiomTerm::Probabilistic {
            body,
            meet,
            lower,
            upper,
        } => {
            let vol = |t: &BoxTerm| cfg.volume.volume(&t.evaluate(e, cfg.relation_mode));
            let (b, i) = (vol(body), vol(meet));
            if cfg.relative {
                let r = i / b;
                (lower - r).abs() > KINK_MARGIN && (r - upper).abs() > KINK_MARGIN
            } else {
                (lower * b - i).abs() > KINK_MARGIN && (i - upper * b).abs() > KINK_MARGIN
            }
        }
        _ => true,
    }
}

/// Checks every axiom term in both relation modes and both loss scales.
/// Returns one summary line per combination.
pub fn axiom_terms() -> Result<Vec<String>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lines = Vec::new();
    for case in cases() {
        for (mode, relative) in [
            (RelationMode::Affine, false),
            (RelationMode::Translation, false),
            (RelationMode::Affine, true),
            (RelationMode::Translation, true),
        ] {
            let mut checked = 0;
            let mut worst = 0.0f64;
            let mut attempts = 0;
            while checked < CONFIGS_PER_TERM {
                attempts += 1;
                if attempts >= 100 * CONFIGS_PER_TERM {
                    return Err(format!("{}: too many kinked samples", case.name));
                }
                let dim = rng.gen_range(1..=3);
                let e = random_embedding(&mut rng, dim, mode);
                let t = rng.gen_range(0.05..1.0);
                let cfg = LossConfig {
                    relation_mode: mode,
                    relative,
                    ..LossConfig::default().with_temperature(t).without_regularizers()
                };
                let Some(term) = (case.build)(&e) else { continue };
                if !hinge_is_smooth(&term, &e, &cfg) {
                    continue;
                }
                let mut grad = Gradient::zeros_like(&e);
                term.accumulate_gradient(&e, &cfg, 1.0, &mut grad);
                let rel = check(&grad, &e, |p| term.value(p, &cfg)).map_err(|msg| format!("{} ({mode}): {msg}", case.name))?;
                if mode == RelationMode::Translation && grad.log_diag.iter().any(|g| *g != 0.0) {
                    return Err(format!("{}: translation mode moved a role scale", case.name));
                }
                worst = worst.max(rel);
                checked += 1;
            }
            let loss = if relative { "relative" } else { "absolute" };
            lines.push(format!("{:<32} {:<12} {loss:<8} worst rel err {worst:.2e}", case.name, mode.to_string()));
        }
    }
    Ok(lines)
}

/// Checks the location and volume regularizers.
pub fn regularizers() -> Result<Vec<String>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut lines = Vec::new();
    for (name, use_loc, use_vol) in [("location", true, false), ("volume", false, true)] {
        let mut checked = 0;
        let mut worst = 0.0f64;
        while checked < CONFIGS_PER_TERM {
            let dim = rng.gen_range(1..=3);
            let e = random_embedding(&mut rng, dim, RelationMode::Affine);
            let beta = rng.gen_range(0.5..3.0);
            let cfg = LossConfig {
                beta,
                use_loc,
                use_vol,
                ..LossConfig::default().with_temperature(rng.gen_range(0.05..1.0))
            };
            let smooth = (0..3).all(|id| {
                let b = e.concept_box(id);
                let cube = beta.powi(dim as i32);
                b.upper.iter().all(|u| (u - beta + cfg.epsilon).abs() > KINK_MARGIN)
                    && b.lower.iter().all(|l| (-l - cfg.epsilon).abs() > KINK_MARGIN)
                    && (cube - cfg.volume.volume(&b) - cfg.epsilon).abs() > KINK_MARGIN
            });
            if !smooth {
                continue;
            }
            let mut grad = Gradient::zeros_like(&e);
            selbox::loss::regularizer_gradient(&e, &cfg, 1.0, &mut grad);
            if grad.max_abs() == 0.0 {
                continue;
            }
            let rel = check(&grad, &e, |p| regularizer_loss(p, &cfg)).map_err(|msg| format!("{name}: {msg}"))?;
            worst = worst.max(rel);
            checked += 1;
        }
        lines.push(format!("{name:<32} regularizer  worst rel err {worst:.2e}"));
    }
    Ok(lines)
}
