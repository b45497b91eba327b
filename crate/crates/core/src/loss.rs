//! Training loss for box embeddings and its analytic gradient.
//!
//! Each normalized axiom is compiled into an [`AxiomTerm`] over
//! [`BoxTerm`] expressions (concept boxes combined by intersection, role
//! images and role preimages). Values and gradients are computed on the
//! compiled form; the gradient is propagated by hand through volumes, box
//! operations and the `M = m + exp(δ)` / `diag = exp(log_diag)`
//! reparametrizations.

use crate::embedding::{BoxEmbedding, RelationMode};
use crate::geometry::{AxisBox, VolumeKind, VOLUME_FLOOR};
use crate::normalize::is_normal_gci;
use crate::ontology::{Concept, Conditional, TBox};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("axiom `{0}` is not in a supported normal-form shape")]
    UnsupportedShape(String),
    #[error("axiom `{0}` needs a box for `top`")]
    TopUnsupported(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Upper end of the cube `[0, β]^n` the regularizers aim for.
    pub beta: f64,
    /// Margin used by the ⊥ loss and both regularizers.
    pub epsilon: f64,
    pub volume: VolumeKind,
    pub use_loc: bool,
    pub use_vol: bool,
    pub relation_mode: RelationMode,
    /// Probabilistic terms on the ratio `vol(C ∩ D) / vol(C)` instead of
    /// on volumes: `[l − r]⁺ + [r − u]⁺`. Same zero set for non-empty `C`.
    pub relative: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            beta: 10.0,
            epsilon: 1e-8,
            volume: VolumeKind::Softplus(1.0),
            use_loc: true,
            use_vol: true,
            relation_mode: RelationMode::Affine,
            relative: false,
        }
    }
}

impl LossConfig {
    /// Same configuration evaluated with hard volumes.
    pub fn hard(self) -> Self {
        LossConfig {
            volume: VolumeKind::Hard,
            ..self
        }
    }

    pub fn with_temperature(self, t: f64) -> Self {
        LossConfig {
            volume: VolumeKind::Softplus(t),
            ..self
        }
    }

    pub fn without_regularizers(self) -> Self {
        LossConfig {
            use_loc: false,
            use_vol: false,
            ..self
        }
    }
}

/// Gradient table laid out like the parameters of a [`BoxEmbedding`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub lower: Vec<f64>,
    pub log_side: Vec<f64>,
    pub log_diag: Vec<f64>,
    pub offset: Vec<f64>,
}

impl Gradient {
    pub fn zeros_like(e: &BoxEmbedding) -> Self {
        Gradient {
            lower: vec![0.0; e.lower.len()],
            log_side: vec![0.0; e.log_side.len()],
            log_diag: vec![0.0; e.log_diag.len()],
            offset: vec![0.0; e.offset.len()],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.iter_mut() {
            *v *= factor;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.lower.iter().chain(&self.log_side).chain(&self.log_diag).chain(&self.offset)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.lower
            .iter_mut()
            .chain(self.log_side.iter_mut())
            .chain(self.log_diag.iter_mut())
            .chain(self.offset.iter_mut())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Read access to parameters, with the role diagonal fixed by the relation mode.
struct Params<'a> {
    e: &'a BoxEmbedding,
    mode: RelationMode,
}

impl Params<'_> {
    fn dim(&self) -> usize {
        self.e.dim()
    }

    fn diag(&self, role: usize, i: usize) -> f64 {
        match self.mode {
            RelationMode::Affine => self.e.role_log_diag(role)[i].exp(),
            RelationMode::Translation => 1.0,
        }
    }
}

/// Box-valued expression over embedding parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BoxTerm {
    Concept(usize),
    Meet(Box<BoxTerm>, Box<BoxTerm>),
    /// `{T_r(x) : x ∈ inner}`.
    Image(usize, Box<BoxTerm>),
    /// `{x : T_r(x) ∈ inner}`.
    Preimage(usize, Box<BoxTerm>),
}

impl BoxTerm {
    pub fn meet(a: BoxTerm, b: BoxTerm) -> Self {
        BoxTerm::Meet(Box::new(a), Box::new(b))
    }

    /// Compiles a concept to the box it denotes. `Ok(None)` stands for the
    /// whole space, which only arises from `top`.
    pub fn compile(c: &Concept, e: &BoxEmbedding) -> Result<Option<BoxTerm>, LossError> {
        Ok(match c {
            Concept::Top => None,
            Concept::Atomic(name) => Some(BoxTerm::Concept(
                e.concept_id(name).ok_or_else(|| LossError::UnknownConcept(name.clone()))?,
            )),
            Concept::And(l, r) => match (Self::compile(l, e)?, Self::compile(r, e)?) {
                (Some(a), Some(b)) => Some(BoxTerm::meet(a, b)),
                (a, b) => a.or(b),
            },
            Concept::Exists(role, filler) => {
                let r = e.role_id(role).ok_or_else(|| LossError::UnknownRole(role.clone()))?;
                Self::compile(filler, e)?.map(|f| BoxTerm::Preimage(r, Box::new(f)))
            }
        })
    }

    /// The box this term denotes under `e`.
    pub fn evaluate(&self, e: &BoxEmbedding, mode: RelationMode) -> AxisBox {
        self.eval(&Params { e, mode })
    }

    #[allow(clippy::needless_range_loop)]
    fn eval(&self, p: &Params<'_>) -> AxisBox {
        match self {
            BoxTerm::Concept(id) => p.e.concept_box(*id),
            BoxTerm::Meet(a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                AxisBox {
                    lower: a.lower.iter().zip(&b.lower).map(|(x, y)| x.max(*y)).collect(),
                    upper: a.upper.iter().zip(&b.upper).map(|(x, y)| x.min(*y)).collect(),
                }
            }
            BoxTerm::Image(r, inner) => {
                let mut b = inner.eval(p);
                let offset = p.e.role_offset(*r);
                for i in 0..p.dim() {
                    let d = p.diag(*r, i);
                    b.lower[i] = d * b.lower[i] + offset[i];
                    b.upper[i] = d * b.upper[i] + offset[i];
                }
                b
            }
            BoxTerm::Preimage(r, inner) => {
                let mut b = inner.eval(p);
                let offset = p.e.role_offset(*r);
                for i in 0..p.dim() {
                    let d = p.diag(*r, i);
                    b.lower[i] = (b.lower[i] - offset[i]) / d;
                    b.upper[i] = (b.upper[i] - offset[i]) / d;
                }
                b
            }
        }
    }

    /// Accumulates `∂L/∂params` given `∂L/∂lower` and `∂L/∂upper` of this box.
    fn backward(&self, p: &Params<'_>, g_lo: &[f64], g_hi: &[f64], grad: &mut Gradient) {
        let n = p.dim();
        match self {
            BoxTerm::Concept(id) => {
                let base = id * n;
                let log_side = p.e.concept_log_side(*id);
                for i in 0..n {
                    grad.lower[base + i] += g_lo[i] + g_hi[i];
                    grad.log_side[base + i] += g_hi[i] * log_side[i].exp();
                }
            }
            BoxTerm::Meet(a, b) => {
                let (ba, bb) = (a.eval(p), b.eval(p));
                let (mut a_lo, mut a_hi) = (vec![0.0; n], vec![0.0; n]);
                let (mut b_lo, mut b_hi) = (vec![0.0; n], vec![0.0; n]);
                for i in 0..n {
                    if ba.lower[i] >= bb.lower[i] {
                        a_lo[i] = g_lo[i];
                    } else {
                        b_lo[i] = g_lo[i];
                    }
                    if ba.upper[i] <= bb.upper[i] {
                        a_hi[i] = g_hi[i];
                    } else {
                        b_hi[i] = g_hi[i];
                    }
                }
                a.backward(p, &a_lo, &a_hi, grad);
                b.backward(p, &b_lo, &b_hi, grad);
            }
            BoxTerm::Image(r, inner) => {
                let b = inner.eval(p);
                let base = r * n;
                let mut in_lo = vec![0.0; n];
                let mut in_hi = vec![0.0; n];
                for i in 0..n {
                    let d = p.diag(*r, i);
                    in_lo[i] = d * g_lo[i];
                    in_hi[i] = d * g_hi[i];
                    grad.offset[base + i] += g_lo[i] + g_hi[i];
                    if p.mode == RelationMode::Affine {
                        grad.log_diag[base + i] += d * (g_lo[i] * b.lower[i] + g_hi[i] * b.upper[i]);
                    }
                }
                inner.backward(p, &in_lo, &in_hi, grad);
            }
            BoxTerm::Preimage(r, inner) => {
                let b = inner.eval(p);
                let offset = p.e.role_offset(*r);
                let base = r * n;
                let mut in_lo = vec![0.0; n];
                let mut in_hi = vec![0.0; n];
                for i in 0..n {
                    let d = p.diag(*r, i);
                    in_lo[i] = g_lo[i] / d;
                    in_hi[i] = g_hi[i] / d;
                    grad.offset[base + i] -= (g_lo[i] + g_hi[i]) / d;
                    if p.mode == RelationMode::Affine {
                        let out_lo = (b.lower[i] - offset[i]) / d;
                        let out_hi = (b.upper[i] - offset[i]) / d;
                        grad.log_diag[base + i] -= g_lo[i] * out_lo + g_hi[i] * out_hi;
                    }
                }
                inner.backward(p, &in_lo, &in_hi, grad);
            }
        }
    }

    fn volume(&self, p: &Params<'_>, kind: VolumeKind) -> f64 {
        kind.volume(&self.eval(p))
    }

    /// Pushes `scale · ∂vol/∂params` into `grad`.
    fn volume_backward(&self, p: &Params<'_>, kind: VolumeKind, scale: f64, grad: &mut Gradient) {
        if scale == 0.0 {
            return;
        }
        let b = self.eval(p);
        let sides: Vec<f64> = b.sides().map(|s| kind.side(s)).collect();
        let n = sides.len();
        // Products of all other factors via prefix and suffix products.
        let mut prefix = vec![1.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] * sides[i];
        }
        let mut suffix = 1.0;
        let mut g_hi = vec![0.0; n];
        for i in (0..n).rev() {
            let d_side = scale * prefix[i] * suffix * kind.side_slope(b.side(i));
            g_hi[i] = d_side;
            suffix *= sides[i];
        }
        let g_lo: Vec<f64> = g_hi.iter().map(|g| -g).collect();
        self.backward(p, &g_lo, &g_hi, grad);
    }
}

/// A compiled axiom loss.
#[derive(Debug, Clone, PartialEq)]
pub enum AxiomTerm {
    /// `Disjoint(inner, outer) = 1 − vol(inner ∩ outer) / vol(inner)`.
    Disjoint { inner: BoxTerm, meet: BoxTerm },
    /// `C ⊑ ⊥`: `max(0, M(C)_0 − m(C)_0 + ε)`.
    Empty { concept: usize },
    /// `C ⊓ D ⊑ ⊥`: `vol(C ∩ D) / (vol(C) + vol(D))`.
    Overlap { left: BoxTerm, right: BoxTerm, meet: BoxTerm },
    /// `[l·vol(C) − vol(C ∩ D)]⁺ + [vol(C ∩ D) − u·vol(C)]⁺`.
    Probabilistic {
        body: BoxTerm,
        meet: BoxTerm,
        lower: f64,
        upper: f64,
    },
    /// Holds in every geometric interpretation (for example `C ⊑ top`).
    Satisfied,
}

impl AxiomTerm {
    fn disjoint(inner: BoxTerm, outer: BoxTerm) -> Self {
        AxiomTerm::Disjoint {
            meet: BoxTerm::meet(inner.clone(), outer),
            inner,
        }
    }

    /// `C ⊑ ⊥` for a named concept; the text format has no ⊥.
    pub fn bottom(concept: usize) -> Self {
        AxiomTerm::Empty { concept }
    }

    /// `C ⊓ D ⊑ ⊥` for named concepts.
    pub fn disjoint_names(left: usize, right: usize) -> Self {
        let (l, r) = (BoxTerm::Concept(left), BoxTerm::Concept(right));
        AxiomTerm::Overlap {
            meet: BoxTerm::meet(l.clone(), r.clone()),
            left: l,
            right: r,
        }
    }

    /// Compiles a conditional of a normalized TBox.
    pub fn compile(c: &Conditional, e: &BoxEmbedding) -> Result<Self, LossError> {
        let name = |c: &Concept| -> Result<Option<BoxTerm>, LossError> { BoxTerm::compile(c, e) };
        let top_err = || LossError::TopUnsupported(c.to_string());
        if !c.is_deterministic() {
            let body = name(&c.body)?.ok_or_else(top_err)?;
            let head = name(&c.head)?.ok_or_else(top_err)?;
            return Ok(AxiomTerm::Probabilistic {
                meet: BoxTerm::meet(body.clone(), head),
                body,
                lower: c.lower(),
                upper: c.upper(),
            });
        }
        if !is_normal_gci(&c.body, &c.head) {
            return Err(LossError::UnsupportedShape(c.to_string()));
        }
        if c.head == Concept::Top {
            return Ok(AxiomTerm::Satisfied);
        }
        match (&c.body, &c.head) {
            // A ⊑ ∃r.B
            (sub, Concept::Exists(role, filler)) => {
                let r = e.role_id(role).ok_or_else(|| LossError::UnknownRole(role.clone()))?;
                let Some(filler) = name(filler)? else {
                    return Ok(AxiomTerm::Satisfied);
                };
                let sub = name(sub)?.ok_or_else(top_err)?;
                Ok(AxiomTerm::disjoint(BoxTerm::Image(r, Box::new(sub)), filler))
            }
            // A ⊑ B, A1 ⊓ A2 ⊑ B, ∃r.A ⊑ B
            (sub, sup) => {
                let sub = name(sub)?.ok_or_else(top_err)?;
                let sup = name(sup)?.ok_or_else(top_err)?;
                Ok(AxiomTerm::disjoint(sub, sup))
            }
        }
    }

    fn value_with(&self, p: &Params<'_>, cfg: &LossConfig) -> f64 {
        let vol = |t: &BoxTerm| t.volume(p, cfg.volume);
        match self {
            AxiomTerm::Disjoint { inner, meet } => {
                let (i, d) = (vol(meet), vol(inner));
                1.0 - i / d.max(VOLUME_FLOOR)
            }
            AxiomTerm::Empty { concept } => (p.e.concept_log_side(*concept)[0].exp() + cfg.epsilon).max(0.0),
            AxiomTerm::Overlap { left, right, meet } => {
                vol(meet) / (vol(left) + vol(right)).max(VOLUME_FLOOR)
            }
            AxiomTerm::Probabilistic {
                body,
                meet,
                lower,
                upper,
            } => {
                let (b, i) = (vol(body), vol(meet));
                if cfg.relative {
                    let r = i / b.max(VOLUME_FLOOR);
                    (lower - r).max(0.0) + (r - upper).max(0.0)
                } else {
                    (lower * b - i).max(0.0) + (i - upper * b).max(0.0)
                }
            }
            AxiomTerm::Satisfied => 0.0,
        }
    }

    fn gradient_with(&self, p: &Params<'_>, cfg: &LossConfig, scale: f64, grad: &mut Gradient) -> f64 {
        let kind = cfg.volume;
        match self {
            AxiomTerm::Disjoint { inner, meet } => {
                let (i, d) = (meet.volume(p, kind), inner.volume(p, kind));
                if d > VOLUME_FLOOR {
                    meet.volume_backward(p, kind, -scale / d, grad);
                    inner.volume_backward(p, kind, scale * i / (d * d), grad);
                    1.0 - i / d
                } else {
                    meet.volume_backward(p, kind, -scale / VOLUME_FLOOR, grad);
                    1.0 - i / VOLUME_FLOOR
                }
            }
            AxiomTerm::Empty { concept } => {
                let n = p.dim();
                let side = p.e.concept_log_side(*concept)[0].exp();
                grad.log_side[concept * n] += scale * side;
                side + cfg.epsilon
            }
            AxiomTerm::Overlap { left, right, meet } => {
                let (i, vl, vr) = (meet.volume(p, kind), left.volume(p, kind), right.volume(p, kind));
                let s = vl + vr;
                if s > VOLUME_FLOOR {
                    meet.volume_backward(p, kind, scale / s, grad);
                    left.volume_backward(p, kind, -scale * i / (s * s), grad);
                    right.volume_backward(p, kind, -scale * i / (s * s), grad);
                    i / s
                } else {
                    meet.volume_backward(p, kind, scale / VOLUME_FLOOR, grad);
                    i / VOLUME_FLOOR
                }
            }
            AxiomTerm::Probabilistic {
                body,
                meet,
                lower,
                upper,
            } => {
                let (b, i) = (body.volume(p, kind), meet.volume(p, kind));
                if cfg.relative {
                    let d = b.max(VOLUME_FLOOR);
                    let r = i / d;
                    let (below, above) = (lower - r, r - upper);
                    let slope = if below > 0.0 {
                        -1.0
                    } else if above > 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    if slope != 0.0 {
                        meet.volume_backward(p, kind, scale * slope / d, grad);
                        if b > VOLUME_FLOOR {
                            body.volume_backward(p, kind, -scale * slope * i / (d * d), grad);
                        }
                    }
                    return below.max(0.0) + above.max(0.0);
                }
                let (below, above) = (lower * b - i, i - upper * b);
                let (mut d_body, mut d_meet) = (0.0, 0.0);
                if below > 0.0 {
                    d_body += lower;
                    d_meet -= 1.0;
                }
                if above > 0.0 {
                    d_meet += 1.0;
                    d_body -= upper;
                }
                body.volume_backward(p, kind, scale * d_body, grad);
                meet.volume_backward(p, kind, scale * d_meet, grad);
                below.max(0.0) + above.max(0.0)
            }
            AxiomTerm::Satisfied => 0.0,
        }
    }

    pub fn value(&self, e: &BoxEmbedding, cfg: &LossConfig) -> f64 {
        self.value_with(&params(e, cfg), cfg)
    }

    /// Adds `scale · ∂loss/∂params` to `grad` and returns the loss.
    pub fn accumulate_gradient(&self, e: &BoxEmbedding, cfg: &LossConfig, scale: f64, grad: &mut Gradient) -> f64 {
        self.gradient_with(&params(e, cfg), cfg, scale, grad)
    }
}

fn params<'a>(e: &'a BoxEmbedding, cfg: &LossConfig) -> Params<'a> {
    Params {
        e,
        mode: cfg.relation_mode,
    }
}

/// A normalized TBox compiled against an embedding's index.
#[derive(Debug, Clone)]
pub struct CompiledTBox {
    pub axioms: Vec<AxiomTerm>,
}

impl CompiledTBox {
    pub fn new(t: &TBox, e: &BoxEmbedding) -> Result<Self, LossError> {
        Ok(CompiledTBox {
            axioms: t.iter().map(|c| AxiomTerm::compile(c, e)).collect::<Result<_, _>>()?,
        })
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    /// Sum of axiom losses plus regularizers.
    pub fn total_loss(&self, e: &BoxEmbedding, cfg: &LossConfig) -> f64 {
        let p = params(e, cfg);
        let losses: Vec<f64> = self.axioms.iter().map(|a| a.value_with(&p, cfg)).collect();
        pairwise_sum(&losses) + regularizer_loss(e, cfg)
    }

    /// Axiom losses only.
    pub fn axiom_losses(&self, e: &BoxEmbedding, cfg: &LossConfig) -> Vec<f64> {
        let p = params(e, cfg);
        self.axioms.iter().map(|a| a.value_with(&p, cfg)).collect()
    }

    pub fn gradient(&self, e: &BoxEmbedding, cfg: &LossConfig) -> Gradient {
        let mut grad = Gradient::zeros_like(e);
        let p = params(e, cfg);
        for a in &self.axioms {
            a.gradient_with(&p, cfg, 1.0, &mut grad);
        }
        regularizer_gradient(e, cfg, 1.0, &mut grad);
        grad
    }
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Loss of a single conditional of a normalized TBox.
pub fn axiom_loss(axiom: &Conditional, e: &BoxEmbedding, cfg: &LossConfig) -> Result<f64, LossError> {
    Ok(AxiomTerm::compile(axiom, e)?.value(e, cfg))
}

pub fn total_loss(t: &TBox, e: &BoxEmbedding, cfg: &LossConfig) -> Result<f64, LossError> {
    Ok(CompiledTBox::new(t, e)?.total_loss(e, cfg))
}

pub fn loss_gradient(t: &TBox, e: &BoxEmbedding, cfg: &LossConfig) -> Result<Gradient, LossError> {
    Ok(CompiledTBox::new(t, e)?.gradient(e, cfg))
}

/// Location and volume regularizers over every concept box.
pub fn regularizer_loss(e: &BoxEmbedding, cfg: &LossConfig) -> f64 {
    let mut total = 0.0;
    let cube = cfg.beta.powi(e.dim() as i32);
    for id in 0..e.concept_names().len() {
        let b = e.concept_box(id);
        if cfg.use_loc {
            for i in 0..e.dim() {
                total += (b.upper[i] - cfg.beta + cfg.epsilon).max(0.0) + (-b.lower[i] - cfg.epsilon).max(0.0);
            }
        }
        if cfg.use_vol {
            total += (cube - cfg.volume.volume(&b) - cfg.epsilon).max(0.0);
        }
    }
    total
}

/// Adds `scale · ∂(regularizers)/∂params` to `grad`.
#[allow(clippy::needless_range_loop)]
pub fn regularizer_gradient(e: &BoxEmbedding, cfg: &LossConfig, scale: f64, grad: &mut Gradient) {
    if !cfg.use_loc && !cfg.use_vol {
        return;
    }
    let n = e.dim();
    let cube = cfg.beta.powi(n as i32);
    let p = params(e, cfg);
    for id in 0..e.concept_names().len() {
        let b = e.concept_box(id);
        let log_side = e.concept_log_side(id);
        if cfg.use_loc {
            for i in 0..n {
                if b.upper[i] - cfg.beta + cfg.epsilon > 0.0 {
                    grad.lower[id * n + i] += scale;
                    grad.log_side[id * n + i] += scale * log_side[i].exp();
                }
                if -b.lower[i] - cfg.epsilon > 0.0 {
                    grad.lower[id * n + i] -= scale;
                }
            }
        }
        if cfg.use_vol && cube - cfg.volume.volume(&b) - cfg.epsilon > 0.0 {
            BoxTerm::Concept(id).volume_backward(&p, cfg.volume, -scale, grad);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingMeta;
    use crate::ontology::{parse_tbox, Signature};

    fn embedding(names: &[&str], roles: &[&str], dim: usize) -> BoxEmbedding {
        let sig = Signature {
            concepts: names.iter().map(|s| s.to_string()).collect(),
            roles: roles.iter().map(|s| s.to_string()).collect(),
        };
        BoxEmbedding::zeros(&sig, dim, EmbeddingMeta::default())
    }

    fn set_box(e: &mut BoxEmbedding, name: &str, lower: &[f64], upper: &[f64]) {
        let id = e.concept_id(name).unwrap();
        let log_side: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| (u - l).ln()).collect();
        e.set_concept(id, lower, &log_side);
    }

    fn hard() -> LossConfig {
        LossConfig::default().hard().without_regularizers()
    }

    #[test]
    fn probabilistic_hinges() {
        // vol(A) = 10, vol(A ∩ B) = 4.
        let mut e = embedding(&["A", "B"], &[], 1);
        set_box(&mut e, "A", &[0.0], &[10.0]);
        set_box(&mut e, "B", &[6.0], &[20.0]);
        let c = &parse_tbox("cond 0.5 0.7 B | A").unwrap().conditionals()[0].clone();
        assert!((axiom_loss(c, &e, &hard()).unwrap() - 1.0).abs() < 1e-12);
        let inside = &parse_tbox("cond 0.3 0.5 B | A").unwrap().conditionals()[0].clone();
        assert_eq!(axiom_loss(inside, &e, &hard()).unwrap(), 0.0);
    }

    #[test]
    fn contained_subsumption_has_zero_hard_loss() {
        let mut e = embedding(&["C", "D"], &[], 2);
        set_box(&mut e, "C", &[1.0, 1.0], &[2.0, 2.0]);
        set_box(&mut e, "D", &[0.0, 0.0], &[3.0, 3.0]);
        let t = parse_tbox("gci C D").unwrap();
        assert_eq!(total_loss(&t, &e, &hard()).unwrap(), 0.0);
        let reverse = parse_tbox("gci D C").unwrap();
        assert!((total_loss(&reverse, &e, &hard()).unwrap() - (1.0 - 1.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_tbox_without_regularizers() {
        let e = embedding(&["A"], &[], 3);
        assert_eq!(total_loss(&TBox::new(), &e, &hard()).unwrap(), 0.0);
    }

    #[test]
    fn total_is_sum_of_axioms() {
        let mut e = embedding(&["A", "B", "C"], &["r"], 2);
        set_box(&mut e, "A", &[0.0, 0.0], &[2.0, 1.0]);
        set_box(&mut e, "B", &[1.0, 0.5], &[3.0, 2.0]);
        set_box(&mut e, "C", &[0.5, -1.0], &[1.5, 0.7]);
        e.set_role(0, &[0.2, -0.1], &[0.3, 0.1]);
        let t = parse_tbox("cond 0.2 0.3 B | A\ngci (and A B) C\ngci A (some r B)\ngci (some r C) A").unwrap();
        let cfg = LossConfig::default().with_temperature(0.3).without_regularizers();
        let sum: f64 = t.iter().map(|c| axiom_loss(c, &e, &cfg).unwrap()).sum();
        assert!((total_loss(&t, &e, &cfg).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn regularizers() {
        let mut e = embedding(&["A"], &[], 2);
        set_box(&mut e, "A", &[0.0, 0.0], &[10.0, 10.0]);
        let cfg = LossConfig::default().hard();
        let loc_only = LossConfig { use_vol: false, ..cfg };
        let vol_only = LossConfig { use_loc: false, ..cfg };
        assert!(regularizer_loss(&e, &loc_only) <= 4.0 * cfg.epsilon + 1e-12);
        assert!(regularizer_loss(&e, &vol_only) < 1e-9);

        set_box(&mut e, "A", &[0.0, 0.0], &[11.0, 5.0]);
        assert!(regularizer_loss(&e, &loc_only) >= 1.0 + cfg.epsilon - 1e-12);
        assert_eq!(regularizer_loss(&e, &cfg.without_regularizers()), 0.0);
    }

    #[test]
    fn unsupported_shapes() {
        let e = embedding(&["A", "B", "C"], &["r"], 2);
        let c = parse_tbox("gci (some r A) (and A B)").unwrap();
        assert!(matches!(
            axiom_loss(&c.conditionals()[0], &e, &hard()),
            Err(LossError::UnsupportedShape(_))
        ));
        let top = parse_tbox("cond 0.5 0.5 A | top").unwrap();
        assert!(matches!(
            axiom_loss(&top.conditionals()[0], &e, &hard()),
            Err(LossError::TopUnsupported(_))
        ));
        let trivial = parse_tbox("gci A top\ngci A (some r top)").unwrap();
        assert_eq!(total_loss(&trivial, &e, &hard()).unwrap(), 0.0);
        let unknown = parse_tbox("gci A Z").unwrap();
        assert!(matches!(
            total_loss(&unknown, &e, &hard()),
            Err(LossError::UnknownConcept(_))
        ));
    }

    #[test]
    fn zero_loss_has_zero_hinge_gradient() {
        let mut e = embedding(&["A", "B"], &[], 2);
        set_box(&mut e, "A", &[0.0, 0.0], &[2.0, 2.0]);
        set_box(&mut e, "B", &[1.0, 0.0], &[3.0, 2.0]);
        let t = parse_tbox("cond 0.4 0.6 B | A").unwrap();
        let cfg = LossConfig::default().with_temperature(1e-3).without_regularizers();
        let g = loss_gradient(&t, &e, &cfg).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn translation_mode_freezes_log_diag() {
        let mut e = embedding(&["A", "B"], &["r"], 2);
        set_box(&mut e, "A", &[0.0, 0.0], &[2.0, 2.0]);
        set_box(&mut e, "B", &[1.0, 0.5], &[3.0, 2.0]);
        e.set_role(0, &[0.3, -0.2], &[0.5, 0.1]);
        let t = parse_tbox("gci A (some r B)\ngci (some r B) A").unwrap();
        let cfg = LossConfig {
            relation_mode: RelationMode::Translation,
            ..LossConfig::default().with_temperature(0.5)
        };
        let g = loss_gradient(&t, &e, &cfg).unwrap();
        assert!(g.log_diag.iter().all(|v| *v == 0.0));
        assert!(g.offset.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn bottom_terms() {
        let mut e = embedding(&["A", "B"], &[], 2);
        set_box(&mut e, "A", &[0.0, 0.0], &[2.0, 2.0]);
        set_box(&mut e, "B", &[1.0, 0.0], &[3.0, 2.0]);
        let cfg = hard();
        let empty = AxiomTerm::bottom(0);
        assert!((empty.value(&e, &cfg) - (2.0 + cfg.epsilon)).abs() < 1e-12);
        let overlap = AxiomTerm::disjoint_names(0, 1);
        assert!((overlap.value(&e, &cfg) - 2.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..37).map(|i| i as f64 * 0.25).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
