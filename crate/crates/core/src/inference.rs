//! Query answering over trained embeddings.
//!
//! An embedding is read as an interpretation over `ℝⁿ` in which concepts are
//! boxes and roles are diagonal affine maps; proportions are volume ratios.

use crate::embedding::BoxEmbedding;
use crate::geometry::{AxisBox, VolumeKind, VOLUME_FLOOR};
use crate::interval::ProbInterval;
use crate::loss::{BoxTerm, LossError};
use crate::ontology::{Concept, Conditional};

/// Slack allowed in [`satisfies`].
pub const SATISFACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("`top` has no finite box")]
    Top,
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("body box is degenerate (volume {0:e})")]
    DegenerateBody(f64),
    #[error("no embeddings given")]
    EmptyEnsemble,
}

impl From<LossError> for InferenceError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::UnknownConcept(n) => InferenceError::UnknownConcept(n),
            LossError::UnknownRole(n) => InferenceError::UnknownRole(n),
            _ => InferenceError::Top,
        }
    }
}

/// An embedding viewed as an interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricInterpretation {
    embedding: BoxEmbedding,
}

impl GeometricInterpretation {
    pub fn new(embedding: BoxEmbedding) -> Self {
        GeometricInterpretation { embedding }
    }

    pub fn embedding(&self) -> &BoxEmbedding {
        &self.embedding
    }

    /// `None` stands for the whole space.
    fn extension(&self, c: &Concept) -> Result<Option<AxisBox>, InferenceError> {
        let e = &self.embedding;
        Ok(BoxTerm::compile(c, e)?.map(|t| t.evaluate(e, e.meta.relation_mode)))
    }

    /// The box denoted by `c`. Fails if `c` denotes the whole space, which is
    /// only possible when it mentions `top`.
    pub fn box_of(&self, c: &Concept) -> Result<AxisBox, InferenceError> {
        self.extension(c)?.ok_or(InferenceError::Top)
    }

    /// `vol(head ∩ body) / vol(body)` with hard volumes.
    pub fn point_estimate(&self, head: &Concept, body: &Concept) -> Result<f64, InferenceError> {
        let body = self.box_of(body)?;
        let v = VolumeKind::Hard.volume(&body);
        if v <= VOLUME_FLOOR {
            return Err(InferenceError::DegenerateBody(v));
        }
        let meet = match self.extension(head)? {
            Some(h) => meet(&h, &body),
            None => return Ok(1.0),
        };
        Ok((VolumeKind::Hard.volume(&meet) / v).clamp(0.0, 1.0))
    }

    /// Checks `l·vol(C) ≤ vol(D ∩ C) ≤ u·vol(C)` on hard volumes.
    pub fn satisfies(&self, c: &Conditional) -> Result<Satisfaction, InferenceError> {
        let Some(body) = self.extension(&c.body)? else {
            return Ok(Satisfaction {
                holds: false,
                violation: f64::INFINITY,
            });
        };
        let vb = VolumeKind::Hard.volume(&body);
        if vb == 0.0 {
            return Ok(Satisfaction {
                holds: true,
                violation: 0.0,
            });
        }
        let vm = match self.extension(&c.head)? {
            Some(h) => VolumeKind::Hard.volume(&meet(&h, &body)),
            None => vb,
        };
        let (below, above) = (c.lower() * vb - vm, vm - c.upper() * vb);
        Ok(Satisfaction {
            holds: below <= SATISFACTION_TOLERANCE && above <= SATISFACTION_TOLERANCE,
            violation: below.max(0.0) + above.max(0.0),
        })
    }
}

fn meet(a: &AxisBox, b: &AxisBox) -> AxisBox {
    AxisBox {
        lower: a.lower.iter().zip(&b.lower).map(|(x, y)| x.max(*y)).collect(),
        upper: a.upper.iter().zip(&b.upper).map(|(x, y)| x.min(*y)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Satisfaction {
    pub holds: bool,
    /// Hard-volume hinge loss of the conditional.
    pub violation: f64,
}

/// `[min, max]` of the point estimates of all members. Members with a
/// degenerate body box are skipped; if every member is skipped the answer
/// is `Vacuous`.
pub fn ensemble_interval(
    members: &[GeometricInterpretation],
    head: &Concept,
    body: &Concept,
) -> Result<ProbInterval, InferenceError> {
    if members.is_empty() {
        return Err(InferenceError::EmptyEnsemble);
    }
    let mut range: Option<(f64, f64)> = None;
    for (k, m) in members.iter().enumerate() {
        match m.point_estimate(head, body) {
            Ok(p) => {
                range = Some(match range {
                    None => (p, p),
                    Some((lo, hi)) => (lo.min(p), hi.max(p)),
                })
            }
            Err(InferenceError::DegenerateBody(v)) => {
                log::warn!("embedding {k}: skipping query with degenerate body (volume {v:e})");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(match range {
        Some((lower, upper)) => ProbInterval::Bounds { lower, upper },
        None => ProbInterval::Vacuous,
    })
}
