//! Embedding parameters and their JSON file format.
//!
//! Every concept `C` owns a lower corner `m(C)` and a log-offset `δ(C)`; its
//! box is `[m, m + exp(δ)]`. Every role `r` owns a log-diagonal and an offset
//! defining the map `x ↦ exp(log_diag)·x + b`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{AffineMap, AxisBox};
use crate::ontology::Signature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RelationMode {
    /// Diagonal scaling plus translation.
    #[default]
    Affine,
    /// Translation only; the diagonal stays the identity.
    Translation,
}

impl fmt::Display for RelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationMode::Affine => "affine",
            RelationMode::Translation => "translation",
        })
    }
}

impl std::str::FromStr for RelationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "affine" => Ok(RelationMode::Affine),
            "translation" => Ok(RelationMode::Translation),
            other => Err(format!("unknown relation mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub beta: f64,
    pub relation_mode: RelationMode,
}

impl Default for EmbeddingMeta {
    fn default() -> Self {
        EmbeddingMeta {
            seed: 0,
            epochs: 0,
            beta: 10.0,
            relation_mode: RelationMode::Affine,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("entry `{name}` has {found} coordinates, expected {expected}")]
    BadLength {
        name: String,
        found: usize,
        expected: usize,
    },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Parameter storage. Concepts and roles are indexed in sorted name order;
/// each owns `dim` consecutive entries in the flat vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxEmbedding {
    dim: usize,
    concept_names: Vec<String>,
    concept_index: HashMap<String, usize>,
    role_names: Vec<String>,
    role_index: HashMap<String, usize>,
    pub(crate) lower: Vec<f64>,
    pub(crate) log_side: Vec<f64>,
    pub(crate) log_diag: Vec<f64>,
    pub(crate) offset: Vec<f64>,
    pub meta: EmbeddingMeta,
}

fn index_of(names: &[String]) -> HashMap<String, usize> {
    names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect()
}

impl BoxEmbedding {
    /// All-zero parameters (unit boxes at the origin, identity roles).
    pub fn zeros(signature: &Signature, dim: usize, meta: EmbeddingMeta) -> Self {
        assert!(dim >= 1, "embedding dimension must be at least 1");
        let concept_names: Vec<String> = signature.concepts.iter().cloned().collect();
        let role_names: Vec<String> = signature.roles.iter().cloned().collect();
        let (nc, nr) = (concept_names.len(), role_names.len());
        BoxEmbedding {
            dim,
            concept_index: index_of(&concept_names),
            role_index: index_of(&role_names),
            concept_names,
            role_names,
            lower: vec![0.0; nc * dim],
            log_side: vec![0.0; nc * dim],
            log_diag: vec![0.0; nr * dim],
            offset: vec![0.0; nr * dim],
            meta,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn concept_names(&self) -> &[String] {
        &self.concept_names
    }

    pub fn role_names(&self) -> &[String] {
        &self.role_names
    }

    pub fn concept_id(&self, name: &str) -> Option<usize> {
        self.concept_index.get(name).copied()
    }

    pub fn role_id(&self, name: &str) -> Option<usize> {
        self.role_index.get(name).copied()
    }

    pub fn covers(&self, signature: &Signature) -> Result<(), EmbeddingError> {
        if let Some(c) = signature.concepts.iter().find(|c| self.concept_id(c).is_none()) {
            return Err(EmbeddingError::UnknownConcept(c.clone()));
        }
        if let Some(r) = signature.roles.iter().find(|r| self.role_id(r).is_none()) {
            return Err(EmbeddingError::UnknownRole(r.clone()));
        }
        Ok(())
    }

    fn span(&self, id: usize) -> std::ops::Range<usize> {
        id * self.dim..(id + 1) * self.dim
    }

    pub fn concept_lower(&self, id: usize) -> &[f64] {
        &self.lower[self.span(id)]
    }

    pub fn concept_log_side(&self, id: usize) -> &[f64] {
        &self.log_side[self.span(id)]
    }

    pub fn set_concept(&mut self, id: usize, lower: &[f64], log_side: &[f64]) {
        let span = self.span(id);
        self.lower[span.clone()].copy_from_slice(lower);
        self.log_side[span].copy_from_slice(log_side);
    }

    pub fn role_log_diag(&self, id: usize) -> &[f64] {
        &self.log_diag[self.span(id)]
    }

    pub fn role_offset(&self, id: usize) -> &[f64] {
        &self.offset[self.span(id)]
    }

    pub fn set_role(&mut self, id: usize, log_diag: &[f64], offset: &[f64]) {
        let span = self.span(id);
        self.log_diag[span.clone()].copy_from_slice(log_diag);
        self.offset[span].copy_from_slice(offset);
    }

    /// `[m, m + exp(δ)]`.
    pub fn concept_box(&self, id: usize) -> AxisBox {
        let lower = self.concept_lower(id).to_vec();
        let upper = lower
            .iter()
            .zip(self.concept_log_side(id))
            .map(|(m, d)| m + d.exp())
            .collect();
        AxisBox { lower, upper }
    }

    /// Diagonal of the role map; the identity in translation mode.
    pub fn role_diag(&self, id: usize) -> Vec<f64> {
        match self.meta.relation_mode {
            RelationMode::Affine => self.role_log_diag(id).iter().map(|x| x.exp()).collect(),
            RelationMode::Translation => vec![1.0; self.dim],
        }
    }

    pub fn role_map(&self, id: usize) -> AffineMap {
        AffineMap::new(self.role_diag(id), self.role_offset(id).to_vec())
    }

    pub fn parameter_count(&self) -> usize {
        self.lower.len() + self.log_side.len() + self.log_diag.len() + self.offset.len()
    }

    /// All parameters in the order lower corners, log-offsets, role
    /// log-diagonals, role offsets; the same order as `Gradient::iter`.
    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.lower.iter().chain(&self.log_side).chain(&self.log_diag).chain(&self.offset)
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.lower
            .iter_mut()
            .chain(self.log_side.iter_mut())
            .chain(self.log_diag.iter_mut())
            .chain(self.offset.iter_mut())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("embedding serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EmbeddingError> {
        Self::from_file(serde_json::from_str(text)?)
    }

    fn to_file(&self) -> EmbeddingFile {
        EmbeddingFile {
            dim: self.dim,
            concepts: self
                .concept_names
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    (
                        n.clone(),
                        ConceptEntry {
                            m: self.concept_lower(i).to_vec(),
                            delta: self.concept_log_side(i).to_vec(),
                        },
                    )
                })
                .collect(),
            roles: self
                .role_names
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    (
                        n.clone(),
                        RoleEntry {
                            log_diag: self.role_log_diag(i).to_vec(),
                            b: self.role_offset(i).to_vec(),
                        },
                    )
                })
                .collect(),
            meta: self.meta.clone(),
        }
    }

    fn from_file(file: EmbeddingFile) -> Result<Self, EmbeddingError> {
        if file.dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        let signature = Signature {
            concepts: file.concepts.keys().cloned().collect(),
            roles: file.roles.keys().cloned().collect(),
        };
        let mut e = BoxEmbedding::zeros(&signature, file.dim, file.meta);
        let check = |name: &str, v: &[f64]| {
            if v.len() == file.dim {
                Ok(())
            } else {
                Err(EmbeddingError::BadLength {
                    name: name.to_string(),
                    found: v.len(),
                    expected: file.dim,
                })
            }
        };
        for (i, (name, entry)) in file.concepts.iter().enumerate() {
            check(name, &entry.m)?;
            check(name, &entry.delta)?;
            e.set_concept(i, &entry.m, &entry.delta);
        }
        for (i, (name, entry)) in file.roles.iter().enumerate() {
            check(name, &entry.log_diag)?;
            check(name, &entry.b)?;
            e.set_role(i, &entry.log_diag, &entry.b);
        }
        Ok(e)
    }
}

#[derive(Serialize, Deserialize)]
struct ConceptEntry {
    m: Vec<f64>,
    delta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RoleEntry {
    log_diag: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    dim: usize,
    concepts: BTreeMap<String, ConceptEntry>,
    roles: BTreeMap<String, RoleEntry>,
    meta: EmbeddingMeta,
}
