//! Box embeddings for Statistical EL (SEL) ontologies.
//!
//! The crate covers the whole workflow: parsing and normalizing TBoxes of
//! probabilistic conditionals, training box embeddings whose volume ratios
//! reproduce the stated proportions, answering conditional queries from one or
//! more embeddings, and checking those answers against exact reasoning
//! (Probabilistic Modus Ponens and a type-based linear program for the
//! role-free fragment).

pub mod embedding;
pub mod experiment;
pub mod generator;
pub mod geometry;
pub mod inference;
pub mod interval;
pub mod loss;
pub mod metrics;
pub mod normalize;
pub mod ontology;
pub mod oracle;
pub mod pmp;
pub mod train;

pub use embedding::{BoxEmbedding, EmbeddingMeta, RelationMode};
pub use geometry::{AffineMap, AxisBox, VolumeKind};
pub use inference::GeometricInterpretation;
pub use interval::ProbInterval;
pub use ontology::{Concept, Conditional, Shape, TBox};
