//! Building blocks for OntoClean-based ontology refinement: taxonomies and
//! their text renderings, the meta-property constraint engine, LLM labelling,
//! and the accuracy harness.

pub mod engine;
pub mod eval;
pub mod labeler;
pub mod labels;
pub mod spanning;
pub mod taxonomy;

pub use engine::{
    check_all, check_constraints, check_sortal_individuation, explain_violation, infer_forced_labels, EngineError,
    Violation, ViolationKind,
};
pub use labels::{
    DependenceValue, IdentityValue, LabelError, LabelSet, Labeling, MetaProperty, RigidityValue, Sign, UnityValue,
};
pub use spanning::{random_spanning_tree, to_hierarchical_text, SpanningTree};
pub use taxonomy::{
    parse_taxonomy, serialize_taxonomy, to_flat_text, ClassId, Taxonomy, TaxonomyBuilder, TaxonomyError, TaxonomyFormat,
};
