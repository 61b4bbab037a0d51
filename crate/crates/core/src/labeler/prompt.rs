use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::labels::MetaProperty;
use crate::spanning::{random_spanning_tree, to_hierarchical_text};
use crate::taxonomy::{to_flat_text, Taxonomy};

/// First line of every prompt.
pub const INSTRUCTION: &str = "Label this ontology with OntoClean criteria.";

/// Response-format instruction appended to every prompt.
pub const OUTPUT_FORMAT: &str =
    "Answer with one line per class, formatted exactly as: <ClassName>: I+|-, U+|-|~, R+|-|~, D+|-";

pub const GUIDANCE_PREFIX: &str = "Additional guidance:";

static DEFAULT_DEFINITIONS: LazyLock<BTreeMap<MetaProperty, String>> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../data/definitions.json")).expect("bundled definitions are valid")
});

/// Bundled meta-property definitions used by the in-context prompt.
pub fn default_definitions() -> BTreeMap<MetaProperty, String> {
    DEFAULT_DEFINITIONS.clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    #[serde(alias = "zero")]
    ZeroShot,
    #[serde(alias = "incontext")]
    InContext,
}

impl PromptStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::ZeroShot => "zero",
            Self::InContext => "incontext",
        }
    }
}

impl std::str::FromStr for PromptStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" | "zero_shot" | "zero-shot" => Ok(Self::ZeroShot),
            "incontext" | "in_context" | "in-context" => Ok(Self::InContext),
            other => Err(format!("unknown prompt strategy {other:?}")),
        }
    }
}

/// How the ontology is rendered into the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    Flat,
    Hierarchical { seed: u64 },
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Hierarchical { .. } => "hier",
        }
    }

    pub fn render(self, t: &Taxonomy) -> String {
        match self {
            Self::Flat => to_flat_text(t),
            Self::Hierarchical { seed } => to_hierarchical_text(&random_spanning_tree(t, seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub strategy: PromptStrategy,
    pub representation: Representation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guidance: Option<String>,
    #[serde(default = "default_definitions")]
    pub definitions: BTreeMap<MetaProperty, String>,
}

impl PromptConfig {
    pub fn new(strategy: PromptStrategy, representation: Representation) -> Self {
        Self {
            strategy,
            representation,
            guidance: None,
            definitions: default_definitions(),
        }
    }

    pub fn with_guidance(mut self, guidance: impl Into<String>) -> Self {
        self.guidance = Some(guidance.into());
        self
    }

    /// In-context prompts need a nonempty definition for all four properties.
    pub fn validate(&self) -> Result<(), String> {
        if self.strategy == PromptStrategy::InContext {
            for p in MetaProperty::ALL {
                if self.definitions.get(&p).is_none_or(|d| d.trim().is_empty()) {
                    return Err(format!("in-context prompt is missing a {} definition", p.name()));
                }
            }
        }
        Ok(())
    }
}

/// Assembles the prompt: instruction, definitions (in-context only),
/// guidance, output format, then the rendered ontology after a blank line.
pub fn build_prompt(t: &Taxonomy, cfg: &PromptConfig) -> String {
    let mut parts: Vec<String> = vec![INSTRUCTION.to_owned()];
    if cfg.strategy == PromptStrategy::InContext {
        for p in MetaProperty::ALL {
            if let Some(def) = cfg.definitions.get(&p) {
                parts.push(format!("{}='{}'", p.name(), def));
            }
        }
    }
    if let Some(guidance) = cfg.guidance.as_deref().filter(|g| !g.trim().is_empty()) {
        parts.push(format!("{GUIDANCE_PREFIX} {guidance}"));
    }
    parts.push(OUTPUT_FORMAT.to_owned());
    parts.push(String::new());
    parts.push(cfg.representation.render(t));
    parts.join("\n")
}
