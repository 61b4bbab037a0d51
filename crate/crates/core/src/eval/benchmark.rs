use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::engine::check_constraints;
use crate::labels::Labeling;
use crate::taxonomy::{parse_taxonomy, Taxonomy, TaxonomyFormat};

/// Names of the bundled benchmarks.
pub const BENCHMARK_NAMES: [&str; 2] = ["pizza", "upper"];

/// Per-benchmark metadata shipped next to the data files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub name: String,
    #[serde(default)]
    pub version: u32,
    pub class_count: usize,
    pub sources: Vec<String>,
    /// Rationale for each gold label assignment, keyed by class id.
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

/// A taxonomy with a total, constraint-clean gold labeling.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub taxonomy: Taxonomy,
    pub gold: Labeling,
    pub manifest: BenchmarkManifest,
}

/// Raw bundled files for a benchmark: (taxonomy, gold, manifest) JSON.
pub fn bundled_files(name: &str) -> Option<(&'static str, &'static str, &'static str)> {
    match name {
        "pizza" => Some((
            include_str!("../../data/benchmarks/pizza/taxonomy.json"),
            include_str!("../../data/benchmarks/pizza/gold.json"),
            include_str!("../../data/benchmarks/pizza/manifest.json"),
        )),
        "upper" => Some((
            include_str!("../../data/benchmarks/upper/taxonomy.json"),
            include_str!("../../data/benchmarks/upper/gold.json"),
            include_str!("../../data/benchmarks/upper/manifest.json"),
        )),
        _ => None,
    }
}

pub fn load_benchmark(name: &str) -> Result<Benchmark, EvalError> {
    let (taxonomy, gold, manifest) = bundled_files(name).ok_or_else(|| EvalError::UnknownBenchmark(name.to_owned()))?;
    load_benchmark_from(name, taxonomy, gold, manifest)
}

/// Parses and validates benchmark files.
pub fn load_benchmark_from(
    name: &str,
    taxonomy_json: &str,
    gold_json: &str,
    manifest_json: &str,
) -> Result<Benchmark, EvalError> {
    let corrupt = |invariant: String| EvalError::CorruptBenchmark {
        name: name.to_owned(),
        invariant,
    };
    let taxonomy = parse_taxonomy(taxonomy_json, TaxonomyFormat::Json)
        .map_err(|e| corrupt(format!("taxonomy does not parse: {e}")))?;
    let gold: Labeling =
        serde_json::from_str(gold_json).map_err(|e| corrupt(format!("gold labels do not parse: {e}")))?;
    let manifest: BenchmarkManifest =
        serde_json::from_str(manifest_json).map_err(|e| corrupt(format!("manifest does not parse: {e}")))?;

    if manifest.name != name {
        return Err(corrupt(format!("manifest names benchmark {:?}", manifest.name)));
    }
    if manifest.class_count != taxonomy.len() {
        return Err(corrupt(format!(
            "manifest declares {} classes but the taxonomy has {}",
            manifest.class_count,
            taxonomy.len()
        )));
    }
    if let Some(extra) = gold.classes().find(|c| !taxonomy.contains(c.as_str())) {
        return Err(corrupt(format!("gold labels unknown class {extra}")));
    }
    if let Some(c) = taxonomy
        .classes()
        .iter()
        .find(|c| !gold.get(c.as_str()).is_some_and(|ls| ls.is_total()))
    {
        return Err(corrupt(format!("gold is not total: {c} lacks a value")));
    }
    let violations = check_constraints(&taxonomy, &gold).map_err(|e| corrupt(e.to_string()))?;
    if let Some(v) = violations.first() {
        return Err(corrupt(format!(
            "gold has {} constraint violation(s), first: {}",
            violations.len(),
            v.message
        )));
    }
    Ok(Benchmark {
        name: name.to_owned(),
        taxonomy,
        gold,
        manifest,
    })
}
