//! Class taxonomies: named classes plus acyclic subsumption edges.
//!
//! A [`Taxonomy`] is immutable once built. Class insertion order is kept and
//! is the authoritative order for every rendering (flat lists, child order,
//! serialization).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building, parsing or serializing a taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("invalid class id {id:?}: {reason}")]
    InvalidClassId { id: String, reason: &'static str },
    #[error("class {0} is declared more than once")]
    DuplicateClass(String),
    #[error("edge ({sub}, {sup}) refers to undeclared class {missing}")]
    UnknownParent { sub: String, sup: String, missing: String },
    #[error("subsumption cycle: {}", .cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("class {class} has {parents} parents; the indented format requires a tree")]
    NotATree { class: String, parents: usize },
}

/// Name of a class. Nonempty, no surrounding whitespace, no tab or line breaks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClassId(String);

impl ClassId {
    pub fn new(value: impl Into<String>) -> Result<Self, TaxonomyError> {
        let value = value.into();
        let reason = if value.is_empty() {
            Some("empty")
        } else if value.contains(['\t', '\n', '\r']) {
            Some("contains a tab or line break")
        } else if value.trim() != value {
            Some("leading or trailing whitespace")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(TaxonomyError::InvalidClassId { id: value, reason }),
            None => Ok(Self(value)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ClassId {
    type Error = TaxonomyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl TryFrom<&str> for ClassId {
    type Error = TaxonomyError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ClassId> for String {
    fn from(id: ClassId) -> Self {
        id.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for ClassId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for ClassId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Input formats understood by [`parse_taxonomy`] and [`serialize_taxonomy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxonomyFormat {
    Json,
    Indented,
}

impl std::str::FromStr for TaxonomyFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "indented" | "indent" | "txt" => Ok(Self::Indented),
            other => Err(format!("unknown taxonomy format {other:?}")),
        }
    }
}

/// A validated class taxonomy (a DAG over classes; edges point sub -> super).
///
/// Serializes to the same document shape as [`TaxonomyFormat::Json`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "JsonTaxonomy", into = "JsonTaxonomy")]
pub struct Taxonomy {
    classes: Vec<ClassId>,
    index: HashMap<ClassId, usize>,
    descriptions: Vec<Option<String>>,
    // Both adjacency lists are sorted by class position.
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::builder().build().expect("empty taxonomy is valid")
    }
}

impl Taxonomy {
    pub fn builder() -> TaxonomyBuilder {
        TaxonomyBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Classes in insertion order.
    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn class(&self, pos: usize) -> &ClassId {
        &self.classes[pos]
    }

    /// Position of a class in insertion order.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn description(&self, pos: usize) -> Option<&str> {
        self.descriptions[pos].as_deref()
    }

    pub fn parents(&self, pos: usize) -> &[usize] {
        &self.parents[pos]
    }

    pub fn children(&self, pos: usize) -> &[usize] {
        &self.children[pos]
    }

    /// All `(sub, super)` edges as positions, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(sub, ps)| ps.iter().map(move |&sup| (sub, sup)))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, sub: usize, sup: usize) -> bool {
        self.parents[sub].binary_search(&sup).is_ok()
    }

    /// True when every class has at most one parent.
    pub fn is_tree(&self) -> bool {
        self.parents.iter().all(|ps| ps.len() <= 1)
    }

    /// Topological order (supers before subs), ties broken by insertion order.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut pending: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = pending
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(Reverse(next)) = ready.pop() {
            order.push(next);
            for &child in &self.children[next] {
                pending[child] -= 1;
                if pending[child] == 0 {
                    ready.push(Reverse(child));
                }
            }
        }
        order
    }

    /// Every strict ancestor of `pos` with its shortest-path distance,
    /// in breadth-first order.
    pub fn ancestors(&self, pos: usize) -> Vec<(usize, usize)> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        dist[pos] = 0;
        queue.push_back(pos);
        while let Some(cur) = queue.pop_front() {
            for &p in &self.parents[cur] {
                if dist[p] == usize::MAX {
                    dist[p] = dist[cur] + 1;
                    out.push((p, dist[p]));
                    queue.push_back(p);
                }
            }
        }
        out
    }
}

/// Incremental construction of a [`Taxonomy`]; validation happens in
/// [`TaxonomyBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct TaxonomyBuilder {
    classes: Vec<ClassId>,
    index: HashMap<ClassId, usize>,
    descriptions: Vec<Option<String>>,
    edges: Vec<(String, String)>,
}

impl TaxonomyBuilder {
    pub fn class(mut self, id: &str) -> Result<Self, TaxonomyError> {
        self.add_class(id, None)?;
        Ok(self)
    }

    pub fn edge(mut self, sub: &str, sup: &str) -> Self {
        self.add_edge(sub, sup);
        self
    }

    pub fn add_class(&mut self, id: &str, description: Option<String>) -> Result<usize, TaxonomyError> {
        let id = ClassId::new(id)?;
        if self.index.contains_key(&id) {
            return Err(TaxonomyError::DuplicateClass(id.0));
        }
        let pos = self.classes.len();
        self.index.insert(id.clone(), pos);
        self.classes.push(id);
        self.descriptions.push(description);
        Ok(pos)
    }

    pub fn add_edge(&mut self, sub: &str, sup: &str) {
        self.edges.push((sub.to_owned(), sup.to_owned()));
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn build(self) -> Result<Taxonomy, TaxonomyError> {
        let n = self.classes.len();
        let mut parents = vec![Vec::new(); n];
        for (sub, sup) in &self.edges {
            let unknown = |missing: &str| TaxonomyError::UnknownParent {
                sub: sub.clone(),
                sup: sup.clone(),
                missing: missing.to_owned(),
            };
            let s = self.position(sub).ok_or_else(|| unknown(sub))?;
            let p = self.position(sup).ok_or_else(|| unknown(sup))?;
            parents[s].push(p);
        }
        let mut children = vec![Vec::new(); n];
        for (sub, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            ps.dedup();
            for &p in ps.iter() {
                children[p].push(sub);
            }
        }
        if let Some(cycle) = find_cycle(&parents) {
            return Err(TaxonomyError::CycleDetected {
                cycle: cycle.into_iter().map(|i| self.classes[i].0.clone()).collect(),
            });
        }
        Ok(Taxonomy {
            classes: self.classes,
            index: self.index,
            descriptions: self.descriptions,
            parents,
            children,
        })
    }
}

/// Returns one cycle (following sub -> super edges) if the graph has any.
fn find_cycle(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; parents.len()];
    for start in 0..parents.len() {
        if mark[start] != Mark::New {
            continue;
        }
        // (node, next parent slot)
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Active;
        while let Some(&mut (node, ref mut slot)) = stack.last_mut() {
            if let Some(&next) = parents[node].get(*slot) {
                *slot += 1;
                match mark[next] {
                    Mark::New => {
                        mark[next] = Mark::Active;
                        stack.push((next, 0));
                    }
                    Mark::Active => {
                        let from = stack.iter().position(|&(n, _)| n == next).unwrap();
                        return Some(stack[from..].iter().map(|&(n, _)| n).collect());
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

#[derive(Serialize, Deserialize)]
struct JsonClass {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonTaxonomy {
    classes: Vec<JsonClass>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

/// Parses a taxonomy from JSON or tab-indented text.
pub fn parse_taxonomy(text: &str, format: TaxonomyFormat) -> Result<Taxonomy, TaxonomyError> {
    match format {
        TaxonomyFormat::Json => parse_json(text),
        TaxonomyFormat::Indented => parse_indented(text),
    }
}

impl TryFrom<JsonTaxonomy> for Taxonomy {
    type Error = TaxonomyError;

    fn try_from(doc: JsonTaxonomy) -> Result<Self, Self::Error> {
        from_json_doc(doc)
    }
}

impl From<Taxonomy> for JsonTaxonomy {
    fn from(t: Taxonomy) -> Self {
        to_json_value(&t)
    }
}

fn parse_json(text: &str) -> Result<Taxonomy, TaxonomyError> {
    let doc: JsonTaxonomy = serde_json::from_str(text).map_err(|e| TaxonomyError::SyntaxError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_json_doc(doc)
}

fn from_json_doc(doc: JsonTaxonomy) -> Result<Taxonomy, TaxonomyError> {
    let mut builder = Taxonomy::builder();
    for class in doc.classes {
        builder.add_class(&class.id, class.description)?;
    }
    for (sub, sup) in &doc.edges {
        builder.add_edge(sub, sup);
    }
    builder.build()
}

// In the indented format a class may be mentioned more than once: the first
// mention declares it, later mentions only add the edge implied by their
// position. An optional description follows the name after a tab.
fn parse_indented(text: &str) -> Result<Taxonomy, TaxonomyError> {
    let mut builder = Taxonomy::builder();
    let mut stack: Vec<String> = Vec::new();
    for (lineno, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let syntax = |column: usize, message: String| TaxonomyError::SyntaxError {
            line: lineno + 1,
            column,
            message,
        };
        let depth = line.chars().take_while(|&c| c == '\t').count();
        let rest = &line[depth..];
        if rest.starts_with(char::is_whitespace) {
            return Err(syntax(depth + 1, "indentation must use tab characters only".into()));
        }
        if depth > stack.len() {
            return Err(syntax(
                depth,
                format!(
                    "indentation jumps to depth {depth} but the previous line is at depth {}",
                    stack.len().saturating_sub(1)
                ),
            ));
        }
        let (name, description) = match rest.split_once('\t') {
            Some((name, desc)) => {
                let desc = unescape(desc).map_err(|m| syntax(depth + name.chars().count() + 2, m))?;
                (name, Some(desc))
            }
            None => (rest, None),
        };
        let id = ClassId::new(name).map_err(|e| syntax(depth + 1, e.to_string()))?;
        match builder.position(id.as_str()) {
            None => {
                builder.add_class(id.as_str(), description)?;
            }
            Some(pos) => {
                if let Some(desc) = description {
                    match &builder.descriptions[pos] {
                        Some(existing) if *existing != desc => {
                            return Err(syntax(depth + 1, format!("conflicting description for {id}")));
                        }
                        _ => builder.descriptions[pos] = Some(desc),
                    }
                }
            }
        }
        stack.truncate(depth);
        if let Some(parent) = stack.last() {
            builder.add_edge(id.as_str(), parent);
        }
        stack.push(id.0);
    }
    builder.build()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some(other) => return Err(format!("unknown escape \\{other} in description")),
            None => return Err("dangling backslash in description".into()),
        }
    }
    Ok(out)
}

/// Serializes a taxonomy. The indented format only supports trees.
pub fn serialize_taxonomy(t: &Taxonomy, format: TaxonomyFormat) -> Result<String, TaxonomyError> {
    match format {
        TaxonomyFormat::Json => Ok(to_json_string(t)),
        TaxonomyFormat::Indented => serialize_indented(t),
    }
}

fn to_json_value(t: &Taxonomy) -> JsonTaxonomy {
    JsonTaxonomy {
        classes: t
            .classes
            .iter()
            .zip(&t.descriptions)
            .map(|(id, d)| JsonClass {
                id: id.0.clone(),
                description: d.clone(),
            })
            .collect(),
        edges: t
            .edges()
            .map(|(s, p)| (t.classes[s].0.clone(), t.classes[p].0.clone()))
            .collect(),
    }
}

fn to_json_string(t: &Taxonomy) -> String {
    serde_json::to_string_pretty(&to_json_value(t)).expect("taxonomy json is always serializable")
}

// Emits lines so that first mentions follow insertion order exactly. A class
// whose parent is not declared yet is mentioned at depth 0 and attached to its
// parent once the parent has been declared.
fn serialize_indented(t: &Taxonomy) -> Result<String, TaxonomyError> {
    if let Some(pos) = (0..t.len()).find(|&i| t.parents[i].len() > 1) {
        return Err(TaxonomyError::NotATree {
            class: t.classes[pos].0.clone(),
            parents: t.parents[pos].len(),
        });
    }
    let parent = |i: usize| t.parents[i].first().copied();
    let mut declared = vec![false; t.len()];
    let mut attached = vec![false; t.len()];
    let mut open: Vec<usize> = Vec::new();
    let mut lines: Vec<String> = Vec::new();

    // Path from the topmost class reachable through already-attached edges.
    let path_to = |x: usize, attached: &[bool]| {
        let mut path = vec![x];
        let mut cur = x;
        while attached[cur] {
            cur = parent(cur).expect("attached classes have a parent");
            path.push(cur);
        }
        path.reverse();
        path
    };
    let mut emit = |path: &[usize], declared: &mut [bool], open: &mut Vec<usize>| {
        let shared = open
            .iter()
            .zip(&path[..path.len() - 1])
            .take_while(|(a, b)| a == b)
            .count();
        for (depth, &cls) in path.iter().enumerate().skip(shared) {
            let mut line = "\t".repeat(depth);
            line.push_str(t.classes[cls].as_str());
            if !declared[cls] {
                declared[cls] = true;
                if let Some(desc) = &t.descriptions[cls] {
                    line.push('\t');
                    line.push_str(&escape(desc));
                }
            }
            lines.push(line);
        }
        open.clear();
        open.extend_from_slice(path);
    };

    for cls in 0..t.len() {
        match parent(cls) {
            Some(p) if declared[p] => {
                let mut path = path_to(p, &attached);
                path.push(cls);
                emit(&path, &mut declared, &mut open);
                attached[cls] = true;
            }
            _ => emit(&[cls], &mut declared, &mut open),
        }
        for &child in &t.children[cls] {
            if declared[child] && !attached[child] {
                let mut path = path_to(cls, &attached);
                path.push(child);
                emit(&path, &mut declared, &mut open);
                attached[child] = true;
            }
        }
    }
    Ok(lines.join("\n"))
}

/// One class id per line in insertion order, without hierarchy.
pub fn to_flat_text(t: &Taxonomy) -> String {
    t.classes.iter().map(ClassId::as_str).collect::<Vec<_>>().join("\n")
}
