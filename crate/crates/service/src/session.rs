//! Review sessions: a taxonomy, its working labeling with per-value
//! provenance, reviewer guidance and the log of machine labelling runs.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use ontoclean_core::eval::{compute_accuracy, load_benchmark, AccuracyReport, EvalError};
use ontoclean_core::labeler::{LabelerError, LabelingResult, LlmConfig, ParseWarning, PromptConfig};
use ontoclean_core::{
    check_all, ClassId, EngineError, LabelError, LabelSet, Labeling, MetaProperty, Sign, Taxonomy, TaxonomyError,
    Violation,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("no session with id {0}")]
    NotFound(String),
    #[error("class {0} is not in the taxonomy")]
    UnknownClass(String),
    #[error(transparent)]
    IllegalValue(#[from] LabelError),
    #[error("guidance text is empty")]
    EmptyGuidance,
    #[error("session has no gold labels attached")]
    NoGoldLabels,
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Labeler(#[from] LabelerError),
    #[error(transparent)]
    Benchmark(#[from] EvalError),
    #[error("invalid session document: {0}")]
    Invalid(String),
    #[error("I/O error on {path}{}: {message}", position(line, column))]
    Io {
        path: String,
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },
    #[error("{0}")]
    BadRequest(String),
}

fn position(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        _ => String::new(),
    }
}

impl From<EngineError> for SessionError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownClass(c) => Self::UnknownClass(c),
            other => Self::Invalid(other.to_string()),
        }
    }
}

/// Who set a label value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Machine,
}

/// How machine labels are merged into the working labeling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    /// Drop every machine-set value, then apply the new labels wherever no
    /// human value exists.
    Overwrite,
    /// Only fill values that are currently absent.
    #[default]
    FillMissing,
}

/// What one labelling run produced and how much of it was applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub run: usize,
    pub model: String,
    pub strategy: String,
    pub representation: String,
    pub mode: MergeMode,
    pub attempts: u32,
    pub labelled_classes: usize,
    pub values_applied: usize,
    pub guidance_entries: usize,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub taxonomy: Taxonomy,
    pub labeling: Labeling,
    #[serde(default)]
    pub provenance: BTreeMap<ClassId, BTreeMap<MetaProperty, Provenance>>,
    /// Always equal to `check_all` over the current taxonomy and labeling.
    #[serde(default)]
    pub violations: Vec<Violation>,
    #[serde(default)]
    pub guidance_history: Vec<String>,
    #[serde(default)]
    pub trial_log: Vec<TrialSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Labeling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
}

impl Session {
    pub fn new(id: impl Into<String>, taxonomy: Taxonomy, gold: Option<Labeling>) -> Result<Self, SessionError> {
        if let Some(g) = &gold {
            if let Some(c) = g.classes().find(|c| !taxonomy.contains(c.as_str())) {
                return Err(SessionError::UnknownClass(c.to_string()));
            }
        }
        let mut s = Self {
            id: id.into(),
            taxonomy,
            labeling: Labeling::new(),
            provenance: BTreeMap::new(),
            violations: Vec::new(),
            guidance_history: Vec::new(),
            trial_log: Vec::new(),
            gold,
            benchmark: None,
        };
        s.refresh()?;
        Ok(s)
    }

    /// Empty-labeling session over a bundled benchmark with its gold attached.
    pub fn from_benchmark(id: impl Into<String>, name: &str) -> Result<Self, SessionError> {
        let b = load_benchmark(name)?;
        let mut s = Self::new(id, b.taxonomy, Some(b.gold))?;
        s.benchmark = Some(b.name);
        Ok(s)
    }

    fn refresh(&mut self) -> Result<(), SessionError> {
        self.violations = check_all(&self.taxonomy, &self.labeling)?;
        Ok(())
    }

    fn class_id(&self, class: &str) -> Result<ClassId, SessionError> {
        self.taxonomy
            .position(class)
            .map(|p| self.taxonomy.class(p).clone())
            .ok_or_else(|| SessionError::UnknownClass(class.to_owned()))
    }

    pub fn provenance_of(&self, class: &str, p: MetaProperty) -> Option<Provenance> {
        self.provenance.get(class).and_then(|m| m.get(&p)).copied()
    }

    fn set_value(&mut self, class: &ClassId, p: MetaProperty, value: Option<Sign>, who: Provenance) {
        self.labeling.set(class, p, value).expect("value checked by caller");
        match value {
            Some(_) => {
                self.provenance.entry(class.clone()).or_default().insert(p, who);
            }
            None => {
                if let Some(m) = self.provenance.get_mut(class.as_str()) {
                    m.remove(&p);
                    if m.is_empty() {
                        self.provenance.remove(class.as_str());
                    }
                }
            }
        }
    }

    /// Reviewer edit: sets or clears one value and marks it human-set.
    pub fn set_label(
        &mut self,
        class: &str,
        p: MetaProperty,
        value: Option<Sign>,
    ) -> Result<&[Violation], SessionError> {
        let id = self.class_id(class)?;
        LabelSet::default().set(p, value)?;
        self.set_value(&id, p, value, Provenance::Human);
        self.refresh()?;
        Ok(&self.violations)
    }

    pub fn add_guidance(&mut self, text: &str) -> Result<(), SessionError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(SessionError::EmptyGuidance);
        }
        self.guidance_history.push(text.to_owned());
        Ok(())
    }

    /// Guidance history joined by newlines, then the run's own guidance.
    pub fn effective_prompt(&self, pc: &PromptConfig) -> PromptConfig {
        let mut parts = self.guidance_history.clone();
        parts.extend(pc.guidance.iter().filter(|g| !g.trim().is_empty()).cloned());
        let mut out = pc.clone();
        out.guidance = (!parts.is_empty()).then(|| parts.join("\n"));
        out
    }

    /// Merges a labelling result according to `mode` and logs the run.
    pub fn apply_labels(
        &mut self,
        result: &LabelingResult,
        mode: MergeMode,
        pc: &PromptConfig,
        lc: &LlmConfig,
    ) -> Result<&TrialSummary, SessionError> {
        if let Some(c) = result.labeling.classes().find(|c| !self.taxonomy.contains(c.as_str())) {
            return Err(SessionError::UnknownClass(c.to_string()));
        }
        if mode == MergeMode::Overwrite {
            let machine: Vec<(ClassId, MetaProperty)> = self
                .provenance
                .iter()
                .flat_map(|(c, m)| {
                    m.iter()
                        .filter(|(_, &w)| w == Provenance::Machine)
                        .map(|(&p, _)| (c.clone(), p))
                })
                .collect();
            for (c, p) in machine {
                self.set_value(&c, p, None, Provenance::Machine);
            }
        }
        let mut applied = 0;
        for (class, labels) in result.labeling.iter() {
            for (p, v) in labels.values() {
                if self.labeling.value(class.as_str(), p).is_none() {
                    self.set_value(class, p, Some(v), Provenance::Machine);
                    applied += 1;
                }
            }
        }
        self.refresh()?;
        self.trial_log.push(TrialSummary {
            run: self.trial_log.len() + 1,
            model: lc.model.clone(),
            strategy: pc.strategy.name().to_owned(),
            representation: pc.representation.name().to_owned(),
            mode,
            attempts: result.attempts,
            labelled_classes: result.labelled_classes(),
            values_applied: applied,
            guidance_entries: self.guidance_history.len(),
            warnings: result.warnings.clone(),
        });
        Ok(self.trial_log.last().expect("just pushed"))
    }

    pub fn accuracy(&self) -> Result<AccuracyReport, SessionError> {
        let gold = self.gold.as_ref().ok_or(SessionError::NoGoldLabels)?;
        let counts = compute_accuracy(&self.labeling, gold)?;
        Ok(AccuracyReport::new(format!("session|{}", self.id), 1, counts))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("session serializes");
        text.push('\n');
        text
    }

    /// Parses a saved session and re-derives the violations cache.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut s: Self = serde_json::from_str(text)?;
        s.violations = check_all(&s.taxonomy, &s.labeling).map_err(serde::de::Error::custom)?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        let io = |e: std::io::Error| SessionError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
            line: None,
            column: None,
        };
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
            line: None,
            column: None,
        })?;
        Self::from_json(&text).map_err(|e| SessionError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
        })
    }
}

/// Ids double as file names, so only a conservative alphabet is accepted.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// In-memory sessions, each behind its own lock, with optional file backing.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    data_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: RwLock::default(),
            data_dir,
        }
    }

    pub fn new_id() -> String {
        uuid::Uuid::new_v4().simple().to_string()
    }

    pub fn insert(&self, session: Session) -> Arc<RwLock<Session>> {
        let handle = Arc::new(RwLock::new(session));
        let id = handle.read().unwrap().id.clone();
        self.sessions.write().unwrap().insert(id, handle.clone());
        handle
    }

    pub fn get(&self, id: &str) -> Result<Arc<RwLock<Session>>, SessionError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_owned()))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Runs `f` with shared access to the session.
    pub fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, SessionError> {
        let handle = self.get(id)?;
        let guard = handle.read().unwrap();
        Ok(f(&guard))
    }

    /// Runs `f` on a copy of the session and commits the copy only if `f`
    /// succeeds, so a failed mutation leaves no trace.
    pub fn update<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, SessionError>,
    ) -> Result<T, SessionError> {
        let handle = self.get(id)?;
        let mut guard = handle.write().unwrap();
        let mut draft = guard.clone();
        let out = f(&mut draft)?;
        *guard = draft;
        Ok(out)
    }

    fn session_path(&self, id: &str) -> Result<PathBuf, SessionError> {
        let dir = self
            .data_dir
            .as_ref()
            .ok_or_else(|| SessionError::BadRequest("the service has no data directory".into()))?;
        if !valid_session_id(id) {
            return Err(SessionError::BadRequest(format!("invalid session id {id:?}")));
        }
        Ok(dir.join(format!("{id}.json")))
    }

    pub fn save(&self, id: &str) -> Result<PathBuf, SessionError> {
        let path = self.session_path(id)?;
        let handle = self.get(id)?;
        let guard = handle.read().unwrap();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| SessionError::Io {
                path: dir.display().to_string(),
                message: e.to_string(),
                line: None,
                column: None,
            })?;
        }
        guard.save(&path)?;
        Ok(path)
    }

    /// Loads `<data_dir>/<id>.json`, replacing any in-memory copy.
    pub fn load(&self, id: &str) -> Result<Arc<RwLock<Session>>, SessionError> {
        let path = self.session_path(id)?;
        if !path.exists() {
            return Err(SessionError::NotFound(id.to_owned()));
        }
        let session = Session::load(&path)?;
        if session.id != id {
            return Err(SessionError::Invalid(format!(
                "file {} holds session {}",
                path.display(),
                session.id
            )));
        }
        Ok(self.insert(session))
    }
}
