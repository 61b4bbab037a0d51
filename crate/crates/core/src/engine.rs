//! OntoClean constraint checking over a (possibly partially) labelled taxonomy.
//!
//! Five inheritance rules are checked over the transitive closure of the
//! subsumption relation:
//!
//! | ancestor | forbidden on a descendant |
//! |----------|---------------------------|
//! | `+I`     | `-I`                      |
//! | `~R`     | `+R`, `-R`                |
//! | `+U`     | `-U`, `~U`                |
//! | `~U`     | `+U`, `-U`                |
//! | `+D`     | `-D`                      |
//!
//! A pair is skipped when either side lacks the relevant value. For each
//! (class, rule) only the nearest violating ancestor is reported.
//!
//! Sortal individuation is checked separately: a class whose identity and
//! every ancestor's identity are known must have `+I` somewhere on
//! ancestor-or-self.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{DependenceValue, IdentityValue, LabelSet, Labeling, MetaProperty, RigidityValue, UnityValue};
use crate::taxonomy::{ClassId, Taxonomy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("labeling refers to class {0}, which is not in the taxonomy")]
    UnknownClass(String),
    #[error("labeling already has {} constraint violation(s)", .0.len())]
    PreconditionViolated(Vec<Violation>),
}

/// Which constraint a [`Violation`] breaks. Declaration order is report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    IdentityInheritance,
    AntiRigidityInheritance,
    UnityInheritance,
    AntiUnityInheritance,
    DependenceInheritance,
    SortalIndividuation,
}

impl ViolationKind {
    pub const INHERITANCE: [ViolationKind; 5] = [
        Self::IdentityInheritance,
        Self::AntiRigidityInheritance,
        Self::UnityInheritance,
        Self::AntiUnityInheritance,
        Self::DependenceInheritance,
    ];

    pub fn property(self) -> MetaProperty {
        match self {
            Self::IdentityInheritance | Self::SortalIndividuation => MetaProperty::Identity,
            Self::AntiRigidityInheritance => MetaProperty::Rigidity,
            Self::UnityInheritance | Self::AntiUnityInheritance => MetaProperty::Unity,
            Self::DependenceInheritance => MetaProperty::Dependence,
        }
    }

    /// True when an ancestor labelled `ancestor` and a descendant labelled
    /// `descendant` break this rule. Always false for sortal individuation.
    pub fn is_broken_by(self, ancestor: &LabelSet, descendant: &LabelSet) -> bool {
        match self {
            Self::IdentityInheritance => {
                ancestor.identity == Some(IdentityValue::Plus) && descendant.identity == Some(IdentityValue::Minus)
            }
            Self::AntiRigidityInheritance => {
                ancestor.rigidity == Some(RigidityValue::Anti)
                    && matches!(descendant.rigidity, Some(RigidityValue::Plus | RigidityValue::Minus))
            }
            Self::UnityInheritance => {
                ancestor.unity == Some(UnityValue::Plus)
                    && matches!(descendant.unity, Some(UnityValue::Minus | UnityValue::Anti))
            }
            Self::AntiUnityInheritance => {
                ancestor.unity == Some(UnityValue::Anti)
                    && matches!(descendant.unity, Some(UnityValue::Plus | UnityValue::Minus))
            }
            Self::DependenceInheritance => {
                ancestor.dependence == Some(DependenceValue::Plus)
                    && descendant.dependence == Some(DependenceValue::Minus)
            }
            Self::SortalIndividuation => false,
        }
    }
}

/// One broken constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: ClassId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancestor: Option<ClassId>,
    pub message: String,
}

impl Violation {
    pub fn inheritance(kind: ViolationKind, subject: ClassId, ancestor: ClassId) -> Self {
        let message = explain(kind, &subject, Some(&ancestor));
        Self {
            kind,
            subject,
            ancestor: Some(ancestor),
            message,
        }
    }

    pub fn sortal(subject: ClassId) -> Self {
        let message = explain(ViolationKind::SortalIndividuation, &subject, None);
        Self {
            kind: ViolationKind::SortalIndividuation,
            subject,
            ancestor: None,
            message,
        }
    }
}

fn explain(kind: ViolationKind, subject: &ClassId, ancestor: Option<&ClassId>) -> String {
    let anc = ancestor.map(ClassId::as_str).unwrap_or("?");
    match kind {
        ViolationKind::IdentityInheritance => {
            format!("{subject} must carry +I because its ancestor {anc} carries +I.")
        }
        ViolationKind::AntiRigidityInheritance => {
            format!("{subject} must carry ~R because its ancestor {anc} carries ~R (anti-rigidity is inherited).")
        }
        ViolationKind::UnityInheritance => {
            format!("{subject} must carry +U because its ancestor {anc} carries +U.")
        }
        ViolationKind::AntiUnityInheritance => {
            format!("{subject} must carry ~U because its ancestor {anc} carries ~U (anti-unity is inherited).")
        }
        ViolationKind::DependenceInheritance => {
            format!("{subject} must carry +D because its ancestor {anc} carries +D.")
        }
        ViolationKind::SortalIndividuation => {
            format!("{subject} has no ancestor-or-self carrying +I (no entity without identity).")
        }
    }
}

/// Deterministic one-sentence explanation of a violation.
pub fn explain_violation(v: &Violation) -> String {
    explain(v.kind, &v.subject, v.ancestor.as_ref())
}

fn check_keys(t: &Taxonomy, l: &Labeling) -> Result<(), EngineError> {
    match l.classes().find(|c| !t.contains(c.as_str())) {
        Some(c) => Err(EngineError::UnknownClass(c.to_string())),
        None => Ok(()),
    }
}

fn labels_by_position(t: &Taxonomy, l: &Labeling) -> Vec<Option<LabelSet>> {
    t.classes().iter().map(|c| l.get(c.as_str()).copied()).collect()
}

/// Ancestors sorted by (distance, insertion position).
fn nearest_first(t: &Taxonomy, pos: usize) -> Vec<usize> {
    let mut ancestors = t.ancestors(pos);
    ancestors.sort_unstable_by_key(|&(a, dist)| (dist, a));
    ancestors.into_iter().map(|(a, _)| a).collect()
}

/// Checks the five inheritance constraints.
pub fn check_constraints(t: &Taxonomy, l: &Labeling) -> Result<Vec<Violation>, EngineError> {
    check_keys(t, l)?;
    let labels = labels_by_position(t, l);
    let mut out = Vec::new();
    for (pos, own) in labels.iter().enumerate() {
        let Some(own) = own else { continue };
        let ancestors = nearest_first(t, pos);
        for kind in ViolationKind::INHERITANCE {
            let witness = ancestors
                .iter()
                .copied()
                .find(|&a| labels[a].as_ref().is_some_and(|anc| kind.is_broken_by(anc, own)));
            if let Some(a) = witness {
                out.push(Violation::inheritance(kind, t.class(pos).clone(), t.class(a).clone()));
            }
        }
    }
    Ok(out)
}

/// Checks that every class with fully known identity along its ancestry has
/// `+I` on itself or an ancestor.
pub fn check_sortal_individuation(t: &Taxonomy, l: &Labeling) -> Result<Vec<Violation>, EngineError> {
    check_keys(t, l)?;
    let identity: Vec<Option<IdentityValue>> = labels_by_position(t, l)
        .into_iter()
        .map(|ls| ls.and_then(|ls| ls.identity))
        .collect();
    let mut out = Vec::new();
    for pos in 0..t.len() {
        let lineage = std::iter::once(pos).chain(t.ancestors(pos).into_iter().map(|(a, _)| a));
        let mut determined = true;
        let mut has_plus = false;
        for cls in lineage {
            match identity[cls] {
                None => determined = false,
                Some(IdentityValue::Plus) => has_plus = true,
                Some(IdentityValue::Minus) => {}
            }
        }
        if determined && !has_plus {
            out.push(Violation::sortal(t.class(pos).clone()));
        }
    }
    Ok(out)
}

/// Inheritance and sortal-individuation violations, ordered by subject
/// position then kind.
pub fn check_all(t: &Taxonomy, l: &Labeling) -> Result<Vec<Violation>, EngineError> {
    let mut all = check_constraints(t, l)?;
    all.extend(check_sortal_individuation(t, l)?);
    all.sort_by_key(|v| (t.position(v.subject.as_str()), v.kind));
    Ok(all)
}

/// Values forced on unlabelled properties by the inheritance rules.
///
/// Returns only the additions. Fails if `l` already violates a rule.
pub fn infer_forced_labels(t: &Taxonomy, l: &Labeling) -> Result<Labeling, EngineError> {
    let existing = check_constraints(t, l)?;
    if !existing.is_empty() {
        return Err(EngineError::PreconditionViolated(existing));
    }
    let labels = labels_by_position(t, l);
    let mut additions = Labeling::new();
    for pos in 0..t.len() {
        let own = labels[pos].unwrap_or_default();
        let ancestors: Vec<LabelSet> = t.ancestors(pos).into_iter().filter_map(|(a, _)| labels[a]).collect();
        let any = |f: &dyn Fn(&LabelSet) -> bool| ancestors.iter().any(f);
        let mut forced = LabelSet::default();
        if own.identity.is_none() && any(&|a| a.identity == Some(IdentityValue::Plus)) {
            forced.identity = Some(IdentityValue::Plus);
        }
        if own.rigidity.is_none() && any(&|a| a.rigidity == Some(RigidityValue::Anti)) {
            forced.rigidity = Some(RigidityValue::Anti);
        }
        if own.unity.is_none() {
            let plus = any(&|a| a.unity == Some(UnityValue::Plus));
            let anti = any(&|a| a.unity == Some(UnityValue::Anti));
            // Both at once leave no legal value; nothing is forced.
            forced.unity = match (plus, anti) {
                (true, false) => Some(UnityValue::Plus),
                (false, true) => Some(UnityValue::Anti),
                _ => None,
            };
        }
        if own.dependence.is_none() && any(&|a| a.dependence == Some(DependenceValue::Plus)) {
            forced.dependence = Some(DependenceValue::Plus);
        }
        additions.insert(t.class(pos).clone(), forced);
    }
    Ok(additions)
}
