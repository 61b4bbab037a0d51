//! OntoClean meta-property values and per-class label assignments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::ClassId;

/// The four OntoClean meta-properties, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetaProperty {
    #[serde(rename = "I")]
    Identity,
    #[serde(rename = "U")]
    Unity,
    #[serde(rename = "R")]
    Rigidity,
    #[serde(rename = "D")]
    Dependence,
}

impl MetaProperty {
    pub const ALL: [MetaProperty; 4] = [Self::Identity, Self::Unity, Self::Rigidity, Self::Dependence];

    pub fn letter(self) -> char {
        match self {
            Self::Identity => 'I',
            Self::Unity => 'U',
            Self::Rigidity => 'R',
            Self::Dependence => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Self::Identity),
            'U' => Some(Self::Unity),
            'R' => Some(Self::Rigidity),
            'D' => Some(Self::Dependence),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "Identity",
            Self::Unity => "Unity",
            Self::Rigidity => "Rigidity",
            Self::Dependence => "Dependence",
        }
    }

    /// Whether the anti (`~`) value exists for this property.
    pub fn allows_anti(self) -> bool {
        matches!(self, Self::Unity | Self::Rigidity)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MetaProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for MetaProperty {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_letter(c),
            _ => match s.to_ascii_lowercase().as_str() {
                "identity" => Some(Self::Identity),
                "unity" => Some(Self::Unity),
                "rigidity" => Some(Self::Rigidity),
                "dependence" => Some(Self::Dependence),
                _ => None,
            },
        }
        .ok_or_else(|| LabelError::UnknownProperty(s.to_owned()))
    }
}

/// Property-agnostic value symbol: `+`, `-` or `~`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "~")]
    Anti,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Self::Plus => '+',
            Self::Minus => '-',
            Self::Anti => '~',
        }
    }

    /// Accepts ASCII and typographic minus signs.
    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Self::Plus),
            '-' | '\u{2212}' | '\u{2013}' => Some(Self::Minus),
            '~' | '\u{223c}' => Some(Self::Anti),
            _ => None,
        }
    }
}

impl FromStr for Sign {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_symbol(c),
            _ => None,
        }
        .ok_or_else(|| LabelError::UnknownSign(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("{value} is not a legal value for {property}", value = .value.symbol())]
    IllegalValue { property: MetaProperty, value: Sign },
    #[error("unknown meta-property {0:?}")]
    UnknownProperty(String),
    #[error("unknown value symbol {0:?}")]
    UnknownSign(String),
}

macro_rules! two_valued {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            #[serde(rename = "+")]
            Plus,
            #[serde(rename = "-")]
            Minus,
        }

        impl From<$name> for Sign {
            fn from(v: $name) -> Sign {
                match v {
                    $name::Plus => Sign::Plus,
                    $name::Minus => Sign::Minus,
                }
            }
        }
    };
}

macro_rules! three_valued {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            #[serde(rename = "+")]
            Plus,
            #[serde(rename = "-")]
            Minus,
            #[serde(rename = "~")]
            Anti,
        }

        impl From<$name> for Sign {
            fn from(v: $name) -> Sign {
                match v {
                    $name::Plus => Sign::Plus,
                    $name::Minus => Sign::Minus,
                    $name::Anti => Sign::Anti,
                }
            }
        }
    };
}

two_valued!(IdentityValue);
three_valued!(UnityValue);
three_valued!(RigidityValue);
two_valued!(DependenceValue);

/// Meta-property values of one class; any subset may be present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSet {
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentityValue>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub unity: Option<UnityValue>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<RigidityValue>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<DependenceValue>,
}

impl LabelSet {
    pub fn is_total(&self) -> bool {
        MetaProperty::ALL.iter().all(|&p| self.get(p).is_some())
    }

    pub fn is_empty(&self) -> bool {
        MetaProperty::ALL.iter().all(|&p| self.get(p).is_none())
    }

    pub fn get(&self, property: MetaProperty) -> Option<Sign> {
        match property {
            MetaProperty::Identity => self.identity.map(Sign::from),
            MetaProperty::Unity => self.unity.map(Sign::from),
            MetaProperty::Rigidity => self.rigidity.map(Sign::from),
            MetaProperty::Dependence => self.dependence.map(Sign::from),
        }
    }

    /// Sets (or clears, with `None`) one value; rejects `~` on I and D.
    pub fn set(&mut self, property: MetaProperty, value: Option<Sign>) -> Result<(), LabelError> {
        let illegal = |value| LabelError::IllegalValue { property, value };
        match property {
            MetaProperty::Identity => {
                self.identity = match value {
                    None => None,
                    Some(Sign::Plus) => Some(IdentityValue::Plus),
                    Some(Sign::Minus) => Some(IdentityValue::Minus),
                    Some(v) => return Err(illegal(v)),
                }
            }
            MetaProperty::Dependence => {
                self.dependence = match value {
                    None => None,
                    Some(Sign::Plus) => Some(DependenceValue::Plus),
                    Some(Sign::Minus) => Some(DependenceValue::Minus),
                    Some(v) => return Err(illegal(v)),
                }
            }
            MetaProperty::Unity => {
                self.unity = value.map(|v| match v {
                    Sign::Plus => UnityValue::Plus,
                    Sign::Minus => UnityValue::Minus,
                    Sign::Anti => UnityValue::Anti,
                })
            }
            MetaProperty::Rigidity => {
                self.rigidity = value.map(|v| match v {
                    Sign::Plus => RigidityValue::Plus,
                    Sign::Minus => RigidityValue::Minus,
                    Sign::Anti => RigidityValue::Anti,
                })
            }
        }
        Ok(())
    }

    /// Present values in I, U, R, D order.
    pub fn values(&self) -> impl Iterator<Item = (MetaProperty, Sign)> + '_ {
        MetaProperty::ALL
            .into_iter()
            .filter_map(|p| self.get(p).map(|v| (p, v)))
    }
}

impl fmt::Display for LabelSet {
    /// Paper-style notation, e.g. `+I -U ~R +D`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values()
            .map(|(p, v)| format!("{}{}", v.symbol(), p.letter()))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Class → label assignments. May be partial.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labeling {
    assignments: BTreeMap<ClassId, LabelSet>,
}

impl Labeling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn get(&self, class: &str) -> Option<&LabelSet> {
        self.assignments.get(class)
    }

    pub fn value(&self, class: &str, property: MetaProperty) -> Option<Sign> {
        self.get(class).and_then(|ls| ls.get(property))
    }

    /// Replaces the whole label set of a class. Empty sets remove the entry.
    pub fn insert(&mut self, class: ClassId, labels: LabelSet) {
        if labels.is_empty() {
            self.assignments.remove(&class);
        } else {
            self.assignments.insert(class, labels);
        }
    }

    pub fn set(&mut self, class: &ClassId, property: MetaProperty, value: Option<Sign>) -> Result<(), LabelError> {
        let mut labels = self.get(class.as_str()).copied().unwrap_or_default();
        labels.set(property, value)?;
        self.insert(class.clone(), labels);
        Ok(())
    }

    pub fn remove(&mut self, class: &str) -> Option<LabelSet> {
        self.assignments.remove(class)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClassId, &LabelSet)> {
        self.assignments.iter()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassId> {
        self.assignments.keys()
    }

    /// Copies every present value of `other` over this labeling.
    pub fn merge(&mut self, other: &Labeling) {
        for (class, labels) in other.iter() {
            for (p, v) in labels.values() {
                self.set(class, p, Some(v)).expect("values of a LabelSet are legal");
            }
        }
    }

    /// Number of (class, property) values present.
    pub fn value_count(&self) -> usize {
        self.assignments.values().map(|ls| ls.values().count()).sum()
    }
}

impl FromIterator<(ClassId, LabelSet)> for Labeling {
    fn from_iter<I: IntoIterator<Item = (ClassId, LabelSet)>>(iter: I) -> Self {
        let mut labeling = Labeling::new();
        for (c, ls) in iter {
            labeling.insert(c, ls);
        }
        labeling
    }
}
