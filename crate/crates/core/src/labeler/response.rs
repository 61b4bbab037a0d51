//! Reading labels out of free-form model output.
//!
//! The expected line grammar is `<ClassId>: I+, U-, R~, D+`. The reader is
//! lenient: anything it cannot use becomes a warning and is skipped.

use serde::{Deserialize, Serialize};

use crate::labels::{LabelSet, Labeling, MetaProperty, Sign};
use crate::taxonomy::Taxonomy;

/// A skipped line or token, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingResult {
    pub labeling: Labeling,
    pub warnings: Vec<ParseWarning>,
    pub raw_response: String,
    /// Prompt submissions made to obtain this result.
    pub attempts: u32,
}

impl LabelingResult {
    pub fn labelled_classes(&self) -> usize {
        self.labeling.len()
    }
}

/// Returned when not a single line names a known class.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("response contains no parseable label lines ({} warning(s))", .warnings.len())]
pub struct EmptyResponse {
    pub warnings: Vec<ParseWarning>,
}

fn strip_list_marker(line: &str) -> &str {
    for marker in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(marker) {
            return rest.trim_start();
        }
    }
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim_start();
        }
    }
    line
}

fn strip_emphasis(name: &str) -> &str {
    name.trim().trim_matches(|c| c == '*' || c == '`' || c == '"').trim()
}

/// Reads one token such as `I+`, `+I` or `r~`.
fn parse_token(token: &str) -> Option<(MetaProperty, Sign)> {
    let chars: Vec<char> = token.chars().collect();
    if chars.len() != 2 {
        return None;
    }
    MetaProperty::from_letter(chars[0])
        .zip(Sign::from_symbol(chars[1]))
        .or_else(|| MetaProperty::from_letter(chars[1]).zip(Sign::from_symbol(chars[0])))
}

pub fn parse_labels(response: &str, t: &Taxonomy) -> Result<LabelingResult, EmptyResponse> {
    let mut labeling = Labeling::new();
    let mut warnings = Vec::new();
    let mut seen = vec![false; t.len()];
    let mut matched_lines = 0usize;

    for (idx, raw) in response.lines().enumerate() {
        let line = idx + 1;
        let mut warn = |reason: String| warnings.push(ParseWarning { line, reason });
        let text = strip_list_marker(raw.trim());
        if text.is_empty() {
            continue;
        }
        let Some((name, tokens)) = text.rsplit_once(':') else {
            warn("not a label line".into());
            continue;
        };
        let name = strip_emphasis(name);
        let Some(pos) = t.position(name) else {
            warn(format!("unknown class {name:?}"));
            continue;
        };
        if seen[pos] {
            warn(format!("duplicate line for {name}; keeping the first"));
            continue;
        }
        seen[pos] = true;
        matched_lines += 1;

        let mut labels = LabelSet::default();
        for token in tokens
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .map(|tok| tok.trim_matches(|c| c == '*' || c == '`' || c == '.'))
            .filter(|tok| !tok.is_empty())
        {
            match parse_token(token) {
                None => warn(format!("unrecognised token {token:?}")),
                Some((p, _)) if labels.get(p).is_some() => warn(format!(
                    "{} given more than once for {name}; keeping the first",
                    p.letter()
                )),
                Some((p, v)) => {
                    if let Err(e) = labels.set(p, Some(v)) {
                        warn(e.to_string());
                    }
                }
            }
        }
        labeling.insert(t.class(pos).clone(), labels);
    }

    if matched_lines == 0 {
        return Err(EmptyResponse { warnings });
    }
    Ok(LabelingResult {
        labeling,
        warnings,
        raw_response: response.to_owned(),
        attempts: 1,
    })
}

/// Writes a labeling in the response grammar, one line per labelled class in
/// taxonomy order.
pub fn format_labels(l: &Labeling, t: &Taxonomy) -> String {
    t.classes()
        .iter()
        .filter_map(|c| l.get(c.as_str()).filter(|ls| !ls.is_empty()).map(|ls| (c, ls)))
        .map(|(c, ls)| {
            let tokens: Vec<String> = ls
                .values()
                .map(|(p, v)| format!("{}{}", p.letter(), v.symbol()))
                .collect();
            format!("{c}: {}", tokens.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{DependenceValue, IdentityValue, RigidityValue, UnityValue};
    use crate::taxonomy::{parse_taxonomy, TaxonomyFormat};

    fn tax() -> Taxonomy {
        parse_taxonomy("Food\n\tPizza\n\tTopping", TaxonomyFormat::Indented).unwrap()
    }

    #[test]
    fn canonical_line() {
        let r = parse_labels("Pizza: I+, U+, R+, D-", &tax()).unwrap();
        assert!(r.warnings.is_empty());
        assert_eq!(
            r.labeling.get("Pizza"),
            Some(&LabelSet {
                identity: Some(IdentityValue::Plus),
                unity: Some(UnityValue::Plus),
                rigidity: Some(RigidityValue::Plus),
                dependence: Some(DependenceValue::Minus),
            })
        );
    }

    #[test]
    fn tilde_on_identity_is_a_warning() {
        let r = parse_labels("Pizza: I~", &tax()).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.warnings[0].line, 1);
        assert_eq!(r.labeling.value("Pizza", MetaProperty::Identity), None);
    }

    #[test]
    fn lenient_about_noise() {
        let text = "Here are the labels:\n\n- **Pizza**: +I, +U, +R, -D\n2. Topping: I-, U~, R~, D+\nUnicorn: I+\nPizza: I-\nsome closing prose";
        let r = parse_labels(text, &tax()).unwrap();
        assert_eq!(r.labeling.value("Pizza", MetaProperty::Identity), Some(Sign::Plus));
        assert_eq!(r.labeling.value("Topping", MetaProperty::Rigidity), Some(Sign::Anti));
        let lines: Vec<usize> = r.warnings.iter().map(|w| w.line).collect();
        assert_eq!(lines, [1, 5, 6, 7]);
    }

    #[test]
    fn repeated_property_keeps_first() {
        let r = parse_labels("Pizza: I+, I-, X+", &tax()).unwrap();
        assert_eq!(r.labeling.value("Pizza", MetaProperty::Identity), Some(Sign::Plus));
        assert_eq!(r.warnings.len(), 2);
    }

    #[test]
    fn prose_only_is_empty() {
        let err = parse_labels("I cannot label this ontology.\nSorry.", &tax()).unwrap_err();
        assert_eq!(err.warnings.len(), 2);
        assert!(parse_labels("", &tax()).is_err());
    }

    #[test]
    fn format_then_parse() {
        let t = tax();
        let r = parse_labels("Topping: I-, U~, R~, D+\nPizza: I+, U+, R+, D-", &t).unwrap();
        let text = format_labels(&r.labeling, &t);
        assert_eq!(text, "Pizza: I+, U+, R+, D-\nTopping: I-, U~, R~, D+");
        assert_eq!(parse_labels(&text, &t).unwrap().labeling, r.labeling);
    }
}
