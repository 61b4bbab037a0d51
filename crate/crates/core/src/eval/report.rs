use std::path::Path;

use serde::{Deserialize, Serialize};

use super::accuracy::AccuracyReport;
use super::EvalError;
use crate::labels::MetaProperty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

pub const CSV_HEADER: [&str; 6] = [
    "config_descriptor",
    "property",
    "correct",
    "incorrect",
    "accuracy",
    "trials",
];

/// Renders reports in config order, then I, U, R, D.
pub fn render_report(reports: &[AccuracyReport], format: ReportFormat) -> Result<String, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(reports).expect("reports serialize");
            text.push('\n');
            Ok(text)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in reports {
                for p in MetaProperty::ALL {
                    let s = r.per_property.get(&p).copied().unwrap_or(crate::eval::PropertyScore {
                        correct: 0,
                        incorrect: 0,
                        accuracy: 0.0,
                    });
                    w.write_record([
                        r.config_descriptor.clone(),
                        p.letter().to_string(),
                        s.correct.to_string(),
                        s.incorrect.to_string(),
                        format!("{:.6}", s.accuracy),
                        r.trials.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Io {
        path: String::new(),
        message: e.to_string(),
    }
}

pub fn write_report(reports: &[AccuracyReport], path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    let text = render_report(reports, format)?;
    std::fs::write(path, text).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_report_json(path: &Path) -> Result<Vec<AccuracyReport>, EvalError> {
    let io = |message: String| EvalError::Io {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| io(e.to_string()))
}
