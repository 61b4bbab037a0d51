use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::accuracy::{compute_accuracy, AccuracyCounts, AccuracyReport};
use super::benchmark::Benchmark;
use super::EvalError;
use crate::labeler::{
    backend_for, label_ontology_with, max_in_flight, ChatBackend, LlmConfig, PromptConfig, Representation,
};

/// Trials per configuration used unless the caller asks otherwise.
pub const DEFAULT_TRIALS: usize = 30;

/// `benchmark|model|strategy|representation`.
pub fn describe_config(benchmark: &str, pc: &PromptConfig, lc: &LlmConfig) -> String {
    format!(
        "{benchmark}|{}|{}|{}",
        lc.model,
        pc.strategy.name(),
        pc.representation.name()
    )
}

/// Runs every configuration `n_trials` times and scores each run against
/// the benchmark's gold labels.
///
/// Hierarchical representations use the trial index as spanning-tree seed.
/// Failed trials are left out of the counts and noted in the descriptor as
/// `|excluded=<k>`.
pub fn run_trials(
    benchmark: &Benchmark,
    configs: &[(PromptConfig, LlmConfig)],
    n_trials: usize,
) -> Result<Vec<AccuracyReport>, EvalError> {
    configs
        .iter()
        .map(|(pc, lc)| {
            let backend = backend_for(lc).map_err(|e| EvalError::AllTrialsFailed {
                descriptor: describe_config(&benchmark.name, pc, lc),
                last_error: e.to_string(),
            })?;
            run_config_with(
                benchmark,
                pc,
                backend.as_ref(),
                lc.max_retries,
                n_trials,
                &describe_config(&benchmark.name, pc, lc),
            )
        })
        .collect()
}

/// One configuration against an explicit backend. Trials run concurrently,
/// at most [`max_in_flight`] at a time.
pub fn run_config_with(
    benchmark: &Benchmark,
    pc: &PromptConfig,
    backend: &dyn ChatBackend,
    max_retries: u32,
    n_trials: usize,
    descriptor: &str,
) -> Result<AccuracyReport, EvalError> {
    if n_trials == 0 {
        return Err(EvalError::InvalidTrials);
    }
    let outcomes: Mutex<Vec<Option<Result<AccuracyCounts, String>>>> = Mutex::new(vec![None; n_trials]);
    let next = AtomicUsize::new(0);
    let workers = max_in_flight().min(n_trials).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let trial = next.fetch_add(1, Ordering::Relaxed);
                if trial >= n_trials {
                    break;
                }
                let mut cfg = pc.clone();
                if let Representation::Hierarchical { seed } = &mut cfg.representation {
                    *seed = trial as u64;
                }
                let outcome = label_ontology_with(&benchmark.taxonomy, &cfg, backend, max_retries)
                    .map_err(|e| e.to_string())
                    .and_then(|r| compute_accuracy(&r.labeling, &benchmark.gold).map_err(|e| e.to_string()));
                if let Err(e) = &outcome {
                    tracing::warn!(trial, descriptor, error = %e, "trial failed");
                }
                outcomes.lock().unwrap()[trial] = Some(outcome);
            });
        }
    });

    let mut counts = AccuracyCounts::default();
    let mut succeeded = 0u64;
    let mut excluded = 0usize;
    let mut last_error = None;
    for outcome in outcomes.into_inner().unwrap().into_iter().flatten() {
        match outcome {
            Ok(c) => {
                counts += c;
                succeeded += 1;
            }
            Err(e) => {
                excluded += 1;
                last_error = Some(e);
            }
        }
    }
    if succeeded == 0 {
        return Err(EvalError::AllTrialsFailed {
            descriptor: descriptor.to_owned(),
            last_error: last_error.unwrap_or_default(),
        });
    }
    let descriptor = if excluded > 0 {
        format!("{descriptor}|excluded={excluded}")
    } else {
        descriptor.to_owned()
    };
    Ok(AccuracyReport::new(descriptor, succeeded, counts))
}
