//! One simulation per wrench event, run in parallel and summarized.

use std::thread;

use super::{run, summarize, LogRecord, RunSummary, ScenarioConfig};
use crate::error::{Error, Result};
use crate::wrench::{self, classify, WrenchClass, WrenchEvent};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub label: String,
    /// Class of the event's peak wrench relative to the path axis.
    pub class: Option<WrenchClass>,
    pub records: Vec<LogRecord>,
    pub summary: RunSummary,
}

/// Runs `base` once per labelled event, replacing its own event list.
/// Results keep the input order and do not depend on thread scheduling.
pub fn sweep(base: &ScenarioConfig, events: &[(String, WrenchEvent)]) -> Result<Vec<SweepRun>> {
    let axis = base.trajectory.axis();
    let results: Vec<Result<SweepRun>> = thread::scope(|scope| {
        let handles: Vec<_> = events
            .iter()
            .map(|(label, event)| {
                scope.spawn(move || {
                    let mut cfg = base.clone();
                    cfg.wrench_events = vec![event.clone()];
                    let records = run(&cfg)?;
                    let summary = summarize(&records, &cfg);
                    let class = match axis {
                        Some(a) => Some(classify(&event.peak, &a)?),
                        None => None,
                    };
                    Ok(SweepRun {
                        label: label.clone(),
                        class,
                        records,
                        summary,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Domain("sweep worker panicked".into())))
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Sweep over a named wrench preset, timed and scaled by `base.sweep`.
pub fn sweep_preset(base: &ScenarioConfig, preset: &str) -> Result<Vec<SweepRun>> {
    let rows = wrench::preset(preset).ok_or_else(|| Error::invalid("preset", format!("unknown preset `{preset}`")))?;
    let events: Vec<_> = rows
        .iter()
        .map(|r| (r.label.to_string(), base.sweep.event(&r.wrench)))
        .collect();
    sweep(base, &events)
}
