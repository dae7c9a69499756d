//! Run reports, printed as a table or as JSON.

use std::fmt::Write as _;

use railqubo_core::linear::{count_variables, LinearModel, Schedule};
use railqubo_core::qubo::{index_variables, QuboModel};
use railqubo_core::{DispatchInstance, Result, Routing};
use serde::Serialize;

use crate::export::IterationRecord;
use crate::names;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub trains: usize,
    pub stations: usize,
    pub resolution: u32,
    pub departures: usize,
    pub precedence_variables: usize,
    /// Precedence decisions left once tied variables are merged.
    pub precedence_decisions: usize,
    pub time_indexed_variables: usize,
    /// Auxiliary products, when a QUBO was built.
    pub auxiliary_variables: Option<usize>,
}

impl InstanceSummary {
    pub fn new(
        instance: &DispatchInstance,
        routing: &Routing,
        linear: &LinearModel,
        qubo: Option<&QuboModel>,
    ) -> Result<Self> {
        let counts = count_variables(linear);
        Ok(InstanceSummary {
            trains: instance.trains.len(),
            stations: instance.stations.len(),
            resolution: instance.scenario.resolution,
            departures: counts.num_time,
            precedence_variables: counts.num_precedence,
            precedence_decisions: counts.num_precedence_merged,
            time_indexed_variables: index_variables(instance, routing)?.num_x(),
            auxiliary_variables: qubo.map(|q| q.index.aux().len()),
        })
    }
}

/// One departure, all times in minutes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub train: String,
    pub station: String,
    pub scheduled: f64,
    pub realized: Option<f64>,
    /// Delay that no dispatching decision can avoid.
    pub unavoidable_delay: f64,
    /// Delay added by resolving conflicts.
    pub secondary_delay: Option<f64>,
    pub counted: bool,
}

pub fn schedule_rows(
    instance: &DispatchInstance,
    linear: &LinearModel,
    schedule: &Schedule,
) -> Vec<ScheduleRow> {
    linear
        .time_vars
        .iter()
        .map(|v| {
            let train = instance.train(v.event.train);
            let scheduled = train
                .position(v.event.station)
                .and_then(|p| train.schedule[p].departure)
                .unwrap_or(v.window.earliest);
            let realized = schedule.departure.get(&v.event).copied();
            ScheduleRow {
                train: train.id.clone(),
                station: names::station(instance, v.event.station).to_string(),
                scheduled: names::minutes(instance, scheduled),
                realized: realized.map(|t| names::minutes(instance, t)),
                unavoidable_delay: names::minutes(instance, v.window.earliest - scheduled),
                secondary_delay: realized.map(|t| names::minutes(instance, t - v.window.earliest)),
                counted: v.counted,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub solver: String,
    /// Assignments enumerated by brute force.
    pub states: Option<u128>,
    pub distinct_samples: Option<usize>,
    /// Chains or states ending at the lowest energy found.
    pub best_multiplicity: Option<usize>,
    pub best_energy: Option<f64>,
    pub sweeps: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: String,
    pub instance: InstanceSummary,
    pub schedule: Vec<ScheduleRow>,
    pub objective: f64,
    pub feasible: bool,
    pub violations: Vec<String>,
    pub solver: SolverStats,
    pub iterations: Option<Vec<IterationRecord>>,
    pub terminated_by: Option<String>,
}

/// Drops floating-point noise below 1e-9 for display.
fn tidy(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{}", tidy(x)))
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let i = &self.instance;
        let _ = writeln!(out, "mode: {}", self.mode);
        let _ = writeln!(
            out,
            "instance: {} trains, {} stations, resolution {}",
            i.trains, i.stations, i.resolution
        );
        let _ = writeln!(
            out,
            "variables: {} departures, {} precedence ({} independent), {} time-indexed{}",
            i.departures,
            i.precedence_variables,
            i.precedence_decisions,
            i.time_indexed_variables,
            i.auxiliary_variables
                .map_or_else(String::new, |a| format!(", {a} auxiliary"))
        );
        let _ = writeln!(
            out,
            "\n{:<8} {:<8} {:>9} {:>9} {:>6} {:>6}",
            "train", "station", "scheduled", "realized", "d_U", "d_s"
        );
        for r in &self.schedule {
            let _ = writeln!(
                out,
                "{:<8} {:<8} {:>9} {:>9} {:>6} {:>6}{}",
                r.train,
                r.station,
                r.scheduled,
                opt(r.realized),
                r.unavoidable_delay,
                opt(r.secondary_delay),
                if r.counted { "" } else { "  (not counted)" }
            );
        }
        let _ = writeln!(out, "\nobjective: {}", tidy(self.objective));
        let _ = writeln!(out, "feasible: {}", self.feasible);
        for v in &self.violations {
            let _ = writeln!(out, "  violated: {v}");
        }
        let s = &self.solver;
        let _ = write!(out, "solver: {}", s.solver);
        if let Some(n) = s.states {
            let _ = write!(out, ", {n} states");
        }
        if let (Some(m), Some(r)) = (s.best_multiplicity, s.restarts) {
            let _ = write!(out, ", best reached by {m}/{r} restarts");
        }
        if let Some(e) = s.best_energy {
            let _ = write!(out, ", energy {}", tidy(e));
        }
        out.push('\n');
        if let Some(its) = &self.iterations {
            let _ = writeln!(out, "\niteration  objective  feasible  conflict / move");
            for it in its {
                let _ = writeln!(
                    out,
                    "{:>9}  {:>9}  {:>8}  {}{}",
                    it.iteration,
                    tidy(it.objective),
                    it.feasible,
                    it.conflict.as_deref().unwrap_or("-"),
                    it.next_move
                        .as_deref()
                        .map_or_else(String::new, |m| format!(" -> move {m}"))
                );
            }
        }
        if let Some(t) = &self.terminated_by {
            let _ = writeln!(out, "terminated: {t}");
        }
        out
    }
}
