//! Sample sets, LP models and iteration logs as files.

use std::fmt::Write as _;

use railqubo_core::dispatch::DispatchResult;
use railqubo_core::linear::{Column, LinearModel};
use railqubo_core::qubo::{decode, QuboModel};
use railqubo_core::solve::SampleSet;
use railqubo_core::{DispatchInstance, Result, Routing};
use serde::Serialize;

use crate::names;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepartureRecord {
    pub train: String,
    pub station: String,
    pub minutes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    /// One character per variable, `0` or `1`.
    pub bits: String,
    pub energy: f64,
    pub multiplicity: usize,
    /// Present when every departure group has exactly one bit set.
    pub schedule: Option<Vec<DepartureRecord>>,
}

pub fn sample_records(
    set: &SampleSet,
    model: &QuboModel,
    instance: &DispatchInstance,
) -> Result<Vec<SampleRecord>> {
    set.samples()
        .iter()
        .map(|s| {
            let d = decode(&s.bits, model, instance)?;
            let schedule = d.is_one_hot().then(|| {
                d.schedule
                    .departure
                    .iter()
                    .map(|(&e, &t)| DepartureRecord {
                        train: names::train(instance, e.train).to_string(),
                        station: names::station(instance, e.station).to_string(),
                        minutes: names::minutes(instance, t),
                    })
                    .collect()
            });
            Ok(SampleRecord {
                bits: s.bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
                energy: s.energy,
                multiplicity: s.multiplicity,
                schedule,
            })
        })
        .collect()
}

fn lp_name(raw: &str) -> String {
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Column names in LP order: departure times, then precedence variables.
pub fn lp_columns(model: &LinearModel, instance: &DispatchInstance) -> (Vec<String>, Vec<String>) {
    let t = model
        .time_vars
        .iter()
        .map(|v| {
            lp_name(&format!(
                "t_{}_{}",
                names::train(instance, v.event.train),
                names::station(instance, v.event.station)
            ))
        })
        .collect();
    let y = model
        .precedence_vars
        .iter()
        .map(|k| lp_name(&format!("y_{}", names::precedence_key(instance, k))))
        .collect();
    (t, y)
}

fn term(out: &mut String, coeff: f64, name: &str) {
    if coeff < 0.0 {
        let _ = write!(out, " - {:?} {name}", -coeff);
    } else {
        let _ = write!(out, " + {coeff:?} {name}");
    }
}

/// The linear model in CPLEX LP format, times in grid ticks.
pub fn write_lp(model: &LinearModel, instance: &DispatchInstance) -> String {
    let (t, y) = lp_columns(model, instance);
    let name = |c: &Column| match *c {
        Column::Time(i) => &t[i],
        Column::Precedence(i) => &y[i],
    };
    let mut out = String::new();
    let _ = writeln!(out, "\\ big-M constant {}", model.mu);
    let constant: f64 = model.time_vars.iter().map(|v| -v.cost(0)).sum();
    let _ = writeln!(out, "\\ objective constant {constant:?}");
    out.push_str("Minimize\n obj:");
    let mut any = false;
    for (i, v) in model.time_vars.iter().enumerate() {
        let c = v.cost(1) - v.cost(0);
        if c != 0.0 {
            term(&mut out, c, &t[i]);
            any = true;
        }
    }
    if !any {
        if let Some(first) = t.first() {
            let _ = write!(out, " 0 {first}");
        }
    }
    out.push_str("\nSubject To\n");
    for (k, c) in model.constraints.iter().enumerate() {
        let row = c.row(model.mu);
        let _ = write!(out, " c{k}:");
        for (col, coeff) in &row.terms {
            term(&mut out, *coeff, name(col));
        }
        let _ = writeln!(out, " >= {:?}", row.rhs);
    }
    for (k, &(a, b)) in model.order_equalities.iter().enumerate() {
        let _ = writeln!(out, " e{k}: {} - {} = 0", y[a], y[b]);
    }
    out.push_str("Bounds\n");
    for (i, v) in model.time_vars.iter().enumerate() {
        let _ = writeln!(
            out,
            " {} <= {} <= {}",
            v.window.earliest, t[i], v.window.latest
        );
    }
    if !y.is_empty() {
        out.push_str("Binary\n");
        for n in &y {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

/// Routing as readable assignments.
pub fn routing_lines(instance: &DispatchInstance, routing: &Routing) -> Vec<String> {
    let mut out = Vec::new();
    for (&(j, k), &track) in &routing.line_track {
        out.push(format!(
            "{} {} track {}",
            names::train(instance, j),
            names::segment(instance, k),
            instance.segment(k).tracks[track.0].id
        ));
    }
    for (&(j, s), &track) in &routing.station_track {
        let st = instance.station(s);
        let path: Vec<&str> = routing
            .station_path(j, s)
            .map(|p| p.iter().map(|g| st.switch_groups[g.0].as_str()).collect())
            .unwrap_or_default();
        out.push(format!(
            "{} {} track {} path {}",
            names::train(instance, j),
            st.id,
            st.tracks[track.0],
            path.join("+")
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Move that produced this iteration's routing.
    pub rerouted: Option<String>,
    pub objective: f64,
    pub feasible: bool,
    pub conflict: Option<String>,
    /// Move chosen after this iteration.
    pub next_move: Option<String>,
    pub routing: Vec<String>,
}

pub fn iteration_log(instance: &DispatchInstance, result: &DispatchResult) -> Vec<IterationRecord> {
    result
        .iterations
        .iter()
        .enumerate()
        .map(|(k, it)| IterationRecord {
            iteration: k,
            rerouted: it.delta.as_ref().map(|d| names::delta(instance, d)),
            objective: it.objective,
            feasible: it.feasible,
            conflict: it.conflict.as_ref().map(|c| names::conflict(instance, c)),
            next_move: it.applied.as_ref().map(|d| names::delta(instance, d)),
            routing: routing_lines(instance, &it.routing),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use railqubo_core::fixture;
    use railqubo_core::linear::build_linear_model;

    #[test]
    fn lp_names_and_sections() {
        let (inst, routing) = fixture::demo();
        let sets = railqubo_core::derive_conflict_sets(&inst, &routing);
        let model = build_linear_model(&inst, &routing, &sets).unwrap();
        let lp = write_lp(&model, &inst);
        assert!(lp.contains("t_j1_s1"));
        assert!(lp.contains("Binary\n y_j1_j2_dep_s1"));
        assert!(lp.contains(" e0: "));
        assert_eq!(lp.matches(">=").count(), model.constraints.len());
        assert!(lp.ends_with("End\n"));
    }
}
