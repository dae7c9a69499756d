//! Solve, assess, reroute: repeatedly solves the dispatching problem under the
//! current routing and moves the lower-priority train of the costliest
//! conflict onto another resource.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::conflicts::{derive_conflict_sets, Conflict, ConflictSets};
use crate::error::{Error, Result};
use crate::linear::{
    attribute_delays, build_linear_model, solve_with, EnumerationOptions, LinearModel, Schedule,
    Violation, DEFAULT_ENUMERATION_CAP,
};
use crate::model::{
    DispatchInstance, LineTrackIx, Routing, SegmentIx, StationIx, StationTrackIx, SwitchGroupIx,
    TrainIx, Travel,
};
use crate::qubo::{assemble, decode, PenaltyOverrides, QuboModel};
use crate::solve::{brute_force_onehot, simulated_annealing, AnnealParams, SampleSet, ONE_HOT_CAP};
use crate::validate::validate_instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    LinearOracle,
    QuboBrute,
    QuboAnneal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchConfig {
    /// The loop stops once a feasible schedule reaches this objective.
    pub threshold: f64,
    pub max_iterations: usize,
    pub mode: SolverMode,
    pub anneal: AnnealParams,
    pub penalties: PenaltyOverrides,
    pub enumeration_cap: usize,
    pub one_hot_cap: u128,
}

impl Default for DispatchConfig {
    fn default() -> Self {
        DispatchConfig {
            threshold: 0.0,
            max_iterations: 10,
            mode: SolverMode::LinearOracle,
            anneal: AnnealParams::default(),
            penalties: PenaltyOverrides::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            one_hot_cap: ONE_HOT_CAP,
        }
    }
}

/// Everything a solver needs for one routing, rebuilt from scratch.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverInput {
    pub conflicts: ConflictSets,
    pub linear: LinearModel,
    /// Present for the QUBO modes.
    pub qubo: Option<QuboModel>,
}

pub fn rebuild_after_reroute(
    instance: &DispatchInstance,
    routing: &Routing,
    config: &DispatchConfig,
) -> Result<SolverInput> {
    let conflicts = derive_conflict_sets(instance, routing);
    let linear = build_linear_model(instance, routing, &conflicts)?;
    let qubo = match config.mode {
        SolverMode::LinearOracle => None,
        SolverMode::QuboBrute | SolverMode::QuboAnneal => {
            Some(assemble(instance, routing, &config.penalties)?)
        }
    };
    Ok(SolverInput {
        conflicts,
        linear,
        qubo,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solved {
    pub input: SolverInput,
    pub schedule: Schedule,
    /// Samples returned by a QUBO solver.
    pub samples: Option<SampleSet>,
}

/// Solves one routing. The linear model judges every schedule, whatever
/// produced it.
pub trait SubproblemSolver {
    fn solve(
        &self,
        instance: &DispatchInstance,
        routing: &Routing,
        config: &DispatchConfig,
    ) -> Result<Solved>;
}

/// Sequential solvers of this crate.
#[derive(Clone, Copy, Debug, Default)]
pub struct BuiltinSolver;

impl SubproblemSolver for BuiltinSolver {
    fn solve(
        &self,
        instance: &DispatchInstance,
        routing: &Routing,
        config: &DispatchConfig,
    ) -> Result<Solved> {
        let input = rebuild_after_reroute(instance, routing, config)?;
        match config.mode {
            SolverMode::LinearOracle => {
                let options = EnumerationOptions {
                    cap: config.enumeration_cap,
                    ..Default::default()
                };
                let schedule = solve_with(&input.linear, &options)?;
                Ok(Solved {
                    input,
                    schedule,
                    samples: None,
                })
            }
            SolverMode::QuboBrute | SolverMode::QuboAnneal => {
                let qubo = input.qubo.as_ref().expect("built for QUBO modes");
                let samples = if config.mode == SolverMode::QuboBrute {
                    brute_force_onehot(qubo, config.one_hot_cap)?
                } else {
                    simulated_annealing(&qubo.qubo, &config.anneal)?
                };
                schedule_from_samples(instance, input, samples)
            }
        }
    }
}

/// Judges the decoded samples with the linear model and keeps the best one:
/// feasible before infeasible, then lowest objective, then sample order.
pub fn schedule_from_samples(
    instance: &DispatchInstance,
    input: SolverInput,
    samples: SampleSet,
) -> Result<Solved> {
    let qubo = input.qubo.as_ref().expect("built for QUBO modes");
    let mut best: Option<Schedule> = None;
    for s in samples.samples() {
        let d = decode(&s.bits, qubo, instance)?;
        let schedule = if d.is_one_hot() {
            Schedule::evaluated(&input.linear, d.schedule.departure)
        } else {
            d.schedule
        };
        let better = match &best {
            None => true,
            Some(b) => {
                (schedule.feasible && !b.feasible)
                    || (schedule.feasible == b.feasible && schedule.objective < b.objective - 1e-9)
            }
        };
        if better {
            best = Some(schedule);
        }
    }
    let schedule = best.unwrap_or_else(|| Schedule::evaluated(&input.linear, BTreeMap::new()));
    Ok(Solved {
        input,
        schedule,
        samples: Some(samples),
    })
}

/// The conflict to resolve next. An infeasible schedule yields a conflict
/// whose condition is broken or whose condition pushes a departure past its
/// window; a feasible one yields the conflict holding back the largest
/// weighted delay.
pub fn pick_conflict(schedule: &Schedule, model: &LinearModel) -> Option<Conflict> {
    let attributions = attribute_delays(model, schedule);
    let max_by_score = |beyond_only: bool| {
        let mut best: Option<(Conflict, f64)> = None;
        for a in attributions
            .iter()
            .filter(|a| !beyond_only || a.beyond_window)
        {
            if best.is_none_or(|(_, s)| a.score > s + 1e-12) {
                best = Some((a.conflict, a.score));
            }
        }
        best
    };
    if !schedule.feasible {
        let broken: Vec<Conflict> = schedule
            .violations
            .iter()
            .filter_map(|v| match v {
                Violation::Disjunction { conflict, .. } => Some(*conflict),
                Violation::Unconditional {
                    conflict: Some(c), ..
                } => Some(*c),
                _ => None,
            })
            .collect();
        if let Some(c) = broken
            .iter()
            .find(|c| c.is_routable())
            .or_else(|| broken.first())
        {
            return Some(*c);
        }
        return max_by_score(true)
            .or_else(|| max_by_score(false))
            .map(|(c, _)| c);
    }
    max_by_score(false)
        .filter(|&(_, s)| s > 0.0)
        .map(|(c, _)| c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveKind {
    ParallelTrack,
    Platform,
    StationPath,
}

/// A single change of one train's routing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RoutingDelta {
    LineTrack {
        train: TrainIx,
        segment: SegmentIx,
        from: Option<LineTrackIx>,
        to: LineTrackIx,
    },
    StationTrack {
        train: TrainIx,
        station: StationIx,
        from: Option<StationTrackIx>,
        to: StationTrackIx,
        path: BTreeSet<SwitchGroupIx>,
    },
    StationPath {
        train: TrainIx,
        station: StationIx,
        from: Option<BTreeSet<SwitchGroupIx>>,
        to: BTreeSet<SwitchGroupIx>,
    },
}

impl RoutingDelta {
    pub fn kind(&self) -> MoveKind {
        match self {
            RoutingDelta::LineTrack { .. } => MoveKind::ParallelTrack,
            RoutingDelta::StationTrack { .. } => MoveKind::Platform,
            RoutingDelta::StationPath { .. } => MoveKind::StationPath,
        }
    }

    pub fn train(&self) -> TrainIx {
        match self {
            RoutingDelta::LineTrack { train, .. }
            | RoutingDelta::StationTrack { train, .. }
            | RoutingDelta::StationPath { train, .. } => *train,
        }
    }

    pub fn apply(&self, routing: &Routing) -> Routing {
        let mut r = routing.clone();
        match self {
            RoutingDelta::LineTrack {
                train, segment, to, ..
            } => {
                r.line_track.insert((*train, *segment), *to);
            }
            RoutingDelta::StationTrack {
                train,
                station,
                to,
                path,
                ..
            } => {
                r.station_track.insert((*train, *station), *to);
                r.station_path.insert((*train, *station), path.clone());
            }
            RoutingDelta::StationPath {
                train, station, to, ..
            } => {
                r.station_path.insert((*train, *station), to.clone());
            }
        }
        r
    }
}

/// The train that yields: smaller weight, and on equal weights the larger id.
pub fn lower_priority(instance: &DispatchInstance, a: TrainIx, b: TrainIx) -> TrainIx {
    let (ta, tb) = (instance.train(a), instance.train(b));
    match ta.weight.partial_cmp(&tb.weight) {
        Some(core::cmp::Ordering::Less) => a,
        Some(core::cmp::Ordering::Greater) => b,
        _ => {
            if ta.id >= tb.id {
                a
            } else {
                b
            }
        }
    }
}

/// Candidate moves for the yielding train of `conflict`, in preference order.
pub fn candidate_moves(
    instance: &DispatchInstance,
    routing: &Routing,
    conflict: &Conflict,
) -> Vec<RoutingDelta> {
    let (a, b) = conflict.trains();
    let j = lower_priority(instance, a, b);
    let mut out = Vec::new();
    match *conflict {
        Conflict::Span { segment, .. } | Conflict::SingleTrack { segment, .. } => {
            let train = instance.train(j);
            let seg = instance.segment(segment);
            let travel = train.legs().find_map(|(s, s2)| {
                if (s, s2) == (seg.from, seg.to) {
                    Some(Travel::Forward)
                } else if (s, s2) == (seg.to, seg.from) {
                    Some(Travel::Backward)
                } else {
                    None
                }
            });
            let Some(travel) = travel else { return out };
            let current = routing.line_track(j, segment);
            for (k, track) in seg.tracks.iter().enumerate() {
                let k = LineTrackIx(k);
                if Some(k) != current && track.direction.allows(travel) {
                    out.push(RoutingDelta::LineTrack {
                        train: j,
                        segment,
                        from: current,
                        to: k,
                    });
                }
            }
        }
        Conflict::StationTrack { station, .. } => {
            let current = routing.station_track(j, station);
            let st = instance.station(station);
            for k in 0..st.tracks.len() {
                let k = StationTrackIx(k);
                if Some(k) != current {
                    out.push(RoutingDelta::StationTrack {
                        train: j,
                        station,
                        from: current,
                        to: k,
                        path: st.track_switch_groups[k.0].clone(),
                    });
                }
            }
        }
        Conflict::Switch { station, .. } => {
            let current = routing.station_path(j, station).cloned();
            let st = instance.station(station);
            if let Some(track) = routing.station_track(j, station) {
                for &g in &st.track_switch_groups[track.0] {
                    let to: BTreeSet<SwitchGroupIx> = [g].into_iter().collect();
                    if current.as_ref() != Some(&to) {
                        out.push(RoutingDelta::StationPath {
                            train: j,
                            station,
                            from: current.clone(),
                            to,
                        });
                    }
                }
            }
        }
        Conflict::Circulation { .. } => {}
    }
    out
}

/// First candidate move not yet tried for `conflict` whose routing validates
/// and has not been solved before.
pub fn reroute(
    instance: &DispatchInstance,
    routing: &Routing,
    conflict: &Conflict,
    tried: &BTreeSet<RoutingDelta>,
    visited: &BTreeSet<Routing>,
) -> Option<(Routing, RoutingDelta)> {
    candidate_moves(instance, routing, conflict)
        .into_iter()
        .filter(|m| !tried.contains(m))
        .map(|m| (m.apply(routing), m))
        .find(|(r, _)| !visited.contains(r) && validate_instance(instance, r).is_empty())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Satisfied,
    ExhaustedMoves,
    MaxIterations,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Satisfied => "satisfied",
            Termination::ExhaustedMoves => "exhausted-moves",
            Termination::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iteration {
    pub routing: Routing,
    /// The move that produced this routing; none for the starting routing.
    pub delta: Option<RoutingDelta>,
    pub objective: f64,
    pub feasible: bool,
    pub conflict: Option<Conflict>,
    /// The move chosen after assessing this routing.
    pub applied: Option<RoutingDelta>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchResult {
    pub best_schedule: Schedule,
    pub best_routing: Routing,
    pub best_iteration: usize,
    /// Where the loop stopped. After the iteration limit this is the last
    /// proposed move, which was not solved.
    pub final_routing: Routing,
    pub iterations: Vec<Iteration>,
    pub terminated_by: Termination,
}

pub fn run(
    instance: &DispatchInstance,
    routing: &Routing,
    config: &DispatchConfig,
) -> Result<DispatchResult> {
    run_with(instance, routing, config, &BuiltinSolver)
}

pub fn run_with(
    instance: &DispatchInstance,
    routing: &Routing,
    config: &DispatchConfig,
    solver: &dyn SubproblemSolver,
) -> Result<DispatchResult> {
    let mut current = routing.clone();
    let mut delta: Option<RoutingDelta> = None;
    let mut iterations: Vec<Iteration> = Vec::new();
    let mut best: Option<(Schedule, Routing, usize)> = None;
    let mut tried: BTreeMap<Conflict, BTreeSet<RoutingDelta>> = BTreeMap::new();
    let mut visited: BTreeSet<Routing> = BTreeSet::new();
    let mut terminated_by = Termination::MaxIterations;

    for it in 0..config.max_iterations.max(1) {
        let solved = solver
            .solve(instance, &current, config)
            .map_err(|e| Error::Iteration {
                iteration: it,
                source: Box::new(e),
            })?;
        visited.insert(current.clone());
        let schedule = solved.schedule;
        let improves = match &best {
            None => true,
            Some((b, _, _)) => {
                (schedule.feasible && !b.feasible)
                    || (schedule.feasible == b.feasible && schedule.objective < b.objective - 1e-12)
            }
        };
        let mut entry = Iteration {
            routing: current.clone(),
            delta: delta.take(),
            objective: schedule.objective,
            feasible: schedule.feasible,
            conflict: None,
            applied: None,
        };
        let satisfied = schedule.feasible && schedule.objective <= config.threshold;
        let conflict = if satisfied {
            None
        } else {
            pick_conflict(&schedule, &solved.input.linear)
        };
        if improves {
            best = Some((schedule, current.clone(), it));
        }
        if satisfied {
            iterations.push(entry);
            terminated_by = Termination::Satisfied;
            break;
        }
        entry.conflict = conflict;
        let next = conflict.and_then(|c| {
            let memory = tried.entry(c).or_default();
            let found = reroute(instance, &current, &c, memory, &visited);
            if let Some((_, m)) = &found {
                memory.insert(m.clone());
            }
            found
        });
        let Some((routing, m)) = next else {
            iterations.push(entry);
            terminated_by = Termination::ExhaustedMoves;
            break;
        };
        entry.applied = Some(m.clone());
        iterations.push(entry);
        current = routing;
        delta = Some(m);
    }

    let (best_schedule, best_routing, best_iteration) = best.expect("at least one iteration");
    Ok(DispatchResult {
        best_schedule,
        best_routing,
        best_iteration,
        final_routing: current,
        iterations,
        terminated_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::InstanceBuilder;
    use crate::fixture;
    use crate::model::TrackDirection;

    fn config(threshold: f64, mode: SolverMode) -> DispatchConfig {
        DispatchConfig {
            threshold,
            mode,
            ..Default::default()
        }
    }

    fn objectives(r: &DispatchResult) -> Vec<f64> {
        r.iterations.iter().map(|i| i.objective).collect()
    }

    #[test]
    fn threshold_reached_after_one_reroute() {
        let (inst, routing) = fixture::demo();
        let r = run(&inst, &routing, &config(0.4, SolverMode::LinearOracle)).unwrap();
        let obj = objectives(&r);
        assert_eq!(obj.len(), 2);
        assert!((obj[0] - 0.5).abs() < 1e-12 && (obj[1] - 0.3).abs() < 1e-12);
        assert_eq!(r.terminated_by, Termination::Satisfied);
        let (_, expected) = fixture::demo_rerouted();
        assert_eq!(r.final_routing, expected);
        assert!(matches!(
            r.iterations[0].conflict,
            Some(Conflict::Span { .. })
        ));
    }

    #[test]
    fn zero_threshold_exhausts_moves() {
        let (inst, routing) = fixture::demo();
        let r = run(&inst, &routing, &config(0.0, SolverMode::LinearOracle)).unwrap();
        assert_eq!(r.terminated_by, Termination::ExhaustedMoves);
        assert!((r.best_schedule.objective - 0.3).abs() < 1e-12);
        assert_eq!(r.best_iteration, 1);
    }

    #[test]
    fn brute_force_follows_the_same_trajectory() {
        let (inst, routing) = fixture::demo();
        let a = run(&inst, &routing, &config(0.0, SolverMode::LinearOracle)).unwrap();
        let b = run(&inst, &routing, &config(0.0, SolverMode::QuboBrute)).unwrap();
        assert_eq!(objectives(&a), objectives(&b));
        assert_eq!(a.best_schedule.departure, b.best_schedule.departure);
    }

    #[test]
    fn lone_train_needs_no_conflict() {
        let mut b = InstanceBuilder::new(1);
        b.station("a", &["1"])
            .station("b", &["1"])
            .segment("a", "b", &[("1", TrackDirection::Both)])
            .train("t", 1.0, &["a", "b"])
            .schedule("t", "a", None, Some(0))
            .schedule("t", "b", Some(5), None)
            .pass("t", "a", "b", 5)
            .d_max("t", 3)
            .line_track("t", "a", "b", "1");
        let (inst, routing) = b.build().unwrap();
        let r = run(
            &inst,
            &routing,
            &config(f64::INFINITY, SolverMode::LinearOracle),
        )
        .unwrap();
        assert_eq!(r.iterations.len(), 1);
        assert_eq!(r.iterations[0].conflict, None);
        assert_eq!(r.terminated_by, Termination::Satisfied);
    }

    #[test]
    fn tight_d_max_picks_the_broken_conflict() {
        let (mut inst, routing) = fixture::demo();
        for d in inst.scenario.d_max.values_mut() {
            *d = 1;
        }
        let sets = derive_conflict_sets(&inst, &routing);
        let model = build_linear_model(&inst, &routing, &sets).unwrap();
        let s = crate::linear::solve_order_enumeration(&model).unwrap();
        assert!(!s.feasible);
        let c = pick_conflict(&s, &model).unwrap();
        assert!(c.involves(inst.train_by_id("j1").unwrap()));
        assert!(c.involves(inst.train_by_id("j2").unwrap()));
    }

    #[test]
    fn lower_priority_breaks_ties_by_id() {
        let (inst, _) = fixture::demo();
        let id = |s| inst.train_by_id(s).unwrap();
        assert_eq!(lower_priority(&inst, id("j1"), id("j2")), id("j2"));
        assert_eq!(lower_priority(&inst, id("j2"), id("j3")), id("j3"));
        assert_eq!(lower_priority(&inst, id("j3"), id("j2")), id("j3"));
    }

    #[test]
    fn exhausted_after_all_moves_tried() {
        let (inst, routing) = fixture::demo();
        let sets = derive_conflict_sets(&inst, &routing);
        let span = *sets
            .conflicts()
            .iter()
            .find(|c| matches!(c, Conflict::Span { .. }))
            .unwrap();
        let moves = candidate_moves(&inst, &routing, &span);
        assert_eq!(moves.len(), 1);
        let tried: BTreeSet<_> = moves.into_iter().collect();
        assert_eq!(
            reroute(&inst, &routing, &span, &tried, &BTreeSet::new()),
            None
        );
    }

    #[test]
    fn platform_move_keeps_the_routing_valid() {
        let (inst, routing) = fixture::demo();
        let sets = derive_conflict_sets(&inst, &routing);
        let platform = *sets
            .conflicts()
            .iter()
            .find(|c| matches!(c, Conflict::StationTrack { .. }))
            .unwrap();
        let (r, m) = reroute(
            &inst,
            &routing,
            &platform,
            &BTreeSet::new(),
            &BTreeSet::new(),
        )
        .unwrap();
        assert_eq!(m.kind(), MoveKind::Platform);
        assert!(validate_instance(&inst, &r).is_empty());
        let after = derive_conflict_sets(&inst, &r);
        assert!(!after
            .conflicts()
            .iter()
            .any(|c| matches!(c, Conflict::StationTrack { .. })));
    }
}
