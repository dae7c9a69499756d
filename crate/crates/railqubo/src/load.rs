//! Instance files.
//!
//! One TOML file carries the network, the trains with their timetable and
//! timing parameters, the disturbance scenario and the starting routing. All
//! durations and clock times are in minutes and must lie on the grid of
//! `1 / resolution` minutes.
//!
//! ```toml
//! resolution = 1
//!
//! [[station]]
//! id = "s1"
//! tracks = ["1", "2"]
//! switch_groups = { a = ["1"], b = ["2"] }
//!
//! [[segment]]
//! from = "s1"
//! to = "s2"
//! tracks = [{ id = "1", direction = "forward" }, { id = "2", direction = "both" }]
//!
//! [timing]
//! res_default = 1
//!
//! [[train]]
//! id = "j1"
//! weight = 2.0
//! d_max = 10
//! stops = [
//!   { station = "s1", departure = 3, delay = 1 },
//!   { station = "s2", arrival = 7, departure = 8, dwell = 1, counted = false, track = "1" },
//! ]
//! legs = [{ from = "s1", to = "s2", pass = 4, blocks = 2, track = "1" }]
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use railqubo_core::{
    validate_instance, DispatchInstance, InstanceBuilder, Routing, Tick, TrackDirection,
};
use serde::Deserialize;
use toml::Spanned;

/// A problem found in an instance file, with its position when known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}:{c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", render(.0))]
    Invalid(Vec<Diagnostic>),
}

impl LoadError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            LoadError::Io { .. } => &[],
            LoadError::Invalid(d) => d,
        }
    }
}

fn render(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

type Minutes = Spanned<f64>;

#[derive(Deserialize)]
struct FileInstance {
    resolution: Option<Spanned<i64>>,
    #[serde(default)]
    station: Vec<FileStation>,
    #[serde(default)]
    segment: Vec<FileSegment>,
    #[serde(default)]
    timing: FileTiming,
    #[serde(default)]
    train: Vec<FileTrain>,
}

#[derive(Deserialize)]
struct FileStation {
    id: String,
    tracks: Vec<String>,
    #[serde(default)]
    switch_groups: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
struct FileSegment {
    from: String,
    to: String,
    tracks: Vec<FileLineTrack>,
}

#[derive(Deserialize)]
struct FileLineTrack {
    id: String,
    direction: Direction,
}

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Direction {
    Forward,
    Backward,
    Both,
}

#[derive(Default, Deserialize)]
struct FileTiming {
    res_default: Option<Minutes>,
    #[serde(default)]
    res: Vec<FileRes>,
    #[serde(default)]
    prep: Vec<FilePrep>,
}

#[derive(Deserialize)]
struct FileRes {
    first: String,
    second: String,
    station: String,
    minutes: Minutes,
}

#[derive(Deserialize)]
struct FilePrep {
    inbound: String,
    outbound: String,
    station: String,
    minutes: Minutes,
}

#[derive(Deserialize)]
struct FileTrain {
    id: String,
    weight: Spanned<f64>,
    d_max: Minutes,
    stops: Vec<FileStop>,
    #[serde(default)]
    legs: Vec<FileLeg>,
}

#[derive(Deserialize)]
struct FileStop {
    station: String,
    arrival: Option<Minutes>,
    departure: Option<Minutes>,
    /// Primary delay of the departure.
    delay: Option<Minutes>,
    dwell: Option<Minutes>,
    #[serde(default = "yes")]
    counted: bool,
    track: Option<String>,
    /// Switch groups used; defaults to all groups of `track`.
    path: Option<Vec<String>>,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
struct FileLeg {
    from: String,
    to: String,
    pass: Minutes,
    blocks: Option<Minutes>,
    track: Option<String>,
}

/// Byte offset to 1-based line and column.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

struct Grid<'a> {
    text: &'a str,
    resolution: u32,
    diagnostics: Vec<Diagnostic>,
}

impl Grid<'_> {
    fn at(&mut self, offset: usize, message: String) {
        let (line, col) = position(self.text, offset);
        self.diagnostics.push(Diagnostic {
            line: Some(line),
            column: Some(col),
            message,
        });
    }

    /// Minutes to grid ticks. A rejected value is recorded and replaced by a
    /// stand-in, so later checks do not also report it as missing.
    fn ticks(&mut self, v: &Minutes, what: &str, nonnegative: bool) -> Option<Tick> {
        let m = *v.get_ref();
        let x = m * self.resolution as f64;
        if !x.is_finite() || x.abs() > 1e15 {
            self.at(v.span().start, format!("{what} = {m} is not a usable time"));
            return Some(0);
        }
        let t = x.round();
        if nonnegative && m < 0.0 {
            self.at(v.span().start, format!("{what} = {m} must be nonnegative"));
            return Some(0);
        }
        if (x - t).abs() > 1e-9 {
            self.at(
                v.span().start,
                format!(
                    "{what} = {m} is off the grid of 1/{} minute",
                    self.resolution
                ),
            );
        }
        Some(t as Tick)
    }
}

pub fn load_instance(path: &Path) -> Result<(DispatchInstance, Routing), LoadError> {
    load_instance_with(path, None)
}

/// As [`load_instance`], with the file's resolution replaced by `resolution`.
pub fn load_instance_with(
    path: &Path,
    resolution: Option<u32>,
) -> Result<(DispatchInstance, Routing), LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance(&text, resolution)
}

/// Parses instance text. Every problem is reported, not only the first.
pub fn parse_instance(
    text: &str,
    resolution: Option<u32>,
) -> Result<(DispatchInstance, Routing), LoadError> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::parse(text).map_err(|e| syntax(text, &e))?;
    let file: FileInstance = serde_ignored::deserialize(de, |p| unknown.push(p.to_string()))
        .map_err(|e| syntax(text, &e))?;

    let mut grid = Grid {
        text,
        resolution: 1,
        diagnostics: unknown
            .into_iter()
            .map(|k| Diagnostic {
                line: None,
                column: None,
                message: format!("unknown key `{k}`"),
            })
            .collect(),
    };
    grid.resolution = match (resolution, &file.resolution) {
        (Some(r), _) if r >= 1 => r,
        (Some(_), _) => {
            grid.diagnostics.push(Diagnostic {
                line: None,
                column: None,
                message: "resolution must be at least 1".into(),
            });
            1
        }
        (None, None) => 1,
        (None, Some(r)) => match u32::try_from(*r.get_ref()) {
            Ok(v) if v >= 1 => v,
            _ => {
                grid.at(r.span().start, "resolution must be at least 1".into());
                1
            }
        },
    };

    let mut b = InstanceBuilder::new(grid.resolution);
    for s in &file.station {
        let tracks: Vec<&str> = s.tracks.iter().map(String::as_str).collect();
        b.station(&s.id, &tracks);
        for (g, tracks) in &s.switch_groups {
            let tracks: Vec<&str> = tracks.iter().map(String::as_str).collect();
            b.switch_group(&s.id, g, &tracks);
        }
    }
    for seg in &file.segment {
        let tracks: Vec<(&str, TrackDirection)> = seg
            .tracks
            .iter()
            .map(|t| {
                let d = match t.direction {
                    Direction::Forward => TrackDirection::Forward,
                    Direction::Backward => TrackDirection::Backward,
                    Direction::Both => TrackDirection::Both,
                };
                (t.id.as_str(), d)
            })
            .collect();
        b.segment(&seg.from, &seg.to, &tracks);
    }

    for t in &file.train {
        let weight = *t.weight.get_ref();
        if !weight.is_finite() || weight < 0.0 {
            grid.at(
                t.weight.span().start,
                format!("weight of `{}` must be a nonnegative number", t.id),
            );
        }
        let route: Vec<&str> = t.stops.iter().map(|s| s.station.as_str()).collect();
        b.train(&t.id, weight, &route);
        if let Some(d) = grid.ticks(&t.d_max, "d_max", true) {
            b.d_max(&t.id, d);
        }
        for s in &t.stops {
            let arrival = s
                .arrival
                .as_ref()
                .and_then(|v| grid.ticks(v, "arrival", false));
            let departure = s
                .departure
                .as_ref()
                .and_then(|v| grid.ticks(v, "departure", false));
            b.schedule(&t.id, &s.station, arrival, departure);
            if !s.counted {
                b.counted(&t.id, &s.station, false);
            }
            if let Some(d) = s.delay.as_ref().and_then(|v| grid.ticks(v, "delay", true)) {
                b.primary_delay(&t.id, &s.station, d);
            }
            if let Some(d) = s.dwell.as_ref().and_then(|v| grid.ticks(v, "dwell", true)) {
                b.stop(&t.id, &s.station, d);
            }
            if let Some(track) = &s.track {
                b.station_track(&t.id, &s.station, track);
                let path: Vec<String> = match &s.path {
                    Some(p) => p.clone(),
                    None => file
                        .station
                        .iter()
                        .find(|st| st.id == s.station)
                        .map(|st| {
                            st.switch_groups
                                .iter()
                                .filter(|(_, tracks)| tracks.contains(track))
                                .map(|(g, _)| g.clone())
                                .collect()
                        })
                        .unwrap_or_default(),
                };
                let path: Vec<&str> = path.iter().map(String::as_str).collect();
                b.station_path(&t.id, &s.station, &path);
            } else if s.path.is_some() {
                grid.diagnostics.push(Diagnostic {
                    line: None,
                    column: None,
                    message: format!(
                        "train `{}` gives a path at `{}` without a track",
                        t.id, s.station
                    ),
                });
            }
        }
        for leg in &t.legs {
            let on_route = route.windows(2).any(|w| w[0] == leg.from && w[1] == leg.to);
            if !on_route {
                grid.at(
                    leg.pass.span().start,
                    format!(
                        "train `{}` does not run from `{}` to `{}`",
                        t.id, leg.from, leg.to
                    ),
                );
            }
            if let Some(p) = grid.ticks(&leg.pass, "pass", true) {
                b.pass(&t.id, &leg.from, &leg.to, p);
            }
            if let Some(v) = leg
                .blocks
                .as_ref()
                .and_then(|v| grid.ticks(v, "blocks", true))
            {
                b.blocks(&t.id, &leg.from, &leg.to, v);
            }
            if let Some(track) = &leg.track {
                b.line_track(&t.id, &leg.from, &leg.to, track);
            }
        }
    }

    if let Some(v) = file
        .timing
        .res_default
        .as_ref()
        .and_then(|v| grid.ticks(v, "res_default", true))
    {
        b.res_default(v);
    }
    for r in &file.timing.res {
        if let Some(v) = grid.ticks(&r.minutes, "res", true) {
            b.res(&r.first, &r.second, &r.station, v);
        }
    }
    for p in &file.timing.prep {
        if let Some(v) = grid.ticks(&p.minutes, "prep", true) {
            b.prep(&p.inbound, &p.outbound, &p.station, v);
        }
    }

    let mut diagnostics = grid.diagnostics;
    match b.build() {
        Err(errors) => {
            diagnostics.extend(errors.into_iter().map(|e| Diagnostic {
                line: None,
                column: None,
                message: e.0,
            }));
            Err(LoadError::Invalid(diagnostics))
        }
        Ok((instance, routing)) => {
            diagnostics.extend(validate_instance(&instance, &routing).into_iter().map(|d| {
                Diagnostic {
                    line: None,
                    column: None,
                    message: d.describe(&instance),
                }
            }));
            if diagnostics.is_empty() {
                Ok((instance, routing))
            } else {
                Err(LoadError::Invalid(diagnostics))
            }
        }
    }
}

fn syntax(text: &str, e: &toml::de::Error) -> LoadError {
    let (line, column) = match e.span() {
        Some(s) => {
            let (l, c) = position(text, s.start);
            (Some(l), Some(c))
        }
        None => (None, None),
    };
    LoadError::Invalid(vec![Diagnostic {
        line,
        column,
        message: e.message().to_string(),
    }])
}
