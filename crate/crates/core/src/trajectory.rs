//! Timed dual-arm joint samples with discrete events, and their JSON file form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::robot::{Arm, Joints, Units};

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub t: f64,
    pub left: Joints,
    pub right: Joints,
    /// Jaw openings, left then right.
    pub jaw: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Grasp,
    Release,
    HandoverExchange,
    SuctionOn,
    SuctionOff,
    Place,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Grasp => "grasp",
            EventKind::Release => "release",
            EventKind::HandoverExchange => "handover_exchange",
            EventKind::SuctionOn => "suction_on",
            EventKind::SuctionOff => "suction_off",
            EventKind::Place => "place",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPayload {
    /// Arm that closes its jaws (grasp, handover receiver) or opens them (release).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<Arm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub t: f64,
    /// Index of the first sample that reflects the event.
    pub sample: usize,
    pub kind: EventKind,
    #[serde(default)]
    pub payload: EventPayload,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub format_version: u32,
    #[serde(default)]
    pub units: Units,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Default for Trajectory {
    fn default() -> Self {
        Self {
            format_version: TRAJECTORY_FORMAT_VERSION,
            units: Units::default(),
            samples: Vec::new(),
            events: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("trajectory format error: {0}")]
    Format(String),
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Time ordering, event anchoring and unit checks.
    pub fn check(&self) -> Result<(), String> {
        if self.format_version != TRAJECTORY_FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        if !self.units.is_si() {
            return Err("trajectory must use m/rad/s units".into());
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t >= w[0].t) {
                return Err(format!("sample {} time {} precedes sample {} time {}", i + 1, w[1].t, i, w[0].t));
            }
        }
        if let Some(s) = self.samples.first() {
            if !(s.t >= 0.0) {
                return Err("first sample time is negative".into());
            }
        }
        for (i, w) in self.events.windows(2).enumerate() {
            if !(w[1].t >= w[0].t) || w[1].sample < w[0].sample {
                return Err(format!("event {} is out of order", i + 1));
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            match self.samples.get(e.sample) {
                Some(s) if s.t == e.t => {}
                _ => return Err(format!("event {i} does not match the time of sample {}", e.sample)),
            }
        }
        Ok(())
    }

    /// Largest joint speed between consecutive samples.
    pub fn max_joint_speed(&self) -> f64 {
        self.samples
            .windows(2)
            .filter(|w| w[1].t > w[0].t)
            .map(|w| {
                let dt = w[1].t - w[0].t;
                w[0].left
                    .iter()
                    .zip(&w[1].left)
                    .chain(w[0].right.iter().zip(&w[1].right))
                    .map(|(a, b)| (b - a).abs() / dt)
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn event_string(&self) -> Vec<EventKind> {
        self.events.iter().map(|e| e.kind).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, TrajectoryError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let tr: Trajectory =
            serde_path_to_error::deserialize(&mut de).map_err(|e| TrajectoryError::Format(e.to_string()))?;
        tr.check().map_err(TrajectoryError::Format)?;
        Ok(tr)
    }
}

pub fn write_trajectory(tr: &Trajectory, path: &Path) -> Result<(), TrajectoryError> {
    std::fs::write(path, tr.to_json()).map_err(|e| TrajectoryError::Io(path.display().to_string(), e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, TrajectoryError> {
    let text = std::fs::read_to_string(path).map_err(|e| TrajectoryError::Io(path.display().to_string(), e))?;
    Trajectory::from_json(&text).map_err(|e| match e {
        TrajectoryError::Format(m) => TrajectoryError::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Appends samples and events while keeping times and indices consistent.
#[derive(Clone, Debug)]
pub struct TrajectoryBuilder {
    pub tr: Trajectory,
}

impl TrajectoryBuilder {
    pub fn new(left: Joints, right: Joints, jaw: [f64; 2]) -> Self {
        let mut tr = Trajectory::default();
        tr.samples.push(Sample { t: 0.0, left, right, jaw });
        Self { tr }
    }

    pub fn last(&self) -> &Sample {
        self.tr.samples.last().expect("builder always holds a sample")
    }

    pub fn now(&self) -> f64 {
        self.last().t
    }

    /// Moves one arm through `timed` (times relative to now); the first entry
    /// is the current configuration and is skipped.
    pub fn push_motion(&mut self, arm: Arm, timed: &[(f64, Joints)]) {
        let t0 = self.now();
        for (t, q) in timed.iter().skip(1) {
            let mut s = self.last().clone();
            s.t = t0 + t;
            match arm {
                Arm::Left => s.left = *q,
                Arm::Right => s.right = *q,
            }
            self.tr.samples.push(s);
        }
    }

    /// Records an event with new jaw openings; adds a sample at the same time.
    pub fn push_event(&mut self, kind: EventKind, payload: EventPayload, jaw: [f64; 2]) {
        let mut s = self.last().clone();
        s.jaw = jaw;
        self.tr.samples.push(s);
        self.tr.events.push(Event {
            t: self.now(),
            sample: self.tr.samples.len() - 1,
            kind,
            payload,
        });
    }

    /// Appends another builder's content recorded from this builder's end state.
    pub fn append(&mut self, other: &TrajectoryBuilder) {
        let offset = self.tr.samples.len() - 1;
        let t0 = self.now();
        for s in other.tr.samples.iter().skip(1) {
            let mut s = s.clone();
            s.t += t0;
            self.tr.samples.push(s);
        }
        for e in &other.tr.events {
            let mut e = e.clone();
            e.t += t0;
            e.sample += offset;
            self.tr.events.push(e);
        }
    }

    /// A fresh builder starting at this builder's final state, at time 0.
    pub fn fork(&self) -> TrajectoryBuilder {
        let mut s = self.last().clone();
        s.t = 0.0;
        let mut tr = Trajectory::default();
        tr.samples.push(s);
        TrajectoryBuilder { tr }
    }

    pub fn finish(self) -> Trajectory {
        self.tr
    }
}
