//! Replays a trajectory against a task: tracks the tool and objects through
//! the events, checks joint limits, speed and collisions on densely
//! interpolated states, and reports where every object ends up.

use serde::{Deserialize, Serialize};

use crate::geom::{Body, RigidTransform};
use crate::motion::lerp;
use crate::planner::{episode_grammar_ok, TaskSpec, GOAL_ORIENTATION_TOL, GOAL_POSITION_TOL};
use crate::robot::{frames_unchecked, Arm, DualConfig};
use crate::trajectory::{EventKind, Trajectory};
use crate::world::{Holders, Role, World};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectOutcome {
    pub name: String,
    pub pose: RigidTransform,
    pub position_error: f64,
    pub orientation_error: f64,
    pub at_goal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub violations: Vec<Violation>,
    pub objects: Vec<ObjectOutcome>,
    pub episodes: Vec<Vec<EventKind>>,
    pub grammar_ok: bool,
    pub max_joint_speed: f64,
    pub states_checked: usize,
}

impl ReplayReport {
    pub fn all_at_goal(&self) -> bool {
        self.objects.iter().all(|o| o.at_goal)
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty() && self.grammar_ok && self.all_at_goal()
    }
}

#[derive(Clone, Debug)]
struct Scene {
    tool: RigidTransform,
    /// Holding arm and the tool in its TCP frame.
    holder: Option<(Arm, RigidTransform)>,
    objects: Vec<RigidTransform>,
    /// Object on the pad and its pose in the tool frame.
    attached: Option<(usize, RigidTransform)>,
}

/// Splits the event string into episodes, each ending at `suction_off`.
/// A trailing `release` (stowing the tool) is not part of any episode.
pub fn episode_strings(kinds: &[EventKind]) -> (Vec<Vec<EventKind>>, Vec<EventKind>) {
    let mut episodes = Vec::new();
    let mut cur = Vec::new();
    for &k in kinds {
        cur.push(k);
        if k == EventKind::SuctionOff {
            episodes.push(std::mem::take(&mut cur));
        }
    }
    (episodes, cur)
}

struct Replayer<'a> {
    spec: &'a TaskSpec,
    scene: Scene,
    violations: Vec<Violation>,
    states: usize,
}

impl Replayer<'_> {
    fn tcp(&self, arm: Arm, c: &DualConfig) -> RigidTransform {
        frames_unchecked(self.spec.robot.arm(arm), c.arm(arm)).tcp
    }

    fn tool_pose(&self, c: &DualConfig) -> RigidTransform {
        match self.scene.holder {
            Some((arm, rel)) => self.tcp(arm, c).compose(&rel),
            None => self.scene.tool,
        }
    }

    fn object_poses(&self, c: &DualConfig) -> Vec<RigidTransform> {
        let mut out = self.scene.objects.clone();
        if let Some((i, rel)) = self.scene.attached {
            out[i] = self.tool_pose(c).compose(&rel);
        }
        out
    }

    /// Freezes the load at configuration `c` (before a holder change).
    fn settle(&mut self, c: &DualConfig) {
        self.scene.tool = self.tool_pose(c);
        self.scene.objects = self.object_poses(c);
    }

    fn check(&mut self, t: f64, c: &DualConfig, jaws: [f64; 2]) {
        self.states += 1;
        let model = &self.spec.robot;
        for arm in [Arm::Left, Arm::Right] {
            if !model.arm(arm).within_limits(c.arm(arm)) {
                self.violations.push(Violation {
                    t,
                    message: format!("{} arm outside joint limits", arm.name()),
                });
            }
        }
        let mut w = World::new();
        w.add_robot(model, c, jaws);
        w.add_bodies([self.spec.table.clone()], Role::Table);
        let poses = self.object_poses(c);
        w.add_bodies(
            self.spec
                .objects
                .iter()
                .zip(&poses)
                .map(|(o, p)| Body::new(o.name.clone(), o.shape, *p)),
            Role::Object,
        );
        w.add_bodies(self.spec.tool.bodies(&self.tool_pose(c)), Role::Tool);
        w.holders = match self.scene.holder {
            Some((arm, _)) => Holders::one(arm),
            None => Holders::none(),
        };
        if let Some((a, b)) = w.first_collision() {
            self.violations.push(Violation {
                t,
                message: format!("`{a}` collides with `{b}`"),
            });
        }
    }
}

/// Replays `tr` for `spec`, interpolating so no joint moves more than
/// `resolution` rad between checked states.
pub fn replay(spec: &TaskSpec, tr: &Trajectory, resolution: f64) -> ReplayReport {
    let mut r = Replayer {
        spec,
        scene: Scene {
            tool: spec.tool_pose,
            holder: None,
            objects: spec.objects.iter().map(|o| o.pose).collect(),
            attached: None,
        },
        violations: Vec::new(),
        states: 0,
    };
    if let Err(m) = tr.check() {
        r.violations.push(Violation { t: 0.0, message: m });
    }
    let limit = spec.params.max_joint_speed * (1.0 + 1e-9);
    let speed = tr.max_joint_speed();
    if speed > limit {
        r.violations.push(Violation {
            t: 0.0,
            message: format!("joint speed {speed:.4} rad/s exceeds {limit:.4}"),
        });
    }
    let mut next_event = 0;
    for (i, s) in tr.samples.iter().enumerate() {
        let c = DualConfig {
            left: s.left,
            right: s.right,
        };
        if i > 0 {
            let p = &tr.samples[i - 1];
            let d = s
                .left
                .iter()
                .zip(&p.left)
                .chain(s.right.iter().zip(&p.right))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let steps = (d / resolution).ceil().max(0.0) as usize;
            for k in 1..steps {
                let f = k as f64 / steps as f64;
                let ci = DualConfig {
                    left: lerp(&p.left, &s.left, f),
                    right: lerp(&p.right, &s.right, f),
                };
                let jaws = [0, 1].map(|j| p.jaw[j] + (s.jaw[j] - p.jaw[j]) * f);
                r.check(p.t + (s.t - p.t) * f, &ci, jaws);
            }
        }
        while next_event < tr.events.len() && tr.events[next_event].sample <= i {
            let e = &tr.events[next_event];
            next_event += 1;
            r.settle(&c);
            let tool = r.scene.tool;
            match e.kind {
                EventKind::Grasp | EventKind::HandoverExchange => match e.payload.arm {
                    Some(arm) => {
                        let rel = r.tcp(arm, &c).inverse().compose(&tool);
                        r.scene.holder = Some((arm, rel));
                    }
                    None => r.violations.push(Violation {
                        t: e.t,
                        message: format!("{} event without an arm", e.kind.name()),
                    }),
                },
                EventKind::Release => r.scene.holder = None,
                EventKind::SuctionOn => {
                    match e.payload.object.as_ref().and_then(|n| spec.objects.iter().position(|o| &o.name == n)) {
                        Some(idx) => {
                            let rel = tool.inverse().compose(&r.scene.objects[idx]);
                            r.scene.attached = Some((idx, rel));
                        }
                        None => r.violations.push(Violation {
                            t: e.t,
                            message: "suction_on names no known object".into(),
                        }),
                    }
                }
                EventKind::SuctionOff => r.scene.attached = None,
                EventKind::Place => {}
            }
        }
        r.check(s.t, &c, s.jaw);
    }
    if next_event < tr.events.len() {
        r.violations.push(Violation {
            t: tr.duration(),
            message: "events refer to samples past the end".into(),
        });
    }
    let objects = spec
        .objects
        .iter()
        .zip(&r.scene.objects)
        .map(|(o, p)| {
            let pe = p.distance_to(&o.goal);
            let oe = p.angle_to(&o.goal);
            ObjectOutcome {
                name: o.name.clone(),
                pose: *p,
                position_error: pe,
                orientation_error: oe,
                at_goal: pe <= GOAL_POSITION_TOL && oe <= GOAL_ORIENTATION_TOL,
            }
        })
        .collect();
    let (episodes, rest) = episode_strings(&tr.event_string());
    let grammar_ok = episodes.iter().all(|e| episode_grammar_ok(e)) && (rest.is_empty() || rest == [EventKind::Release]);
    ReplayReport {
        violations: r.violations,
        objects,
        episodes,
        grammar_ok,
        max_joint_speed: speed,
        states_checked: r.states,
    }
}

/// Robot, tool and object poses at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub config: DualConfig,
    pub jaws: [f64; 2],
    pub tool: RigidTransform,
    pub objects: Vec<RigidTransform>,
    pub holder: Option<Arm>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("time {t} s is outside the trajectory span [0, {end}] s")]
pub struct TimeOutOfRange {
    pub t: f64,
    pub end: f64,
}

/// State at time `t`: events at or before the last sample not later than `t`
/// are applied, and joints are interpolated toward the next sample.
pub fn snapshot(spec: &TaskSpec, tr: &Trajectory, t: f64) -> Result<Snapshot, TimeOutOfRange> {
    let end = tr.duration();
    if tr.samples.is_empty() || !(t >= 0.0 && t <= end + 1e-9) {
        return Err(TimeOutOfRange { t, end });
    }
    let i = tr.samples.iter().rposition(|s| s.t <= t).unwrap_or(0);
    let mut r = Replayer {
        spec,
        scene: Scene {
            tool: spec.tool_pose,
            holder: None,
            objects: spec.objects.iter().map(|o| o.pose).collect(),
            attached: None,
        },
        violations: Vec::new(),
        states: 0,
    };
    for e in tr.events.iter().filter(|e| e.sample <= i) {
        let s = &tr.samples[e.sample];
        let c = DualConfig {
            left: s.left,
            right: s.right,
        };
        r.settle(&c);
        let tool = r.scene.tool;
        match (e.kind, e.payload.arm) {
            (EventKind::Grasp | EventKind::HandoverExchange, Some(arm)) => {
                r.scene.holder = Some((arm, r.tcp(arm, &c).inverse().compose(&tool)));
            }
            (EventKind::Release, _) => r.scene.holder = None,
            (EventKind::SuctionOn, _) => {
                if let Some(idx) = e.payload.object.as_ref().and_then(|n| spec.objects.iter().position(|o| &o.name == n)) {
                    r.scene.attached = Some((idx, tool.inverse().compose(&r.scene.objects[idx])));
                }
            }
            (EventKind::SuctionOff, _) => r.scene.attached = None,
            _ => {}
        }
    }
    let a = &tr.samples[i];
    let (config, jaws) = match tr.samples.get(i + 1) {
        Some(b) if b.t > a.t && t > a.t => {
            let f = ((t - a.t) / (b.t - a.t)).min(1.0);
            (
                DualConfig {
                    left: lerp(&a.left, &b.left, f),
                    right: lerp(&a.right, &b.right, f),
                },
                [0, 1].map(|j| a.jaw[j] + (b.jaw[j] - a.jaw[j]) * f),
            )
        }
        _ => (
            DualConfig {
                left: a.left,
                right: a.right,
            },
            a.jaw,
        ),
    };
    Ok(Snapshot {
        t,
        tool: r.tool_pose(&config),
        objects: r.object_poses(&config),
        holder: r.scene.holder.map(|h| h.0),
        config,
        jaws,
    })
}
