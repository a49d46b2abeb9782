//! Role-aware collision world shared by grasp generation, motion planning
//! and plan validation.
//!
//! Pair rules:
//! * robot bodies are checked against everything with the safety margin,
//!   except permanently touching robot pairs (consecutive links, fingers
//!   with the hand, torso with the pedestals);
//! * fingers of an arm that holds the tool are not checked against the tool;
//! * workpieces (tool, objects, table) may rest on each other: they collide
//!   only on interpenetration beyond the contact tolerance.

use crate::geom::{shapes_penetrate, shapes_within, Body, RigidTransform, Shape, COLLISION_MARGIN};
use crate::robot::{
    finger_bodies_from_tcp, finger_name, frames_unchecked, link_bodies_from_frames, link_name, torso_name, Arm,
    DualArmModel, DualConfig, FingerSide, Joints, DOF,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Torso,
    Link { arm: Arm, index: usize, frame: usize },
    Finger { arm: Arm },
    Tool,
    Object,
    Table,
}

impl Role {
    pub fn is_workpiece(self) -> bool {
        matches!(self, Role::Tool | Role::Object | Role::Table)
    }

    pub fn arm(self) -> Option<Arm> {
        match self {
            Role::Link { arm, .. } | Role::Finger { arm } => Some(arm),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    Skip,
    Margin,
    Contact,
}

/// Which arms currently close their fingers on the tool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Holders {
    pub left: bool,
    pub right: bool,
}

impl Holders {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn one(arm: Arm) -> Self {
        let mut h = Self::default();
        h.set(arm, true);
        h
    }

    pub fn both() -> Self {
        Self { left: true, right: true }
    }

    pub fn holds(&self, arm: Arm) -> bool {
        match arm {
            Arm::Left => self.left,
            Arm::Right => self.right,
        }
    }

    pub fn set(&mut self, arm: Arm, v: bool) {
        match arm {
            Arm::Left => self.left = v,
            Arm::Right => self.right = v,
        }
    }
}

pub fn pair_mode(a: Role, b: Role, holders: Holders) -> PairMode {
    use Role::*;
    match (a, b) {
        (Tool, Tool) => PairMode::Skip,
        (x, y) if x.is_workpiece() && y.is_workpiece() => PairMode::Contact,
        (Link { arm: a1, index: i, .. }, Link { arm: a2, index: j, .. }) if a1 == a2 && i.abs_diff(j) == 1 => {
            PairMode::Skip
        }
        (Finger { arm: a1 }, Finger { arm: a2 }) if a1 == a2 => PairMode::Skip,
        (Finger { arm: a1 }, Link { arm: a2, frame, .. }) | (Link { arm: a2, frame, .. }, Finger { arm: a1 })
            if a1 == a2 && frame == DOF =>
        {
            PairMode::Skip
        }
        (Torso, Link { frame: 0, .. }) | (Link { frame: 0, .. }, Torso) => PairMode::Skip,
        (Finger { arm }, Tool) | (Tool, Finger { arm }) if holders.holds(arm) => PairMode::Skip,
        _ => PairMode::Margin,
    }
}

pub fn pair_collides(mode: PairMode, a: &WorldBody, b: &WorldBody) -> bool {
    match mode {
        PairMode::Skip => false,
        PairMode::Margin => shapes_within(&a.shape, &a.pose, &b.shape, &b.pose, COLLISION_MARGIN),
        PairMode::Contact => shapes_penetrate(&a.shape, &a.pose, &b.shape, &b.pose),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldBody {
    pub name: String,
    pub shape: Shape,
    pub pose: RigidTransform,
    pub role: Role,
}

impl WorldBody {
    pub fn to_body(&self) -> Body {
        Body::new(self.name.clone(), self.shape, self.pose)
    }
}

#[derive(Clone, Debug, Default)]
pub struct World {
    pub bodies: Vec<WorldBody>,
    pub holders: Holders,
}

/// Bodies of one arm as `(name, shape, pose, role)`.
pub fn arm_world_bodies(model: &DualArmModel, arm: Arm, q: &Joints, jaw_width: f64) -> Vec<WorldBody> {
    let am = model.arm(arm);
    let frames = frames_unchecked(am, q);
    let mut out: Vec<WorldBody> = link_bodies_from_frames(am, &frames)
        .enumerate()
        .map(|(index, (name, shape, pose))| WorldBody {
            name: link_name(arm, name),
            shape,
            pose,
            role: Role::Link {
                arm,
                index,
                frame: am.links[index].frame,
            },
        })
        .collect();
    for (side, shape, pose) in finger_bodies_from_tcp(&model.gripper, &frames.tcp, jaw_width) {
        out.push(WorldBody {
            name: finger_name(arm, side),
            shape,
            pose,
            role: Role::Finger { arm },
        });
    }
    out
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Shape, pose: RigidTransform, role: Role) {
        self.bodies.push(WorldBody {
            name: name.into(),
            shape,
            pose,
            role,
        });
    }

    pub fn add_torso(&mut self, model: &DualArmModel) {
        for t in &model.torso {
            self.push(torso_name(&t.name), t.shape, t.local, Role::Torso);
        }
    }

    pub fn add_arm(&mut self, model: &DualArmModel, arm: Arm, q: &Joints, jaw_width: f64) {
        self.bodies.extend(arm_world_bodies(model, arm, q, jaw_width));
    }

    pub fn add_robot(&mut self, model: &DualArmModel, c: &DualConfig, jaws: [f64; 2]) {
        self.add_torso(model);
        self.add_arm(model, Arm::Left, &c.left, jaws[0]);
        self.add_arm(model, Arm::Right, &c.right, jaws[1]);
    }

    pub fn add_bodies(&mut self, bodies: impl IntoIterator<Item = Body>, role: Role) {
        for b in bodies {
            self.push(b.name, b.shape, b.pose, role);
        }
    }

    /// First colliding pair, by name.
    pub fn first_collision(&self) -> Option<(&str, &str)> {
        let n = self.bodies.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&self.bodies[i], &self.bodies[j]);
                if pair_collides(pair_mode(a.role, b.role, self.holders), a, b) {
                    return Some((a.name.as_str(), b.name.as_str()));
                }
            }
        }
        None
    }

    pub fn collides(&self) -> bool {
        self.first_collision().is_some()
    }
}

/// Finger names of an arm, for diagnostics.
pub fn finger_names(arm: Arm) -> [String; 2] {
    [finger_name(arm, FingerSide::A), finger_name(arm, FingerSide::B)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::default_dual_arm;

    #[test]
    fn home_robot_is_free_and_crossed_arms_collide() {
        let m = default_dual_arm();
        let mut w = World::new();
        w.add_robot(&m, &m.home(), [m.gripper.stroke; 2]);
        assert_eq!(w.first_collision(), None);

        // Both arms reaching straight at the midline collide with each other.
        let mut crossed = m.home();
        crossed.left = [-1.2, 1.2, 0.4, 0.0, 0.0, 0.0];
        crossed.right = [1.2, 1.2, 0.4, 0.0, 0.0, 0.0];
        let mut w = World::new();
        w.add_robot(&m, &crossed, [m.gripper.stroke; 2]);
        let (a, b) = w.first_collision().expect("crossed arms collide");
        assert_ne!(a.split('/').next(), b.split('/').next());
    }

    #[test]
    fn pair_rules() {
        let l = |index, frame| Role::Link { arm: Arm::Left, index, frame };
        let none = Holders::none();
        assert_eq!(pair_mode(l(1, 1), l(2, 2), none), PairMode::Skip);
        assert_eq!(pair_mode(l(1, 1), l(3, 3), none), PairMode::Margin);
        assert_eq!(pair_mode(Role::Finger { arm: Arm::Left }, l(6, 6), none), PairMode::Skip);
        assert_eq!(pair_mode(Role::Finger { arm: Arm::Left }, Role::Tool, none), PairMode::Margin);
        assert_eq!(
            pair_mode(Role::Finger { arm: Arm::Left }, Role::Tool, Holders::one(Arm::Left)),
            PairMode::Skip
        );
        assert_eq!(
            pair_mode(Role::Finger { arm: Arm::Right }, Role::Tool, Holders::one(Arm::Left)),
            PairMode::Margin
        );
        assert_eq!(pair_mode(Role::Object, Role::Table, none), PairMode::Contact);
        assert_eq!(pair_mode(Role::Tool, Role::Tool, none), PairMode::Skip);
        assert_eq!(pair_mode(Role::Torso, l(0, 0), none), PairMode::Skip);
    }
}
