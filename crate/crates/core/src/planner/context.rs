use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TaskSpec;
use crate::geom::{RigidTransform, Shape};
use crate::graspdb::{hand_bodies, Grasp, HandoverPair, ToolModel};
use crate::motion::{ArmSpace, Attached, ConfigSpace, MotionQuery, RrtParams};
use crate::regrasp::{Attachment, GraspNode, Layer};
use crate::rng::substream;
use crate::robot::{frames_unchecked, solve_ik, torso_bodies, Arm, DualArmModel, DualConfig, IkOptions, Joints};
use crate::trajectory::TrajectoryBuilder;
use crate::world::{pair_collides, pair_mode, Holders, Role, WorldBody};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub name: String,
    pub shape: Shape,
    pub pose: RigidTransform,
    pub placed: bool,
}

/// The arm holding the tool and the tool pose in its TCP frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Held {
    pub arm: Arm,
    pub grasp_id: usize,
    pub tool_in_tcp: RigidTransform,
}

/// World state between episodes. The arm not holding the tool rests at home
/// with open jaws.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanState {
    pub config: DualConfig,
    pub jaws: [f64; 2],
    pub tool_pose: RigidTransform,
    pub held: Option<Held>,
    pub objects: Vec<ObjectState>,
}

impl PlanState {
    pub fn initial(spec: &TaskSpec) -> Self {
        Self {
            config: spec.robot.home(),
            jaws: [spec.robot.gripper.stroke; 2],
            tool_pose: spec.tool_pose,
            held: None,
            objects: spec
                .objects
                .iter()
                .map(|o| ObjectState {
                    name: o.name.clone(),
                    shape: o.shape,
                    pose: o.pose,
                    placed: false,
                })
                .collect(),
        }
    }

    pub fn builder(&self) -> TrajectoryBuilder {
        TrajectoryBuilder::new(self.config.left, self.config.right, self.jaws)
    }
}

pub(crate) fn tcp(model: &DualArmModel, arm: Arm, q: &Joints) -> RigidTransform {
    frames_unchecked(model.arm(arm), q).tcp
}

fn torso_world(model: &DualArmModel) -> impl Iterator<Item = WorldBody> {
    torso_bodies(model).into_iter().map(|b| WorldBody {
        name: b.name,
        shape: b.shape,
        pose: b.pose,
        role: Role::Torso,
    })
}

/// Where the tool is, and the target object's pose when it hangs on the pad.
/// With `object` unset the target stands at its scene pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Load {
    pub tool: RigidTransform,
    pub object: Option<RigidTransform>,
}

/// One arm moving with everything else frozen.
#[derive(Clone, Debug)]
pub(crate) struct Setup {
    pub arm: Arm,
    pub start: Joints,
    pub goal: Joints,
    pub jaw: f64,
    pub other: (Joints, f64),
    pub holders: Holders,
    pub load: Load,
    /// The moving arm carries the load; otherwise it stays put.
    pub carried: bool,
}

/// The scene around one object's episode.
pub(crate) struct SceneView<'a> {
    pub spec: &'a TaskSpec,
    /// Torso, table and every object except the target.
    pub statics: Vec<WorldBody>,
    pub target: WorldBody,
}

impl<'a> SceneView<'a> {
    pub fn new(spec: &'a TaskSpec, objects: &[ObjectState], target: usize) -> Self {
        let mut statics: Vec<WorldBody> = torso_world(&spec.robot).collect();
        statics.push(WorldBody {
            name: spec.table.name.clone(),
            shape: spec.table.shape,
            pose: spec.table.pose,
            role: Role::Table,
        });
        for (i, o) in objects.iter().enumerate() {
            if i != target {
                statics.push(object_body(o, o.pose));
            }
        }
        Self {
            spec,
            statics,
            target: object_body(&objects[target], objects[target].pose),
        }
    }

    pub fn model(&self) -> &DualArmModel {
        &self.spec.robot
    }

    fn load_bodies(&self, load: &Load) -> (Vec<WorldBody>, Option<WorldBody>) {
        let tool = self
            .spec
            .tool
            .bodies(&load.tool)
            .into_iter()
            .map(|b| WorldBody {
                name: b.name,
                shape: b.shape,
                pose: b.pose,
                role: Role::Tool,
            })
            .collect();
        let object = load.object.map(|p| WorldBody { pose: p, ..self.target.clone() });
        (tool, object)
    }

    pub fn query(&self, s: &Setup, params: RrtParams) -> MotionQuery {
        let model = self.model();
        let mut obstacles = self.statics.clone();
        obstacles.extend(crate::world::arm_world_bodies(model, s.arm.other(), &s.other.0, s.other.1));
        let (tool, object) = self.load_bodies(&s.load);
        if object.is_none() {
            obstacles.push(self.target.clone());
        }
        let mut attached = Vec::new();
        if s.carried {
            let at = tcp(model, s.arm, &s.start);
            attached = Attached::from_bodies(&at, tool.iter().map(WorldBody::to_body), Role::Tool);
            if let Some(o) = object {
                attached.extend(Attached::from_bodies(&at, [o.to_body()], Role::Object));
            }
        } else {
            obstacles.extend(tool);
            obstacles.extend(object);
        }
        MotionQuery {
            arm: s.arm,
            start: s.start,
            goal: s.goal,
            jaw_width: s.jaw,
            attached,
            obstacles,
            holders: s.holders,
            params,
        }
    }

    /// Validity of `s.start` alone.
    pub fn free(&self, s: &Setup) -> bool {
        let q = self.query(s, RrtParams::default());
        ArmSpace::new(self.model(), &q).is_free(&s.start)
    }

    /// Grasp nodes holding the load, one IK solve per (arm, grasp). With
    /// `approach`, the open hand must also reach the grasp around the resting tool.
    #[allow(clippy::too_many_arguments)]
    pub fn layer_nodes(
        &self,
        layer: Layer,
        grasps: &[Grasp],
        load: Load,
        attachment: &Attachment,
        approach: bool,
        seeds: &DualConfig,
        seed: u64,
    ) -> Vec<GraspNode> {
        let model = self.model();
        let stroke = model.gripper.stroke;
        let home = model.home();
        let restarts = self.spec.params.ik_restarts;
        let jobs: Vec<(Arm, &Grasp)> = [Arm::Left, Arm::Right]
            .into_iter()
            .flat_map(|a| grasps.iter().map(move |g| (a, g)))
            .collect();
        jobs.par_iter()
            .map(|&(arm, g)| {
                let am = model.arm(arm);
                let target = load.tool.compose(&g.hand_pose);
                let mut init = vec![*seeds.arm(arm)];
                if home.arm(arm) != seeds.arm(arm) {
                    init.push(*home.arm(arm));
                }
                let mut rng = substream(seed, (g.id as u64) << 1 | arm.index() as u64);
                let q = solve_ik(am, &target, &init, &mut rng, restarts, &IkOptions::default()).ok()?;
                let hold = Setup {
                    arm,
                    start: q,
                    goal: q,
                    jaw: g.jaw_width,
                    other: (*home.arm(arm.other()), stroke),
                    holders: Holders::one(arm),
                    load,
                    carried: true,
                };
                if !self.free(&hold) {
                    return None;
                }
                if approach {
                    let open = Setup {
                        jaw: stroke,
                        holders: Holders::none(),
                        carried: false,
                        ..hold
                    };
                    if !self.free(&open) {
                        return None;
                    }
                }
                Some(GraspNode {
                    layer,
                    arm,
                    grasp_id: g.id,
                    held_pose: load.tool,
                    config: q,
                    attachment: attachment.clone(),
                    pair: None,
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
}

fn object_body(o: &ObjectState, pose: RigidTransform) -> WorldBody {
    WorldBody {
        name: o.name.clone(),
        shape: o.shape,
        pose,
        role: Role::Object,
    }
}

/// Indices of the pairs that stay collision-free against `obstacles`, and,
/// when `object` (shape, pose in the tool frame) hangs on the pad, whose
/// arms also clear the object with jaws closed or open.
pub fn filter_handover_for_attachment(
    model: &DualArmModel,
    tool: &ToolModel,
    grasps: &[Grasp],
    pairs: &[HandoverPair],
    object: Option<(&Shape, &RigidTransform)>,
    obstacles: &[WorldBody],
) -> Vec<usize> {
    let keep: Vec<bool> = pairs
        .par_iter()
        .map(|p| {
            let mut moving = Vec::new();
            for side in [&p.giver, &p.receiver] {
                let Some(g) = grasps.get(side.grasp_id) else {
                    return false;
                };
                moving.extend(hand_bodies(model, side.arm, &side.config, g.jaw_width));
            }
            let arms = moving.len();
            moving.extend(tool.bodies(&p.tool_pose).into_iter().map(|b| WorldBody {
                name: b.name,
                shape: b.shape,
                pose: b.pose,
                role: Role::Tool,
            }));
            if let Some((shape, local)) = object {
                let ob = WorldBody {
                    name: "object".into(),
                    shape: *shape,
                    pose: p.tool_pose.compose(local),
                    role: Role::Object,
                };
                let h = Holders::both();
                if moving[..arms].iter().any(|a| pair_collides(pair_mode(a.role, ob.role, h), a, &ob)) {
                    return false;
                }
                moving.push(ob);
            }
            !moving.iter().any(|a| {
                obstacles
                    .iter()
                    .any(|b| pair_collides(pair_mode(a.role, b.role, Holders::both()), a, b))
            })
        })
        .collect();
    keep.iter().enumerate().filter_map(|(i, k)| k.then_some(i)).collect()
}
