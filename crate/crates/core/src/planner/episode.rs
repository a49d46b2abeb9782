use std::cell::RefCell;
use std::time::Instant;

use super::context::{tcp, Held, Load, PlanState, SceneView, Setup};
use super::{
    Episode, FailureKind, GraspRef, PhaseStats, SequenceRecord, SequenceStep, TaskFailure, TaskSpec,
    GOAL_ORIENTATION_TOL, GOAL_POSITION_TOL,
};
use crate::geom::RigidTransform;
use crate::graspdb::{GraspDatabase, HandoverPair};
use crate::motion::{plan_arm_motion, time_parameterize, ArmSpace, ConfigSpace, MotionError};
use crate::regrasp::{build_graph, Attachment, Edge, EdgeKind, GraspNode, GraspSequence, Layer, NodeId, RegraspGraph};
use crate::rng::mix;
use crate::robot::{Arm, DualConfig, Joints};
use crate::suction::{extract_facets, sample_suction_poses, upward_facets, SuctionPose};
use crate::trajectory::{EventKind, EventPayload, TrajectoryBuilder};
use crate::world::{Holders, Role, WorldBody};

/// Robot and load state while a sequence executes.
#[derive(Clone, Debug)]
struct ExecState {
    config: DualConfig,
    jaws: [f64; 2],
    tool_pose: RigidTransform,
    held: Option<Held>,
    /// The target object on the pad, in the tool frame.
    object_in_tool: Option<RigidTransform>,
}

impl ExecState {
    fn load(&self) -> Load {
        Load {
            tool: self.tool_pose,
            object: self.object_in_tool.map(|l| self.tool_pose.compose(&l)),
        }
    }
}

enum ExecFailure {
    Edge(Edge),
    Node(NodeId),
}

struct Executed {
    part: TrajectoryBuilder,
    end: ExecState,
    record: SequenceRecord,
    first: GraspRef,
    last: GraspRef,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fetch = 1,
    Complex = 2,
}

pub(crate) struct EpisodePlanner<'a> {
    spec: &'a TaskSpec,
    db: &'a GraspDatabase,
    seed: u64,
    started: Instant,
    /// Collects (label, DOT) of every graph that yielded a plan.
    pub graphs: Option<&'a RefCell<Vec<(String, String)>>>,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn record(g: &RegraspGraph, seq: &GraspSequence) -> SequenceRecord {
    SequenceRecord {
        steps: seq
            .nodes
            .iter()
            .map(|&n| {
                let node = g.node(n).expect("sequence nodes are live");
                SequenceStep {
                    layer: node.layer,
                    arm: node.arm,
                    grasp_id: node.grasp_id,
                }
            })
            .collect(),
        kinds: seq.kinds.clone(),
    }
}

impl<'a> EpisodePlanner<'a> {
    pub fn new(spec: &'a TaskSpec, db: &'a GraspDatabase, seed: u64, started: Instant) -> Self {
        Self {
            spec,
            db,
            seed,
            started,
            graphs: None,
        }
    }

    fn over_budget(&self) -> bool {
        secs(self.started) > self.spec.params.wall_clock_s
    }

    fn stream(&self, labels: &[u64]) -> u64 {
        labels.iter().fold(self.seed, |s, &l| mix(s, l))
    }

    fn stroke(&self) -> f64 {
        self.spec.robot.gripper.stroke
    }

    fn home(&self, arm: Arm) -> Joints {
        *self.spec.robot.home().arm(arm)
    }

    fn width(&self, grasp_id: usize) -> f64 {
        self.db.grasps[grasp_id].jaw_width
    }

    /// Plans one arm motion and appends it to `part`.
    fn move_arm(
        &self,
        view: &SceneView,
        part: &mut TrajectoryBuilder,
        s: &Setup,
        labels: &[u64],
    ) -> Result<(), MotionError> {
        let params = crate::motion::RrtParams {
            seed: self.stream(labels),
            ..self.spec.params.rrt.clone()
        };
        let query = view.query(s, params);
        let path = plan_arm_motion(&self.spec.robot, &query, self.spec.params.shortcut_attempts)?;
        part.push_motion(s.arm, &time_parameterize(&path, self.spec.params.max_joint_speed));
        Ok(())
    }

    fn endpoint_failure(&self, view: &SceneView, s: &Setup) -> Option<bool> {
        let q = view.query(s, Default::default());
        let space = ArmSpace::new(&self.spec.robot, &q);
        if !space.is_free(&s.start) {
            Some(true)
        } else if !space.is_free(&s.goal) {
            Some(false)
        } else {
            None
        }
    }

    /// Runs the motions of `seq` from `start`. A grasp event opens the
    /// sequence when `grasp_note` is set; a resting tool is approached first.
    fn execute(
        &self,
        view: &SceneView,
        g: &RegraspGraph,
        seq: &GraspSequence,
        start: &ExecState,
        phase: Phase,
        grasp_note: Option<&str>,
    ) -> Result<Executed, ExecFailure> {
        let mut st = start.clone();
        let mut part = TrajectoryBuilder::new(st.config.left, st.config.right, st.jaws);
        let stroke = self.stroke();
        let n0 = seq.nodes[0];
        let first = g.node(n0).expect("live node");
        let ph = phase as u64;
        if st.held.is_none() {
            let arm = first.arm;
            let s = Setup {
                arm,
                start: *st.config.arm(arm),
                goal: first.config,
                jaw: stroke,
                other: (*st.config.arm(arm.other()), st.jaws[arm.other().index()]),
                holders: Holders::none(),
                load: st.load(),
                carried: false,
            };
            self.move_arm(view, &mut part, &s, &[ph, 0, n0 as u64])
                .map_err(|_| ExecFailure::Node(n0))?;
            *st.config.arm_mut(arm) = first.config;
            st.held = Some(Held {
                arm,
                grasp_id: first.grasp_id,
                tool_in_tcp: tcp(&self.spec.robot, arm, &first.config).inverse().compose(&st.tool_pose),
            });
        }
        if let Some(note) = grasp_note {
            let h = st.held.expect("tool is held");
            st.jaws[h.arm.index()] = self.width(h.grasp_id);
            part.push_event(
                EventKind::Grasp,
                EventPayload {
                    arm: Some(h.arm),
                    grasp_id: Some(h.grasp_id),
                    object: None,
                    note: Some(note.into()),
                },
                st.jaws,
            );
        }
        for (i, (e, kind)) in seq.edges().zip(&seq.kinds).enumerate() {
            let (ui, vi) = (seq.nodes[i], seq.nodes[i + 1]);
            let (u, v) = (g.node(ui).expect("live node"), g.node(vi).expect("live node"));
            let labels = [ph, 1 + *kind as u64, ui as u64, vi as u64];
            match kind {
                EdgeKind::Transfer => {
                    let arm = u.arm;
                    let s = Setup {
                        arm,
                        start: *st.config.arm(arm),
                        goal: v.config,
                        jaw: st.jaws[arm.index()],
                        other: (*st.config.arm(arm.other()), st.jaws[arm.other().index()]),
                        holders: Holders::one(arm),
                        load: st.load(),
                        carried: true,
                    };
                    if let Some(at_start) = self.endpoint_failure(view, &s) {
                        return Err(ExecFailure::Node(if at_start { ui } else { vi }));
                    }
                    self.move_arm(view, &mut part, &s, &labels).map_err(|_| ExecFailure::Edge(e))?;
                    *st.config.arm_mut(arm) = v.config;
                    let h = st.held.expect("tool is held");
                    st.tool_pose = tcp(&self.spec.robot, arm, &v.config).compose(&h.tool_in_tcp);
                }
                EdgeKind::Handover => {
                    let (giver, receiver) = (u.arm, v.arm);
                    let width_v = self.width(v.grasp_id);
                    let reach = Setup {
                        arm: receiver,
                        start: *st.config.arm(receiver),
                        goal: v.config,
                        jaw: stroke,
                        other: (*st.config.arm(giver), st.jaws[giver.index()]),
                        holders: Holders::one(giver),
                        load: st.load(),
                        carried: false,
                    };
                    self.move_arm(view, &mut part, &reach, &labels).map_err(|_| ExecFailure::Edge(e))?;
                    *st.config.arm_mut(receiver) = v.config;
                    st.jaws[receiver.index()] = width_v;
                    st.jaws[giver.index()] = stroke;
                    st.held = Some(Held {
                        arm: receiver,
                        grasp_id: v.grasp_id,
                        tool_in_tcp: tcp(&self.spec.robot, receiver, &v.config).inverse().compose(&st.tool_pose),
                    });
                    part.push_event(
                        EventKind::HandoverExchange,
                        EventPayload {
                            arm: Some(receiver),
                            grasp_id: Some(v.grasp_id),
                            object: None,
                            note: Some(format!("from {}", giver.name())),
                        },
                        st.jaws,
                    );
                    let retreat = Setup {
                        arm: giver,
                        start: *st.config.arm(giver),
                        goal: self.home(giver),
                        jaw: stroke,
                        other: (v.config, width_v),
                        holders: Holders::one(receiver),
                        load: st.load(),
                        carried: false,
                    };
                    let mut retreat_labels = labels;
                    retreat_labels[1] = 9;
                    self.move_arm(view, &mut part, &retreat, &retreat_labels)
                        .map_err(|_| ExecFailure::Edge(e))?;
                    *st.config.arm_mut(giver) = self.home(giver);
                }
            }
        }
        let last = g.node(*seq.nodes.last().unwrap()).expect("live node");
        Ok(Executed {
            part,
            end: st,
            record: record(g, seq),
            first: GraspRef {
                arm: first.arm,
                grasp_id: first.grasp_id,
            },
            last: GraspRef {
                arm: last.arm,
                grasp_id: last.grasp_id,
            },
        })
    }

    /// Search, execute, delete failing edges, repeat. Terminates because
    /// every failed execution removes at least one live edge.
    fn search_and_execute(
        &self,
        view: &SceneView,
        g: &mut RegraspGraph,
        start: &ExecState,
        phase: Phase,
        grasp_note: Option<&str>,
        label: &str,
        stats: &mut PhaseStats,
    ) -> Result<Executed, FailureKind> {
        let bound = g.edge_count() + 1;
        for _ in 0..bound {
            if self.over_budget() {
                return Err(FailureKind::BudgetExhausted);
            }
            let t = Instant::now();
            let seq = g.search_sequence();
            stats.searches += 1;
            match phase {
                Phase::Fetch => stats.regrasp_1 += secs(t),
                Phase::Complex => stats.regrasp_2 += secs(t),
            }
            let seq = seq.map_err(|_| FailureKind::NoSequence)?;
            let t = Instant::now();
            let out = self.execute(view, g, &seq, start, phase, grasp_note);
            match phase {
                Phase::Fetch => stats.motion_1 += secs(t),
                Phase::Complex => stats.motion_2 += secs(t),
            }
            match out {
                Ok(x) => {
                    if let Some(sink) = self.graphs {
                        sink.borrow_mut().push((label.to_owned(), g.to_dot()));
                    }
                    return Ok(x);
                }
                Err(ExecFailure::Edge(e)) => {
                    log::debug!("motion failed on edge {e:?}; deleting it");
                    g.delete_edge(e).expect("sequence edges are live");
                    stats.edges_deleted += 1;
                }
                Err(ExecFailure::Node(n)) => {
                    log::debug!("node {n} is unusable; deleting its edges");
                    for e in g.incident_live_edges(n) {
                        g.delete_edge(e).expect("incident edges are live");
                        stats.edges_deleted += 1;
                    }
                }
            }
        }
        unreachable!("search/delete loop exceeded the live-edge bound")
    }

    fn suction_candidates(&self, idx: usize, pose: &RigidTransform) -> Result<Vec<SuctionPose>, FailureKind> {
        let shape = &self.spec.objects[idx].shape;
        let facets = extract_facets(shape).map_err(|_| FailureKind::NoSuctionPose)?;
        let facets = if self.spec.params.all_facets {
            facets
        } else {
            upward_facets(&facets, pose)
        };
        let mut poses = sample_suction_poses(&facets, &self.spec.suction).map_err(|_| FailureKind::NoSuctionPose)?;
        poses.truncate(self.spec.params.max_suction_poses);
        Ok(poses)
    }

    fn pairs(&self, keep: Vec<usize>) -> Vec<HandoverPair> {
        keep.into_iter().map(|i| self.db.handover_pairs[i].clone()).collect()
    }

    /// Fetches the tool to a suction pose on object `idx`, then carries the
    /// complex to the goal, backtracking over suction poses.
    pub fn plan_object(
        &self,
        state: &PlanState,
        idx: usize,
    ) -> Result<(Episode, TrajectoryBuilder, PlanState), TaskFailure> {
        let spec = self.spec;
        let object = &spec.objects[idx];
        let current = state.objects[idx].pose;
        let fail = |kind, attempts: Vec<FailureKind>| TaskFailure {
            object: object.name.clone(),
            kind,
            attempts,
        };
        let mut stats = PhaseStats::default();
        let view = SceneView::new(spec, &state.objects, idx);
        let grasps = &self.db.grasps;

        let t = Instant::now();
        let suctions = self.suction_candidates(idx, &current).map_err(|k| fail(k, vec![]))?;
        stats.suction += secs(t);

        let t = Instant::now();
        let initial: Vec<GraspNode> = match state.held {
            Some(h) => vec![GraspNode {
                layer: Layer::Initial,
                arm: h.arm,
                grasp_id: h.grasp_id,
                held_pose: state.tool_pose,
                config: *state.config.arm(h.arm),
                attachment: Attachment::ToolOnly,
                pair: None,
            }],
            None => view.layer_nodes(
                Layer::Initial,
                grasps,
                Load {
                    tool: state.tool_pose,
                    object: None,
                },
                &Attachment::ToolOnly,
                true,
                &state.config,
                self.stream(&[10]),
            ),
        };
        let mut fetch_obstacles: Vec<WorldBody> =
            view.statics.iter().filter(|b| b.role != Role::Torso).cloned().collect();
        fetch_obstacles.push(view.target.clone());
        let pairs1 = self.pairs(super::filter_handover_for_attachment(
            &spec.robot,
            &spec.tool,
            grasps,
            &self.db.handover_pairs,
            None,
            &fetch_obstacles,
        ));
        stats.regrasp_1 += secs(t);
        if initial.is_empty() {
            return Err(fail(FailureKind::NoGraspAtStart, vec![]));
        }

        let start = ExecState {
            config: state.config,
            jaws: state.jaws,
            tool_pose: state.tool_pose,
            held: state.held,
            object_in_tool: None,
        };
        let note = if state.held.is_some() { "retained" } else { "picked" };
        let complex = Attachment::ToolPlusObject(object.name.clone());
        let mut attempts = Vec::new();
        for (k, sp) in suctions.iter().enumerate() {
            if self.over_budget() {
                attempts.push(FailureKind::BudgetExhausted);
                return Err(fail(FailureKind::BudgetExhausted, attempts));
            }
            stats.suction_poses_tried += 1;
            let kk = k as u64;
            let tool1 = spec.tool.pose_from_pad(&current.compose(&sp.relative));
            let tool2 = spec.tool.pose_from_pad(&object.goal.compose(&sp.relative));

            let t = Instant::now();
            let goal1 = view.layer_nodes(
                Layer::Goal,
                grasps,
                Load {
                    tool: tool1,
                    object: None,
                },
                &Attachment::ToolOnly,
                false,
                &state.config,
                self.stream(&[11, kk]),
            );
            stats.regrasp_1 += secs(t);
            if goal1.is_empty() {
                attempts.push(FailureKind::NoGraspAtSuction);
                continue;
            }
            let t = Instant::now();
            let goal2 = view.layer_nodes(
                Layer::Goal,
                grasps,
                Load {
                    tool: tool2,
                    object: Some(object.goal),
                },
                &complex,
                false,
                &state.config,
                self.stream(&[12, kk]),
            );
            if goal2.is_empty() {
                stats.regrasp_2 += secs(t);
                attempts.push(FailureKind::NoGraspAtGoal);
                continue;
            }
            let object_in_tool = tool1.inverse().compose(&current);
            let pairs2 = self.pairs(super::filter_handover_for_attachment(
                &spec.robot,
                &spec.tool,
                grasps,
                &self.db.handover_pairs,
                Some((&object.shape, &object_in_tool)),
                &view.statics,
            ));
            stats.regrasp_2 += secs(t);

            let mut g1 = build_graph(&pairs1, initial.clone(), goal1, &Attachment::ToolOnly)
                .expect("layers are non-empty");
            let outcome = loop {
                let fetched = match self.search_and_execute(
                    &view,
                    &mut g1,
                    &start,
                    Phase::Fetch,
                    Some(note),
                    &format!("{}_fetch_{k}", object.name),
                    &mut stats,
                ) {
                    Ok(f) => f,
                    Err(kind) => break Err(kind),
                };
                match self.complex_move(&view, &fetched, &pairs2, goal2.clone(), &complex, object, &mut stats) {
                    Ok(c) => break Ok((fetched, c)),
                    Err(FailureKind::BudgetExhausted) => break Err(FailureKind::BudgetExhausted),
                    Err(kind) => {
                        // The fetch's final grasp cannot reach the goal: drop it and refetch.
                        let h = fetched.end.held.expect("tool is held");
                        let rest: Vec<GraspNode> = g1
                            .layer_ids(Layer::Goal)
                            .into_iter()
                            .map(|n| g1.node(n).unwrap().clone())
                            .filter(|n| !(n.arm == h.arm && n.grasp_id == h.grasp_id))
                            .collect();
                        if rest.is_empty() {
                            break Err(kind);
                        }
                        g1.replace_goal_layer(rest).expect("non-empty layer");
                    }
                }
            };
            match outcome {
                Ok((fetched, moved)) => {
                    return Ok(self.finish(state, idx, sp.clone(), fetched, moved, stats));
                }
                Err(FailureKind::BudgetExhausted) => {
                    attempts.push(FailureKind::BudgetExhausted);
                    return Err(fail(FailureKind::BudgetExhausted, attempts));
                }
                Err(kind) => attempts.push(kind),
            }
        }
        let kind = attempts
            .last()
            .copied()
            .unwrap_or(FailureKind::NoSuctionPose);
        Err(fail(kind, attempts))
    }

    #[allow(clippy::too_many_arguments)]
    fn complex_move(
        &self,
        view: &SceneView,
        fetched: &Executed,
        pairs: &[HandoverPair],
        goal: Vec<GraspNode>,
        attachment: &Attachment,
        object: &super::TaskObject,
        stats: &mut PhaseStats,
    ) -> Result<Executed, FailureKind> {
        let end = &fetched.end;
        let h = end.held.expect("tool is held");
        let object_pose = view.target.pose;
        let start = ExecState {
            object_in_tool: Some(end.tool_pose.inverse().compose(&object_pose)),
            ..end.clone()
        };
        let init = GraspNode {
            layer: Layer::Initial,
            arm: h.arm,
            grasp_id: h.grasp_id,
            held_pose: end.tool_pose,
            config: *end.config.arm(h.arm),
            attachment: attachment.clone(),
            pair: None,
        };
        let mut g = build_graph(pairs, vec![init], goal, attachment).expect("layers are non-empty");
        let out = self.search_and_execute(
            view,
            &mut g,
            &start,
            Phase::Complex,
            None,
            &format!("{}_complex", object.name),
            stats,
        )?;
        let placed = out.end.load().object.expect("object attached");
        if !placed.approx_eq(&object.goal, GOAL_POSITION_TOL, GOAL_ORIENTATION_TOL) {
            log::warn!(
                "{} ends {:.2e} m / {:.2e} rad from its goal",
                object.name,
                placed.distance_to(&object.goal),
                placed.angle_to(&object.goal)
            );
        }
        Ok(out)
    }

    fn finish(
        &self,
        state: &PlanState,
        idx: usize,
        suction: SuctionPose,
        fetched: Executed,
        moved: Executed,
        stats: PhaseStats,
    ) -> (Episode, TrajectoryBuilder, PlanState) {
        let name = self.spec.objects[idx].name.clone();
        let obj_payload = || EventPayload {
            object: Some(name.clone()),
            ..Default::default()
        };
        let mut part = fetched.part;
        part.push_event(EventKind::SuctionOn, obj_payload(), fetched.end.jaws);
        part.append(&moved.part);
        let end = moved.end;
        part.push_event(EventKind::Place, obj_payload(), end.jaws);
        part.push_event(EventKind::SuctionOff, obj_payload(), end.jaws);
        let final_object_pose = end.load().object.expect("object attached");
        let mut next = state.clone();
        next.config = end.config;
        next.jaws = end.jaws;
        next.tool_pose = end.tool_pose;
        next.held = end.held;
        next.objects[idx].pose = final_object_pose;
        next.objects[idx].placed = true;
        let episode = Episode {
            object: name,
            suction,
            tool_sequence: fetched.record,
            complex_sequence: moved.record,
            initial_grasp: fetched.first,
            final_grasp: moved.last,
            final_tool_pose: end.tool_pose,
            final_object_pose,
            stats,
            events: 0..0,
        };
        (episode, part, next)
    }

    /// Carries the tool back to its start pose with the holding arm, releases
    /// it and parks the arm.
    pub fn stow(&self, state: &PlanState) -> Result<TrajectoryBuilder, TaskFailure> {
        let fail = |kind| TaskFailure {
            object: self.spec.tool.name.clone(),
            kind,
            attempts: vec![],
        };
        let Some(h) = state.held else {
            return Ok(state.builder());
        };
        let objects = &state.objects;
        let mut view_objects = objects.clone();
        // The view needs a target; an object far away and unused stands in.
        view_objects.push(super::ObjectState {
            name: "none".into(),
            shape: crate::geom::Shape::cuboid(1e-3, 1e-3, 1e-3),
            pose: RigidTransform::from_translation(100.0, 0.0, 0.0),
            placed: false,
        });
        let view = SceneView::new(self.spec, &view_objects, view_objects.len() - 1);
        let goal_tool = self.spec.tool_pose;
        let grasp = &self.db.grasps[h.grasp_id];
        let nodes = view.layer_nodes(
            Layer::Goal,
            std::slice::from_ref(grasp),
            Load {
                tool: goal_tool,
                object: None,
            },
            &Attachment::ToolOnly,
            true,
            &state.config,
            self.stream(&[20]),
        );
        let Some(node) = nodes.into_iter().find(|n| n.arm == h.arm) else {
            return Err(fail(FailureKind::NoGraspAtGoal));
        };
        let mut part = state.builder();
        let stroke = self.stroke();
        let carry = Setup {
            arm: h.arm,
            start: *state.config.arm(h.arm),
            goal: node.config,
            jaw: state.jaws[h.arm.index()],
            other: (*state.config.arm(h.arm.other()), state.jaws[h.arm.other().index()]),
            holders: Holders::one(h.arm),
            load: Load {
                tool: state.tool_pose,
                object: None,
            },
            carried: true,
        };
        self.move_arm(&view, &mut part, &carry, &[3, 0])
            .map_err(|_| fail(FailureKind::NoMotion))?;
        let tool_pose = tcp(&self.spec.robot, h.arm, &node.config).compose(&h.tool_in_tcp);
        let mut jaws = state.jaws;
        jaws[h.arm.index()] = stroke;
        part.push_event(
            EventKind::Release,
            EventPayload {
                arm: Some(h.arm),
                grasp_id: Some(h.grasp_id),
                object: None,
                note: Some("stow".into()),
            },
            jaws,
        );
        let retreat = Setup {
            arm: h.arm,
            start: node.config,
            goal: self.home(h.arm),
            jaw: stroke,
            other: carry.other,
            holders: Holders::none(),
            load: Load {
                tool: tool_pose,
                object: None,
            },
            carried: false,
        };
        self.move_arm(&view, &mut part, &retreat, &[3, 1])
            .map_err(|_| fail(FailureKind::NoMotion))?;
        Ok(part)
    }
}
