//! Three-layer regrasp graph: grasps of the held tool at its start pose, at
//! handover poses, and at its goal pose. Edges are motions the robot may try;
//! motion failures delete them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::RigidTransform;
use crate::graspdb::HandoverPair;
use crate::robot::{Arm, Joints};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Initial,
    Handover,
    Goal,
}

/// What the gripper carries besides the tool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attachment {
    ToolOnly,
    ToolPlusObject(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraspNode {
    pub layer: Layer,
    pub arm: Arm,
    pub grasp_id: usize,
    /// World pose of the tool while this grasp holds it.
    pub held_pose: RigidTransform,
    /// IK witness.
    pub config: Joints,
    pub attachment: Attachment,
    /// Index of the handover pair for handover-layer nodes.
    pub pair: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Same arm and grasp, tool carried between two poses.
    Transfer,
    /// The tool passes between the two grasps of one handover pair.
    Handover,
}

/// Undirected edge, stored with the smaller node id first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(pub NodeId, pub NodeId);

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn other(&self, n: NodeId) -> NodeId {
        if self.0 == n {
            self.1
        } else {
            self.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct EdgeData {
    kind: EdgeKind,
    /// Handover score, 0 for transfers.
    score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegraspError {
    #[error("empty {0:?} layer")]
    EmptyLayer(Layer),
    #[error("no grasp sequence reaches the goal layer")]
    NoSequence,
    #[error("edge ({0}, {1}) is not a live edge")]
    UnknownEdge(NodeId, NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraspSequence {
    pub nodes: Vec<NodeId>,
    /// `kinds[i]` joins `nodes[i]` and `nodes[i + 1]`.
    pub kinds: Vec<EdgeKind>,
}

impl GraspSequence {
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes.windows(2).map(|w| Edge::new(w[0], w[1]))
    }

    pub fn handover_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == EdgeKind::Handover).count()
    }
}

#[derive(Clone, Debug, Default)]
pub struct RegraspGraph {
    nodes: Vec<Option<GraspNode>>,
    edges: BTreeMap<Edge, EdgeData>,
    deleted: BTreeMap<Edge, EdgeData>,
    pair_scores: Vec<f64>,
}

/// Both grasp nodes of every handover pair, in pair order.
pub fn handover_nodes(pairs: &[HandoverPair], attachment: &Attachment) -> Vec<GraspNode> {
    pairs
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            [&p.giver, &p.receiver].map(|s| GraspNode {
                layer: Layer::Handover,
                arm: s.arm,
                grasp_id: s.grasp_id,
                held_pose: p.tool_pose,
                config: s.config,
                attachment: attachment.clone(),
                pair: Some(i),
            })
        })
        .collect()
}

/// Builds the graph from pre-validated layers. `pairs` supplies the handover
/// scores; the handover layer is derived from it.
pub fn build_graph(
    pairs: &[HandoverPair],
    initial: Vec<GraspNode>,
    goal: Vec<GraspNode>,
    attachment: &Attachment,
) -> Result<RegraspGraph, RegraspError> {
    if initial.is_empty() {
        return Err(RegraspError::EmptyLayer(Layer::Initial));
    }
    if goal.is_empty() {
        return Err(RegraspError::EmptyLayer(Layer::Goal));
    }
    let mut g = RegraspGraph {
        pair_scores: pairs.iter().map(|p| p.score).collect(),
        ..Default::default()
    };
    for n in initial {
        g.add_node(Layer::Initial, n);
    }
    for n in handover_nodes(pairs, attachment) {
        g.add_node(Layer::Handover, n);
    }
    for n in goal {
        g.add_node(Layer::Goal, n);
    }
    Ok(g)
}

impl RegraspGraph {
    fn add_node(&mut self, layer: Layer, mut node: GraspNode) -> NodeId {
        node.layer = layer;
        if layer != Layer::Handover {
            node.pair = None;
        }
        let id = self.nodes.len();
        for (other_id, other) in self.nodes.iter().enumerate() {
            let Some(other) = other else { continue };
            if let Some(data) = self.connection(other, &node) {
                self.edges.insert(Edge::new(other_id, id), data);
            }
        }
        self.nodes.push(Some(node));
        id
    }

    fn connection(&self, a: &GraspNode, b: &GraspNode) -> Option<EdgeData> {
        match (a.pair, b.pair) {
            (Some(pa), Some(pb)) if pa == pb => {
                return (a.arm != b.arm).then(|| EdgeData {
                    kind: EdgeKind::Handover,
                    score: self.pair_scores[pa],
                });
            }
            _ => {}
        }
        let distinct_place = a.layer != b.layer || (a.layer == Layer::Handover && a.pair != b.pair);
        (a.arm == b.arm && a.grasp_id == b.grasp_id && distinct_place).then_some(EdgeData {
            kind: EdgeKind::Transfer,
            score: 0.0,
        })
    }

    pub fn node(&self, id: NodeId) -> Option<&GraspNode> {
        self.nodes.get(id).and_then(|n| n.as_ref())
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| n.as_ref().map(|_| i))
    }

    pub fn layer_ids(&self, layer: Layer) -> Vec<NodeId> {
        self.node_ids().filter(|&i| self.nodes[i].as_ref().unwrap().layer == layer).collect()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids().count()
    }

    pub fn live_edges(&self) -> impl Iterator<Item = (Edge, EdgeKind)> + '_ {
        self.edges.iter().map(|(e, d)| (*e, d.kind))
    }

    pub fn deleted_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.deleted.keys().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_kind(&self, e: Edge) -> Option<EdgeKind> {
        self.edges.get(&e).map(|d| d.kind)
    }

    pub fn incident_live_edges(&self, n: NodeId) -> Vec<Edge> {
        self.edges.keys().filter(|e| e.0 == n || e.1 == n).copied().collect()
    }

    /// Moves a live edge to the deleted set.
    pub fn delete_edge(&mut self, e: Edge) -> Result<(), RegraspError> {
        let e = Edge::new(e.0, e.1);
        match self.edges.remove(&e) {
            Some(d) => {
                self.deleted.insert(e, d);
                Ok(())
            }
            None => Err(RegraspError::UnknownEdge(e.0, e.1)),
        }
    }

    /// Drops the goal layer with every edge touching it, live or deleted, and
    /// wires in `new_goal`.
    pub fn replace_goal_layer(&mut self, new_goal: Vec<GraspNode>) -> Result<(), RegraspError> {
        if new_goal.is_empty() {
            return Err(RegraspError::EmptyLayer(Layer::Goal));
        }
        let old: BTreeSet<NodeId> = self.layer_ids(Layer::Goal).into_iter().collect();
        let touches = |e: &Edge| old.contains(&e.0) || old.contains(&e.1);
        self.edges.retain(|e, _| !touches(e));
        self.deleted.retain(|e, _| !touches(e));
        for id in old {
            self.nodes[id] = None;
        }
        for n in new_goal {
            self.add_node(Layer::Goal, n);
        }
        Ok(())
    }

    fn adjacency(&self) -> Vec<Vec<(NodeId, f64, EdgeKind)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (e, d) in &self.edges {
            adj[e.0].push((e.1, d.score, d.kind));
            adj[e.1].push((e.0, d.score, d.kind));
        }
        for a in &mut adj {
            a.sort_by_key(|x| x.0);
        }
        adj
    }

    /// Minimum-hop sequence from the initial to the goal layer over live
    /// edges. Ties go to the larger summed handover score, then to the
    /// lexicographically smallest node-id sequence.
    pub fn search_sequence(&self) -> Result<GraspSequence, RegraspError> {
        let adj = self.adjacency();
        let n = self.nodes.len();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for g in self.layer_ids(Layer::Goal) {
            dist[g] = 0;
            queue.push_back(g);
        }
        let mut order = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(u, _, _) in &adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        // Best score to reach the goal, filled in BFS order (increasing distance).
        let mut best = vec![f64::NEG_INFINITY; n];
        let mut next: Vec<Option<(NodeId, EdgeKind)>> = vec![None; n];
        for &v in &order {
            if dist[v] == 0 {
                best[v] = 0.0;
                continue;
            }
            for &(u, s, k) in &adj[v] {
                if dist[u] != usize::MAX && dist[u] + 1 == dist[v] {
                    let cand = s + best[u];
                    // Neighbors are id-sorted, so strict improvement keeps the smallest id.
                    if cand > best[v] {
                        best[v] = cand;
                        next[v] = Some((u, k));
                    }
                }
            }
        }
        let start = self
            .layer_ids(Layer::Initial)
            .into_iter()
            .filter(|&i| dist[i] != usize::MAX)
            .min_by(|&a, &b| dist[a].cmp(&dist[b]).then(best[b].total_cmp(&best[a])).then(a.cmp(&b)))
            .ok_or(RegraspError::NoSequence)?;
        let mut nodes = vec![start];
        let mut kinds = Vec::new();
        let mut v = start;
        while dist[v] > 0 {
            let (u, k) = next[v].expect("every node with finite distance has a successor");
            nodes.push(u);
            kinds.push(k);
            v = u;
        }
        Ok(GraspSequence { nodes, kinds })
    }

    /// Graphviz rendering for debugging; deleted edges are dashed.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph regrasp {\n");
        for id in self.node_ids() {
            let n = self.node(id).unwrap();
            let _ = writeln!(
                s,
                "  n{id} [label=\"{id} {:?} {} g{}\"];",
                n.layer, n.arm, n.grasp_id
            );
        }
        for (e, d) in &self.edges {
            let style = if d.kind == EdgeKind::Handover { "bold" } else { "solid" };
            let _ = writeln!(s, "  n{} -- n{} [style={style}];", e.0, e.1);
        }
        for e in self.deleted.keys() {
            let _ = writeln!(s, "  n{} -- n{} [style=dashed];", e.0, e.1);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graspdb::HandoverSide;

    fn node(arm: Arm, grasp_id: usize, x: f64) -> GraspNode {
        GraspNode {
            layer: Layer::Initial,
            arm,
            grasp_id,
            held_pose: RigidTransform::from_translation(x, 0.0, 0.0),
            config: [0.0; 6],
            attachment: Attachment::ToolOnly,
            pair: None,
        }
    }

    fn pair(gl: usize, gr: usize, score: f64) -> HandoverPair {
        HandoverPair {
            giver: HandoverSide {
                arm: Arm::Left,
                grasp_id: gl,
                config: [0.0; 6],
            },
            receiver: HandoverSide {
                arm: Arm::Right,
                grasp_id: gr,
                config: [0.0; 6],
            },
            tool_pose: RigidTransform::from_translation(0.5, 0.0, 0.3),
            score,
        }
    }

    #[test]
    fn direct_transfer() {
        let g = build_graph(&[], vec![node(Arm::Left, 3, 0.0)], vec![node(Arm::Left, 3, 1.0)], &Attachment::ToolOnly)
            .unwrap();
        let s = g.search_sequence().unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.kinds, vec![EdgeKind::Transfer]);
    }

    #[test]
    fn handover_route_and_deletion() {
        let pairs = [pair(1, 2, 0.3), pair(1, 2, 0.5)];
        let mut g = build_graph(
            &pairs,
            vec![node(Arm::Left, 1, 0.0)],
            vec![node(Arm::Right, 2, 1.0), node(Arm::Left, 1, 1.0)],
            &Attachment::ToolOnly,
        )
        .unwrap();
        let direct = g.search_sequence().unwrap();
        assert_eq!(direct.nodes.len(), 2);
        // Without the same-arm goal every route needs the exchange.
        for e in g.incident_live_edges(*direct.nodes.last().unwrap()) {
            g.delete_edge(e).unwrap();
        }
        let s = g.search_sequence().unwrap();
        assert_eq!(s.nodes.len(), 4);
        assert_eq!(s.handover_count(), 1);
        // Higher-scoring pair wins the tie.
        assert_eq!(g.node(s.nodes[1]).unwrap().pair, Some(1));
        let e = s.edges().nth(1).unwrap();
        g.delete_edge(e).unwrap();
        assert_eq!(g.delete_edge(e), Err(RegraspError::UnknownEdge(e.0, e.1)));
    }

    #[test]
    fn empty_layers_and_no_sequence() {
        assert_eq!(
            build_graph(&[], vec![node(Arm::Left, 0, 0.0)], vec![], &Attachment::ToolOnly).unwrap_err(),
            RegraspError::EmptyLayer(Layer::Goal)
        );
        let mut g = build_graph(&[], vec![node(Arm::Left, 0, 0.0)], vec![node(Arm::Left, 0, 1.0)], &Attachment::ToolOnly)
            .unwrap();
        for e in g.incident_live_edges(g.layer_ids(Layer::Goal)[0]) {
            g.delete_edge(e).unwrap();
        }
        assert_eq!(g.search_sequence(), Err(RegraspError::NoSequence));
        assert_eq!(g.replace_goal_layer(vec![]), Err(RegraspError::EmptyLayer(Layer::Goal)));
    }

    #[test]
    fn replace_goal_forgets_only_goal_deletions() {
        let pairs = [pair(1, 2, 0.3)];
        let mut g = build_graph(
            &pairs,
            vec![node(Arm::Left, 1, 0.0)],
            vec![node(Arm::Left, 1, 1.0), node(Arm::Right, 2, 1.0)],
            &Attachment::ToolOnly,
        )
        .unwrap();
        let init = g.layer_ids(Layer::Initial)[0];
        let kept: Vec<Edge> = g.incident_live_edges(init);
        for e in &kept {
            if g.layer_ids(Layer::Handover).contains(&e.other(init)) {
                g.delete_edge(*e).unwrap();
            }
        }
        let goal_edges: Vec<Edge> = g
            .live_edges()
            .map(|(e, _)| e)
            .filter(|e| g.layer_ids(Layer::Goal).iter().any(|&n| e.0 == n || e.1 == n))
            .collect();
        for e in &goal_edges {
            g.delete_edge(*e).unwrap();
        }
        let before: BTreeSet<Edge> = g.deleted_edges().collect();
        g.replace_goal_layer(vec![node(Arm::Left, 1, 2.0)]).unwrap();
        let after: BTreeSet<Edge> = g.deleted_edges().collect();
        let expected: BTreeSet<Edge> = before.difference(&goal_edges.iter().copied().collect()).copied().collect();
        assert_eq!(after, expected);
        assert_eq!(g.layer_ids(Layer::Goal).len(), 1);
    }
}
