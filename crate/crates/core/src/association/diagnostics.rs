//! Graph diagnostics over a [`RelationGraph`]: connected components
//! (depth-first search), a minimum spanning forest (Kruskal) on cost
//! `1 - likelihood`, and most-likely paths (Dijkstra) on cost
//! `-ln(likelihood)`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::Serialize;

use super::graph::{EdgeKey, RelationGraph};
use super::partition::WeightedEdge;
use crate::scene::EntityId;

/// Connected components by iterative depth-first search. Components are
/// listed in order of their smallest node; nodes within a component are
/// sorted.
pub fn connected_components<'a>(
    nodes: impl IntoIterator<Item = &'a EntityId>,
    edges: impl IntoIterator<Item = (&'a EntityId, &'a EntityId)>,
) -> Vec<Vec<EntityId>> {
    let mut adj: BTreeMap<&EntityId, Vec<&EntityId>> = nodes.into_iter().map(|n| (n, Vec::new())).collect();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    for list in adj.values_mut() {
        list.sort();
        list.dedup();
    }

    let mut seen: BTreeSet<&EntityId> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut component = vec![start.clone()];
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &next in &adj[n] {
                if seen.insert(next) {
                    component.push(next.clone());
                    stack.push(next);
                }
            }
        }
        component.sort();
        out.push(component);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanningForest {
    pub edges: Vec<WeightedEdge>,
    /// Sum of `1 - likelihood` over the forest edges.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PathResult {
    Reachable { cost: f64, likelihood: f64, path: Vec<EntityId> },
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphDiagnostics {
    pub components: Vec<Vec<EntityId>>,
    pub spanning_forest: SpanningForest,
}

pub fn graph_diagnostics(g: &RelationGraph) -> GraphDiagnostics {
    GraphDiagnostics {
        components: connected_components(g.nodes().map(|(id, _)| id), g.edges().map(|(k, _)| (&k.a, &k.b))),
        spanning_forest: spanning_forest(g),
    }
}

/// Kruskal's algorithm; equal costs are taken in edge-key order.
pub fn spanning_forest(g: &RelationGraph) -> SpanningForest {
    let index: BTreeMap<&EntityId, usize> = g.nodes().enumerate().map(|(i, (id, _))| (id, i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut edges: Vec<(&EdgeKey, f64)> = g.edges().map(|(k, e)| (k, 1.0 - e.likelihood)).collect();
    edges.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal).then_with(|| x.0.cmp(y.0)));

    let mut forest = SpanningForest { edges: Vec::new(), cost: 0.0 };
    for (k, cost) in edges {
        let (ra, rb) = (find(&mut parent, index[&k.a]), find(&mut parent, index[&k.b]));
        if ra != rb {
            parent[ra] = rb;
            forest.cost += cost;
            forest.edges.push(WeightedEdge { a: k.a.clone(), b: k.b.clone(), likelihood: 1.0 - cost });
        }
    }
    forest
}

#[derive(PartialEq)]
struct Frontier<'a> {
    cost: f64,
    node: &'a EntityId,
}

impl Eq for Frontier<'_> {}

impl Ord for Frontier<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on node id.
        other.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal).then_with(|| other.node.cmp(self.node))
    }
}

impl PartialOrd for Frontier<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Most likely chain of associations between `from` and `to`. Edges with
/// zero likelihood are impassable.
pub fn shortest_path(g: &RelationGraph, from: &EntityId, to: &EntityId) -> PathResult {
    if !g.contains(from) || !g.contains(to) {
        return PathResult::Unreachable;
    }
    let mut adj: BTreeMap<&EntityId, Vec<(&EntityId, f64)>> = BTreeMap::new();
    for (k, e) in g.edges() {
        if e.likelihood > 0.0 {
            let c = -e.likelihood.ln();
            adj.entry(&k.a).or_default().push((&k.b, c));
            adj.entry(&k.b).or_default().push((&k.a, c));
        }
    }

    let mut dist: BTreeMap<&EntityId, f64> = BTreeMap::new();
    let mut prev: BTreeMap<&EntityId, &EntityId> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(Frontier { cost: 0.0, node: from });
    while let Some(Frontier { cost, node }) = heap.pop() {
        if node == to {
            let mut path = vec![to.clone()];
            let mut cur = to;
            while let Some(&p) = prev.get(cur) {
                path.push(p.clone());
                cur = p;
            }
            path.reverse();
            return PathResult::Reachable { cost, likelihood: (-cost).exp(), path };
        }
        if cost > dist[node] {
            continue;
        }
        for &(next, c) in adj.get(node).map(Vec::as_slice).unwrap_or(&[]) {
            let nc = cost + c;
            if dist.get(next).is_none_or(|&d| nc < d) {
                dist.insert(next, nc);
                prev.insert(next, node);
                heap.push(Frontier { cost: nc, node: next });
            }
        }
    }
    PathResult::Unreachable
}

#[cfg(test)]
mod tests {
    use super::super::MatchCandidate;
    use super::*;

    fn graph(edges: &[(EntityId, EntityId, f64)]) -> RelationGraph {
        let mut g = RelationGraph::new();
        for (a, b, l) in edges {
            g.submit_match(&MatchCandidate::new(a.clone(), b.clone(), *l, 0.0)).unwrap();
        }
        g
    }

    #[test]
    fn two_disjoint_edges_are_two_components() {
        let g = graph(&[
            (EntityId::face("f1"), EntityId::body("b1"), 0.5),
            (EntityId::face("f2"), EntityId::body("b2"), 0.5),
        ]);
        assert_eq!(graph_diagnostics(&g).components.len(), 2);
    }

    #[test]
    fn triangle_spanning_tree_drops_weakest_edge() {
        // face–body–person triangle. The three spanning trees cost
        // 0.1+0.2, 0.1+0.9 and 0.2+0.9; the first keeps the 0.9 and 0.8 edges.
        let (f, b, p) = (EntityId::face("f"), EntityId::body("b"), EntityId::person("p"));
        let g = graph(&[(f.clone(), b.clone(), 0.9), (b.clone(), p.clone(), 0.8), (f.clone(), p.clone(), 0.1)]);
        let forest = spanning_forest(&g);
        let mut kept: Vec<f64> = forest.edges.iter().map(|e| e.likelihood).collect();
        kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(kept.len(), 2);
        assert!((kept[0] - 0.9).abs() < 1e-12 && (kept[1] - 0.8).abs() < 1e-12);
        assert!((forest.cost - 0.3).abs() < 1e-12);
    }

    #[test]
    fn dijkstra_on_two_hop_path() {
        let (a, b, c) = (EntityId::face("a"), EntityId::body("b"), EntityId::voice("c"));
        let g = graph(&[(a.clone(), b.clone(), 0.5), (b.clone(), c.clone(), 0.5)]);
        match shortest_path(&g, &a, &c) {
            PathResult::Reachable { cost, likelihood, path } => {
                assert!((cost - 2.0 * -(0.5f64.ln())).abs() < 1e-12);
                assert!((likelihood - 0.25).abs() < 1e-12);
                assert_eq!(path, vec![a, b, c]);
            }
            PathResult::Unreachable => panic!("expected a path"),
        }
    }

    #[test]
    fn dijkstra_prefers_likelier_detour() {
        let (f, b, p) = (EntityId::face("f"), EntityId::body("b"), EntityId::person("p"));
        let g = graph(&[(f.clone(), p.clone(), 0.1), (f.clone(), b.clone(), 0.9), (b.clone(), p.clone(), 0.9)]);
        let PathResult::Reachable { path, .. } = shortest_path(&g, &f, &p) else { panic!() };
        assert_eq!(path, vec![f, b, p]);
    }

    #[test]
    fn unreachable_marker() {
        let g = graph(&[
            (EntityId::face("f1"), EntityId::body("b1"), 0.5),
            (EntityId::face("f2"), EntityId::body("b2"), 0.0),
        ]);
        assert_eq!(shortest_path(&g, &EntityId::face("f1"), &EntityId::body("b2")), PathResult::Unreachable);
        assert_eq!(shortest_path(&g, &EntityId::face("f2"), &EntityId::body("b2")), PathResult::Unreachable);
        assert_eq!(shortest_path(&g, &EntityId::face("zz"), &EntityId::body("b2")), PathResult::Unreachable);
    }
}
