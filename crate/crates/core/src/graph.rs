//! Metric graphs with Neumann/Dirichlet vertex conditions and semi-infinite
//! leads, together with the JSON graph description format.
//!
//! Ids in the file format are opaque strings. Internally every vertex, edge
//! and lead is addressed by its dense index, which is its position in the
//! file. All matrices built from a graph use that order.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown vertex '{vertex}' referenced by {referrer}")]
    UnknownVertex { referrer: String, vertex: String },

    #[error("duplicate {kind} id '{id}'")]
    DuplicateId { kind: &'static str, id: String },

    #[error("edge '{edge}' has invalid length {length}: lengths must be finite and > 0")]
    InvalidLength { edge: String, length: f64 },

    #[error("lead requires Neumann attachment: lead '{lead}' is attached to Dirichlet vertex '{vertex}'")]
    LeadRequiresNeumann { lead: String, vertex: String },

    #[error("lead '{lead}' is attached to vertex '{vertex}' of total degree {degree}; marked vertices need degree >= 2")]
    LeadDegree {
        lead: String,
        vertex: String,
        degree: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type GraphResult<T> = Result<T, GraphError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexCondition {
    Neumann,
    Dirichlet,
}

impl fmt::Display for VertexCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexCondition::Neumann => write!(f, "neumann"),
            VertexCondition::Dirichlet => write!(f, "dirichlet"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub condition: VertexCondition,
}

/// An edge `[0, length]`; `x = 0` sits at `from`, `x = length` at `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

/// A semi-infinite lead with coordinate `x >= 0`, `x = 0` at `vertex`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lead {
    pub id: String,
    pub vertex: usize,
}

/// A finite metric graph. Immutable once built.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl PartialEq for MetricGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl MetricGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> GraphResult<Self> {
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateId {
                    kind: "vertex",
                    id: v.id.clone(),
                });
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateId {
                    kind: "edge",
                    id: e.id.clone(),
                });
            }
            for end in [e.from, e.to] {
                if end >= vertices.len() {
                    return Err(GraphError::UnknownVertex {
                        referrer: format!("edge '{}'", e.id),
                        vertex: format!("#{end}"),
                    });
                }
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(GraphError::InvalidLength {
                    edge: e.id.clone(),
                    length: e.length,
                });
            }
        }
        Ok(Self {
            vertices,
            edges,
            vertex_index,
            edge_index,
        })
    }

    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_by_id(&self, id: &str) -> Option<usize> {
        self.vertex_index.get(id).copied()
    }

    pub fn edge_by_id(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// Number of edge ends at `v`; a self-loop counts twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.from == v) + usize::from(e.to == v))
            .sum()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Connected-component label per vertex, labels numbered from 0 in
    /// order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.from);
            let b = find(&mut parent, e.to);
            if a != b {
                parent[a] = b;
            }
        }
        let mut label = HashMap::new();
        (0..n)
            .map(|v| {
                let root = find(&mut parent, v);
                let next = label.len();
                *label.entry(root).or_insert(next)
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Returns a copy with one edge length replaced.
    pub fn with_edge_length(&self, edge: usize, length: f64) -> GraphResult<Self> {
        let mut edges = self.edges.clone();
        edges[edge].length = length;
        Self::new(self.vertices.clone(), edges)
    }
}

/// Builds graphs by string ids.
#[derive(Default, Debug, Clone)]
pub struct GraphBuilder {
    vertices: Vec<Vertex>,
    edges: Vec<(String, String, String, f64)>,
    leads: Vec<(String, String)>,
}

impl GraphBuilder {
    pub fn vertex(mut self, id: &str, condition: VertexCondition) -> Self {
        self.vertices.push(Vertex {
            id: id.to_string(),
            condition,
        });
        self
    }

    pub fn neumann(self, id: &str) -> Self {
        self.vertex(id, VertexCondition::Neumann)
    }

    pub fn dirichlet(self, id: &str) -> Self {
        self.vertex(id, VertexCondition::Dirichlet)
    }

    pub fn edge(mut self, id: &str, from: &str, to: &str, length: f64) -> Self {
        self.edges
            .push((id.to_string(), from.to_string(), to.to_string(), length));
        self
    }

    pub fn lead(mut self, id: &str, vertex: &str) -> Self {
        self.leads.push((id.to_string(), vertex.to_string()));
        self
    }

    pub fn build(self) -> GraphResult<MetricGraph> {
        Ok(self.build_extended()?.graph)
    }

    pub fn build_extended(self) -> GraphResult<ExtendedGraph> {
        let (graph, leads) = self.resolve()?;
        ExtendedGraph::new(graph, leads)
    }

    /// Like [`GraphBuilder::build_extended`] but skips the marked-vertex
    /// degree rule.
    pub fn build_extended_relaxed(self) -> GraphResult<ExtendedGraph> {
        let (graph, leads) = self.resolve()?;
        ExtendedGraph::new_relaxed(graph, leads)
    }

    fn resolve(self) -> GraphResult<(MetricGraph, Vec<Lead>)> {
        let index: HashMap<&str, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.as_str(), i))
            .collect();
        let lookup = |referrer: String, id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex {
                    referrer,
                    vertex: id.to_string(),
                })
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for (id, from, to, length) in &self.edges {
            edges.push(Edge {
                id: id.clone(),
                from: lookup(format!("edge '{id}'"), from)?,
                to: lookup(format!("edge '{id}'"), to)?,
                length: *length,
            });
        }
        let mut leads = Vec::with_capacity(self.leads.len());
        for (id, vertex) in &self.leads {
            leads.push(Lead {
                id: id.clone(),
                vertex: lookup(format!("lead '{id}'"), vertex)?,
            });
        }
        let graph = MetricGraph::new(self.vertices, edges)?;
        Ok((graph, leads))
    }
}

/// A metric graph with leads attached.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedGraph {
    graph: MetricGraph,
    leads: Vec<Lead>,
}

impl ExtendedGraph {
    /// Validates lead ids, attachment vertices, the Neumann rule and the
    /// degree rule (edges + leads >= 2 at every marked vertex).
    pub fn new(graph: MetricGraph, leads: Vec<Lead>) -> GraphResult<Self> {
        let eg = Self::new_relaxed(graph, leads)?;
        for lead in &eg.leads {
            let degree = eg.total_degree(lead.vertex);
            if degree < 2 {
                return Err(GraphError::LeadDegree {
                    lead: lead.id.clone(),
                    vertex: eg.graph.vertices[lead.vertex].id.clone(),
                    degree,
                });
            }
        }
        Ok(eg)
    }

    /// Same as [`ExtendedGraph::new`] without the degree rule, so that a
    /// lead may end at a pendant or isolated vertex.
    pub fn new_relaxed(graph: MetricGraph, leads: Vec<Lead>) -> GraphResult<Self> {
        let mut seen = HashMap::new();
        for lead in &leads {
            if seen.insert(lead.id.clone(), ()).is_some() {
                return Err(GraphError::DuplicateId {
                    kind: "lead",
                    id: lead.id.clone(),
                });
            }
            let Some(vertex) = graph.vertices.get(lead.vertex) else {
                return Err(GraphError::UnknownVertex {
                    referrer: format!("lead '{}'", lead.id),
                    vertex: format!("#{}", lead.vertex),
                });
            };
            if vertex.condition == VertexCondition::Dirichlet {
                return Err(GraphError::LeadRequiresNeumann {
                    lead: lead.id.clone(),
                    vertex: vertex.id.clone(),
                });
            }
        }
        Ok(Self { graph, leads })
    }

    pub fn compact(graph: MetricGraph) -> Self {
        Self {
            graph,
            leads: Vec::new(),
        }
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn lead_count(&self) -> usize {
        self.leads.len()
    }

    pub fn leads_at(&self, v: usize) -> usize {
        self.leads.iter().filter(|l| l.vertex == v).count()
    }

    /// Edge ends plus leads at `v`.
    pub fn total_degree(&self, v: usize) -> usize {
        self.graph.degree(v) + self.leads_at(v)
    }

    pub fn into_parts(self) -> (MetricGraph, Vec<Lead>) {
        (self.graph, self.leads)
    }
}

impl From<MetricGraph> for ExtendedGraph {
    fn from(graph: MetricGraph) -> Self {
        Self::compact(graph)
    }
}

/// Attaches one lead per listed vertex id. Listing a vertex twice attaches
/// two distinct leads there. New lead ids are `L<n>`, skipping ids already
/// in use by edges.
pub fn attach_leads(g: &MetricGraph, vertices: &[&str]) -> GraphResult<ExtendedGraph> {
    let mut leads = Vec::with_capacity(vertices.len());
    let mut counter = 0usize;
    for id in vertices {
        let vertex = g
            .vertex_by_id(id)
            .ok_or_else(|| GraphError::UnknownVertex {
                referrer: "attach_leads".to_string(),
                vertex: id.to_string(),
            })?;
        let lead_id = loop {
            let candidate = format!("L{counter}");
            counter += 1;
            if g.edge_by_id(&candidate).is_none() {
                break candidate;
            }
        };
        leads.push(Lead {
            id: lead_id,
            vertex,
        });
    }
    ExtendedGraph::new(g.clone(), leads)
}

// ---------------------------------------------------------------------------
// File format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
    #[serde(default)]
    leads: Vec<LeadRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexRecord {
    id: String,
    condition: VertexCondition,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    id: String,
    from: String,
    to: String,
    length: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeadRecord {
    id: String,
    vertex: String,
}

/// Parses a graph description from JSON text.
pub fn parse_graph(text: &str) -> GraphResult<ExtendedGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut builder = GraphBuilder::default();
    for v in file.vertices {
        builder = builder.vertex(&v.id, v.condition);
    }
    for e in file.edges {
        builder = builder.edge(&e.id, &e.from, &e.to, e.length);
    }
    for l in file.leads {
        builder = builder.lead(&l.id, &l.vertex);
    }
    builder.build_extended()
}

/// Renders a graph as pretty-printed JSON followed by a newline.
pub fn graph_to_json(g: &ExtendedGraph) -> String {
    let vs = g.graph.vertices();
    let file = GraphFile {
        vertices: vs
            .iter()
            .map(|v| VertexRecord {
                id: v.id.clone(),
                condition: v.condition,
            })
            .collect(),
        edges: g
            .graph
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                id: e.id.clone(),
                from: vs[e.from].id.clone(),
                to: vs[e.to].id.clone(),
                length: e.length,
            })
            .collect(),
        leads: g
            .leads
            .iter()
            .map(|l| LeadRecord {
                id: l.id.clone(),
                vertex: vs[l.vertex].id.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("graph records always serialize");
    out.push('\n');
    out
}

pub fn load_graph(path: impl AsRef<Path>) -> GraphResult<ExtendedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_graph(&text)
}

pub fn serialize_graph(g: &ExtendedGraph, path: impl AsRef<Path>) -> GraphResult<()> {
    let path = path.as_ref();
    fs::write(path, graph_to_json(g)).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirichlet_interval() -> MetricGraph {
        MetricGraph::builder()
            .dirichlet("a")
            .dirichlet("b")
            .edge("e", "a", "b", 1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn parses_single_edge() {
        let g = parse_graph(
            r#"{"vertices":[{"id":"a","condition":"dirichlet"},{"id":"b","condition":"dirichlet"}],
                "edges":[{"id":"e","from":"a","to":"b","length":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(g.graph().vertex_count(), 2);
        assert_eq!(g.graph().edge_count(), 1);
        assert_eq!(g.lead_count(), 0);
        assert_eq!(g.graph(), &dirichlet_interval());
    }

    #[test]
    fn rejects_unknown_vertex() {
        let err = parse_graph(
            r#"{"vertices":[{"id":"a","condition":"neumann"}],
                "edges":[{"id":"e","from":"a","to":"zz","length":1.0}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::UnknownVertex { .. }));
        assert!(err.to_string().contains("unknown vertex"));
    }

    #[test]
    fn rejects_dirichlet_lead() {
        let err = parse_graph(
            r#"{"vertices":[{"id":"a","condition":"dirichlet"},{"id":"b","condition":"neumann"}],
                "edges":[{"id":"e","from":"a","to":"b","length":1.0},
                         {"id":"f","from":"a","to":"b","length":2.0}],
                "leads":[{"id":"l","vertex":"a"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lead requires Neumann attachment"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lengths() {
        let err = parse_graph(
            r#"{"vertices":[{"id":"a","condition":"neumann","colour":1}],"edges":[]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));

        for bad in ["0.0", "-1.5"] {
            let text = format!(
                r#"{{"vertices":[{{"id":"a","condition":"neumann"}}],
                    "edges":[{{"id":"e","from":"a","to":"a","length":{bad}}}]}}"#
            );
            assert!(matches!(
                parse_graph(&text).unwrap_err(),
                GraphError::InvalidLength { .. }
            ));
        }
    }

    #[test]
    fn parse_error_reports_position() {
        let err = parse_graph("{\n  \"vertices\": [,\n}").unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = MetricGraph::builder()
            .neumann("a")
            .neumann("a")
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::DuplicateId { kind: "vertex", .. }));
        let err = MetricGraph::builder()
            .neumann("a")
            .edge("e", "a", "a", 1.0)
            .edge("e", "a", "a", 1.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::DuplicateId { kind: "edge", .. }));
    }

    #[test]
    fn self_loop_counts_twice() {
        let g = MetricGraph::builder()
            .neumann("a")
            .edge("loop", "a", "a", 1.0)
            .build()
            .unwrap();
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn attach_leads_cases() {
        let star = MetricGraph::builder()
            .neumann("c")
            .dirichlet("t1")
            .dirichlet("t2")
            .dirichlet("t3")
            .edge("e1", "c", "t1", 1.0)
            .edge("e2", "c", "t2", 1.0)
            .edge("e3", "c", "t3", 1.0)
            .build()
            .unwrap();
        let one = attach_leads(&star, &["c"]).unwrap();
        assert_eq!(one.lead_count(), 1);
        assert_eq!(one.graph(), &star);

        let none = attach_leads(&star, &[]).unwrap();
        assert_eq!(none, ExtendedGraph::compact(star.clone()));

        let two = attach_leads(&star, &["c", "c"]).unwrap();
        assert_eq!(two.lead_count(), 2);
        assert_ne!(two.leads()[0].id, two.leads()[1].id);
        assert_eq!(two.leads()[0].vertex, two.leads()[1].vertex);

        assert!(matches!(
            attach_leads(&star, &["t1"]).unwrap_err(),
            GraphError::LeadRequiresNeumann { .. }
        ));
        assert!(matches!(
            attach_leads(&star, &["nope"]).unwrap_err(),
            GraphError::UnknownVertex { .. }
        ));
    }

    #[test]
    fn degree_rule_and_relaxed_constructor() {
        let g = MetricGraph::builder().neumann("v").build().unwrap();
        let lead = Lead {
            id: "l".into(),
            vertex: 0,
        };
        assert!(matches!(
            ExtendedGraph::new(g.clone(), vec![lead.clone()]).unwrap_err(),
            GraphError::LeadDegree { degree: 1, .. }
        ));
        assert!(ExtendedGraph::new_relaxed(g, vec![lead]).is_ok());
    }

    #[test]
    fn file_round_trip_and_field_isolation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let g = ExtendedGraph::compact(dirichlet_interval());
        serialize_graph(&g, &path).unwrap();
        assert_eq!(load_graph(&path).unwrap(), g);

        let text = std::fs::read_to_string(&path).unwrap();
        let modified = parse_graph(&text.replace("1.0", "2.0")).unwrap();
        assert_eq!(modified.graph().vertices(), g.graph().vertices());
        assert_eq!(modified.graph().edges()[0].length, 2.0);
        assert_eq!(modified.graph().edges()[0].id, g.graph().edges()[0].id);
        assert_ne!(modified, g);
    }

    #[test]
    fn load_missing_file_is_io_error() {
        assert!(matches!(
            load_graph("/definitely/not/here.json").unwrap_err(),
            GraphError::Io { .. }
        ));
    }

    #[test]
    fn components() {
        let g = MetricGraph::builder()
            .neumann("a")
            .neumann("b")
            .neumann("c")
            .edge("e", "a", "b", 1.0)
            .build()
            .unwrap();
        assert_eq!(g.components(), vec![0, 0, 1]);
        assert!(!g.is_connected());
    }
}
