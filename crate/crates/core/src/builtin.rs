//! The built-in D4-symmetric parent graph, its two isospectral quotients and
//! the transplantation between them.
//!
//! Geometry: a centre `O` and eight vertices `P0..P7` placed at angles
//! `22.5 + 45 k` degrees, so that no `P_k` lies on a mirror axis. Spokes
//! `a_k: O -> P_k` have length `a`; rim edges `r_k: P_k -> P_{k+1}` have
//! length `c` when they cross a diagonal mirror (even `k`) and `b` when they
//! cross the x or y axis (odd `k`). The symmetric lead set puts one lead on
//! every `P_k`.
//!
//! Group elements: `e`, rotations `s`, `s2`, `s3` by 90, 180, 270 degrees,
//! reflections `rx`, `ry` in the x and y axes and `ru`, `rv` in the
//! diagonals at 45 and 135 degrees.

use crate::graph::{Edge, ExtendedGraph, GraphError, Lead, MetricGraph, Vertex, VertexCondition};
use crate::linalg::{CMatrix, C64};
use crate::symmetry::{quotient, EdgeImage, FiniteGroup, GraphAction, Rep1D, Symmetry, SymmetryError};

pub const D4_ELEMENTS: [&str; 8] = ["e", "s", "s2", "s3", "rx", "ry", "ru", "rv"];

/// Names accepted by [`builtin_graph`].
pub const BUILTIN_GRAPHS: [&str; 8] = [
    "d4-parent",
    "d4-parent-leads",
    "d4-r1",
    "d4-r2",
    "d4-r1-leads",
    "d4-r2-leads",
    "d4-r1-broken",
    "d4-r2-broken",
];

/// Names accepted by [`builtin_symmetry`].
pub const BUILTIN_SYMMETRIES: [&str; 1] = ["d4"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct D4Lengths {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for D4Lengths {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 2f64.sqrt(),
            c: 3f64.sqrt(),
        }
    }
}

/// Action of each element on the index `k` of `P_k`, as `k -> sign * k + shift`.
fn index_map(element: usize) -> (i64, i64) {
    match element {
        0 => (1, 0),
        1 => (1, 2),
        2 => (1, 4),
        3 => (1, 6),
        4 => (-1, 7),
        5 => (-1, 3),
        6 => (-1, 1),
        7 => (-1, 5),
        _ => unreachable!("D4 has eight elements"),
    }
}

fn apply(element: usize, k: usize) -> usize {
    let (sign, shift) = index_map(element);
    (sign * k as i64 + shift).rem_euclid(8) as usize
}

pub fn d4_group() -> FiniteGroup {
    let table = (0..8)
        .map(|g| {
            (0..8)
                .map(|h| {
                    (0..8)
                        .find(|&x| (0..8).all(|k| apply(x, k) == apply(g, apply(h, k))))
                        .expect("D4 is closed")
                })
                .collect()
        })
        .collect();
    FiniteGroup::new(D4_ELEMENTS.iter().map(|s| s.to_string()).collect(), table).expect("D4 table is a group")
}

pub fn d4_parent(lengths: D4Lengths) -> Result<MetricGraph, GraphError> {
    let mut vertices = vec![Vertex {
        id: "O".into(),
        condition: VertexCondition::Neumann,
    }];
    vertices.extend((0..8).map(|k| Vertex {
        id: format!("P{k}"),
        condition: VertexCondition::Neumann,
    }));
    let mut edges: Vec<Edge> = (0..8)
        .map(|k| Edge {
            id: format!("a{k}"),
            from: 0,
            to: 1 + k,
            length: lengths.a,
        })
        .collect();
    edges.extend((0..8).map(|k| Edge {
        id: format!("r{k}"),
        from: 1 + k,
        to: 1 + (k + 1) % 8,
        length: if k % 2 == 0 { lengths.c } else { lengths.b },
    }));
    MetricGraph::new(vertices, edges)
}

/// One lead on every `P_k`, listed starting from `P1`.
fn parent_leads() -> Vec<Lead> {
    (1..=8)
        .map(|i| {
            let k = i % 8;
            Lead {
                id: format!("l{k}"),
                vertex: 1 + k,
            }
        })
        .collect()
}

pub fn d4_action() -> GraphAction {
    let group = d4_group();
    let mut vertex_perm = Vec::with_capacity(8);
    let mut edge_perm = Vec::with_capacity(8);
    for g in 0..8 {
        let mut vp = vec![0];
        vp.extend((0..8).map(|k| 1 + apply(g, k)));
        vertex_perm.push(vp);
        let mut ep: Vec<EdgeImage> = (0..8)
            .map(|k| EdgeImage {
                edge: apply(g, k),
                reversed: false,
            })
            .collect();
        ep.extend((0..8).map(|k| {
            let (p, q) = (apply(g, k), apply(g, (k + 1) % 8));
            if q == (p + 1) % 8 {
                EdgeImage {
                    edge: 8 + p,
                    reversed: false,
                }
            } else {
                EdgeImage {
                    edge: 8 + q,
                    reversed: true,
                }
            }
        }));
        edge_perm.push(ep);
    }
    GraphAction::new(group, vertex_perm, edge_perm)
}

/// `R1` on `H1 = {e, ru, rv, s2}`.
pub fn d4_r1(group: &FiniteGroup) -> Rep1D {
    Rep1D::from_names(group, &[("e", 1), ("ru", 1), ("rv", -1), ("s2", -1)]).expect("R1 is a representation")
}

/// `R2` on `H2 = {e, rx, ry, s2}`.
pub fn d4_r2(group: &FiniteGroup) -> Rep1D {
    Rep1D::from_names(group, &[("e", 1), ("rx", -1), ("ry", 1), ("s2", -1)]).expect("R2 is a representation")
}

#[derive(Clone, Debug)]
pub struct D4Example {
    pub lengths: D4Lengths,
    /// Parent with the symmetric lead set.
    pub parent: ExtendedGraph,
    pub action: GraphAction,
    pub r1: Rep1D,
    pub r2: Rep1D,
    /// Lead-space transplantation, `T^-1 S2 T = S1`.
    pub transplantation: CMatrix,
}

impl D4Example {
    pub fn parent_compact(&self) -> ExtendedGraph {
        ExtendedGraph::compact(self.parent.graph().clone())
    }

    /// The action together with `R1` and `R2` under the names `r1`, `r2`.
    pub fn symmetry(&self) -> Symmetry {
        Symmetry {
            action: self.action.clone(),
            reps: vec![("r1".into(), self.r1.clone()), ("r2".into(), self.r2.clone())],
        }
    }
}

pub fn transplantation_matrix() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0)],
    )
}

pub fn d4_example_with(lengths: D4Lengths) -> Result<D4Example, GraphError> {
    let parent = ExtendedGraph::new(d4_parent(lengths)?, parent_leads())?;
    let action = d4_action();
    let r1 = d4_r1(action.group());
    let r2 = d4_r2(action.group());
    Ok(D4Example {
        lengths,
        parent,
        action,
        r1,
        r2,
        transplantation: transplantation_matrix(),
    })
}

pub fn d4_example() -> D4Example {
    d4_example_with(D4Lengths::default()).expect("default lengths are valid")
}

#[derive(Debug, thiserror::Error)]
pub enum BuiltinError {
    #[error("unknown built-in '{name}' (available: {available})")]
    Unknown { name: String, available: String },

    #[error(transparent)]
    Symmetry(#[from] SymmetryError),

    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn unknown(name: &str, available: &[&str]) -> BuiltinError {
    BuiltinError::Unknown {
        name: name.to_string(),
        available: available.join(", "),
    }
}

/// A quotient with a single lead on the vertex named `P0`, which is not
/// the image of any symmetric lead set.
fn broken(quotient: &ExtendedGraph) -> Result<ExtendedGraph, BuiltinError> {
    let g = quotient.graph().clone();
    let vertex = g.vertex_by_id("P0").expect("quotient keeps the P0 orbit");
    Ok(ExtendedGraph::new(
        g,
        vec![Lead {
            id: "l0".into(),
            vertex,
        }],
    )?)
}

pub fn builtin_graph(name: &str) -> Result<ExtendedGraph, BuiltinError> {
    let ex = d4_example();
    let compact = ex.parent_compact();
    Ok(match name {
        "d4-parent" => compact,
        "d4-parent-leads" => ex.parent,
        "d4-r1" => quotient(&compact, &ex.action, &ex.r1)?.quotient,
        "d4-r2" => quotient(&compact, &ex.action, &ex.r2)?.quotient,
        "d4-r1-leads" => quotient(&ex.parent, &ex.action, &ex.r1)?.quotient,
        "d4-r2-leads" => quotient(&ex.parent, &ex.action, &ex.r2)?.quotient,
        "d4-r1-broken" => broken(&quotient(&compact, &ex.action, &ex.r1)?.quotient)?,
        "d4-r2-broken" => broken(&quotient(&compact, &ex.action, &ex.r2)?.quotient)?,
        _ => return Err(unknown(name, &BUILTIN_GRAPHS)),
    })
}

pub fn builtin_symmetry(name: &str) -> Result<Symmetry, BuiltinError> {
    match name {
        "d4" => Ok(d4_example().symmetry()),
        _ => Err(unknown(name, &BUILTIN_SYMMETRIES)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_to_json;
    use crate::symmetry::{fixed_points, induced_character, induction_equivalent, verify_action};

    #[test]
    fn d4_relations() {
        let g = d4_group();
        let s = g.element("s").unwrap();
        let e = g.identity();
        let s4 = g.mul(g.mul(s, s), g.mul(s, s));
        assert_eq!(s4, e);
        for r in ["rx", "ry", "ru", "rv"] {
            let r = g.element(r).unwrap();
            assert_eq!(g.mul(r, r), e);
            assert_eq!(g.mul(g.mul(r, s), r), g.inverse(s));
        }
        assert_eq!(g.mul(s, s), g.element("s2").unwrap());
    }

    #[test]
    fn action_is_valid_with_and_without_leads() {
        let ex = d4_example();
        assert!(verify_action(&ex.parent, &ex.action).is_valid());
        assert!(verify_action(&ex.parent_compact(), &ex.action).is_valid());
        let stretched = ex.parent.graph().with_edge_length(0, 1.01).unwrap();
        let report = verify_action(&stretched.into(), &ex.action);
        assert!(report.violations.iter().any(|v| v.message.contains("length not preserved")));
    }

    #[test]
    fn rotation_fixes_only_the_centre() {
        let ex = d4_example();
        let s = ex.action.group().element("s").unwrap();
        let fp = fixed_points(ex.parent.graph(), &ex.action, s);
        assert_eq!(fp.vertices, vec!["O".to_string()]);
        assert!(fp.edge_midpoints.is_empty());
    }

    #[test]
    fn induced_characters_agree() {
        let ex = d4_example();
        let g = ex.action.group();
        let expected: Vec<i64> = D4_ELEMENTS
            .iter()
            .map(|&n| match n {
                "e" => 2,
                "s2" => -2,
                _ => 0,
            })
            .collect();
        assert_eq!(induced_character(g, &ex.r1).unwrap(), expected);
        assert_eq!(induced_character(g, &ex.r2).unwrap(), expected);
        assert!(induction_equivalent(g, &ex.r1, &ex.r2).unwrap());
        let trivial = Rep1D::trivial(g, ex.r1.subgroup()).unwrap();
        assert!(!induction_equivalent(g, &ex.r1, &trivial).unwrap());
        assert_eq!(induced_character(g, &trivial).unwrap()[g.element("ru").unwrap()], 2);
    }

    #[test]
    fn quotient_structure() {
        let ex = d4_example();
        let (a, b, c) = (ex.lengths.a, ex.lengths.b, ex.lengths.c);
        let q2 = quotient(&ex.parent, &ex.action, &ex.r2).unwrap();
        let q1 = quotient(&ex.parent, &ex.action, &ex.r1).unwrap();
        for q in [&q1, &q2] {
            let g = q.quotient.graph();
            assert!((g.total_length() - q.expected_length(ex.parent.graph())).abs() < 1e-14);
            assert!((g.total_length() - (2.0 * a + b + c)).abs() < 1e-14);
            let o = g.vertex_by_id("O").unwrap();
            assert_eq!(g.vertices()[o].condition, VertexCondition::Dirichlet);
            assert_eq!(q.quotient.lead_count(), 2);
            assert!(q.edge_gauge.iter().all(|&t| t == 1));
        }
        let leads = |q: &crate::symmetry::QuotientResult| -> Vec<String> {
            q.quotient.leads().iter().map(|l| l.id.clone()).collect()
        };
        assert_eq!(leads(&q2), ["l1", "l0"]);
        assert_eq!(leads(&q1), ["l0", "l2"]);
        let mids = |q: &crate::symmetry::QuotientResult| -> Vec<(String, VertexCondition)> {
            q.quotient
                .graph()
                .vertices()
                .iter()
                .filter(|v| v.id.ends_with("#mid"))
                .map(|v| (v.id.clone(), v.condition))
                .collect()
        };
        assert_eq!(
            mids(&q2),
            [
                ("r1#mid".to_string(), VertexCondition::Neumann),
                ("r3#mid".to_string(), VertexCondition::Dirichlet)
            ]
        );
        assert_eq!(
            mids(&q1),
            [
                ("r0#mid".to_string(), VertexCondition::Neumann),
                ("r2#mid".to_string(), VertexCondition::Dirichlet)
            ]
        );
    }

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_GRAPHS {
            let g = builtin_graph(name).unwrap();
            let text = graph_to_json(&g);
            assert_eq!(crate::graph::parse_graph(&text).unwrap(), g, "{name}");
        }
        assert!(builtin_graph("d5").is_err());
    }
}
