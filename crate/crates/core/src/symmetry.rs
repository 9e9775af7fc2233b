//! Finite group actions on metric graphs, one-dimensional `+-1`
//! representations, induced characters and quotient graphs.
//!
//! Conventions: the multiplication table stores `table[g][h] = g h`, and
//! the action composes as `action(g h) = action(g) o action(h)`. A function
//! `f` on the parent belongs to the representation `R` of a subgroup `H`
//! when `f(h y) = R(h) f(y)` for every `h` in `H` and every point `y`.
//!
//! The quotient keeps one representative per orbit and restricts such
//! functions to it:
//!
//! * an edge fixed pointwise by some `h` with `R(h) = -1` carries `f = 0`
//!   and is dropped;
//! * an edge reversed by some `h` is cut at its midpoint, which becomes a
//!   Dirichlet vertex if `R(h) = -1` and a Neumann vertex if `R(h) = +1`;
//! * a vertex fixed by some `h` with `R(h) = -1` becomes Dirichlet, other
//!   vertices keep their parent condition;
//! * edge functions may pick up a sign (the gauge) so that the result
//!   carries plain continuity conditions.
//!
//! Configurations that would need weighted Kirchhoff conditions or a sign
//! twist around a cycle cannot be written with Neumann/Dirichlet vertices
//! and are rejected.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, ExtendedGraph, GraphError, Lead, MetricGraph, Vertex, VertexCondition};

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("unknown group element '{0}'")]
    UnknownElement(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("unknown representation '{0}'")]
    UnknownRepresentation(String),

    #[error("group does not act on the graph:\n{0}")]
    InvalidAction(ActionReport),

    #[error("symmetry-breaking lead set: {0}")]
    SymmetryBreakingLeads(String),

    #[error("quotient not representable with Neumann/Dirichlet conditions: {0}")]
    Unrepresentable(String),

    #[error("symmetry file: {0}")]
    File(String),

    #[error("symmetry file parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type SymmetryResult<T> = Result<T, SymmetryError>;

// ---------------------------------------------------------------------------
// Groups

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteGroup {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
}

impl FiniteGroup {
    /// Validates the table: square, closed, an identity row and column,
    /// every row and column a permutation (unique inverses) and
    /// associativity over all triples.
    pub fn new(elements: Vec<String>, table: Vec<Vec<usize>>) -> SymmetryResult<Self> {
        let n = elements.len();
        if n == 0 {
            return Err(SymmetryError::InvalidGroup("no elements".into()));
        }
        let mut seen = HashSet::new();
        for id in &elements {
            if !seen.insert(id.as_str()) {
                return Err(SymmetryError::InvalidGroup(format!("duplicate element id '{id}'")));
            }
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(SymmetryError::InvalidGroup(format!("table must be {n}x{n}")));
        }
        if table.iter().flatten().any(|&x| x >= n) {
            return Err(SymmetryError::InvalidGroup("table entry out of range".into()));
        }
        for i in 0..n {
            let mut row = vec![false; n];
            let mut col = vec![false; n];
            for j in 0..n {
                row[table[i][j]] = true;
                col[table[j][i]] = true;
            }
            if row.contains(&false) || col.contains(&false) {
                return Err(SymmetryError::InvalidGroup(format!(
                    "row or column of '{}' is not a permutation (inverses not unique)",
                    elements[i]
                )));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| SymmetryError::InvalidGroup("no identity element".into()))?;
        let failure = (0..n * n).into_par_iter().find_map_any(|ab| {
            let (a, b) = (ab / n, ab % n);
            (0..n)
                .find(|&c| table[table[a][b]][c] != table[a][table[b][c]])
                .map(|c| (a, b, c))
        });
        if let Some((a, b, c)) = failure {
            return Err(SymmetryError::InvalidGroup(format!(
                "not associative: ({} {}) {} != {} ({} {})",
                elements[a], elements[b], elements[c], elements[a], elements[b], elements[c]
            )));
        }
        let inverses = (0..n)
            .map(|g| (0..n).find(|&h| table[g][h] == identity).expect("rows are permutations"))
            .collect();
        Ok(Self {
            elements,
            table,
            identity,
            inverses,
        })
    }

    pub fn trivial() -> Self {
        Self {
            elements: vec!["e".into()],
            table: vec![vec![0]],
            identity: 0,
            inverses: vec![0],
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn name(&self, g: usize) -> &str {
        &self.elements[g]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == id)
    }

    pub fn element(&self, id: &str) -> SymmetryResult<usize> {
        self.index_of(id).ok_or_else(|| SymmetryError::UnknownElement(id.to_string()))
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverses[g]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    /// Nonempty, closed under products (hence a subgroup for a finite
    /// group).
    pub fn is_subgroup(&self, subset: &[usize]) -> bool {
        let set: HashSet<usize> = subset.iter().copied().collect();
        !set.is_empty()
            && set.iter().all(|&g| g < self.order())
            && set.iter().all(|&a| set.iter().all(|&b| set.contains(&self.mul(a, b))))
    }

    /// One representative per left coset `x H`, smallest index first.
    pub fn left_coset_reps(&self, subgroup: &[usize]) -> Vec<usize> {
        self.coset_reps(subgroup, |x, h| self.mul(x, h))
    }

    /// One representative per right coset `H y`, smallest index first.
    pub fn right_coset_reps(&self, subgroup: &[usize]) -> Vec<usize> {
        self.coset_reps(subgroup, |y, h| self.mul(h, y))
    }

    fn coset_reps(&self, subgroup: &[usize], product: impl Fn(usize, usize) -> usize) -> Vec<usize> {
        let mut covered = vec![false; self.order()];
        let mut reps = Vec::new();
        for x in 0..self.order() {
            if covered[x] {
                continue;
            }
            reps.push(x);
            for &h in subgroup {
                covered[product(x, h)] = true;
            }
        }
        reps
    }
}

// ---------------------------------------------------------------------------
// Representations

/// A `+-1` valued homomorphism on a subgroup.
#[derive(Clone, Debug, PartialEq)]
pub struct Rep1D {
    subgroup: Vec<usize>,
    /// Indexed by group element, 0 outside the subgroup.
    values: Vec<i8>,
}

impl Rep1D {
    /// The subgroup is the set of elements that receive a value.
    pub fn new(group: &FiniteGroup, assignments: &[(usize, i64)]) -> SymmetryResult<Self> {
        let mut values = vec![0i8; group.order()];
        for &(g, v) in assignments {
            if g >= group.order() {
                return Err(SymmetryError::InvalidRepresentation(format!("element #{g} out of range")));
            }
            if v != 1 && v != -1 {
                return Err(SymmetryError::InvalidRepresentation(format!(
                    "value {v} for element '{}' is not +1 or -1",
                    group.name(g)
                )));
            }
            if values[g] != 0 {
                return Err(SymmetryError::InvalidRepresentation(format!(
                    "element '{}' assigned twice",
                    group.name(g)
                )));
            }
            values[g] = v as i8;
        }
        let subgroup: Vec<usize> = (0..group.order()).filter(|&g| values[g] != 0).collect();
        if !group.is_subgroup(&subgroup) {
            return Err(SymmetryError::InvalidRepresentation(format!(
                "{{{}}} is not a subgroup",
                subgroup.iter().map(|&g| group.name(g)).collect::<Vec<_>>().join(", ")
            )));
        }
        if values[group.identity()] != 1 {
            return Err(SymmetryError::InvalidRepresentation("identity must map to +1".into()));
        }
        for &a in &subgroup {
            for &b in &subgroup {
                if values[group.mul(a, b)] != values[a] * values[b] {
                    return Err(SymmetryError::InvalidRepresentation(format!(
                        "not multiplicative at ({}, {})",
                        group.name(a),
                        group.name(b)
                    )));
                }
            }
        }
        Ok(Self { subgroup, values })
    }

    pub fn from_names(group: &FiniteGroup, assignments: &[(&str, i64)]) -> SymmetryResult<Self> {
        let resolved = assignments
            .iter()
            .map(|&(id, v)| Ok((group.element(id)?, v)))
            .collect::<SymmetryResult<Vec<_>>>()?;
        Self::new(group, &resolved)
    }

    /// The trivial representation of `subgroup`.
    pub fn trivial(group: &FiniteGroup, subgroup: &[usize]) -> SymmetryResult<Self> {
        let assignments: Vec<(usize, i64)> = subgroup.iter().map(|&g| (g, 1)).collect();
        Self::new(group, &assignments)
    }

    pub fn subgroup(&self) -> &[usize] {
        &self.subgroup
    }

    pub fn contains(&self, g: usize) -> bool {
        self.values.get(g).is_some_and(|&v| v != 0)
    }

    /// `R(g)` for `g` in the subgroup.
    pub fn value(&self, g: usize) -> Option<i8> {
        self.values.get(g).copied().filter(|&v| v != 0)
    }

    fn sign(&self, g: usize) -> i8 {
        self.values[g]
    }

    fn group_order(&self) -> usize {
        self.values.len()
    }
}

/// `chi(g) = sum over left coset representatives x with x^-1 g x in H of
/// R(x^-1 g x)`.
pub fn induced_character(group: &FiniteGroup, rep: &Rep1D) -> SymmetryResult<Vec<i64>> {
    if rep.group_order() != group.order() || !group.is_subgroup(rep.subgroup()) {
        return Err(SymmetryError::InvalidRepresentation(
            "representation is not defined on a subgroup of this group".into(),
        ));
    }
    let reps = group.left_coset_reps(rep.subgroup());
    Ok((0..group.order())
        .map(|g| {
            reps.iter()
                .filter_map(|&x| {
                    let conj = group.mul(group.mul(group.inverse(x), g), x);
                    rep.value(conj).map(i64::from)
                })
                .sum()
        })
        .collect())
}

/// Equality of induced characters, which for finite groups is equivalence
/// of the induced representations.
pub fn induction_equivalent(group: &FiniteGroup, rep1: &Rep1D, rep2: &Rep1D) -> SymmetryResult<bool> {
    Ok(induced_character(group, rep1)? == induced_character(group, rep2)?)
}

// ---------------------------------------------------------------------------
// Actions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeImage {
    pub edge: usize,
    pub reversed: bool,
}

/// Permutations of vertices and of directed edges, one per group element,
/// for a fixed graph. Leads follow their attachment vertex: the `r`-th lead
/// at `v` (file order) maps to the `r`-th lead at `g(v)`.
#[derive(Clone, Debug)]
pub struct GraphAction {
    group: FiniteGroup,
    vertex_perm: Vec<Vec<usize>>,
    edge_perm: Vec<Vec<EdgeImage>>,
}

impl GraphAction {
    /// Stores the tables; [`verify_action`] checks them against a graph.
    pub fn new(group: FiniteGroup, vertex_perm: Vec<Vec<usize>>, edge_perm: Vec<Vec<EdgeImage>>) -> Self {
        Self {
            group,
            vertex_perm,
            edge_perm,
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn vertex_image(&self, g: usize, v: usize) -> usize {
        self.vertex_perm[g][v]
    }

    pub fn edge_image(&self, g: usize, e: usize) -> EdgeImage {
        self.edge_perm[g][e]
    }

    /// Image of lead `l` under `g`, `None` when the image vertex has fewer
    /// leads.
    pub fn lead_image(&self, eg: &ExtendedGraph, g: usize, l: usize) -> Option<usize> {
        let leads = eg.leads();
        let v = leads[l].vertex;
        let rank = leads[..l].iter().filter(|x| x.vertex == v).count();
        let w = self.vertex_image(g, v);
        leads
            .iter()
            .enumerate()
            .filter(|(_, x)| x.vertex == w)
            .nth(rank)
            .map(|(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub element: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ActionReport {
    pub violations: Vec<Violation>,
}

impl ActionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn lead_violations(&self) -> Vec<&Violation> {
        self.violations
            .iter()
            .filter(|v| v.message.contains("symmetry-breaking lead set"))
            .collect()
    }
}

impl fmt::Display for ActionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "action valid");
        }
        for v in &self.violations {
            writeln!(f, "element '{}': {}", v.element, v.message)?;
        }
        Ok(())
    }
}

/// Checks every action invariant for every group element.
pub fn verify_action(eg: &ExtendedGraph, action: &GraphAction) -> ActionReport {
    let all: Vec<usize> = (0..action.group.order()).collect();
    verify_elements(eg, action, &all)
}

fn lengths_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn verify_elements(eg: &ExtendedGraph, action: &GraphAction, elements: &[usize]) -> ActionReport {
    let g = eg.graph();
    let group = &action.group;
    let (nv, ne) = (g.vertex_count(), g.edge_count());
    let mut out = Vec::new();
    let mut push = |element: usize, message: String| {
        out.push(Violation {
            element: group.name(element).to_string(),
            message,
        })
    };
    if action.vertex_perm.len() != group.order() || action.edge_perm.len() != group.order() {
        push(group.identity(), "permutation tables do not cover every element".into());
        return ActionReport { violations: out };
    }
    let mut well_formed = true;
    for &el in elements {
        let vp = &action.vertex_perm[el];
        let ep = &action.edge_perm[el];
        if vp.len() != nv || ep.len() != ne {
            push(el, "permutation length does not match the graph".into());
            well_formed = false;
            continue;
        }
        let mut hit = vec![false; nv];
        for &w in vp {
            if w >= nv || std::mem::replace(&mut hit[w], true) {
                push(el, "vertex map is not a permutation".into());
                well_formed = false;
                break;
            }
        }
        let mut hit = vec![false; ne];
        for img in ep {
            if img.edge >= ne || std::mem::replace(&mut hit[img.edge], true) {
                push(el, "edge map is not a permutation".into());
                well_formed = false;
                break;
            }
        }
    }
    if !well_formed {
        return ActionReport { violations: out };
    }
    let vid = |v: usize| g.vertices()[v].id.as_str();
    for &el in elements {
        for (v, vertex) in g.vertices().iter().enumerate() {
            let w = action.vertex_image(el, v);
            if g.vertices()[w].condition != vertex.condition {
                push(
                    el,
                    format!("vertex condition not preserved: '{}' ({}) -> '{}' ({})", vertex.id, vertex.condition, vid(w), g.vertices()[w].condition),
                );
            }
        }
        for (e, edge) in g.edges().iter().enumerate() {
            let img = action.edge_image(el, e);
            let target = &g.edges()[img.edge];
            let (gu, gv) = (action.vertex_image(el, edge.from), action.vertex_image(el, edge.to));
            let (tf, tt) = if img.reversed {
                (target.to, target.from)
            } else {
                (target.from, target.to)
            };
            if (tf, tt) != (gu, gv) {
                push(
                    el,
                    format!(
                        "incidence not respected: edge '{}' ({} -> {}) maps to '{}'{} but its ends map to {} -> {}",
                        edge.id,
                        vid(edge.from),
                        vid(edge.to),
                        target.id,
                        if img.reversed { " reversed" } else { "" },
                        vid(gu),
                        vid(gv)
                    ),
                );
            }
            if !lengths_equal(edge.length, target.length) {
                push(
                    el,
                    format!(
                        "length not preserved: edge '{}' ({}) maps to '{}' ({})",
                        edge.id, edge.length, target.id, target.length
                    ),
                );
            }
        }
        for (l, lead) in eg.leads().iter().enumerate() {
            if action.lead_image(eg, el, l).is_none() {
                let w = action.vertex_image(el, lead.vertex);
                push(
                    el,
                    format!(
                        "symmetry-breaking lead set: lead '{}' at '{}' maps to '{}', which carries {} lead(s) against {}",
                        lead.id,
                        vid(lead.vertex),
                        vid(w),
                        eg.leads_at(w),
                        eg.leads_at(lead.vertex)
                    ),
                );
            }
        }
    }
    let in_set: HashSet<usize> = elements.iter().copied().collect();
    for &a in elements {
        for &b in elements {
            let ab = group.mul(a, b);
            if !in_set.contains(&ab) {
                continue;
            }
            let vertex_ok = (0..nv).all(|v| action.vertex_image(ab, v) == action.vertex_image(a, action.vertex_image(b, v)));
            let edge_ok = (0..ne).all(|e| {
                let first = action.edge_image(b, e);
                let second = action.edge_image(a, first.edge);
                action.edge_image(ab, e)
                    == EdgeImage {
                        edge: second.edge,
                        reversed: first.reversed ^ second.reversed,
                    }
            });
            if !(vertex_ok && edge_ok) {
                push(
                    ab,
                    format!(
                        "composition incompatible: action({}) != action({}) o action({})",
                        group.name(ab),
                        group.name(a),
                        group.name(b)
                    ),
                );
            }
        }
    }
    ActionReport { violations: out }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPoints {
    pub vertices: Vec<String>,
    /// Edges mapped to themselves with reversal; the fixed point sits at
    /// `x = L/2`.
    pub edge_midpoints: Vec<String>,
}

pub fn fixed_points(g: &MetricGraph, action: &GraphAction, element: usize) -> FixedPoints {
    FixedPoints {
        vertices: (0..g.vertex_count())
            .filter(|&v| action.vertex_image(element, v) == v)
            .map(|v| g.vertices()[v].id.clone())
            .collect(),
        edge_midpoints: (0..g.edge_count())
            .filter(|&e| action.edge_image(element, e) == EdgeImage { edge: e, reversed: true })
            .map(|e| g.edges()[e].id.clone())
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Quotients

/// Why a quotient vertex carries its condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ConditionRule {
    /// Same condition as the parent vertex.
    Inherited,
    /// Fixed by `element` with `R(element) = -1`: Dirichlet.
    Antisymmetric { element: String },
    /// Edge midpoint fixed by `element` with `R(element) = +1`: Neumann.
    Symmetric { element: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexProvenance {
    pub quotient_vertex: String,
    /// Parent vertex orbit; empty for midpoint vertices.
    pub parent_orbit: Vec<String>,
    /// Parent edge whose midpoint this vertex is.
    pub midpoint_of: Option<String>,
    pub condition: VertexCondition,
    #[serde(flatten)]
    pub rule: ConditionRule,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeProvenance {
    pub quotient_edge: String,
    pub parent_edge: String,
    pub parent_orbit: Vec<String>,
    /// Portion of the parent edge kept, in its own coordinate.
    pub segment: [f64; 2],
    /// Quotient function on this edge = gauge * parent function.
    pub gauge: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeadProvenance {
    pub quotient_lead: String,
    pub parent_lead: String,
    pub parent_orbit: Vec<String>,
    pub gauge: i8,
}

/// An orbit on which every symmetric function vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dropped {
    pub representative: String,
    pub orbit: Vec<String>,
    pub element: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub subgroup: Vec<String>,
    pub vertices: Vec<VertexProvenance>,
    pub edges: Vec<EdgeProvenance>,
    pub leads: Vec<LeadProvenance>,
    pub dropped_edges: Vec<Dropped>,
    pub dropped_leads: Vec<Dropped>,
}

/// Where a parent edge sits relative to its orbit representative:
/// `parent edge = element . representative`, with the coordinate reversed
/// when `reversed`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeLocation {
    /// Quotient edge carrying the representative, `None` if dropped.
    pub quotient_edge: Option<usize>,
    pub representative: usize,
    pub element: usize,
    pub reversed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeadLocation {
    pub quotient_lead: Option<usize>,
    pub element: usize,
}

#[derive(Clone, Debug)]
pub struct QuotientResult {
    pub quotient: ExtendedGraph,
    pub provenance: Provenance,
    pub rep: Rep1D,
    /// Indexed by parent edge.
    pub edge_locations: Vec<EdgeLocation>,
    /// Indexed by parent lead.
    pub lead_locations: Vec<LeadLocation>,
    /// Indexed by quotient edge: `Some(R(h))` for a cut edge reversed by
    /// `h`, so `f(L - x) = R(h) f(x)` on the parent representative.
    pub cut_signs: Vec<Option<i8>>,
    /// Indexed by quotient edge and lead.
    pub edge_gauge: Vec<i8>,
    pub lead_gauge: Vec<i8>,
}

impl QuotientResult {
    /// `parent total length / |H|`; equals the quotient's total length
    /// when no orbit is dropped.
    pub fn expected_length(&self, parent: &MetricGraph) -> f64 {
        parent.total_length() / self.rep.subgroup().len() as f64
    }
}

struct Orbit {
    representative: usize,
    members: Vec<usize>,
}

/// Orbits in order of first appearance; the representative is the member
/// with the lexicographically smallest id. `element_of[x]` maps the
/// representative to `x`.
fn orbits(
    n: usize,
    subgroup: &[usize],
    image: impl Fn(usize, usize) -> usize,
    id: impl Fn(usize) -> String,
) -> (Vec<Orbit>, Vec<usize>, Vec<usize>) {
    let mut orbit_of = vec![usize::MAX; n];
    let mut element_of = vec![usize::MAX; n];
    let mut out = Vec::new();
    for x in 0..n {
        if orbit_of[x] != usize::MAX {
            continue;
        }
        let mut members: Vec<usize> = subgroup.iter().map(|&h| image(h, x)).collect();
        members.sort_unstable();
        members.dedup();
        let representative = *members.iter().min_by_key(|&&m| id(m)).expect("orbit is nonempty");
        for &m in &members {
            orbit_of[m] = out.len();
            element_of[m] = *subgroup
                .iter()
                .find(|&&h| image(h, representative) == m)
                .expect("member reached from representative");
        }
        out.push(Orbit { representative, members });
    }
    (out, orbit_of, element_of)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EndRef {
    Edge(usize, bool),
    Lead(usize),
}

fn unique_id(base: String, taken: &HashSet<String>) -> String {
    let mut id = base;
    while taken.contains(&id) {
        id.push('#');
    }
    id
}

/// Quotient of `eg` by the subgroup and representation `rep`.
pub fn quotient(eg: &ExtendedGraph, action: &GraphAction, rep: &Rep1D) -> SymmetryResult<QuotientResult> {
    let group = action.group();
    if rep.group_order() != group.order() {
        return Err(SymmetryError::InvalidRepresentation(
            "representation belongs to a different group".into(),
        ));
    }
    let h_set = rep.subgroup().to_vec();
    let report = verify_elements(eg, action, &h_set);
    if !report.is_valid() {
        let leads = report.lead_violations();
        if leads.len() == report.violations.len() {
            return Err(SymmetryError::SymmetryBreakingLeads(
                leads.iter().map(|v| format!("element '{}': {}", v.element, v.message)).collect::<Vec<_>>().join("; "),
            ));
        }
        return Err(SymmetryError::InvalidAction(report));
    }
    let g = eg.graph();
    let leads = eg.leads();
    let name = |h: usize| group.name(h).to_string();

    // vertices
    let (v_orbits, v_orbit_of, v_element) = orbits(
        g.vertex_count(),
        &h_set,
        |h, v| action.vertex_image(h, v),
        |v| g.vertices()[v].id.clone(),
    );
    let mut q_vertices: Vec<Vertex> = Vec::new();
    let mut v_prov = Vec::new();
    for orbit in &v_orbits {
        let rep_v = orbit.representative;
        let parent = &g.vertices()[rep_v];
        let flip = h_set
            .iter()
            .copied()
            .find(|&h| action.vertex_image(h, rep_v) == rep_v && rep.sign(h) == -1);
        let (condition, rule) = match (parent.condition, flip) {
            (VertexCondition::Dirichlet, _) => (VertexCondition::Dirichlet, ConditionRule::Inherited),
            (VertexCondition::Neumann, Some(h)) => (VertexCondition::Dirichlet, ConditionRule::Antisymmetric { element: name(h) }),
            (VertexCondition::Neumann, None) => (VertexCondition::Neumann, ConditionRule::Inherited),
        };
        q_vertices.push(Vertex {
            id: parent.id.clone(),
            condition,
        });
        v_prov.push(VertexProvenance {
            quotient_vertex: parent.id.clone(),
            parent_orbit: orbit.members.iter().map(|&m| g.vertices()[m].id.clone()).collect(),
            midpoint_of: None,
            condition,
            rule,
        });
    }
    let vertex_sign = |v: usize| rep.sign(v_element[v]);

    // edges
    let (e_orbits, e_orbit_of, e_element) = orbits(
        g.edge_count(),
        &h_set,
        |h, e| action.edge_image(h, e).edge,
        |e| g.edges()[e].id.clone(),
    );
    let mut taken: HashSet<String> = g.vertices().iter().map(|v| v.id.clone()).collect();
    let mut q_edges: Vec<Edge> = Vec::new();
    let mut e_prov = Vec::new();
    let mut dropped_edges = Vec::new();
    let mut cut_signs = Vec::new();
    let mut end_signs: Vec<(i8, Option<i8>)> = Vec::new();
    let mut orbit_to_quotient = vec![None; e_orbits.len()];
    let mut midpoints: Vec<(Vertex, VertexProvenance)> = Vec::new();
    for (o, orbit) in e_orbits.iter().enumerate() {
        let rep_e = orbit.representative;
        let edge = &g.edges()[rep_e];
        let orbit_ids: Vec<String> = orbit.members.iter().map(|&m| g.edges()[m].id.clone()).collect();
        let stabilizer: Vec<(usize, bool)> = h_set
            .iter()
            .map(|&h| (h, action.edge_image(h, rep_e)))
            .filter(|(_, img)| img.edge == rep_e)
            .map(|(h, img)| (h, img.reversed))
            .collect();
        if let Some(&(h, _)) = stabilizer.iter().find(|&&(h, rev)| !rev && rep.sign(h) == -1) {
            dropped_edges.push(Dropped {
                representative: edge.id.clone(),
                orbit: orbit_ids,
                element: name(h),
            });
            continue;
        }
        let from = v_orbit_of[edge.from];
        let reversal = stabilizer.iter().find(|&&(_, rev)| rev).map(|&(h, _)| h);
        let (to, length, to_sign) = match reversal {
            Some(h) => {
                let sign = rep.sign(h);
                let (condition, rule) = if sign == -1 {
                    (VertexCondition::Dirichlet, ConditionRule::Antisymmetric { element: name(h) })
                } else {
                    (VertexCondition::Neumann, ConditionRule::Symmetric { element: name(h) })
                };
                let id = unique_id(format!("{}#mid", edge.id), &taken);
                taken.insert(id.clone());
                midpoints.push((
                    Vertex {
                        id: id.clone(),
                        condition,
                    },
                    VertexProvenance {
                        quotient_vertex: id,
                        parent_orbit: Vec::new(),
                        midpoint_of: Some(edge.id.clone()),
                        condition,
                        rule,
                    },
                ));
                (usize::MAX - (midpoints.len() - 1), 0.5 * edge.length, None)
            }
            None => (v_orbit_of[edge.to], edge.length, Some(vertex_sign(edge.to))),
        };
        orbit_to_quotient[o] = Some(q_edges.len());
        cut_signs.push(reversal.map(|h| rep.sign(h)));
        end_signs.push((vertex_sign(edge.from), to_sign));
        e_prov.push(EdgeProvenance {
            quotient_edge: edge.id.clone(),
            parent_edge: edge.id.clone(),
            parent_orbit: orbit_ids,
            segment: [0.0, length],
            gauge: 1,
        });
        q_edges.push(Edge {
            id: edge.id.clone(),
            from,
            to,
            length,
        });
    }
    // midpoint vertices go after the orbit vertices
    let n_orbit_vertices = q_vertices.len();
    for edge in &mut q_edges {
        if edge.to > usize::MAX / 2 {
            edge.to = n_orbit_vertices + (usize::MAX - edge.to);
        }
    }
    for (vertex, prov) in midpoints {
        q_vertices.push(vertex);
        v_prov.push(prov);
    }
    let edge_locations: Vec<EdgeLocation> = (0..g.edge_count())
        .map(|e| {
            let orbit = &e_orbits[e_orbit_of[e]];
            let element = e_element[e];
            EdgeLocation {
                quotient_edge: orbit_to_quotient[e_orbit_of[e]],
                representative: orbit.representative,
                element,
                reversed: action.edge_image(element, orbit.representative).reversed,
            }
        })
        .collect();

    // leads
    let (l_orbits, l_orbit_of, l_element) = orbits(
        leads.len(),
        &h_set,
        |h, l| action.lead_image(eg, h, l).expect("lead orbits verified"),
        |l| leads[l].id.clone(),
    );
    let mut q_leads: Vec<Lead> = Vec::new();
    let mut l_prov = Vec::new();
    let mut dropped_leads = Vec::new();
    let mut lead_signs = Vec::new();
    let mut lead_orbit_to_quotient = vec![None; l_orbits.len()];
    for (o, orbit) in l_orbits.iter().enumerate() {
        let lead = &leads[orbit.representative];
        let orbit_ids: Vec<String> = orbit.members.iter().map(|&m| leads[m].id.clone()).collect();
        let qv = v_orbit_of[lead.vertex];
        if q_vertices[qv].condition == VertexCondition::Dirichlet {
            let element = match &v_prov[qv].rule {
                ConditionRule::Antisymmetric { element } => element.clone(),
                _ => group.name(group.identity()).to_string(),
            };
            dropped_leads.push(Dropped {
                representative: lead.id.clone(),
                orbit: orbit_ids,
                element,
            });
            continue;
        }
        lead_orbit_to_quotient[o] = Some(q_leads.len());
        lead_signs.push(vertex_sign(lead.vertex));
        l_prov.push(LeadProvenance {
            quotient_lead: lead.id.clone(),
            parent_lead: lead.id.clone(),
            parent_orbit: orbit_ids,
            gauge: 1,
        });
        q_leads.push(Lead {
            id: lead.id.clone(),
            vertex: qv,
        });
    }
    let lead_locations: Vec<LeadLocation> = (0..leads.len())
        .map(|l| LeadLocation {
            quotient_lead: lead_orbit_to_quotient[l_orbit_of[l]],
            element: l_element[l],
        })
        .collect();

    // uniform Kirchhoff weights at Neumann vertices
    let live_edge = |e: usize| orbit_to_quotient[e_orbit_of[e]].is_some();
    let live_lead = |l: usize| lead_orbit_to_quotient[l_orbit_of[l]].is_some();
    for (qv, orbit) in v_orbits.iter().enumerate() {
        if q_vertices[qv].condition != VertexCondition::Neumann {
            continue;
        }
        let v = orbit.representative;
        let stab: Vec<usize> = h_set.iter().copied().filter(|&h| action.vertex_image(h, v) == v).collect();
        if stab.len() == 1 {
            continue;
        }
        let mut ends: Vec<EndRef> = Vec::new();
        for (e, edge) in g.edges().iter().enumerate() {
            if !live_edge(e) {
                continue;
            }
            if edge.from == v {
                ends.push(EndRef::Edge(e, false));
            }
            if edge.to == v {
                ends.push(EndRef::Edge(e, true));
            }
        }
        ends.extend((0..leads.len()).filter(|&l| leads[l].vertex == v && live_lead(l)).map(EndRef::Lead));
        let map_end = |h: usize, end: EndRef| match end {
            EndRef::Edge(e, side) => {
                let img = action.edge_image(h, e);
                EndRef::Edge(img.edge, side ^ img.reversed)
            }
            EndRef::Lead(l) => EndRef::Lead(action.lead_image(eg, h, l).expect("lead orbits verified")),
        };
        let mut sizes = HashSet::new();
        for &end in &ends {
            let orbit: HashSet<EndRef> = stab.iter().map(|&h| map_end(h, end)).collect();
            sizes.insert(orbit.len());
        }
        if sizes.len() > 1 {
            return Err(SymmetryError::Unrepresentable(format!(
                "vertex '{}' would need weighted Kirchhoff conditions (edge-end orbits of sizes {:?}); an edge or lead fixed pointwise by a symmetric element meets edges that are not",
                g.vertices()[v].id,
                {
                    let mut s: Vec<_> = sizes.into_iter().collect();
                    s.sort_unstable();
                    s
                }
            )));
        }
    }

    // gauge: pick c_v for Neumann vertices so that every edge end agrees
    let is_neumann = |qv: usize| qv < n_orbit_vertices && q_vertices[qv].condition == VertexCondition::Neumann;
    let mut adjacency: Vec<Vec<(usize, usize, i8)>> = vec![Vec::new(); n_orbit_vertices];
    for (q, edge) in q_edges.iter().enumerate() {
        let (s_from, s_to) = end_signs[q];
        if let Some(s_to) = s_to {
            if is_neumann(edge.from) && is_neumann(edge.to) {
                let relation = s_from * s_to;
                if edge.from == edge.to {
                    if relation != 1 {
                        return Err(SymmetryError::Unrepresentable(format!(
                            "loop '{}' closes with a sign flip",
                            edge.id
                        )));
                    }
                } else {
                    adjacency[edge.from].push((edge.to, q, relation));
                    adjacency[edge.to].push((edge.from, q, relation));
                }
            }
        }
    }
    let mut c: Vec<i8> = vec![0; n_orbit_vertices];
    for start in 0..n_orbit_vertices {
        if c[start] != 0 || !is_neumann(start) {
            continue;
        }
        c[start] = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for &(b, q, relation) in &adjacency[a] {
                let want = c[a] * relation;
                if c[b] == 0 {
                    c[b] = want;
                    queue.push_back(b);
                } else if c[b] != want {
                    return Err(SymmetryError::Unrepresentable(format!(
                        "the representation twists the sign around a cycle through edge '{}'",
                        q_edges[q].id
                    )));
                }
            }
        }
    }
    let edge_gauge: Vec<i8> = q_edges
        .iter()
        .zip(&end_signs)
        .map(|(edge, &(s_from, s_to))| {
            if is_neumann(edge.from) {
                c[edge.from] * s_from
            } else if let Some(s_to) = s_to.filter(|_| is_neumann(edge.to)) {
                c[edge.to] * s_to
            } else {
                1
            }
        })
        .collect();
    let lead_gauge: Vec<i8> = q_leads
        .iter()
        .zip(&lead_signs)
        .map(|(lead, &s)| c[lead.vertex] * s)
        .collect();
    for (p, &t) in e_prov.iter_mut().zip(&edge_gauge) {
        p.gauge = t;
    }
    for (p, &t) in l_prov.iter_mut().zip(&lead_gauge) {
        p.gauge = t;
    }

    let graph = MetricGraph::new(q_vertices, q_edges)?;
    let quotient = ExtendedGraph::new_relaxed(graph, q_leads)?;
    Ok(QuotientResult {
        quotient,
        provenance: Provenance {
            subgroup: h_set.iter().map(|&h| name(h)).collect(),
            vertices: v_prov,
            edges: e_prov,
            leads: l_prov,
            dropped_edges,
            dropped_leads,
        },
        rep: rep.clone(),
        edge_locations,
        lead_locations,
        cut_signs,
        edge_gauge,
        lead_gauge,
    })
}

// ---------------------------------------------------------------------------
// Symmetry description files

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetryFile {
    elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    identity: Option<String>,
    table: Vec<Vec<String>>,
    vertex_perm: BTreeMap<String, BTreeMap<String, String>>,
    edge_perm: BTreeMap<String, BTreeMap<String, EdgeImageRecord>>,
    #[serde(default)]
    reps: BTreeMap<String, RepRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeImageRecord {
    to: String,
    reversed: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepRecord {
    subgroup: Vec<String>,
    values: BTreeMap<String, i64>,
}

/// A group action on a specific graph together with named
/// representations.
#[derive(Clone, Debug)]
pub struct Symmetry {
    pub action: GraphAction,
    pub reps: Vec<(String, Rep1D)>,
}

impl Symmetry {
    pub fn rep(&self, name: &str) -> SymmetryResult<&Rep1D> {
        self.reps
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r)
            .ok_or_else(|| SymmetryError::UnknownRepresentation(name.to_string()))
    }
}

pub fn parse_symmetry(text: &str, eg: &ExtendedGraph) -> SymmetryResult<Symmetry> {
    let file: SymmetryFile = serde_json::from_str(text).map_err(|e| SymmetryError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = file.elements.len();
    let index = |id: &str| {
        file.elements
            .iter()
            .position(|e| e == id)
            .ok_or_else(|| SymmetryError::UnknownElement(id.to_string()))
    };
    let table = file
        .table
        .iter()
        .map(|row| row.iter().map(|id| index(id)).collect::<SymmetryResult<Vec<_>>>())
        .collect::<SymmetryResult<Vec<_>>>()?;
    let group = FiniteGroup::new(file.elements.clone(), table)?;
    if let Some(id) = &file.identity {
        if group.element(id)? != group.identity() {
            return Err(SymmetryError::InvalidGroup(format!("'{id}' is not the identity of the table")));
        }
    }
    let g = eg.graph();
    let mut vertex_perm = Vec::with_capacity(n);
    let mut edge_perm = Vec::with_capacity(n);
    for el in &file.elements {
        let vmap = file
            .vertex_perm
            .get(el)
            .ok_or_else(|| SymmetryError::File(format!("vertex_perm has no entry for element '{el}'")))?;
        if vmap.len() != g.vertex_count() {
            return Err(SymmetryError::File(format!(
                "vertex_perm['{el}'] maps {} vertices, graph has {}",
                vmap.len(),
                g.vertex_count()
            )));
        }
        let mut perm = Vec::with_capacity(g.vertex_count());
        for v in g.vertices() {
            let target = vmap
                .get(&v.id)
                .ok_or_else(|| SymmetryError::File(format!("vertex_perm['{el}'] misses vertex '{}'", v.id)))?;
            perm.push(
                g.vertex_by_id(target)
                    .ok_or_else(|| SymmetryError::File(format!("vertex_perm['{el}'] names unknown vertex '{target}'")))?,
            );
        }
        vertex_perm.push(perm);
        let emap = file
            .edge_perm
            .get(el)
            .ok_or_else(|| SymmetryError::File(format!("edge_perm has no entry for element '{el}'")))?;
        if emap.len() != g.edge_count() {
            return Err(SymmetryError::File(format!(
                "edge_perm['{el}'] maps {} edges, graph has {}",
                emap.len(),
                g.edge_count()
            )));
        }
        let mut perm = Vec::with_capacity(g.edge_count());
        for e in g.edges() {
            let rec = emap
                .get(&e.id)
                .ok_or_else(|| SymmetryError::File(format!("edge_perm['{el}'] misses edge '{}'", e.id)))?;
            perm.push(EdgeImage {
                edge: g
                    .edge_by_id(&rec.to)
                    .ok_or_else(|| SymmetryError::File(format!("edge_perm['{el}'] names unknown edge '{}'", rec.to)))?,
                reversed: rec.reversed,
            });
        }
        edge_perm.push(perm);
    }
    for key in file.vertex_perm.keys().chain(file.edge_perm.keys()) {
        index(key)?;
    }
    let action = GraphAction::new(group, vertex_perm, edge_perm);
    let mut reps = Vec::new();
    for (name, rec) in &file.reps {
        let listed: HashSet<&str> = rec.subgroup.iter().map(String::as_str).collect();
        let valued: HashSet<&str> = rec.values.keys().map(String::as_str).collect();
        if listed != valued {
            return Err(SymmetryError::InvalidRepresentation(format!(
                "'{name}': values must be given for exactly the subgroup elements"
            )));
        }
        let assignments = rec
            .values
            .iter()
            .map(|(id, &v)| Ok((action.group().element(id)?, v)))
            .collect::<SymmetryResult<Vec<_>>>()?;
        let rep = Rep1D::new(action.group(), &assignments)
            .map_err(|e| SymmetryError::InvalidRepresentation(format!("'{name}': {e}")))?;
        reps.push((name.clone(), rep));
    }
    Ok(Symmetry { action, reps })
}

pub fn load_symmetry(path: impl AsRef<Path>, eg: &ExtendedGraph) -> SymmetryResult<Symmetry> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SymmetryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_symmetry(&text, eg)
}

/// Pretty JSON with a trailing newline.
pub fn symmetry_to_json(sym: &Symmetry, eg: &ExtendedGraph) -> String {
    let group = sym.action.group();
    let g = eg.graph();
    let mut vertex_perm = BTreeMap::new();
    let mut edge_perm = BTreeMap::new();
    for (el, name) in group.elements().iter().enumerate() {
        vertex_perm.insert(
            name.clone(),
            g.vertices()
                .iter()
                .enumerate()
                .map(|(v, vx)| (vx.id.clone(), g.vertices()[sym.action.vertex_image(el, v)].id.clone()))
                .collect(),
        );
        edge_perm.insert(
            name.clone(),
            g.edges()
                .iter()
                .enumerate()
                .map(|(e, ex)| {
                    let img = sym.action.edge_image(el, e);
                    (
                        ex.id.clone(),
                        EdgeImageRecord {
                            to: g.edges()[img.edge].id.clone(),
                            reversed: img.reversed,
                        },
                    )
                })
                .collect(),
        );
    }
    let file = SymmetryFile {
        elements: group.elements().to_vec(),
        identity: Some(group.name(group.identity()).to_string()),
        table: group
            .table()
            .iter()
            .map(|row| row.iter().map(|&x| group.name(x).to_string()).collect())
            .collect(),
        vertex_perm,
        edge_perm,
        reps: sym
            .reps
            .iter()
            .map(|(name, rep)| {
                (
                    name.clone(),
                    RepRecord {
                        subgroup: rep.subgroup().iter().map(|&h| group.name(h).to_string()).collect(),
                        values: rep
                            .subgroup()
                            .iter()
                            .map(|&h| (group.name(h).to_string(), i64::from(rep.sign(h))))
                            .collect(),
                    },
                )
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("symmetry records always serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{spectrum, SpectrumOptions};

    fn z2() -> FiniteGroup {
        FiniteGroup::new(vec!["e".into(), "r".into()], vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    /// Interval a -- b of length 2 with the reflection swapping its ends.
    fn reflected_interval(cond: VertexCondition) -> (ExtendedGraph, GraphAction) {
        let g = MetricGraph::builder()
            .vertex("a", cond)
            .vertex("b", cond)
            .edge("e", "a", "b", 2.0)
            .build()
            .unwrap();
        let action = GraphAction::new(
            z2(),
            vec![vec![0, 1], vec![1, 0]],
            vec![
                vec![EdgeImage { edge: 0, reversed: false }],
                vec![EdgeImage { edge: 0, reversed: true }],
            ],
        );
        (g.into(), action)
    }

    #[test]
    fn group_validation() {
        assert!(matches!(
            FiniteGroup::new(vec!["a".into(), "b".into()], vec![vec![0, 1], vec![0, 1]]),
            Err(SymmetryError::InvalidGroup(_))
        ));
        assert!(FiniteGroup::new(vec!["a".into()], vec![vec![0, 0]]).is_err());
        // a Latin square without associativity: the quasigroup of order 5
        // below has identity 0 but (1*1)*2 != 1*(1*2)
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let names = (0..5).map(|i| format!("g{i}")).collect();
        let err = FiniteGroup::new(names, t).unwrap_err();
        assert!(err.to_string().contains("not associative"), "{err}");
        let g = z2();
        assert_eq!(g.identity(), 0);
        assert_eq!(g.inverse(1), 1);
    }

    #[test]
    fn rep_validation() {
        let g = z2();
        assert!(Rep1D::from_names(&g, &[("e", 1), ("r", -1)]).is_ok());
        let err = Rep1D::from_names(&g, &[("e", 1), ("r", 2)]).unwrap_err();
        assert!(err.to_string().contains("not +1 or -1"));
        assert!(Rep1D::from_names(&g, &[("e", -1), ("r", -1)]).is_err());
        assert!(Rep1D::from_names(&g, &[("r", 1)]).is_err());
    }

    #[test]
    fn trivial_subgroup_quotient_is_identity() {
        let g = MetricGraph::builder()
            .neumann("c")
            .dirichlet("x")
            .neumann("y")
            .edge("e1", "c", "x", 1.0)
            .edge("e2", "c", "y", 1.7)
            .lead("l", "c")
            .build_extended()
            .unwrap();
        let group = FiniteGroup::trivial();
        let action = GraphAction::new(
            group.clone(),
            vec![vec![0, 1, 2]],
            vec![vec![EdgeImage { edge: 0, reversed: false }, EdgeImage { edge: 1, reversed: false }]],
        );
        let rep = Rep1D::trivial(&group, &[0]).unwrap();
        let q = quotient(&g, &action, &rep).unwrap();
        assert_eq!(q.quotient, g);
        assert_eq!(crate::graph::graph_to_json(&q.quotient), crate::graph::graph_to_json(&g));
    }

    #[test]
    fn antisymmetric_half_interval() {
        let (g, action) = reflected_interval(VertexCondition::Neumann);
        let rep = Rep1D::from_names(action.group(), &[("e", 1), ("r", -1)]).unwrap();
        let q = quotient(&g, &action, &rep).unwrap();
        let qg = q.quotient.graph();
        assert_eq!(qg.edge_count(), 1);
        assert_eq!(qg.edges()[0].length, 1.0);
        let mid = &qg.vertices()[qg.edges()[0].to];
        assert_eq!(mid.condition, VertexCondition::Dirichlet);
        assert_eq!(qg.vertices()[qg.edges()[0].from].id, "a");
        assert_eq!(
            q.provenance.vertices[1].rule,
            ConditionRule::Antisymmetric { element: "r".into() }
        );
        assert!((qg.total_length() - q.expected_length(g.graph())).abs() < 1e-15);
    }

    #[test]
    fn involution_splits_spectrum() {
        // Neumann interval of length 2: spectrum n pi / 2; the symmetric
        // half (Neumann-Neumann, length 1) carries even n, the antisymmetric
        // half (Neumann-Dirichlet) odd n
        let (g, action) = reflected_interval(VertexCondition::Neumann);
        let plus = Rep1D::from_names(action.group(), &[("e", 1), ("r", 1)]).unwrap();
        let minus = Rep1D::from_names(action.group(), &[("e", 1), ("r", -1)]).unwrap();
        let opts = SpectrumOptions::with_scan_step(0.05);
        let full = spectrum(g.graph(), 0.1, 12.0, &opts).unwrap().expanded();
        let mut parts = spectrum(quotient(&g, &action, &plus).unwrap().quotient.graph(), 0.1, 12.0, &opts)
            .unwrap()
            .expanded();
        parts.extend(
            spectrum(quotient(&g, &action, &minus).unwrap().quotient.graph(), 0.1, 12.0, &opts)
                .unwrap()
                .expanded(),
        );
        parts.sort_by(f64::total_cmp);
        assert_eq!(full.len(), parts.len());
        for (a, b) in full.iter().zip(&parts) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pointwise_fixed_edge_is_dropped_or_rejected() {
        // star with centre c and three Neumann tips; r swaps t1 and t2 and
        // fixes the edge to t0 pointwise
        let g: ExtendedGraph = MetricGraph::builder()
            .neumann("c")
            .neumann("t0")
            .neumann("t1")
            .neumann("t2")
            .edge("e0", "c", "t0", 1.0)
            .edge("e1", "c", "t1", 1.3)
            .edge("e2", "c", "t2", 1.3)
            .build()
            .unwrap()
            .into();
        let id = |e| EdgeImage { edge: e, reversed: false };
        let action = GraphAction::new(
            z2(),
            vec![vec![0, 1, 2, 3], vec![0, 1, 3, 2]],
            vec![vec![id(0), id(1), id(2)], vec![id(0), id(2), id(1)]],
        );
        let minus = Rep1D::from_names(action.group(), &[("e", 1), ("r", -1)]).unwrap();
        let q = quotient(&g, &action, &minus).unwrap();
        assert_eq!(q.provenance.dropped_edges.len(), 1);
        assert_eq!(q.quotient.graph().edge_count(), 1);
        let plus = Rep1D::from_names(action.group(), &[("e", 1), ("r", 1)]).unwrap();
        assert!(matches!(
            quotient(&g, &action, &plus),
            Err(SymmetryError::Unrepresentable(_))
        ));
    }

    #[test]
    fn lead_orbits_checked() {
        let (g, action) = reflected_interval(VertexCondition::Neumann);
        let with_one = crate::graph::attach_leads(g.graph(), &["a"]).unwrap();
        let report = verify_action(&with_one, &action);
        assert!(!report.is_valid());
        let rep = Rep1D::from_names(action.group(), &[("e", 1), ("r", 1)]).unwrap();
        assert!(matches!(
            quotient(&with_one, &action, &rep),
            Err(SymmetryError::SymmetryBreakingLeads(_))
        ));
        let with_two = crate::graph::attach_leads(g.graph(), &["a", "b"]).unwrap();
        assert!(verify_action(&with_two, &action).is_valid());
        let q = quotient(&with_two, &action, &rep).unwrap();
        assert_eq!(q.quotient.lead_count(), 1);
    }

    #[test]
    fn fixed_points_of_reflection() {
        let (g, action) = reflected_interval(VertexCondition::Neumann);
        let fp = fixed_points(g.graph(), &action, 1);
        assert!(fp.vertices.is_empty());
        assert_eq!(fp.edge_midpoints, vec!["e".to_string()]);
        let fp = fixed_points(g.graph(), &action, 0);
        assert_eq!(fp.vertices.len(), 2);
        assert!(fp.edge_midpoints.is_empty());
    }

    #[test]
    fn induced_from_whole_group_is_trivial_character() {
        let g = z2();
        let rep = Rep1D::trivial(&g, &[0, 1]).unwrap();
        assert_eq!(induced_character(&g, &rep).unwrap(), vec![1, 1]);
        let sub = Rep1D::trivial(&g, &[0]).unwrap();
        assert_eq!(induced_character(&g, &sub).unwrap(), vec![2, 0]);
    }

    #[test]
    fn symmetry_file_round_trip_and_rejections() {
        let (g, action) = reflected_interval(VertexCondition::Neumann);
        let rep = Rep1D::from_names(action.group(), &[("e", 1), ("r", -1)]).unwrap();
        let sym = Symmetry {
            action,
            reps: vec![("odd".into(), rep)],
        };
        let text = symmetry_to_json(&sym, &g);
        let back = parse_symmetry(&text, &g).unwrap();
        assert_eq!(symmetry_to_json(&back, &g), text);
        assert_eq!(back.rep("odd").unwrap().value(1), Some(-1));

        let bad = text.replace("\"r\": -1", "\"r\": 2");
        assert_ne!(bad, text);
        let err = parse_symmetry(&bad, &g).unwrap_err();
        assert!(matches!(err, SymmetryError::InvalidRepresentation(_)), "{err}");

        let unknown = text.replacen("\"elements\"", "\"extra\": 1, \"elements\"", 1);
        assert!(matches!(parse_symmetry(&unknown, &g), Err(SymmetryError::Parse { .. })));
    }
}
