//! Cross-graph comparisons: spectra, transplantation-conjugated scattering
//! matrices, pole sets, the symmetry-breaking experiment and
//! eigenfunction transplantation between quotients.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{attach_leads, ExtendedGraph, GraphError, MetricGraph, VertexCondition};
use crate::linalg::{condition_number, max_abs, CMatrix, C64, I};
use crate::scattering::{resonances, smatrix, C64Serde, Rectangle, ResonanceOptions, ResonanceSet, ScatteringError};
use crate::spectral::{Eigenfunction, SpectralError, Spectrum};
use crate::symmetry::{quotient, GraphAction, QuotientResult, Rep1D, SymmetryError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("search intervals differ: ({0}, {1}) vs ({2}, {3})")]
    IntervalMismatch(f64, f64, f64, f64),

    #[error("search rectangles differ")]
    RectangleMismatch,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("transplantation matrix is singular")]
    Singular,

    #[error("symmetric lead set breaks the orbit structure: {0}")]
    SymmetricLeadsBroken(String),

    #[error("lead set is not symmetry-breaking: it forms whole orbits under both subgroups")]
    NotSymmetryBreaking,

    #[error("cannot attach a lead at '{vertex}' of quotient {quotient}: {reason}")]
    LeadPlacement {
        vertex: String,
        quotient: usize,
        reason: String,
    },

    #[error("incomplete block map: {0}")]
    IncompleteBlockMap(String),

    #[error(transparent)]
    Scattering(#[from] ScatteringError),

    #[error(transparent)]
    Spectral(#[from] SpectralError),

    #[error(transparent)]
    Symmetry(#[from] SymmetryError),

    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type AnalysisResult<T> = Result<T, AnalysisError>;

// ---------------------------------------------------------------------------
// Transplantation

/// An invertible lead-space (or block-space) matrix.
#[derive(Clone, Debug)]
pub struct Transplantation {
    matrix: CMatrix,
    inverse: CMatrix,
    condition: f64,
}

impl Transplantation {
    pub fn new(matrix: CMatrix) -> AnalysisResult<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(AnalysisError::Dimension(format!(
                "transplantation must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let condition = condition_number(&matrix);
        if !condition.is_finite() || condition > 1e12 {
            return Err(AnalysisError::Singular);
        }
        let inverse = matrix.clone().try_inverse().ok_or(AnalysisError::Singular)?;
        Ok(Self {
            matrix,
            inverse,
            condition,
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> AnalysisResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(AnalysisError::Dimension("transplantation rows must form a square matrix".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(CMatrix::identity(n, n)).expect("identity is invertible")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonKind {
    Spectra,
    SmatrixConjugation,
    Poles,
}

impl std::fmt::Display for ComparisonKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Spectra => "spectra",
            Self::SmatrixConjugation => "smatrix-conjugation",
            Self::Poles => "poles",
        })
    }
}

/// One compared item. For spectra and poles `left`/`right` are the paired
/// values (one side missing when unpaired); for conjugation `left` is the
/// evaluation point and `right` is empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub left: Option<C64Serde>,
    pub right: Option<C64Serde>,
    /// `+inf` for unpaired items (serialized as `null`).
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub kind: ComparisonKind,
    pub tolerance: f64,
    pub deviations: Vec<Deviation>,
    pub max_deviation: f64,
    pub pass: bool,
    pub notes: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl ComparisonReport {
    fn new(kind: ComparisonKind, tolerance: f64, deviations: Vec<Deviation>) -> Self {
        let max_deviation = deviations.iter().map(|d| d.deviation).fold(0.0, f64::max);
        Self {
            kind,
            tolerance,
            pass: max_deviation < tolerance,
            max_deviation,
            deviations,
            notes: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn unpaired(&self) -> usize {
        self.deviations.iter().filter(|d| d.left.is_none() || d.right.is_none()).count()
    }

    /// Paired items whose separation is at least `threshold`.
    pub fn separations_above(&self, threshold: f64) -> Vec<f64> {
        self.deviations
            .iter()
            .filter(|d| d.deviation.is_finite() && d.deviation >= threshold)
            .map(|d| d.deviation)
            .collect()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports always serialize");
        out.push('\n');
        out
    }

    /// Aligned columns for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} {} (max deviation {:.3e}, tolerance {:.3e})", self.kind, self.max_deviation, self.tolerance);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "  {k:<14} {v}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "  note: {note}");
        }
        let fmt = |z: Option<C64Serde>| match z {
            Some(z) if self.kind == ComparisonKind::Spectra => format!("{:>24.16}", z.re),
            Some(z) => format!("{:>22.14} {:>+22.14}i", z.re, z.im),
            None => format!("{:>24}", "-"),
        };
        let (l, r) = match self.kind {
            ComparisonKind::SmatrixConjugation => ("k", ""),
            _ => ("left", "right"),
        };
        let _ = writeln!(out, "  {:>4}  {:<24} {:<24} {:>12}", "#", l, r, "deviation");
        for (i, d) in self.deviations.iter().enumerate() {
            let right = if self.kind == ComparisonKind::SmatrixConjugation {
                String::new()
            } else {
                fmt(d.right)
            };
            let _ = writeln!(out, "  {:>4}  {} {} {:>12.3e}", i, fmt(d.left), right, d.deviation);
        }
        out
    }
}

fn real(x: f64) -> C64Serde {
    C64Serde { re: x, im: 0.0 }
}

/// Greedy monotone pairing of two sorted lists.
fn pair_sorted(a: &[f64], b: &[f64]) -> Vec<Deviation> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let d = (a[i] - b[j]).abs();
        let skip_b = j + 1 < b.len() && (a[i] - b[j + 1]).abs() < d;
        let skip_a = i + 1 < a.len() && (a[i + 1] - b[j]).abs() < d;
        if skip_b && !skip_a {
            out.push(Deviation {
                left: None,
                right: Some(real(b[j])),
                deviation: f64::INFINITY,
            });
            j += 1;
        } else if skip_a && !skip_b {
            out.push(Deviation {
                left: Some(real(a[i])),
                right: None,
                deviation: f64::INFINITY,
            });
            i += 1;
        } else {
            out.push(Deviation {
                left: Some(real(a[i])),
                right: Some(real(b[j])),
                deviation: d,
            });
            i += 1;
            j += 1;
        }
    }
    out.extend(a[i..].iter().map(|&x| Deviation {
        left: Some(real(x)),
        right: None,
        deviation: f64::INFINITY,
    }));
    out.extend(b[j..].iter().map(|&x| Deviation {
        left: None,
        right: Some(real(x)),
        deviation: f64::INFINITY,
    }));
    out
}

/// Pairs eigenvalues (with multiplicity) in increasing order.
pub fn compare_spectra(s1: &Spectrum, s2: &Spectrum, tol: f64) -> AnalysisResult<ComparisonReport> {
    if s1.k_min != s2.k_min || s1.k_max != s2.k_max {
        return Err(AnalysisError::IntervalMismatch(s1.k_min, s1.k_max, s2.k_min, s2.k_max));
    }
    let deviations = pair_sorted(&s1.expanded(), &s2.expanded());
    let mut report = ComparisonReport::new(ComparisonKind::Spectra, tol, deviations)
        .with_metadata("interval", format!("({}, {})", s1.k_min, s1.k_max))
        .with_metadata("counts", format!("{} / {}", s1.count(), s2.count()));
    if s1.zero_modes != s2.zero_modes {
        report.notes.push(format!("k = 0 multiplicities differ: {} vs {}", s1.zero_modes, s2.zero_modes));
        report.pass = false;
    }
    Ok(report)
}

fn check_leads(eg1: &ExtendedGraph, eg2: &ExtendedGraph, t: &Transplantation) -> AnalysisResult<()> {
    if eg1.lead_count() != t.dim() || eg2.lead_count() != t.dim() {
        return Err(AnalysisError::Dimension(format!(
            "lead counts {} and {} must both equal the transplantation size {}",
            eg1.lead_count(),
            eg2.lead_count(),
            t.dim()
        )));
    }
    Ok(())
}

/// `max |T^-1 S2(k) T - S1(k)|`.
pub fn conjugation_residual(eg1: &ExtendedGraph, eg2: &ExtendedGraph, t: &Transplantation, k: C64) -> AnalysisResult<f64> {
    check_leads(eg1, eg2, t)?;
    let s1 = smatrix(eg1, k)?.s;
    let s2 = smatrix(eg2, k)?.s;
    Ok(max_abs(&(t.inverse() * s2 * t.matrix() - s1)))
}

/// [`conjugation_residual`] over a set of wavenumbers. Points where either
/// scattering matrix sits on a pole are skipped and listed in the notes.
pub fn compare_smatrix(
    eg1: &ExtendedGraph,
    eg2: &ExtendedGraph,
    t: &Transplantation,
    ks: &[C64],
    tol: f64,
) -> AnalysisResult<ComparisonReport> {
    check_leads(eg1, eg2, t)?;
    let results: Vec<(C64, Result<f64, AnalysisError>)> =
        ks.par_iter().map(|&k| (k, conjugation_residual(eg1, eg2, t, k))).collect();
    let mut deviations = Vec::new();
    let mut notes = Vec::new();
    for (k, r) in results {
        match r {
            Ok(d) => deviations.push(Deviation {
                left: Some(k.into()),
                right: None,
                deviation: d,
            }),
            Err(AnalysisError::Scattering(ScatteringError::PoleProximity { .. })) => {
                notes.push(format!("skipped k = {} {:+}i: pole proximity", k.re, k.im))
            }
            Err(e) => return Err(e),
        }
    }
    let mut report = ComparisonReport::new(ComparisonKind::SmatrixConjugation, tol, deviations)
        .with_metadata("points", ks.len().to_string())
        .with_metadata("condition", format!("{:.6e}", t.condition_number()));
    report.notes = notes;
    Ok(report)
}

/// Greedy nearest-neighbour matching: all cross distances sorted
/// ascending, each pole used at most once. Poles count with multiplicity.
pub fn compare_poles(r1: &ResonanceSet, r2: &ResonanceSet, tol: f64) -> AnalysisResult<ComparisonReport> {
    if r1.rect != r2.rect {
        return Err(AnalysisError::RectangleMismatch);
    }
    let expand = |r: &ResonanceSet| -> Vec<C64> {
        r.poles
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.k(), p.multiplicity))
            .collect()
    };
    let (a, b) = (expand(r1), expand(r2));
    let mut pairs: Vec<(f64, usize, usize)> = a
        .iter()
        .enumerate()
        .flat_map(|(i, x)| b.iter().enumerate().map(move |(j, y)| ((x - y).norm(), i, j)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut matched = Vec::new();
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matched.push((i, j, d));
        }
    }
    debug_assert!({
        let mut js: Vec<usize> = matched.iter().map(|m| m.1).collect();
        js.sort_unstable();
        js.windows(2).all(|w| w[0] != w[1])
    });
    matched.sort_by(|x, y| a[x.0].re.total_cmp(&a[y.0].re));
    let mut deviations: Vec<Deviation> = matched
        .iter()
        .map(|&(i, j, d)| Deviation {
            left: Some(a[i].into()),
            right: Some(b[j].into()),
            deviation: d,
        })
        .collect();
    let mut notes = Vec::new();
    for (i, z) in a.iter().enumerate().filter(|(i, _)| !used_a[*i]) {
        notes.push(format!("unmatched pole of the first graph #{i}: {} {:+}i", z.re, z.im));
        deviations.push(Deviation {
            left: Some((*z).into()),
            right: None,
            deviation: f64::INFINITY,
        });
    }
    for (j, z) in b.iter().enumerate().filter(|(j, _)| !used_b[*j]) {
        notes.push(format!("unmatched pole of the second graph #{j}: {} {:+}i", z.re, z.im));
        deviations.push(Deviation {
            left: None,
            right: Some((*z).into()),
            deviation: f64::INFINITY,
        });
    }
    let rect = r1.rect;
    let mut report = ComparisonReport::new(ComparisonKind::Poles, tol, deviations)
        .with_metadata(
            "rectangle",
            format!("[{}, {}] x [{}, {}]", rect.re_min, rect.re_max, rect.im_min, rect.im_max),
        )
        .with_metadata("counts", format!("{} / {}", a.len(), b.len()));
    report.notes = notes;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Symmetry breaking

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub symmetric: ComparisonReport,
    pub broken: ComparisonReport,
    /// Largest finite separation between matched poles of the broken pair.
    pub broken_max_separation: Option<f64>,
}

fn provenance_vertex(q: &QuotientResult, parent_vertex: &str) -> Option<String> {
    q.provenance
        .vertices
        .iter()
        .find(|v| v.parent_orbit.iter().any(|p| p == parent_vertex))
        .map(|v| v.quotient_vertex.clone())
}

/// Pole comparison for quotients of the parent with `symmetric_leads`
/// against the same comparison with `broken_leads` attached directly to
/// the compact quotients at the vertices carrying their parent orbits.
#[allow(clippy::too_many_arguments)]
pub fn symmetry_breaking_experiment(
    parent: &MetricGraph,
    action: &GraphAction,
    rep1: &Rep1D,
    rep2: &Rep1D,
    symmetric_leads: &[&str],
    broken_leads: &[&str],
    rect: &Rectangle,
    opts: &ResonanceOptions,
    tol: f64,
) -> AnalysisResult<ExperimentReport> {
    let sym_parent = attach_leads(parent, symmetric_leads)?;
    let quotients = |eg: &ExtendedGraph| -> AnalysisResult<(QuotientResult, QuotientResult)> {
        let q1 = quotient(eg, action, rep1);
        let q2 = quotient(eg, action, rep2);
        Ok((q1?, q2?))
    };
    let (q1, q2) = quotients(&sym_parent).map_err(|e| match e {
        AnalysisError::Symmetry(SymmetryError::SymmetryBreakingLeads(m)) => AnalysisError::SymmetricLeadsBroken(m),
        other => other,
    })?;
    let (p1, p2) = rayon::join(|| resonances(&q1.quotient, rect, opts), || resonances(&q2.quotient, rect, opts));
    let symmetric = compare_poles(&p1?, &p2?, tol)?.with_metadata("leads", symmetric_leads.join(","));

    if broken_leads.is_empty() {
        let broken = ComparisonReport::new(ComparisonKind::Poles, tol, Vec::new()).with_metadata("leads", "");
        return Ok(ExperimentReport {
            symmetric,
            broken,
            broken_max_separation: None,
        });
    }
    let broken_parent = attach_leads(parent, broken_leads)?;
    if quotients(&broken_parent).is_ok() {
        return Err(AnalysisError::NotSymmetryBreaking);
    }
    let compact = ExtendedGraph::compact(parent.clone());
    let (c1, c2) = quotients(&compact)?;
    let mut extended = Vec::new();
    for (index, q) in [(1, &c1), (2, &c2)] {
        let mut ids = Vec::new();
        for v in broken_leads {
            let qv = provenance_vertex(q, v).ok_or_else(|| AnalysisError::LeadPlacement {
                vertex: v.to_string(),
                quotient: index,
                reason: "no quotient vertex carries this parent vertex".into(),
            })?;
            let g = q.quotient.graph();
            if g.vertices()[g.vertex_by_id(&qv).expect("provenance names quotient vertices")].condition
                == VertexCondition::Dirichlet
            {
                return Err(AnalysisError::LeadPlacement {
                    vertex: v.to_string(),
                    quotient: index,
                    reason: format!("quotient vertex '{qv}' is Dirichlet"),
                });
            }
            ids.push(qv);
        }
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        extended.push(attach_leads(q.quotient.graph(), &refs)?);
    }
    let (b1, b2) = rayon::join(|| resonances(&extended[0], rect, opts), || resonances(&extended[1], rect, opts));
    let broken = compare_poles(&b1?, &b2?, tol)?.with_metadata("leads", broken_leads.join(","));
    let broken_max_separation = broken
        .deviations
        .iter()
        .map(|d| d.deviation)
        .filter(|d| d.is_finite())
        .reduce(f64::max);
    Ok(ExperimentReport {
        symmetric,
        broken,
        broken_max_separation,
    })
}

// ---------------------------------------------------------------------------
// Eigenfunction transplantation

/// A piece of a quotient edge: the block function at parameter
/// `t in [0, |end - start|]` equals `sign * f_q(edge, start + t * dir)`
/// with `dir = sign(end - start)`. `edge = None` marks a piece on which
/// every function of the sector vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub edge: Option<usize>,
    pub start: f64,
    pub end: f64,
    pub sign: i8,
}

impl Segment {
    fn length(&self) -> f64 {
        (self.end - self.start).abs()
    }

    fn dir(&self) -> f64 {
        if self.end >= self.start {
            1.0
        } else {
            -1.0
        }
    }

    fn at(&self, t: f64) -> f64 {
        self.start + self.dir() * t
    }
}

/// Building blocks of two quotients. Every block is a list of segments,
/// one per piece of a common reference domain, so segment `p` of any
/// block is parametrized by the same interval.
#[derive(Clone, Debug, Serialize)]
pub struct BlockMap {
    pub blocks1: Vec<Vec<Segment>>,
    pub blocks2: Vec<Vec<Segment>>,
    /// Block-space transplantation implied by the construction; `None`
    /// for hand-made maps.
    #[serde(skip)]
    pub derived: Option<CMatrix>,
}

impl BlockMap {
    /// Each graph is one block made of its whole edges.
    pub fn identity(g: &MetricGraph) -> Self {
        let block: Vec<Segment> = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| Segment {
                edge: Some(e),
                start: 0.0,
                end: edge.length,
                sign: 1,
            })
            .collect();
        Self {
            blocks1: vec![block.clone()],
            blocks2: vec![block],
            derived: Some(CMatrix::identity(1, 1)),
        }
    }

    /// Exchanges two blocks of the first quotient.
    pub fn swap_blocks1(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        out.blocks1.swap(a, b);
        out.derived = None;
        out
    }

    /// Reorders and re-signs the blocks so that the derived matrix becomes
    /// a positive multiple of `target`. Tries every permutation and sign
    /// pattern; intended for a handful of blocks.
    pub fn arranged_for(&self, target: &CMatrix) -> Option<Self> {
        let derived = self.derived.as_ref()?;
        let n = derived.nrows();
        if target.nrows() != n || target.ncols() != n || n > 5 {
            return None;
        }
        let perms = permutations(n);
        for p2 in &perms {
            for p1 in &perms {
                for s2 in 0..(1u32 << n) {
                    for s1 in 0..(1u32 << n) {
                        let sign = |mask: u32, i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                        let t = CMatrix::from_fn(n, n, |m, j| derived[(p2[m], p1[j])] * sign(s2, m) * sign(s1, j));
                        if proportional(&t, target).is_some() {
                            let resign = |blocks: &[Vec<Segment>], perm: &[usize], mask: u32| -> Vec<Vec<Segment>> {
                                perm.iter()
                                    .enumerate()
                                    .map(|(i, &src)| {
                                        blocks[src]
                                            .iter()
                                            .map(|s| Segment {
                                                sign: s.sign * sign(mask, i) as i8,
                                                ..*s
                                            })
                                            .collect()
                                    })
                                    .collect()
                            };
                            return Some(Self {
                                blocks1: resign(&self.blocks1, p1, s1),
                                blocks2: resign(&self.blocks2, p2, s2),
                                derived: Some(t),
                            });
                        }
                    }
                }
            }
        }
        None
    }

    /// Lead-space transplantation: quotient lead `a` of the second graph
    /// sits in block `m`, lead `b` of the first in block `j`, and the entry
    /// is `T[m][j]` times both lead signs.
    pub fn lead_transplantation(
        &self,
        t: &CMatrix,
        leads1: &[(usize, i8)],
        leads2: &[(usize, i8)],
    ) -> CMatrix {
        CMatrix::from_fn(leads2.len(), leads1.len(), |a, b| {
            let (m, s2) = leads2[a];
            let (j, s1) = leads1[b];
            t[(m, j)] * f64::from(s2 * s1)
        })
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// `Some(c)` with `a = c * b`, `c > 0`.
fn proportional(a: &CMatrix, b: &CMatrix) -> Option<f64> {
    let (i, _) = b.iter().enumerate().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))?;
    if b[i].norm() == 0.0 {
        return None;
    }
    let c = a[i] / b[i];
    if c.re <= 0.0 || c.im.abs() > 1e-12 * c.re {
        return None;
    }
    (max_abs(&(a - b * c)) <= 1e-12 * max_abs(a)).then_some(c.re)
}

/// Pieces `(parent edge, start, length)` of a fundamental domain of the
/// whole group: one edge per orbit, halved when some element reverses it.
fn fundamental_pieces(parent: &MetricGraph, action: &GraphAction) -> Vec<(usize, f64, f64)> {
    let group = action.group();
    let mut seen = vec![false; parent.edge_count()];
    let mut pieces = Vec::new();
    for e in 0..parent.edge_count() {
        if seen[e] {
            continue;
        }
        let mut reversed = false;
        for g in 0..group.order() {
            let img = action.edge_image(g, e);
            seen[img.edge] = true;
            reversed |= img.edge == e && img.reversed;
        }
        let len = parent.edges()[e].length;
        pieces.push((e, 0.0, if reversed { 0.5 * len } else { len }));
    }
    pieces
}

fn block_segment(
    parent: &MetricGraph,
    action: &GraphAction,
    q: &QuotientResult,
    y: usize,
    piece: (usize, f64, f64),
) -> Segment {
    let (e, x0, len) = piece;
    let img = action.edge_image(y, e);
    let full = parent.edges()[e].length;
    let to_image = |x: f64| if img.reversed { full - x } else { x };
    let loc = q.edge_locations[img.edge];
    let to_rep = |x: f64| if loc.reversed { full - x } else { x };
    let (mut a, mut b) = (to_rep(to_image(x0)), to_rep(to_image(x0 + len)));
    let mut sign = q.rep.value(loc.element).expect("orbit elements lie in the subgroup");
    let Some(qe) = loc.quotient_edge else {
        return Segment {
            edge: None,
            start: a,
            end: b,
            sign,
        };
    };
    if let Some(cut) = q.cut_signs[qe] {
        if a.max(b) > 0.5 * full + 1e-12 * full {
            a = full - a;
            b = full - b;
            sign *= cut;
        }
    }
    Segment {
        edge: Some(qe),
        start: a,
        end: b,
        sign: sign * q.edge_gauge[qe],
    }
}

/// Blocks `y_j B` where `B` is a fundamental domain of the whole group and
/// `y_j` run over right coset representatives of the subgroup, plus the
/// block-space matrix `T[m][j] = sum R2(h) R1(g)` over `h` in `H2` with
/// `h^-1 y'_m = g y_j`, `g` in `H1`.
pub fn derive_block_map(
    parent: &MetricGraph,
    action: &GraphAction,
    q1: &QuotientResult,
    q2: &QuotientResult,
) -> AnalysisResult<BlockMap> {
    let group = action.group();
    let pieces = fundamental_pieces(parent, action);
    let ys1 = group.right_coset_reps(q1.rep.subgroup());
    let ys2 = group.right_coset_reps(q2.rep.subgroup());
    if ys1.len() != ys2.len() {
        return Err(AnalysisError::Dimension(format!(
            "subgroup indices differ: {} vs {}",
            ys1.len(),
            ys2.len()
        )));
    }
    let blocks = |q: &QuotientResult, ys: &[usize]| -> Vec<Vec<Segment>> {
        ys.iter()
            .map(|&y| pieces.iter().map(|&p| block_segment(parent, action, q, y, p)).collect())
            .collect()
    };
    let n = ys1.len();
    let coset_of = |x: usize| -> (usize, usize) {
        // x = g y_j with g in H1
        ys1.iter()
            .enumerate()
            .find_map(|(j, &y)| {
                let g = group.mul(x, group.inverse(y));
                q1.rep.contains(g).then_some((j, g))
            })
            .expect("right cosets cover the group")
    };
    let mut t = CMatrix::zeros(n, n);
    for (m, &y2) in ys2.iter().enumerate() {
        for &h in q2.rep.subgroup() {
            let (j, g) = coset_of(group.mul(group.inverse(h), y2));
            let r2 = q2.rep.value(h).expect("h in H2");
            let r1 = q1.rep.value(g).expect("g in H1");
            t[(m, j)] += C64::new(f64::from(r2 * r1), 0.0);
        }
    }
    let map = BlockMap {
        blocks1: blocks(q1, &ys1),
        blocks2: blocks(q2, &ys2),
        derived: Some(t),
    };
    check_coverage(q1.quotient.graph(), &map.blocks1, 1)?;
    check_coverage(q2.quotient.graph(), &map.blocks2, 2)?;
    Ok(map)
}

fn check_coverage(g: &MetricGraph, blocks: &[Vec<Segment>], which: usize) -> AnalysisResult<()> {
    let mut covered = vec![0.0; g.edge_count()];
    for seg in blocks.iter().flatten() {
        if let Some(e) = seg.edge {
            let Some(c) = covered.get_mut(e) else {
                return Err(AnalysisError::IncompleteBlockMap(format!("quotient {which} has no edge #{e}")));
            };
            *c += seg.length();
        }
    }
    for (e, edge) in g.edges().iter().enumerate() {
        if (covered[e] - edge.length).abs() > 1e-9 * edge.length.max(1.0) {
            return Err(AnalysisError::IncompleteBlockMap(format!(
                "edge '{}' of quotient {which} is covered to length {} of {}",
                edge.id, covered[e], edge.length
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TransplantedEigenfunction {
    pub candidate: Eigenfunction,
    /// Vertex-condition defect of the candidate on the second quotient,
    /// together with the disagreement between segments sharing an edge,
    /// relative to the candidate's maximum amplitude.
    pub residual: f64,
}

/// Value and `x`-derivative of the transplanted function on segment `p` of
/// block `m` at parameter `t`.
fn transplanted_at(
    ef: &Eigenfunction,
    g1: &MetricGraph,
    map: &BlockMap,
    t_mat: &CMatrix,
    m: usize,
    p: usize,
    t: f64,
) -> (C64, C64) {
    let s2 = map.blocks2[m][p];
    let mut value = C64::new(0.0, 0.0);
    let mut deriv = C64::new(0.0, 0.0);
    for (j, block) in map.blocks1.iter().enumerate() {
        let s1 = block[p];
        let Some(e1) = s1.edge else { continue };
        let x1 = s1.at(t);
        let w = t_mat[(m, j)] * f64::from(s1.sign * s2.sign);
        value += w * ef.value(g1, e1, x1);
        deriv += w * ef.derivative(g1, e1, x1) * s1.dir() * s2.dir();
    }
    (value, deriv)
}

/// Moves an eigenfunction of the first quotient to the second through the
/// blocks and `T`, then measures how well the result satisfies the second
/// quotient's conditions.
pub fn transplant_eigenfunction(
    ef: &Eigenfunction,
    g1: &MetricGraph,
    g2: &MetricGraph,
    map: &BlockMap,
    t: &Transplantation,
) -> AnalysisResult<TransplantedEigenfunction> {
    let n = t.dim();
    if map.blocks1.len() != n || map.blocks2.len() != n {
        return Err(AnalysisError::Dimension(format!(
            "block map has {} and {} blocks, transplantation is {n}x{n}",
            map.blocks1.len(),
            map.blocks2.len()
        )));
    }
    let pieces = map.blocks1.first().map_or(0, Vec::len);
    if map.blocks1.iter().chain(&map.blocks2).any(|b| b.len() != pieces) {
        return Err(AnalysisError::IncompleteBlockMap("blocks have different numbers of segments".into()));
    }
    if ef.coefficients.len() != g1.edge_count() {
        return Err(AnalysisError::Dimension("eigenfunction does not belong to the first quotient".into()));
    }
    check_coverage(g1, &map.blocks1, 1)?;
    check_coverage(g2, &map.blocks2, 2)?;
    let k = ef.k;
    let ik = I * k;
    let t_mat = t.matrix();

    // fit each edge of the second quotient from the midpoint of its first
    // segment
    let mut fitted: Vec<Option<(C64, C64)>> = vec![None; g2.edge_count()];
    for m in 0..n {
        for p in 0..pieces {
            let seg = map.blocks2[m][p];
            let Some(e2) = seg.edge else { continue };
            if fitted[e2].is_some() {
                continue;
            }
            let tm = 0.5 * seg.length();
            let (v, d) = transplanted_at(ef, g1, map, t_mat, m, p, tm);
            let x = seg.at(tm);
            let len = g2.edges()[e2].length;
            let alpha = 0.5 * (v + d / ik) * (-ik * x).exp();
            let beta = 0.5 * (v - d / ik) * (-ik * (len - x)).exp();
            fitted[e2] = Some((alpha, beta));
        }
    }
    let coefficients: Vec<(C64, C64)> = fitted
        .into_iter()
        .map(|c| c.unwrap_or((C64::new(0.0, 0.0), C64::new(0.0, 0.0))))
        .collect();
    let candidate = Eigenfunction { k, coefficients };
    let amp = candidate.max_amplitude(g2);
    if amp == 0.0 {
        return Ok(TransplantedEigenfunction {
            candidate,
            residual: f64::INFINITY,
        });
    }
    let mut consistency = 0.0f64;
    for m in 0..n {
        for p in 0..pieces {
            let seg = map.blocks2[m][p];
            for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let tp = frac * seg.length();
                let (v, d) = transplanted_at(ef, g1, map, t_mat, m, p, tp);
                let defect = match seg.edge {
                    Some(e2) => {
                        let x = seg.at(tp);
                        (v - candidate.value(g2, e2, x)).norm().max((d - candidate.derivative(g2, e2, x)).norm() / k)
                    }
                    None => v.norm().max(d.norm() / k),
                };
                consistency = consistency.max(defect);
            }
        }
    }
    let residual = candidate.vertex_residual(g2).max(consistency / amp);
    Ok(TransplantedEigenfunction { candidate, residual })
}
