//! Laplacian spectrum of a compact metric graph.
//!
//! The vertex conditions give a square homogeneous system `A(k) c = 0` in
//! the `2|E|` edge coefficients. Eigenvalues `k^2 > 0` are the real `k` at
//! which `A(k)` loses rank; they are located by scanning the relative
//! smallest singular value on a grid and refining each local minimum by
//! golden-section search.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::assemble;
use crate::graph::{MetricGraph, VertexCondition};
use crate::linalg::{log_det, null_space, relative_sigma_min, singular_values, CMatrix, CVector, C64, I};
use crate::scattering::{winding_of, Rectangle, ResonanceOptions};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("k = 0 is excluded from the secular system")]
    ZeroWavenumber,

    #[error("invalid search interval ({k_min}, {k_max}): need 0 < k_min < k_max")]
    InvalidInterval { k_min: f64, k_max: f64 },

    #[error("k = {k} is not in spectrum (relative sigma_min {sigma} >= {rank_tol})")]
    NotInSpectrum { k: f64, sigma: f64, rank_tol: f64 },
}

#[derive(Clone, Debug)]
pub struct SecularSystem {
    pub k: C64,
    pub matrix: CMatrix,
}

pub fn assemble_secular(g: &MetricGraph, k: C64) -> Result<SecularSystem, SpectralError> {
    if k == C64::new(0.0, 0.0) {
        return Err(SpectralError::ZeroWavenumber);
    }
    let (matrix, _) = assemble(g, &[], k);
    Ok(SecularSystem { k, matrix })
}

/// Search tolerances. `scan_step = None` picks a quarter of the mean level
/// spacing, `0.5 * pi / total_length`.
#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    pub scan_step: Option<f64>,
    pub k_tol: f64,
    pub rank_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            scan_step: None,
            k_tol: 1e-11,
            rank_tol: 1e-8,
        }
    }
}

impl SpectrumOptions {
    pub fn with_scan_step(step: f64) -> Self {
        Self {
            scan_step: Some(step),
            ..Self::default()
        }
    }

    pub fn resolve(&self, g: &MetricGraph) -> Tolerances {
        let total = g.total_length();
        let default_step = if total > 0.0 { 0.5 * PI / total } else { 0.1 };
        Tolerances {
            scan_step: self.scan_step.unwrap_or(default_step),
            k_tol: self.k_tol,
            rank_tol: self.rank_tol,
        }
    }
}

/// Tolerances actually used for a run; recorded in every export.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub scan_step: f64,
    pub k_tol: f64,
    pub rank_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub k: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub k_min: f64,
    pub k_max: f64,
    pub tolerances: Tolerances,
    /// Multiplicity of the `k = 0` constant mode: one per connected
    /// component whose vertices are all Neumann.
    pub zero_modes: usize,
    pub warnings: Vec<String>,
}

impl Spectrum {
    pub fn has_zero_mode(&self) -> bool {
        self.zero_modes > 0
    }

    /// Eigenvalues repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.k, e.multiplicity))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }
}

fn sigma_rel(g: &MetricGraph, k: f64) -> f64 {
    relative_sigma_min(&assemble(g, &[], C64::new(k, 0.0)).0)
}

fn zero_modes(g: &MetricGraph) -> usize {
    let comps = g.components();
    let n_comp = comps.iter().copied().max().map_or(0, |m| m + 1);
    let mut all_neumann = vec![true; n_comp];
    for (v, vertex) in g.vertices().iter().enumerate() {
        if vertex.condition == VertexCondition::Dirichlet {
            all_neumann[comps[v]] = false;
        }
    }
    all_neumann.into_iter().filter(|&b| b).count()
}

/// Golden-section minimisation; returns the best abscissa seen.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Local minima of `sigma_rel` on a grid over `[a, b]` with spacing at most
/// `step`, refined by golden-section search, that fall below the rank
/// tolerance inside the open interval `(lo, hi)`.
fn scan(g: &MetricGraph, a: f64, b: f64, step: f64, lo: f64, hi: f64, tol: &Tolerances) -> Vec<f64> {
    let n = ((b - a) / step).ceil().max(2.0) as usize;
    let h = (b - a) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
    let sigma: Vec<f64> = grid.par_iter().map(|&k| sigma_rel(g, k)).collect();
    let mut brackets = Vec::new();
    for i in 0..=n {
        let left = if i > 0 { sigma[i - 1] } else { f64::INFINITY };
        let right = if i < n { sigma[i + 1] } else { f64::INFINITY };
        if sigma[i] < left && sigma[i] <= right {
            brackets.push((grid[i.saturating_sub(1)], grid[(i + 1).min(n)]));
        }
    }
    brackets
        .par_iter()
        .map(|&(a, b)| golden_section(|k| sigma_rel(g, k), a, b, tol.k_tol))
        .filter(|&(k, s)| s < tol.rank_tol && k > lo && k < hi)
        .map(|(k, _)| k)
        .collect()
}

fn multiplicity(g: &MetricGraph, k: f64, rank_tol: f64) -> usize {
    let s = singular_values(&assemble(g, &[], C64::new(k, 0.0)).0);
    let max = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x < rank_tol * max).count().max(1)
}

/// Number of zeros of `det A(k)`, counted with multiplicity, in the thin
/// rectangle `[a, b] x [-h, h]`. All zeros of the compact secular
/// determinant are real. Sides that pass through an eigenvalue are nudged
/// inward.
fn zero_count(g: &MetricGraph, a: f64, b: f64, h: f64) -> Option<i64> {
    let f = |k: C64| log_det(&assemble(g, &[], k).0);
    let opts = ResonanceOptions::default();
    let nudge = 1e-9 * (b - a).max(1.0);
    for attempt in 0..4 {
        let shift = if attempt == 0 { 0.0 } else { nudge * 10f64.powi(attempt) };
        let rect = Rectangle::new(a + shift, b - shift, -h, h).ok()?;
        if let Some(count) = winding_of(&f, &rect, &opts) {
            return Some(count);
        }
    }
    None
}

/// Eigenvalues counted with multiplicity in `(a, b)`.
fn count_in(found: &[Eigenvalue], a: f64, b: f64) -> i64 {
    found.iter().filter(|e| e.k > a && e.k < b).map(|e| e.multiplicity as i64).sum()
}

fn insert_new(found: &mut Vec<Eigenvalue>, ks: Vec<f64>, g: &MetricGraph, tol: &Tolerances) {
    for k in ks {
        if found.iter().all(|e| (e.k - k).abs() >= 100.0 * tol.k_tol) {
            found.push(Eigenvalue {
                k,
                multiplicity: multiplicity(g, k, tol.rank_tol),
            });
        }
    }
    found.sort_by(|a, b| a.k.total_cmp(&b.k));
}

/// Compares the scan against the argument-principle count on `(a, b)` and
/// rescans deficient pieces on finer grids.
/// Fixed inputs of the completeness check: the graph, the tolerances and
/// the half-height of the counting rectangles.
struct Completion<'a> {
    g: &'a MetricGraph,
    tol: &'a Tolerances,
    h: f64,
}

fn complete(c: &Completion, found: &mut Vec<Eigenvalue>, a: f64, b: f64, step: f64, depth: u32) -> bool {
    let Completion { g, tol, h } = *c;
    let Some(expected) = zero_count(g, a, b, h) else {
        return false;
    };
    if count_in(found, a, b) >= expected {
        return true;
    }
    if depth >= 12 {
        return false;
    }
    let finer = 0.5 * step;
    let ks = scan(g, a, b, finer, a, b, tol);
    insert_new(found, ks, g, tol);
    if count_in(found, a, b) >= expected {
        return true;
    }
    let mid = a + 0.4871 * (b - a);
    let left = complete(c, found, a, mid, finer, depth + 1);
    let right = complete(c, found, mid, b, finer, depth + 1);
    left && right
}

pub fn spectrum(
    g: &MetricGraph,
    k_min: f64,
    k_max: f64,
    opts: &SpectrumOptions,
) -> Result<Spectrum, SpectralError> {
    if !(k_min > 0.0 && k_max > k_min && k_max.is_finite()) {
        return Err(SpectralError::InvalidInterval { k_min, k_max });
    }
    let tol = opts.resolve(g);
    let mut spectrum = Spectrum {
        eigenvalues: Vec::new(),
        k_min,
        k_max,
        tolerances: tol,
        zero_modes: zero_modes(g),
        warnings: Vec::new(),
    };
    if g.edge_count() == 0 {
        return Ok(spectrum);
    }

    let mut found = Vec::new();
    let ks = scan(g, k_min, k_max, tol.scan_step, k_min, k_max, &tol);
    insert_new(&mut found, ks, g, &tol);
    // pieces of about eight grid steps keep each winding count small
    let pieces = ((k_max - k_min) / (8.0 * tol.scan_step)).ceil().max(1.0) as usize;
    let width = (k_max - k_min) / pieces as f64;
    let h = 0.5 * tol.scan_step.min(width);
    let complete_pieces: Vec<bool> = (0..pieces)
        .map(|i| {
            let a = k_min + i as f64 * width;
            let b = if i + 1 == pieces { k_max } else { a + width };
            complete(&Completion { g, tol: &tol, h }, &mut found, a, b, tol.scan_step, 0)
        })
        .collect();
    if complete_pieces.contains(&false) {
        spectrum.warnings.push(
            "the eigenvalue count could not be confirmed by the argument principle on every subinterval".into(),
        );
    }
    spectrum.eigenvalues = found;
    for w in spectrum.eigenvalues.windows(2) {
        if w[1].k - w[0].k < 2.0 * tol.scan_step {
            spectrum.warnings.push(format!(
                "eigenvalues {} and {} are closer than 2*scan_step = {}; the grid may be too coarse",
                w[0].k,
                w[1].k,
                2.0 * tol.scan_step
            ));
        }
    }
    Ok(spectrum)
}

/// An eigenfunction given by its edge coefficients; on edge `e`
/// `f_e(x) = alpha_e exp(i k x) + beta_e exp(i k (L_e - x))`.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    pub k: f64,
    pub coefficients: Vec<(C64, C64)>,
}

impl Eigenfunction {
    pub fn value(&self, g: &MetricGraph, edge: usize, x: f64) -> C64 {
        let (a, b) = self.coefficients[edge];
        let len = g.edges()[edge].length;
        a * (I * self.k * x).exp() + b * (I * self.k * (len - x)).exp()
    }

    /// `d f_e / dx` in the edge's own coordinate.
    pub fn derivative(&self, g: &MetricGraph, edge: usize, x: f64) -> C64 {
        let (a, b) = self.coefficients[edge];
        let len = g.edges()[edge].length;
        I * self.k * (a * (I * self.k * x).exp() - b * (I * self.k * (len - x)).exp())
    }

    pub fn inner(&self, other: &Eigenfunction, g: &MetricGraph) -> C64 {
        l2_inner(g, self.k, &self.coefficients, &other.coefficients)
    }

    pub fn norm(&self, g: &MetricGraph) -> f64 {
        self.inner(self, g).re.max(0.0).sqrt()
    }

    /// Largest `|f|` over 65 samples per edge.
    pub fn max_amplitude(&self, g: &MetricGraph) -> f64 {
        let mut max = 0.0f64;
        for (e, edge) in g.edges().iter().enumerate() {
            for i in 0..=64 {
                let x = edge.length * i as f64 / 64.0;
                max = max.max(self.value(g, e, x).norm());
            }
        }
        max
    }

    /// Largest vertex-condition defect relative to the maximum amplitude:
    /// continuity and derivative sum (scaled by `1/k`) at Neumann vertices,
    /// the value at Dirichlet vertices.
    pub fn vertex_residual(&self, g: &MetricGraph) -> f64 {
        let amp = self.max_amplitude(g);
        if amp == 0.0 {
            return 0.0;
        }
        let mut ends: Vec<Vec<(C64, C64)>> = vec![Vec::new(); g.vertex_count()];
        for (e, edge) in g.edges().iter().enumerate() {
            ends[edge.from].push((self.value(g, e, 0.0), self.derivative(g, e, 0.0)));
            ends[edge.to].push((
                self.value(g, e, edge.length),
                -self.derivative(g, e, edge.length),
            ));
        }
        let mut worst = 0.0f64;
        for (v, vertex_ends) in ends.iter().enumerate() {
            match g.vertices()[v].condition {
                VertexCondition::Dirichlet => {
                    for (val, _) in vertex_ends {
                        worst = worst.max(val.norm());
                    }
                }
                VertexCondition::Neumann => {
                    if let Some((v0, _)) = vertex_ends.first() {
                        for (val, _) in vertex_ends {
                            worst = worst.max((val - v0).norm());
                        }
                        let sum: C64 = vertex_ends.iter().map(|(_, d)| d).sum();
                        worst = worst.max(sum.norm() / self.k);
                    }
                }
            }
        }
        worst / amp
    }
}

fn l2_inner(g: &MetricGraph, k: f64, f: &[(C64, C64)], h: &[(C64, C64)]) -> C64 {
    g.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let (a1, b1) = f[e];
            let (a2, b2) = h[e];
            let len = edge.length;
            let cross = (k * len).sin() / k;
            (a1 * a2.conj() + b1 * b2.conj()) * len + (a1 * b2.conj() + b1 * a2.conj()) * cross
        })
        .sum()
}

fn to_coefficients(v: &CVector) -> Vec<(C64, C64)> {
    (0..v.len() / 2).map(|e| (v[2 * e], v[2 * e + 1])).collect()
}

/// L2-orthonormal basis of the eigenspace at `k`.
pub fn eigenfunction(
    g: &MetricGraph,
    k: f64,
    opts: &SpectrumOptions,
) -> Result<Vec<Eigenfunction>, SpectralError> {
    if k == 0.0 {
        return Err(SpectralError::ZeroWavenumber);
    }
    let a = assemble_secular(g, C64::new(k, 0.0))?.matrix;
    let sigma = relative_sigma_min(&a);
    if sigma.is_nan() || sigma >= opts.rank_tol || g.edge_count() == 0 {
        return Err(SpectralError::NotInSpectrum {
            k,
            sigma,
            rank_tol: opts.rank_tol,
        });
    }
    let mut basis: Vec<Vec<(C64, C64)>> = Vec::new();
    for v in null_space(&a, opts.rank_tol) {
        let mut c = to_coefficients(&v);
        for q in &basis {
            let proj = l2_inner(g, k, &c, q);
            for (ci, qi) in c.iter_mut().zip(q) {
                ci.0 -= proj * qi.0;
                ci.1 -= proj * qi.1;
            }
        }
        let norm = l2_inner(g, k, &c, &c).re.sqrt();
        if norm < 1e-12 {
            continue;
        }
        // fix the global phase on the largest coefficient
        let pivot = c
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let scale = pivot.conj() / (pivot.norm() * norm);
        for ci in &mut c {
            ci.0 *= scale;
            ci.1 *= scale;
        }
        basis.push(c);
    }
    Ok(basis
        .into_iter()
        .map(|coefficients| Eigenfunction { k, coefficients })
        .collect())
}
