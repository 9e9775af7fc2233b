//! Scattering matrices of graphs with leads and their resonances.
//!
//! On lead `l` the solution is `a_in exp(-i k x) + a_out exp(i k x)`, so
//! `exp(i k x)` is outgoing and resonances (zeros of `det A(k)` for the
//! outgoing-only system) lie in `Im k < 0`.
//!
//! Resonances are counted by the argument principle applied to `det A(k)`
//! on a rectangle, the rectangle is bisected until each cell holds at most
//! one zero, and each zero is polished by Newton iteration on `det A`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::assemble;
use crate::graph::ExtendedGraph;
use crate::linalg::{log_det, max_abs, relative_sigma_min, solve, wrap_phase, CMatrix, LogDet, C64};

/// Zeros with their multiplicities.
type Roots = Vec<(C64, usize)>;

#[derive(Debug, Error, PartialEq)]
pub enum ScatteringError {
    #[error("k = 0 is excluded from the scattering system")]
    ZeroWavenumber,

    #[error("pole proximity: the scattering system is singular at k = {k} (relative sigma_min {sigma:e})")]
    PoleProximity { k: C64, sigma: f64 },

    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),

    #[error("contour passes through a zero of det A; gave up after {attempts} perturbations")]
    ContourThroughPole { attempts: usize },

    #[error("Newton refinement did not converge near k = {k}")]
    NotConverged { k: C64 },
}

/// `(A, B)` with unknowns `[edge coefficients..., a_out...]` and
/// `A x = B a_in`.
pub fn assemble_extended(eg: &ExtendedGraph, k: C64) -> Result<(CMatrix, CMatrix), ScatteringError> {
    if k == C64::new(0.0, 0.0) {
        return Err(ScatteringError::ZeroWavenumber);
    }
    Ok(assemble(eg.graph(), eg.leads(), k))
}

#[derive(Clone, Debug)]
pub struct ScatteringMatrix {
    /// Requested wavenumber.
    pub k: C64,
    /// Wavenumber actually used; differs from `k` only when the real-axis
    /// perturbation policy kicked in.
    pub evaluated_at: C64,
    pub perturbed: bool,
    /// Rows and columns follow lead file order.
    pub s: CMatrix,
}

const SINGULAR_REL: f64 = 1e-12;

fn solve_smatrix(eg: &ExtendedGraph, k: C64) -> Result<Option<CMatrix>, ScatteringError> {
    let (a, b) = assemble_extended(eg, k)?;
    if relative_sigma_min(&a) < SINGULAR_REL {
        return Ok(None);
    }
    let x = solve(&a, &b).ok_or(ScatteringError::PoleProximity { k, sigma: 0.0 })?;
    let offset = 2 * eg.graph().edge_count();
    Ok(Some(x.rows(offset, eg.lead_count()).into_owned()))
}

/// The scattering matrix `S(k)` with `a_out = S(k) a_in`.
///
/// If `A(k)` is numerically singular at a real `k` (an embedded eigenvalue
/// invisible from the leads), `S` is evaluated at `k (1 + 1e-9)` instead and
/// the result is flagged. At complex `k` a singular `A` is an error.
pub fn smatrix(eg: &ExtendedGraph, k: C64) -> Result<ScatteringMatrix, ScatteringError> {
    if let Some(s) = solve_smatrix(eg, k)? {
        return Ok(ScatteringMatrix {
            k,
            evaluated_at: k,
            perturbed: false,
            s,
        });
    }
    if k.im == 0.0 {
        let shifted = k * (1.0 + 1e-9);
        if let Some(s) = solve_smatrix(eg, shifted)? {
            return Ok(ScatteringMatrix {
                k,
                evaluated_at: shifted,
                perturbed: true,
                s,
            });
        }
    }
    let (a, _) = assemble_extended(eg, k)?;
    Err(ScatteringError::PoleProximity {
        k,
        sigma: relative_sigma_min(&a),
    })
}

/// `max |S S^dagger - I|` at real `k`.
pub fn unitarity_defect(eg: &ExtendedGraph, k: f64) -> Result<f64, ScatteringError> {
    let s = smatrix(eg, C64::new(k, 0.0))?.s;
    let n = s.nrows();
    Ok(max_abs(&(&s * s.adjoint() - CMatrix::identity(n, n))))
}

/// `max |S - S^T|` at `k`.
pub fn reciprocity_defect(eg: &ExtendedGraph, k: C64) -> Result<f64, ScatteringError> {
    let s = smatrix(eg, k)?.s;
    Ok(max_abs(&(&s - s.transpose())))
}

// ---------------------------------------------------------------------------
// Resonances

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, ScatteringError> {
        let all_finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !all_finite || re_min >= re_max || im_min >= im_max {
            return Err(ScatteringError::InvalidRectangle(format!(
                "need re_min < re_max and im_min < im_max, got ({re_min}, {re_max}) x ({im_min}, {im_max})"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// A rectangle for resonance search: must lie in `Im k < 0`.
    pub fn lower(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, ScatteringError> {
        let r = Self::new(re_min, re_max, im_min, im_max)?;
        if im_max >= 0.0 {
            return Err(ScatteringError::InvalidRectangle(format!(
                "resonances lie in Im k < 0 (outgoing exp(+ikx) convention); im_max = {im_max} must be negative"
            )));
        }
        Ok(r)
    }

    pub fn contains(&self, k: C64) -> bool {
        k.re > self.re_min && k.re < self.re_max && k.im > self.im_min && k.im < self.im_max
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> C64 {
        C64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    fn shrink(&self, delta: f64) -> Self {
        Self {
            re_min: self.re_min + delta,
            re_max: self.re_max - delta,
            im_min: self.im_min + delta,
            im_max: self.im_max - delta,
        }
    }

    fn split(&self, fraction: f64) -> (Self, Self) {
        if self.width() >= self.height() {
            let cut = self.re_min + fraction * self.width();
            (
                Self { re_max: cut, ..*self },
                Self { re_min: cut, ..*self },
            )
        } else {
            let cut = self.im_min + fraction * self.height();
            (
                Self { im_max: cut, ..*self },
                Self { im_min: cut, ..*self },
            )
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ResonanceOptions {
    /// Newton stops once `|dk| < k_tol`.
    pub k_tol: f64,
    /// A refined pole must have relative `sigma_min(A) < rank_tol`.
    pub rank_tol: f64,
    /// Poles closer than this are merged and reported with multiplicity.
    pub merge_tol: f64,
    /// Boundary samples per rectangle side before doubling.
    pub initial_samples: usize,
    /// Contour perturbations tried before giving up.
    pub max_attempts: usize,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        Self {
            k_tol: 1e-11,
            rank_tol: 1e-8,
            merge_tol: 1e-6,
            initial_samples: 64,
            max_attempts: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Pole {
    pub k: C64Serde,
    pub multiplicity: usize,
    /// Relative smallest singular value of `A` at the refined pole.
    pub sigma_min: f64,
}

/// Serializable complex number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C64Serde {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Serde {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<C64Serde> for C64 {
    fn from(z: C64Serde) -> Self {
        C64::new(z.re, z.im)
    }
}

impl Pole {
    pub fn k(&self) -> C64 {
        self.k.into()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceSet {
    pub poles: Vec<Pole>,
    pub rect: Rectangle,
    /// Winding number of `det A` along the contour actually used.
    pub winding: i64,
    /// Inward shift applied to the user's rectangle to keep the contour off
    /// a zero (0 when none was needed).
    pub contour_shrink: f64,
}

impl ResonanceSet {
    pub fn count(&self) -> usize {
        self.poles.iter().map(|p| p.multiplicity).sum()
    }
}

#[derive(Debug)]
enum ContourFailure {
    NearZero,
}

/// Winding number and first moment of a closed contour integral of
/// `d log f`.
#[derive(Clone, Copy, Debug)]
struct Winding {
    count: i64,
    /// `(1/2 pi i) * integral of z dlog f`, the sum of enclosed zeros.
    moment: C64,
}

struct ZeroFinder<'a, F> {
    f: &'a F,
    opts: ResonanceOptions,
}

impl<'a, F> ZeroFinder<'a, F>
where
    F: Fn(C64) -> LogDet + Sync,
{
    fn segment(
        &self,
        za: C64,
        fa: LogDet,
        zb: C64,
        fb: LogDet,
        depth: u32,
    ) -> Result<(f64, C64), ContourFailure> {
        if fa.is_zero() || fb.is_zero() {
            return Err(ContourFailure::NearZero);
        }
        let dphi = wrap_phase(fb.phase - fa.phase);
        let dln = fb.ln_abs - fa.ln_abs;
        // a large modulus jump means a zero close to the segment, where a
        // coarse phase increment can alias by a full turn
        if dphi.abs() > 0.5 * PI || (dln.abs() > 1.0 && depth < 24) {
            if depth >= 30 {
                return Err(ContourFailure::NearZero);
            }
            let zm = 0.5 * (za + zb);
            let fm = (self.f)(zm);
            let (p1, m1) = self.segment(za, fa, zm, fm, depth + 1)?;
            let (p2, m2) = self.segment(zm, fm, zb, fb, depth + 1)?;
            return Ok((p1 + p2, m1 + m2));
        }
        let dlog = C64::new(dln, dphi);
        Ok((dphi, 0.5 * (za + zb) * dlog))
    }

    fn contour(&self, rect: &Rectangle, per_side: usize) -> Result<Winding, ContourFailure> {
        let corners = rect.corners();
        let points: Vec<C64> = (0..4)
            .flat_map(|side| {
                let (a, b) = (corners[side], corners[(side + 1) % 4]);
                (0..per_side).map(move |j| a + (b - a) * (j as f64 / per_side as f64))
            })
            .collect();
        let values: Vec<LogDet> = points.par_iter().map(|&z| (self.f)(z)).collect();
        let n = points.len();
        let pieces: Vec<Result<(f64, C64), ContourFailure>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let next = (j + 1) % n;
                self.segment(points[j], values[j], points[next], values[next], 0)
            })
            .collect();
        let mut phase = 0.0;
        let mut moment = C64::new(0.0, 0.0);
        for piece in pieces {
            let (p, m) = piece?;
            phase += p;
            moment += m;
        }
        let turns = phase / TAU;
        let count = turns.round();
        if (turns - count).abs() > 0.1 {
            return Err(ContourFailure::NearZero);
        }
        Ok(Winding {
            count: count as i64,
            moment: moment / C64::new(0.0, TAU),
        })
    }

    /// Samples with `initial_samples` per side and doubles until two
    /// successive counts agree.
    fn winding(&self, rect: &Rectangle) -> Result<Winding, ContourFailure> {
        let mut per_side = self.opts.initial_samples.max(4);
        let mut previous = self.contour(rect, per_side)?;
        for _ in 0..6 {
            per_side *= 2;
            let current = self.contour(rect, per_side)?;
            if current.count == previous.count {
                return Ok(current);
            }
            previous = current;
        }
        Ok(previous)
    }

    /// Newton on `det` with a central-difference derivative,
    /// `h = 1e-6 (1 + |k|)`. The step uses `multiplicity / (det'/det)`.
    fn newton(&self, start: C64, multiplicity: usize, max_step: f64) -> Option<C64> {
        let mut k = start;
        for _ in 0..100 {
            let f0 = (self.f)(k);
            if f0.is_zero() {
                return Some(k);
            }
            let h = 1e-6 * (1.0 + k.norm());
            let rp = (self.f)(k + h).ratio(&f0);
            let rm = (self.f)(k - h).ratio(&f0);
            let dlog = (rp - rm) / (2.0 * h);
            if !(dlog.re.is_finite() && dlog.im.is_finite()) || dlog.norm() == 0.0 {
                return None;
            }
            let mut step = -(multiplicity as f64) / dlog;
            if step.norm() > max_step {
                step *= max_step / step.norm();
            }
            k += step;
            if step.norm() < self.opts.k_tol {
                return Some(k);
            }
        }
        None
    }

    fn search(&self, cell: Rectangle, w: Winding) -> Result<Vec<(C64, usize)>, ScatteringError> {
        if w.count <= 0 {
            return Ok(Vec::new());
        }
        let diameter = cell.width().hypot(cell.height());
        let tiny = diameter < self.opts.merge_tol;
        if w.count == 1 || tiny {
            let m = w.count as usize;
            let guess = if w.count == 1 && cell.contains(w.moment) {
                w.moment
            } else {
                cell.center()
            };
            if let Some(root) = self.newton(guess, m, diameter) {
                let slack = 1e-9 * (1.0 + root.norm());
                let grown = cell.shrink(-slack);
                // with a single enclosed zero the contour moment is that
                // zero; disagreement means the count was aliased
                let consistent = w.count != 1 || (root - w.moment).norm() < 1e-3 * diameter;
                if grown.contains(root) && consistent {
                    return Ok(vec![(root, m)]);
                }
            }
            if tiny {
                return Err(ScatteringError::NotConverged { k: guess });
            }
        }
        // off-centre cuts keep contours away from the symmetric positions
        // where poles of symmetric graphs tend to sit
        const FRACTIONS: [f64; 5] = [0.5123, 0.4629, 0.5619, 0.4133, 0.6113];
        for &fraction in FRACTIONS.iter().take(self.opts.max_attempts.max(1)) {
            let (left, right) = cell.split(fraction);
            let (wl, wr) = rayon::join(|| self.winding(&left), || self.winding(&right));
            let (Ok(wl), Ok(wr)) = (wl, wr) else {
                continue;
            };
            if wl.count + wr.count != w.count || wl.count < 0 || wr.count < 0 {
                continue;
            }
            let (a, b) = rayon::join(|| self.search(left, wl), || self.search(right, wr));
            let mut roots = a?;
            roots.extend(b?);
            return Ok(roots);
        }
        Err(ScatteringError::ContourThroughPole {
            attempts: self.opts.max_attempts,
        })
    }

    /// Finds all zeros inside `rect`. Returns the zeros, the winding count
    /// and the inward shift used.
    fn run(&self, rect: &Rectangle) -> Result<(Roots, i64, f64), ScatteringError> {
        let scale = rect.width().min(rect.height());
        let mut shrink = 0.0;
        for attempt in 0..=self.opts.max_attempts {
            let contour = rect.shrink(shrink);
            if let Ok(w) = self.winding(&contour) {
                let roots = self.search(contour, w)?;
                return Ok((roots, w.count, shrink));
            }
            shrink = scale * 1e-6 * 10f64.powi(attempt as i32);
        }
        Err(ScatteringError::ContourThroughPole {
            attempts: self.opts.max_attempts,
        })
    }
}

fn merge_roots(mut roots: Vec<(C64, usize)>, tol: f64) -> Vec<(C64, usize)> {
    roots.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let mut merged: Vec<(C64, usize)> = Vec::new();
    for (z, m) in roots {
        if let Some(existing) = merged.iter_mut().find(|(w, _)| (w - z).norm() < tol) {
            existing.1 += m;
        } else {
            merged.push((z, m));
        }
    }
    merged
}

fn det_fn(eg: &ExtendedGraph) -> impl Fn(C64) -> LogDet + Sync + '_ {
    move |k| log_det(&assemble(eg.graph(), eg.leads(), k).0)
}

/// Winding number of `det A(k)` around `rect` (positively oriented).
pub fn winding_number(eg: &ExtendedGraph, rect: &Rectangle, opts: &ResonanceOptions) -> Result<i64, ScatteringError> {
    let f = det_fn(eg);
    let finder = ZeroFinder { f: &f, opts: *opts };
    finder
        .winding(rect)
        .map(|w| w.count)
        .map_err(|_| ScatteringError::ContourThroughPole { attempts: 0 })
}

/// Winding number of an arbitrary analytic function around `rect`,
/// `None` when the contour passes too close to a zero.
pub(crate) fn winding_of<F>(f: &F, rect: &Rectangle, opts: &ResonanceOptions) -> Option<i64>
where
    F: Fn(C64) -> LogDet + Sync,
{
    let finder = ZeroFinder { f, opts: *opts };
    finder.winding(rect).ok().map(|w| w.count)
}

/// Resonances of `eg` strictly inside `rect`, sorted by real part.
pub fn resonances(eg: &ExtendedGraph, rect: &Rectangle, opts: &ResonanceOptions) -> Result<ResonanceSet, ScatteringError> {
    if rect.im_max >= 0.0 {
        return Err(ScatteringError::InvalidRectangle(format!(
            "resonances lie in Im k < 0; im_max = {} must be negative",
            rect.im_max
        )));
    }
    let f = det_fn(eg);
    let finder = ZeroFinder { f: &f, opts: *opts };
    let (roots, winding, shrink) = finder.run(rect)?;
    let poles = merge_roots(roots, opts.merge_tol)
        .into_iter()
        .filter(|(k, _)| rect.contains(*k))
        .map(|(k, multiplicity)| Pole {
            k: k.into(),
            multiplicity,
            sigma_min: relative_sigma_min(&assemble(eg.graph(), eg.leads(), k).0),
        })
        .collect();
    Ok(ResonanceSet {
        poles,
        rect: *rect,
        winding,
        contour_shrink: shrink,
    })
}

/// Zeros of an arbitrary analytic function given through its log-modulus
/// and phase; the same machinery as [`resonances`].
pub fn zeros_in_rectangle<F>(f: &F, rect: &Rectangle, opts: &ResonanceOptions) -> Result<(Vec<(C64, usize)>, i64), ScatteringError>
where
    F: Fn(C64) -> LogDet + Sync,
{
    let finder = ZeroFinder { f, opts: *opts };
    let (roots, winding, _) = finder.run(rect)?;
    Ok((merge_roots(roots, opts.merge_tol), winding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MetricGraph;
    use crate::linalg::I;
    use approx::assert_abs_diff_eq;

    fn lead_on_edge(end: &str, len: f64) -> ExtendedGraph {
        let b = MetricGraph::builder().neumann("v");
        let b = if end == "dirichlet" { b.dirichlet("w") } else { b.neumann("w") };
        b.edge("e", "v", "w", len).lead("l", "v").build_extended().unwrap()
    }

    fn two_lead_edge(len: f64) -> ExtendedGraph {
        MetricGraph::builder()
            .neumann("u")
            .neumann("v")
            .edge("e", "u", "v", len)
            .lead("l1", "u")
            .lead("l2", "v")
            .build_extended()
            .unwrap()
    }

    fn isolated_lead() -> ExtendedGraph {
        MetricGraph::builder()
            .neumann("v")
            .lead("l", "v")
            .build_extended_relaxed()
            .unwrap()
    }

    #[test]
    fn shapes() {
        let (a, b) = assemble_extended(&isolated_lead(), C64::new(1.0, 0.0)).unwrap();
        assert_eq!((a.shape(), b.shape()), ((1, 1), (1, 1)));
        // i k (a_out - a_in) = 0, scaled by 1/(ik)
        assert_abs_diff_eq!((a[(0, 0)] - 1.0).norm(), 0.0);
        assert_abs_diff_eq!((b[(0, 0)] - 1.0).norm(), 0.0);

        let (a, _) = assemble_extended(&lead_on_edge("dirichlet", 1.0), C64::new(1.0, 0.0)).unwrap();
        assert_eq!(a.shape(), (3, 3));
        let (a, b) = assemble_extended(&two_lead_edge(1.0), C64::new(1.0, 0.0)).unwrap();
        assert_eq!((a.shape(), b.shape()), ((4, 4), (4, 2)));
        assert_eq!(
            assemble_extended(&two_lead_edge(1.0), C64::new(0.0, 0.0)).unwrap_err(),
            ScatteringError::ZeroWavenumber
        );
    }

    #[test]
    fn closed_forms() {
        let k = C64::new(1.3, 0.0);
        let s = smatrix(&lead_on_edge("dirichlet", 1.0), k).unwrap().s;
        assert_abs_diff_eq!((s[(0, 0)] + (2.0 * I * k).exp()).norm(), 0.0, epsilon = 1e-12);
        let s = smatrix(&lead_on_edge("neumann", 1.0), k).unwrap().s;
        assert_abs_diff_eq!((s[(0, 0)] - (2.0 * I * k).exp()).norm(), 0.0, epsilon = 1e-12);
        for k in [0.3, 2.0, 7.1] {
            let s = smatrix(&isolated_lead(), C64::new(k, 0.0)).unwrap().s;
            assert_abs_diff_eq!((s[(0, 0)] - 1.0).norm(), 0.0, epsilon = 1e-14);
        }
        let len = 0.8;
        let s = smatrix(&two_lead_edge(len), k).unwrap().s;
        let t = (I * k * len).exp();
        assert_abs_diff_eq!(s[(0, 0)].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[(1, 1)].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((s[(0, 1)] - t).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((s[(1, 0)] - t).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unitarity_examples() {
        assert!(unitarity_defect(&lead_on_edge("dirichlet", 1.0), 2.0).unwrap() < 1e-12);
        assert!(unitarity_defect(&two_lead_edge(1.0), 0.3).unwrap() < 1e-12);
    }

    #[test]
    fn embedded_eigenvalue_is_flagged_not_fatal() {
        // lead at the centre of two Dirichlet edges: the odd mode at k = pi
        // vanishes at the centre and never sees the lead
        let eg = MetricGraph::builder()
            .neumann("c")
            .dirichlet("a")
            .dirichlet("b")
            .edge("e1", "c", "a", 1.0)
            .edge("e2", "c", "b", 1.0)
            .lead("l", "c")
            .build_extended()
            .unwrap();
        let (a, _) = assemble_extended(&eg, C64::new(PI, 0.0)).unwrap();
        assert!(relative_sigma_min(&a) < 1e-12);
        let sm = smatrix(&eg, C64::new(PI, 0.0)).unwrap();
        assert!(sm.perturbed);
        assert!((sm.s[(0, 0)].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn complex_singular_is_pole_proximity() {
        let eg = MetricGraph::builder()
            .neumann("c")
            .dirichlet("a")
            .dirichlet("b")
            .edge("e1", "c", "a", 1.0)
            .edge("e2", "c", "b", 1.0)
            .lead("l", "c")
            .build_extended()
            .unwrap();
        let pole = C64::new(PI / 2.0, -0.5 * 3f64.ln());
        assert!(matches!(
            smatrix(&eg, pole).unwrap_err(),
            ScatteringError::PoleProximity { .. }
        ));
    }

    #[test]
    fn rectangle_validation() {
        assert!(Rectangle::lower(0.5, 7.0, -2.0, 0.1).is_err());
        assert!(Rectangle::lower(0.5, 7.0, -2.0, 0.0).is_err());
        assert!(Rectangle::lower(7.0, 0.5, -2.0, -0.1).is_err());
        let r = Rectangle::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let eg = two_lead_edge(1.0);
        assert!(matches!(
            resonances(&eg, &r, &ResonanceOptions::default()).unwrap_err(),
            ScatteringError::InvalidRectangle(_)
        ));
    }

    #[test]
    fn pole_free_examples() {
        let rect = Rectangle::lower(0.5, 7.0, -2.0, -0.01).unwrap();
        for eg in [lead_on_edge("dirichlet", 1.0), two_lead_edge(1.0)] {
            let set = resonances(&eg, &rect, &ResonanceOptions::default()).unwrap();
            assert!(set.poles.is_empty());
            assert_eq!(set.winding, 0);
        }
    }

    #[test]
    fn centre_lead_poles() {
        // S(k) has poles where tan k = 2i: k = pi/2 + n pi - (i/2) ln 3
        let eg = MetricGraph::builder()
            .neumann("c")
            .dirichlet("a")
            .dirichlet("b")
            .edge("e1", "c", "a", 1.0)
            .edge("e2", "c", "b", 1.0)
            .lead("l", "c")
            .build_extended()
            .unwrap();
        let rect = Rectangle::lower(0.5, 7.0, -2.0, -0.01).unwrap();
        let set = resonances(&eg, &rect, &ResonanceOptions::default()).unwrap();
        assert_eq!(set.winding, 2);
        assert_eq!(set.count(), 2);
        for (n, pole) in set.poles.iter().enumerate() {
            let expected = C64::new(PI / 2.0 + n as f64 * PI, -0.5 * 3f64.ln());
            assert!((pole.k() - expected).norm() < 1e-9, "{:?} vs {expected}", pole.k);
            assert!(pole.sigma_min < 1e-8);
        }
        assert_eq!(winding_number(&eg, &rect, &ResonanceOptions::default()).unwrap(), 2);
    }

    #[test]
    fn zero_finder_on_polynomial() {
        let roots = [C64::new(1.0, -0.5), C64::new(2.5, -1.2), C64::new(1.0001, -0.5)];
        let f = move |z: C64| {
            let v: C64 = roots.iter().map(|r| z - r).product();
            LogDet {
                ln_abs: v.norm().ln(),
                phase: v.arg(),
            }
        };
        let rect = Rectangle::new(0.0, 3.0, -2.0, 0.0).unwrap();
        let (found, winding) = zeros_in_rectangle(&f, &rect, &ResonanceOptions::default()).unwrap();
        assert_eq!(winding, 3);
        assert_eq!(found.len(), 3, "{found:?}");
        for r in roots {
            assert!(found.iter().any(|(z, m)| *m == 1 && (z - r).norm() < 1e-10));
        }
    }
}
