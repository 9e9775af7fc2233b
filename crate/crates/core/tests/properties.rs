use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qgraph::analysis::Transplantation;
use qgraph::builtin::{builtin_graph, d4_example, d4_group, transplantation_matrix, BUILTIN_GRAPHS};
use qgraph::graph::{graph_to_json, parse_graph, ExtendedGraph, MetricGraph, VertexCondition};
use qgraph::scattering::{reciprocity_defect, smatrix};
use qgraph::spectral::{spectrum, Spectrum, SpectrumOptions};
use qgraph::symmetry::{induced_character, quotient, FiniteGroup, Rep1D};

fn arb_graph() -> impl Strategy<Value = ExtendedGraph> {
    (1usize..6)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec((0..n, 0..n, 0.05f64..5.0), 1..8),
                prop::collection::vec(0..n, 0..4),
            )
        })
        .prop_filter_map("graph violates validation rules", |(dirichlet, edges, leads)| {
            let mut b = MetricGraph::builder();
            for (i, &d) in dirichlet.iter().enumerate() {
                let c = if d { VertexCondition::Dirichlet } else { VertexCondition::Neumann };
                b = b.vertex(&format!("v{i}"), c);
            }
            for (i, (from, to, len)) in edges.iter().enumerate() {
                b = b.edge(&format!("e{i}"), &format!("v{from}"), &format!("v{to}"), *len);
            }
            for (i, v) in leads.iter().enumerate() {
                b = b.lead(&format!("l{i}"), &format!("v{v}"));
            }
            b.build_extended().ok()
        })
}

fn cyclic(n: usize) -> FiniteGroup {
    let names = (0..n).map(|i| format!("g{i}")).collect();
    let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
    FiniteGroup::new(names, table).unwrap()
}

/// Subgroup generated by `g`, in order of powers.
fn generated(group: &FiniteGroup, g: usize) -> Vec<usize> {
    let mut out = vec![group.identity()];
    let mut x = g;
    while x != group.identity() {
        out.push(x);
        x = group.mul(x, g);
    }
    out
}

proptest! {
    #[test]
    fn graph_files_round_trip(g in arb_graph()) {
        let text = graph_to_json(&g);
        let back = parse_graph(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(graph_to_json(&back), text);
    }

    #[test]
    fn group_axioms(n in 1usize..13, use_d4 in any::<bool>(), a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let group = if use_d4 { d4_group() } else { cyclic(n) };
        let (a, b, c) = (a % group.order(), b % group.order(), c % group.order());
        let e = group.identity();
        prop_assert_eq!(group.mul(group.mul(a, b), c), group.mul(a, group.mul(b, c)));
        prop_assert_eq!(group.mul(a, group.inverse(a)), e);
        prop_assert_eq!(group.mul(group.inverse(a), a), e);
        prop_assert_eq!(group.mul(e, a), a);
        prop_assert_eq!(group.mul(a, e), a);
    }

    #[test]
    fn cosets_and_induced_characters(n in 1usize..13, use_d4 in any::<bool>(), g in 0usize..64, sign in any::<bool>()) {
        let group = if use_d4 { d4_group() } else { cyclic(n) };
        let g = g % group.order();
        let h = generated(&group, g);
        prop_assert!(group.is_subgroup(&h));
        let index = group.order() / h.len();
        prop_assert_eq!(group.left_coset_reps(&h).len(), index);
        prop_assert_eq!(group.right_coset_reps(&h).len(), index);
        let alternating = sign && h.len().is_multiple_of(2);
        let values: Vec<(usize, i64)> = h
            .iter()
            .enumerate()
            .map(|(j, &x)| (x, if alternating && j % 2 == 1 { -1 } else { 1 }))
            .collect();
        let rep = Rep1D::new(&group, &values).unwrap();
        let chi = induced_character(&group, &rep).unwrap();
        prop_assert_eq!(chi[group.identity()], index as i64);
        // Characters are class functions.
        for x in 0..group.order() {
            for y in 0..group.order() {
                let conj = group.mul(group.mul(group.inverse(y), x), y);
                prop_assert_eq!(chi[x], chi[conj]);
            }
        }
        let norm: i64 = chi.iter().map(|v| v * v).sum();
        prop_assert_eq!(norm % group.order() as i64, 0);
    }
}

fn counting(g: &MetricGraph, k: f64) -> usize {
    spectrum(g, 1e-3, k, &SpectrumOptions::default()).unwrap().count()
}

#[test]
fn weyl_count_on_quotients_and_star() {
    let star = MetricGraph::builder()
        .neumann("c")
        .dirichlet("a")
        .dirichlet("b")
        .neumann("d")
        .edge("x", "c", "a", 1.0)
        .edge("y", "c", "b", 2f64.sqrt())
        .edge("z", "c", "d", 3f64.sqrt())
        .build()
        .unwrap();
    let graphs = [
        builtin_graph("d4-r1").unwrap().graph().clone(),
        builtin_graph("d4-r2").unwrap().graph().clone(),
        star,
    ];
    for g in &graphs {
        for k in [10.0, 20.0, 30.0, 40.0, 50.0] {
            let n = counting(g, k) as f64;
            let weyl = k * g.total_length() / PI;
            assert!((n - weyl).abs() <= 2.0, "N({k}) = {n}, K L / pi = {weyl}");
        }
    }
}

#[test]
fn weyl_slope_on_parent() {
    let parent = builtin_graph("d4-parent").unwrap().graph().clone();
    let slope = parent.total_length() / PI;
    let n10 = counting(&parent, 10.0) as f64;
    for k in [20.0, 30.0, 40.0, 50.0] {
        let grown = counting(&parent, k) as f64 - n10;
        assert!((grown - (k - 10.0) * slope).abs() <= 2.0, "N({k}) - N(10) = {grown}");
    }
}

fn contains_all(coarse: &Spectrum, fine: &Spectrum, tol: f64) -> bool {
    coarse.eigenvalues.iter().all(|e| {
        fine.eigenvalues
            .iter()
            .any(|f| (f.k - e.k).abs() < tol && f.multiplicity >= e.multiplicity)
    })
}

#[test]
fn halving_the_scan_step_keeps_every_eigenvalue() {
    for name in ["d4-r1", "d4-r2", "d4-parent"] {
        let g = builtin_graph(name).unwrap().graph().clone();
        let base = SpectrumOptions::default().resolve(&g).scan_step;
        let mut previous = spectrum(&g, 0.1, 12.0, &SpectrumOptions::with_scan_step(base)).unwrap();
        for halvings in 1..4 {
            let step = base / f64::from(1 << halvings);
            let next = spectrum(&g, 0.1, 12.0, &SpectrumOptions::with_scan_step(step)).unwrap();
            assert!(contains_all(&previous, &next, 1e-9), "{name}: step {step} lost an eigenvalue");
            assert_eq!(previous.count(), next.count(), "{name}: step {step}");
            previous = next;
        }
    }
}

/// Merges spectra into a sorted multiset of k values.
fn union(spectra: &[&Spectrum]) -> Vec<f64> {
    let mut all: Vec<f64> = spectra.iter().flat_map(|s| s.expanded()).collect();
    all.sort_by(f64::total_cmp);
    all
}

#[test]
fn klein_four_quotients_decompose_the_parent() {
    let ex = d4_example();
    let compact = ex.parent_compact();
    let group = ex.action.group();
    let opts = SpectrumOptions::default();
    let parent = spectrum(compact.graph(), 0.1, 8.0, &opts).unwrap();
    for (a, b) in [("rx", "ry"), ("ru", "rv")] {
        let mut parts = Vec::new();
        for (va, vb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let rep = Rep1D::from_names(group, &[("e", 1), (a, va), (b, vb), ("s2", va * vb)]).unwrap();
            let q = quotient(&compact, &ex.action, &rep).unwrap();
            parts.push(spectrum(q.quotient.graph(), 0.1, 8.0, &opts).unwrap());
        }
        let merged = union(&parts.iter().collect::<Vec<_>>());
        let whole = parent.expanded();
        assert_eq!(merged.len(), whole.len(), "subgroup {{e, {a}, {b}, s2}}");
        for (x, y) in merged.iter().zip(&whole) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn isospectral_pair_lies_in_parent_spectrum() {
    let parent = spectrum(builtin_graph("d4-parent").unwrap().graph(), 0.1, 10.0, &SpectrumOptions::default()).unwrap();
    for name in ["d4-r1", "d4-r2"] {
        let q = spectrum(builtin_graph(name).unwrap().graph(), 0.1, 10.0, &SpectrumOptions::default()).unwrap();
        assert!(contains_all(&q, &parent, 1e-9), "{name}");
    }
}

fn eigenvalues_2x2(m: &qgraph::linalg::CMatrix) -> [C64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let root = (tr * tr - 4.0 * det).sqrt();
    [(tr + root) / 2.0, (tr - root) / 2.0]
}

#[test]
fn conjugate_smatrices_share_eigenvalues() {
    let g1 = builtin_graph("d4-r1-leads").unwrap();
    let g2 = builtin_graph("d4-r2-leads").unwrap();
    let t = Transplantation::new(transplantation_matrix()).unwrap();
    for i in 0..40 {
        let k = C64::new(0.25 + 0.24 * i as f64, if i % 2 == 0 { 0.0 } else { 0.4 });
        let s1 = smatrix(&g1, k).unwrap().s;
        let s2 = smatrix(&g2, k).unwrap().s;
        let conj = t.inverse() * s2 * t.matrix();
        let a = eigenvalues_2x2(&s1);
        let b = eigenvalues_2x2(&conj);
        let direct = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
        let crossed = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
        assert!(direct.min(crossed) < 1e-8, "k = {k}");
        if k.im == 0.0 {
            for z in a {
                assert!((z.norm() - 1.0).abs() < 1e-9, "k = {k}: |lambda| = {}", z.norm());
            }
        }
    }
}

#[test]
fn smatrix_matches_cauchy_mean_value() {
    let scalar = MetricGraph::builder()
        .neumann("v")
        .dirichlet("d")
        .edge("e", "v", "d", 1.0)
        .lead("l", "v")
        .build_extended()
        .unwrap();
    let quotient_pair = builtin_graph("d4-r1-leads").unwrap();
    let points = 128;
    for (g, centre, radius) in [
        (&scalar, C64::new(2.0, -0.3), 0.25),
        (&scalar, C64::new(5.0, 0.0), 0.5),
        (&quotient_pair, C64::new(3.0, 0.6), 0.3),
    ] {
        let n = g.lead_count();
        let mut mean = qgraph::linalg::CMatrix::zeros(n, n);
        for j in 0..points {
            let theta = 2.0 * PI * j as f64 / points as f64;
            let k = centre + C64::from_polar(radius, theta);
            mean += smatrix(g, k).unwrap().s;
        }
        mean /= C64::new(points as f64, 0.0);
        let direct = smatrix(g, centre).unwrap().s;
        let err = (mean - direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "centre {centre}: {err}");
    }
}

#[test]
fn reciprocity_on_builtins() {
    for name in BUILTIN_GRAPHS {
        let g = builtin_graph(name).unwrap();
        for i in 0..50 {
            let k = C64::new(0.13 + 0.2 * i as f64, 0.0);
            let d = reciprocity_defect(&g, k).unwrap();
            assert!(d < 1e-8, "{name} at {k}: {d}");
        }
    }
}
