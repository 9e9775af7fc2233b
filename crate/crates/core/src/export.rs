//! Plain-text exports. Numbers use `.` as decimal separator and 17
//! significant digits, enough to read back every `f64` exactly. Every
//! file starts with the given comment lines, each prefixed by `# `.

use std::fmt::Write as _;

use crate::analysis::ComparisonReport;
use crate::linalg::CMatrix;
use crate::scattering::ResonanceSet;
use crate::spectral::Spectrum;

/// `x` with 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(comments: &[String]) -> String {
    let mut out = String::new();
    for line in comments {
        let _ = writeln!(out, "# {line}");
    }
    out
}

/// Columns `k,multiplicity`.
pub fn spectrum_csv(s: &Spectrum, comments: &[String]) -> String {
    let mut out = header(comments);
    let _ = writeln!(out, "# interval: ({}, {})", num(s.k_min), num(s.k_max));
    let t = s.tolerances;
    let _ = writeln!(
        out,
        "# tolerances: scan_step={} k_tol={} rank_tol={}",
        num(t.scan_step),
        num(t.k_tol),
        num(t.rank_tol)
    );
    if s.zero_modes > 0 {
        let _ = writeln!(out, "# zero modes at k = 0: {}", s.zero_modes);
    }
    for w in &s.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    out.push_str("k,multiplicity\n");
    for e in &s.eigenvalues {
        let _ = writeln!(out, "{},{}", num(e.k), e.multiplicity);
    }
    out
}

/// Columns `i,j,re,im`, row-major, indices in lead file order.
pub fn smatrix_csv(s: &CMatrix, comments: &[String]) -> String {
    let mut out = header(comments);
    out.push_str("i,j,re,im\n");
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            let z = s[(i, j)];
            let _ = writeln!(out, "{i},{j},{},{}", num(z.re), num(z.im));
        }
    }
    out
}

/// Columns `re_k,im_k,sigma_min`; a pole of multiplicity `m` fills `m`
/// rows.
pub fn poles_csv(r: &ResonanceSet, comments: &[String]) -> String {
    let mut out = header(comments);
    let _ = writeln!(
        out,
        "# rectangle: re in [{}, {}], im in [{}, {}]",
        num(r.rect.re_min),
        num(r.rect.re_max),
        num(r.rect.im_min),
        num(r.rect.im_max)
    );
    let _ = writeln!(out, "# winding: {}", r.winding);
    if r.contour_shrink > 0.0 {
        let _ = writeln!(out, "# contour shrunk inward by {}", num(r.contour_shrink));
    }
    out.push_str("re_k,im_k,sigma_min\n");
    for p in &r.poles {
        for _ in 0..p.multiplicity {
            let _ = writeln!(out, "{},{},{}", num(p.k.re), num(p.k.im), num(p.sigma_min));
        }
    }
    out
}

/// Columns `left_re,left_im,right_re,right_im,deviation`; missing sides
/// and infinite deviations are left empty.
pub fn pairs_csv(report: &ComparisonReport, comments: &[String]) -> String {
    let mut out = header(comments);
    let _ = writeln!(
        out,
        "# {} {}: max deviation {} tolerance {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.kind,
        num(report.max_deviation),
        num(report.tolerance)
    );
    out.push_str("left_re,left_im,right_re,right_im,deviation\n");
    let side = |z: Option<crate::scattering::C64Serde>| match z {
        Some(z) => format!("{},{}", num(z.re), num(z.im)),
        None => ",".to_string(),
    };
    for d in &report.deviations {
        let dev = if d.deviation.is_finite() { num(d.deviation) } else { String::new() };
        let _ = writeln!(out, "{},{},{}", side(d.left), side(d.right), dev);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MetricGraph;
    use crate::spectral::{spectrum, SpectrumOptions};

    #[test]
    fn numbers_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn spectrum_csv_layout() {
        let g = MetricGraph::builder()
            .dirichlet("a")
            .dirichlet("b")
            .edge("e", "a", "b", 1.0)
            .build()
            .unwrap();
        let s = spectrum(&g, 0.1, 10.0, &SpectrumOptions::default()).unwrap();
        let csv = spectrum_csv(&s, &["graph: test".to_string()]);
        assert!(csv.starts_with("# graph: test\n"));
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "k,multiplicity");
        assert_eq!(rows.len(), 4);
        let k: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
        assert!((k - std::f64::consts::PI).abs() < 1e-10);
    }
}
