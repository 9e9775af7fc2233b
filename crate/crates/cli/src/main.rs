//! `qgraph`: spectra, scattering matrices, resonances, symmetry quotients
//! and cross-graph comparisons from the command line.
//!
//! Exit codes: 0 success or PASS, 1 comparison FAIL, 2 input error,
//! 3 numerical error.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use qgraph::analysis::{compare_poles, compare_smatrix, compare_spectra, AnalysisError, ComparisonReport, Transplantation};
use qgraph::builtin::{builtin_graph, builtin_symmetry, transplantation_matrix, BuiltinError, BUILTIN_GRAPHS, BUILTIN_SYMMETRIES};
use qgraph::export::{num, pairs_csv, poles_csv, smatrix_csv, spectrum_csv};
use qgraph::graph::{graph_to_json, parse_graph, ExtendedGraph, GraphError};
use qgraph::scattering::{resonances, smatrix, Rectangle, ResonanceOptions, ScatteringError};
use qgraph::spectral::{spectrum, SpectralError, SpectrumOptions};
use qgraph::symmetry::{parse_symmetry, quotient, symmetry_to_json, Symmetry, SymmetryError};

use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "qgraph", version, about = "Spectra, scattering and symmetry quotients of metric quantum graphs")]
struct Cli {
    /// Worker threads for grid and contour evaluations (default: all cores).
    #[arg(long, global = true, env = "QGRAPH_JOBS")]
    jobs: Option<usize>,

    /// Record the wall-clock time in the output manifest. Without it,
    /// identical inputs give byte-identical outputs.
    #[arg(long, global = true)]
    timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GraphInput {
    /// Graph description file, or `builtin:NAME`.
    graph: Option<String>,

    /// Built-in graph (same as passing `builtin:NAME`).
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues k (k^2 is the Laplacian eigenvalue) in (kmin, kmax), as CSV.
    Spectrum {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
        /// Refinement tolerance on k.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Grid step of the singular-value scan (default: a quarter of the
        /// mean level spacing).
        #[arg(long)]
        scan_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scattering matrix S(k) as CSV.
    Smatrix {
        #[command(flatten)]
        input: GraphInput,
        /// Wavenumber as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resonances (poles of S) inside a rectangle of the lower half plane, as CSV.
    Poles {
        #[command(flatten)]
        input: GraphInput,
        /// `remin,remax,immin,immax`.
        #[arg(long, allow_hyphen_values = true)]
        rect: String,
        /// Newton tolerance on k.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quotient graph for a representation named in a symmetry file.
    Quotient {
        /// Graph description file, or `builtin:NAME`.
        graph: String,
        /// Symmetry description file, or `builtin:d4`.
        symmetry: String,
        /// Representation name from the symmetry file.
        #[arg(long)]
        rep: String,
        /// Quotient graph output; a manifest is written next to it as
        /// `<out>.manifest.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Provenance (orbits, cut edges, imposed conditions) as JSON.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Compare two graphs: spectra, transplantation-conjugated S-matrices or poles.
    Compare {
        /// First graph file, or `builtin:NAME`.
        graph1: String,
        /// Second graph file, or `builtin:NAME`.
        graph2: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Lead-space matrix T with `T^-1 S2 T = S1`: a JSON array of rows
        /// (real numbers or `[re, im]` pairs), or `builtin:d4`. Default:
        /// identity.
        #[arg(long)]
        transplantation: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        kmin: f64,
        #[arg(long, default_value_t = 10.0)]
        kmax: f64,
        /// Grid step for `--mode smatrix`.
        #[arg(long, default_value_t = 0.1)]
        kstep: f64,
        /// Imaginary part of the `--mode smatrix` grid.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        kim: f64,
        /// Extra wavenumber `re,im` for `--mode smatrix`; repeatable.
        #[arg(long = "k", allow_hyphen_values = true)]
        extra_k: Vec<String>,
        /// `remin,remax,immin,immax` for `--mode poles`.
        #[arg(long, allow_hyphen_values = true, default_value = "0.5,10,-2,-0.01")]
        rect: String,
        /// Pass threshold on the maximum deviation (default: 1e-8 spectra,
        /// 1e-9 smatrix, 1e-6 poles).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in graph or symmetry description to a file.
    Export {
        /// Built-in graph name.
        #[arg(long, conflicts_with = "symmetry")]
        graph: Option<String>,
        /// Built-in symmetry name (describes the action on `d4-parent`).
        #[arg(long)]
        symmetry: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Spectra,
    Smatrix,
    Poles,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Input(m) | Self::Numerical(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<SymmetryError> for CliError {
    fn from(e: SymmetryError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<BuiltinError> for CliError {
    fn from(e: BuiltinError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NotInSpectrum { .. } => Self::Numerical(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<ScatteringError> for CliError {
    fn from(e: ScatteringError) -> Self {
        match e {
            ScatteringError::ZeroWavenumber | ScatteringError::InvalidRectangle(_) => Self::Input(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Scattering(s) => s.into(),
            AnalysisError::Spectral(s) => s.into(),
            other => Self::Input(other.to_string()),
        }
    }
}

/// A loaded graph with the bytes its hash is taken over.
struct LoadedGraph {
    name: String,
    graph: ExtendedGraph,
    bytes: Vec<u8>,
}

fn load_graph_arg(arg: &str) -> CliResult<LoadedGraph> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let graph = builtin_graph(name)?;
        let bytes = graph_to_json(&graph).into_bytes();
        return Ok(LoadedGraph {
            name: arg.to_string(),
            graph,
            bytes,
        });
    }
    let bytes = fs::read(arg).map_err(|e| CliError::Input(format!("cannot read graph file {arg}: {e}")))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input(format!("{arg} is not UTF-8")))?;
    let graph = parse_graph(&text).map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
    Ok(LoadedGraph {
        name: arg.to_string(),
        graph,
        bytes,
    })
}

fn resolve_input(input: &GraphInput) -> CliResult<LoadedGraph> {
    match (&input.graph, &input.builtin) {
        (Some(_), Some(_)) => Err(CliError::Input("give either a graph file or --builtin, not both".into())),
        (None, None) => Err(CliError::Input(format!(
            "no graph given; pass a file or --builtin NAME ({})",
            BUILTIN_GRAPHS.join(", ")
        ))),
        (Some(path), None) => load_graph_arg(path),
        (None, Some(name)) => load_graph_arg(&format!("builtin:{name}")),
    }
}

fn load_symmetry_arg(arg: &str, graph: &ExtendedGraph) -> CliResult<(Symmetry, Vec<u8>)> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let sym = builtin_symmetry(name)?;
        let bytes = symmetry_to_json(&sym, graph).into_bytes();
        return Ok((sym, bytes));
    }
    let bytes = fs::read(arg).map_err(|e| CliError::Input(format!("cannot read symmetry file {arg}: {e}")))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input(format!("{arg} is not UTF-8")))?;
    let sym = parse_symmetry(&text, graph).map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
    Ok((sym, bytes))
}

fn parse_floats(text: &str, count: usize, what: &str) -> CliResult<Vec<f64>> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == count && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(CliError::Input(format!("{what} must be {count} comma-separated finite numbers, got '{text}'"))),
    }
}

fn parse_k(text: &str) -> CliResult<Complex64> {
    let v = parse_floats(text, 2, "k")?;
    Ok(Complex64::new(v[0], v[1]))
}

fn parse_rect(text: &str) -> CliResult<Rectangle> {
    let v = parse_floats(text, 4, "rect")?;
    Ok(Rectangle::new(v[0], v[1], v[2], v[3])?)
}

fn parse_transplantation(arg: Option<&str>, n: usize) -> CliResult<(Transplantation, Option<Vec<u8>>)> {
    let Some(arg) = arg else {
        return Ok((Transplantation::identity(n.max(1)), None));
    };
    if arg == "builtin:d4" {
        return Ok((Transplantation::new(transplantation_matrix())?, None));
    }
    let bytes = fs::read(arg).map_err(|e| CliError::Input(format!("cannot read transplantation file {arg}: {e}")))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("{arg}: line {} column {}: {e}", e.line(), e.column())))?;
    let bad = || CliError::Input(format!("{arg}: expected a square array of rows of numbers or [re, im] pairs"));
    let rows = value.as_array().ok_or_else(bad)?;
    let size = rows.len();
    let mut entries = Vec::with_capacity(size * size);
    for row in rows {
        let row = row.as_array().ok_or_else(bad)?;
        if row.len() != size {
            return Err(bad());
        }
        for x in row {
            let z = match x {
                serde_json::Value::Number(n) => Complex64::new(n.as_f64().ok_or_else(bad)?, 0.0),
                serde_json::Value::Array(pair) if pair.len() == 2 => Complex64::new(
                    pair[0].as_f64().ok_or_else(bad)?,
                    pair[1].as_f64().ok_or_else(bad)?,
                ),
                _ => return Err(bad()),
            };
            entries.push(z);
        }
    }
    if size == 0 {
        return Err(bad());
    }
    let matrix = qgraph::linalg::CMatrix::from_row_slice(size, size, &entries);
    Ok((Transplantation::new(matrix)?, Some(bytes)))
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli, manifest: &mut Manifest) -> CliResult<u8> {
    match cli.command {
        Command::Spectrum {
            input,
            kmin,
            kmax,
            tol,
            scan_step,
            out,
        } => {
            let g = resolve_input(&input)?;
            manifest.input("graph", &g.name, &g.bytes);
            let opts = SpectrumOptions {
                scan_step,
                k_tol: tol,
                ..SpectrumOptions::default()
            };
            let s = spectrum(g.graph.graph(), kmin, kmax, &opts)?;
            write_output(out.as_deref(), &spectrum_csv(&s, &manifest.lines()))?;
        }
        Command::Smatrix { input, k, out } => {
            let g = resolve_input(&input)?;
            manifest.input("graph", &g.name, &g.bytes);
            let k = parse_k(&k)?;
            let s = smatrix(&g.graph, k)?;
            let mut lines = manifest.lines();
            lines.push(format!("k: {},{}", num(k.re), num(k.im)));
            if s.perturbed {
                lines.push(format!(
                    "warning: A(k) singular at real k (embedded eigenvalue); evaluated at {},{}",
                    num(s.evaluated_at.re),
                    num(s.evaluated_at.im)
                ));
            }
            write_output(out.as_deref(), &smatrix_csv(&s.s, &lines))?;
        }
        Command::Poles { input, rect, tol, out } => {
            let g = resolve_input(&input)?;
            manifest.input("graph", &g.name, &g.bytes);
            let rect = parse_rect(&rect)?;
            let opts = ResonanceOptions {
                k_tol: tol,
                ..ResonanceOptions::default()
            };
            manifest.tolerance("k_tol", tol);
            manifest.tolerance("merge_tol", opts.merge_tol);
            let r = resonances(&g.graph, &rect, &opts)?;
            write_output(out.as_deref(), &poles_csv(&r, &manifest.lines()))?;
        }
        Command::Quotient {
            graph,
            symmetry,
            rep,
            out,
            provenance,
        } => {
            let g = load_graph_arg(&graph)?;
            let (sym, sym_bytes) = load_symmetry_arg(&symmetry, &g.graph)?;
            manifest.input("graph", &g.name, &g.bytes);
            manifest.input("symmetry", &symmetry, &sym_bytes);
            let rep = sym.rep(&rep)?;
            let q = quotient(&g.graph, &sym.action, rep)?;
            let text = graph_to_json(&q.quotient);
            write_output(out.as_deref(), &text)?;
            if let Some(path) = &out {
                let sidecar = PathBuf::from(format!("{}.manifest.json", path.display()));
                write_output(Some(&sidecar), &manifest.to_json())?;
            }
            if let Some(path) = &provenance {
                let mut prov = serde_json::to_string_pretty(&q.provenance).expect("provenance serializes");
                prov.push('\n');
                write_output(Some(path), &prov)?;
            }
        }
        Command::Compare {
            graph1,
            graph2,
            mode,
            transplantation,
            kmin,
            kmax,
            kstep,
            kim,
            extra_k,
            rect,
            tol,
            format,
            out,
        } => {
            let g1 = load_graph_arg(&graph1)?;
            let g2 = load_graph_arg(&graph2)?;
            manifest.input("graph1", &g1.name, &g1.bytes);
            manifest.input("graph2", &g2.name, &g2.bytes);
            let report = match mode {
                Mode::Spectra => {
                    let tol = tol.unwrap_or(1e-8);
                    manifest.tolerance("tol", tol);
                    let opts = SpectrumOptions::default();
                    let (s1, s2) = rayon::join(
                        || spectrum(g1.graph.graph(), kmin, kmax, &opts),
                        || spectrum(g2.graph.graph(), kmin, kmax, &opts),
                    );
                    compare_spectra(&s1?, &s2?, tol)?
                }
                Mode::Smatrix => {
                    let tol = tol.unwrap_or(1e-9);
                    manifest.tolerance("tol", tol);
                    let (t, t_bytes) = parse_transplantation(transplantation.as_deref(), g1.graph.lead_count())?;
                    if let (Some(name), Some(bytes)) = (&transplantation, &t_bytes) {
                        manifest.input("transplantation", name, bytes);
                    } else if let Some(name) = &transplantation {
                        manifest.note(format!("transplantation: {name}"));
                    }
                    if !(kstep > 0.0 && kmax >= kmin) {
                        return Err(CliError::Input("need kstep > 0 and kmax >= kmin".into()));
                    }
                    let n = ((kmax - kmin) / kstep + 1e-9).floor() as usize;
                    let mut ks: Vec<Complex64> = (0..=n).map(|i| Complex64::new(kmin + i as f64 * kstep, kim)).collect();
                    for k in &extra_k {
                        ks.push(parse_k(k)?);
                    }
                    compare_smatrix(&g1.graph, &g2.graph, &t, &ks, tol)?
                        .with_metadata("grid", format!("{kmin}..{kmax} step {kstep}, im {kim}"))
                }
                Mode::Poles => {
                    let tol = tol.unwrap_or(1e-6);
                    manifest.tolerance("tol", tol);
                    let rect = parse_rect(&rect)?;
                    let opts = ResonanceOptions::default();
                    let (r1, r2) = rayon::join(|| resonances(&g1.graph, &rect, &opts), || resonances(&g2.graph, &rect, &opts));
                    compare_poles(&r1?, &r2?, tol)?
                }
            };
            let report = report
                .with_metadata("graph1", g1.name.clone())
                .with_metadata("graph2", g2.name.clone());
            write_output(out.as_deref(), &render_report(&report, format, manifest))?;
            if !report.pass {
                return Ok(1);
            }
        }
        Command::Export { graph, symmetry, out } => match (graph, symmetry) {
            (Some(name), None) => {
                let g = builtin_graph(&name)?;
                let text = graph_to_json(&g);
                write_output(out.as_deref(), &text)?;
                if let Some(path) = &out {
                    let sidecar = PathBuf::from(format!("{}.manifest.json", path.display()));
                    write_output(Some(&sidecar), &manifest.to_json())?;
                }
            }
            (None, Some(name)) => {
                let sym = builtin_symmetry(&name)?;
                let parent = builtin_graph("d4-parent")?;
                write_output(out.as_deref(), &symmetry_to_json(&sym, &parent))?;
            }
            _ => {
                return Err(CliError::Input(format!(
                    "pass --graph NAME ({}) or --symmetry NAME ({})",
                    BUILTIN_GRAPHS.join(", "),
                    BUILTIN_SYMMETRIES.join(", ")
                )))
            }
        },
    }
    Ok(0)
}

fn render_report(report: &ComparisonReport, format: Format, manifest: &Manifest) -> String {
    match format {
        Format::Text => {
            let mut out: String = manifest.lines().iter().map(|l| format!("# {l}\n")).collect();
            out.push_str(&report.to_text());
            out
        }
        Format::Json => {
            let value = serde_json::json!({
                "manifest": manifest.to_value(),
                "report": report,
            });
            let mut out = serde_json::to_string_pretty(&value).expect("report serializes");
            out.push('\n');
            out
        }
        Format::Csv => pairs_csv(report, &manifest.lines()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut manifest = Manifest::new(std::env::args().skip(1).collect(), cli.timestamp);
    match run(cli, &mut manifest) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
