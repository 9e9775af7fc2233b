//! Vertex-condition rows shared by the secular and scattering systems.
//!
//! On edge `e` of length `L` the solution is
//! `alpha_e * exp(i k x) + beta_e * exp(i k (L - x))`. Column `2e` holds
//! `alpha_e`, column `2e + 1` holds `beta_e`, and column `2|E| + l` holds the
//! outgoing amplitude of lead `l`. Derivative rows are divided by `i k`,
//! which leaves the solution set unchanged and keeps entries of order one.

use crate::graph::{Lead, MetricGraph, VertexCondition};
use crate::linalg::{CMatrix, C64, I};

#[derive(Clone, Copy)]
enum Col {
    Unknown(usize),
    Incoming(usize),
}

type Form = [(Col, C64); 2];

struct End {
    value: Form,
    deriv: Form,
}

fn vertex_ends(g: &MetricGraph, leads: &[Lead], k: C64) -> Vec<Vec<End>> {
    let one = C64::new(1.0, 0.0);
    let mut ends: Vec<Vec<End>> = (0..g.vertex_count()).map(|_| Vec::new()).collect();
    for (e, edge) in g.edges().iter().enumerate() {
        let phase = (I * k * edge.length).exp();
        let (a, b) = (Col::Unknown(2 * e), Col::Unknown(2 * e + 1));
        ends[edge.from].push(End {
            value: [(a, one), (b, phase)],
            deriv: [(a, one), (b, -phase)],
        });
        ends[edge.to].push(End {
            value: [(a, phase), (b, one)],
            deriv: [(a, -phase), (b, one)],
        });
    }
    let n_edge_cols = 2 * g.edge_count();
    for (l, lead) in leads.iter().enumerate() {
        let (out, inc) = (Col::Unknown(n_edge_cols + l), Col::Incoming(l));
        ends[lead.vertex].push(End {
            value: [(out, one), (inc, one)],
            deriv: [(out, one), (inc, -one)],
        });
    }
    ends
}

/// Returns `(A, B)` with `A x = B a_in`. For a compact graph `B` has no
/// columns and `A` is the secular matrix.
pub(crate) fn assemble(g: &MetricGraph, leads: &[Lead], k: C64) -> (CMatrix, CMatrix) {
    let n = 2 * g.edge_count() + leads.len();
    let mut a = CMatrix::zeros(n, n);
    let mut c = CMatrix::zeros(n, leads.len());
    let mut row = 0usize;
    let add = |row: usize, form: &Form, scale: f64, a: &mut CMatrix, c: &mut CMatrix| {
        for &(col, coeff) in form {
            match col {
                Col::Unknown(j) => a[(row, j)] += coeff * scale,
                Col::Incoming(j) => c[(row, j)] += coeff * scale,
            }
        }
    };
    for (v, ends) in vertex_ends(g, leads, k).iter().enumerate() {
        match g.vertices()[v].condition {
            VertexCondition::Dirichlet => {
                for end in ends {
                    add(row, &end.value, 1.0, &mut a, &mut c);
                    row += 1;
                }
            }
            VertexCondition::Neumann => {
                if ends.is_empty() {
                    continue;
                }
                for end in &ends[1..] {
                    add(row, &ends[0].value, 1.0, &mut a, &mut c);
                    add(row, &end.value, -1.0, &mut a, &mut c);
                    row += 1;
                }
                for end in ends {
                    add(row, &end.deriv, 1.0, &mut a, &mut c);
                }
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, n);
    (a, -c)
}
