//! Finite-trace satisfaction.
//!
//! Bounded semantics: `X a` is false at the last position and `a U b` needs its
//! witness inside the trace. Derived operators follow from their desugaring, so
//! `G a` means `a` at every remaining position.

use std::collections::BTreeSet;

use super::ltl::LtlFormula;

/// Whether `phi` holds at position 0 of `trace`. An empty trace satisfies nothing.
pub fn check_trace(phi: &LtlFormula, trace: &[BTreeSet<String>]) -> bool {
    check_trace_by(phi, trace.len(), |p, i| trace[i].contains(p))
}

/// Like [`check_trace`] with propositions supplied by a callback `holds(prop, position)`.
pub fn check_trace_by(phi: &LtlFormula, len: usize, holds: impl Fn(&str, usize) -> bool) -> bool {
    len > 0 && satisfaction(phi, len, &holds)[0]
}

/// Truth value of `phi` at every position of a trace of length `len`.
pub fn satisfaction(phi: &LtlFormula, len: usize, holds: &impl Fn(&str, usize) -> bool) -> Vec<bool> {
    eval(&phi.desugar(), len, holds)
}

fn eval(phi: &LtlFormula, n: usize, holds: &impl Fn(&str, usize) -> bool) -> Vec<bool> {
    match phi {
        LtlFormula::True => vec![true; n],
        LtlFormula::Prop(p) => (0..n).map(|i| holds(p, i)).collect(),
        LtlFormula::Not(a) => eval(a, n, holds).into_iter().map(|v| !v).collect(),
        LtlFormula::And(a, b) => {
            let (a, b) = (eval(a, n, holds), eval(b, n, holds));
            a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
        LtlFormula::Next(a) => {
            let a = eval(a, n, holds);
            (0..n).map(|i| i + 1 < n && a[i + 1]).collect()
        }
        LtlFormula::Until(a, b) => {
            let (a, b) = (eval(a, n, holds), eval(b, n, holds));
            let mut out = vec![false; n];
            let mut later = false;
            for i in (0..n).rev() {
                later = b[i] || (a[i] && later);
                out[i] = later;
            }
            out
        }
        other => unreachable!("not desugared: {other}"),
    }
}
