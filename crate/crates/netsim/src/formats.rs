//! Text formats: edge lists and the CSV outputs.
//!
//! Numbers in CSV cells use [`sig9`] (times) or Rust's shortest round-trip
//! `Display` (everything else), so output is locale independent and stable.

use std::fmt::Write as _;

use netsim_core::coupling::StepRecord;
use netsim_core::des::Trajectory;
use netsim_core::dts::DtsTrajectory;
use netsim_core::graph::{Graph, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `n <count>` then one `u v` line per edge, `u < v`, lexicographic order.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::with_capacity(12 * g.edge_count() + 16);
    writeln!(out, "n {}", g.node_count()).unwrap();
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

pub fn parse_edge_list(text: &str) -> Result<Graph, FormatError> {
    let syntax = |line: usize, msg: &str| FormatError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let n: usize = header
        .strip_prefix("n ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| syntax(1, "expected `n <count>`"))?;
    let mut edges = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(syntax(no, "expected `u v`"));
        };
        let u: usize = u.parse().map_err(|_| syntax(no, "bad node id"))?;
        let v: usize = v.parse().map_err(|_| syntax(no, "bad node id"))?;
        if u >= v {
            return Err(syntax(no, "edges must be written with u < v"));
        }
        edges.push((u, v));
    }
    Ok(Graph::from_edges(n, edges)?)
}

/// `x` with 9 significant digits, trailing zeros trimmed, like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.8e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `time,node,kind`; needs a retained event log.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from("time,node,kind\n");
    for e in &tr.events {
        writeln!(out, "{},{},{}", sig9(e.time), e.node, e.kind.as_str()).unwrap();
    }
    out
}

/// `step,time,prevalence`, one row per stored state including step 0.
pub fn prevalence_csv(tr: &DtsTrajectory) -> String {
    let mut out = String::from("step,time,prevalence\n");
    for (i, (x, t)) in tr.states.iter().zip(&tr.times).enumerate() {
        writeln!(out, "{i},{},{}", sig9(*t), x.prevalence()).unwrap();
    }
    out
}

pub const ERROR_TRACE_HEADER: &str = "rep,step,time,eps_l1,d_l1,dominance_ok";

/// Rows of the error-trace CSV for one coupled run (no header).
pub fn error_trace_rows(out: &mut String, rep: u64, records: &[StepRecord]) {
    for r in records {
        writeln!(
            out,
            "{rep},{},{},{},{},{}",
            r.step,
            sig9(r.time),
            r.eps_l1,
            r.local_error(),
            r.dominance_ok
        )
        .unwrap();
    }
}

/// Plain CSV cell for an optional value: empty when absent.
pub fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use netsim_core::graph::make_torus;

    #[test]
    fn edge_list_round_trip() {
        let g = make_torus(3, 4).unwrap();
        let text = write_edge_list(&g);
        assert!(text.starts_with("n 12\n0 1\n0 2\n0 3\n"));
        let back = parse_edge_list(&text).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(write_edge_list(&back), text);
    }

    #[test]
    fn edge_list_errors() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("nodes 3\n").is_err());
        assert!(parse_edge_list("n 3\n1 0\n").is_err());
        assert!(parse_edge_list("n 3\n0 1 2\n").is_err());
        assert!(matches!(parse_edge_list("n 3\n0 1\n0 1\n"), Err(FormatError::Graph(_))));
        assert!(matches!(parse_edge_list("n 2\n0 5\n"), Err(FormatError::Graph(_))));
        assert_eq!(parse_edge_list("n 2\n").unwrap().edge_count(), 0);
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.123456789123), "0.123456789");
        assert_eq!(sig9(12.5), "12.5");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567891.0), "1.23456789e+09");
        assert_eq!(sig9(1.5e-7), "1.5e-07");
        assert_eq!(sig9(0.00012345678912), "0.000123456789");
    }
}
