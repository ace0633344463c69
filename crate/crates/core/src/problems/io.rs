//! Plain-text instance format. Example:
//!
//! ```text
//! balm-instance kind=qp m=2 n=2 seed=7
//! objective quadratic
//! feasible free
//! c 0 0
//! constant 0
//! W
//! 1 0
//! 0 1
//! constraint inequality
//! A
//! 1 1
//! -1 0
//! b 1 0
//! ```
//!
//! `objective` is one of `linear`, `quadratic`, `piecewise_max`,
//! `log_sum_exp`; the last two are followed by `rows <count>` and one line
//! per row. MDP instances add `states=`, `actions=` and `discount=` to the
//! header. Numbers use the shortest representation that round-trips.

use super::{ConstrainedProblem, FeasibleSet, LinearConstraint, Objective, ProblemKind, Sense};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use std::fmt::Write as _;

pub fn write_instance<T: Scalar>(problem: &ConstrainedProblem<T>) -> String {
    let mut out = String::new();
    let kind = problem.kind();
    let _ = write!(
        out,
        "balm-instance kind={} m={} n={} seed={}",
        kind.name(),
        problem.constraint_dim(),
        problem.dim(),
        problem.seed()
    );
    if let ProblemKind::MdpLp { states, actions, discount } = kind {
        let _ = write!(out, " states={states} actions={actions} discount={discount}");
    }
    out.push('\n');
    let row = |out: &mut String, label: &str, v: &[T]| {
        out.push_str(label);
        for x in v {
            let _ = write!(out, " {}", x.as_f64());
        }
        out.push('\n');
    };
    let matrix = |out: &mut String, m: &Matrix<T>| {
        for i in 0..m.rows() {
            let line: Vec<String> = m.row(i).iter().map(|x| x.as_f64().to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    };
    match problem.objective() {
        Objective::Linear { c } => {
            out.push_str("objective linear\n");
            feasible_line(&mut out, problem.feasible_set());
            row(&mut out, "c", c);
        }
        Objective::Quadratic { w, c, constant } => {
            out.push_str("objective quadratic\n");
            feasible_line(&mut out, problem.feasible_set());
            row(&mut out, "c", c);
            let _ = writeln!(out, "constant {}", constant.as_f64());
            out.push_str("W\n");
            matrix(&mut out, w);
        }
        Objective::PiecewiseMax { rows } | Objective::LogSumExp { rows } => {
            let name = if matches!(problem.objective(), Objective::PiecewiseMax { .. }) {
                "piecewise_max"
            } else {
                "log_sum_exp"
            };
            let _ = writeln!(out, "objective {name}");
            feasible_line(&mut out, problem.feasible_set());
            let _ = writeln!(out, "rows {}", rows.rows());
            matrix(&mut out, rows);
        }
    }
    match problem.constraint() {
        None => out.push_str("constraint none\n"),
        Some(con) => {
            let sense = match con.sense {
                Sense::Equality => "equality",
                Sense::Inequality => "inequality",
            };
            let _ = writeln!(out, "constraint {sense}");
            out.push_str("A\n");
            matrix(&mut out, &con.a);
            row(&mut out, "b", &con.b);
        }
    }
    out
}

fn feasible_line(out: &mut String, set: FeasibleSet) {
    out.push_str(match set {
        FeasibleSet::FreeSpace => "feasible free\n",
        FeasibleSet::Simplex => "feasible simplex\n",
    });
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() && !l.starts_with('#') {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of input")),
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn keyword(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        match l.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            None if l == key => Ok(""),
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    fn numbers<T: Scalar>(&self, s: &str, expected: usize) -> Result<Vec<T>> {
        let v: Vec<T> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map(T::lit).map_err(|e| self.err(format!("bad number `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != expected {
            return Err(self.err(format!("expected {expected} numbers, found {}", v.len())));
        }
        Ok(v)
    }

    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> Result<Matrix<T>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let l = self.next()?;
            data.extend(self.numbers::<T>(l, cols)?);
        }
        Matrix::from_row_major(rows, cols, data)
    }
}

pub fn read_instance<T: Scalar>(text: &str) -> Result<ConstrainedProblem<T>> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let header = lines.keyword("balm-instance")?;
    let mut fields = std::collections::HashMap::new();
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| lines.err(format!("bad header field `{tok}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| lines.err(format!("missing header field `{k}`")));
    let parse_usize = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| lines.err(format!("bad value for `{k}`")))
    };
    let (m, n) = (parse_usize("m")?, parse_usize("n")?);
    let seed: u64 = get("seed")?.parse().map_err(|_| lines.err("bad seed"))?;
    let kind = match get("kind")? {
        "pmax" => ProblemKind::PiecewiseMax,
        "lse" => ProblemKind::LogSumExp,
        "qp" => ProblemKind::RandomQp,
        "counterexample" => ProblemKind::Counterexample,
        "custom" => ProblemKind::Custom,
        "mdp" => ProblemKind::MdpLp {
            states: parse_usize("states")?,
            actions: parse_usize("actions")?,
            discount: get("discount")?.parse().map_err(|_| lines.err("bad discount"))?,
        },
        other => return Err(lines.err(format!("unknown kind `{other}`"))),
    };

    let objective_name = lines.keyword("objective")?;
    let feasible = match lines.keyword("feasible")? {
        "free" => FeasibleSet::FreeSpace,
        "simplex" => FeasibleSet::Simplex,
        other => return Err(lines.err(format!("unknown feasible set `{other}`"))),
    };
    let objective = match objective_name {
        "linear" => {
            let c = lines.keyword("c")?;
            Objective::Linear { c: lines.numbers(c, n)? }
        }
        "quadratic" => {
            let c = lines.keyword("c")?;
            let c = lines.numbers(c, n)?;
            let k = lines.keyword("constant")?;
            let constant = lines.numbers::<T>(k, 1)?[0];
            lines.keyword("W")?;
            let w = lines.matrix(n, n)?;
            Objective::Quadratic { w, c, constant }
        }
        "piecewise_max" | "log_sum_exp" => {
            let r = lines.keyword("rows")?;
            let r: usize = r.parse().map_err(|_| lines.err("bad row count"))?;
            let rows = lines.matrix(r, n)?;
            if objective_name == "piecewise_max" {
                Objective::PiecewiseMax { rows }
            } else {
                Objective::LogSumExp { rows }
            }
        }
        other => return Err(lines.err(format!("unknown objective `{other}`"))),
    };
    let constraint = match lines.keyword("constraint")? {
        "none" => None,
        s @ ("equality" | "inequality") => {
            lines.keyword("A")?;
            let a = lines.matrix(m, n)?;
            let b = lines.keyword("b")?;
            let b = lines.numbers(b, m)?;
            let sense = if s == "equality" { Sense::Equality } else { Sense::Inequality };
            Some(LinearConstraint { a, b, sense })
        }
        other => return Err(lines.err(format!("unknown constraint sense `{other}`"))),
    };
    Ok(ConstrainedProblem::new(objective, feasible, constraint)?.tagged(kind, seed))
}
