//! Coordinate text format for QUBO models.
//!
//! Header comments carry the size, offset and penalty constants. Each further
//! line is `i j coeff` with `i <= j`; `i == j` is a linear term. Coefficients
//! are written in shortest round-trip form, so re-reading a file reproduces
//! every coefficient bit for bit. A JSON sidecar maps indices back to
//! departures and auxiliary products.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use railqubo_core::qubo::{Qubo, QuboModel, Var};
use railqubo_core::DispatchInstance;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuboHeader {
    pub p_sum: Option<f64>,
    pub p_pair: Option<f64>,
    pub p_qubic: Option<f64>,
    pub floor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuboFile {
    pub qubo: Qubo,
    pub header: QuboHeader,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct QuboFormatError {
    pub line: usize,
    pub message: String,
}

pub fn write_qubo(model: &QuboModel) -> String {
    let q = &model.qubo;
    let mut out = String::new();
    out.push_str("# railqubo qubo\n");
    let _ = writeln!(out, "# n {}", q.n);
    let _ = writeln!(out, "# offset {:?}", q.offset);
    let _ = writeln!(out, "# p_sum {:?}", model.params.p_sum);
    let _ = writeln!(out, "# p_pair {:?}", model.params.p_pair);
    let _ = writeln!(out, "# p_qubic {:?}", model.params.p_qubic);
    let _ = writeln!(out, "# floor {:?}", model.floor);
    let mut entries: Vec<((usize, usize), f64)> = q
        .linear
        .iter()
        .map(|(&i, &c)| ((i, i), c))
        .chain(q.quadratic.iter().map(|(&k, &c)| (k, c)))
        .collect();
    entries.sort_by_key(|&(k, _)| k);
    for ((i, j), c) in entries {
        let _ = writeln!(out, "{i} {j} {c:?}");
    }
    out
}

pub fn read_qubo(text: &str) -> Result<QuboFile, QuboFormatError> {
    let mut n: Option<usize> = None;
    let mut offset = 0.0;
    let mut header = QuboHeader::default();
    let mut qubo = Qubo::default();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |message: String| QuboFormatError { line, message };
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(c) = s.strip_prefix('#') {
            let mut it = c.split_whitespace();
            let (Some(key), Some(value)) = (it.next(), it.next()) else {
                continue;
            };
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad value `{value}` for `{key}`")))
            };
            match key {
                "n" => {
                    n = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("bad variable count `{value}`")))?,
                    )
                }
                "offset" => offset = float()?,
                "p_sum" => header.p_sum = Some(float()?),
                "p_pair" => header.p_pair = Some(float()?),
                "p_qubic" => header.p_qubic = Some(float()?),
                "floor" => header.floor = Some(float()?),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = s.split_whitespace().collect();
        let [i, j, c] = fields[..] else {
            return Err(err(format!("expected `i j coeff`, found `{s}`")));
        };
        let i: usize = i.parse().map_err(|_| err(format!("bad index `{i}`")))?;
        let j: usize = j.parse().map_err(|_| err(format!("bad index `{j}`")))?;
        let c: f64 = c
            .parse()
            .map_err(|_| err(format!("bad coefficient `{c}`")))?;
        let Some(n) = n else {
            return Err(err("term before the `# n` header".into()));
        };
        if i > j {
            return Err(err(format!("indices must satisfy i <= j, found {i} > {j}")));
        }
        if j >= n {
            return Err(err(format!("index {j} out of range for {n} variables")));
        }
        let fresh = if i == j {
            qubo.linear.insert(i, c).is_none()
        } else {
            qubo.quadratic.insert((i, j), c).is_none()
        };
        if !fresh {
            return Err(err(format!("duplicate term ({i}, {j})")));
        }
    }
    qubo.n = n.ok_or(QuboFormatError {
        line: 0,
        message: "missing `# n` header".into(),
    })?;
    qubo.offset = offset;
    Ok(QuboFile { qubo, header })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VarRecord {
    /// Departure of `train` from `station` at `tick` grid steps.
    X {
        index: usize,
        train: String,
        station: String,
        tick: i64,
        minutes: f64,
    },
    /// Product of two departure indicators.
    Aux { index: usize, of: [usize; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    pub resolution: u32,
    pub variables: Vec<VarRecord>,
}

pub fn sidecar(model: &QuboModel, instance: &DispatchInstance) -> Sidecar {
    let r = instance.scenario.resolution;
    let variables = (0..model.index.len())
        .filter_map(|i| {
            Some(match model.index.var(i)? {
                Var::X { event, time } => VarRecord::X {
                    index: i,
                    train: instance.train(event.train).id.clone(),
                    station: instance.station(event.station).id.clone(),
                    tick: time,
                    minutes: time as f64 / r as f64,
                },
                Var::Aux(a) => VarRecord::Aux {
                    index: i,
                    of: [a.a, a.b],
                },
            })
        })
        .collect();
    Sidecar {
        n: model.n(),
        resolution: r,
        variables,
    }
}

/// Coefficients keyed by `(i, j)`, linear terms on the diagonal.
pub fn coefficient_map(q: &Qubo) -> BTreeMap<(usize, usize), u64> {
    q.linear
        .iter()
        .map(|(&i, &c)| ((i, i), c.to_bits()))
        .chain(q.quadratic.iter().map(|(&k, &c)| (k, c.to_bits())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_lines_are_located() {
        assert_eq!(read_qubo("# n 2\n0 1\n").unwrap_err().line, 2);
        assert_eq!(read_qubo("0 0 1\n").unwrap_err().line, 1);
        assert!(read_qubo("# n 2\n1 0 1\n").is_err());
        assert!(read_qubo("# n 2\n0 2 1\n").is_err());
        assert!(read_qubo("# n 2\n0 0 1\n0 0 2\n").is_err());
    }

    #[test]
    fn awkward_floats_survive() {
        let text = "# n 2\n# offset -0.1\n0 0 0.30000000000000004\n0 1 1e-300\n";
        let f = read_qubo(text).unwrap();
        assert_eq!(f.qubo.linear[&0], 0.1 + 0.2);
        assert_eq!(f.qubo.quadratic[&(0, 1)], 1e-300);
        assert_eq!(f.qubo.offset, -0.1);
    }
}
