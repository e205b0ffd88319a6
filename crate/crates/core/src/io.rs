//! Plain-text matrix and constraint files.
//!
//! Matrix file: first line `rows cols`, then `rows·cols` lines `re im` in
//! row-major order.
//!
//! Constraint file: one constraint per line, written as sparse triples
//! `idx re im idx re im …` with 0-based indices. Each line is the linear
//! functional `f ↦ Σ (re + i·im)·f[idx]`, and the domain is the set of vectors
//! annihilated by every functional. Blank lines and lines starting with `#`
//! are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{is_finite, CMatrix, C64};

/// One sparse linear functional.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, C64)>,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, C64)>) -> Self {
        Self { terms }
    }

    /// The functional `f ↦ f[idx]`.
    pub fn point(idx: usize) -> Self {
        Self::new(vec![(idx, C64::new(1.0, 0.0))])
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_f64(token: &str, kind: &'static str, line: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        kind,
        line,
        message: format!("`{token}` is not a number"),
    })
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    const KIND: &str = "matrix";
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        kind: KIND,
        line: 1,
        message: "missing `rows cols` header".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |t: &str| {
        t.parse::<usize>().map_err(|_| Error::Parse {
            kind: KIND,
            line: hline,
            message: format!("`{t}` is not a dimension"),
        })
    };
    if dims.len() != 2 {
        return Err(Error::Parse {
            kind: KIND,
            line: hline,
            message: "header must be `rows cols`".into(),
        });
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut entries = Vec::with_capacity(rows * cols);
    for (line, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::Parse {
                kind: KIND,
                line,
                message: "expected `re im`".into(),
            });
        }
        entries.push(C64::new(
            parse_f64(parts[0], KIND, line)?,
            parse_f64(parts[1], KIND, line)?,
        ));
    }
    if entries.len() != rows * cols {
        return Err(Error::Parse {
            kind: KIND,
            line: hline,
            message: format!("expected {} entries, found {}", rows * cols, entries.len()),
        });
    }
    let m = CMatrix::from_row_slice(rows, cols, &entries);
    if !is_finite(&m) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
        }
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMatrix> {
    parse_matrix(&read(path.as_ref())?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &CMatrix) -> Result<()> {
    write(path.as_ref(), &format_matrix(m))
}

pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>> {
    const KIND: &str = "constraint";
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() % 3 != 0 {
            return Err(Error::Parse {
                kind: KIND,
                line,
                message: "expected triples `idx re im`".into(),
            });
        }
        let mut terms = Vec::with_capacity(parts.len() / 3);
        for t in parts.chunks(3) {
            let idx = t[0].parse::<usize>().map_err(|_| Error::Parse {
                kind: KIND,
                line,
                message: format!("`{}` is not an index", t[0]),
            })?;
            let z = C64::new(parse_f64(t[1], KIND, line)?, parse_f64(t[2], KIND, line)?);
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            terms.push((idx, z));
        }
        out.push(Constraint::new(terms));
    }
    Ok(out)
}

pub fn format_constraints(constraints: &[Constraint]) -> String {
    let mut out = String::new();
    for c in constraints {
        let line: Vec<String> = c
            .terms
            .iter()
            .map(|(idx, z)| format!("{idx} {:e} {:e}", z.re, z.im))
            .collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn read_constraints(path: impl AsRef<Path>) -> Result<Vec<Constraint>> {
    parse_constraints(&read(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_small_matrix() {
        let m = parse_matrix("2 2\n1 0\n0 1\n0 -1\n2 0\n").unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, 1.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, -1.0));
        assert_eq!(m[(1, 1)], C64::new(2.0, 0.0));
    }

    #[test]
    fn rejects_wrong_entry_count() {
        assert!(matches!(
            parse_matrix("2 2\n1 0\n0 1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_matrix(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("1 1\n1 x\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("1 1\nnan 0\n"), Err(Error::NonFinite)));
    }

    #[test]
    fn parses_constraints_with_comments() {
        let cs = parse_constraints("# boundary\n0 1 0\n\n3 1 0 4 -1 0.5\n").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].terms[1], (4, C64::new(-1.0, 0.5)));
        assert!(parse_constraints("0 1\n").is_err());
    }

    proptest! {
        #[test]
        fn matrix_text_round_trips(entries in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 6)) {
            let m = CMatrix::from_row_slice(
                2, 3, &entries.iter().map(|&(a, b)| C64::new(a, b)).collect::<Vec<_>>(),
            );
            prop_assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        }
    }
}
