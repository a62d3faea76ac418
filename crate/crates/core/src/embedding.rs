//! Pre-trained word vectors in word2vec text format.
//!
//! ```text
//! 2 3
//! thermoelectric 0.1 0.2 0.3
//! Bi2Te3 0.0 -1.5 2.0
//! ```
//!
//! Tokens must match the corpus tokenization exactly; no normalization is
//! applied here.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },
    #[error("token {0:?} has no embedding")]
    MissingToken(String),
    #[error("token {0:?} has a zero-norm embedding")]
    ZeroNorm(String),
}

/// Vectors are held in double precision, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let file = File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file))
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let fmt_err = |line: usize, message: String| EmbeddingError::Format { line, message };
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| fmt_err(1, e.to_string()))?,
            None => return Err(fmt_err(1, "missing `<count> <dim>` header".into())),
        };
        let mut parts = header.split_whitespace();
        let (count, dim) = match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(d), None) => (
                c.parse::<usize>()
                    .map_err(|_| fmt_err(1, format!("bad count {c:?}")))?,
                d.parse::<usize>()
                    .map_err(|_| fmt_err(1, format!("bad dimension {d:?}")))?,
            ),
            _ => return Err(fmt_err(1, "header must be `<count> <dim>`".into())),
        };
        if dim == 0 {
            return Err(fmt_err(1, "dimension must be positive".into()));
        }

        let mut table = EmbeddingTable {
            dim,
            index: HashMap::with_capacity(count),
            data: Vec::with_capacity(count.saturating_mul(dim).min(1 << 24)),
            norms: Vec::with_capacity(count),
        };
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| fmt_err(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            if table.len() == count {
                return Err(fmt_err(
                    line_no,
                    format!("more entries than the {count} declared in the header"),
                ));
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap_or_default().to_owned();
            let start = table.data.len();
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("non-numeric component {f:?}")))?;
                if !v.is_finite() {
                    return Err(fmt_err(line_no, format!("non-finite component {f:?}")));
                }
                table.data.push(v);
            }
            let got = table.data.len() - start;
            if got != dim {
                return Err(fmt_err(
                    line_no,
                    format!("expected {dim} components, found {got}"),
                ));
            }
            if table.index.contains_key(&token) {
                return Err(EmbeddingError::DuplicateToken {
                    line: line_no,
                    token,
                });
            }
            let norm = table.data[start..].iter().map(|x| x * x).sum::<f64>().sqrt();
            table.norms.push(norm);
            table.index.insert(token, table.norms.len() - 1);
        }
        if table.len() != count {
            return Err(fmt_err(
                1,
                format!("header declares {count} entries, found {}", table.len()),
            ));
        }
        Ok(table)
    }

    /// Builds a table from in-memory vectors. Panics on dimension mismatch
    /// or duplicate tokens.
    pub fn from_vectors<S: Into<String>>(
        dim: usize,
        entries: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Self {
        let mut table = EmbeddingTable {
            dim,
            index: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
        };
        for (token, v) in entries {
            assert_eq!(v.len(), dim, "vector dimension mismatch");
            let token = token.into();
            assert!(!table.index.contains_key(&token), "duplicate token {token:?}");
            table.norms.push(v.iter().map(|x| x * x).sum::<f64>().sqrt());
            table.data.extend(v);
            table.index.insert(token, table.norms.len() - 1);
        }
        table
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        let i = *self.index.get(token)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    fn row(&self, token: &str) -> Result<(&[f64], f64), EmbeddingError> {
        let i = *self
            .index
            .get(token)
            .ok_or_else(|| EmbeddingError::MissingToken(token.to_owned()))?;
        let norm = self.norms[i];
        if norm == 0.0 {
            return Err(EmbeddingError::ZeroNorm(token.to_owned()));
        }
        Ok((&self.data[i * self.dim..(i + 1) * self.dim], norm))
    }

    /// Cosine similarity, clamped to `[-1, 1]`.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let (va, na) = self.row(a)?;
        let (vb, nb) = self.row(b)?;
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        Ok((dot / (na * nb)).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<EmbeddingTable, EmbeddingError> {
        EmbeddingTable::parse(text.as_bytes())
    }

    #[test]
    fn loads_header_and_vectors() {
        let t = parse("2 3\na 1 0 0\nb 0 1 0.5\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert_eq!(t.vector("b").unwrap(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn short_line_reports_line_number() {
        match parse("2 3\na 1 0 0\nb 0 1\n") {
            Err(EmbeddingError::Format { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_errors() {
        assert!(matches!(
            parse("2 2\na 1 0\na 0 1\n"),
            Err(EmbeddingError::DuplicateToken { line: 3, .. })
        ));
        assert!(matches!(parse("1 2\na 1 x\n"), Err(EmbeddingError::Format { line: 2, .. })));
        assert!(parse("3 2\na 1 0\nb 0 1\n").is_err());
        assert!(parse("1 2\na 1 0\nb 0 1\n").is_err());
        assert!(parse("").is_err());
        assert!(parse("1\n").is_err());
        assert!(parse("0 0\n").is_err());
    }

    #[test]
    fn cosine_fixtures() {
        let t = parse("4 2\nx 1 0\ny 0 1\nd 1 1\nz 0 0\n").unwrap();
        assert_eq!(t.cosine("x", "x").unwrap(), 1.0);
        assert_eq!(t.cosine("x", "y").unwrap(), 0.0);
        assert!((t.cosine("d", "x").unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(t.cosine("x", "nope"), Err(EmbeddingError::MissingToken(_))));
        assert!(matches!(t.cosine("z", "x"), Err(EmbeddingError::ZeroNorm(_))));
    }

    proptest! {
        #[test]
        fn cosine_symmetric_scale_invariant_bounded(
            a in prop::collection::vec(-10.0f64..10.0, 5),
            b in prop::collection::vec(-10.0f64..10.0, 5),
            scale in 0.01f64..100.0,
        ) {
            prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
            let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
            let t = EmbeddingTable::from_vectors(5, [("a", a), ("b", b), ("s", scaled)]);
            let ab = t.cosine("a", "b").unwrap();
            prop_assert_eq!(ab, t.cosine("b", "a").unwrap());
            prop_assert!((t.cosine("s", "b").unwrap() - ab).abs() < 1e-12);
            prop_assert!(ab.abs() <= 1.0 + 1e-12);
        }
    }
}
