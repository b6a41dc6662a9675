//! Eigenvalue spectra and their plain-text file format.
//!
//! The text format is one eigenvalue per line in descending order. Lines
//! starting with `#` are comments; `# key=value` comments written by
//! [`write_spectrum`] carry the provenance metadata and are read back by
//! [`read_spectrum`].

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Ingested,
    Lanczos,
    Dense,
    AnmInverse,
    Mlp,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Ingested => "ingested",
            Source::Lanczos => "lanczos",
            Source::Dense => "dense",
            Source::AnmInverse => "anm-inverse",
            Source::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "ingested" => Source::Ingested,
            "lanczos" => Source::Lanczos,
            "dense" => Source::Dense,
            "anm-inverse" => Source::AnmInverse,
            "mlp" => Source::Mlp,
            other => return Err(format!("unknown spectrum source '{other}'")),
        })
    }
}

/// Non-empty list of finite eigenvalues sorted descending.
///
/// `n_total` is the dimension of the full operator when only the top part of
/// its spectrum was retained, and `trace_hint` its full trace when known.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    values: Vec<T>,
    source: Source,
    n_total: Option<usize>,
    trace_hint: Option<T>,
}

impl<T: Scalar> Spectrum<T> {
    /// Validates and sorts `raw` descending. Ties keep their input order.
    pub fn new(mut raw: Vec<T>, source: Source) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        // finite values always compare
        raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self {
            values: raw,
            source,
            n_total: None,
            trace_hint: None,
        })
    }

    pub fn with_n_total(mut self, n_total: usize) -> Self {
        self.n_total = Some(n_total);
        self
    }

    pub fn with_trace_hint(mut self, trace: T) -> Self {
        self.trace_hint = Some(trace);
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn n_total(&self) -> Option<usize> {
        self.n_total
    }

    pub fn trace_hint(&self) -> Option<T> {
        self.trace_hint
    }

    /// Largest eigenvalue.
    pub fn max(&self) -> T {
        self.values[0]
    }

    /// The `k` largest values, checked to be strictly positive.
    pub fn top_positive(&self, k: usize) -> Result<&[T]> {
        if k == 0 || k > self.values.len() {
            return Err(Error::InvalidCount(format!(
                "k = {k} but spectrum has {} values",
                self.values.len()
            )));
        }
        let top = &self.values[..k];
        // descending, so the last one is the smallest
        let last = top[k - 1];
        if last <= T::zero() {
            let index = top.iter().position(|v| *v <= T::zero()).unwrap_or(k - 1);
            return Err(Error::NonPositiveEigenvalue {
                index,
                value: top[index].as_f64(),
            });
        }
        Ok(top)
    }

    /// Multiplies every value (and the trace hint) by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|v| *v * factor).collect(),
            source: self.source,
            n_total: self.n_total,
            trace_hint: self.trace_hint.map(|t| t * factor),
        }
    }
}

/// Builds a [`Spectrum`] from unsorted raw eigenvalues.
pub fn make_spectrum<T: Scalar>(raw_values: &[T], source: Source) -> Result<Spectrum<T>> {
    Spectrum::new(raw_values.to_vec(), source)
}

/// Top-`k` eigenvalues divided by their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceNormalizedSpectrum<T> {
    pub fractions: Vec<T>,
}

pub fn trace_normalize<T: Scalar>(s: &Spectrum<T>, k: usize) -> Result<TraceNormalizedSpectrum<T>> {
    let top = s.top_positive(k)?;
    let total = top.iter().fold(T::zero(), |acc, v| acc + *v);
    Ok(TraceNormalizedSpectrum {
        fractions: top.iter().map(|v| *v / total).collect(),
    })
}

pub fn write_spectrum<T: Scalar>(s: &Spectrum<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(format_spectrum(s).as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Renders the text format. `LowerExp` prints the shortest representation
/// that parses back to the same bits.
pub fn format_spectrum<T: Scalar>(s: &Spectrum<T>) -> String {
    let mut text = String::with_capacity(s.len() * 24 + 64);
    text.push_str(&format!("# source={}\n", s.source));
    if let Some(n) = s.n_total {
        text.push_str(&format!("# n_total={n}\n"));
    }
    if let Some(t) = s.trace_hint {
        text.push_str(&format!("# trace_hint={t:e}\n"));
    }
    for v in &s.values {
        text.push_str(&format!("{v:e}\n"));
    }
    text
}

pub fn read_spectrum<T: Scalar>(path: impl AsRef<Path>) -> Result<Spectrum<T>> {
    let text = fs::read_to_string(path)?;
    parse_spectrum(&text)
}

pub fn parse_spectrum<T: Scalar>(text: &str) -> Result<Spectrum<T>> {
    let mut values = Vec::new();
    let mut source = Source::Ingested;
    let mut n_total = None;
    let mut trace_hint = None;

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            let bad = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            match key.trim() {
                "source" => source = value.parse().map_err(bad)?,
                "n_total" => {
                    n_total = Some(value.parse().map_err(|_| bad(format!("bad n_total '{value}'")))?)
                }
                "trace_hint" => {
                    trace_hint =
                        Some(T::from_str(value).map_err(|_| bad(format!("bad trace_hint '{value}'")))?)
                }
                _ => {}
            }
            continue;
        }
        let v = T::from_str(line).map_err(|_| Error::Parse {
            line: line_no,
            message: format!("not a number: '{line}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite value '{line}'"),
            });
        }
        values.push(v);
    }

    let mut s = Spectrum::new(values, source)?;
    s.n_total = n_total;
    s.trace_hint = trace_hint;
    Ok(s)
}

/// Rank-size pairs as CSV (`rank,value`, 1-based rank).
pub fn rank_size_csv<T: Scalar>(values: &[T]) -> String {
    let mut out = String::from("rank,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{v:e}\n", i + 1));
    }
    out
}
