//! Alphabets, traces and finite-support functions on traces.
//!
//! The outcome space is always handled as the truncation `Σ^{≤L}` for an
//! explicit bound `L`; nothing longer is ever materialized.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(char),
    #[error("trace enumeration overflow: {requested} exceeds the cap of {cap}")]
    EnumerationOverflow { requested: String, cap: String },
    #[error("value {value} for trace {trace:?} is outside [0, 1]")]
    ValueOutOfRange { trace: String, value: f64 },
}

/// An ordered finite set of distinct symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<char>", into = "Vec<char>")]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self, TraceError> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(TraceError::EmptyAlphabet);
        }
        let mut seen = BTreeSet::new();
        for &c in &symbols {
            if !seen.insert(c) {
                return Err(TraceError::DuplicateSymbol(c));
            }
        }
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.symbols.iter().position(|&s| s == c)
    }

    pub fn contains(&self, trace: &Trace) -> bool {
        trace.as_str().chars().all(|c| self.index_of(c).is_some())
    }
}

impl TryFrom<Vec<char>> for Alphabet {
    type Error = TraceError;

    fn try_from(v: Vec<char>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Alphabet> for Vec<char> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

/// A finite string of symbols. Ordered length-first, then lexicographically
/// by code point, which is the canonical order used for every tie-break.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace(String);

impl Trace {
    pub fn new(s: impl Into<String>) -> Self {
        Trace(s.into())
    }

    pub fn empty() -> Self {
        Trace(String::new())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of symbols.
    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Ord for Trace {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Trace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Trace {
    fn from(s: &str) -> Self {
        Trace::new(s)
    }
}

impl From<String> for Trace {
    fn from(s: String) -> Self {
        Trace(s)
    }
}

/// Bounds on how much of `Σ^{≤L}` may be materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCap {
    pub max_len: usize,
    pub max_entries: usize,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        Self {
            max_len: 6,
            max_entries: 1_000_000,
        }
    }
}

/// `Σ_{k=0}^{max_len} |Σ|^k`, saturating.
pub fn trace_count(alphabet_len: usize, max_len: usize) -> usize {
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(alphabet_len);
    }
    total
}

/// All traces of length at most `max_len`, in length-then-lexicographic
/// order (lexicographic with respect to the alphabet's own symbol order).
pub fn enumerate_traces(alphabet: &Alphabet, max_len: usize) -> Result<Vec<Trace>, TraceError> {
    enumerate_traces_with(alphabet, max_len, EnumerationCap::default())
}

pub fn enumerate_traces_with(
    alphabet: &Alphabet,
    max_len: usize,
    cap: EnumerationCap,
) -> Result<Vec<Trace>, TraceError> {
    if max_len > cap.max_len {
        return Err(TraceError::EnumerationOverflow {
            requested: format!("max_len {max_len}"),
            cap: format!("max_len {}", cap.max_len),
        });
    }
    let count = trace_count(alphabet.len(), max_len);
    if count > cap.max_entries {
        return Err(TraceError::EnumerationOverflow {
            requested: format!("{count} traces"),
            cap: format!("{} traces", cap.max_entries),
        });
    }
    let mut out = Vec::with_capacity(count);
    out.push(Trace::empty());
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for prefix in &frontier {
            for &c in alphabet.symbols() {
                let mut s = prefix.clone();
                s.push(c);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned().map(Trace));
        frontier = next;
    }
    Ok(out)
}

/// A `[0, 1]`-valued function with finite support; unlisted traces map to 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiniteSupportFn {
    entries: BTreeMap<Trace, f64>,
}

impl FiniteSupportFn {
    pub fn new(entries: impl IntoIterator<Item = (Trace, f64)>) -> Result<Self, TraceError> {
        let mut map = BTreeMap::new();
        for (trace, value) in entries {
            if !(0.0..=1.0).contains(&value) {
                return Err(TraceError::ValueOutOfRange {
                    trace: trace.0,
                    value,
                });
            }
            if value != 0.0 {
                map.insert(trace, value);
            }
        }
        Ok(Self { entries: map })
    }

    pub fn eval(&self, trace: &Trace) -> f64 {
        self.entries.get(trace).copied().unwrap_or(0.0)
    }

    /// Traces with a nonzero value, in canonical order.
    pub fn support(&self) -> impl Iterator<Item = &Trace> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Trace, f64)> {
        self.entries.iter().map(|(t, &v)| (t, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `fs_eval`.
pub fn fs_eval(f: &FiniteSupportFn, trace: &Trace) -> f64 {
    f.eval(trace)
}

/// Restricts `f` to `keep`: equal to `f` on `keep`, zero elsewhere.
pub fn fs_truncate<'a, F>(
    f: F,
    keep: impl IntoIterator<Item = &'a Trace>,
) -> Result<FiniteSupportFn, TraceError>
where
    F: Fn(&Trace) -> f64,
{
    FiniteSupportFn::new(keep.into_iter().map(|t| (t.clone(), f(t))))
}
