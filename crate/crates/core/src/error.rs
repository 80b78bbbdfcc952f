use std::fmt;

/// A sampled point of a bracket scan, kept for diagnostics when no root is found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub x: f64,
    pub value: f64,
}

/// Scan trace attached to [`Error::NoRoot`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    pub lo: f64,
    pub hi: f64,
    pub samples: Vec<ScanSample>,
}

impl fmt::Display for ScanTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let finite: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.value)
            .filter(|v| v.is_finite())
            .collect();
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        write!(
            f,
            "scanned [{:e}, {:e}] at {} points ({} finite), residual range [{:e}, {:e}]",
            self.lo,
            self.hi,
            self.samples.len(),
            finite.len(),
            min,
            max
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Gamma pole at x = {x}")]
    Pole { x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no real branch: base {base} raised to non-integer power {exponent}")]
    Branch { base: f64, exponent: f64 },

    #[error("no root found: {trace}")]
    NoRoot { trace: ScanTrace },

    #[error("incompatible vertex data: {0}")]
    Compatibility(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("line {line}: {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
