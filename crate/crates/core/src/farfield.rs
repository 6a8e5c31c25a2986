//! Multi-static far-field matrices and their text file format.
//!
//! ```text
//! # biharmonic-farfield v1 N=<N> k=<k> shape=<kind>
//! i j re im        (N² lines, 1-based, row-major, 17 significant digits)
//! ```

use crate::geometry::Point;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

const MAGIC: &str = "# biharmonic-farfield v1";

#[derive(Debug, Error)]
pub enum FarFieldFileError {
    #[error("missing or malformed header line")]
    Header,
    #[error("line {line}: {reason}")]
    Entry { line: usize, reason: String },
    #[error("expected {expected} entries, found {found}")]
    Count { expected: usize, found: usize },
}

/// `entries[(i, j)] = u∞(x̂_i, d_j)` with `x̂_i = d_i = (cos θ_i, sin θ_i)`,
/// `θ_i = 2π i / N` (0-based here, `θ_i = 2π(i-1)/N` in 1-based terms).
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    pub k: f64,
    pub shape: String,
    pub entries: DMatrix<Complex64>,
}

pub fn direction_angles(n_dirs: usize) -> Vec<f64> {
    (0..n_dirs).map(|i| 2.0 * PI * i as f64 / n_dirs as f64).collect()
}

pub fn directions(n_dirs: usize) -> Vec<Point> {
    direction_angles(n_dirs)
        .into_iter()
        .map(|t| [t.cos(), t.sin()])
        .collect()
}

impl FarFieldMatrix {
    pub fn new(k: f64, shape: impl Into<String>, entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "far-field matrix must be square");
        FarFieldMatrix {
            k,
            shape: shape.into(),
            entries,
        }
    }

    pub fn n_dirs(&self) -> usize {
        self.entries.nrows()
    }

    pub fn directions(&self) -> Vec<Point> {
        directions(self.n_dirs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FarFieldMatrix {
            entries: self.entries.map(|v| v * factor),
            ..self.clone()
        }
    }

    /// Largest deviation from the circulant structure, relative to the max entry.
    pub fn circulant_deviation(&self) -> f64 {
        let n = self.n_dirs();
        let scale = self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let reference = self.entries[((i + n - j) % n, 0)];
                worst = worst.max((self.entries[(i, j)] - reference).norm());
            }
        }
        worst / scale
    }

    pub fn to_text(&self) -> String {
        let n = self.n_dirs();
        let mut out = String::with_capacity(64 * n * n + 80);
        writeln!(out, "{MAGIC} N={n} k={} shape={}", self.k, self.shape).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v = self.entries[(i, j)];
                writeln!(out, "{} {} {:.16e} {:.16e}", i + 1, j + 1, v.re, v.im).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FarFieldFileError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(FarFieldFileError::Header)?;
        let rest = header.strip_prefix(MAGIC).ok_or(FarFieldFileError::Header)?;
        let (mut n, mut k, mut shape) = (None, None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("N", v)) => n = v.parse::<usize>().ok(),
                Some(("k", v)) => k = v.parse::<f64>().ok(),
                Some(("shape", v)) => shape = Some(v.to_string()),
                _ => return Err(FarFieldFileError::Header),
            }
        }
        let (Some(n), Some(k), Some(shape)) = (n, k, shape) else {
            return Err(FarFieldFileError::Header);
        };
        if n == 0 {
            return Err(FarFieldFileError::Header);
        }
        let mut entries = DMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN));
        let mut found = 0;
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| FarFieldFileError::Entry {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [i, j, re, im] = parts[..] else {
                return Err(bad("expected `i j re im`"));
            };
            let i: usize = i.parse().map_err(|_| bad("bad row index"))?;
            let j: usize = j.parse().map_err(|_| bad("bad column index"))?;
            if i == 0 || j == 0 || i > n || j > n {
                return Err(bad("index out of range"));
            }
            let re: f64 = re.parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = im.parse().map_err(|_| bad("bad imaginary part"))?;
            entries[(i - 1, j - 1)] = Complex64::new(re, im);
            found += 1;
        }
        if found != n * n || entries.iter().any(|v| v.re.is_nan()) {
            return Err(FarFieldFileError::Count {
                expected: n * n,
                found,
            });
        }
        Ok(FarFieldMatrix { k, shape, entries })
    }
}
