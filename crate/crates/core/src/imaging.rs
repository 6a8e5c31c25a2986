//! Direct-sampling indicators, data perturbations and grid evaluation.
//!
//! With `φ_z = (e^{-ik z·d_1}, …, e^{-ik z·d_N})ᵀ` the two indicators are
//!
//! ```text
//! W_ip(z)   = |(φ_z, F φ_z)|^ρ
//! W_norm(z) = ‖F φ_z‖^ρ
//! ```
//!
//! using plain ℓ² sums (no quadrature weight).

use crate::farfield::FarFieldMatrix;
use crate::geometry::Point;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("noise level {0} outside [0, 1)")]
    NoiseLevel(f64),
    #[error("aperture index {index} outside 1..={n}")]
    MaskIndex { index: usize, n: usize },
    #[error("rho must be positive, got {0}")]
    Rho(f64),
    #[error("grid needs at least 2 points per axis and a nonempty extent")]
    Grid,
    #[error("indicator vanishes on the whole grid")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    #[default]
    Ip,
    Norm,
}

impl Indicator {
    pub fn name(self) -> &'static str {
        match self {
            Indicator::Ip => "ip",
            Indicator::Norm => "norm",
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Indicator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ip" => Ok(Indicator::Ip),
            "norm" => Ok(Indicator::Norm),
            other => Err(format!("unknown indicator `{other}` (expected ip or norm)")),
        }
    }
}

/// `F(i,j) ↦ F(i,j)(1 + δ R(i,j))` with `Re R, Im R ~ U[-1, 1]` independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(delta: f64, seed: u64) -> Result<Self, ImagingError> {
        if !(0.0..1.0).contains(&delta) {
            return Err(ImagingError::NoiseLevel(delta));
        }
        Ok(NoiseModel { delta, seed })
    }

    /// The full `R` matrix, drawn row by row (real part first).
    pub fn error_matrix(&self, n: usize) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut r = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let re = rng.gen_range(-1.0..=1.0);
                let im = rng.gen_range(-1.0..=1.0);
                r[(i, j)] = Complex64::new(re, im);
            }
        }
        r
    }
}

pub fn add_noise(f: &FarFieldMatrix, model: &NoiseModel) -> FarFieldMatrix {
    if model.delta == 0.0 {
        return f.clone();
    }
    let r = model.error_matrix(f.n_dirs());
    let mut out = f.clone();
    out.entries
        .zip_apply(&r, |v, rij| *v *= Complex64::new(1.0, 0.0) + model.delta * rij);
    out
}

/// Receiver rows and source columns to zero, 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApertureMask {
    pub receiver_rows_zeroed: BTreeSet<usize>,
    pub source_cols_zeroed: BTreeSet<usize>,
}

impl ApertureMask {
    pub fn new(
        rows: impl IntoIterator<Item = usize>,
        cols: impl IntoIterator<Item = usize>,
    ) -> Self {
        ApertureMask {
            receiver_rows_zeroed: rows.into_iter().collect(),
            source_cols_zeroed: cols.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.receiver_rows_zeroed.is_empty() && self.source_cols_zeroed.is_empty()
    }

    /// No receivers in the first quadrant, no sources in the fourth:
    /// rows `1..=N/4` and columns `3N/4..=N`.
    pub fn quarter_aperture(n: usize) -> Self {
        ApertureMask::new(1..=n / 4, (3 * n / 4).max(1)..=n)
    }

    pub fn validate(&self, n: usize) -> Result<(), ImagingError> {
        for &index in self.receiver_rows_zeroed.iter().chain(&self.source_cols_zeroed) {
            if index == 0 || index > n {
                return Err(ImagingError::MaskIndex { index, n });
            }
        }
        Ok(())
    }
}

pub fn apply_mask(f: &FarFieldMatrix, mask: &ApertureMask) -> Result<FarFieldMatrix, ImagingError> {
    let n = f.n_dirs();
    mask.validate(n)?;
    let mut out = f.clone();
    let zero = Complex64::new(0.0, 0.0);
    for &i in &mask.receiver_rows_zeroed {
        out.entries.row_mut(i - 1).fill(zero);
    }
    for &j in &mask.source_cols_zeroed {
        out.entries.column_mut(j - 1).fill(zero);
    }
    Ok(out)
}

pub fn phi_z(k: f64, directions: &[Point], z: Point) -> DVector<Complex64> {
    DVector::from_iterator(
        directions.len(),
        directions
            .iter()
            .map(|d| Complex64::from_polar(1.0, -k * (z[0] * d[0] + z[1] * d[1]))),
    )
}

fn check_rho(rho: f64) -> Result<(), ImagingError> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(ImagingError::Rho(rho))
    }
}

/// Raw indicator `|(φ_z, Fφ_z)|` or `‖Fφ_z‖` before the power `ρ`.
pub fn indicator_base(f: &FarFieldMatrix, directions: &[Point], z: Point, which: Indicator) -> f64 {
    let phi = phi_z(f.k, directions, z);
    let fphi = &f.entries * &phi;
    match which {
        Indicator::Ip => fphi.iter().zip(phi.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm(),
        Indicator::Norm => fphi.norm(),
    }
}

pub fn w_ip(f: &FarFieldMatrix, z: Point, rho: f64) -> Result<f64, ImagingError> {
    check_rho(rho)?;
    Ok(indicator_base(f, &f.directions(), z, Indicator::Ip).powf(rho))
}

pub fn w_norm(f: &FarFieldMatrix, z: Point, rho: f64) -> Result<f64, ImagingError> {
    check_rho(rho)?;
    Ok(indicator_base(f, &f.directions(), z, Indicator::Norm).powf(rho))
}

pub fn indicator(f: &FarFieldMatrix, z: Point, rho: f64, which: Indicator) -> Result<f64, ImagingError> {
    match which {
        Indicator::Ip => w_ip(f, z, rho),
        Indicator::Norm => w_norm(f, z, rho),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_min: -4.0,
            x_max: 4.0,
            y_min: -4.0,
            y_max: 4.0,
            nx: 150,
            ny: 150,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if self.nx < 2 || self.ny < 2 || !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(ImagingError::Grid);
        }
        Ok(())
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + (self.y_max - self.y_min) * iy as f64 / (self.ny - 1) as f64
    }

    /// Grid points in row-major order: `y` outer, `x` inner.
    pub fn points(&self) -> Vec<Point> {
        (0..self.ny)
            .flat_map(|iy| (0..self.nx).map(move |ix| [self.x(ix), self.y(iy)]))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingGrid {
    pub spec: GridSpec,
    /// row-major, `values[iy * nx + ix]`
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl ImagingGrid {
    pub fn point(&self, index: usize) -> Point {
        [self.spec.x(index % self.spec.nx), self.spec.y(index / self.spec.nx)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First index of the largest value.
    pub fn argmax(&self) -> (usize, Point, f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best, self.point(best), self.values[best])
    }

    pub fn normalize(&mut self) -> Result<(), ImagingError> {
        let m = self.max();
        if !(m > 0.0) || !m.is_finite() {
            return Err(ImagingError::Degenerate);
        }
        for v in &mut self.values {
            *v /= m;
        }
        self.normalized = true;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 72 + 16);
        out.push_str("x,y,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let p = self.point(i);
            writeln!(out, "{:.16e},{:.16e},{:.16e}", p[0], p[1], v).unwrap();
        }
        out
    }

    /// Binary graymap; the first raster row is `y_max`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let scale = if self.normalized { 1.0 } else { self.max().max(f64::MIN_POSITIVE) };
        let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
        for iy in (0..ny).rev() {
            for ix in 0..nx {
                let v = (self.values[iy * nx + ix] / scale).clamp(0.0, 1.0);
                out.push((v * 255.0).round() as u8);
            }
        }
        out
    }
}

/// Indicator values on the grid, not normalized.
pub fn evaluate_raw(
    f: &FarFieldMatrix,
    spec: &GridSpec,
    rho: f64,
    which: Indicator,
) -> Result<ImagingGrid, ImagingError> {
    spec.validate()?;
    check_rho(rho)?;
    let dirs = f.directions();
    let values = spec
        .points()
        .par_iter()
        .map(|z| indicator_base(f, &dirs, *z, which).powf(rho))
        .collect();
    Ok(ImagingGrid {
        spec: *spec,
        values,
        normalized: false,
    })
}

pub fn evaluate_grid(
    f: &FarFieldMatrix,
    spec: &GridSpec,
    rho: f64,
    which: Indicator,
) -> Result<ImagingGrid, ImagingError> {
    let mut grid = evaluate_raw(f, spec, rho, which)?;
    grid.normalize()?;
    Ok(grid)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut rank = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let average = 0.5 * (i + j) as f64 + 1.0;
        for &idx in &order[i..=j] {
            rank[idx] = average;
        }
        i = j + 1;
    }
    rank
}

/// Spearman rank correlation with averaged ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
