//! Separation-of-variables solution for a clamped circular cavity.
//!
//! With `u^inc = Σ iⁿ J_n(kr) e^{in(θ-θ_d)}` the scattered field is
//! `Σ iⁿ [a_n H_n^(1)(kr) + b_n K_n(kr)] e^{in(θ-θ_d)}`, and each mode solves
//!
//! ```text
//! J_n(ka)  + a_n H_n(ka)  + b_n K_n(ka)  = 0
//! J_n'(ka) + a_n H_n'(ka) + b_n K_n'(ka) = 0
//! ```
//!
//! Only the Helmholtz part reaches the far field:
//! `u∞(x̂, d) = c Σ a_n e^{in(θ_x̂ - θ_d)}` with the mode constant
//! [`FAR_FIELD_MODE_CONSTANT`].

use crate::farfield::{direction_angles, FarFieldMatrix};
use crate::geometry::Point;
use crate::specfun::{bessel_j_seq, bessel_k_seq, bessel_y_seq, SpecfunError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// `c_n` in `u∞ = Σ c_n a_n e^{in(θ_x̂ - θ_d)}`. It is the same for every mode:
/// `√(2/(πk)) e^{-iπ/4}` from the Hankel asymptotics divided by the
/// normalization `e^{iπ/4}/√(8πk)`, with `iⁿ e^{-inπ/2} = 1`.
pub const FAR_FIELD_MODE_CONSTANT: Complex64 = Complex64::new(0.0, -4.0);

/// Tail contribution allowed for the highest retained mode.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("radius and wavenumber must be positive")]
    Domain,
    #[error("truncation order {given} is below the required {required}")]
    Order { given: usize, required: usize },
    #[error("mode {order} still contributes {magnitude:.3e}; increase the truncation order")]
    Truncation { order: usize, magnitude: f64 },
    #[error("2x2 mode system for n = {0} is singular")]
    SingularMode(i64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

#[derive(Debug, Clone)]
pub struct DiskScatteringSolution {
    pub radius: f64,
    pub k: f64,
    pub order: usize,
    /// polar angle of the incident direction
    pub incident_angle: f64,
    /// `a_n` for `n = -order..=order` (index `n + order`)
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

/// Smallest truncation order accepted by [`solve_disk`].
pub fn minimum_order(radius: f64, k: f64) -> usize {
    (k * radius).ceil() as usize + 20
}

fn signed(seq: &[f64], n: i64) -> f64 {
    let v = seq[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Radial functions and derivatives (w.r.t. the argument) of one order.
struct Radial {
    j: f64,
    dj: f64,
    h: Complex64,
    dh: Complex64,
    kn: f64,
    dkn: f64,
}

fn radial(jseq: &[f64], yseq: &[f64], kseq: &[f64], n: i64) -> Radial {
    let j = signed(jseq, n);
    let dj = 0.5 * (signed(jseq, n - 1) - signed(jseq, n + 1));
    let y = signed(yseq, n);
    let dy = 0.5 * (signed(yseq, n - 1) - signed(yseq, n + 1));
    let kn = kseq[n.unsigned_abs() as usize];
    let dkn = -0.5 * (kseq[(n - 1).unsigned_abs() as usize] + kseq[(n + 1).unsigned_abs() as usize]);
    Radial {
        j,
        dj,
        h: Complex64::new(j, y),
        dh: Complex64::new(dj, dy),
        kn,
        dkn,
    }
}

pub fn solve_disk(radius: f64, k: f64, order: usize, d: Point) -> Result<DiskScatteringSolution, OracleError> {
    if !(radius > 0.0 && k > 0.0 && radius.is_finite() && k.is_finite()) {
        return Err(OracleError::Domain);
    }
    let required = minimum_order(radius, k);
    if order < required {
        return Err(OracleError::Order {
            given: order,
            required,
        });
    }
    let ka = k * radius;
    let jseq = bessel_j_seq(order + 1, ka);
    let yseq = bessel_y_seq(order + 1, ka)?;
    let kseq = bessel_k_seq(order + 1, ka)?;
    let m = order as i64;
    let mut a = Vec::with_capacity(2 * order + 1);
    let mut b = Vec::with_capacity(2 * order + 1);
    for n in -m..=m {
        let f = radial(&jseq, &yseq, &kseq, n);
        let det = f.h * f.dkn - f.dh * f.kn;
        if !(det.norm() > 0.0) || !det.norm().is_finite() {
            return Err(OracleError::SingularMode(n));
        }
        a.push((f.dj * f.kn - f.j * f.dkn) / det);
        b.push((f.dh * f.j - f.h * f.dj) / det);
    }
    let tail = a[0].norm().max(a[2 * order].norm());
    if tail > TAIL_TOLERANCE {
        return Err(OracleError::Truncation {
            order,
            magnitude: tail,
        });
    }
    Ok(DiskScatteringSolution {
        radius,
        k,
        order,
        incident_angle: d[1].atan2(d[0]),
        a,
        b,
    })
}

impl DiskScatteringSolution {
    pub fn a_n(&self, n: i64) -> Complex64 {
        self.a[(n + self.order as i64) as usize]
    }

    pub fn b_n(&self, n: i64) -> Complex64 {
        self.b[(n + self.order as i64) as usize]
    }

    fn modes(&self) -> impl Iterator<Item = i64> {
        let m = self.order as i64;
        -m..=m
    }

    /// Residuals of the two boundary rows for mode `n`.
    pub fn boundary_residual(&self, n: i64) -> Result<(Complex64, Complex64), SpecfunError> {
        let ka = self.k * self.radius;
        let top = n.unsigned_abs() as usize + 1;
        let f = radial(&bessel_j_seq(top, ka), &bessel_y_seq(top, ka)?, &bessel_k_seq(top, ka)?, n);
        let (a, b) = (self.a_n(n), self.b_n(n));
        Ok((f.j + a * f.h + b * f.kn, f.dj + a * f.dh + b * f.dkn))
    }

    /// Scattered field and its radial derivative at `x`, `|x| >= radius`.
    pub fn scattered_field(&self, x: Point) -> Result<(Complex64, Complex64), SpecfunError> {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]) - self.incident_angle;
        let kr = self.k * r;
        let top = self.order + 1;
        let (jseq, yseq, kseq) = (bessel_j_seq(top, kr), bessel_y_seq(top, kr)?, bessel_k_seq(top, kr)?);
        let mut u = Complex64::new(0.0, 0.0);
        let mut du = Complex64::new(0.0, 0.0);
        for n in self.modes() {
            let f = radial(&jseq, &yseq, &kseq, n);
            let phase = Complex64::i().powi(n as i32) * Complex64::from_polar(1.0, n as f64 * theta);
            let (a, b) = (self.a_n(n), self.b_n(n));
            u += phase * (a * f.h + b * f.kn);
            du += phase * self.k * (a * f.dh + b * f.dkn);
        }
        Ok((u, du))
    }

    /// Incident plane wave and its radial derivative at `x`.
    pub fn incident_field(&self, x: Point) -> (Complex64, Complex64) {
        let (s, c) = self.incident_angle.sin_cos();
        let r = x[0].hypot(x[1]);
        let phase = self.k * (x[0] * c + x[1] * s);
        let u = Complex64::from_polar(1.0, phase);
        let radial_dot = if r > 0.0 { (x[0] * c + x[1] * s) / r } else { 0.0 };
        (u, Complex64::new(0.0, self.k * radial_dot) * u)
    }

    /// Far-field pattern in direction `xhat`.
    pub fn far_field(&self, xhat: Point) -> Complex64 {
        let theta = xhat[1].atan2(xhat[0]) - self.incident_angle;
        FAR_FIELD_MODE_CONSTANT
            * self
                .modes()
                .map(|n| self.a_n(n) * Complex64::from_polar(1.0, n as f64 * theta))
                .sum::<Complex64>()
    }
}

pub fn disk_far_field(sol: &DiskScatteringSolution, xhat: Point) -> Complex64 {
    sol.far_field(xhat)
}

/// Far-field matrix of the disk over `n_dirs` equispaced directions.
pub fn disk_far_field_matrix(radius: f64, k: f64, n_dirs: usize) -> Result<FarFieldMatrix, OracleError> {
    let order = minimum_order(radius, k);
    let sol = solve_disk(radius, k, order, [1.0, 0.0])?;
    let angles = direction_angles(n_dirs);
    // depends only on θ_i - θ_j
    let column: Vec<Complex64> = (0..n_dirs)
        .map(|m| {
            let t = angles[m];
            sol.far_field([t.cos(), t.sin()])
        })
        .collect();
    let entries = DMatrix::from_fn(n_dirs, n_dirs, |i, j| column[(i + n_dirs - j) % n_dirs]);
    Ok(FarFieldMatrix::new(k, "circle", entries))
}

/// Prefactor `e^{iπ/4} e^{ik|x|} / √(8πk|x|)` of the far-field asymptotics.
pub fn asymptotic_prefactor(k: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI / 4.0 + k * r) / (8.0 * PI * k * r).sqrt()
}
