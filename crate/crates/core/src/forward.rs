//! Nyström solver for the clamped-cavity boundary integral system.
//!
//! The scattered field is sought as `u^s = DL_k φ₁ + SL_{ik} φ₂` (Helmholtz
//! double layer plus modified-Helmholtz single layer). Imposing `u = 0` and
//! `∂_ν u = 0` on the boundary gives
//!
//! ```text
//! (K_k + I) φ₁ + S_{ik} φ₂       = -2 u^inc
//!  T_k φ₁      + (K'_{ik} - I) φ₂ = -2 ∂_ν u^inc
//! ```
//!
//! with every boundary operator carrying the factor 2 (`S φ = 2∫Φ φ ds`, ...).
//! Log-singular kernels are split as `K(t,τ) = K₁ ln(4 sin²((t-τ)/2)) + K₂`
//! and integrated with the trigonometric product weights `R_j`; `T_k` uses
//! the Maue form `d/ds S_k d/ds + k² ν·S_k(ν ·)` with spectral differentiation.

use crate::farfield::{directions, FarFieldMatrix};
use crate::geometry::{ParametricCurve, Point};
use crate::specfun::{bessel_i0_i1_over_t, bessel_k01, cyl01, EULER_GAMMA};
use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

pub const MIN_NODES: usize = 16;
pub const DEFAULT_NODES: usize = 128;
/// Relative residual accepted from the dense solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForwardError {
    #[error("node count {0} must be even and at least {MIN_NODES}")]
    NodeCount(usize),
    #[error("wavenumber must be positive and finite, got {0}")]
    Wavenumber(f64),
    #[error("nodes {0} and {1} coincide; the curve is degenerate")]
    CoincidentNodes(usize, usize),
    #[error("the discretized boundary system is singular")]
    Singular,
    #[error("linear solve residual {0:.3e} exceeds tolerance")]
    Residual(f64),
    #[error("at least 4 directions are required, got {0}")]
    DirectionCount(usize),
    #[error("density length {got} does not match {expected} nodes")]
    DensityLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy)]
struct Node {
    position: Point,
    velocity: Point,
    acceleration: Point,
    /// outward unit normal
    normal: Point,
    jacobian: f64,
}

/// Equispaced nodes `t_j = offset + jπ/n`, `j = 0..2n`, with frames.
#[derive(Debug, Clone)]
pub struct BoundaryDiscretization {
    curve: ParametricCurve,
    offset: f64,
    nodes: Vec<Node>,
}

impl BoundaryDiscretization {
    pub fn new(curve: &ParametricCurve, n_nodes: usize) -> Result<Self, ForwardError> {
        Self::with_offset(curve, n_nodes, 0.0)
    }

    /// Nodes shifted by a common parameter offset.
    pub fn with_offset(curve: &ParametricCurve, n_nodes: usize, offset: f64) -> Result<Self, ForwardError> {
        if n_nodes < MIN_NODES || n_nodes % 2 != 0 {
            return Err(ForwardError::NodeCount(n_nodes));
        }
        let h = 2.0 * PI / n_nodes as f64;
        let nodes = (0..n_nodes)
            .map(|j| {
                let p = curve.eval(offset + h * j as f64);
                let jacobian = p.velocity[0].hypot(p.velocity[1]);
                Node {
                    position: p.position,
                    velocity: p.velocity,
                    acceleration: p.acceleration,
                    normal: [p.velocity[1] / jacobian, -p.velocity[0] / jacobian],
                    jacobian,
                }
            })
            .collect();
        Ok(BoundaryDiscretization {
            curve: curve.clone(),
            offset,
            nodes,
        })
    }

    pub fn curve(&self) -> &ParametricCurve {
        &self.curve
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn parameters(&self) -> Vec<f64> {
        let h = 2.0 * PI / self.n_nodes() as f64;
        (0..self.n_nodes()).map(|j| self.offset + h * j as f64).collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    pub fn normals(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.normal).collect()
    }

    pub fn jacobians(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.jacobian).collect()
    }

    fn half(&self) -> usize {
        self.nodes.len() / 2
    }
}

/// `R_j(t_i)` for `m = i - j mod 2n`: weights for `∫ ln(4 sin²((t-τ)/2)) f(τ) dτ`.
pub fn log_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .map(|m| {
            let theta = m as f64 * PI / nf;
            let sum: f64 = (1..n).map(|p| (p as f64 * theta).cos() / p as f64).sum();
            let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / nf * sum - PI / (nf * nf) * alt
        })
        .collect()
}

/// `R_m - (π/n) ln(4 sin²(mπ/2n))` for `m ≠ 0`, and `R_0` for `m = 0`.
///
/// Equal to `(2π/n) Σ_{p≥n} cos(pθ)/p - (π/n²)(-1)^m` with `θ = mπ/n`. The
/// tail is summed by repeated summation by parts,
/// `Σ_{p≥n} z^p/p = z^n/(1-z) Σ_j (-z/(1-z))^j j!/(n(n+1)…(n+j))`, so the
/// O(1/n²) result keeps full relative precision. The series is asymptotic for
/// `|1 - z| < 1`; when its smallest term is not negligible the plain
/// difference is used instead. Kernels whose logarithmic part grows like
/// `I_0(kr)` multiply this directly instead of cancelling two large terms.
pub fn log_weight_corrections(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    let direct = log_weights(n_nodes);
    (0..n_nodes)
        .map(|m| {
            if m == 0 {
                return direct[0];
            }
            let theta = m as f64 * PI / nf;
            let chord = 2.0 * (0.5 * theta).sin().abs();
            let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
            let z = Complex64::from_polar(1.0, theta);
            let one = Complex64::new(1.0, 0.0);
            let ratio = -z / (one - z);
            let mut term = Complex64::new(1.0 / nf, 0.0);
            let mut sum = term;
            let mut converged = false;
            for j in 1..4000 {
                let next = term * ratio * (j as f64 / (nf + j as f64));
                if next.norm() > term.norm() {
                    break;
                }
                term = next;
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return direct[m] - PI / nf * (chord * chord).ln();
            }
            let tail = (z.powu(n as u32) / (one - z) * sum).re;
            2.0 * PI / nf * tail - PI / (nf * nf) * alt
        })
        .collect()
}

/// Spectral differentiation matrix for `2n` equispaced periodic samples.
pub fn differentiation_matrix(n_nodes: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n_nodes as f64;
    DMatrix::from_fn(n_nodes, n_nodes, |i, j| {
        if i == j {
            0.0
        } else {
            let m = i as isize - j as isize;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * m as f64 * h).tan()
        }
    })
}

/// Discretized boundary operators, each including its quadrature weights.
pub struct OperatorBlocks {
    /// `K_k`, Helmholtz double layer
    pub double_layer: DMatrix<Complex64>,
    /// `S_{ik}`, modified single layer
    pub modified_single_layer: DMatrix<Complex64>,
    /// `K'_{ik}`, modified adjoint double layer
    pub modified_adjoint_double_layer: DMatrix<Complex64>,
    /// `T_k`, Helmholtz hypersingular operator
    pub hypersingular: DMatrix<Complex64>,
}

pub fn assemble_blocks(disc: &BoundaryDiscretization, k: f64) -> Result<OperatorBlocks, ForwardError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(ForwardError::Wavenumber(k));
    }
    let size = disc.n_nodes();
    let n = disc.half();
    let trap = PI / n as f64;
    let weights = log_weights(size);
    let corrections = log_weight_corrections(size);
    let log_sin: Vec<f64> = (0..size)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                let s = (0.5 * m as f64 * trap).sin();
                (4.0 * s * s).ln()
            }
        })
        .collect();
    let nodes = &disc.nodes;
    let i_unit = Complex64::i();

    let mut kk = DMatrix::<Complex64>::zeros(size, size);
    let mut s_tilde = DMatrix::<Complex64>::zeros(size, size);
    let mut s_mod = DMatrix::<Complex64>::zeros(size, size);
    let mut kp_mod = DMatrix::<Complex64>::zeros(size, size);

    for i in 0..size {
        let xi = &nodes[i];
        for j in 0..size {
            let xj = &nodes[j];
            let m = (i + size - j) % size;
            let w = weights[m];
            if i == j {
                let curvature_term = (xi.velocity[1] * xi.acceleration[0]
                    - xi.velocity[0] * xi.acceleration[1])
                    / (2.0 * PI * xi.jacobian * xi.jacobian);
                kk[(i, i)] = Complex64::new(trap * curvature_term, 0.0);
                kp_mod[(i, i)] = Complex64::new(trap * curvature_term, 0.0);
                let lg = (0.5 * k * xi.jacobian).ln();
                let m2 = Complex64::new(-EULER_GAMMA / PI - lg / PI, 0.5);
                s_tilde[(i, i)] = w * (-0.5 / PI) + trap * m2;
                let mm2 = -(xi.jacobian / PI) * (EULER_GAMMA + lg);
                s_mod[(i, i)] = Complex64::new(w * (-0.5 / PI) * xi.jacobian + trap * mm2, 0.0);
                continue;
            }
            let dx = [xi.position[0] - xj.position[0], xi.position[1] - xj.position[1]];
            let r = dx[0].hypot(dx[1]);
            if r == 0.0 {
                return Err(ForwardError::CoincidentNodes(i, j));
            }
            let kr = k * r;
            let ln = log_sin[m];
            let c = cyl01(kr);
            let (k0, k1) = bessel_k01(kr);
            let (i0, i1_over) = bessel_i0_i1_over_t(kr);

            // K_k: source normal (unnormalized n_j = (x2', -x1'))
            let nd = xj.velocity[1] * dx[0] - xj.velocity[0] * dx[1];
            let l_full = 0.5 * i_unit * k * nd / r * Complex64::new(c.j1, c.y1);
            let l1 = -k / (2.0 * PI) * nd * c.j1 / r;
            let l2 = l_full - l1 * ln;
            kk[(i, j)] = w * l1 + trap * l2;

            // S_k without jacobian, used for T_k
            let mt_full = 0.5 * i_unit * Complex64::new(c.j0, c.y0);
            let mt1 = -c.j0 / (2.0 * PI);
            let mt2 = mt_full - mt1 * ln;
            s_tilde[(i, j)] = w * mt1 + trap * mt2;

            // S_{ik}
            let sm_full = k0 / PI * xj.jacobian;
            let sm1 = -i0 / (2.0 * PI) * xj.jacobian;
            s_mod[(i, j)] = Complex64::new(trap * sm_full + sm1 * corrections[m], 0.0);

            // K'_{ik}: target normal
            let nt = xi.velocity[1] * dx[0] - xi.velocity[0] * dx[1];
            let scale = xj.jacobian / xi.jacobian;
            let kp_full = -k / PI * k1 * nt / r * scale;
            let kp1 = -k * k / (2.0 * PI) * i1_over * nt * scale;
            kp_mod[(i, j)] = Complex64::new(trap * kp_full + kp1 * corrections[m], 0.0);
        }
    }

    // T_k = (1/|x'|) D S̃ D + k² (ν_i·ν_j) S̃ |x'_j|
    let diff = differentiation_matrix(size).map(|v| Complex64::new(v, 0.0));
    let mut hyper = &diff * &s_tilde * &diff;
    for i in 0..size {
        let inv_jac = 1.0 / nodes[i].jacobian;
        for j in 0..size {
            let nn = nodes[i].normal[0] * nodes[j].normal[0] + nodes[i].normal[1] * nodes[j].normal[1];
            hyper[(i, j)] = hyper[(i, j)] * inv_jac + k * k * nn * nodes[j].jacobian * s_tilde[(i, j)];
        }
    }

    Ok(OperatorBlocks {
        double_layer: kk,
        modified_single_layer: s_mod,
        modified_adjoint_double_layer: kp_mod,
        hypersingular: hyper,
    })
}

/// The `4n × 4n` Nyström matrix of `[[K_k + I, S_{ik}], [T_k, K'_{ik} - I]]`.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    pub k: f64,
    pub matrix: DMatrix<Complex64>,
}

pub fn assemble_system(disc: &BoundaryDiscretization, k: f64) -> Result<SystemMatrix, ForwardError> {
    let blocks = assemble_blocks(disc, k)?;
    let size = disc.n_nodes();
    let mut a = DMatrix::<Complex64>::zeros(2 * size, 2 * size);
    let one = Complex64::new(1.0, 0.0);
    a.view_mut((0, 0), (size, size)).copy_from(&blocks.double_layer);
    a.view_mut((0, size), (size, size)).copy_from(&blocks.modified_single_layer);
    a.view_mut((size, 0), (size, size)).copy_from(&blocks.hypersingular);
    a.view_mut((size, size), (size, size))
        .copy_from(&blocks.modified_adjoint_double_layer);
    for i in 0..size {
        a[(i, i)] += one;
        a[(size + i, size + i)] -= one;
    }
    Ok(SystemMatrix { k, matrix: a })
}

/// Boundary densities `(φ₁, φ₂)` at the nodes for one incident direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    pub phi1: DVector<Complex64>,
    pub phi2: DVector<Complex64>,
    pub incident_direction: Point,
}

/// `-2 (u^inc, ∂_ν u^inc)` at the nodes for `u^inc = e^{ik x·d}`.
pub fn incident_rhs(disc: &BoundaryDiscretization, k: f64, d: Point) -> DVector<Complex64> {
    let size = disc.n_nodes();
    let mut rhs = DVector::zeros(2 * size);
    for (j, node) in disc.nodes.iter().enumerate() {
        let phase = k * (node.position[0] * d[0] + node.position[1] * d[1]);
        let u = Complex64::from_polar(1.0, phase);
        let nu_d = node.normal[0] * d[0] + node.normal[1] * d[1];
        rhs[j] = -2.0 * u;
        rhs[size + j] = -2.0 * Complex64::new(0.0, k * nu_d) * u;
    }
    rhs
}

/// An assembled and factorized boundary system, reusable across directions.
pub struct ForwardSolver {
    disc: BoundaryDiscretization,
    k: f64,
    system: DMatrix<Complex64>,
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ForwardSolver {
    pub fn new(disc: BoundaryDiscretization, k: f64) -> Result<Self, ForwardError> {
        let system = assemble_system(&disc, k)?.matrix;
        let lu = system.clone().lu();
        if !lu.is_invertible() {
            return Err(ForwardError::Singular);
        }
        Ok(ForwardSolver { disc, k, system, lu })
    }

    pub fn discretization(&self) -> &BoundaryDiscretization {
        &self.disc
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn system(&self) -> &DMatrix<Complex64> {
        &self.system
    }

    /// Solves for several right-hand sides (columns) at once.
    pub fn solve_columns(&self, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, ForwardError> {
        let x = self.lu.solve(rhs).ok_or(ForwardError::Singular)?;
        let residual = &self.system * &x - rhs;
        for c in 0..rhs.ncols() {
            let rel = residual.column(c).norm() / rhs.column(c).norm().max(f64::MIN_POSITIVE);
            if !(rel <= SOLVE_RESIDUAL_TOL) {
                return Err(ForwardError::Residual(rel));
            }
        }
        Ok(x)
    }

    /// Solves for an arbitrary right-hand side, returning `(φ₁, φ₂)`.
    pub fn solve_rhs(
        &self,
        rhs: &DVector<Complex64>,
    ) -> Result<(DVector<Complex64>, DVector<Complex64>), ForwardError> {
        let sol = self.solve_columns(&DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
        let size = self.disc.n_nodes();
        Ok((
            sol.column(0).rows(0, size).into_owned(),
            sol.column(0).rows(size, size).into_owned(),
        ))
    }

    pub fn solve_densities(&self, d: Point) -> Result<DensityPair, ForwardError> {
        let rhs = incident_rhs(&self.disc, self.k, d);
        let (phi1, phi2) = self.solve_rhs(&rhs)?;
        Ok(DensityPair {
            phi1,
            phi2,
            incident_direction: d,
        })
    }

    /// Far-field matrix over `n_dirs` equispaced directions.
    pub fn far_field_matrix(&self, n_dirs: usize) -> Result<FarFieldMatrix, ForwardError> {
        if n_dirs < 4 {
            return Err(ForwardError::DirectionCount(n_dirs));
        }
        let dirs = directions(n_dirs);
        let size = self.disc.n_nodes();
        let columns: Vec<DVector<Complex64>> = dirs
            .iter()
            .map(|&d| incident_rhs(&self.disc, self.k, d))
            .collect();
        let rhs = DMatrix::from_columns(&columns);
        let sol = self.solve_columns(&rhs)?;
        let phi1 = sol.rows(0, size).into_owned();
        let eval = far_field_operator(&self.disc, self.k, &dirs);
        let entries = eval * phi1;
        Ok(FarFieldMatrix::new(self.k, self.disc.curve.kind().name(), entries))
    }
}

/// Rows of `-ik (π/n) (ν_j·x̂) e^{-ik x̂·y_j} |x'(t_j)|`, one per observation.
fn far_field_operator(disc: &BoundaryDiscretization, k: f64, obs: &[Point]) -> DMatrix<Complex64> {
    let size = disc.n_nodes();
    let trap = 2.0 * PI / size as f64;
    let rows: Vec<Vec<Complex64>> = obs
        .par_iter()
        .map(|xh| {
            disc.nodes
                .iter()
                .map(|node| {
                    let nu_x = node.normal[0] * xh[0] + node.normal[1] * xh[1];
                    let phase = -k * (xh[0] * node.position[0] + xh[1] * node.position[1]);
                    Complex64::new(0.0, -k) * trap * nu_x * node.jacobian * Complex64::from_polar(1.0, phase)
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(obs.len(), size, |i, j| rows[i][j])
}

/// `u∞(x̂, d) = -ik ∫ ν(y)·x̂ e^{-ik x̂·y} φ₁(y) ds(y)` by the trapezoid rule.
pub fn far_field(
    disc: &BoundaryDiscretization,
    k: f64,
    density: &DensityPair,
    xhat: Point,
) -> Result<Complex64, ForwardError> {
    if density.phi1.len() != disc.n_nodes() {
        return Err(ForwardError::DensityLength {
            expected: disc.n_nodes(),
            got: density.phi1.len(),
        });
    }
    let row = far_field_operator(disc, k, &[xhat]);
    Ok((row * &density.phi1)[0])
}

/// One assembly and factorization, `N` solves, `N²` far-field values.
pub fn assemble_far_field_matrix(
    curve: &ParametricCurve,
    k: f64,
    n_dirs: usize,
    n_nodes: usize,
) -> Result<FarFieldMatrix, ForwardError> {
    if n_dirs < 4 {
        return Err(ForwardError::DirectionCount(n_dirs));
    }
    let disc = BoundaryDiscretization::new(curve, n_nodes)?;
    ForwardSolver::new(disc, k)?.far_field_matrix(n_dirs)
}
