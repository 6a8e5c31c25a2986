//! Closed analytic boundary curves, parametrized counterclockwise on `[0, 2π)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid parameters for {kind}: {reason}")]
    InvalidParameter { kind: ShapeKind, reason: String },
    #[error("unknown shape kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    #[serde(alias = "disk")]
    Circle,
    Ellipse,
    Peanut,
    Star,
    Kite,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Ellipse => "ellipse",
            ShapeKind::Peanut => "peanut",
            ShapeKind::Star => "star",
            ShapeKind::Kite => "kite",
        }
    }

    /// Parameters used when none are given.
    ///
    /// circle: `[radius]`; ellipse: `[semi_x, semi_y]`; peanut: `[scale]` with
    /// `r(θ) = scale · 0.5 · sqrt(3cos²θ + 1)`; star: `[scale, amplitude, petals]`
    /// with `r(θ) = scale (1 + amplitude cos(petals θ))`; kite: `[scale]`.
    pub fn default_params(self) -> Vec<f64> {
        match self {
            ShapeKind::Circle => vec![1.0],
            ShapeKind::Ellipse => vec![1.0, 0.5],
            ShapeKind::Peanut => vec![1.5],
            ShapeKind::Star => vec![1.5, 0.3, 4.0],
            ShapeKind::Kite => vec![1.0],
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circle" | "disk" => Ok(ShapeKind::Circle),
            "ellipse" => Ok(ShapeKind::Ellipse),
            "peanut" => Ok(ShapeKind::Peanut),
            "star" => Ok(ShapeKind::Star),
            "kite" => Ok(ShapeKind::Kite),
            other => Err(GeometryError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    Circle { radius: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    Peanut { scale: f64 },
    Star { scale: f64, amplitude: f64, petals: f64 },
    Kite { scale: f64 },
}

/// Position, velocity and acceleration at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub position: Point,
    pub velocity: Point,
    pub acceleration: Point,
}

/// Position, outward unit normal and speed `|x'(t)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub position: Point,
    pub normal: Point,
    pub jacobian: f64,
}

/// A closed analytic curve, optionally translated by `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCurve {
    kind: ShapeKind,
    params: Vec<f64>,
    center: Point,
    profile: Profile,
}

impl ParametricCurve {
    pub fn new(kind: ShapeKind, params: &[f64]) -> Result<Self, GeometryError> {
        Self::with_center(kind, params, [0.0, 0.0])
    }

    pub fn with_center(kind: ShapeKind, params: &[f64], center: Point) -> Result<Self, GeometryError> {
        let invalid = |reason: &str| GeometryError::InvalidParameter {
            kind,
            reason: reason.to_string(),
        };
        let params: Vec<f64> = if params.is_empty() {
            kind.default_params()
        } else {
            params.to_vec()
        };
        if params.iter().chain(center.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        let profile = match kind {
            ShapeKind::Circle => {
                let [radius] = params[..] else {
                    return Err(invalid("expected [radius]"));
                };
                if radius <= 0.0 {
                    return Err(invalid("radius must be positive"));
                }
                Profile::Circle { radius }
            }
            ShapeKind::Ellipse => {
                let [semi_x, semi_y] = params[..] else {
                    return Err(invalid("expected [semi_x, semi_y]"));
                };
                if semi_x <= 0.0 || semi_y <= 0.0 {
                    return Err(invalid("semi-axes must be positive"));
                }
                Profile::Ellipse { semi_x, semi_y }
            }
            ShapeKind::Peanut => {
                let [scale] = params[..] else {
                    return Err(invalid("expected [scale]"));
                };
                if scale <= 0.0 {
                    return Err(invalid("scale must be positive"));
                }
                Profile::Peanut { scale }
            }
            ShapeKind::Star => {
                let (scale, amplitude, petals) = match params[..] {
                    [s, a] => (s, a, 4.0),
                    [s, a, p] => (s, a, p),
                    _ => return Err(invalid("expected [scale, amplitude, petals]")),
                };
                if scale <= 0.0 {
                    return Err(invalid("scale must be positive"));
                }
                if amplitude.abs() >= 1.0 {
                    return Err(invalid("|amplitude| must be below 1 so that r(θ) > 0"));
                }
                if petals < 1.0 || petals.fract() != 0.0 {
                    return Err(invalid("petals must be a positive integer"));
                }
                Profile::Star { scale, amplitude, petals }
            }
            ShapeKind::Kite => {
                let [scale] = params[..] else {
                    return Err(invalid("expected [scale]"));
                };
                if scale <= 0.0 {
                    return Err(invalid("scale must be positive"));
                }
                Profile::Kite { scale }
            }
        };
        let curve = ParametricCurve {
            kind,
            params,
            center,
            profile,
        };
        // regularity check on a fine sample
        for i in 0..4096 {
            let t = 2.0 * PI * i as f64 / 4096.0;
            let v = curve.eval(t).velocity;
            if v[0].hypot(v[1]) <= 1e-12 {
                return Err(invalid("parametrization is singular (|x'| vanishes)"));
            }
        }
        Ok(curve)
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// The same shape moved by `offset`.
    pub fn translated(&self, offset: Point) -> Self {
        ParametricCurve {
            center: [self.center[0] + offset[0], self.center[1] + offset[1]],
            ..self.clone()
        }
    }

    /// `r(θ), r'(θ), r''(θ)` for radial profiles.
    fn radial(&self, t: f64) -> Option<(f64, f64, f64)> {
        match self.profile {
            Profile::Circle { radius } => Some((radius, 0.0, 0.0)),
            Profile::Peanut { scale } => {
                let c = 0.5 * scale;
                let co = t.cos();
                let g = 3.0 * co * co + 1.0;
                let g1 = -3.0 * (2.0 * t).sin();
                let g2 = -6.0 * (2.0 * t).cos();
                let sg = g.sqrt();
                Some((
                    c * sg,
                    c * g1 / (2.0 * sg),
                    c * (g2 / (2.0 * sg) - g1 * g1 / (4.0 * g * sg)),
                ))
            }
            Profile::Star { scale, amplitude, petals } => {
                let (s, c) = (petals * t).sin_cos();
                Some((
                    scale * (1.0 + amplitude * c),
                    -scale * amplitude * petals * s,
                    -scale * amplitude * petals * petals * c,
                ))
            }
            Profile::Ellipse { .. } | Profile::Kite { .. } => None,
        }
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        let (s, c) = t.sin_cos();
        let (p, v, a) = if let Some((r, r1, r2)) = self.radial(t) {
            (
                [r * c, r * s],
                [r1 * c - r * s, r1 * s + r * c],
                [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
            )
        } else {
            match self.profile {
                Profile::Ellipse { semi_x, semi_y } => (
                    [semi_x * c, semi_y * s],
                    [-semi_x * s, semi_y * c],
                    [-semi_x * c, -semi_y * s],
                ),
                Profile::Kite { scale } => {
                    let (s2, c2) = (2.0 * t).sin_cos();
                    (
                        [scale * (c + 0.65 * c2 - 0.65), scale * 1.5 * s],
                        [scale * (-s - 1.3 * s2), scale * 1.5 * c],
                        [scale * (-c - 2.6 * c2), -scale * 1.5 * s],
                    )
                }
                _ => unreachable!("radial profiles handled above"),
            }
        };
        CurvePoint {
            position: [p[0] + self.center[0], p[1] + self.center[1]],
            velocity: v,
            acceleration: a,
        }
    }

    pub fn position(&self, t: f64) -> Point {
        self.eval(t).position
    }

    /// Position, outward unit normal `(x2', -x1') / |x'|` and jacobian `|x'|`.
    pub fn frame(&self, t: f64) -> Frame {
        let p = self.eval(t);
        let jacobian = p.velocity[0].hypot(p.velocity[1]);
        Frame {
            position: p.position,
            normal: [p.velocity[1] / jacobian, -p.velocity[0] / jacobian],
            jacobian,
        }
    }

    /// Closed polygon with `n` vertices at equispaced parameter values.
    pub fn polygon(&self, n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| self.position(2.0 * PI * i as f64 / n as f64))
            .collect()
    }

    /// Trapezoid-rule arclength with `n` nodes.
    pub fn arclength(&self, n: usize) -> f64 {
        let h = 2.0 * PI / n as f64;
        (0..n).map(|i| self.frame(h * i as f64).jacobian).sum::<f64>() * h
    }

    /// Signed area `½∮(x dy − y dx)`; positive for counterclockwise curves.
    pub fn signed_area(&self, n: usize) -> f64 {
        let h = 2.0 * PI / n as f64;
        let c = self.center;
        0.5 * h
            * (0..n)
                .map(|i| {
                    let p = self.eval(h * i as f64);
                    let (x, y) = (p.position[0] - c[0], p.position[1] - c[1]);
                    x * p.velocity[1] - y * p.velocity[0]
                })
                .sum::<f64>()
    }

    /// Largest distance from `center` to the boundary.
    pub fn circumradius(&self) -> f64 {
        self.polygon(2048)
            .iter()
            .map(|p| (p[0] - self.center[0]).hypot(p[1] - self.center[1]))
            .fold(0.0, f64::max)
    }
}

/// Point-in-polygon test by ray casting.
pub fn polygon_contains(poly: &[Point], z: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > z[1]) != (b[1] > z[1]) {
            let x_cross = a[0] + (z[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if z[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segment_distance(a: Point, b: Point, z: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((z[0] - a[0]) * d[0] + (z[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    (a[0] + s * d[0] - z[0]).hypot(a[1] + s * d[1] - z[1])
}

/// Dense polygonal approximation used for inside tests and distances.
#[derive(Debug, Clone)]
pub struct Region {
    polygon: Vec<Point>,
}

impl Region {
    pub fn new(curve: &ParametricCurve) -> Self {
        Region {
            polygon: curve.polygon(2048),
        }
    }

    pub fn contains(&self, z: Point) -> bool {
        polygon_contains(&self.polygon, z)
    }

    /// Distance from `z` to the closed region (zero inside).
    pub fn distance(&self, z: Point) -> f64 {
        if self.contains(z) {
            return 0.0;
        }
        let n = self.polygon.len();
        (0..n)
            .map(|i| segment_distance(self.polygon[i], self.polygon[(i + 1) % n], z))
            .fold(f64::INFINITY, f64::min)
    }
}
