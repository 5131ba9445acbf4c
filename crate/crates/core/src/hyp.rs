//! Poincaré-ball geometry at curvature `-c`.
//!
//! Points are plain coordinate vectors inside the open ball of radius `1/√c`.
//! Everything here is pure: no shared state, safe to call from any thread.
//!
//! The slice-level functions (`*_raw`, [`dot`], [`norm`]) skip validation and
//! exist for hot loops (embedding training, noise sampling). The typed
//! functions on [`BallPoint`] check dimensions and curvature and always hand
//! back points that satisfy the ball invariant.

use crate::error::{Error, Result};

/// Default distance kept from the boundary by [`project_to_ball`].
pub const DEFAULT_MARGIN: f64 = 1e-5;

/// Upper clamp for every `atanh` argument.
pub const ATANH_MAX: f64 = 1.0 - 1e-12;

/// Magnitude of the (negative) sectional curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Self(c))
        } else {
            Err(Error::InvalidCurvature(c))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }

    /// Euclidean radius of the ball, `1/√c`.
    pub fn radius(self) -> f64 {
        1.0 / self.0.sqrt()
    }
}

impl Default for Curvature {
    fn default() -> Self {
        Self(1.0)
    }
}

/// A point strictly inside the Poincaré ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl BallPoint {
    /// Wraps `coords`, rejecting non-finite entries and anything on or outside
    /// the boundary. Use [`project_to_ball`] to pull arbitrary vectors inside.
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = norm(&coords);
        let radius = curvature.radius();
        if n >= radius {
            return Err(Error::OutsideBall { norm: n, radius });
        }
        Ok(Self { coords, curvature })
    }

    pub fn origin(dim: usize, curvature: Curvature) -> Self {
        Self {
            coords: vec![0.0; dim],
            curvature,
        }
    }

    pub(crate) fn from_raw_unchecked(coords: Vec<f64>, curvature: Curvature) -> Self {
        Self { coords, curvature }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean norm of the coordinates.
    pub fn euclidean_norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// Möbius inverse `-x`.
    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|v| -v).collect(),
            curvature: self.curvature,
        }
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&v| v == 0.0)
    }
}

/// A vector in the tangent space at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: BallPoint,
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: BallPoint, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { base, coords })
    }

    pub fn zero(base: BallPoint) -> Self {
        let coords = vec![0.0; base.dim()];
        Self { base, coords }
    }

    pub fn base(&self) -> &BallPoint {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn euclidean_norm(&self) -> f64 {
        norm(&self.coords)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

fn check_pair(x: &BallPoint, y: &BallPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    if x.curvature != y.curvature {
        return Err(Error::CurvatureMismatch(x.curvature.0, y.curvature.0));
    }
    Ok(())
}

/// `atanh(t)` for `t ∈ [0, 1)`, with `t` clamped to `[0, ATANH_MAX]`.
#[inline]
pub fn atanh_clamped(t: f64) -> f64 {
    t.clamp(0.0, ATANH_MAX).atanh()
}

/// Möbius addition on raw coordinates:
/// `((1 + 2c⟨x,y⟩ + c‖y‖²) x + (1 − c‖x‖²) y) / (1 + 2c⟨x,y⟩ + c²‖x‖²‖y‖²)`.
pub fn mobius_add_raw(x: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let denom = (1.0 + 2.0 * c * xy + c * c * x2 * y2).max(f64::MIN_POSITIVE);
    x.iter().zip(y).map(|(xi, yi)| (a * xi + b * yi) / denom).collect()
}

/// `(‖−x ⊕ y‖, 1 − c‖−x ⊕ y‖²)`, the second term computed as a product of
/// `(1 − c‖x‖²)(1 − c‖y‖²)` so that it keeps full relative precision close to
/// the boundary.
fn mobius_gap(x: &[f64], y: &[f64], c: f64) -> (f64, f64) {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let diff2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let denom = (1.0 - 2.0 * c * xy + c * c * x2 * y2).max(f64::MIN_POSITIVE);
    let w = (diff2 / denom).sqrt();
    let slack = ((1.0 - c * x2) * (1.0 - c * y2) / denom).max(0.0);
    (w, slack)
}

/// `(2/√c) atanh(√c w)` given `w` and `1 − c w²`.
fn scaled_atanh(w: f64, slack: f64, c: f64) -> f64 {
    let sc = c.sqrt();
    let t = (sc * w).clamp(0.0, ATANH_MAX);
    let floor = 1.0 - ATANH_MAX * ATANH_MAX;
    // atanh(t) = ln(1 + t) − ½ ln(1 − t²)
    let two_atanh = 2.0 * t.ln_1p() - slack.max(floor).ln();
    two_atanh / sc
}

/// Hyperbolic distance on raw coordinates.
pub fn distance_raw(x: &[f64], y: &[f64], c: f64) -> f64 {
    let (w, slack) = mobius_gap(x, y, c);
    scaled_atanh(w, slack, c)
}

/// Poincaré norm on raw coordinates, `(2/√c) atanh(√c‖x‖)`.
pub fn norm_raw(x: &[f64], c: f64) -> f64 {
    let x2 = norm_sq(x);
    scaled_atanh(x2.sqrt(), 1.0 - c * x2, c)
}

/// Scalar form of the Poincaré norm applied to a magnitude `t ∈ [0, 1/√c)`.
pub fn scalar_poincare_norm(t: f64, c: f64) -> f64 {
    let sc = c.sqrt();
    2.0 / sc * atanh_clamped(sc * t.abs())
}

pub fn conformal_factor_raw(x: &[f64], c: f64) -> f64 {
    2.0 / (1.0 - c * norm_sq(x))
}

pub fn exp_map_raw(base: &[f64], v: &[f64], c: f64) -> Vec<f64> {
    let vn = norm(v);
    if vn == 0.0 {
        return base.to_vec();
    }
    let sc = c.sqrt();
    let lambda = conformal_factor_raw(base, c);
    let scale = (sc * lambda * vn / 2.0).tanh() / (sc * vn);
    let step: Vec<f64> = v.iter().map(|vi| vi * scale).collect();
    mobius_add_raw(base, &step, c)
}

pub fn log_map_raw(base: &[f64], z: &[f64], c: f64) -> Vec<f64> {
    let neg: Vec<f64> = base.iter().map(|v| -v).collect();
    let w = mobius_add_raw(&neg, z, c);
    let wn = norm(&w);
    if wn == 0.0 {
        return vec![0.0; base.len()];
    }
    let sc = c.sqrt();
    let lambda = conformal_factor_raw(base, c);
    let scale = 2.0 / (sc * lambda) * atanh_clamped(sc * wn) / wn;
    w.into_iter().map(|wi| wi * scale).collect()
}

/// Rescales `x` radially onto `‖x‖ = 1/√c − margin` when it sits at or beyond
/// that bound; interior points are returned untouched.
pub fn project_raw(mut x: Vec<f64>, c: f64, margin: f64) -> Vec<f64> {
    let bound = 1.0 / c.sqrt() - margin;
    let n = norm(&x);
    if n >= bound && n > 0.0 {
        let s = bound / n;
        x.iter_mut().for_each(|v| *v *= s);
    }
    x
}

/// Möbius addition `x ⊕_c y`. The result is re-projected if rounding pushed it
/// past the margin.
pub fn mobius_add(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    check_pair(x, y)?;
    let c = x.curvature.value();
    let sum = project_raw(mobius_add_raw(&x.coords, &y.coords, c), c, DEFAULT_MARGIN);
    Ok(BallPoint::from_raw_unchecked(sum, x.curvature))
}

/// Geodesic distance `(2/√c) atanh(√c‖−x ⊕_c y‖)`.
pub fn poincare_distance(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    check_pair(x, y)?;
    Ok(distance_raw(&x.coords, &y.coords, x.curvature.value()))
}

/// Distance from the origin.
pub fn poincare_norm(x: &BallPoint) -> f64 {
    norm_raw(&x.coords, x.curvature.value())
}

/// `λ_x = 2 / (1 − c‖x‖²)`.
pub fn conformal_factor(x: &BallPoint) -> f64 {
    conformal_factor_raw(&x.coords, x.curvature.value())
}

/// `exp_x(v) = x ⊕ tanh(√c λ_x ‖v‖ / 2) v / (√c ‖v‖)`, based at `v.base()`.
pub fn exp_map(v: &TangentVector) -> BallPoint {
    let c = v.base.curvature.value();
    let out = project_raw(exp_map_raw(&v.base.coords, &v.coords, c), c, DEFAULT_MARGIN);
    BallPoint::from_raw_unchecked(out, v.base.curvature)
}

/// `log_x(z) = (2 / (√c λ_x)) atanh(√c‖−x ⊕ z‖) (−x ⊕ z) / ‖−x ⊕ z‖`.
pub fn log_map(base: &BallPoint, z: &BallPoint) -> Result<TangentVector> {
    check_pair(base, z)?;
    let coords = log_map_raw(&base.coords, &z.coords, base.curvature.value());
    Ok(TangentVector {
        base: base.clone(),
        coords,
    })
}

/// Cosine of the angle between two embeddings. The ball is conformal, so
/// this is the Euclidean cosine of the coordinate vectors.
pub fn angle(u: &BallPoint, v: &BallPoint) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    angle_raw(&u.coords, &v.coords)
}

pub fn angle_raw(u: &[f64], v: &[f64]) -> Result<f64> {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Pulls an arbitrary finite vector into the ball.
pub fn project_to_ball(x: &[f64], curvature: Curvature, margin: f64) -> Result<BallPoint> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(margin >= 0.0 && margin < curvature.radius()) {
        return Err(Error::param(format!("projection margin {margin} out of range")));
    }
    let out = project_raw(x.to_vec(), curvature.value(), margin);
    Ok(BallPoint::from_raw_unchecked(out, curvature))
}
