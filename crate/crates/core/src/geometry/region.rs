use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numtheory::ExactRational;

/// Shape of a [`Region`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// ℓ∞ ball: `|x_i - c_i| < r` for every coordinate.
    Box,
    /// Euclidean ball: `|x - c| < r`.
    Ball,
}

/// An open (or closed, when `strict` is false) box or ball in ℝᵈ.
///
/// Holomorphic domains live in ℝ^{2m} with coordinates ordered
/// `(x_1, …, x_m, y_1, …, y_m)` for `z_k = x_k + i y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub center: Vec<f64>,
    pub radius: f64,
    pub shape: Shape,
    pub strict: bool,
}

impl Region {
    pub fn new(center: Vec<f64>, radius: f64, shape: Shape, strict: bool) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidParameter("region has dimension 0".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "region radius {radius} must be positive"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "region center must be finite".into(),
            ));
        }
        Ok(Region {
            center,
            radius,
            shape,
            strict,
        })
    }

    pub fn open_box(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(center, radius, Shape::Box, true)
    }

    pub fn open_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(center, radius, Shape::Ball, true)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = self.radius;
        match self.shape {
            Shape::Box => x.iter().zip(&self.center).all(|(xi, ci)| {
                let d = (xi - ci).abs();
                if self.strict {
                    d < r
                } else {
                    d <= r
                }
            }),
            Shape::Ball => {
                let d2: f64 = x
                    .iter()
                    .zip(&self.center)
                    .map(|(xi, ci)| (xi - ci).powi(2))
                    .sum();
                if self.strict {
                    d2 < r * r
                } else {
                    d2 <= r * r
                }
            }
        }
    }

    /// Per-coordinate bounds `[c_i - r, c_i + r]`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        self.center
            .iter()
            .map(|c| (c - self.radius, c + self.radius))
            .collect()
    }

    /// Deterministic grid of `per_axis^d` points inside the region (points of
    /// the bounding grid outside a ball are dropped). Grid points sit at cell
    /// midpoints so none lies on the boundary.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let per_axis = per_axis.max(1);
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = (0..d)
                .map(|i| {
                    let t = (idx[i] as f64 + 0.5) / per_axis as f64;
                    self.center[i] - self.radius + 2.0 * self.radius * t
                })
                .collect();
            if self.contains(&p) {
                out.push(p);
            }
            let mut k = 0;
            loop {
                if k == d {
                    return out;
                }
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Uniform sample from the region using `u ∈ [0,1)^d` (box) or a radial map
    /// of the same uniforms (ball).
    pub fn sample(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        loop {
            let p: Vec<f64> = self
                .center
                .iter()
                .map(|c| c + self.radius * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            if self.contains(&p)
                && (self.shape == Shape::Box || self.contains_with_margin(&p, 1e-9))
            {
                return p;
            }
        }
    }

    fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci).powi(2))
            .sum();
        d2.sqrt() < self.radius - margin
    }

    /// Uniform sample in the region shrunk by a relative factor.
    pub fn sample_interior(&self, rng: &mut impl rand::Rng, shrink: f64) -> Vec<f64> {
        let inner = Region {
            center: self.center.clone(),
            radius: self.radius * shrink,
            shape: self.shape,
            strict: self.strict,
        };
        inner.sample(rng)
    }

    pub(crate) fn exact(&self) -> Result<ExactRegion> {
        ExactRegion::new(self)
    }
}

/// A region with its center and radius converted exactly to a common
/// denominator, for deciding membership of rational points in integers.
#[derive(Debug, Clone)]
pub(crate) struct ExactRegion {
    shape: Shape,
    strict: bool,
    /// common denominator of center and radius
    scale: BigInt,
    center_num: Vec<BigInt>,
    radius_num: BigInt,
    small: Option<(i128, Vec<i128>, i128)>,
    float: Region,
}

impl ExactRegion {
    fn new(r: &Region) -> Result<Self> {
        let center: Vec<ExactRational> = r
            .center
            .iter()
            .map(|c| ExactRational::from_f64(*c))
            .collect::<Result<_>>()?;
        let radius = ExactRational::from_f64(r.radius)?;
        let mut scale = radius.denom().clone();
        for c in &center {
            scale = scale.lcm(c.denom());
        }
        let center_num: Vec<BigInt> = center
            .iter()
            .map(|c| c.numer() * (&scale / c.denom()))
            .collect();
        let radius_num = radius.numer() * (&scale / radius.denom());
        let small = (|| {
            let s = scale.to_i128()?;
            let c: Option<Vec<i128>> = center_num.iter().map(|c| c.to_i128()).collect();
            Some((s, c?, radius_num.to_i128()?))
        })();
        Ok(ExactRegion {
            shape: r.shape,
            strict: r.strict,
            scale,
            center_num,
            radius_num,
            small,
            float: r.clone(),
        })
    }

    /// Integer range of `a` with `a/q` inside the box projection on axis `i`.
    pub(crate) fn axis_range(&self, i: usize, q: i64) -> (i64, i64) {
        // |a·s - c·q| < r·q  ⇔  (c - r)q/s < a < (c + r)q/s
        let qb = BigInt::from(q);
        let lo = (&self.center_num[i] - &self.radius_num) * &qb;
        let hi = (&self.center_num[i] + &self.radius_num) * &qb;
        let (lo_a, hi_a) = if self.strict {
            (
                lo.div_floor(&self.scale) + BigInt::one(),
                ceil_div(&hi, &self.scale) - BigInt::one(),
            )
        } else {
            (ceil_div(&lo, &self.scale), hi.div_floor(&self.scale))
        };
        (clamp_i64(&lo_a), clamp_i64(&hi_a))
    }

    /// Membership of the rational point `p / den` (`den > 0`).
    pub(crate) fn contains_frac(&self, p: &[i128], den: i128) -> bool {
        debug_assert!(den > 0);
        let x: Vec<f64> = p.iter().map(|&pi| pi as f64 / den as f64).collect();
        if let Some(decided) = self.float_screen(&x) {
            return decided;
        }
        if let Some(r) = self.contains_frac_i128(p, den) {
            return r;
        }
        let pb: Vec<BigInt> = p.iter().map(|&v| BigInt::from(v)).collect();
        self.contains_frac_big(&pb, &BigInt::from(den))
    }

    fn float_screen(&self, x: &[f64]) -> Option<bool> {
        let r = self.float.radius;
        let tol = 1e-9 * (1.0 + r);
        match self.shape {
            Shape::Box => {
                let mut all_inside = true;
                for (xi, ci) in x.iter().zip(&self.float.center) {
                    let d = (xi - ci).abs();
                    if d > r + tol {
                        return Some(false);
                    }
                    if d >= r - tol {
                        all_inside = false;
                    }
                }
                if all_inside {
                    Some(true)
                } else {
                    None
                }
            }
            Shape::Ball => {
                let d: f64 = x
                    .iter()
                    .zip(&self.float.center)
                    .map(|(xi, ci)| (xi - ci).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if d > r + tol {
                    Some(false)
                } else if d < r - tol {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }

    fn contains_frac_i128(&self, p: &[i128], den: i128) -> Option<bool> {
        let (s, c, rn) = self.small.as_ref()?;
        let rd = rn.checked_mul(den)?;
        match self.shape {
            Shape::Box => {
                for (pi, ci) in p.iter().zip(c) {
                    let diff = pi.checked_mul(*s)?.checked_sub(ci.checked_mul(den)?)?.abs();
                    let ok = if self.strict { diff < rd } else { diff <= rd };
                    if !ok {
                        return Some(false);
                    }
                }
                Some(true)
            }
            Shape::Ball => {
                let mut acc: i128 = 0;
                for (pi, ci) in p.iter().zip(c) {
                    let diff = pi.checked_mul(*s)?.checked_sub(ci.checked_mul(den)?)?;
                    acc = acc.checked_add(diff.checked_mul(diff)?)?;
                }
                let r2 = rd.checked_mul(rd)?;
                Some(if self.strict { acc < r2 } else { acc <= r2 })
            }
        }
    }

    pub(crate) fn contains_frac_big(&self, p: &[BigInt], den: &BigInt) -> bool {
        let rd = &self.radius_num * den;
        match self.shape {
            Shape::Box => p.iter().zip(&self.center_num).all(|(pi, ci)| {
                let diff = (pi * &self.scale - ci * den).abs();
                if self.strict {
                    diff < rd
                } else {
                    diff <= rd
                }
            }),
            Shape::Ball => {
                let mut acc = BigInt::zero();
                for (pi, ci) in p.iter().zip(&self.center_num) {
                    let diff = pi * &self.scale - ci * den;
                    acc += &diff * &diff;
                }
                let r2 = &rd * &rd;
                if self.strict {
                    acc < r2
                } else {
                    acc <= r2
                }
            }
        }
    }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn clamp_i64(x: &BigInt) -> i64 {
    x.to_i64().unwrap_or(if x.is_negative() {
        i64::MIN / 4
    } else {
        i64::MAX / 4
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_range_open_unit_interval() {
        let r = Region::open_box(vec![0.5], 0.5).unwrap().exact().unwrap();
        assert_eq!(r.axis_range(0, 1), (1, 0));
        assert_eq!(r.axis_range(0, 4), (1, 3));
        let closed = Region::new(vec![0.5], 0.5, Shape::Box, false)
            .unwrap()
            .exact()
            .unwrap();
        assert_eq!(closed.axis_range(0, 4), (0, 4));
    }

    #[test]
    fn exact_membership_on_boundary() {
        let r = Region::open_ball(vec![0.0, 0.0], 1.0)
            .unwrap()
            .exact()
            .unwrap();
        assert!(!r.contains_frac(&[3, 4], 5));
        assert!(r.contains_frac(&[3, 3], 5));
        let closed = Region::new(vec![0.0, 0.0], 1.0, Shape::Ball, false)
            .unwrap()
            .exact()
            .unwrap();
        assert!(closed.contains_frac(&[3, 4], 5));
    }

    #[test]
    fn grid_stays_inside() {
        let r = Region::open_ball(vec![0.1, -0.2], 0.3).unwrap();
        let g = r.grid(9);
        assert!(!g.is_empty());
        assert!(g.iter().all(|p| r.contains(p)));
    }
}
