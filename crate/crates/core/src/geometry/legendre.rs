//! Legendre transforms `f*_θ` of real graphs and `f*` of holomorphic graphs,
//! computed pointwise by damped Newton inversion of the gradient map.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::manifold::{to_complex, to_real, HolomorphicGraphManifold, RealGraphManifold};
use crate::error::{Error, Result};
use crate::numtheory::linf;

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITERS: usize = 50;
pub const SINGULAR_DET: f64 = 1e-10;
const DAMPING_FLOOR: f64 = 1.0 / (1u64 << 20) as f64;
const FD_STEP: f64 = 1e-5;

/// `(f*_θ(y), ∇f*_θ(y), (f*_θ)''(y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreValue {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// `(f*(w), ∂f*(w), (f*)''(w))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLegendreValue {
    pub value: Complex64,
    pub grad: Vec<Complex64>,
    pub hess: DMatrix<Complex64>,
}

/// Result of a gradient inversion, before any domain check.
#[derive(Debug, Clone)]
pub(crate) struct Preimage {
    pub x: Vec<f64>,
    pub f_theta: f64,
    pub hess: DMatrix<f64>,
}

fn validate_theta(m: &RealGraphManifold, theta: &[f64]) -> Result<()> {
    if theta.len() != m.codim() {
        return Err(Error::InvalidParameter(format!(
            "theta has {} components, codimension is {}",
            theta.len(),
            m.codim()
        )));
    }
    let t = linf(theta);
    if !(theta.iter().all(|v| v.is_finite()) && (1.0..=2.0).contains(&t)) {
        return Err(Error::InvalidParameter(format!(
            "theta {theta:?} must satisfy 1 <= |theta|_inf <= 2"
        )));
    }
    Ok(())
}

/// Solves `∇f_θ(x) = y` from `start`.
pub(crate) fn invert_gradient(
    m: &RealGraphManifold,
    theta: &[f64],
    y: &[f64],
    start: &[f64],
) -> Result<Preimage> {
    let solver_err = |reason: String| Error::Solver {
        theta: theta.to_vec(),
        reason,
    };
    let yv = DVector::from_column_slice(y);
    let tol = NEWTON_TOL * linf(y).max(1.0);
    let residual = |x: &[f64]| -> Result<(DVector<f64>, super::manifold::RealJet)> {
        let jet = m.jet(x)?;
        let r = jet.grad_theta(theta) - &yv;
        Ok((r, jet))
    };
    let mut x = start.to_vec();
    let (mut r, mut jet) =
        residual(&x).map_err(|e| solver_err(format!("start point rejected: {e}")))?;
    let mut polished = false;
    for _ in 0..NEWTON_MAX_ITERS {
        let res = r.amax();
        if res <= tol && polished {
            break;
        }
        let h = jet.hess_theta(theta);
        let det = h.determinant();
        if !(det.abs() >= SINGULAR_DET) {
            return Err(Error::Singular { det: det.abs() });
        }
        let step = h
            .lu()
            .solve(&(-&r))
            .ok_or(Error::Singular { det: det.abs() })?;
        let mut t = 1.0;
        let mut accepted = false;
        while t >= DAMPING_FLOOR {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Ok((r2, j2)) = residual(&cand) {
                let res2 = r2.amax();
                if res2 < res || (res <= tol && res2 <= tol) {
                    x = cand;
                    r = r2;
                    jet = j2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if res <= tol {
            polished = true;
            if !accepted {
                break;
            }
            continue;
        }
        if !accepted {
            return Err(solver_err(format!(
                "damping floor reached at residual {res:e}"
            )));
        }
    }
    let res = r.amax();
    if !(res <= tol) {
        return Err(solver_err(format!(
            "no convergence in {NEWTON_MAX_ITERS} iterations (residual {res:e})"
        )));
    }
    let hess = jet.hess_theta(theta);
    let det = hess.determinant();
    if !(det.abs() >= SINGULAR_DET) {
        return Err(Error::Singular { det: det.abs() });
    }
    Ok(Preimage {
        f_theta: jet.value_theta(theta),
        x,
        hess,
    })
}

fn assemble(pre: Preimage, y: &[f64]) -> Result<LegendreValue> {
    let det = pre.hess.determinant();
    let inv = pre
        .hess
        .try_inverse()
        .ok_or(Error::Singular { det: det.abs() })?;
    let xy: f64 = pre.x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(LegendreValue {
        value: -pre.f_theta + xy,
        grad: pre.x,
        hess: inv,
    })
}

/// Legendre transform `f*_θ(y) = -f_θ(x) + x·y` where `∇f_θ(x) = y`, with
/// Newton started at the domain center.
pub fn legendre(m: &RealGraphManifold, theta: &[f64], y: &[f64]) -> Result<LegendreValue> {
    let start = m.domain().center.clone();
    legendre_from(m, theta, y, &start)
}

/// [`legendre`] with an explicit Newton start.
pub fn legendre_from(
    m: &RealGraphManifold,
    theta: &[f64],
    y: &[f64],
    start: &[f64],
) -> Result<LegendreValue> {
    validate_theta(m, theta)?;
    if y.len() != m.n() {
        return Err(Error::InvalidParameter(format!(
            "y has {} coordinates, expected {}",
            y.len(),
            m.n()
        )));
    }
    let pre = invert_gradient(m, theta, y, start)?;
    if !m.domain().contains(&pre.x) {
        return Err(Error::Solver {
            theta: theta.to_vec(),
            reason: format!("preimage {:?} lies outside the domain", pre.x),
        });
    }
    assemble(pre, y)
}

/// `(|f**_θ(x) - f_θ(x)|, ‖(f*_θ)''(∇f_θ(x)) - (f_θ''(x))⁻¹‖_max)`, where the
/// dual Hessian is taken by central differences of Newton solutions.
pub fn legendre_residuals(m: &RealGraphManifold, theta: &[f64], x: &[f64]) -> Result<(f64, f64)> {
    validate_theta(m, theta)?;
    let jet = m.jet(x)?;
    let y: Vec<f64> = jet.grad_theta(theta).iter().copied().collect();
    let f_theta = jet.value_theta(theta);
    let star = legendre(m, theta, &y)?;
    // f**(x) = -f*(y) + x·y, since ∇f*(y) = x
    let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let involution = (-star.value + xy - f_theta).abs();

    let n = m.n();
    let inv = jet
        .hess_theta(theta)
        .try_inverse()
        .ok_or(Error::Singular { det: 0.0 })?;
    let mut fd = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[k] += FD_STEP;
        ym[k] -= FD_STEP;
        let xp = invert_gradient(m, theta, &yp, &star.grad)?.x;
        let xm = invert_gradient(m, theta, &ym, &star.grad)?.x;
        for i in 0..n {
            fd[(i, k)] = (xp[i] - xm[i]) / (2.0 * FD_STEP);
        }
    }
    Ok((involution, (fd - inv).amax()))
}

/// Warm starts for repeated Legendre solves, keyed by quantized `θ`.
#[derive(Debug, Clone)]
pub struct LegendreCache {
    quantum: f64,
    entries: HashMap<Vec<i64>, Vec<f64>>,
}

impl Default for LegendreCache {
    fn default() -> Self {
        Self::new(1e-9)
    }
}

impl LegendreCache {
    pub fn new(quantum: f64) -> Self {
        LegendreCache {
            quantum,
            entries: HashMap::new(),
        }
    }

    fn key(&self, theta: &[f64]) -> Vec<i64> {
        theta
            .iter()
            .map(|t| (t / self.quantum).round() as i64)
            .collect()
    }

    pub fn get(&self, theta: &[f64]) -> Option<&Vec<f64>> {
        self.entries.get(&self.key(theta))
    }

    pub fn store(&mut self, theta: &[f64], x: Vec<f64>) {
        let k = self.key(theta);
        self.entries.insert(k, x);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Gradient inversion from the cached start, falling back to the start
    /// produced by `cold` when there is no entry or the warm attempt fails.
    /// Successful solutions become the next warm start.
    pub(crate) fn invert(
        &mut self,
        m: &RealGraphManifold,
        theta: &[f64],
        y: &[f64],
        cold: impl FnOnce() -> Vec<f64>,
    ) -> Result<Preimage> {
        let result = match self
            .get(theta)
            .map(|start| invert_gradient(m, theta, y, start))
        {
            Some(Ok(p)) => Ok(p),
            _ => invert_gradient(m, theta, y, &cold()),
        };
        if let Ok(p) = &result {
            self.store(theta, p.x.clone());
        }
        result
    }
}

/// Complex gradient inversion `∂f(z) = w`.
pub(crate) fn invert_complex_gradient(
    h: &HolomorphicGraphManifold,
    w: &[Complex64],
    start: &[Complex64],
) -> Result<(Vec<Complex64>, super::manifold::ComplexJet)> {
    let solver_err = |reason: String| Error::Solver {
        theta: to_real(w),
        reason,
    };
    let wv = DVector::from_column_slice(w);
    let wmax = w.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let tol = NEWTON_TOL * wmax.max(1.0);
    let amax = |v: &DVector<Complex64>| v.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let residual = |z: &[Complex64]| -> Result<(DVector<Complex64>, super::manifold::ComplexJet)> {
        let jet = h.jet(z)?;
        Ok((&jet.grad - &wv, jet))
    };
    let mut z = start.to_vec();
    let (mut r, mut jet) =
        residual(&z).map_err(|e| solver_err(format!("start point rejected: {e}")))?;
    let mut polished = false;
    for _ in 0..NEWTON_MAX_ITERS {
        let res = amax(&r);
        if res <= tol && polished {
            break;
        }
        let det = jet.hess.determinant();
        if !(det.norm() >= SINGULAR_DET) {
            return Err(Error::Singular { det: det.norm() });
        }
        let step = jet
            .hess
            .clone()
            .lu()
            .solve(&(-&r))
            .ok_or(Error::Singular { det: det.norm() })?;
        let mut t = 1.0;
        let mut accepted = false;
        while t >= DAMPING_FLOOR {
            let cand: Vec<Complex64> = z.iter().zip(step.iter()).map(|(a, s)| a + s * t).collect();
            if let Ok((r2, j2)) = residual(&cand) {
                let res2 = amax(&r2);
                if res2 < res || (res <= tol && res2 <= tol) {
                    z = cand;
                    r = r2;
                    jet = j2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if res <= tol {
            polished = true;
            if !accepted {
                break;
            }
            continue;
        }
        if !accepted {
            return Err(solver_err(format!(
                "damping floor reached at residual {res:e}"
            )));
        }
    }
    let res = amax(&r);
    if !(res <= tol) {
        return Err(solver_err(format!(
            "no convergence in {NEWTON_MAX_ITERS} iterations (residual {res:e})"
        )));
    }
    let det = jet.hess.determinant();
    if !(det.norm() >= SINGULAR_DET) {
        return Err(Error::Singular { det: det.norm() });
    }
    Ok((z, jet))
}

fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Complex Legendre transform `f*(w) = -f(z) + z·w` with `∂f(z) = w`, using
/// the bilinear pairing `z·w = Σ z_k w_k`.
pub fn complex_legendre(
    h: &HolomorphicGraphManifold,
    w: &[Complex64],
) -> Result<ComplexLegendreValue> {
    let start = to_complex(&h.domain().center);
    complex_legendre_from(h, w, &start)
}

/// [`complex_legendre`] with an explicit Newton start.
pub fn complex_legendre_from(
    h: &HolomorphicGraphManifold,
    w: &[Complex64],
    start: &[Complex64],
) -> Result<ComplexLegendreValue> {
    if w.len() != h.m() {
        return Err(Error::InvalidParameter(format!(
            "w has {} coordinates, expected {}",
            w.len(),
            h.m()
        )));
    }
    let (z, jet) = invert_complex_gradient(h, w, start)?;
    if !h.contains(&z) {
        return Err(Error::Solver {
            theta: to_real(w),
            reason: format!("preimage {z:?} lies outside the domain"),
        });
    }
    let det = jet.hess.determinant();
    let inv = jet
        .hess
        .try_inverse()
        .ok_or(Error::Singular { det: det.norm() })?;
    Ok(ComplexLegendreValue {
        value: -jet.value + bilinear(&z, w),
        grad: z,
        hess: inv,
    })
}

/// Complex analogue of [`legendre_residuals`] at a domain point `z`.
pub fn complex_legendre_residuals(
    h: &HolomorphicGraphManifold,
    z: &[Complex64],
) -> Result<(f64, f64)> {
    let jet = h.jet(z)?;
    let w: Vec<Complex64> = jet.grad.iter().copied().collect();
    let star = complex_legendre(h, &w)?;
    let involution = (-star.value + bilinear(z, &w) - jet.value).norm();
    let m = h.m();
    let inv = jet
        .hess
        .clone()
        .try_inverse()
        .ok_or(Error::Singular { det: 0.0 })?;
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let mut wp = w.clone();
        let mut wm = w.clone();
        wp[k] += FD_STEP;
        wm[k] -= FD_STEP;
        let zp = invert_complex_gradient(h, &wp, &star.grad)?.0;
        let zm = invert_complex_gradient(h, &wm, &star.grad)?.0;
        for i in 0..m {
            let d = (zp[i] - zm[i]) / (2.0 * FD_STEP);
            worst = worst.max((d - inv[(i, k)]).norm());
        }
    }
    Ok((involution, worst))
}

/// Worst residuals of [`legendre_residuals`] (and, for holomorphic graphs,
/// [`complex_legendre_residuals`]) over sampled points and directions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LegendreCheck {
    pub points: usize,
    pub directions: usize,
    pub evaluations: usize,
    pub max_involution: f64,
    pub max_hessian: f64,
    /// Evaluations whose Newton solve failed.
    pub failures: usize,
}

impl LegendreCheck {
    fn absorb(&mut self, r: Result<(f64, f64)>) {
        self.evaluations += 1;
        match r {
            Ok((inv, hess)) => {
                self.max_involution = self.max_involution.max(inv);
                self.max_hessian = self.max_hessian.max(hess);
            }
            Err(_) => self.failures += 1,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.failures == 0 && self.max_involution <= tol && self.max_hessian <= tol
    }
}

/// `directions` values of `θ` with `1 ≤ |θ|∞ ≤ 2`: unit directions on
/// `𝕊^{R-1}` rescaled to sup norm `1 + k/directions`.
pub fn legendre_directions(r: usize, directions: usize) -> Vec<Vec<f64>> {
    let base = super::curvature::theta_samples(r, directions.max(1));
    (0..directions)
        .map(|k| {
            let u = &base[k % base.len()];
            let scale = (1.0 + k as f64 / directions as f64) / linf(u);
            u.iter().map(|t| t * scale).collect()
        })
        .collect()
}

/// Samples `points` points in the middle half of the domain and evaluates
/// the Legendre residuals in every direction. Holomorphic graphs are checked
/// through their realification and through the complex transform.
pub fn legendre_check(
    manifold: &super::manifold::Manifold,
    points: usize,
    directions: usize,
    rng: &mut impl rand::Rng,
) -> Result<LegendreCheck> {
    use super::manifold::{realify, Manifold};
    let mut report = LegendreCheck {
        points,
        directions,
        ..Default::default()
    };
    let (real, holo) = match manifold {
        Manifold::Real(m) => (m.clone(), None),
        Manifold::Holomorphic(h) => (realify(h), Some(h)),
    };
    let thetas = legendre_directions(real.codim(), directions);
    for _ in 0..points {
        let x = real.domain().sample_interior(rng, 0.5);
        for theta in &thetas {
            report.absorb(legendre_residuals(&real, theta, &x));
        }
        if let Some(h) = holo {
            report.absorb(complex_legendre_residuals(h, &to_complex(&x)));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::manifold::{builtin_holomorphic, BuiltinParams};
    use crate::geometry::poly::{ComplexPoly, RealPoly};
    use crate::geometry::realify;
    use crate::geometry::region::Region;
    use crate::numtheory::ExactRational;

    fn half_square(n: usize) -> RealGraphManifold {
        let terms = (0..n).map(|i| {
            let mut e = vec![0; n];
            e[i] = 2;
            (e, ExactRational::new(1, 2).unwrap())
        });
        let p = RealPoly::new(n, terms).unwrap();
        RealGraphManifold::from_polys(
            "half-square",
            vec![p],
            Region::open_box(vec![0.0; n], 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn self_dual_quadratic() {
        let m = half_square(1);
        let l = legendre(&m, &[1.0], &[0.2]).unwrap();
        assert!((l.value - 0.02).abs() < 1e-15);
        assert_eq!(legendre_residuals(&m, &[1.0], &[0.3]).unwrap().0, 0.0);
        let (i, h) = legendre_residuals(&m, &[1.0], &[-0.7]).unwrap();
        assert!(i < 1e-14 && h < 1e-9);
    }

    #[test]
    fn parabola_transform() {
        let p = RealPoly::from_ints(1, &[(&[2], 1)]).unwrap();
        let m =
            RealGraphManifold::from_polys("x2", vec![p], Region::open_box(vec![0.0], 1.0).unwrap())
                .unwrap();
        let l = legendre(&m, &[1.0], &[1.0]).unwrap();
        assert!((l.value - 0.25).abs() < 1e-14);
        assert!((l.hess[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn realified_parabola_transform() {
        let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        let m = realify(&h);
        let l = legendre(&m, &[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((l.hess[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((l.hess[(1, 1)] + 0.5).abs() < 1e-14);
        assert!(l.hess[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn theta_out_of_range() {
        let m = half_square(1);
        assert!(legendre(&m, &[0.5], &[0.1]).is_err());
        assert!(legendre(&m, &[3.0], &[0.1]).is_err());
    }

    #[test]
    fn singular_hessian_is_reported() {
        let p = RealPoly::from_ints(1, &[(&[1], 1)]).unwrap();
        let m = RealGraphManifold::from_polys(
            "line",
            vec![p],
            Region::open_box(vec![0.0], 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            legendre(&m, &[1.0], &[2.0]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn unreachable_target_is_solver_error() {
        let m = half_square(1);
        assert!(matches!(
            legendre(&m, &[1.0], &[5.0]),
            Err(Error::Solver { .. })
        ));
    }

    #[test]
    fn complex_self_dual_and_parabola() {
        let half = ComplexPoly::new(
            1,
            vec![(
                vec![2],
                crate::numtheory::ComplexRational::new(
                    ExactRational::new(1, 2).unwrap(),
                    ExactRational::zero(),
                ),
            )],
        )
        .unwrap();
        let h = HolomorphicGraphManifold::from_poly(
            "half",
            half,
            Region::open_box(vec![0.0, 0.0], 1.0).unwrap(),
        )
        .unwrap();
        let w = [Complex64::new(0.3, -0.2)];
        let l = complex_legendre(&h, &w).unwrap();
        assert!((l.value - w[0] * w[0] / 2.0).norm() < 1e-15);

        let p = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        let l = complex_legendre(&p, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((l.value - 0.25).norm() < 1e-15);
    }

    #[test]
    fn complex_sphere_residuals() {
        let s = builtin_holomorphic("complex-sphere", BuiltinParams::default()).unwrap();
        let (i, h) = complex_legendre_residuals(&s, &[Complex64::new(0.1, 0.15)]).unwrap();
        assert!(i < 1e-8 && h < 1e-6, "{i} {h}");
    }

    #[test]
    fn cache_round_trip() {
        let m = half_square(2);
        let mut cache = LegendreCache::default();
        let p = cache
            .invert(&m, &[1.0], &[0.1, 0.2], || vec![0.0, 0.0])
            .unwrap();
        assert_eq!(cache.len(), 1);
        let q = cache
            .invert(&m, &[1.0], &[0.1, 0.2], || vec![0.0, 0.0])
            .unwrap();
        assert!((p.x[0] - q.x[0]).abs() < 1e-15);
    }

    #[test]
    fn sampled_check_on_builtins() {
        use crate::geometry::{builtin, BuiltinParams};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for (name, tol) in [
            ("real-parabola", 1e-8),
            ("complex-parabola", 1e-8),
            ("real-sphere", 1e-6),
            ("complex-sphere", 1e-6),
        ] {
            let m = builtin(name, BuiltinParams::default()).unwrap();
            let r = legendre_check(&m, 10, 16, &mut rng).unwrap();
            assert!(r.passes(tol), "{name}: {r:?}");
        }
        for theta in legendre_directions(2, 16) {
            let s = linf(&theta);
            assert!((1.0..=2.0).contains(&s));
        }
    }
}
