use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::poly::{ComplexPoly, RealPoly};
use super::region::Region;
use crate::error::{Error, Result};

/// Value, gradient (`R×n`) and the `R` stacked Hessians (`n×n`) of a real
/// graphing map at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RealJet {
    pub value: Vec<f64>,
    pub grad: DMatrix<f64>,
    pub hess: Vec<DMatrix<f64>>,
}

impl RealJet {
    /// `Σ θ_ℓ f_ℓ''`.
    pub fn hess_theta(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.grad.ncols();
        let mut h = DMatrix::zeros(n, n);
        for (t, hl) in theta.iter().zip(&self.hess) {
            h += hl * *t;
        }
        h
    }

    /// `∇(Σ θ_ℓ f_ℓ)`.
    pub fn grad_theta(&self, theta: &[f64]) -> DVector<f64> {
        self.grad.tr_mul(&DVector::from_column_slice(theta))
    }

    pub fn value_theta(&self, theta: &[f64]) -> f64 {
        self.value.iter().zip(theta).map(|(v, t)| v * t).sum()
    }
}

/// Value, complex gradient and complex Hessian of a holomorphic function.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexJet {
    pub value: Complex64,
    pub grad: DVector<Complex64>,
    pub hess: DMatrix<Complex64>,
}

/// Evaluator for `x ∈ ℝⁿ ↦ f(x) ∈ ℝ^R`.
pub trait RealGraphMap: Send + Sync + fmt::Debug {
    fn n(&self) -> usize;
    fn codim(&self) -> usize;
    /// Writes `f(x)` into `out`; cheaper than [`RealGraphMap::jet`].
    fn value(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    fn jet(&self, x: &[f64]) -> Result<RealJet>;
}

/// Evaluator for a holomorphic `f : ℂ^m → ℂ`.
pub trait HolomorphicMap: Send + Sync + fmt::Debug {
    fn m(&self) -> usize;
    fn value(&self, z: &[Complex64]) -> Result<Complex64>;
    fn jet(&self, z: &[Complex64]) -> Result<ComplexJet>;
}

/// Graph `{(x, f(x)) : x ∈ X}` of a smooth map `f : X ⊆ ℝⁿ → ℝ^R`.
#[derive(Clone)]
pub struct RealGraphManifold {
    name: String,
    map: Arc<dyn RealGraphMap>,
    domain: Region,
    exact_poly: Option<Vec<RealPoly>>,
}

impl fmt::Debug for RealGraphManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealGraphManifold")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("codim", &self.codim())
            .field("domain", &self.domain)
            .field("polynomial", &self.exact_poly.is_some())
            .finish()
    }
}

impl RealGraphManifold {
    pub fn from_map(
        name: impl Into<String>,
        map: Arc<dyn RealGraphMap>,
        domain: Region,
    ) -> Result<Self> {
        if domain.dim() != map.n() {
            return Err(Error::InvalidParameter(format!(
                "domain has dimension {}, map expects {}",
                domain.dim(),
                map.n()
            )));
        }
        Ok(RealGraphManifold {
            name: name.into(),
            map,
            domain,
            exact_poly: None,
        })
    }

    /// Polynomial graph with exact coefficients; one polynomial per codimension.
    pub fn from_polys(
        name: impl Into<String>,
        polys: Vec<RealPoly>,
        domain: Region,
    ) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one component polynomial".into(),
            ));
        }
        let n = polys[0].nvars();
        if polys.iter().any(|p| p.nvars() != n) {
            return Err(Error::InvalidParameter(
                "component polynomials disagree on n".into(),
            ));
        }
        let map = Arc::new(PolyMap {
            polys: polys.clone(),
        });
        let mut m = Self::from_map(name, map, domain)?;
        m.exact_poly = Some(polys);
        Ok(m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    pub fn codim(&self) -> usize {
        self.map.codim()
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn exact_poly(&self) -> Option<&[RealPoly]> {
        self.exact_poly.as_deref()
    }

    pub fn map(&self) -> &Arc<dyn RealGraphMap> {
        &self.map
    }

    pub fn with_domain(&self, domain: Region) -> Result<Self> {
        if domain.dim() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "domain has dimension {}, manifold has n = {}",
                domain.dim(),
                self.n()
            )));
        }
        let mut m = self.clone();
        m.domain = domain;
        Ok(m)
    }

    pub fn value(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.map.value(x, out)
    }

    pub fn jet(&self, x: &[f64]) -> Result<RealJet> {
        self.map.jet(x)
    }
}

/// Graph `{(z, f(z)) : z ∈ Z}` of a holomorphic `f : Z ⊆ ℂ^m → ℂ`.
///
/// The domain is a region in ℝ^{2m} ordered `(x_1..x_m, y_1..y_m)`.
#[derive(Clone)]
pub struct HolomorphicGraphManifold {
    name: String,
    map: Arc<dyn HolomorphicMap>,
    domain: Region,
    exact_poly: Option<ComplexPoly>,
}

impl fmt::Debug for HolomorphicGraphManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolomorphicGraphManifold")
            .field("name", &self.name)
            .field("m", &self.m())
            .field("domain", &self.domain)
            .field("polynomial", &self.exact_poly.is_some())
            .finish()
    }
}

impl HolomorphicGraphManifold {
    pub fn from_map(
        name: impl Into<String>,
        map: Arc<dyn HolomorphicMap>,
        domain: Region,
    ) -> Result<Self> {
        if domain.dim() != 2 * map.m() {
            return Err(Error::InvalidParameter(format!(
                "domain has real dimension {}, expected 2m = {}",
                domain.dim(),
                2 * map.m()
            )));
        }
        Ok(HolomorphicGraphManifold {
            name: name.into(),
            map,
            domain,
            exact_poly: None,
        })
    }

    pub fn from_poly(name: impl Into<String>, poly: ComplexPoly, domain: Region) -> Result<Self> {
        let map = Arc::new(ComplexPolyMap { poly: poly.clone() });
        let mut h = Self::from_map(name, map, domain)?;
        h.exact_poly = Some(poly);
        Ok(h)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> usize {
        self.map.m()
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn exact_poly(&self) -> Option<&ComplexPoly> {
        self.exact_poly.as_ref()
    }

    pub fn map(&self) -> &Arc<dyn HolomorphicMap> {
        &self.map
    }

    pub fn with_domain(&self, domain: Region) -> Result<Self> {
        if domain.dim() != 2 * self.m() {
            return Err(Error::InvalidParameter(format!(
                "domain has real dimension {}, expected {}",
                domain.dim(),
                2 * self.m()
            )));
        }
        let mut h = self.clone();
        h.domain = domain;
        Ok(h)
    }

    pub fn value(&self, z: &[Complex64]) -> Result<Complex64> {
        self.map.value(z)
    }

    pub fn jet(&self, z: &[Complex64]) -> Result<ComplexJet> {
        self.map.jet(z)
    }

    /// Whether `z` lies in the domain.
    pub fn contains(&self, z: &[Complex64]) -> bool {
        self.domain.contains(&to_real(z))
    }
}

/// Splits `(x_1..x_m, y_1..y_m)` into `z_k = x_k + i y_k`.
pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    let m = x.len() / 2;
    (0..m).map(|k| Complex64::new(x[k], x[m + k])).collect()
}

/// Inverse of [`to_complex`].
pub fn to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter()
        .map(|c| c.re)
        .chain(z.iter().map(|c| c.im))
        .collect()
}

/// Either kind of manifold, as produced by [`builtin`].
#[derive(Debug, Clone)]
pub enum Manifold {
    Real(RealGraphManifold),
    Holomorphic(HolomorphicGraphManifold),
}

impl Manifold {
    pub fn name(&self) -> &str {
        match self {
            Manifold::Real(m) => m.name(),
            Manifold::Holomorphic(h) => h.name(),
        }
    }

    pub fn as_real(&self) -> Option<&RealGraphManifold> {
        match self {
            Manifold::Real(m) => Some(m),
            Manifold::Holomorphic(_) => None,
        }
    }

    pub fn as_holomorphic(&self) -> Option<&HolomorphicGraphManifold> {
        match self {
            Manifold::Holomorphic(h) => Some(h),
            Manifold::Real(_) => None,
        }
    }
}

/// Parameters accepted by [`builtin`]. `dim` is `n` for real builtins and `m`
/// for holomorphic ones; `radius` applies to the spheres.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuiltinParams {
    pub dim: Option<usize>,
    pub radius: Option<f64>,
}

pub const DEFAULT_SPHERE_RADIUS: f64 = 0.3;

pub const BUILTIN_NAMES: [&str; 4] = [
    "real-parabola",
    "real-sphere",
    "complex-parabola",
    "complex-sphere",
];

/// Closed-form manifolds:
///
/// | name | map | domain |
/// |---|---|---|
/// | `real-parabola` | `|x|²` | `(0,1)ⁿ`, default `n = 1` |
/// | `real-sphere` | `(1-|x|²)^{1/2}` | `|x| < r`, default `n = 2` |
/// | `complex-parabola` | `z·z` | `(-1,1)^{2m}`, default `m = 1` |
/// | `complex-sphere` | `(1-z·z)^{1/2}` | `|z| < r`, default `m = 1` |
///
/// Sphere radii default to 0.3 and must lie in `(0, 1)`.
pub fn builtin(name: &str, params: BuiltinParams) -> Result<Manifold> {
    let dim = params.dim.unwrap_or(match name {
        "real-sphere" => 2,
        _ => 1,
    });
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    let sphere_radius = || -> Result<f64> {
        let r = params.radius.unwrap_or(DEFAULT_SPHERE_RADIUS);
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius r = {r} must lie in (0, 1)"
            )));
        }
        Ok(r)
    };
    match name {
        "real-parabola" => {
            let terms: Vec<(Vec<u32>, i64)> = (0..dim)
                .map(|i| {
                    let mut e = vec![0u32; dim];
                    e[i] = 2;
                    (e, 1)
                })
                .collect();
            let refs: Vec<(&[u32], i64)> = terms.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
            let p = RealPoly::from_ints(dim, &refs)?;
            let domain = Region::open_box(vec![0.5; dim], 0.5)?;
            Ok(Manifold::Real(RealGraphManifold::from_polys(
                name,
                vec![p],
                domain,
            )?))
        }
        "real-sphere" => {
            let r = sphere_radius()?;
            let domain = Region::open_ball(vec![0.0; dim], r)?;
            let m = RealGraphManifold::from_map(name, Arc::new(RealSphereMap { n: dim }), domain)?;
            Ok(Manifold::Real(m))
        }
        "complex-parabola" => {
            let terms: Vec<(Vec<u32>, (i64, i64))> = (0..dim)
                .map(|i| {
                    let mut e = vec![0u32; dim];
                    e[i] = 2;
                    (e, (1, 0))
                })
                .collect();
            let refs: Vec<(&[u32], (i64, i64))> =
                terms.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
            let p = ComplexPoly::from_gaussian(dim, &refs)?;
            let domain = Region::open_box(vec![0.0; 2 * dim], 1.0)?;
            Ok(Manifold::Holomorphic(HolomorphicGraphManifold::from_poly(
                name, p, domain,
            )?))
        }
        "complex-sphere" => {
            let r = sphere_radius()?;
            let domain = Region::open_ball(vec![0.0; 2 * dim], r)?;
            let h = HolomorphicGraphManifold::from_map(
                name,
                Arc::new(ComplexSphereMap { m: dim }),
                domain,
            )?;
            Ok(Manifold::Holomorphic(h))
        }
        other => Err(Error::UnknownManifold(other.to_string())),
    }
}

/// Real builtin by name; errors if the name denotes a holomorphic builtin.
pub fn builtin_real(name: &str, params: BuiltinParams) -> Result<RealGraphManifold> {
    match builtin(name, params)? {
        Manifold::Real(m) => Ok(m),
        Manifold::Holomorphic(_) => {
            Err(Error::InvalidParameter(format!("`{name}` is holomorphic")))
        }
    }
}

/// Holomorphic builtin by name; errors if the name denotes a real builtin.
pub fn builtin_holomorphic(name: &str, params: BuiltinParams) -> Result<HolomorphicGraphManifold> {
    match builtin(name, params)? {
        Manifold::Holomorphic(h) => Ok(h),
        Manifold::Real(_) => Err(Error::InvalidParameter(format!("`{name}` is real"))),
    }
}

/// Realification `x + iy ↦ (u(x,y), v(x,y))` of a holomorphic graph, a real
/// graph with `n = 2m` and `R = 2`.
///
/// Only holomorphic graphs can be realified:
///
/// ```compile_fail
/// use rpnm_core::geometry::{builtin_holomorphic, realify, BuiltinParams};
/// let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
/// let twice = realify(&realify(&h));
/// ```
pub fn realify(h: &HolomorphicGraphManifold) -> RealGraphManifold {
    let name = format!("realify({})", h.name());
    let domain = h.domain().clone();
    if let Some(p) = h.exact_poly() {
        let (u, v) = p.realify();
        if let Ok(m) = RealGraphManifold::from_polys(name.clone(), vec![u, v], domain.clone()) {
            return m;
        }
    }
    RealGraphManifold {
        name,
        map: Arc::new(RealifiedMap {
            inner: h.map().clone(),
        }),
        domain,
        exact_poly: None,
    }
}

#[derive(Debug)]
struct PolyMap {
    polys: Vec<RealPoly>,
}

impl RealGraphMap for PolyMap {
    fn n(&self) -> usize {
        self.polys[0].nvars()
    }

    fn codim(&self) -> usize {
        self.polys.len()
    }

    fn value(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, p) in out.iter_mut().zip(&self.polys) {
            *o = p.value(x);
        }
        Ok(())
    }

    fn jet(&self, x: &[f64]) -> Result<RealJet> {
        let n = self.n();
        let r = self.codim();
        let mut value = Vec::with_capacity(r);
        let mut grad = DMatrix::zeros(r, n);
        let mut hess = Vec::with_capacity(r);
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        for (l, p) in self.polys.iter().enumerate() {
            value.push(p.jet(x, &mut g, &mut h));
            for i in 0..n {
                grad[(l, i)] = g[i];
            }
            hess.push(DMatrix::from_row_slice(n, n, &h));
        }
        Ok(RealJet { value, grad, hess })
    }
}

#[derive(Debug)]
struct ComplexPolyMap {
    poly: ComplexPoly,
}

impl HolomorphicMap for ComplexPolyMap {
    fn m(&self) -> usize {
        self.poly.nvars()
    }

    fn value(&self, z: &[Complex64]) -> Result<Complex64> {
        Ok(self.poly.value(z))
    }

    fn jet(&self, z: &[Complex64]) -> Result<ComplexJet> {
        let m = self.m();
        let mut g = vec![Complex64::new(0.0, 0.0); m];
        let mut h = vec![Complex64::new(0.0, 0.0); m * m];
        let value = self.poly.jet(z, &mut g, &mut h);
        Ok(ComplexJet {
            value,
            grad: DVector::from_vec(g),
            hess: DMatrix::from_row_slice(m, m, &h),
        })
    }
}

/// `f(x) = (1 - |x|²)^{1/2}`.
#[derive(Debug)]
pub(crate) struct RealSphereMap {
    pub(crate) n: usize,
}

impl RealSphereMap {
    fn root(&self, x: &[f64]) -> Result<f64> {
        let s = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Evaluation {
                point: x.to_vec(),
                reason: "outside the unit ball".into(),
            });
        }
        Ok(s.sqrt())
    }
}

impl RealGraphMap for RealSphereMap {
    fn n(&self) -> usize {
        self.n
    }

    fn codim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.root(x)?;
        Ok(())
    }

    fn jet(&self, x: &[f64]) -> Result<RealJet> {
        let f = self.root(x)?;
        let n = self.n;
        let grad = DMatrix::from_fn(1, n, |_, i| -x[i] / f);
        let f3 = f * f * f;
        let hess = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 / f } else { 0.0 };
            -d - x[i] * x[j] / f3
        });
        Ok(RealJet {
            value: vec![f],
            grad,
            hess: vec![hess],
        })
    }
}

/// `f(z) = (1 - z·z)^{1/2}`, principal branch.
#[derive(Debug)]
pub(crate) struct ComplexSphereMap {
    pub(crate) m: usize,
}

impl ComplexSphereMap {
    fn root(&self, z: &[Complex64]) -> Result<Complex64> {
        let s = Complex64::new(1.0, 0.0) - z.iter().map(|v| v * v).sum::<Complex64>();
        if !(s.re > 0.0) || !s.is_finite() {
            return Err(Error::Evaluation {
                point: to_real(z),
                reason: "1 - z·z leaves the right half-plane (branch cut guard)".into(),
            });
        }
        Ok(s.sqrt())
    }
}

impl HolomorphicMap for ComplexSphereMap {
    fn m(&self) -> usize {
        self.m
    }

    fn value(&self, z: &[Complex64]) -> Result<Complex64> {
        self.root(z)
    }

    fn jet(&self, z: &[Complex64]) -> Result<ComplexJet> {
        let f = self.root(z)?;
        let m = self.m;
        let grad = DVector::from_fn(m, |j, _| -z[j] / f);
        let f3 = f * f * f;
        let hess = DMatrix::from_fn(m, m, |j, k| {
            let d = if j == k {
                Complex64::new(1.0, 0.0) / f
            } else {
                Complex64::new(0.0, 0.0)
            };
            -d - z[j] * z[k] / f3
        });
        Ok(ComplexJet {
            value: f,
            grad,
            hess,
        })
    }
}

/// `(u, v)` of a holomorphic map, with derivatives assembled through the
/// Cauchy–Riemann relations.
#[derive(Debug)]
struct RealifiedMap {
    inner: Arc<dyn HolomorphicMap>,
}

impl RealGraphMap for RealifiedMap {
    fn n(&self) -> usize {
        2 * self.inner.m()
    }

    fn codim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let w = self.inner.value(&to_complex(x))?;
        out[0] = w.re;
        out[1] = w.im;
        Ok(())
    }

    fn jet(&self, x: &[f64]) -> Result<RealJet> {
        let m = self.inner.m();
        let j = self.inner.jet(&to_complex(x))?;
        Ok(realify_jet(&j, m))
    }
}

pub(crate) fn realify_jet(j: &ComplexJet, m: usize) -> RealJet {
    let n = 2 * m;
    let mut grad = DMatrix::zeros(2, n);
    for k in 0..m {
        let p = j.grad[k].re;
        let q = j.grad[k].im;
        grad[(0, k)] = p;
        grad[(0, m + k)] = -q;
        grad[(1, k)] = q;
        grad[(1, m + k)] = p;
    }
    let mut hu = DMatrix::zeros(n, n);
    let mut hv = DMatrix::zeros(n, n);
    for a in 0..m {
        for b in 0..m {
            let aa = j.hess[(a, b)].re;
            let bb = j.hess[(a, b)].im;
            hu[(a, b)] = aa;
            hu[(a, m + b)] = -bb;
            hu[(m + a, b)] = -bb;
            hu[(m + a, m + b)] = -aa;
            hv[(a, b)] = bb;
            hv[(a, m + b)] = aa;
            hv[(m + a, b)] = aa;
            hv[(m + a, m + b)] = -bb;
        }
    }
    RealJet {
        value: vec![j.value.re, j.value.im],
        grad,
        hess: vec![hu, hv],
    }
}

/// Largest deviation from `u_x = v_y`, `u_y = -v_x` of the central-difference
/// real Jacobian of `(u, v)` at `z`.
pub fn cauchy_riemann_residual(
    h: &HolomorphicGraphManifold,
    z: &[Complex64],
    step: f64,
) -> Result<f64> {
    let m = h.m();
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let shifted = |dx: f64, dy: f64| -> Result<Complex64> {
            let mut w = z.to_vec();
            w[k] += Complex64::new(dx, dy);
            h.value(&w)
        };
        let fx = (shifted(step, 0.0)? - shifted(-step, 0.0)?) / (2.0 * step);
        let fy = (shifted(0.0, step)? - shifted(0.0, -step)?) / (2.0 * step);
        // u_x - v_y and u_y + v_x
        worst = worst.max((fx.re - fy.im).abs()).max((fy.re + fx.im).abs());
    }
    Ok(worst)
}

/// Largest relative deviation between the closed-form gradient/Hessian and
/// central finite differences of the value map.
pub fn finite_difference_residual(m: &RealGraphManifold, x: &[f64], step: f64) -> Result<f64> {
    let n = m.n();
    let r = m.codim();
    let jet = m.jet(x)?;
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let jp = m.jet(&xp)?;
        let jm = m.jet(&xm)?;
        for l in 0..r {
            let g = (jp.value[l] - jm.value[l]) / (2.0 * step);
            worst = worst.max(rel(g, jet.grad[(l, i)]));
            for k in 0..n {
                let h = (jp.grad[(l, k)] - jm.grad[(l, k)]) / (2.0 * step);
                worst = worst.max(rel(h, jet.hess[l][(i, k)]));
            }
        }
    }
    Ok(worst)
}
