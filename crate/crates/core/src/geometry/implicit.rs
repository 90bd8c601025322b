//! Implicitly defined surfaces `{Φ = 0}` and their bordered-Hessian tests.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::manifold::{
    builtin_holomorphic, builtin_real, realify, BuiltinParams, RealGraphManifold,
};
use crate::error::{Error, Result};

/// Tolerance on `|Φ(u)|∞` for a point to count as on the surface.
pub const ON_SURFACE_TOL: f64 = 1e-10;

/// `Φ(u)`, its Jacobian (`R×d`) and the `R` Hessians (`d×d`).
#[derive(Debug, Clone)]
pub struct ImplicitJet {
    pub value: Vec<f64>,
    pub jac: DMatrix<f64>,
    pub hess: Vec<DMatrix<f64>>,
}

pub trait ImplicitMap: Send + Sync + fmt::Debug {
    fn ambient(&self) -> usize;
    fn codim(&self) -> usize;
    fn jet(&self, u: &[f64]) -> Result<ImplicitJet>;
}

/// `{u ∈ ℝ^d : Φ(u) = 0}` of codimension `R`. When a graph is attached, the
/// first `d - R` coordinates are `x` and the last `R` are `y = f(x)`.
#[derive(Clone)]
pub struct ImplicitSurface {
    name: String,
    map: Arc<dyn ImplicitMap>,
    graph: Option<RealGraphManifold>,
}

impl fmt::Debug for ImplicitSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitSurface")
            .field("name", &self.name)
            .field("ambient", &self.map.ambient())
            .field("codim", &self.map.codim())
            .field("graph", &self.graph.as_ref().map(|g| g.name().to_string()))
            .finish()
    }
}

impl ImplicitSurface {
    pub fn new(name: impl Into<String>, map: Arc<dyn ImplicitMap>) -> Self {
        ImplicitSurface {
            name: name.into(),
            map,
            graph: None,
        }
    }

    /// Attaches the graph that parametrizes the surface.
    pub fn with_graph(mut self, graph: RealGraphManifold) -> Result<Self> {
        if graph.n() + graph.codim() != self.ambient() || graph.codim() != self.codim() {
            return Err(Error::InvalidParameter(
                "graph dimensions do not match the surface".into(),
            ));
        }
        self.graph = Some(graph);
        Ok(self)
    }

    /// `Φ(x, y) = y - f(x)`.
    pub fn from_graph(graph: RealGraphManifold) -> Self {
        let map = Arc::new(GraphResidual {
            graph: graph.clone(),
        });
        ImplicitSurface {
            name: format!("implicit({})", graph.name()),
            map,
            graph: Some(graph),
        }
    }

    /// `Φ(x, y) = y - x²`, paired with `real-parabola`.
    pub fn parabola() -> Self {
        let g = builtin_real("real-parabola", BuiltinParams::default()).expect("builtin");
        ImplicitSurface::new("parabola", Arc::new(ParabolaPhi))
            .with_graph(g)
            .expect("dimensions match")
    }

    /// `Φ(x, y) = |x|² + y² - 1`, paired with `real-sphere` on `|x| < r`.
    pub fn real_sphere(n: usize, r: f64) -> Result<Self> {
        let g = builtin_real(
            "real-sphere",
            BuiltinParams {
                dim: Some(n),
                radius: Some(r),
            },
        )?;
        ImplicitSurface::new("real-sphere", Arc::new(SpherePhi { d: n + 1 })).with_graph(g)
    }

    /// `(ℜΦ, ℑΦ)` for `Φ(ζ) = ζ·ζ - 1` on `ℂ^{m+1}`, in real coordinates
    /// `(x_1..x_m, y_1..y_m, ℜζ_{m+1}, ℑζ_{m+1})`, paired with the
    /// realified `complex-sphere`.
    pub fn complex_sphere_pair(m: usize, r: f64) -> Result<Self> {
        let h = builtin_holomorphic(
            "complex-sphere",
            BuiltinParams {
                dim: Some(m),
                radius: Some(r),
            },
        )?;
        ImplicitSurface::new("complex-sphere-pair", Arc::new(ComplexSpherePairPhi { m }))
            .with_graph(realify(&h))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient(&self) -> usize {
        self.map.ambient()
    }

    pub fn codim(&self) -> usize {
        self.map.codim()
    }

    pub fn graph(&self) -> Option<&RealGraphManifold> {
        self.graph.as_ref()
    }

    pub fn jet(&self, u: &[f64]) -> Result<ImplicitJet> {
        self.map.jet(u)
    }

    /// `(x, f(x))` on the attached graph.
    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("surface has no graph split".into()))?;
        let mut y = vec![0.0; g.codim()];
        g.value(x, &mut y)?;
        Ok(x.iter().copied().chain(y).collect())
    }

    /// Jet at `u`, checking `|Φ(u)|∞ ≤ 1e-10`.
    fn jet_on_surface(&self, u: &[f64]) -> Result<ImplicitJet> {
        if u.len() != self.ambient() {
            return Err(Error::InvalidParameter(format!(
                "point has {} coordinates, ambient dimension is {}",
                u.len(),
                self.ambient()
            )));
        }
        let j = self.jet(u)?;
        let residual = j.value.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(residual <= ON_SURFACE_TOL) {
            return Err(Error::NotOnSurface { residual });
        }
        Ok(j)
    }
}

fn bordered(j: &ImplicitJet, s: &[f64]) -> DMatrix<f64> {
    let d = j.jac.ncols();
    let r = j.jac.nrows();
    let mut b = DMatrix::zeros(d + r, d + r);
    for (sl, hl) in s.iter().zip(&j.hess) {
        let mut view = b.view_mut((0, 0), (d, d));
        view += hl * *sl;
    }
    b.view_mut((0, d), (d, r)).copy_from(&j.jac.transpose());
    b.view_mut((d, 0), (r, d)).copy_from(&j.jac);
    b
}

/// Determinant of `[[s·∂²Φ, ∂Φᵀ], [∂Φ, 0]]` at an on-surface point `u`.
pub fn bordered_det_real(surface: &ImplicitSurface, u: &[f64], s: &[f64]) -> Result<f64> {
    if s.len() != surface.codim() {
        return Err(Error::InvalidParameter(format!(
            "s has {} components, expected {}",
            s.len(),
            surface.codim()
        )));
    }
    let j = surface.jet_on_surface(u)?;
    Ok(bordered(&j, s).determinant())
}

/// `| |det ∂_yΦ|²·|det(t·f''(x))| - |bordered_det_real| |` with `t = (∂_yΦ)ᵀ s`,
/// where `f''` comes from the attached graph.
pub fn implicit_cc_residual(surface: &ImplicitSurface, x: &[f64], s: &[f64]) -> Result<f64> {
    let graph = surface
        .graph()
        .ok_or_else(|| Error::InvalidParameter("surface has no graph split".into()))?;
    let u = surface.lift(x)?;
    let j = surface.jet_on_surface(&u)?;
    let n = graph.n();
    let r = graph.codim();
    let jy = j.jac.view((0, n), (r, r)).into_owned();
    let det_y = jy.determinant();
    if !(det_y.abs() > 1e-12) {
        return Err(Error::Singular { det: det_y.abs() });
    }
    let t = jy.tr_mul(&DVector::from_column_slice(s));
    let gjet = graph.jet(x)?;
    let tf = gjet.hess_theta(t.as_slice());
    let lhs = det_y * det_y * tf.determinant().abs();
    let rhs = bordered(&j, s).determinant().abs();
    Ok((lhs - rhs).abs())
}

/// Same identity at an on-surface point `u = (x, y)`, with `t·f''` obtained by
/// implicit differentiation of `Φ(x, f(x)) = 0` instead of from a graph.
pub fn implicit_cc_residual_at(surface: &ImplicitSurface, u: &[f64], s: &[f64]) -> Result<f64> {
    let j = surface.jet_on_surface(u)?;
    let d = surface.ambient();
    let r = surface.codim();
    let n = d - r;
    let jx = j.jac.view((0, 0), (r, n)).into_owned();
    let jy = j.jac.view((0, n), (r, r)).into_owned();
    let det_y = jy.determinant();
    let jy_inv = jy
        .try_inverse()
        .filter(|_| det_y.abs() > 1e-12)
        .ok_or(Error::Singular { det: det_y.abs() })?;
    // tangent frame T = [I; f'] with f' = -(∂_yΦ)⁻¹ ∂_xΦ
    let fprime = -(jy_inv * jx);
    let mut frame = DMatrix::zeros(d, n);
    frame.view_mut((0, 0), (n, n)).fill_with_identity();
    frame.view_mut((n, 0), (r, n)).copy_from(&fprime);
    // t·f'' = -Σ s_ℓ Tᵀ ∂²Φ_ℓ T
    let mut tf = DMatrix::zeros(n, n);
    for (sl, hl) in s.iter().zip(&j.hess) {
        tf -= frame.tr_mul(hl) * &frame * *sl;
    }
    let lhs = det_y * det_y * tf.determinant().abs();
    let rhs = bordered(&j, s).determinant().abs();
    Ok((lhs - rhs).abs())
}

/// Complex implicit hypersurface `{Φ = 0}` in `ℂ^d`.
pub trait ComplexImplicitMap: Send + Sync + fmt::Debug {
    fn ambient(&self) -> usize;
    fn value(&self, zeta: &[Complex64]) -> Complex64;
    fn grad(&self, zeta: &[Complex64]) -> DVector<Complex64>;
    fn hess(&self, zeta: &[Complex64]) -> DMatrix<Complex64>;
}

/// `Φ(ζ) = ζ·ζ - 1` on `ℂ^{m+1}`.
#[derive(Debug, Clone, Copy)]
pub struct ComplexSpherePhi {
    pub m: usize,
}

impl ComplexImplicitMap for ComplexSpherePhi {
    fn ambient(&self) -> usize {
        self.m + 1
    }

    fn value(&self, zeta: &[Complex64]) -> Complex64 {
        zeta.iter().map(|z| z * z).sum::<Complex64>() - 1.0
    }

    fn grad(&self, zeta: &[Complex64]) -> DVector<Complex64> {
        DVector::from_iterator(zeta.len(), zeta.iter().map(|z| z * 2.0))
    }

    fn hess(&self, zeta: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::identity(zeta.len(), zeta.len()) * Complex64::new(2.0, 0.0)
    }
}

fn check_complex_surface(phi: &dyn ComplexImplicitMap, zeta: &[Complex64]) -> Result<()> {
    if zeta.len() != phi.ambient() {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, expected {}",
            zeta.len(),
            phi.ambient()
        )));
    }
    let residual = phi.value(zeta).norm();
    if !(residual <= ON_SURFACE_TOL) {
        return Err(Error::NotOnSurface { residual });
    }
    Ok(())
}

/// Determinant of `[[∂²Φ, ∂Φᵀ], [∂Φ, 0]]` over ℂ at an on-surface `ζ`.
pub fn bordered_det_complex(phi: &dyn ComplexImplicitMap, zeta: &[Complex64]) -> Result<Complex64> {
    check_complex_surface(phi, zeta)?;
    let d = zeta.len();
    let g = phi.grad(zeta);
    let mut b = DMatrix::zeros(d + 1, d + 1);
    b.view_mut((0, 0), (d, d)).copy_from(&phi.hess(zeta));
    for k in 0..d {
        b[(k, d)] = g[k];
        b[(d, k)] = g[k];
    }
    Ok(b.determinant())
}

/// `det[[I, ζᵀ], [ζ, 0]]` for the complex sphere, which equals `-ζ·ζ = -1` on
/// the surface. The raw bordered determinant is `2^{m+2}` times this value.
pub fn sphere_normalized_bordered_det(m: usize, zeta: &[Complex64]) -> Result<Complex64> {
    let phi = ComplexSpherePhi { m };
    check_complex_surface(&phi, zeta)?;
    let d = zeta.len();
    let mut b = DMatrix::<Complex64>::identity(d + 1, d + 1);
    b[(d, d)] = Complex64::new(0.0, 0.0);
    for k in 0..d {
        b[(k, d)] = zeta[k];
        b[(d, k)] = zeta[k];
    }
    Ok(b.determinant())
}

#[derive(Debug)]
struct ParabolaPhi;

impl ImplicitMap for ParabolaPhi {
    fn ambient(&self) -> usize {
        2
    }

    fn codim(&self) -> usize {
        1
    }

    fn jet(&self, u: &[f64]) -> Result<ImplicitJet> {
        let (x, y) = (u[0], u[1]);
        Ok(ImplicitJet {
            value: vec![y - x * x],
            jac: DMatrix::from_row_slice(1, 2, &[-2.0 * x, 1.0]),
            hess: vec![DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 0.0])],
        })
    }
}

#[derive(Debug)]
struct SpherePhi {
    d: usize,
}

impl ImplicitMap for SpherePhi {
    fn ambient(&self) -> usize {
        self.d
    }

    fn codim(&self) -> usize {
        1
    }

    fn jet(&self, u: &[f64]) -> Result<ImplicitJet> {
        let v = u.iter().map(|a| a * a).sum::<f64>() - 1.0;
        Ok(ImplicitJet {
            value: vec![v],
            jac: DMatrix::from_fn(1, self.d, |_, i| 2.0 * u[i]),
            hess: vec![DMatrix::identity(self.d, self.d) * 2.0],
        })
    }
}

#[derive(Debug)]
struct ComplexSpherePairPhi {
    m: usize,
}

impl ImplicitMap for ComplexSpherePairPhi {
    fn ambient(&self) -> usize {
        2 * self.m + 2
    }

    fn codim(&self) -> usize {
        2
    }

    fn jet(&self, u: &[f64]) -> Result<ImplicitJet> {
        // coordinates: x_1..x_m, y_1..y_m, p, q with ζ_{m+1} = p + iq
        let m = self.m;
        let d = 2 * m + 2;
        let mut re = -1.0;
        let mut im = 0.0;
        for k in 0..m {
            re += u[k] * u[k] - u[m + k] * u[m + k];
            im += 2.0 * u[k] * u[m + k];
        }
        let (p, q) = (u[2 * m], u[2 * m + 1]);
        re += p * p - q * q;
        im += 2.0 * p * q;
        let mut jac = DMatrix::zeros(2, d);
        let mut hr = DMatrix::zeros(d, d);
        let mut hi = DMatrix::zeros(d, d);
        let pairs: Vec<(usize, usize)> = (0..m)
            .map(|k| (k, m + k))
            .chain([(2 * m, 2 * m + 1)])
            .collect();
        for (a, b) in pairs {
            jac[(0, a)] = 2.0 * u[a];
            jac[(0, b)] = -2.0 * u[b];
            jac[(1, a)] = 2.0 * u[b];
            jac[(1, b)] = 2.0 * u[a];
            hr[(a, a)] = 2.0;
            hr[(b, b)] = -2.0;
            hi[(a, b)] = 2.0;
            hi[(b, a)] = 2.0;
        }
        Ok(ImplicitJet {
            value: vec![re, im],
            jac,
            hess: vec![hr, hi],
        })
    }
}

/// `Φ(x, y) = y - f(x)`.
#[derive(Debug)]
struct GraphResidual {
    graph: RealGraphManifold,
}

impl ImplicitMap for GraphResidual {
    fn ambient(&self) -> usize {
        self.graph.n() + self.graph.codim()
    }

    fn codim(&self) -> usize {
        self.graph.codim()
    }

    fn jet(&self, u: &[f64]) -> Result<ImplicitJet> {
        let n = self.graph.n();
        let r = self.graph.codim();
        let gj = self.graph.jet(&u[..n])?;
        let value = (0..r).map(|l| u[n + l] - gj.value[l]).collect();
        let mut jac = DMatrix::zeros(r, n + r);
        jac.view_mut((0, 0), (r, n)).copy_from(&(-&gj.grad));
        jac.view_mut((0, n), (r, r)).fill_with_identity();
        let hess = gj
            .hess
            .iter()
            .map(|h| {
                let mut full = DMatrix::zeros(n + r, n + r);
                full.view_mut((0, 0), (n, n)).copy_from(&(-h));
                full
            })
            .collect();
        Ok(ImplicitJet { value, jac, hess })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_bordered_examples() {
        let s = ImplicitSurface::parabola();
        let u = [0.5, 0.25];
        // direct expansion of [[-2, 0, -1], [0, 0, 1], [-1, 1, 0]]
        let direct =
            DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, -1.0, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0])
                .determinant();
        let v = bordered_det_real(&s, &u, &[1.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-12 && (v - direct).abs() < 1e-12);
        assert_eq!(bordered_det_real(&s, &u, &[0.0]).unwrap(), 0.0);
        assert!((bordered_det_real(&s, &u, &[2.0]).unwrap() - 2.0 * v).abs() < 1e-12);
        assert!(implicit_cc_residual(&s, &[0.5], &[1.0]).unwrap() < 1e-12);
        assert_eq!(implicit_cc_residual(&s, &[0.5], &[0.0]).unwrap(), 0.0);
        assert!(matches!(
            bordered_det_real(&s, &[0.5, 0.3], &[1.0]),
            Err(Error::NotOnSurface { .. })
        ));
    }

    #[test]
    fn complex_sphere_bordered() {
        let zeta = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let raw = bordered_det_complex(&ComplexSpherePhi { m: 1 }, &zeta).unwrap();
        assert!((raw - Complex64::new(-8.0, 0.0)).norm() < 1e-12);
        let norm = sphere_normalized_bordered_det(1, &zeta).unwrap();
        assert!((norm + 1.0).norm() < 1e-12);
        let off = [Complex64::new(0.0, 0.0), Complex64::new(1.2, 0.0)];
        assert!(matches!(
            sphere_normalized_bordered_det(1, &off),
            Err(Error::NotOnSurface { .. })
        ));
    }

    #[test]
    fn graph_and_implicit_differentiation_agree() {
        let s = ImplicitSurface::complex_sphere_pair(1, 0.3).unwrap();
        let x = [0.1, -0.2];
        let u = s.lift(&x).unwrap();
        let a = implicit_cc_residual(&s, &x, &[0.7, -0.4]).unwrap();
        let b = implicit_cc_residual_at(&s, &u, &[0.7, -0.4]).unwrap();
        assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
        let g = ImplicitSurface::from_graph(s.graph().unwrap().clone());
        assert!(implicit_cc_residual(&g, &x, &[1.0, 0.5]).unwrap() < 1e-9);
    }
}
