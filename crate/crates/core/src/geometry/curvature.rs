//! Curvature-condition verifiers: sampled defects of `det Σ θ_ℓ f_ℓ''` and
//! `det f''`, and the realification identity relating the two.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::manifold::{realify_jet, to_complex, HolomorphicGraphManifold, RealGraphManifold};
use super::region::Region;
use crate::error::{Error, Result};

/// Reported as satisfying the condition when the defect exceeds this.
pub const CC_TOLERANCE: f64 = 1e-8;

const MAX_SPACE_POINTS: usize = 100_000;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Outcome of a curvature search.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub defect: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_theta: Vec<f64>,
    pub holds: bool,
}

/// Directions on the unit sphere `𝕊^{R-1}` used for the coarse search.
pub fn theta_samples(r: usize, count: usize) -> Vec<Vec<f64>> {
    match r {
        0 => vec![],
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden_angle = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden_angle * k as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
            let radical_inverse = |mut i: u64, b: u64| {
                let mut f = 1.0 / b as f64;
                let mut x = 0.0;
                while i > 0 {
                    x += f * (i % b) as f64;
                    i /= b;
                    f /= b as f64;
                }
                x
            };
            (1..=count as u64)
                .map(|k| {
                    // Box–Muller on Halton coordinates, then normalize
                    let mut v: Vec<f64> = (0..r)
                        .map(|d| {
                            let u1 = radical_inverse(k, PRIMES[(2 * d) % 16]).max(1e-12);
                            let u2 = radical_inverse(k, PRIMES[(2 * d + 1) % 16]);
                            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                        })
                        .collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                    v.iter_mut().for_each(|x| *x /= norm);
                    v
                })
                .collect()
        }
    }
}

fn per_axis(requested: usize, dim: usize) -> usize {
    let mut g = requested.max(1);
    while g > 2 && (g as f64).powi(dim as i32) > MAX_SPACE_POINTS as f64 {
        g -= 1;
    }
    g
}

fn abs_det(m: DMatrix<f64>) -> f64 {
    m.determinant().abs()
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Points on a `k^d` grid of half-width `h` around `x`, kept inside `domain`.
fn local_grid(domain: &Region, x: &[f64], h: f64, k: usize) -> Vec<Vec<f64>> {
    let local = Region {
        center: x.to_vec(),
        radius: h,
        shape: super::region::Shape::Box,
        strict: false,
    };
    let mut pts = local.grid(k);
    pts.push(x.to_vec());
    pts.retain(|p| domain.contains(p));
    pts
}

/// `min |det Σ θ_ℓ f_ℓ''(x)|` over a sampled domain grid and direction set,
/// followed by one round of local refinement around the coarse minimizer.
pub fn cc_defect(
    m: &RealGraphManifold,
    space_grid: usize,
    theta_grid: usize,
) -> Result<CurvatureReport> {
    if space_grid < 8 || theta_grid < 8 {
        return Err(Error::InvalidParameter(
            "grids must have at least 8 points".into(),
        ));
    }
    let n = m.n();
    let r = m.codim();
    let domain = m.domain();
    let g = per_axis(space_grid, n);
    let xs = domain.grid(g);
    if xs.is_empty() {
        return Err(Error::Degenerate("domain grid is empty".into()));
    }
    let thetas = theta_samples(r, theta_grid);

    let mut best = (f64::INFINITY, 0usize, 0usize);
    let mut jets = Vec::with_capacity(xs.len());
    for (ix, x) in xs.iter().enumerate() {
        let jet = m.jet(x)?;
        for (it, th) in thetas.iter().enumerate() {
            let d = abs_det(jet.hess_theta(th));
            if d < best.0 {
                best = (d, ix, it);
            }
        }
        jets.push(jet);
    }
    let mut x_best = xs[best.1].clone();
    let mut th_best = thetas[best.2].clone();
    let mut d_best = best.0;

    let eval = |x: &[f64], th: &[f64]| -> Result<f64> { Ok(abs_det(m.jet(x)?.hess_theta(th))) };

    let refine_theta = |x: &[f64], th: &[f64], d0: f64| -> Result<(Vec<f64>, f64)> {
        let jet = m.jet(x)?;
        match r {
            1 => Ok((th.to_vec(), d0)),
            2 => {
                let phi0 = th[1].atan2(th[0]);
                let step = 2.0 * PI / theta_grid as f64;
                let (phi, d) = golden_min(phi0 - step, phi0 + step, 80, |p| {
                    abs_det(jet.hess_theta(&[p.cos(), p.sin()]))
                });
                if d < d0 {
                    Ok((vec![phi.cos(), phi.sin()], d))
                } else {
                    Ok((th.to_vec(), d0))
                }
            }
            _ => {
                // coordinate-wise golden search in the tangent plane, renormalizing
                let mut cur = th.to_vec();
                let mut dcur = d0;
                let spread = (4.0 * PI / theta_grid as f64).min(1.0);
                for _round in 0..3 {
                    for axis in 0..r {
                        let base = cur.clone();
                        let probe = |t: f64| {
                            let mut v = base.clone();
                            v[axis] += t;
                            let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                            v.iter_mut().for_each(|a| *a /= nrm);
                            v
                        };
                        let (t, d) =
                            golden_min(-spread, spread, 60, |t| abs_det(jet.hess_theta(&probe(t))));
                        if d < dcur {
                            cur = probe(t);
                            dcur = d;
                        }
                    }
                }
                Ok((cur, dcur))
            }
        }
    };

    let (t1, d1) = refine_theta(&x_best, &th_best, d_best)?;
    th_best = t1;
    d_best = d1;

    let mut h = domain.radius / g as f64;
    for _ in 0..3 {
        for p in local_grid(domain, &x_best, h, 5) {
            let d = eval(&p, &th_best)?;
            if d < d_best {
                d_best = d;
                x_best = p;
            }
        }
        h *= 0.5;
    }

    let (t2, d2) = refine_theta(&x_best, &th_best, d_best)?;
    th_best = t2;
    d_best = d2;

    Ok(CurvatureReport {
        defect: d_best,
        holds: d_best > CC_TOLERANCE,
        argmin_x: x_best,
        argmin_theta: th_best,
    })
}

/// `min |det f''(z)|` over a sampled grid of the domain, refined locally.
pub fn complex_cc_defect(h: &HolomorphicGraphManifold, grid: usize) -> Result<CurvatureReport> {
    if grid < 8 {
        return Err(Error::InvalidParameter(
            "grid must have at least 8 points".into(),
        ));
    }
    let domain = h.domain();
    let g = per_axis(grid, domain.dim());
    let xs = domain.grid(g);
    if xs.is_empty() {
        return Err(Error::Degenerate("domain grid is empty".into()));
    }
    let eval = |x: &[f64]| -> Result<f64> { Ok(h.jet(&to_complex(x))?.hess.determinant().norm()) };
    let mut best = (f64::INFINITY, xs[0].clone());
    for x in &xs {
        let d = eval(x)?;
        if d < best.0 {
            best = (d, x.clone());
        }
    }
    let mut step = domain.radius / g as f64;
    for _ in 0..4 {
        for p in local_grid(domain, &best.1.clone(), step, 9) {
            let d = eval(&p)?;
            if d < best.0 {
                best = (d, p);
            }
        }
        step *= 0.25;
    }
    Ok(CurvatureReport {
        defect: best.0,
        holds: best.0 > CC_TOLERANCE,
        argmin_x: best.1,
        argmin_theta: vec![],
    })
}

/// `|det(θ₁u'' + θ₂v'') - (-1)^m (θ₁² + θ₂²)^m |det f''(z)|²|`.
pub fn nd_vs_cnd_residual(
    h: &HolomorphicGraphManifold,
    z: &[Complex64],
    theta: [f64; 2],
) -> Result<f64> {
    let (lhs, rhs) = nd_vs_cnd_sides(h, z, theta)?;
    Ok((lhs - rhs).abs())
}

/// Both sides of the realification determinant identity.
pub fn nd_vs_cnd_sides(
    h: &HolomorphicGraphManifold,
    z: &[Complex64],
    theta: [f64; 2],
) -> Result<(f64, f64)> {
    let m = h.m();
    if z.len() != m {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, expected {m}",
            z.len()
        )));
    }
    let cj = h.jet(z)?;
    let rj = realify_jet(&cj, m);
    let lhs = rj.hess_theta(&theta).determinant();
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let rhs = sign
        * (theta[0] * theta[0] + theta[1] * theta[1]).powi(m as i32)
        * cj.hess.determinant().norm_sqr();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::manifold::{builtin_holomorphic, BuiltinParams};
    use crate::geometry::poly::{ComplexPoly, RealPoly};
    use crate::geometry::realify;

    #[test]
    fn affine_graph_has_zero_defect() {
        let p = RealPoly::from_ints(2, &[(&[1, 0], 3), (&[0, 1], -2)]).unwrap();
        let m = RealGraphManifold::from_polys(
            "affine",
            vec![p],
            Region::open_box(vec![0.0, 0.0], 1.0).unwrap(),
        )
        .unwrap();
        let rep = cc_defect(&m, 8, 8).unwrap();
        assert_eq!(rep.defect, 0.0);
        assert!(!rep.holds);
    }

    #[test]
    fn realified_parabola_defect_is_four() {
        let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        let rep = cc_defect(&realify(&h), 8, 16).unwrap();
        assert!((rep.defect - 4.0).abs() < 1e-9);
        assert!(rep.holds);
    }

    #[test]
    fn twisted_cubic_fails_in_odd_dimension() {
        let f1 = RealPoly::from_ints(1, &[(&[2], 1)]).unwrap();
        let f2 = RealPoly::from_ints(1, &[(&[3], 1)]).unwrap();
        let m = RealGraphManifold::from_polys(
            "cubic",
            vec![f1, f2],
            Region::open_box(vec![0.5], 0.4).unwrap(),
        )
        .unwrap();
        let rep = cc_defect(&m, 8, 8).unwrap();
        assert!(rep.defect < 1e-6, "defect {}", rep.defect);
    }

    #[test]
    fn complex_defects() {
        let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        assert!((complex_cc_defect(&h, 8).unwrap().defect - 2.0).abs() < 1e-12);

        let s = builtin_holomorphic("complex-sphere", BuiltinParams::default()).unwrap();
        let d = complex_cc_defect(&s, 16).unwrap().defect;
        let expect = 1.09f64.powf(-1.5);
        assert!((d - expect).abs() < 1e-2, "{d} vs {expect}");

        let affine = ComplexPoly::from_gaussian(1, &[(&[1], (2, 1))]).unwrap();
        let a = HolomorphicGraphManifold::from_poly(
            "affine",
            affine,
            Region::open_box(vec![0.0, 0.0], 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(complex_cc_defect(&a, 8).unwrap().defect, 0.0);
    }

    #[test]
    fn identity_example_and_zero_direction() {
        let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        let z = [Complex64::new(0.1, 0.2)];
        let (lhs, rhs) = nd_vs_cnd_sides(&h, &z, [3.0, 4.0]).unwrap();
        // direct determinant of [[6, 8], [8, -6]]
        let direct = DMatrix::from_row_slice(2, 2, &[6.0, 8.0, 8.0, -6.0]).determinant();
        assert!((lhs - direct).abs() < 1e-12);
        assert!((rhs + 100.0).abs() < 1e-12);
        assert_eq!(nd_vs_cnd_residual(&h, &z, [0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn theta_samples_are_unit() {
        for r in 1..6 {
            for t in theta_samples(r, 32) {
                let n: f64 = t.iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }
}
