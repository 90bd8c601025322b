use num_complex::Complex64;

use super::gaussian::split_big;
use super::{CountQuery, Denominator, Numerators, Witness};
use crate::error::{Error, Result};
use crate::geometry::{
    invert_complex_gradient, invert_gradient, to_complex, to_real, HolomorphicGraphManifold,
    RealGraphManifold,
};
use crate::numtheory::{nearest_int_dist_unchecked, ratio_dist_le_big, ExactRational};

fn shape_error(what: &str) -> Error {
    Error::InvalidParameter(format!("witness does not match the {what} view"))
}

fn within_float(residue: f64, delta: f64, guard: f64) -> bool {
    residue <= delta + guard
}

/// Re-checks a witness from [`count_real`](super::count_real) or
/// [`count_dual_real`](super::count_dual_real) against its membership
/// predicate. Residues are tested exactly when the manifold is polynomial
/// (non-dual witnesses only) and otherwise against `δ + guard`.
pub fn verify_witness_real(m: &RealGraphManifold, w: &Witness, query: &CountQuery) -> Result<bool> {
    let (Numerators::Int(a), Denominator::Int(q)) = (&w.numerators, w.denominator) else {
        return Err(shape_error("real"));
    };
    if a.len() != m.n() || q <= 0 {
        return Err(shape_error("real"));
    }
    let window = query.window.clone().unwrap_or_else(|| m.domain().clone());
    let qf = q as f64;
    let point: Vec<f64> = a.iter().map(|v| *v as f64 / qf).collect();

    if let Some(j) = &w.index {
        let s = j.iter().map(|v| v.abs()).max().unwrap_or(0);
        if s != q || j.len() != m.codim() {
            return Err(shape_error("dual real"));
        }
        let theta: Vec<f64> = j.iter().map(|v| *v as f64 / qf).collect();
        let pre = invert_gradient(m, &theta, &point, &window.center)?;
        if !window.contains(&pre.x) {
            return Ok(false);
        }
        let fstar = -pre.f_theta + pre.x.iter().zip(&point).map(|(x, y)| x * y).sum::<f64>();
        return Ok(within_float(
            nearest_int_dist_unchecked(qf * fstar),
            query.deltas.values()[0],
            query.guard,
        ));
    }

    let ex = window.exact()?;
    let p: Vec<i128> = a.iter().map(|v| *v as i128).collect();
    if !ex.contains_frac(&p, q as i128) {
        return Ok(false);
    }
    if let Some(polys) = m.exact_poly() {
        for (poly, delta) in polys.iter().zip(query.deltas.exact()) {
            let (num, den) = poly.compile().residue_big(a, q);
            if !ratio_dist_le_big(&num, &den, delta) {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let mut vals = vec![0.0; m.codim()];
    m.value(&point, &mut vals)?;
    Ok(vals
        .iter()
        .zip(query.deltas.values())
        .all(|(v, d)| within_float(nearest_int_dist_unchecked(qf * v), *d, query.guard)))
}

/// Gaussian analogue of [`verify_witness_real`], for witnesses of
/// [`count_gaussian`](super::count_gaussian) and
/// [`count_dual_gaussian`](super::count_dual_gaussian).
pub fn verify_witness_gaussian(
    h: &HolomorphicGraphManifold,
    w: &Witness,
    query: &CountQuery,
) -> Result<bool> {
    let (Numerators::Gaussian(a), Denominator::Gaussian(q)) = (&w.numerators, w.denominator) else {
        return Err(shape_error("Gaussian"));
    };
    let m = h.m();
    if a.len() != m || q.is_zero() {
        return Err(shape_error("Gaussian"));
    }
    let window = query.window.clone().unwrap_or_else(|| h.domain().clone());
    let d = query.deltas.values();
    let qc = Complex64::new(q.re as f64, q.im as f64);

    if w.index.is_some() {
        let wv: Vec<Complex64> = a
            .iter()
            .map(|k| (Complex64::new(k.re as f64, k.im as f64) / qc).conj())
            .collect();
        let (z, jet) = invert_complex_gradient(h, &wv, &to_complex(&window.center))?;
        if !window.contains(&to_real(&z)) {
            return Ok(false);
        }
        let fstar = -jet.value + z.iter().zip(&wv).map(|(x, y)| x * y).sum::<Complex64>();
        let t = qc.conj() * fstar;
        return Ok(
            within_float(nearest_int_dist_unchecked(t.re), d[0], query.guard)
                && within_float(nearest_int_dist_unchecked(t.im), d[1], query.guard),
        );
    }

    let norm = (q.re as i128).pow(2) + (q.im as i128).pow(2);
    let mut p = vec![0i128; 2 * m];
    for (k, ak) in a.iter().enumerate() {
        let (ar, ai) = (ak.re as i128, ak.im as i128);
        p[k] = ar * q.re as i128 + ai * q.im as i128;
        p[m + k] = ai * q.re as i128 - ar * q.im as i128;
    }
    if !window.exact()?.contains_frac(&p, norm) {
        return Ok(false);
    }
    if let Some(poly) = h.exact_poly() {
        let (num, den) = poly.compile().residue_big(a, q);
        let (re, im, n) = split_big(&num, &den);
        let de: &[ExactRational] = query.deltas.exact();
        return Ok(ratio_dist_le_big(&re, &n, &de[0]) && ratio_dist_le_big(&im, &n, &de[1]));
    }
    let z: Vec<Complex64> = a
        .iter()
        .map(|k| Complex64::new(k.re as f64, k.im as f64) / qc)
        .collect();
    let t = qc * h.value(&z)?;
    Ok(
        within_float(nearest_int_dist_unchecked(t.re), d[0], query.guard)
            && within_float(nearest_int_dist_unchecked(t.im), d[1], query.guard),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{count_dual_gaussian, count_gaussian, count_real, DeltaVec, Mode};
    use crate::geometry::{builtin_holomorphic, builtin_real, BuiltinParams};
    use crate::numtheory::Gaussian;

    #[test]
    fn emitted_witnesses_verify() {
        let m = builtin_real(
            "real-parabola",
            BuiltinParams {
                dim: Some(2),
                radius: None,
            },
        )
        .unwrap();
        let q = CountQuery::new(9, DeltaVec::new(vec![0.2]).unwrap())
            .mode(Mode::Exact)
            .witnesses(64);
        let r = count_real(&m, &q).unwrap();
        assert!(!r.witnesses.is_empty());
        for w in &r.witnesses {
            assert!(verify_witness_real(&m, w, &q).unwrap());
        }

        let h = builtin_holomorphic("complex-parabola", BuiltinParams::default()).unwrap();
        let q = CountQuery::new(3, DeltaVec::new(vec![0.2, 0.2]).unwrap())
            .mode(Mode::Exact)
            .witnesses(64);
        let r = count_gaussian(&h, &q).unwrap();
        for w in &r.witnesses {
            assert!(verify_witness_gaussian(&h, w, &q).unwrap());
        }

        let q = CountQuery::new(2, DeltaVec::new(vec![0.1, 0.1]).unwrap()).witnesses(64);
        let r = count_dual_gaussian(&h, &q).unwrap();
        assert!(!r.witnesses.is_empty());
        for w in &r.witnesses {
            assert!(verify_witness_gaussian(&h, w, &q).unwrap());
        }
    }

    #[test]
    fn forged_witness_fails() {
        let m = builtin_real("real-parabola", BuiltinParams::default()).unwrap();
        let q = CountQuery::new(9, DeltaVec::new(vec![0.1]).unwrap()).mode(Mode::Exact);
        let w = Witness {
            numerators: Numerators::Int(vec![1]),
            denominator: Denominator::Int(3),
            index: None,
            residuals: vec![],
        };
        // 3·(1/3)² = 1/3
        assert!(!verify_witness_real(&m, &w, &q).unwrap());
        let bad = Witness {
            numerators: Numerators::Gaussian(vec![Gaussian::new(1, 0)]),
            ..w
        };
        assert!(verify_witness_real(&m, &bad, &q).is_err());
    }
}
