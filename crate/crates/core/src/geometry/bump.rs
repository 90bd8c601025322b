use crate::error::{Error, Result};

/// Radial bump: `1` within `inner` of the center, `0` beyond `outer`, and
/// `exp(1 - 1/(1 - t²))` in between with `t = (|x - x₀| - inner)/(outer - inner)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpWeight {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
}

impl BumpWeight {
    pub fn new(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bump radii must satisfy 0 <= inner < outer (got {inner}, {outer})"
            )));
        }
        Ok(BumpWeight {
            center,
            inner,
            outer,
        })
    }

    /// Bump centered in `(0,1)ⁿ` with radii 0.2 and 0.45.
    pub fn standard(n: usize) -> Self {
        BumpWeight {
            center: vec![0.5; n],
            inner: 0.2,
            outer: 0.45,
        }
    }

    /// The weight that vanishes identically.
    pub fn zero(n: usize) -> Self {
        BumpWeight {
            center: vec![0.0; n],
            inner: 0.0,
            outer: 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        if self.outer <= 0.0 {
            return 0.0;
        }
        let d = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if d <= self.inner {
            1.0
        } else if d >= self.outer {
            0.0
        } else {
            let t = (d - self.inner) / (self.outer - self.inner);
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plateau_and_support() {
        let w = BumpWeight::standard(2);
        assert_eq!(w.value(&[0.5, 0.5]), 1.0);
        assert_eq!(w.value(&[0.6, 0.5]), 1.0);
        assert_eq!(w.value(&[0.0, 0.0]), 0.0);
        assert_eq!(BumpWeight::zero(2).value(&[0.0, 0.0]), 0.0);
        assert!(BumpWeight::new(vec![0.0], 0.5, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn values_in_unit_interval_and_radially_monotone(x in -1.0f64..2.0, y in -1.0f64..2.0, s in 0.0f64..1.0) {
            let w = BumpWeight::standard(2);
            let v = w.value(&[x, y]);
            prop_assert!((0.0..=1.0).contains(&v));
            let closer = [0.5 + s * (x - 0.5), 0.5 + s * (y - 0.5)];
            prop_assert!(w.value(&closer) >= v);
        }
    }
}
