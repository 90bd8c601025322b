//! Sparse multivariate polynomials with exact coefficients, plus compiled
//! integer forms used by the exact counting kernels.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numtheory::{ComplexRational, ExactRational, Gaussian, GaussianInt};

/// Real polynomial in `nvars` variables, keyed by exponent tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, ExactRational>,
    float_terms: Vec<(Vec<u32>, f64)>,
}

impl RealPoly {
    pub fn new(
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, ExactRational)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, ExactRational> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::InvalidParameter(format!(
                    "monomial {exps:?} has {} exponents, expected {nvars}",
                    exps.len()
                )));
            }
            let entry = map.entry(exps).or_insert_with(ExactRational::zero);
            *entry = &*entry + &c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self::from_map(nvars, map))
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_ints(nvars: usize, terms: &[(&[u32], i64)]) -> Result<Self> {
        Self::new(
            nvars,
            terms
                .iter()
                .map(|(e, c)| (e.to_vec(), ExactRational::from_integer(*c))),
        )
    }

    fn from_map(nvars: usize, terms: BTreeMap<Vec<u32>, ExactRational>) -> Self {
        let float_terms = terms.iter().map(|(e, c)| (e.clone(), c.to_f64())).collect();
        RealPoly {
            nvars,
            terms,
            float_terms,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &ExactRational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.float_terms
            .iter()
            .map(|(e, c)| c * monomial(x, e))
            .sum()
    }

    /// Value, gradient and Hessian at `x` (Hessian in row-major order).
    pub fn jet(&self, x: &[f64], grad: &mut [f64], hess: &mut [f64]) -> f64 {
        let n = self.nvars;
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        let mut val = 0.0;
        for (e, c) in &self.float_terms {
            val += c * monomial(x, e);
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let mut di = e.clone();
                di[i] -= 1;
                grad[i] += c * e[i] as f64 * monomial(x, &di);
                for j in i..n {
                    if di[j] == 0 {
                        continue;
                    }
                    let mut dij = di.clone();
                    dij[j] -= 1;
                    let v = c * e[i] as f64 * di[j] as f64 * monomial(x, &dij);
                    hess[i * n + j] += v;
                    if i != j {
                        hess[j * n + i] += v;
                    }
                }
            }
        }
        val
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &[ExactRational]) -> ExactRational {
        let mut acc = ExactRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = &t * xi;
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    pub fn compile(&self) -> CompiledPoly<i128> {
        let lcm = self
            .terms
            .values()
            .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let scaled = c.numer() * (&lcm / c.denom());
                (e.clone(), scaled)
            })
            .collect();
        CompiledPoly::<i128>::build_real(self.nvars, self.degree(), lcm, terms)
    }
}

/// Complex polynomial in `nvars` complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, ComplexRational>,
    float_terms: Vec<(Vec<u32>, Complex64)>,
}

impl ComplexPoly {
    pub fn new(
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, ComplexRational)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, ComplexRational> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::InvalidParameter(format!(
                    "monomial {exps:?} has {} exponents, expected {nvars}",
                    exps.len()
                )));
            }
            let entry = map.entry(exps).or_insert_with(ComplexRational::zero);
            *entry = entry.clone() + c;
        }
        map.retain(|_, c| !c.is_zero());
        let float_terms = map
            .iter()
            .map(|(e, c)| (e.clone(), Complex64::new(c.re.to_f64(), c.im.to_f64())))
            .collect();
        Ok(ComplexPoly {
            nvars,
            terms: map,
            float_terms,
        })
    }

    /// Convenience constructor from Gaussian-integer coefficients `(re, im)`.
    pub fn from_gaussian(nvars: usize, terms: &[(&[u32], (i64, i64))]) -> Result<Self> {
        Self::new(
            nvars,
            terms.iter().map(|(e, (re, im))| {
                (
                    e.to_vec(),
                    ComplexRational::new(
                        ExactRational::from_integer(*re),
                        ExactRational::from_integer(*im),
                    ),
                )
            }),
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &ComplexRational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn value(&self, z: &[Complex64]) -> Complex64 {
        self.float_terms
            .iter()
            .map(|(e, c)| c * cmonomial(z, e))
            .sum()
    }

    /// Value, complex gradient and complex Hessian (row-major).
    pub fn jet(
        &self,
        z: &[Complex64],
        grad: &mut [Complex64],
        hess: &mut [Complex64],
    ) -> Complex64 {
        let n = self.nvars;
        grad.iter_mut().for_each(|g| *g = Complex64::zero());
        hess.iter_mut().for_each(|h| *h = Complex64::zero());
        let mut val = Complex64::zero();
        for (e, c) in &self.float_terms {
            val += c * cmonomial(z, e);
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let mut di = e.clone();
                di[i] -= 1;
                grad[i] += c * e[i] as f64 * cmonomial(z, &di);
                for j in i..n {
                    if di[j] == 0 {
                        continue;
                    }
                    let mut dij = di.clone();
                    dij[j] -= 1;
                    let v = c * (e[i] as f64 * di[j] as f64) * cmonomial(z, &dij);
                    hess[i * n + j] += v;
                    if i != j {
                        hess[j * n + i] += v;
                    }
                }
            }
        }
        val
    }

    /// Expands `f(x + iy)` into real and imaginary parts over the real
    /// variables `(x_1..x_m, y_1..y_m)`.
    pub fn realify(&self) -> (RealPoly, RealPoly) {
        let m = self.nvars;
        let mut re: BTreeMap<Vec<u32>, ExactRational> = BTreeMap::new();
        let mut im: BTreeMap<Vec<u32>, ExactRational> = BTreeMap::new();
        for (e, c) in &self.terms {
            // product over k of (x_k + i y_k)^{e_k}, with Gaussian-integer coefficients
            let mut expansion: BTreeMap<Vec<u32>, GaussianInt> = BTreeMap::new();
            expansion.insert(vec![0; 2 * m], GaussianInt::from_i64(1, 0));
            for (k, &ek) in e.iter().enumerate() {
                let mut next: BTreeMap<Vec<u32>, GaussianInt> = BTreeMap::new();
                for (mono, coef) in &expansion {
                    for j in 0..=ek {
                        let binom = binomial(ek, j);
                        let ipow = match j % 4 {
                            0 => GaussianInt::from_i64(1, 0),
                            1 => GaussianInt::from_i64(0, 1),
                            2 => GaussianInt::from_i64(-1, 0),
                            _ => GaussianInt::from_i64(0, -1),
                        };
                        let mut mono2 = mono.clone();
                        mono2[k] += ek - j;
                        mono2[m + k] += j;
                        let term = coef.clone()
                            * ipow
                            * Gaussian::new(BigInt::from(binom), BigInt::zero());
                        let slot = next
                            .entry(mono2)
                            .or_insert_with(|| GaussianInt::from_i64(0, 0));
                        *slot = slot.clone() + term;
                    }
                }
                expansion = next;
            }
            for (mono, g) in expansion {
                let gr = ExactRational::from_integer(g.re);
                let gi = ExactRational::from_integer(g.im);
                let r = &(&c.re * &gr) - &(&c.im * &gi);
                let i = &(&c.re * &gi) + &(&c.im * &gr);
                let sr = re.entry(mono.clone()).or_insert_with(ExactRational::zero);
                *sr = &*sr + &r;
                let si = im.entry(mono).or_insert_with(ExactRational::zero);
                *si = &*si + &i;
            }
        }
        re.retain(|_, c| !c.is_zero());
        im.retain(|_, c| !c.is_zero());
        (RealPoly::from_map(2 * m, re), RealPoly::from_map(2 * m, im))
    }

    pub fn compile(&self) -> CompiledPoly<Gaussian<i128>> {
        let lcm = self
            .terms
            .values()
            .fold(BigInt::one(), |l, c| l.lcm(c.re.denom()).lcm(c.im.denom()));
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let re = c.re.numer() * (&lcm / c.re.denom());
                let im = c.im.numer() * (&lcm / c.im.denom());
                (e.clone(), Gaussian::new(re, im))
            })
            .collect();
        CompiledPoly::<Gaussian<i128>>::build_complex(self.nvars, self.degree(), lcm, terms)
    }
}

fn binomial(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

#[inline]
fn monomial(x: &[f64], e: &[u32]) -> f64 {
    x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product()
}

#[inline]
fn cmonomial(z: &[Complex64], e: &[u32]) -> Complex64 {
    z.iter()
        .zip(e)
        .fold(Complex64::one(), |acc, (zi, &k)| acc * zi.powu(k))
}

/// `q·f(a/q)` rewritten over a common denominator: with `d = max(deg, 1)` and
/// `L` the lcm of the coefficient denominators,
/// `q·f(a/q) = (Σ c_e·L·a^e·q^{d-|e|}) / (L·q^{d-1})`.
type Terms<C> = Vec<(Vec<u32>, C)>;

#[derive(Debug, Clone)]
pub struct CompiledPoly<C> {
    pub(crate) nvars: usize,
    pub(crate) degree: u32,
    pub(crate) max_exp: u32,
    pub(crate) lcm: BigInt,
    pub(crate) small: Option<(i128, Terms<C>)>,
    pub(crate) big: Vec<(Vec<u32>, Gaussian<BigInt>)>,
}

impl CompiledPoly<i128> {
    fn build_real(nvars: usize, degree: u32, lcm: BigInt, terms: Vec<(Vec<u32>, BigInt)>) -> Self {
        let big: Vec<_> = terms
            .into_iter()
            .map(|(e, c)| (e, Gaussian::new(c, BigInt::zero())))
            .collect();
        assemble(nvars, degree, lcm, big, |c| c.re.to_i128())
    }
}

impl CompiledPoly<Gaussian<i128>> {
    fn build_complex(
        nvars: usize,
        degree: u32,
        lcm: BigInt,
        terms: Vec<(Vec<u32>, GaussianInt)>,
    ) -> Self {
        assemble(nvars, degree, lcm, terms, |c| {
            Some(Gaussian::new(c.re.to_i128()?, c.im.to_i128()?))
        })
    }
}

fn assemble<C>(
    nvars: usize,
    degree: u32,
    lcm: BigInt,
    big: Vec<(Vec<u32>, GaussianInt)>,
    narrow: impl Fn(&GaussianInt) -> Option<C>,
) -> CompiledPoly<C> {
    let max_exp = big
        .iter()
        .flat_map(|(e, _)| e.iter().copied())
        .max()
        .unwrap_or(0);
    let small = lcm.to_i128().and_then(|l| {
        let terms: Option<Vec<_>> = big
            .iter()
            .map(|(e, c)| narrow(c).map(|c| (e.clone(), c)))
            .collect();
        terms.map(|t| (l, t))
    });
    CompiledPoly {
        nvars,
        degree: degree.max(1),
        max_exp,
        lcm,
        small,
        big,
    }
}

impl CompiledPoly<i128> {
    /// Numerator and denominator of `q·f(a/q)` in `i128`, or `None` on overflow.
    pub(crate) fn residue_i128(
        &self,
        a: &[i64],
        q: i64,
        scratch: &mut Vec<i128>,
    ) -> Option<(i128, i128)> {
        let (l, terms) = self.small.as_ref()?;
        let d = self.degree as usize;
        let stride = self.max_exp as usize + 1;
        scratch.clear();
        scratch.resize(stride * self.nvars + d + 1, 0);
        for (i, &ai) in a.iter().enumerate() {
            let mut p: i128 = 1;
            scratch[i * stride] = 1;
            for k in 1..stride {
                p = p.checked_mul(ai as i128)?;
                scratch[i * stride + k] = p;
            }
        }
        let qoff = stride * self.nvars;
        let mut p: i128 = 1;
        scratch[qoff] = 1;
        for k in 1..=d {
            p = p.checked_mul(q as i128)?;
            scratch[qoff + k] = p;
        }
        let mut num: i128 = 0;
        for (e, c) in terms {
            let mut t = *c;
            let mut deg = 0usize;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.checked_mul(scratch[i * stride + k as usize])?;
                    deg += k as usize;
                }
            }
            t = t.checked_mul(scratch[qoff + d - deg])?;
            num = num.checked_add(t)?;
        }
        let den = l.checked_mul(scratch[qoff + d - 1])?;
        Some((num, den))
    }

    pub(crate) fn residue_big(&self, a: &[i64], q: i64) -> (BigInt, BigInt) {
        let d = self.degree;
        let qb = BigInt::from(q);
        let mut num = BigInt::zero();
        for (e, c) in &self.big {
            let mut t = c.re.clone();
            let mut deg = 0;
            for (&ai, &k) in a.iter().zip(e) {
                t *= num_traits::pow(BigInt::from(ai), k as usize);
                deg += k;
            }
            t *= num_traits::pow(qb.clone(), (d - deg) as usize);
            num += t;
        }
        let den = &self.lcm * num_traits::pow(qb, (d - 1) as usize);
        (num, den)
    }
}

impl CompiledPoly<Gaussian<i128>> {
    /// Numerator and denominator of `q·f(a/q)` over ℤ[i], in `i128`.
    pub(crate) fn residue_i128(
        &self,
        a: &[Gaussian<i64>],
        q: Gaussian<i64>,
    ) -> Option<(Gaussian<i128>, Gaussian<i128>)> {
        let (l, terms) = self.small.as_ref()?;
        let d = self.degree;
        let qw = Gaussian::new(q.re as i128, q.im as i128);
        let mut num = Gaussian::new(0i128, 0i128);
        for (e, c) in terms {
            let mut t = *c;
            let mut deg = 0;
            for (ai, &k) in a.iter().zip(e) {
                let aw = Gaussian::new(ai.re as i128, ai.im as i128);
                for _ in 0..k {
                    t = gmul_checked(t, aw)?;
                }
                deg += k;
            }
            for _ in 0..(d - deg) {
                t = gmul_checked(t, qw)?;
            }
            num = Gaussian::new(num.re.checked_add(t.re)?, num.im.checked_add(t.im)?);
        }
        let mut den = Gaussian::new(*l, 0i128);
        for _ in 0..(d - 1) {
            den = gmul_checked(den, qw)?;
        }
        Some((num, den))
    }

    pub(crate) fn residue_big(
        &self,
        a: &[Gaussian<i64>],
        q: Gaussian<i64>,
    ) -> (GaussianInt, GaussianInt) {
        let d = self.degree;
        let qb = q.to_big();
        let mut num = GaussianInt::from_i64(0, 0);
        for (e, c) in &self.big {
            let mut t = c.clone();
            let mut deg = 0;
            for (ai, &k) in a.iter().zip(e) {
                let ab = ai.to_big();
                for _ in 0..k {
                    t = t * ab.clone();
                }
                deg += k;
            }
            for _ in 0..(d - deg) {
                t = t * qb.clone();
            }
            num = num + t;
        }
        let mut den = Gaussian::new(self.lcm.clone(), BigInt::zero());
        for _ in 0..(d - 1) {
            den = den * qb.clone();
        }
        (num, den)
    }
}

#[inline]
pub(crate) fn gmul_checked(a: Gaussian<i128>, b: Gaussian<i128>) -> Option<Gaussian<i128>> {
    let re =
        a.re.checked_mul(b.re)?
            .checked_sub(a.im.checked_mul(b.im)?)?;
    let im =
        a.re.checked_mul(b.im)?
            .checked_add(a.im.checked_mul(b.re)?)?;
    Some(Gaussian::new(re, im))
}
