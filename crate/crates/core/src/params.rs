//! Closed-form quantities of the layered {p,q} tiling: transfer matrix,
//! eigenvalues, layer counts, field thresholds, critical radius and the
//! classification of the field axis into regimes.

use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::hp::{self, Real};
use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// Schläfli pair of a hyperbolic tiling by regular `p`-gons, `q` per vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tiling {
    pub p: u32,
    pub q: u32,
}

impl Tiling {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p < 4 || q < 4 {
            return Err(Error::Domain(format!(
                "{{{p},{q}}}: both p and q must be at least 4"
            )));
        }
        // 1/p + 1/q < 1/2  <=>  (p-2)(q-2) > 4
        if (p - 2) * (q - 2) <= 4 {
            return Err(Error::Domain(format!(
                "{{{p},{q}}} is not hyperbolic: 1/p + 1/q >= 1/2"
            )));
        }
        Ok(Tiling { p, q })
    }

    /// Maps the (I, E) counts of layer n onto those of layer n+1.
    pub fn transfer_matrix(&self) -> [[i64; 2]; 2] {
        let (p, q) = (self.p as i64, self.q as i64);
        [
            [q - 3, q - 2],
            [p * q - 3 * p - 3 * q + 8, p * q - 2 * p - 3 * q + 5],
        ]
    }

    fn pi(&self) -> i64 {
        self.p as i64
    }

    fn qi(&self) -> i64 {
        self.q as i64
    }
}

impl fmt::Display for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.p, self.q)
    }
}

/// External field strength, kept as an exact positive rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field(Ratio<i64>);

impl Field {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("field denominator is zero".into()));
        }
        let r = Ratio::new(num, den);
        if r <= Ratio::zero() {
            return Err(Error::Domain(format!("field h = {r} must be positive")));
        }
        Ok(Field(r))
    }

    pub fn num(&self) -> i64 {
        *self.0.numer()
    }

    pub fn den(&self) -> i64 {
        *self.0.denom()
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num()), BigInt::from(self.den()))
    }

    pub fn to_f64(&self) -> f64 {
        self.num() as f64 / self.den() as f64
    }

    pub(crate) fn to_real(&self) -> Real {
        Real::from_ratio(self.num(), self.den())
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den() == 1 {
            write!(f, "{}", self.num())
        } else {
            write!(f, "{}/{}", self.num(), self.den())
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    /// Accepts `a/b`, integers, and finite decimals such as `2.2364`
    /// (read exactly as 22364/10000).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("cannot read field value {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            return Field::new(a, b);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 15 {
                return Err(bad());
            }
            let den = 10i64.pow(frac.len() as u32);
            let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let frac: i64 = frac.parse().map_err(|_| bad())?;
            return Field::new(int * den + frac, den);
        }
        Field::new(s.parse().map_err(|_| bad())?, 1)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    num: i64,
    den: i64,
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr {
            num: self.num(),
            den: self.den(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Field {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FieldRepr::deserialize(d)?;
        Field::new(r.num, r.den).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub tiling: Tiling,
    /// Index of the outermost layer; the lattice is layers `0..=outer`.
    pub outer: u32,
    pub h: Field,
    /// Inverse temperature. Only the dynamics read it.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(p: u32, q: u32, outer: u32, h: Field, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("beta = {beta} must be finite and >= 0")));
        }
        Ok(ModelParams {
            tiling: Tiling::new(p, q)?,
            outer,
            h,
            beta,
        })
    }
}

/// Eigen-data of the transfer matrix, rounded to `f64` for reporting.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralConstants {
    pub transfer: [[i64; 2]; 2],
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub c_pq: f64,
    pub h_limit: f64,
    /// Relative error bound of the values above before rounding to `f64`.
    pub error_bound: f64,
}

/// The same constants at working precision.
#[derive(Clone, Debug)]
pub(crate) struct Spectral {
    pub lambda_plus: Real,
    pub lambda_minus: Real,
    pub a_plus: Real,
    pub a_minus: Real,
    pub c_pq: Real,
    pub sqrt_q2: Real,
}

impl Spectral {
    pub fn new(t: Tiling) -> Self {
        let (p, q) = (t.pi(), t.qi());
        let disc = Real::from_i64((p - 2) * (q - 2) * (q * (p - 2) - 2 * p)).sqrt();
        let half = Real::from_ratio(1, 2);
        let trace = Real::from_i64(2 + p * (q - 2) - 2 * q);
        let lambda_plus = trace.add(&disc).mul(&half);
        let lambda_minus = trace.sub(&disc).mul(&half);
        let root = Real::from_i64((p - 2) * (p * q - 2 * p - 2 * q)).sqrt();
        let sqrt_q2 = Real::from_i64(q - 2).sqrt();
        let shift = Real::from_i64(p - 2).mul(&sqrt_q2);
        let a_plus = root.add(&shift);
        let a_minus = root.sub(&shift);
        let c_pq = Real::from_i64(p).div(&Real::from_i64(2).mul(&root));
        Spectral {
            lambda_plus,
            lambda_minus,
            a_plus,
            a_minus,
            c_pq,
            sqrt_q2,
        }
    }

    /// q - 2 - 4 sqrt(q-2) / a+
    pub fn h_limit(&self, t: Tiling) -> Real {
        let four = Real::from_i64(4);
        Real::from_i64(t.qi() - 2).sub(&four.mul(&self.sqrt_q2).div(&self.a_plus))
    }

    /// q - 2 - 4 sqrt(q-2)(l+ - l-) / (a+ l+ + a- l-)
    pub fn h2(&self, t: Tiling) -> Real {
        let four = Real::from_i64(4);
        let num = four
            .mul(&self.sqrt_q2)
            .mul(&self.lambda_plus.sub(&self.lambda_minus));
        let den = self
            .a_plus
            .mul(&self.lambda_plus)
            .add(&self.a_minus.mul(&self.lambda_minus));
        Real::from_i64(t.qi() - 2).sub(&num.div(&den))
    }

    /// Closed form 2 c sqrt(q-2) (l+^n - l-^n) of |I_n|.
    pub fn interior_closed(&self, n: u32) -> Real {
        Real::from_i64(2)
            .mul(&self.c_pq)
            .mul(&self.sqrt_q2)
            .mul(&self.lambda_plus.powi(n).sub(&self.lambda_minus.powi(n)))
    }

    /// Closed form c (a- l-^n + a+ l+^n) of |L_n|.
    pub fn layer_closed(&self, n: u32) -> Real {
        self.c_pq.mul(
            &self
                .a_minus
                .mul(&self.lambda_minus.powi(n))
                .add(&self.a_plus.mul(&self.lambda_plus.powi(n))),
        )
    }

    /// The printed growth term c[(a- l-^r + a+ l+^r)(q-2-h) - 4 sqrt(q-2)(l+^r - l-^r)].
    pub fn growth_term(&self, t: Tiling, r: u32, h: &Real) -> Real {
        let slack = Real::from_i64(t.qi() - 2).sub(h);
        let lp = self.lambda_plus.powi(r);
        let lm = self.lambda_minus.powi(r);
        let first = self.a_minus.mul(&lm).add(&self.a_plus.mul(&lp)).mul(&slack);
        let second = Real::from_i64(4).mul(&self.sqrt_q2).mul(&lp.sub(&lm));
        self.c_pq.mul(&first.sub(&second))
    }

    pub fn constants(&self, t: Tiling) -> SpectralConstants {
        SpectralConstants {
            transfer: t.transfer_matrix(),
            lambda_plus: self.lambda_plus.to_f64(),
            lambda_minus: self.lambda_minus.to_f64(),
            a_plus: self.a_plus.to_f64(),
            a_minus: self.a_minus.to_f64(),
            c_pq: self.c_pq.to_f64(),
            h_limit: self.h_limit(t).to_f64(),
            error_bound: hp::RELATIVE_ERROR_BOUND,
        }
    }
}

pub fn spectral_constants(p: u32, q: u32) -> Result<SpectralConstants> {
    let t = Tiling::new(p, q)?;
    Ok(Spectral::new(t).constants(t))
}

/// Vertex counts of one layer: `interior` have a parent in the previous
/// layer, `exterior` do not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCounts {
    #[serde(serialize_with = "ser_big")]
    pub interior: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub exterior: BigUint,
}

fn ser_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v.to_u64() {
        Some(x) => s.serialize_u64(x),
        None => s.serialize_str(&v.to_string()),
    }
}

impl LayerCounts {
    pub fn total(&self) -> BigUint {
        &self.interior + &self.exterior
    }

    pub fn as_u64(&self) -> Option<(u64, u64)> {
        Some((self.interior.to_u64()?, self.exterior.to_u64()?))
    }
}

/// Counts of every layer `0..=n`, by repeated application of the transfer
/// matrix to the seed (0, p).
pub fn layer_count_table(t: Tiling, n: u32) -> Vec<LayerCounts> {
    let m = t.transfer_matrix();
    let m: Vec<BigUint> = m
        .iter()
        .flatten()
        .map(|&x| BigUint::from(x as u64))
        .collect();
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut cur = LayerCounts {
        interior: BigUint::zero(),
        exterior: BigUint::from(t.p),
    };
    out.push(cur.clone());
    for _ in 0..n {
        cur = LayerCounts {
            interior: &m[0] * &cur.interior + &m[1] * &cur.exterior,
            exterior: &m[2] * &cur.interior + &m[3] * &cur.exterior,
        };
        out.push(cur.clone());
    }
    out
}

pub fn layer_counts(p: u32, q: u32, n: u32) -> Result<LayerCounts> {
    let t = Tiling::new(p, q)?;
    Ok(layer_count_table(t, n).pop().expect("table is never empty"))
}

/// Closed-form (|I_n|, |L_n|) as `f64`, for cross-checking the recursion.
pub fn layer_counts_closed_form(p: u32, q: u32, n: u32) -> Result<(f64, f64)> {
    let t = Tiling::new(p, q)?;
    let s = Spectral::new(t);
    Ok((s.interior_closed(n).to_f64(), s.layer_closed(n).to_f64()))
}

fn big(v: &BigUint) -> BigInt {
    BigInt::from(v.clone())
}

#[derive(Clone, Debug)]
pub struct FieldWindow {
    pub n_used: u32,
    pub h1_star: BigRational,
    pub h2_star: f64,
    pub h3_star: BigRational,
    /// Undefined for `n_used = 0` (empty sum in the denominator).
    pub h4_star: Option<BigRational>,
    pub h_limit: f64,
    pub error_bound: f64,
    pub(crate) h2_hp: Real,
    pub(crate) h_limit_hp: Real,
}

impl FieldWindow {
    pub fn h1_f64(&self) -> f64 {
        ratio_f64(&self.h1_star)
    }

    pub fn h3_f64(&self) -> f64 {
        ratio_f64(&self.h3_star)
    }

    pub fn h4_f64(&self) -> Option<f64> {
        self.h4_star.as_ref().map(ratio_f64)
    }

    /// True when the open interval (h1, h2) is non-empty.
    pub fn is_open(&self) -> bool {
        big_to_real(&self.h1_star).lt(&self.h2_hp)
    }
}

pub fn ratio_f64(r: &BigRational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // Huge operands: scale both down before dividing.
        let shift = r.denom().bits().saturating_sub(900);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    }
}

fn big_to_real(r: &BigRational) -> Real {
    let parse = |b: &BigInt| {
        let mut acc = Real::from_i64(0);
        let base = Real::from_i64(1 << 30);
        let (sign, digits) = b.to_u32_digits();
        for d in digits.iter().rev() {
            acc = acc.mul(&Real::from_i64(4)).mul(&base);
            acc = acc.add(&Real::from_i64(*d as i64));
        }
        if sign == num_bigint::Sign::Minus {
            acc.neg()
        } else {
            acc
        }
    };
    parse(r.numer()).div(&parse(r.denom()))
}

pub fn field_window(p: u32, q: u32, outer: u32) -> Result<FieldWindow> {
    let t = Tiling::new(p, q)?;
    let s = Spectral::new(t);
    let table = layer_count_table(t, outer);
    let last = &table[outer as usize];
    let q2 = BigInt::from(q - 2);
    let total_all: BigUint = table.iter().map(LayerCounts::total).sum();
    let total_inner: BigUint = table[..outer as usize].iter().map(LayerCounts::total).sum();
    let l_n = big(&last.total());
    let i_n = big(&last.interior);
    let h1 = BigRational::new(&q2 * &l_n - &i_n, big(&total_all));
    let h3 = BigRational::from_integer(q2.clone())
        - BigRational::new(BigInt::from(2) * &i_n, l_n.clone());
    let h4 = if total_inner.is_zero() {
        None
    } else {
        Some(BigRational::new(i_n.clone(), big(&total_inner)))
    };
    let h2 = s.h2(t);
    let hl = s.h_limit(t);
    Ok(FieldWindow {
        n_used: outer,
        h1_star: h1,
        h2_star: h2.to_f64(),
        h3_star: h3,
        h4_star: h4,
        h_limit: hl.to_f64(),
        error_bound: hp::RELATIVE_ERROR_BOUND,
        h2_hp: h2,
        h_limit_hp: hl,
    })
}

/// Floor of the critical-radius expression. When the argument is within
/// `1e-9` of an integer both neighbouring integers are returned in
/// `candidates` and `degenerate` is set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalRadius {
    pub rstar: u32,
    /// The real number whose floor is `rstar`.
    pub argument: f64,
    pub degenerate: bool,
    pub candidates: Vec<u32>,
}

pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

pub fn critical_radius(p: u32, q: u32, h: Field) -> Result<CriticalRadius> {
    let t = Tiling::new(p, q)?;
    let s = Spectral::new(t);
    let hr = h.to_real();
    let qm2 = Real::from_i64(q as i64 - 2);
    if !hr.lt(&qm2) {
        return Err(Error::Domain(format!(
            "critical radius needs h < q-2 = {}; got h = {h}",
            q - 2
        )));
    }
    let slack = qm2.sub(&hr);
    let four_root = Real::from_i64(4).mul(&s.sqrt_q2);
    let num = four_root.add(&s.a_minus.mul(&slack));
    let den = four_root.sub(&s.a_plus.mul(&slack));
    if !den.is_positive() {
        return Err(Error::Domain(format!(
            "critical radius needs h > h_limit = {:.12}; got h = {h} (denominator 4 sqrt(q-2) - a+(q-2-h) = {:.3e} <= 0)",
            s.h_limit(t).to_f64(),
            den.to_f64()
        )));
    }
    if !num.is_positive() {
        return Err(Error::Domain(format!(
            "numerator 4 sqrt(q-2) + a-(q-2-h) = {:.3e} <= 0 at h = {h}",
            num.to_f64()
        )));
    }
    let ratio = num.div(&den);
    if !Real::from_i64(1).lt(&ratio) {
        return Err(Error::Domain(format!(
            "log argument {:.6e} <= 1 at h = {h}",
            ratio.to_f64()
        )));
    }
    let x = ratio
        .ln()
        .div(&s.lambda_plus.div(&s.lambda_minus).ln());
    let fl = x
        .floor()
        .to_i64()
        .ok_or(Error::Overflow("critical radius"))?;
    let argument = x.to_f64();
    let nearest = argument.round();
    let degenerate = (argument - nearest).abs() < DEGENERACY_TOLERANCE;
    let candidates = if degenerate && nearest >= 1.0 {
        vec![nearest as u32 - 1, nearest as u32]
    } else {
        vec![fl as u32]
    };
    Ok(CriticalRadius {
        rstar: fl as u32,
        argument,
        degenerate,
        candidates,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// 0 < h < h_limit
    #[serde(rename = "I-a")]
    IA,
    /// h_limit < h < h3 (both below h1)
    #[serde(rename = "I-b(<h3)")]
    IBBelowH3,
    /// max(h_limit, h3) < h < h1
    #[serde(rename = "I-b(>h3)")]
    IBAboveH3,
    #[serde(rename = "METASTABLE")]
    Metastable,
    /// h2 <= h <= q-2
    #[serde(rename = "II-a")]
    IIA,
    /// h > q-2
    #[serde(rename = "II-b")]
    IIB,
    #[serde(rename = "DEGENERATE")]
    Degenerate,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::IA => "I-a",
            Region::IBBelowH3 => "I-b(<h3)",
            Region::IBAboveH3 => "I-b(>h3)",
            Region::Metastable => "METASTABLE",
            Region::IIA => "II-a",
            Region::IIB => "II-b",
            Region::Degenerate => "DEGENERATE",
        };
        f.write_str(s)
    }
}

pub fn region_classify(params: &ModelParams) -> Result<Region> {
    let t = params.tiling;
    let w = field_window(t.p, t.q, params.outer)?;
    Ok(classify_in(&w, t, params.h))
}

pub(crate) fn classify_in(w: &FieldWindow, t: Tiling, h: Field) -> Region {
    let hb = h.to_big();
    let hr = h.to_real();
    match hb.cmp(&w.h1_star) {
        Ordering::Equal => Region::Degenerate,
        Ordering::Less => {
            if hr.lt(&w.h_limit_hp) {
                Region::IA
            } else if !w.h_limit_hp.lt(&hr) {
                Region::Degenerate
            } else {
                match hb.cmp(&w.h3_star) {
                    Ordering::Less => Region::IBBelowH3,
                    Ordering::Equal => Region::Degenerate,
                    Ordering::Greater => Region::IBAboveH3,
                }
            }
        }
        Ordering::Greater => {
            let qm2 = BigRational::from_integer(BigInt::from(t.q - 2));
            if hb > qm2 {
                Region::IIB
            } else if !hr.lt(&w.h2_hp) {
                Region::IIA
            } else {
                Region::Metastable
            }
        }
    }
}

/// The printed remark equates h2 with h1 evaluated at one layer. Both are
/// evaluated as printed and compared; a flag is returned when they differ.
pub fn h2_versus_h1_at_one(p: u32, q: u32) -> Result<(f64, f64, Option<Flag>)> {
    let w1 = field_window(p, q, 1)?;
    let h1 = w1.h1_f64();
    let h2 = w1.h2_star;
    let flag = if (h1 - h2).abs() > 1e-12 {
        Some(Flag::new(
            "h2-vs-h1(1)",
            format!("h2 = {h2:.6} but h1(N=1) = {h1:.6} for {{{p},{q}}}"),
        ))
    } else {
        None
    };
    Ok((h1, h2, flag))
}

/// The analysis assumes 1 <= r* < N; returns a flag when that fails.
pub fn rstar_requirement(p: u32, q: u32, outer: u32, h: Field) -> Result<Option<Flag>> {
    let r = critical_radius(p, q, h)?;
    if r.rstar >= 1 && r.rstar < outer {
        Ok(None)
    } else {
        Ok(Some(Flag::new(
            "rstar-range",
            format!("r* = {} violates 1 <= r* < N = {outer}", r.rstar),
        )))
    }
}

/// Renders an exact rational as `num/den`.
pub fn ratio_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Field {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_non_hyperbolic() {
        assert!(matches!(Tiling::new(4, 4), Err(Error::Domain(_))));
        assert!(matches!(Tiling::new(3, 7), Err(Error::Domain(_))));
        assert!(Tiling::new(4, 5).is_ok());
        assert!(spectral_constants(4, 4).is_err());
    }

    #[test]
    fn transfer_matrix_examples() {
        let c = spectral_constants(4, 5).unwrap();
        assert_eq!(c.transfer, [[2, 3], [1, 2]]);
        let r3 = 3f64.sqrt();
        assert!((c.lambda_plus - (2.0 + r3)).abs() < 1e-14);
        assert!((c.lambda_minus - (2.0 - r3)).abs() < 1e-14);
    }

    #[test]
    fn five_five_constants() {
        let c = spectral_constants(5, 5).unwrap();
        assert!((c.lambda_plus - 6.8541).abs() < 1e-4);
        assert!((c.lambda_minus - 0.1459).abs() < 1e-4);
        assert!((c.c_pq - 5.0 / (2.0 * 15f64.sqrt())).abs() < 1e-14);
        let (r15, r3) = (15f64.sqrt(), 3f64.sqrt());
        assert!((c.a_plus - (r15 + 3.0 * r3)).abs() < 1e-12);
        assert!((c.a_minus - (r15 - 3.0 * r3)).abs() < 1e-12);
        // Quoted as 9.0690 and -1.3229, which are off in the fourth place.
        assert!((c.a_plus - 9.0690).abs() < 5e-4);
        assert!((c.a_minus + 1.3229).abs() < 5e-4);
    }

    #[test]
    fn layer_count_examples() {
        let c = layer_counts(7, 5, 0).unwrap();
        assert_eq!(c.as_u64(), Some((0, 7)));
        assert_eq!(layer_counts(5, 5, 1).unwrap().as_u64(), Some((15, 25)));
        let c = layer_counts(4, 5, 2).unwrap();
        assert_eq!(c.as_u64(), Some((48, 28)));
        assert_eq!(c.total(), BigUint::from(76u32));
    }

    #[test]
    fn counts_do_not_overflow_at_64() {
        let c = layer_counts(7, 7, 64).unwrap();
        assert!(c.total().bits() > 128);
    }

    #[test]
    fn window_examples() {
        let w = field_window(5, 5, 3).unwrap();
        assert_eq!(ratio_string(&w.h1_star), ratio_string(&BigRational::new(4935.into(), 2205.into())));
        assert!((w.h1_f64() - 2.2381).abs() < 1e-4);
        let w = field_window(4, 5, 2).unwrap();
        assert_eq!(w.h1_star, BigRational::new(9.into(), 5.into()));
        let w = field_window(5, 5, 21).unwrap();
        assert!((w.h1_f64() - 2.2361).abs() < 5e-5);
        assert!((w.h2_star - 2.25).abs() < 5e-5);
    }

    #[test]
    fn window_n0_has_no_h4() {
        let w = field_window(4, 5, 0).unwrap();
        assert!(w.h4_star.is_none());
    }

    #[test]
    fn h3_h4_formulas() {
        // (5,5,N=1): I=15, L=40, L0=5
        let w = field_window(5, 5, 1).unwrap();
        assert_eq!(w.h3_star, BigRational::new(3.into(), 1.into()) - BigRational::new(30.into(), 40.into()));
        assert_eq!(w.h4_star, Some(BigRational::new(15.into(), 5.into())));
    }

    #[test]
    fn critical_radius_examples() {
        assert_eq!(critical_radius(5, 5, f("2.24")).unwrap().rstar, 1);
        assert_eq!(critical_radius(5, 5, f("2.2364")).unwrap().rstar, 1);
        assert_eq!(critical_radius(4, 5, f("1.78")).unwrap().rstar, 1);
    }

    #[test]
    fn critical_radius_domain() {
        assert!(matches!(critical_radius(5, 5, f("3")), Err(Error::Domain(_))));
        assert!(matches!(critical_radius(5, 5, f("2.2")), Err(Error::Domain(_))));
        assert!(matches!(critical_radius(5, 5, f("1")), Err(Error::Domain(_))));
    }

    #[test]
    fn region_examples() {
        let m = |n, h: &str| ModelParams::new(5, 5, n, f(h), 1.0).unwrap();
        assert_eq!(region_classify(&m(3, "2.24")).unwrap(), Region::Metastable);
        assert_eq!(region_classify(&m(3, "4")).unwrap(), Region::IIB);
        assert_eq!(region_classify(&m(3, "3")).unwrap(), Region::IIA);
        assert_eq!(region_classify(&m(3, "4935/2205")).unwrap(), Region::Degenerate);
        assert_eq!(region_classify(&m(3, "1")).unwrap(), Region::IA);
        // (4,5,N=2): h1 = 9/5
        let p = ModelParams::new(4, 5, 2, f("9/5"), 1.0).unwrap();
        assert_eq!(region_classify(&p).unwrap(), Region::Degenerate);
    }

    #[test]
    fn field_parsing() {
        assert_eq!(f("2.24"), Field::new(56, 25).unwrap());
        assert_eq!(f("19/10"), Field::new(19, 10).unwrap());
        assert_eq!(f("3"), Field::new(3, 1).unwrap());
        assert!("0".parse::<Field>().is_err());
        assert!("-1/2".parse::<Field>().is_err());
        assert!("abc".parse::<Field>().is_err());
    }

    #[test]
    fn h2_h1_comparison_is_surfaced() {
        let (h1, h2, flag) = h2_versus_h1_at_one(4, 5).unwrap();
        assert!((h1 - 2.0).abs() < 1e-12);
        assert!((h2 - 1.8).abs() < 1e-9);
        assert!(flag.is_some());
    }
}
