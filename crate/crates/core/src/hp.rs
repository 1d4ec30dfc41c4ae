//! Fixed-precision real arithmetic for the irrational closed forms.
//!
//! Everything that depends on the eigenvalues of the transfer matrix is
//! evaluated with [`PRECISION`] mantissa bits and only rounded to `f64` at the
//! reporting boundary.

use astro_float::{BigFloat, Consts, RoundingMode};
use std::cell::RefCell;

/// Working precision in bits.
pub const PRECISION: usize = 192;

/// Conservative bound on the relative error of any closed form evaluated here.
/// A handful of chained operations at 192 bits stays far below this.
pub const RELATIVE_ERROR_BOUND: f64 = 1e-45;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

#[derive(Clone, Debug)]
pub struct Real(BigFloat);

impl Real {
    pub fn from_i64(v: i64) -> Self {
        Real(BigFloat::from_i64(v, PRECISION))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Real::from_i64(num).div(&Real::from_i64(den))
    }

    pub fn add(&self, o: &Real) -> Real {
        Real(self.0.add(&o.0, PRECISION, RM))
    }

    pub fn sub(&self, o: &Real) -> Real {
        Real(self.0.sub(&o.0, PRECISION, RM))
    }

    pub fn mul(&self, o: &Real) -> Real {
        Real(self.0.mul(&o.0, PRECISION, RM))
    }

    pub fn div(&self, o: &Real) -> Real {
        Real(self.0.div(&o.0, PRECISION, RM))
    }

    pub fn neg(&self) -> Real {
        Real(self.0.neg())
    }

    pub fn sqrt(&self) -> Real {
        Real(self.0.sqrt(PRECISION, RM))
    }

    pub fn ln(&self) -> Real {
        CONSTS.with(|cc| Real(self.0.ln(PRECISION, RM, &mut cc.borrow_mut())))
    }

    pub fn powi(&self, n: u32) -> Real {
        Real(self.0.powi(n as usize, PRECISION, RM))
    }

    pub fn floor(&self) -> Real {
        Real(self.0.floor())
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    pub fn lt(&self, o: &Real) -> bool {
        matches!(self.0.cmp(&o.0), Some(c) if c < 0)
    }

    pub fn abs(&self) -> Real {
        Real(self.0.abs())
    }

    /// Nearest `f64`. Goes through the decimal rendering, which carries far
    /// more digits than an `f64` can hold.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let s = format!("{}", self.0);
        s.parse::<f64>().unwrap_or(f64::NAN)
    }

    /// Exact conversion of an integral value; `None` when out of range.
    pub fn to_i64(&self) -> Option<i64> {
        let f = self.floor().to_f64();
        if f.is_finite() && f.abs() < 9.0e15 {
            Some(f as i64)
        } else {
            None
        }
    }
}
