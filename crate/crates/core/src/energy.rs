//! Spin configurations and energies relative to the all-minus state.
//!
//! Energies are kept as the integer pair `(u, n)` with value `u - h n`:
//! `u` counts disagreeing edges, frozen boundary edges included, and `n` is
//! the number of plus spins. Every vertex has `q` edges once the frozen
//! minus neighbours outside the patch are counted.

use crate::error::{Error, Result};
use crate::lattice::{LatticeGraph, VertexId};
use crate::params::Field;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    words: Vec<u64>,
    len: usize,
    plus: usize,
}

impl SpinConfig {
    pub fn all_minus(len: usize) -> Self {
        SpinConfig {
            words: vec![0; len.div_ceil(64)],
            len,
            plus: 0,
        }
    }

    pub fn all_plus(len: usize) -> Self {
        let mut s = SpinConfig::all_minus(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        if len % 64 != 0 {
            if let Some(last) = s.words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        s.plus = len;
        s
    }

    pub fn from_plus_ids(len: usize, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut s = SpinConfig::all_minus(len);
        for i in ids {
            s.set(i, true);
        }
        s
    }

    /// Bit `i` of `bits` is the spin of vertex `i`. Requires `len <= 64`.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        assert!(len <= 64, "state encoding holds at most 64 sites");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        let bits = bits & mask;
        SpinConfig {
            words: if len == 0 { vec![] } else { vec![bits] },
            len,
            plus: bits.count_ones() as usize,
        }
    }

    pub fn to_bits(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn plus_count(&self) -> usize {
        self.plus
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, plus: bool) {
        if self.get(i) != plus {
            self.flip(i);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let w = &mut self.words[i >> 6];
        *w ^= 1 << (i & 63);
        if *w >> (i & 63) & 1 == 1 {
            self.plus += 1;
        } else {
            self.plus -= 1;
        }
    }

    pub fn plus_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn is_all_minus(&self) -> bool {
        self.plus == 0
    }

    pub fn is_all_plus(&self) -> bool {
        self.plus == self.len
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '+' } else { '-' }).collect();
        write!(f, "SpinConfig[{s}]")
    }
}

/// `u - h n` relative to all-minus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactEnergy {
    pub u: i64,
    pub n: i64,
}

impl ExactEnergy {
    pub const ZERO: ExactEnergy = ExactEnergy { u: 0, n: 0 };

    pub fn new(u: i64, n: i64) -> Self {
        ExactEnergy { u, n }
    }

    /// `den * value(h)`, exact.
    #[inline]
    pub fn key(&self, h: Field) -> i128 {
        self.u as i128 * h.den() as i128 - self.n as i128 * h.num() as i128
    }

    pub fn cmp_at(&self, other: &ExactEnergy, h: Field) -> Ordering {
        self.key(h).cmp(&other.key(h))
    }

    pub fn value(&self, h: Field) -> f64 {
        self.key(h) as f64 / h.den() as f64
    }

    pub fn is_positive_at(&self, h: Field) -> bool {
        self.key(h) > 0
    }

    /// Larger of the two at `h`; `self` on ties.
    pub fn max_at(self, other: ExactEnergy, h: Field) -> ExactEnergy {
        if other.cmp_at(&self, h) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    /// Decimal rendering of the value at `h`, for display only.
    pub fn render(&self, h: Field) -> String {
        format_key(self.key(h), h.den())
    }
}

/// Renders `key / den` with up to 12 decimals, trimming zeros.
pub fn format_key(key: i128, den: i64) -> String {
    let v = key as f64 / den as f64;
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

impl Add for ExactEnergy {
    type Output = ExactEnergy;
    fn add(self, o: ExactEnergy) -> ExactEnergy {
        ExactEnergy::new(self.u + o.u, self.n + o.n)
    }
}

impl Sub for ExactEnergy {
    type Output = ExactEnergy;
    fn sub(self, o: ExactEnergy) -> ExactEnergy {
        ExactEnergy::new(self.u - o.u, self.n - o.n)
    }
}

impl Neg for ExactEnergy {
    type Output = ExactEnergy;
    fn neg(self) -> ExactEnergy {
        ExactEnergy::new(-self.u, -self.n)
    }
}

impl fmt::Display for ExactEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n >= 0 {
            write!(f, "{} - {}h", self.u, self.n)
        } else {
            write!(f, "{} + {}h", self.u, -self.n)
        }
    }
}

fn check_size(g: &LatticeGraph, s: &SpinConfig) -> Result<()> {
    if g.len() != s.len() {
        return Err(Error::SizeMismatch {
            config: s.len(),
            lattice: g.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn plus_neighbors(g: &LatticeGraph, s: &SpinConfig, id: usize) -> i64 {
    let mut k = 0;
    g.for_each_neighbor(id, |w| k += s.get(w) as i64);
    k
}

pub fn delta_h(g: &LatticeGraph, s: &SpinConfig) -> Result<ExactEnergy> {
    check_size(g, s)?;
    Ok(delta_h_unchecked(g, s))
}

pub(crate) fn delta_h_unchecked(g: &LatticeGraph, s: &SpinConfig) -> ExactEnergy {
    let q = g.q() as i64;
    let mut u = 0i64;
    for v in s.plus_ids() {
        u += q - plus_neighbors(g, s, v);
    }
    ExactEnergy::new(u, s.plus_count() as i64)
}

/// Change of energy when the spin at `id` is reversed.
#[inline]
pub(crate) fn flip_delta_id(g: &LatticeGraph, s: &SpinConfig, id: usize) -> ExactEnergy {
    let q = g.q() as i64;
    let k = plus_neighbors(g, s, id);
    if s.get(id) {
        ExactEnergy::new(2 * k - q, -1)
    } else {
        ExactEnergy::new(q - 2 * k, 1)
    }
}

pub fn flip_delta(g: &LatticeGraph, s: &SpinConfig, v: VertexId) -> Result<ExactEnergy> {
    check_size(g, s)?;
    Ok(flip_delta_id(g, s, g.id(v)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    /// Sorted global ids.
    pub members: Vec<usize>,
    pub area: usize,
    pub perimeter: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClusterSummary {
    pub clusters: Vec<Cluster>,
}

impl ClusterSummary {
    pub fn total_area(&self) -> usize {
        self.clusters.iter().map(|c| c.area).sum()
    }

    pub fn total_perimeter(&self) -> i64 {
        self.clusters.iter().map(|c| c.perimeter).sum()
    }
}

/// Connected components of the plus set, ordered by smallest member.
pub fn clusters(g: &LatticeGraph, s: &SpinConfig) -> Result<ClusterSummary> {
    check_size(g, s)?;
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for root in s.plus_ids() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        stack.push(root);
        let mut members = Vec::new();
        let mut perimeter = 0i64;
        while let Some(v) = stack.pop() {
            members.push(v);
            perimeter += g.exposure(v) as i64;
            g.for_each_neighbor(v, |w| {
                if s.get(w) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                } else {
                    perimeter += 1;
                }
            });
        }
        members.sort_unstable();
        out.push(Cluster {
            area: members.len(),
            members,
            perimeter,
        });
    }
    Ok(ClusterSummary { clusters: out })
}
