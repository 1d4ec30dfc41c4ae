//! Metropolis single-flip dynamics, hitting-time campaigns, a detailed
//! balance audit and exact spectral / mixing analysis of small chains.

use crate::energy::{delta_h_unchecked, flip_delta_id, plus_neighbors, ExactEnergy, SpinConfig};
use crate::error::{Error, Result};
use crate::lattice::LatticeGraph;
use crate::params::{Field, ModelParams};
use crate::par;
use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Stream seed of replica `i`: one SplitMix64 output keyed by the master
/// seed offset by `i` golden-ratio increments.
pub fn replica_seed(master: u64, i: u64) -> u64 {
    let mut sm = SplitMix64::seed_from_u64(master.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    sm.next_u64()
}

pub fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: SpinConfig,
    pub time: u64,
    pub rng: Xoshiro256PlusPlus,
    pub energy: ExactEnergy,
}

impl ChainState {
    pub fn new(g: &LatticeGraph, config: SpinConfig, seed: u64) -> Result<Self> {
        let energy = crate::energy::delta_h(g, &config)?;
        Ok(ChainState {
            config,
            time: 0,
            rng: rng_from_seed(seed),
            energy,
        })
    }
}

/// Acceptance thresholds for every possible local move. Entry `[dir][k]`
/// covers a flip towards plus (`dir = 1`) or minus (`dir = 0`) at a vertex
/// with `k` plus neighbours; `None` means the move is never uphill.
#[derive(Clone, Debug)]
pub struct Metropolis<'g> {
    g: &'g LatticeGraph,
    table: [Vec<Option<u64>>; 2],
}

impl<'g> Metropolis<'g> {
    pub fn new(g: &'g LatticeGraph, h: Field, beta: f64) -> Self {
        let q = g.q() as i64;
        let mut table = [Vec::new(), Vec::new()];
        for (dir, row) in table.iter_mut().enumerate() {
            for k in 0..=q {
                let d = if dir == 1 {
                    ExactEnergy::new(q - 2 * k, 1)
                } else {
                    ExactEnergy::new(2 * k - q, -1)
                };
                row.push(threshold(d, h, beta));
            }
        }
        Metropolis { g, table }
    }

    pub fn graph(&self) -> &LatticeGraph {
        self.g
    }

    /// One proposal: uniform vertex, accept with `exp(-beta [d]_+)`.
    #[inline]
    pub fn step(&self, st: &mut ChainState) {
        let n = self.g.len();
        let v = st.rng.gen_range(0..n);
        let k = plus_neighbors(self.g, &st.config, v) as usize;
        let to_plus = !st.config.get(v);
        let accept = match self.table[to_plus as usize][k] {
            None => true,
            Some(t) => st.rng.next_u64() < t,
        };
        if accept {
            let q = self.g.q() as i64;
            let du = if to_plus { q - 2 * k as i64 } else { 2 * k as i64 - q };
            st.energy = st.energy + ExactEnergy::new(du, if to_plus { 1 } else { -1 });
            st.config.flip(v);
        }
        st.time += 1;
    }

    /// Probability of accepting a proposal with energy change `d`.
    pub fn acceptance(d: ExactEnergy, h: Field, beta: f64) -> f64 {
        if d.key(h) <= 0 {
            1.0
        } else {
            (-beta * d.value(h)).exp()
        }
    }
}

fn threshold(d: ExactEnergy, h: Field, beta: f64) -> Option<u64> {
    if d.key(h) <= 0 {
        return None;
    }
    let p = (-beta * d.value(h)).exp();
    if p >= 1.0 {
        None
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

/// Single step with a freshly built acceptance table.
pub fn step(state: &mut ChainState, g: &LatticeGraph, params: &ModelParams) {
    Metropolis::new(g, params.h, params.beta).step(state);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    AllPlus,
    AllMinus,
    Either,
    /// Every configuration; the hitting time is then 1.
    AnyState,
}

impl Target {
    #[inline]
    pub fn contains(&self, s: &SpinConfig) -> bool {
        match self {
            Target::AllPlus => s.is_all_plus(),
            Target::AllMinus => s.is_all_minus(),
            Target::Either => s.is_all_plus() || s.is_all_minus(),
            Target::AnyState => true,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::AllPlus => "all-plus",
            Target::AllMinus => "all-minus",
            Target::Either => "either",
            Target::AnyState => "any",
        })
    }
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-plus" | "plus" | "+1" => Ok(Target::AllPlus),
            "all-minus" | "minus" | "-1" => Ok(Target::AllMinus),
            "either" => Ok(Target::Either),
            "any" => Ok(Target::AnyState),
            _ => Err(Error::Parse(format!("unknown target {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingTimeSample {
    pub replica: u64,
    pub seed: u64,
    pub steps: u64,
    pub censored: bool,
    pub target: Target,
}

/// First time `t > 0` at which the chain started from `start` lies in
/// `target`, for independent replicas. Censored replicas report
/// `steps = max_steps`.
pub fn hit(
    g: &LatticeGraph,
    params: &ModelParams,
    start: &SpinConfig,
    target: Target,
    max_steps: u64,
    seed: u64,
    replicas: usize,
) -> Result<Vec<HittingTimeSample>> {
    if max_steps == 0 {
        return Err(Error::Domain("max_steps must be at least 1".into()));
    }
    if start.len() != g.len() {
        return Err(Error::SizeMismatch {
            config: start.len(),
            lattice: g.len(),
        });
    }
    let chain = Metropolis::new(g, params.h, params.beta);
    let energy = delta_h_unchecked(g, start);
    Ok(par::map_range(replicas, |i| {
        let rs = replica_seed(seed, i as u64);
        let mut st = ChainState {
            config: start.clone(),
            time: 0,
            rng: rng_from_seed(rs),
            energy,
        };
        let (steps, censored) = run_until(&chain, &mut st, target, max_steps);
        HittingTimeSample {
            replica: i as u64,
            seed: rs,
            steps,
            censored,
            target,
        }
    }))
}

const AUDIT_PERIOD: u64 = 1 << 16;

fn run_until(chain: &Metropolis, st: &mut ChainState, target: Target, max_steps: u64) -> (u64, bool) {
    while st.time < max_steps {
        chain.step(st);
        if st.time % AUDIT_PERIOD == 0 {
            debug_assert_eq!(st.energy, delta_h_unchecked(chain.g, &st.config));
        }
        if target.contains(&st.config) {
            return (st.time, false);
        }
    }
    (max_steps, true)
}

#[derive(Clone, Debug, Serialize)]
pub struct HitSummary {
    pub replicas: usize,
    pub censored: usize,
    pub mean: f64,
    pub ln_mean: f64,
    /// Mean of `ln(steps)`.
    pub mean_ln: f64,
    pub quantiles: BTreeMap<String, u64>,
}

/// Summary over all samples, censored ones entering at `max_steps`.
pub fn summarize(samples: &[HittingTimeSample]) -> HitSummary {
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().map(|s| s.steps as f64).sum::<f64>() / n;
    let mean_ln = samples.iter().map(|s| (s.steps as f64).ln()).sum::<f64>() / n;
    let mut sorted: Vec<u64> = samples.iter().map(|s| s.steps).collect();
    sorted.sort_unstable();
    let mut quantiles = BTreeMap::new();
    if !sorted.is_empty() {
        for (name, q) in [("q10", 0.1), ("q25", 0.25), ("q50", 0.5), ("q75", 0.75), ("q90", 0.9)] {
            let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
            quantiles.insert(name.to_string(), sorted[idx]);
        }
    }
    HitSummary {
        replicas: samples.len(),
        censored: samples.iter().filter(|s| s.censored).count(),
        mean,
        ln_mean: mean.ln(),
        mean_ln,
        quantiles,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub audits: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

/// Random `(s, v)` audits of the local energy change against global
/// recomputation, the involution identity, and the exact balance identity
/// `H(s') - H(s) = [d]_+ - [-d]_+` that makes `exp(-beta H)` reversible.
pub fn detailed_balance_audit(g: &LatticeGraph, params: &ModelParams, samples: u64, seed: u64) -> AuditReport {
    let h = params.h;
    let mut rng = rng_from_seed(seed);
    let mut report = AuditReport {
        audits: 0,
        violations: 0,
        first_violation: None,
    };
    let pos = |d: ExactEnergy| if d.key(h) > 0 { d } else { ExactEnergy::ZERO };
    let mut s = SpinConfig::all_minus(g.len());
    for _ in 0..samples {
        for i in 0..g.len() {
            s.set(i, rng.gen::<bool>());
        }
        let v = rng.gen_range(0..g.len());
        let before = delta_h_unchecked(g, &s);
        let d = flip_delta_id(g, &s, v);
        s.flip(v);
        let after = delta_h_unchecked(g, &s);
        let back = flip_delta_id(g, &s, v);
        let ok_local = after - before == d;
        let ok_inv = d + back == ExactEnergy::ZERO;
        let ok_balance = pos(d) - pos(back) == after - before;
        report.audits += 1;
        if !(ok_local && ok_inv && ok_balance) {
            report.violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some(format!(
                    "vertex {}: local {d}, global {}, reverse {back}",
                    g.vertex(v),
                    after - before
                ));
            }
        }
    }
    report
}

pub const EXACT_CHAIN_MAX_SITES: usize = 20;
pub const MIXING_ALL_STARTS_MAX_STATES: usize = 1024;
pub const DENSE_MAX_STATES: usize = 2048;

#[derive(Clone, Debug)]
pub struct ChainOptions {
    pub epsilons: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Mixing times above this are reported as `None`.
    pub max_mixing_steps: u64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            epsilons: vec![0.25, 0.1, 0.01],
            tolerance: 1e-12,
            max_iterations: 2_000_000,
            max_mixing_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainAnalysis {
    pub states: usize,
    pub spectral_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Keyed by the decimal rendering of epsilon.
    pub mixing_time: BTreeMap<String, Option<u64>>,
    pub start_set: String,
}

/// State energies `(u, n)` of every configuration of a small lattice, with
/// bit `i` of the state index holding vertex `i`.
pub(crate) fn state_energies(g: &LatticeGraph) -> Vec<(i32, i32)> {
    let n = g.len();
    let q = g.q() as i32;
    // Plus-plus edges counted from each vertex's smaller-id neighbours.
    let mut lower: Vec<u64> = vec![0; n];
    for (v, m) in lower.iter_mut().enumerate() {
        g.for_each_neighbor(v, |w| {
            if w < v {
                *m |= 1 << w;
            }
        });
    }
    let chunk = 1usize << 12;
    let total = 1usize << n;
    let chunks = total.div_ceil(chunk);
    let parts = par::map_range(chunks, |c| {
        let lo = c * chunk;
        let hi = (lo + chunk).min(total);
        (lo..hi)
            .map(|s| {
                let s = s as u64;
                let mut pp = 0i32;
                let mut rest = s;
                while rest != 0 {
                    let v = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    pp += (lower[v] & s).count_ones() as i32;
                }
                let np = s.count_ones() as i32;
                (q * np - 2 * pp, np)
            })
            .collect::<Vec<_>>()
    });
    parts.concat()
}

/// Exact spectral gap `1 - lambda_2` of the Metropolis chain and its
/// total-variation mixing times. The operator is never stored: it acts on
/// vectors through the state energies.
pub fn exact_chain_analysis(g: &LatticeGraph, params: &ModelParams) -> Result<ChainAnalysis> {
    exact_chain_analysis_with(g, params, &ChainOptions::default())
}

pub fn exact_chain_analysis_with(g: &LatticeGraph, params: &ModelParams, opts: &ChainOptions) -> Result<ChainAnalysis> {
    let n = g.len();
    if n > EXACT_CHAIN_MAX_SITES {
        return Err(Error::Capacity {
            what: "exact chain sites",
            needed: n as u128,
            cap: EXACT_CHAIN_MAX_SITES as u128,
        });
    }
    let op = Operator::new(g, params);
    let (gap, iterations, converged) = op.spectral_gap(opts.tolerance, opts.max_iterations);
    let (starts, start_set) = if op.states <= MIXING_ALL_STARTS_MAX_STATES {
        ((0..op.states).collect::<Vec<_>>(), "all".to_string())
    } else {
        (
            vec![0, op.states - 1],
            "all-minus, all-plus".to_string(),
        )
    };
    let mixing = op.mixing_times(&starts, &opts.epsilons, opts.max_mixing_steps);
    let mixing_time = opts
        .epsilons
        .iter()
        .zip(mixing)
        .map(|(e, t)| (format!("{e}"), t))
        .collect();
    Ok(ChainAnalysis {
        states: op.states,
        spectral_gap: gap,
        iterations,
        converged,
        mixing_time,
        start_set,
    })
}

pub(crate) struct Operator {
    pub n: usize,
    pub states: usize,
    pub energy: Vec<(i32, i32)>,
    pub pi: Vec<f64>,
    /// `exp(-beta |d| / 2) / n` and `exp(-beta [d]_+) / n`, indexed by
    /// `(du + q) * 2 + (dn > 0)`.
    half: Vec<f64>,
    accept: Vec<f64>,
    q: i32,
}

impl Operator {
    pub fn new(g: &LatticeGraph, params: &ModelParams) -> Self {
        let energy = state_energies(g);
        Self::from_energies(g.len(), g.q() as i32, energy, params.h, params.beta)
    }

    pub fn from_energies(n: usize, q: i32, energy: Vec<(i32, i32)>, h: Field, beta: f64) -> Self {
        let hv = h.to_f64();
        let value = |e: (i32, i32)| ExactEnergy::new(e.0 as i64, e.1 as i64).value(h);
        let min = energy.iter().map(|&e| value(e)).fold(f64::INFINITY, f64::min);
        let mut pi: Vec<f64> = energy.iter().map(|&e| (-beta * (value(e) - min)).exp()).collect();
        let z: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= z);
        let mut half = vec![0.0; (4 * q as usize + 2) * 2];
        let mut accept = vec![0.0; half.len()];
        for du in -2 * q..=2 * q {
            for up in [false, true] {
                let d = du as f64 - if up { hv } else { -hv };
                let i = ((du + 2 * q) as usize) * 2 + up as usize;
                half[i] = (-beta * d.abs() / 2.0).exp() / n as f64;
                accept[i] = (-beta * d.max(0.0)).exp() / n as f64;
            }
        }
        Operator {
            n,
            states: 1 << n,
            energy,
            pi,
            half,
            accept,
            q,
        }
    }

    #[inline]
    fn slot(&self, x: usize, y: usize) -> usize {
        let (ex, ey) = (self.energy[x], self.energy[y]);
        let du = ey.0 - ex.0;
        ((du + 2 * self.q) as usize) * 2 + (ey.1 > ex.1) as usize
    }

    fn apply_symmetric(&self, v: &[f64], out: &mut [f64]) {
        let f = |x: usize| {
            let mut acc = 0.0;
            let mut stay = 1.0;
            for b in 0..self.n {
                let y = x ^ (1 << b);
                let s = self.slot(x, y);
                acc += self.half[s] * v[y];
                stay -= self.accept[s];
            }
            // Lazy version (S + I) / 2 keeps the spectrum in [0, 1].
            0.5 * (acc + stay * v[x]) + 0.5 * v[x]
        };
        self.fill(out, f);
    }

    /// Dirichlet form of `v` in the symmetrised picture divided by its norm.
    fn rayleigh_gap(&self, v: &[f64]) -> f64 {
        let mut num = 0.0;
        for x in 0..self.states {
            for b in 0..self.n {
                let y = x ^ (1 << b);
                if y < x {
                    continue;
                }
                let s = self.slot(x, y);
                let w = self.half[s] * self.n as f64;
                // The lower-energy endpoint carries the damping factor.
                let (hi, lo) = if self.pi[x] >= self.pi[y] { (x, y) } else { (y, x) };
                let d = v[hi] * w - v[lo];
                num += d * d / self.n as f64;
            }
        }
        let den: f64 = v.iter().map(|x| x * x).sum();
        num / den
    }

    /// `1 - lambda_2` of the symmetrised transition matrix. Dense
    /// eigendecomposition up to [`DENSE_MAX_STATES`], deflated power
    /// iteration on the lazy chain above.
    pub fn spectral_gap(&self, tol: f64, max_iter: usize) -> (f64, usize, bool) {
        if self.states <= DENSE_MAX_STATES {
            return (self.dense_gap(), 0, true);
        }
        self.power_gap(tol, max_iter)
    }

    fn power_gap(&self, tol: f64, max_iter: usize) -> (f64, usize, bool) {
        let phi: Vec<f64> = self.pi.iter().map(|x| x.sqrt()).collect();
        // Deterministic start with no special alignment.
        let mut v: Vec<f64> = (0..self.states)
            .map(|x| ((x as f64 + 1.0) * 0.618_033_988_749_894_9).fract() - 0.5)
            .collect();
        let deflate = |v: &mut [f64]| {
            let dot: f64 = v.iter().zip(&phi).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(&phi).for_each(|(a, b)| *a -= dot * b);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        };
        deflate(&mut v);
        let mut w = vec![0.0; self.states];
        let mut prev = f64::INFINITY;
        let mut stable = 0;
        for it in 1..=max_iter {
            self.apply_symmetric(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
            deflate(&mut v);
            if it % 16 == 0 {
                let g = self.rayleigh_gap(&v);
                if (g - prev).abs() <= tol * g.abs().max(1e-300) {
                    stable += 1;
                    if stable >= 3 {
                        return (g, it, true);
                    }
                } else {
                    stable = 0;
                }
                prev = g;
            }
        }
        (self.rayleigh_gap(&v), max_iter, false)
    }

    fn fill(&self, out: &mut [f64], f: impl Fn(usize) -> f64 + Sync + Send) {
        if self.states < 1 << 12 {
            out.iter_mut().enumerate().for_each(|(x, o)| *o = f(x));
        } else {
            out.copy_from_slice(&par::map_range(self.states, f));
        }
    }

    fn dense_gap(&self) -> f64 {
        let m = DMatrix::from_fn(self.states, self.states, |x, y| {
            if x == y {
                1.0 - (0..self.n).map(|b| self.accept[self.slot(x, x ^ (1 << b))]).sum::<f64>()
            } else if (x ^ y).is_power_of_two() {
                self.half[self.slot(x, y)]
            } else {
                0.0
            }
        });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        1.0 - ev[1]
    }

    fn apply_transition(&self, mu: &[f64], out: &mut [f64]) {
        let f = |y: usize| {
            let mut acc = 0.0;
            let mut stay = 1.0;
            for b in 0..self.n {
                let x = y ^ (1 << b);
                acc += mu[x] * self.accept[self.slot(x, y)];
                stay -= self.accept[self.slot(y, x)];
            }
            acc + stay * mu[y]
        };
        self.fill(out, f);
    }

    /// Smallest `t` with `max_x TV(P^t(x, .), pi) <= eps` for each `eps`,
    /// maximised over `starts`.
    pub fn mixing_times(&self, starts: &[usize], eps: &[f64], cap: u64) -> Vec<Option<u64>> {
        let mut worst: Vec<Option<u64>> = vec![Some(0); eps.len()];
        for &x0 in starts {
            let mut mu = vec![0.0; self.states];
            mu[x0] = 1.0;
            let mut next = vec![0.0; self.states];
            let mut found: Vec<Option<u64>> = vec![None; eps.len()];
            let mut t = 0u64;
            loop {
                let tv = 0.5 * mu.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).sum::<f64>();
                for (i, &e) in eps.iter().enumerate() {
                    if found[i].is_none() && tv <= e {
                        found[i] = Some(t);
                    }
                }
                if found.iter().all(Option::is_some) || t >= cap {
                    break;
                }
                self.apply_transition(&mu, &mut next);
                std::mem::swap(&mut mu, &mut next);
                t += 1;
            }
            for i in 0..eps.len() {
                worst[i] = match (worst[i], found[i]) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
        }
        worst
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub exponential: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailTable {
    pub samples: usize,
    pub uncensored: usize,
    pub t_hat: f64,
    pub rows: Vec<TailRow>,
}

pub const TAIL_MIN_SAMPLES: usize = 50;

/// Empirical `(1 - 1/e)`-quantile: the smallest observed `n` with
/// `P(tau <= n) >= 1 - 1/e`. Censored samples count as larger than any
/// observed value.
pub fn t_beta_estimate(samples: &[HittingTimeSample]) -> Option<f64> {
    let mut obs: Vec<u64> = samples.iter().filter(|s| !s.censored).map(|s| s.steps).collect();
    obs.sort_unstable();
    let need = ((1.0 - (-1f64).exp()) * samples.len() as f64).ceil() as usize;
    if need == 0 || need > obs.len() {
        return None;
    }
    Some(obs[need - 1] as f64)
}

/// `P(tau > t T)` against `exp(-t)` at `t` in {0, 0.5, 1, 2}. `t_hat`
/// defaults to [`t_beta_estimate`].
pub fn tail_statistics(samples: &[HittingTimeSample], t_hat: Option<f64>) -> Result<TailTable> {
    let uncensored = samples.iter().filter(|s| !s.censored).count();
    if uncensored < TAIL_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: TAIL_MIN_SAMPLES,
            got: uncensored,
        });
    }
    let t_hat = match t_hat.or_else(|| t_beta_estimate(samples)) {
        Some(t) => t,
        None => {
            return Err(Error::InsufficientSamples {
                needed: samples.len(),
                got: uncensored,
            })
        }
    };
    let n = samples.len() as f64;
    let rows = [0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|&t| {
            let cut = t * t_hat;
            let above = samples.iter().filter(|s| s.censored || s.steps as f64 > cut).count();
            let empirical = above as f64 / n;
            let exponential = (-t as f64).exp();
            TailRow {
                t,
                empirical,
                exponential,
                deviation: empirical - exponential,
            }
        })
        .collect();
    Ok(TailTable {
        samples: samples.len(),
        uncensored,
        t_hat,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build;

    fn params(p: u32, q: u32, n: u32, h: &str, beta: f64) -> ModelParams {
        ModelParams::new(p, q, n, h.parse().unwrap(), beta).unwrap()
    }

    #[test]
    fn first_flip_acceptance() {
        let h: Field = "2.24".parse().unwrap();
        let d = ExactEnergy::new(5, 1);
        let a = Metropolis::acceptance(d, h, 1.5);
        assert!((a - (-1.5f64 * (5.0 - 2.24)).exp()).abs() < 1e-15);
        assert_eq!(Metropolis::acceptance(ExactEnergy::new(-1, 0), h, 9.0), 1.0);
    }

    #[test]
    fn step_is_deterministic() {
        let g = build(5, 5, 2).unwrap();
        let p = params(5, 5, 2, "2.24", 1.0);
        let run = || {
            let mut st = ChainState::new(&g, SpinConfig::all_minus(g.len()), 42).unwrap();
            let chain = Metropolis::new(&g, p.h, p.beta);
            for _ in 0..10_000 {
                chain.step(&mut st);
            }
            st
        };
        let (a, b) = (run(), run());
        assert_eq!(a.config, b.config);
        assert_eq!(a.energy, b.energy);
        assert_eq!(a.energy, crate::energy::delta_h(&g, &a.config).unwrap());
        assert_eq!(a.time, 10_000);
    }

    #[test]
    fn any_target_hits_in_one() {
        let g = build(4, 5, 0).unwrap();
        let p = params(4, 5, 0, "1", 1.0);
        let s = hit(&g, &p, &SpinConfig::all_minus(4), Target::AnyState, 10, 1, 3).unwrap();
        assert!(s.iter().all(|x| x.steps == 1 && !x.censored));
    }

    #[test]
    fn beta_zero_hits_reproducibly() {
        let g = build(4, 5, 0).unwrap();
        let p = params(4, 5, 0, "1", 0.0);
        let a = hit(&g, &p, &SpinConfig::all_minus(4), Target::AllPlus, 1_000_000, 7, 8).unwrap();
        let b = hit(&g, &p, &SpinConfig::all_minus(4), Target::AllPlus, 1_000_000, 7, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| !x.censored));
    }

    #[test]
    fn censoring_reports_max_steps() {
        let g = build(5, 5, 1).unwrap();
        let p = params(5, 5, 1, "1", 10.0);
        let s = hit(&g, &p, &SpinConfig::all_minus(g.len()), Target::AllPlus, 500, 3, 2).unwrap();
        assert!(s.iter().all(|x| x.censored && x.steps == 500));
    }

    #[test]
    fn audit_has_no_violations() {
        let g = build(4, 5, 1).unwrap();
        let r = detailed_balance_audit(&g, &params(4, 5, 1, "19/10", 2.0), 2000, 11);
        assert_eq!(r.violations, 0);
        assert_eq!(r.audits, 2000);
    }

    #[test]
    fn infinite_temperature_gap() {
        for n in [0u32] {
            let g = build(4, 5, n).unwrap();
            let a = exact_chain_analysis(&g, &params(4, 5, n, "1", 0.0)).unwrap();
            assert!((a.spectral_gap - 2.0 / g.len() as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_needs_samples() {
        let s: Vec<HittingTimeSample> = (0..10)
            .map(|i| HittingTimeSample {
                replica: i,
                seed: 0,
                steps: i + 1,
                censored: false,
                target: Target::AllPlus,
            })
            .collect();
        assert!(matches!(tail_statistics(&s, None), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn tail_at_zero_is_one() {
        let s: Vec<HittingTimeSample> = (0..60)
            .map(|i| HittingTimeSample {
                replica: i,
                seed: 0,
                steps: 10 + i,
                censored: false,
                target: Target::AllPlus,
            })
            .collect();
        let t = tail_statistics(&s, None).unwrap();
        assert_eq!(t.rows[0].empirical, 1.0);
    }

    #[test]
    fn power_iteration_matches_dense() {
        let g = build(4, 5, 0).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            let op = Operator::new(&g, &params(4, 5, 0, "1", beta));
            let (gp, _, conv) = op.power_gap(1e-13, 2_000_000);
            assert!(conv);
            assert!((gp - op.dense_gap()).abs() < 1e-9, "beta {beta}: {gp} vs {}", op.dense_gap());
        }
    }
}
