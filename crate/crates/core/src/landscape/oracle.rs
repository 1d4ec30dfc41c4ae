//! Exhaustive energy landscape of small patches by a union-find sweep over
//! all 2^|Λ| configurations in increasing energy.

use crate::energy::{ExactEnergy, SpinConfig};
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::lattice::LatticeGraph;
use crate::par;
use crate::params::Field;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

pub const EXHAUSTIVE_MAX_SITES: usize = 24;

const NONE: u32 = u32::MAX;

/// Energies bucketed by `(u, n)`; all configurations share `0 <= u <= q|Λ|`.
pub(crate) struct EnergyTable {
    pub sites: usize,
    pub n_stride: usize,
    /// Bucket `u * n_stride + n` of every state.
    pub bucket: Vec<u16>,
}

impl EnergyTable {
    pub fn new(g: &LatticeGraph) -> Result<Self> {
        let n = g.len();
        if n > EXHAUSTIVE_MAX_SITES {
            return Err(Error::Capacity {
                what: "exhaustive landscape sites",
                needed: n as u128,
                cap: EXHAUSTIVE_MAX_SITES as u128,
            });
        }
        let q = g.q() as usize;
        let n_stride = n + 1;
        if (q * n + 1) * n_stride > u16::MAX as usize {
            return Err(Error::Overflow("energy bucket index"));
        }
        let mut lower: Vec<u32> = vec![0; n];
        for (v, m) in lower.iter_mut().enumerate() {
            g.for_each_neighbor(v, |w| {
                if w < v {
                    *m |= 1 << w;
                }
            });
        }
        let total = 1usize << n;
        let chunk = 1usize << 14;
        let parts = par::map_range(total.div_ceil(chunk), |c| {
            let lo = c * chunk;
            (lo..(lo + chunk).min(total))
                .map(|s| {
                    let s32 = s as u32;
                    let mut pp = 0usize;
                    let mut rest = s32;
                    while rest != 0 {
                        let v = rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        pp += (lower[v] & s32).count_ones() as usize;
                    }
                    let np = s32.count_ones() as usize;
                    ((q * np - 2 * pp) * n_stride + np) as u16
                })
                .collect::<Vec<u16>>()
        });
        Ok(EnergyTable {
            sites: n,
            n_stride,
            bucket: parts.concat(),
        })
    }

    #[inline]
    pub fn energy(&self, s: usize) -> ExactEnergy {
        let b = self.bucket[s] as usize;
        ExactEnergy::new((b / self.n_stride) as i64, (b % self.n_stride) as i64)
    }

    pub fn buckets(&self) -> usize {
        (u16::MAX as usize) + 1
    }

    /// States sorted by `(energy at h, state id)` together with the start of
    /// every level of equal energy.
    pub fn sorted(&self, h: Field) -> (Vec<u32>, Vec<usize>) {
        let nb = self.buckets();
        let mut count = vec![0usize; nb];
        for &b in &self.bucket {
            count[b as usize] += 1;
        }
        let key = |b: usize| ExactEnergy::new((b / self.n_stride) as i64, (b % self.n_stride) as i64).key(h);
        let mut used: Vec<usize> = (0..nb).filter(|&b| count[b] > 0).collect();
        used.sort_by_key(|&b| (key(b), b));
        let mut start = vec![0usize; nb];
        let mut acc = 0;
        for &b in &used {
            start[b] = acc;
            acc += count[b];
        }
        let mut order = vec![0u32; self.bucket.len()];
        let mut fill = start.clone();
        for (s, &b) in self.bucket.iter().enumerate() {
            order[fill[b as usize]] = s as u32;
            fill[b as usize] += 1;
        }
        // Buckets with equal energy form one level, ordered by state id.
        let mut levels = Vec::new();
        let mut i = 0;
        while i < used.len() {
            let mut j = i + 1;
            while j < used.len() && key(used[j]) == key(used[i]) {
                j += 1;
            }
            let lo = start[used[i]];
            let hi = start[used[j - 1]] + count[used[j - 1]];
            if j - i > 1 {
                order[lo..hi].sort_unstable();
            }
            levels.push(lo);
            i = j;
        }
        levels.push(order.len());
        (order, levels)
    }
}

/// Configurations reaching the minimum energy at `h`.
pub fn global_minimizers(g: &LatticeGraph, h: Field) -> Result<(ExactEnergy, Vec<u64>)> {
    let t = EnergyTable::new(g)?;
    let mut best = i128::MAX;
    let mut arg = Vec::new();
    for s in 0..t.bucket.len() {
        let k = t.energy(s).key(h);
        if k < best {
            best = k;
            arg.clear();
        }
        if k == best {
            arg.push(s as u64);
        }
    }
    Ok((t.energy(arg[0] as usize), arg))
}

#[derive(Clone, Debug, Default)]
pub struct LandscapeRequest {
    pub phi_pairs: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiResult {
    pub a: u64,
    pub b: u64,
    pub phi: ExactEnergy,
    /// State at which the two first become connected.
    pub saddle: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LandscapeReport {
    pub sites: usize,
    pub states: u64,
    pub stable: Vec<u64>,
    pub stable_energy: ExactEnergy,
    pub gamma_max: Option<ExactEnergy>,
    pub metastable_count: u64,
    /// Smallest state ids of the metastable set, at most 64 of them.
    pub metastable: Vec<u64>,
    pub phi: Vec<PhiResult>,
    pub flags: Vec<Flag>,
    #[serde(skip)]
    saddle: Vec<u32>,
    #[serde(skip)]
    table: Option<EnergyTableHandle>,
}

/// Keeps the energy buckets alive for lookups after the sweep.
#[derive(Clone)]
struct EnergyTableHandle(std::sync::Arc<EnergyTable>);

impl std::fmt::Debug for EnergyTableHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EnergyTable({} sites)", self.0.sites)
    }
}

impl LandscapeReport {
    pub fn energy(&self, state: u64) -> ExactEnergy {
        self.table.as_ref().expect("table").0.energy(state as usize)
    }

    /// `V_sigma`, or `None` for stable states.
    pub fn stability_level(&self, state: u64) -> Option<ExactEnergy> {
        match self.saddle[state as usize] {
            NONE => None,
            s => Some(self.energy(s as u64) - self.energy(state)),
        }
    }

    /// State whose addition first joined `state` to lower energy.
    pub fn escape_saddle(&self, state: u64) -> Option<u64> {
        match self.saddle[state as usize] {
            NONE => None,
            s => Some(s as u64),
        }
    }
}

struct Sweep {
    parent: Vec<u32>,
    rank: Vec<u8>,
    /// One member of the circular list of unresolved minimum states.
    rep: Vec<u32>,
    next: Vec<u32>,
    saddle: Vec<u32>,
    active: Vec<u64>,
}

impl Sweep {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    #[inline]
    fn is_active(&self, s: usize) -> bool {
        self.active[s >> 6] >> (s & 63) & 1 == 1
    }
}

pub fn exhaustive_landscape(g: &LatticeGraph, h: Field, req: &LandscapeRequest) -> Result<LandscapeReport> {
    exhaustive_landscape_with(g, h, req)
}

/// Union-find sweep over all states in increasing energy. Every component
/// keeps the list of its unresolved minimum-energy states; when it merges
/// into a component with a strictly lower minimum those states receive the
/// current state as their saddle. Equal energies are processed as one
/// level: all are activated before any union.
pub fn exhaustive_landscape_with(g: &LatticeGraph, h: Field, req: &LandscapeRequest) -> Result<LandscapeReport> {
    let table = EnergyTable::new(g)?;
    let n = table.sites;
    let total = 1usize << n;
    for &(a, b) in &req.phi_pairs {
        if a as usize >= total || b as usize >= total {
            return Err(Error::Domain(format!("state ({a}, {b}) outside 0..2^{n}")));
        }
    }
    let (order, levels) = table.sorted(h);
    let mut sw = Sweep {
        parent: (0..total as u32).collect(),
        rank: vec![0; total],
        rep: (0..total as u32).collect(),
        next: (0..total as u32).collect(),
        saddle: vec![NONE; total],
        active: vec![0; total.div_ceil(64)],
    };
    let key = |s: u32| table.energy(s as usize).key(h);
    let mut phi: Vec<Option<PhiResult>> = vec![None; req.phi_pairs.len()];

    for w in levels.windows(2) {
        let level = &order[w[0]..w[1]];
        for &s in level {
            sw.active[s as usize >> 6] |= 1 << (s & 63);
        }
        for &s in level {
            for b in 0..n {
                let t = s ^ (1 << b);
                if !sw.is_active(t as usize) {
                    continue;
                }
                let (ra, rb) = (sw.find(s), sw.find(t));
                if ra == rb {
                    continue;
                }
                let (ka, kb) = (key(sw.rep[ra as usize]), key(sw.rep[rb as usize]));
                let keep_rep = if ka < kb {
                    resolve(&mut sw, rb, s);
                    sw.rep[ra as usize]
                } else if kb < ka {
                    resolve(&mut sw, ra, s);
                    sw.rep[rb as usize]
                } else {
                    // Splice the two circular lists.
                    let (x, y) = (sw.rep[ra as usize] as usize, sw.rep[rb as usize] as usize);
                    sw.next.swap(x, y);
                    x as u32
                };
                let root = if sw.rank[ra as usize] < sw.rank[rb as usize] {
                    sw.parent[ra as usize] = rb;
                    rb
                } else {
                    if sw.rank[ra as usize] == sw.rank[rb as usize] {
                        sw.rank[ra as usize] += 1;
                    }
                    sw.parent[rb as usize] = ra;
                    ra
                };
                sw.rep[root as usize] = keep_rep;
            }
        }
        for (i, &(a, b)) in req.phi_pairs.iter().enumerate() {
            if phi[i].is_none()
                && sw.is_active(a as usize)
                && sw.is_active(b as usize)
                && sw.find(a as u32) == sw.find(b as u32)
            {
                let s = level[0];
                phi[i] = Some(PhiResult {
                    a,
                    b,
                    phi: table.energy(s as usize),
                    saddle: if a == b { a } else { s as u64 },
                });
            }
        }
    }

    let mut stable = Vec::new();
    let mut gamma: Option<(i128, ExactEnergy)> = None;
    for s in 0..total {
        match sw.saddle[s] {
            NONE => stable.push(s as u64),
            sd => {
                let v = table.energy(sd as usize) - table.energy(s);
                let k = v.key(h);
                if gamma.map_or(true, |(gk, _)| k > gk) {
                    gamma = Some((k, v));
                }
            }
        }
    }
    let gamma_max = gamma.map(|(_, v)| v);
    let mut metastable = Vec::new();
    let mut metastable_count = 0u64;
    if let Some((gk, _)) = gamma {
        for s in 0..total {
            let sd = sw.saddle[s];
            if sd != NONE && (table.energy(sd as usize) - table.energy(s)).key(h) == gk {
                metastable_count += 1;
                if metastable.len() < 64 {
                    metastable.push(s as u64);
                }
            }
        }
    }
    let stable_energy = table.energy(stable[0] as usize);
    let Sweep { saddle, .. } = sw;
    Ok(LandscapeReport {
        sites: n,
        states: total as u64,
        stable,
        stable_energy,
        gamma_max,
        metastable_count,
        metastable,
        phi: phi.into_iter().map(|p| p.expect("the state graph is connected")).collect(),
        flags: vec![],
        saddle,
        table: Some(EnergyTableHandle(std::sync::Arc::new(table))),
    })
}

fn resolve(sw: &mut Sweep, root: u32, saddle: u32) {
    let start = sw.rep[root as usize];
    let mut x = start;
    loop {
        sw.saddle[x as usize] = saddle;
        x = sw.next[x as usize];
        if x == start {
            break;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifoldSlice {
    pub plus_count: usize,
    pub min_energy: ExactEnergy,
    /// Minimising states as sorted plus-id lists, at most 64 of them.
    pub argmin: Vec<Vec<usize>>,
    pub argmin_count: u64,
    pub exhaustive: bool,
    pub examined: u64,
}

pub const MANIFOLD_EXHAUSTIVE_CAP: u64 = 1 << 26;

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Minimum energy among configurations with exactly `n` pluses. Exhaustive
/// when the slice has at most [`MANIFOLD_EXHAUSTIVE_CAP`] members (and
/// |Λ| <= 64); otherwise the minimum over `samples` random connected
/// clusters grown from random seeds, which is only an upper bound.
pub fn manifold_slice(g: &LatticeGraph, h: Field, n: usize, samples: u64, seed: u64) -> Result<ManifoldSlice> {
    let sites = g.len();
    if n > sites {
        return Err(Error::Domain(format!("{n} pluses on {sites} sites")));
    }
    let mut best_key = i128::MAX;
    let mut best = ExactEnergy::ZERO;
    let mut argmin: Vec<Vec<usize>> = Vec::new();
    let mut count = 0u64;
    let mut consider = |ids: Vec<usize>, e: ExactEnergy| {
        let k = e.key(h);
        if k < best_key {
            best_key = k;
            best = e;
            argmin.clear();
            count = 0;
        }
        if k == best_key {
            count += 1;
            if argmin.len() < 64 && !argmin.contains(&ids) {
                argmin.push(ids);
            }
        }
    };
    let size = binomial(sites as u64, n as u64);
    if sites <= 64 && size <= MANIFOLD_EXHAUSTIVE_CAP {
        let energy = |bits: u64| -> ExactEnergy {
            let cfg = SpinConfig::from_bits(sites, bits);
            crate::energy::delta_h_unchecked(g, &cfg)
        };
        if n == 0 {
            consider(vec![], ExactEnergy::ZERO);
        } else {
            // Gosper's hack over n-subsets in increasing order.
            let mut x: u64 = (1u64 << n) - 1;
            let limit = if sites == 64 { u64::MAX } else { 1u64 << sites };
            loop {
                let e = energy(x);
                let ids: Vec<usize> = (0..sites).filter(|&i| x >> i & 1 == 1).collect();
                consider(ids, e);
                let c = x & x.wrapping_neg();
                let r = x.wrapping_add(c);
                if r == 0 || (sites < 64 && r >= limit) {
                    break;
                }
                let nx = (((r ^ x) >> 2) / c) | r;
                if sites < 64 && nx >= limit {
                    break;
                }
                x = nx;
            }
        }
        return Ok(ManifoldSlice {
            plus_count: n,
            min_energy: best,
            argmin,
            argmin_count: count,
            exhaustive: true,
            examined: size,
        });
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..samples {
        let mut inside = vec![false; sites];
        let root = rng.gen_range(0..sites);
        inside[root] = true;
        let mut members = vec![root];
        let mut frontier: Vec<usize> = Vec::new();
        g.for_each_neighbor(root, |w| frontier.push(w));
        while members.len() < n {
            frontier.retain(|&w| !inside[w]);
            if frontier.is_empty() {
                break;
            }
            let w = frontier.swap_remove(rng.gen_range(0..frontier.len()));
            inside[w] = true;
            members.push(w);
            g.for_each_neighbor(w, |x| {
                if !inside[x] {
                    frontier.push(x)
                }
            });
        }
        if members.len() < n {
            continue;
        }
        members.sort_unstable();
        let cfg = SpinConfig::from_plus_ids(sites, members.iter().copied());
        let e = crate::energy::delta_h_unchecked(g, &cfg);
        consider(members, e);
    }
    Ok(ManifoldSlice {
        plus_count: n,
        min_energy: best,
        argmin,
        argmin_count: count,
        exhaustive: false,
        examined: samples,
    })
}
