//! Cluster shapes about the origin face and minimal perimeters.

use super::reference_path;
use crate::energy::{clusters, SpinConfig};
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::lattice::{build, Class, LatticeGraph};
use crate::par;
use serde::Serialize;
use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Regular,
    Standard,
    Other,
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Shape::Regular => "regular",
            Shape::Standard => "standard",
            Shape::Other => "other",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    /// Radius of the largest origin ball inside the cluster.
    pub b_max: u32,
    /// Radius of the smallest origin ball containing it.
    pub b_min: u32,
    /// Occupied strips of the annulus as `(layer, start index, length)`.
    pub occupied_strips: Vec<(u32, usize, usize)>,
    pub empty_strips: Vec<(u32, usize, usize)>,
    pub s_e: usize,
    pub n_o: usize,
    pub n_e: usize,
    /// Occupied I vertices of the annulus.
    pub occupied_interior: usize,
    pub o_max: usize,
    pub connected: bool,
    pub classification: Shape,
    pub notes: Vec<String>,
}

/// Cyclic runs of equal value in one layer as `(start, length)`.
fn runs(bits: &[bool], value: bool) -> Vec<(usize, usize)> {
    let n = bits.len();
    if bits.iter().all(|&b| b == value) {
        return vec![(0, n)];
    }
    // Start just after a position of the other value.
    let pivot = bits.iter().position(|&b| b != value).unwrap();
    let mut out = Vec::new();
    let mut j = 1;
    while j <= n {
        let i = (pivot + j) % n;
        if bits[i] == value {
            let start = i;
            let mut len = 0;
            while j <= n && bits[(pivot + j) % n] == value {
                len += 1;
                j += 1;
            }
            out.push((start, len));
        } else {
            j += 1;
        }
    }
    out
}

/// Largest number of I vertices in a cyclic window of `len` consecutive
/// vertices of layer `k`.
fn o_max_in_layer(g: &LatticeGraph, k: u32, len: usize) -> usize {
    let range = g.layer_range(k);
    let n = range.len();
    if len >= n {
        return range.filter(|&v| g.class(v) == Class::I).count();
    }
    let is_i: Vec<usize> = range.map(|v| (g.class(v) == Class::I) as usize).collect();
    let mut cur: usize = is_i[..len].iter().sum();
    let mut best = cur;
    for s in 1..n {
        cur = cur + is_i[(s + len - 1) % n] - is_i[s - 1];
        best = best.max(cur);
    }
    best
}

/// Classifies the plus set of `cluster` with respect to balls about the
/// origin face.
pub fn shape_classify(g: &LatticeGraph, cluster: &SpinConfig) -> Result<ShapeReport> {
    if cluster.len() != g.len() {
        return Err(Error::SizeMismatch {
            config: cluster.len(),
            lattice: g.len(),
        });
    }
    let full = |k: u32| g.layer_range(k).all(|v| cluster.get(v));
    let any = |k: u32| g.layer_range(k).any(|v| cluster.get(v));
    let mut m = 0;
    while m <= g.outer() && full(m) {
        m += 1;
    }
    let mut big_m = g.outer() + 1;
    while big_m > 0 && !any(big_m - 1) {
        big_m -= 1;
    }
    let mut notes = Vec::new();
    let mut occupied_strips = Vec::new();
    let mut empty_strips = Vec::new();
    let (mut n_o, mut n_e, mut occupied_interior) = (0, 0, 0);
    for k in m..big_m {
        let bits: Vec<bool> = g.layer_range(k).map(|v| cluster.get(v)).collect();
        for (s, l) in runs(&bits, true) {
            occupied_strips.push((k, s, l));
        }
        for (s, l) in runs(&bits, false) {
            empty_strips.push((k, s, l));
        }
        for v in g.layer_range(k) {
            if cluster.get(v) {
                n_o += 1;
                if g.class(v) == Class::I {
                    occupied_interior += 1;
                }
            } else {
                n_e += 1;
            }
        }
    }
    let s_e = empty_strips.len();
    let o_max = (m..big_m).map(|k| o_max_in_layer(g, k, n_o)).max().unwrap_or(0);
    let connected = clusters(g, cluster)?.clusters.len() <= 1;
    let classification = if !connected {
        notes.push("cluster is not connected".into());
        Shape::Other
    } else if s_e == 0 && big_m == m {
        Shape::Regular
    } else if s_e >= 1 && occupied_interior == o_max + s_e - 1 {
        Shape::Standard
    } else {
        if m == 0 && !cluster.is_all_minus() {
            notes.push("no origin ball inside; balls about other centres are not examined".into());
        }
        Shape::Other
    };
    Ok(ShapeReport {
        b_max: m,
        b_min: big_m,
        occupied_strips,
        empty_strips,
        s_e,
        n_o,
        n_e,
        occupied_interior,
        o_max,
        connected,
        classification,
        notes,
    })
}

pub const MIN_PERIMETER_MAX_AREA: usize = 12;

#[derive(Clone, Debug, Serialize)]
pub struct MinPerimeterRow {
    pub area: usize,
    pub min_perimeter: i64,
    /// Sorted vertex ids of the ball patch around the root.
    pub witness: Vec<usize>,
    /// Number of rooted connected sets of this area.
    pub count: u64,
    pub reference_perimeter: Option<i64>,
    pub matches: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinPerimeterTable {
    pub p: u32,
    pub q: u32,
    pub rows: Vec<MinPerimeterRow>,
    pub flags: Vec<Flag>,
}

/// Patch of the tiling: the ball of graph radius `radius` about vertex 0.
struct Patch {
    adj: Vec<Vec<u32>>,
    global: Vec<usize>,
}

fn patch(p: u32, q: u32, radius: u32) -> Result<Patch> {
    let g = build(p, q, radius)?;
    let mut dist = vec![u32::MAX; g.len()];
    let mut local = vec![u32::MAX; g.len()];
    let mut global = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    dist[0] = 0;
    while let Some(v) = queue.pop_front() {
        local[v] = global.len() as u32;
        global.push(v);
        if dist[v] == radius {
            continue;
        }
        g.for_each_neighbor(v, |w| {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        });
    }
    let adj = global
        .iter()
        .map(|&v| {
            let mut a = Vec::new();
            g.for_each_neighbor(v, |w| {
                if local[w] != u32::MAX {
                    a.push(local[w]);
                }
            });
            a
        })
        .collect();
    Ok(Patch { adj, global })
}

#[derive(Clone)]
struct Best {
    edges: Vec<i64>,
    witness: Vec<Vec<usize>>,
    count: Vec<u64>,
}

impl Best {
    fn new(max_area: usize) -> Self {
        Best {
            edges: vec![-1; max_area + 1],
            witness: vec![Vec::new(); max_area + 1],
            count: vec![0; max_area + 1],
        }
    }

    fn offer(&mut self, edges: i64, members: &[u32], patch: &Patch) {
        let a = members.len();
        self.count[a] += 1;
        if edges < self.edges[a] {
            return;
        }
        let mut w: Vec<usize> = members.iter().map(|&i| patch.global[i as usize]).collect();
        w.sort_unstable();
        if edges > self.edges[a] || w < self.witness[a] {
            self.edges[a] = edges;
            self.witness[a] = w;
        }
    }

    fn merge(mut self, other: Best) -> Best {
        for a in 0..self.edges.len() {
            self.count[a] += other.count[a];
            let better = other.edges[a] > self.edges[a]
                || (other.edges[a] == self.edges[a] && other.witness[a] < self.witness[a]);
            if better {
                self.edges[a] = other.edges[a];
                self.witness[a] = other.witness[a].clone();
            }
        }
        self
    }
}

struct Search<'a> {
    patch: &'a Patch,
    max_area: usize,
    marked: Vec<bool>,
    inside: Vec<bool>,
    members: Vec<u32>,
    best: Best,
}

impl Search<'_> {
    // Redelmeier enumeration of connected sets containing the root.
    fn grow(&mut self, untried: &mut Vec<u32>, edges: i64) {
        while let Some(v) = untried.pop() {
            let e = edges
                + self.patch.adj[v as usize]
                    .iter()
                    .filter(|&&w| self.inside[w as usize])
                    .count() as i64;
            self.add_and_recurse(v, untried, e);
        }
    }

    fn add_and_recurse(&mut self, v: u32, untried: &[u32], edges: i64) {
        self.inside[v as usize] = true;
        self.members.push(v);
        self.best.offer(edges, &self.members, self.patch);
        if self.members.len() < self.max_area {
            let fresh: Vec<u32> = self.patch.adj[v as usize]
                .iter()
                .copied()
                .filter(|&w| !self.marked[w as usize])
                .collect();
            for &w in &fresh {
                self.marked[w as usize] = true;
            }
            let mut next = untried.to_vec();
            next.extend_from_slice(&fresh);
            self.grow(&mut next, edges);
            for &w in &fresh {
                self.marked[w as usize] = false;
            }
        }
        self.members.pop();
        self.inside[v as usize] = false;
    }
}

/// Minimal perimeter `q*n - 2*edges` over connected sets of `n` vertices of
/// the infinite tiling for `n <= max_area`, by exhaustive enumeration of the
/// sets containing vertex 0 inside its ball of graph radius
/// `ceil((max_area-1)/2)` (every connected set has a vertex within that
/// distance of all its members). Reference-path prefixes of `g` are compared
/// at every area they reach.
pub fn min_perimeter_table(g: &LatticeGraph, max_area: usize) -> Result<MinPerimeterTable> {
    if max_area > MIN_PERIMETER_MAX_AREA {
        return Err(Error::Capacity {
            what: "minimal-perimeter area",
            needed: max_area as u128,
            cap: MIN_PERIMETER_MAX_AREA as u128,
        });
    }
    let (p, q) = (g.p(), g.q());
    let radius = (max_area.saturating_sub(1) as u32).div_ceil(2).max(1);
    let patch = patch(p, q, radius)?;
    let root_adj: Vec<u32> = patch.adj[0].clone();
    let branches = root_adj.len();
    let run = |first: Option<usize>| -> Best {
        let mut s = Search {
            patch: &patch,
            max_area,
            marked: vec![false; patch.adj.len()],
            inside: vec![false; patch.adj.len()],
            members: Vec::new(),
            best: Best::new(max_area),
        };
        s.marked[0] = true;
        s.inside[0] = true;
        s.members.push(0);
        match first {
            None => s.best.offer(0, &[0], &patch),
            Some(idx) if max_area > 1 => {
                for &w in &root_adj {
                    s.marked[w as usize] = true;
                }
                // Branch `idx` of the root loop: later neighbours are spent.
                let v = root_adj[idx];
                s.add_and_recurse(v, &root_adj[..idx], 1);
            }
            Some(_) => {}
        }
        s.best
    };
    let mut parts = vec![run(None)];
    parts.extend(par::map_range(branches, |i| run(Some(i))));
    let best = parts.into_iter().reduce(Best::merge).expect("root branch");

    let mut flags = Vec::new();
    let traces = reference_path(g)?;
    let mut reference = vec![None; max_area + 1];
    reference[0] = Some(0);
    for t in &traces {
        let before = g.layer_offset(t.layer);
        for (k, s) in t.steps.iter().enumerate() {
            let a = before + k + 1;
            if a <= max_area {
                reference[a] = Some((t.base + s.cum).u);
            }
        }
    }
    let rows: Vec<MinPerimeterRow> = (1..=max_area)
        .map(|a| {
            let min = q as i64 * a as i64 - 2 * best.edges[a];
            let matches = reference[a].map(|r| r == min);
            if matches == Some(false) {
                flags.push(Flag::new(
                    "minperim-reference",
                    format!(
                        "area {a}: reference path prefix has perimeter {}, minimum is {min}",
                        reference[a].unwrap()
                    ),
                ));
            }
            MinPerimeterRow {
                area: a,
                min_perimeter: min,
                witness: best.witness[a].clone(),
                count: best.count[a],
                reference_perimeter: reference[a],
                matches,
            }
        })
        .collect();
    if reference[max_area].is_none() {
        flags.push(Flag::new(
            "minperim-short-path",
            format!("reference path of N = {} does not reach area {max_area}", g.outer()),
        ));
    }
    Ok(MinPerimeterTable { p, q, rows, flags })
}
