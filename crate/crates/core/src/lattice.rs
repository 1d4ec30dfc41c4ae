//! Combinatorial construction of the ball B_{N+1} of a {p,q} tiling as
//! concentric layers of vertices around a central face.
//!
//! Vertices carry a global id equal to their position in the canonical
//! `(layer, index)` order. Adjacency is recovered from index arithmetic and
//! the parent / first-child tables; no edge list is stored.

use crate::error::{Error, Result};
use crate::params::{layer_count_table, Tiling};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

pub const DEFAULT_VERTEX_CAP: u64 = 10_000_000;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId {
    pub layer: u32,
    pub index: u32,
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.layer, self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    /// One edge down to the previous layer.
    I,
    /// No edge down.
    E,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::I => "I",
            Class::E => "E",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LatticeGraph {
    tiling: Tiling,
    outer: u32,
    offsets: Vec<usize>,
    layer_of: Vec<u16>,
    class: Vec<Class>,
    parent: Vec<u32>,
    first_child: Vec<u32>,
    up_degree: Vec<u8>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerDescriptor {
    pub size: usize,
    pub i_count: usize,
    pub e_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeDescriptor {
    pub p: u32,
    pub q: u32,
    #[serde(rename = "N")]
    pub outer: u32,
    pub vertices: usize,
    pub layers: Vec<LayerDescriptor>,
}

/// Builds with the default vertex cap.
pub fn build(p: u32, q: u32, outer: u32) -> Result<LatticeGraph> {
    build_with_cap(p, q, outer, DEFAULT_VERTEX_CAP)
}

pub fn build_with_cap(p: u32, q: u32, outer: u32, cap: u64) -> Result<LatticeGraph> {
    let t = Tiling::new(p, q)?;
    let table = layer_count_table(t, outer);
    let total: BigUint = table.iter().map(|c| c.total()).sum();
    let needed = total.to_u64().unwrap_or(u64::MAX);
    if needed > cap || needed > u32::MAX as u64 - 1 {
        return Err(Error::Capacity {
            what: "lattice vertices",
            needed: total.to_u128().unwrap_or(u128::MAX),
            cap: cap as u128,
        });
    }
    let n = needed as usize;
    let mut g = LatticeGraph {
        tiling: t,
        outer,
        offsets: Vec::with_capacity(outer as usize + 2),
        layer_of: Vec::with_capacity(n),
        class: Vec::with_capacity(n),
        parent: Vec::with_capacity(n),
        first_child: Vec::with_capacity(n),
        up_degree: Vec::with_capacity(n),
    };

    g.offsets.push(0);
    for _ in 0..p {
        g.push_vertex(0, Class::E, NONE, q - 2);
    }
    for k in 0..outer {
        let lo = g.offsets[k as usize];
        let hi = g.class.len();
        g.offsets.push(hi);
        for v in lo..hi {
            let ups = g.up_degree[v] as u32;
            for j in 0..ups {
                let child = g.class.len() as u32;
                if j == 0 {
                    g.first_child[v] = child;
                }
                g.push_vertex(k + 1, Class::I, v as u32, q - 3);
                let run = if j + 1 < ups { p - 3 } else { p - 4 };
                for _ in 0..run {
                    g.push_vertex(k + 1, Class::E, NONE, q - 2);
                }
            }
        }
    }
    g.offsets.push(g.class.len());
    debug_assert_eq!(g.class.len(), n);
    Ok(g)
}

impl LatticeGraph {
    fn push_vertex(&mut self, layer: u32, class: Class, parent: u32, ups: u32) {
        self.layer_of.push(layer as u16);
        self.class.push(class);
        self.parent.push(parent);
        self.first_child.push(NONE);
        self.up_degree.push(ups as u8);
    }

    pub fn tiling(&self) -> Tiling {
        self.tiling
    }

    pub fn p(&self) -> u32 {
        self.tiling.p
    }

    pub fn q(&self) -> u32 {
        self.tiling.q
    }

    /// Index N of the outermost layer.
    pub fn outer(&self) -> u32 {
        self.outer
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn layer_size(&self, k: u32) -> usize {
        self.offsets[k as usize + 1] - self.offsets[k as usize]
    }

    pub fn layer_offset(&self, k: u32) -> usize {
        self.offsets[k as usize]
    }

    /// Global ids of layer `k`, in cyclic order.
    pub fn layer_range(&self, k: u32) -> std::ops::Range<usize> {
        self.offsets[k as usize]..self.offsets[k as usize + 1]
    }

    pub fn id(&self, v: VertexId) -> Result<usize> {
        if v.layer > self.outer || v.index as usize >= self.layer_size(v.layer) {
            return Err(Error::UnknownVertex {
                layer: v.layer,
                index: v.index,
            });
        }
        Ok(self.offsets[v.layer as usize] + v.index as usize)
    }

    pub fn vertex(&self, id: usize) -> VertexId {
        let layer = self.layer_of[id] as u32;
        VertexId {
            layer,
            index: (id - self.offsets[layer as usize]) as u32,
        }
    }

    pub fn layer_of(&self, id: usize) -> u32 {
        self.layer_of[id] as u32
    }

    pub fn class(&self, id: usize) -> Class {
        self.class[id]
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        match self.parent[id] {
            NONE => None,
            x => Some(x as usize),
        }
    }

    /// Number of edges from `id` to the next layer out, whether or not that
    /// layer belongs to the patch.
    pub fn up_degree(&self, id: usize) -> u32 {
        self.up_degree[id] as u32
    }

    /// Children of `id` in layer+1, in cyclic order. Empty in layer N.
    pub fn children(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        let fc = self.first_child[id];
        let n = if fc == NONE { 0 } else { self.up_degree[id] as usize };
        let step = self.tiling.p as usize - 2;
        (0..n).map(move |j| fc as usize + j * step)
    }

    pub fn next_in_layer(&self, id: usize) -> usize {
        let k = self.layer_of[id] as usize;
        let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
        if id + 1 == hi {
            lo
        } else {
            id + 1
        }
    }

    pub fn prev_in_layer(&self, id: usize) -> usize {
        let k = self.layer_of[id] as usize;
        let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
        if id == lo {
            hi - 1
        } else {
            id - 1
        }
    }

    /// Calls `f` once per neighbour inside the patch.
    #[inline]
    pub fn for_each_neighbor(&self, id: usize, mut f: impl FnMut(usize)) {
        f(self.prev_in_layer(id));
        f(self.next_in_layer(id));
        let par = self.parent[id];
        if par != NONE {
            f(par as usize);
        }
        let fc = self.first_child[id];
        if fc != NONE {
            let step = self.tiling.p as usize - 2;
            for j in 0..self.up_degree[id] as usize {
                f(fc as usize + j * step);
            }
        }
    }

    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.tiling.q as usize);
        self.for_each_neighbor(id, |w| out.push(w));
        out
    }

    pub fn internal_degree(&self, id: usize) -> u32 {
        let mut d = 0;
        self.for_each_neighbor(id, |_| d += 1);
        d
    }

    /// Frozen minus neighbours outside the patch: the up-edges of layer N.
    #[inline]
    pub fn exposure(&self, id: usize) -> u32 {
        if self.layer_of[id] as u32 == self.outer {
            self.up_degree[id] as u32
        } else {
            0
        }
    }

    pub fn descriptor(&self) -> LatticeDescriptor {
        let layers = (0..=self.outer)
            .map(|k| {
                let r = self.layer_range(k);
                let i_count = self.class[r.clone()].iter().filter(|c| **c == Class::I).count();
                LayerDescriptor {
                    size: r.len(),
                    i_count,
                    e_count: r.len() - i_count,
                }
            })
            .collect();
        LatticeDescriptor {
            p: self.tiling.p,
            q: self.tiling.q,
            outer: self.outer,
            vertices: self.len(),
            layers,
        }
    }

    /// Drops the last up-edge of `id`. Exists so that [`validate`] can be
    /// exercised on a broken graph.
    #[doc(hidden)]
    pub fn remove_up_edge(&mut self, id: usize) {
        if self.up_degree[id] > 0 {
            self.up_degree[id] -= 1;
        }
    }
}

pub fn boundary_exposure(g: &LatticeGraph, v: VertexId) -> Result<u32> {
    Ok(g.exposure(g.id(v)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: u64,
    pub failure: Option<String>,
}

/// Audits every structural invariant of the layered construction and stops
/// at the first counterexample.
pub fn validate(g: &LatticeGraph) -> ValidationReport {
    let mut checks = 0u64;
    match validate_inner(g, &mut checks) {
        Ok(()) => ValidationReport {
            passed: true,
            checks,
            failure: None,
        },
        Err(msg) => ValidationReport {
            passed: false,
            checks,
            failure: Some(msg),
        },
    }
}

fn validate_inner(g: &LatticeGraph, checks: &mut u64) -> std::result::Result<(), String> {
    let t = g.tiling;
    let (p, q) = (t.p as usize, t.q as usize);
    let expected = layer_count_table(t, g.outer);
    macro_rules! check {
        ($cond:expr, $($msg:tt)*) => {{
            *checks += 1;
            if !$cond {
                return Err(format!($($msg)*));
            }
        }};
    }

    check!(g.layer_size(0) == p, "layer 0 has {} vertices, expected {p}", g.layer_size(0));
    for id in g.layer_range(0) {
        check!(
            g.class[id] == Class::E && g.parent(id).is_none(),
            "layer-0 vertex {} is not a parentless E vertex",
            g.vertex(id)
        );
    }

    for k in 0..=g.outer {
        let r = g.layer_range(k);
        let i_count = g.class[r.clone()].iter().filter(|c| **c == Class::I).count();
        let e_count = r.len() - i_count;
        let (ei, ee) = expected[k as usize]
            .as_u64()
            .ok_or_else(|| format!("layer {k}: expected counts overflow u64"))?;
        check!(
            i_count as u64 == ei && e_count as u64 == ee,
            "layer {k}: (I,E) = ({i_count},{e_count}), recursion gives ({ei},{ee})"
        );

        for id in r.clone() {
            let v = g.vertex(id);
            let has_parent = g.parent(id).is_some();
            check!(
                has_parent == (g.class[id] == Class::I),
                "vertex {v}: class {} but parent {:?}",
                g.class[id],
                g.parent(id).map(|x| g.vertex(x))
            );
            if let Some(par) = g.parent(id) {
                check!(
                    g.layer_of(par) + 1 == k,
                    "vertex {v}: parent {} is not in layer {}",
                    g.vertex(par),
                    k.wrapping_sub(1)
                );
                check!(
                    g.children(par).any(|c| c == id),
                    "vertex {v}: parent {} does not list it as a child",
                    g.vertex(par)
                );
            }
            for c in g.children(id) {
                check!(
                    c < g.len() && g.parent(c) == Some(id),
                    "vertex {v}: child {} does not point back",
                    if c < g.len() { g.vertex(c).to_string() } else { c.to_string() }
                );
            }
            let deg = g.internal_degree(id) as usize;
            if k < g.outer {
                check!(deg == q, "vertex {v}: degree {deg}, expected {q}");
            } else {
                let exp = g.exposure(id) as usize;
                let want = match g.class[id] {
                    Class::I => q - 3,
                    Class::E => q - 2,
                };
                check!(exp == want, "vertex {v}: exposure {exp}, expected {want}");
                check!(
                    deg + exp == q,
                    "vertex {v}: degree {deg} + exposure {exp} != {q}"
                );
            }
        }

        if k >= 1 {
            // Gaps between cyclically consecutive I vertices.
            let ids: Vec<usize> = r.clone().filter(|&x| g.class[x] == Class::I).collect();
            for w in 0..ids.len() {
                let a = ids[w];
                let b = ids[(w + 1) % ids.len()];
                let gap = if b > a { b - a - 1 } else { b + r.len() - a - 1 };
                check!(
                    gap + 3 == p || gap + 4 == p,
                    "layer {k}: {gap} E vertices between I vertices {} and {}",
                    g.vertex(a),
                    g.vertex(b)
                );
            }
        }

        if k < g.outer {
            // Sole faces sit between consecutive up-edges of one vertex,
            // shared faces between neighbouring vertices.
            let sole: usize = r.clone().map(|x| g.up_degree(x) as usize - 1).sum();
            let shared = r.len();
            let e_next = g
                .layer_range(k + 1)
                .filter(|&x| g.class[x] == Class::E)
                .count();
            check!(
                (p - 3) * sole + (p - 4) * shared == e_next,
                "layer {}: face identity gives {} E vertices, graph has {e_next}",
                k + 1,
                (p - 3) * sole + (p - 4) * shared
            );
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddedVertex {
    pub layer: u32,
    pub index: u32,
    pub class: Class,
    pub x: f64,
    pub y: f64,
}

pub const EMBED_MAX_LAYER: u32 = 8;

/// Poincaré-disk coordinates. The central face is a regular p-gon about the
/// origin with index increasing counter-clockwise; every other vertex is
/// placed by a hyperbolic rotation about an already placed neighbour.
pub fn embed_poincare(g: &LatticeGraph) -> Result<Vec<EmbeddedVertex>> {
    if g.outer > EMBED_MAX_LAYER {
        return Err(Error::Capacity {
            what: "embedding layers",
            needed: g.outer as u128,
            cap: EMBED_MAX_LAYER as u128,
        });
    }
    let (p, q) = (g.p() as f64, g.q() as f64);
    let circum = ((PI / p).tan().recip() * (PI / q).tan().recip()).acosh();
    let edge = 2.0 * ((PI / p).cos() / (PI / q).sin()).acosh();
    let r0 = (circum / 2.0).tanh();
    let step = (edge / 2.0).tanh();
    let turn = 2.0 * PI / q;

    let mut z = vec![Complex64::new(0.0, 0.0); g.len()];
    for id in g.layer_range(0) {
        z[id] = Complex64::from_polar(r0, 2.0 * PI * id as f64 / p);
    }
    // Counter-clockwise around any vertex the neighbours read:
    // next, parent (or the inner face), prev, children in increasing index.
    let place = |zv: Complex64, anchor: Complex64, slots: f64| -> Complex64 {
        let w = (anchor - zv) / (Complex64::new(1.0, 0.0) - zv.conj() * anchor);
        let w = Complex64::from_polar(step, w.arg() + turn * slots);
        (w + zv) / (Complex64::new(1.0, 0.0) + zv.conj() * w)
    };
    for k in 0..g.outer {
        for v in g.layer_range(k) {
            // Offset of the first child from the anchor neighbour.
            let (anchor, first) = match g.parent(v) {
                Some(par) => (par, 2.0),
                None if k == 0 => (g.next_in_layer(v), 2.0),
                None => (g.prev_in_layer(v), 1.0),
            };
            let kids: Vec<usize> = g.children(v).collect();
            for (j, c) in kids.into_iter().enumerate() {
                z[c] = place(z[v], z[anchor], first + j as f64);
            }
        }
        // E vertices of layer k+1 hang off their predecessor, which holds
        // them at slot 0 with its parent or prev at slot 1.
        for v in g.layer_range(k + 1) {
            if g.class(v) == Class::E {
                let u = g.prev_in_layer(v);
                let anchor = g.parent(u).unwrap_or_else(|| g.prev_in_layer(u));
                z[v] = place(z[u], z[anchor], -1.0);
            }
        }
    }
    Ok((0..g.len())
        .map(|id| {
            let v = g.vertex(id);
            EmbeddedVertex {
                layer: v.layer,
                index: v.index,
                class: g.class(id),
                x: z[id].re,
                y: z[id].im,
            }
        })
        .collect())
}

/// Hyperbolic distance between two points of the unit disk.
pub fn poincare_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let za = Complex64::new(a.0, a.1);
    let zb = Complex64::new(b.0, b.1);
    let num = 2.0 * (za - zb).norm_sqr();
    let den = (1.0 - za.norm_sqr()) * (1.0 - zb.norm_sqr());
    (1.0 + num / den).acosh()
}
