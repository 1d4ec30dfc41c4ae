use hyperising::energy::{delta_h, ExactEnergy, SpinConfig};
use hyperising::landscape::{
    ball_energy, ball_increment, critical_droplet, exhaustive_landscape, fill_layer_path_in_order, kstar, manifold_slice,
    reference_gamma, LandscapeRequest,
};
use hyperising::lattice::{build, LatticeGraph};
use hyperising::Field;
use proptest::prelude::*;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

fn keys(g: &LatticeGraph, h: Field) -> Vec<i128> {
    let n = g.len();
    (0..1usize << n)
        .map(|s| {
            let c = SpinConfig::from_plus_ids(n, (0..n).filter(|i| s >> i & 1 == 1));
            delta_h(g, &c).unwrap().key(h)
        })
        .collect()
}

/// Lowest possible peak on a single-flip path from `s` to any strictly
/// lower state, relative to `s`.
fn bottleneck(keys: &[i128], n: usize, s: usize) -> Option<i128> {
    let mut best = vec![i128::MAX; keys.len()];
    let mut heap = BinaryHeap::new();
    best[s] = keys[s];
    heap.push(Reverse((keys[s], s)));
    while let Some(Reverse((peak, x))) = heap.pop() {
        if peak > best[x] {
            continue;
        }
        if keys[x] < keys[s] {
            return Some(peak - keys[s]);
        }
        for v in 0..n {
            let y = x ^ (1 << v);
            let p = peak.max(keys[y]);
            if p < best[y] {
                best[y] = p;
                heap.push(Reverse((p, y)));
            }
        }
    }
    None
}

#[test]
fn stability_levels_match_bottleneck_search() {
    for (p, q, hn) in [(16u32, 4u32, 13i64), (10, 5, 19), (10, 5, 31)] {
        let g = build(p, q, 0).unwrap();
        let h = Field::new(hn, 10).unwrap();
        let rep = exhaustive_landscape(&g, h, &LandscapeRequest::default()).unwrap();
        let k = keys(&g, h);
        let states = k.len() as u64;
        let mut x = 0x9e37_79b9_7f4a_7c15u64;
        let mut picks: Vec<u64> = vec![0, states - 1];
        picks.extend(rep.stable.iter().copied());
        for _ in 0..120 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            picks.push(x % states);
        }
        for s in picks {
            let got = rep.stability_level(s).map(|e| e.key(h));
            assert_eq!(got, bottleneck(&k, g.len(), s as usize), "({p},{q},0) h={hn}/10 state {s}");
        }
        let vmax = (0..states).filter_map(|s| rep.stability_level(s)).max_by_key(|e| e.key(h));
        assert_eq!(rep.gamma_max.map(|e| e.key(h)), vmax.map(|e| e.key(h)));
        assert!(rep.stable.iter().all(|&s| rep.energy(s) == rep.stable_energy));
    }
}

#[test]
fn reference_peak_bounds_communication_height() {
    let g = build(4, 5, 1).unwrap();
    let all_plus = (1u64 << g.len()) - 1;
    for hn in [19i64, 23] {
        let h = Field::new(hn, 10).unwrap();
        let req = LandscapeRequest { phi_pairs: vec![(0, all_plus)] };
        let rep = exhaustive_landscape(&g, h, &req).unwrap();
        let phi = rep.phi[0].phi - rep.energy(0);
        let op = reference_gamma(&g, h).unwrap().gamma_op;
        assert!(op.key(h) >= phi.key(h), "h={hn}/10");
    }
}

#[test]
fn droplet_is_ball_plus_strip() {
    for (p, q, n, h) in [(5u32, 5u32, 4u32, "56/25"), (4, 5, 4, "56/25"), (5, 4, 4, "29/20"), (4, 6, 3, "29/10")] {
        let g = build(p, q, n).unwrap();
        let h: Field = h.parse().unwrap();
        let (ks, _) = kstar(&g, h).unwrap();
        let (d, cfg, _) = critical_droplet(&g, h).unwrap();
        assert_eq!(d.energy, ball_energy(g.tiling(), d.radius) + ks.k_star);
        assert_eq!(delta_h(&g, &cfg).unwrap(), d.energy);
        assert_eq!(cfg.plus_count(), d.area);
    }
}

#[test]
fn full_slice_is_all_plus() {
    let g = build(5, 4, 1).unwrap();
    let h = Field::new(19, 10).unwrap();
    let s = manifold_slice(&g, h, g.len(), 0, 1).unwrap();
    assert!(s.exhaustive);
    assert_eq!(s.argmin, vec![(0..g.len()).collect::<Vec<_>>()]);
    assert_eq!(s.min_energy, delta_h(&g, &SpinConfig::all_plus(g.len())).unwrap());
    let e = manifold_slice(&g, h, 0, 0, 1).unwrap();
    assert_eq!(e.min_energy, ExactEnergy::ZERO);
}

fn layer_order() -> impl Strategy<Value = ((u32, u32), u32, Vec<usize>)> {
    prop::sample::select(vec![(4u32, 5u32), (5, 4), (5, 5), (7, 4), (4, 6)])
        .prop_flat_map(|(p, q)| (Just((p, q)), 0u32..=2))
        .prop_flat_map(|((p, q), r)| {
            let g = build(p, q, r).unwrap();
            let ids: Vec<usize> = g.layer_range(r).collect();
            (Just((p, q)), Just(r), Just(ids).prop_shuffle())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn endpoint_ignores_order(((p, q), r, order) in layer_order()) {
        let g = build(p, q, r).unwrap();
        let t = fill_layer_path_in_order(&g, r, &order).unwrap();
        prop_assert_eq!(t.endpoint(), ball_increment(p, q, r).unwrap());
        prop_assert_eq!(t.base, ball_energy(g.tiling(), r));
    }
}
