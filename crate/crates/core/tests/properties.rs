use proptest::prelude::*;

use percolab::combinatorics::{a_n_closed, a_n_direct, LevelCensus};
use percolab::lattice::{build_region, Lattice, RegionShape, SiteCoord};
use percolab::oracle::{exact_probability, shipped_instances};
use percolab::percolation::{bottleneck_threshold, occurs, ConfigurationView, ConnectionEvent, WeightField};

fn branches(d: u32, max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    (0..=max_len).prop_flat_map(move |len| {
        proptest::collection::vec(0..d - 1, len).prop_flat_map(move |rest| {
            (0..d).prop_map(move |first| {
                let mut v = rest.clone();
                if !v.is_empty() {
                    v[0] = first;
                }
                v
            })
        })
    })
}

fn ball_site(l: Lattice, radius: u32) -> impl Strategy<Value = SiteCoord> {
    (0..=radius).prop_flat_map(move |depth| {
        let size = l.sphere_size(depth).unwrap() as u64;
        (0..size, -(radius as i32 - depth as i32)..=(radius as i32 - depth as i32))
            .prop_map(move |(i, k)| SiteCoord::new(l.vertex(depth, i as u128).unwrap(), k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn level_is_additive(d in 3u32..7, xs in branches(6, 24), ys in branches(6, 24)) {
        let l = Lattice::new(d).unwrap();
        let clip = |v: &[u32]| -> Vec<u32> {
            v.iter().enumerate().map(|(i, &c)| c % if i == 0 { d } else { d - 1 }).collect()
        };
        let x = l.from_branches(&clip(&xs)).unwrap();
        let y = l.from_branches(&clip(&ys)).unwrap();
        prop_assert_eq!(l.level(&x), l.level(&y) + l.level_relative(&y, &x));
        prop_assert_eq!(l.level_relative(&x, &x), 0);
        prop_assert_eq!(l.branches(&x), clip(&xs));
    }

    #[test]
    fn a_n_closed_form_and_reflection(b in 2u32..6, n in 0u32..14, z in 0.2f64..2.0) {
        let direct = a_n_direct(n, z, b).unwrap();
        prop_assert!((a_n_closed(n, z, b).unwrap() - direct).abs() <= 1e-12 * direct);
        let reflected = a_n_direct(n, 1.0 / (b as f64 * z), b).unwrap();
        prop_assert!((reflected - direct).abs() <= 1e-10 * direct);
        prop_assert_eq!(LevelCensus::new(n.max(1), b).unwrap().total(), (b as u64 + 1) * (b as u64).pow(n.max(1) - 1));
    }

    #[test]
    fn occurs_matches_bottleneck_and_is_monotone(
        seed in any::<u64>(),
        trial in 0u64..1_000_000,
        target in ball_site(Lattice::new(3).unwrap(), 3),
        p1 in 0.0f64..=1.0,
        p2 in 0.0f64..=1.0,
    ) {
        let l = Lattice::new(3).unwrap();
        let region = build_region(l, RegionShape::ProductBall { radius: 3 }, 100_000).unwrap();
        let field = WeightField::new(l, seed, trial);
        let event = ConnectionEvent::site(SiteCoord::ORIGIN, target);
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let at_lo = occurs(&event, &ConfigurationView::new(&field, lo, &region).unwrap()).unwrap();
        let at_hi = occurs(&event, &ConfigurationView::new(&field, hi, &region).unwrap()).unwrap();
        prop_assert!(!at_lo || at_hi);
        let t = bottleneck_threshold(&event, &field, &region).unwrap().threshold;
        if target != SiteCoord::ORIGIN {
            prop_assert_eq!(at_lo, lo > t);
        }
    }

    #[test]
    fn weights_depend_only_on_seed_trial_and_edge(seed in any::<u64>(), trial in any::<u64>()) {
        let l = Lattice::new(4).unwrap();
        let a = WeightField::new(l, seed, trial);
        let b = WeightField::new(l, seed, trial);
        let region = build_region(l, RegionShape::ProductBall { radius: 2 }, 10_000).unwrap();
        for e in &region.graph().edges {
            let w = a.weight(e);
            prop_assert!((0.0..1.0).contains(&w));
            prop_assert_eq!(w.to_bits(), b.weight(e).to_bits());
        }
    }

    #[test]
    fn exact_laws_are_nondecreasing(i in 0usize..13, p in 0.0f64..1.0, dp in 0.0f64..0.2) {
        let instances = shipped_instances();
        let inst = &instances[i % instances.len()];
        for ev in &inst.events {
            let law = exact_probability(ev, &inst.region).unwrap();
            prop_assert!(law.eval(p) <= law.eval((p + dp).min(1.0)) + 1e-12);
        }
    }
}
