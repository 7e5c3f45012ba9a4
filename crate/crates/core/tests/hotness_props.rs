use std::collections::BTreeSet;

use pswl::hotness::*;
use proptest::prelude::*;

/// Raw metrics recomputed from scratch over the last `w` events.
fn rescan(stream: &[u32], w: usize, page: u32) -> Option<RawMetrics> {
    let tail = &stream[stream.len().saturating_sub(w)..];
    let hits: Vec<usize> = tail.iter().enumerate().filter(|(_, &p)| p == page).map(|(i, _)| i).collect();
    let last = *hits.last()?;
    Some(RawMetrics {
        freq: hits.len() as u32,
        recency: (tail.len() - 1 - last) as u64,
        compactness: (hits.len() >= 2).then(|| (last - hits[hits.len() - 2] - 1) as u64),
    })
}

fn raw() -> impl Strategy<Value = RawMetrics> {
    (1u32..50, 0u64..1000, prop::option::of(0u64..1000)).prop_map(|(freq, recency, compactness)| RawMetrics {
        freq,
        recency,
        compactness,
    })
}

proptest! {
    #[test]
    fn window_matches_rescan(stream in prop::collection::vec(0u32..12, 0..300), w in 1usize..64) {
        let mut win = AccessWindow::new(w);
        for &p in &stream {
            let m = win.record_access(p);
            prop_assert_eq!(Some(m), win.metrics(p));
        }
        prop_assert!(win.len() <= w);
        for page in 0..12 {
            prop_assert_eq!(win.metrics(page), rescan(&stream, w, page), "page {}", page);
        }
        let tail: BTreeSet<u32> = stream[stream.len().saturating_sub(w)..].iter().copied().collect();
        let tracked: BTreeSet<u32> = win.tracked().into_iter().map(|(p, _)| p).collect();
        prop_assert_eq!(tracked, tail);
        let idx: Vec<u64> = win.events().map(|&(i, _)| i).collect();
        prop_assert!(idx.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn normalized_values_in_unit_interval(raw in prop::collection::vec(raw(), 1..40)) {
        let v = normalize(&raw);
        prop_assert_eq!(v.len(), raw.len());
        for (x, r) in v.iter().zip(&raw) {
            for c in [x.h_freq, x.h_rec, x.h_comp, x.scalar()] {
                prop_assert!((0.0..=1.0).contains(&c));
            }
            if r.compactness.is_none() {
                prop_assert_eq!(x.h_comp, 0.0);
            }
        }
        // h_freq rises with freq, h_rec falls with recency
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i].freq > raw[j].freq {
                    prop_assert!(v[i].h_freq > v[j].h_freq);
                }
                if raw[i].recency > raw[j].recency {
                    prop_assert!(v[i].h_rec < v[j].h_rec);
                }
            }
        }
    }

    #[test]
    fn classes_partition_by_threshold(h in 0.0f64..=1.0, cold in 0.0f64..0.5, span in 0.01f64..0.5) {
        let t = Thresholds::new(span + cold, cold).unwrap();
        let c = classify(h, &t);
        let expected = if h >= span + cold {
            HotnessClass::ExtremelyHot
        } else if h <= cold {
            HotnessClass::Cold
        } else {
            HotnessClass::Warm
        };
        prop_assert_eq!(c, expected);
    }

    #[test]
    fn zone_capacity_non_increasing_in_gap(
        n_base in 1usize..5000,
        base in 0.0f64..1.0,
        max in 0.0f64..1.0,
        gap_ref in 0.001f64..1.0,
        gaps in prop::collection::vec(0.0f64..2.0, 2..10),
        warm in 0usize..200,
    ) {
        let ranked: Vec<(u32, f64)> = (0..warm as u32).map(|p| (p, 1.0 - p as f64 / 1000.0)).collect();
        let params = ZoneParams { k_ban_base: base, k_ban_max: max, gap_ref };
        let mut gaps = gaps;
        gaps.sort_by(f64::total_cmp);
        let mut prev = usize::MAX;
        for g in gaps {
            let mut z = ConservativeZone::new(n_base);
            z.update(&ranked, g, &params);
            prop_assert!(z.capacity <= prev);
            prop_assert!(z.members.len() <= z.capacity);
            prop_assert_eq!(z.capacity, (n_base as f64 * z.k_ban).round() as usize);
            prop_assert!(z.members.iter().all(|&p| (p as usize) < warm));
            if g >= gap_ref {
                prop_assert!(z.members.is_empty());
            }
            prev = z.capacity;
        }
    }

    #[test]
    fn snapshot_classes_cover_every_page(stream in prop::collection::vec(0u32..40, 1..500)) {
        let mut win = AccessWindow::new(128);
        for &p in &stream {
            win.record_access(p);
        }
        let t = HotnessParams::default().thresholds();
        let snap = HotnessSnapshot::take(&win, &t, 64);
        prop_assert_eq!(snap.len(), 64);
        for (page, s) in snap.iter() {
            prop_assert_eq!(s.class, classify(s.h, &t));
            if win.metrics(page).is_none() {
                prop_assert_eq!(s.class, HotnessClass::Cold);
            }
        }
        prop_assert!(snap.warm_ranked().iter().all(|&(p, _)| snap.score(p).class == HotnessClass::Warm));
    }
}
