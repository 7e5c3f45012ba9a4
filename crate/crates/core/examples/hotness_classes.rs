//! Classify pages of a Zipf stream by access hotness and size the
//! conservative zone for a few lifetime gaps.

use pswl::hotness::{AccessWindow, ConservativeZone, HotnessClass, HotnessParams, HotnessSnapshot, ZoneParams};
use pswl::workload::{generate_synthetic, SyntheticSpec};

fn main() {
    let pages = 4096;
    let params = HotnessParams::default();
    let spec = SyntheticSpec { op_count: 200_000, address_space: pages, ..SyntheticSpec::default() };
    let mut window = AccessWindow::new(params.window);
    for a in generate_synthetic(&spec).unwrap() {
        window.record_access(a.page);
    }

    let snap = HotnessSnapshot::take(&window, &params.thresholds(), pages as usize);
    let count = |c: HotnessClass| snap.iter().filter(|(_, s)| s.class == c).count();
    println!(
        "{} tracked pages: extremely hot {} warm {} cold {}",
        window.tracked_pages(),
        count(HotnessClass::ExtremelyHot),
        count(HotnessClass::Warm),
        count(HotnessClass::Cold)
    );

    let mut top: Vec<_> = snap.iter().collect();
    top.sort_by(|a, b| b.1.cmp_heat(a.1));
    for (page, s) in top.iter().take(5) {
        println!("page {page:>5} h={:.3} freq={:.3} {:?}", s.h, s.vector.h_freq, s.class);
    }

    let warm = snap.warm_ranked();
    let zp = ZoneParams { k_ban_base: params.k_ban_base, k_ban_max: params.k_ban_max, gap_ref: 0.2 };
    let mut zone = ConservativeZone::new(pages as usize);
    for gap in [0.0, 0.05, 0.1, 0.2] {
        zone.update(&warm, gap, &zp);
        println!("gap {gap:.2}: k_ban {:.3}, {} of {} warm pages protected", zone.k_ban, zone.members.len(), warm.len());
    }
}
