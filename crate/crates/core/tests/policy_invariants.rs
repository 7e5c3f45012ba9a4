use pswl::controller::ControllerParams;
use pswl::flash::{DeviceGeometry, DeviceState, FtlParams};
use pswl::hotness::{migration_allowed, AccessWindow, HotnessClass, HotnessParams, HotnessSnapshot};
use pswl::policy::*;
use pswl::reliability::{FailureModelParams, LifetimeParams};
use proptest::prelude::*;

const PAGES: u32 = 60;

/// Pages spread round-robin over `k_o` originals and `k_s` extended disks.
struct Toy {
    disks: Vec<DeviceState>,
    k_o: usize,
    unit_disk: Vec<u32>,
    free: Vec<usize>,
    snapshot: HotnessSnapshot,
    event: u64,
}

impl Toy {
    fn new(pe: &[f64], k_o: usize, stream: &[u32]) -> Self {
        let disks: Vec<DeviceState> = pe
            .iter()
            .map(|&p| {
                let mut d = DeviceState::new(DeviceGeometry::default(), FtlParams::default()).unwrap();
                d.set_initial_wear(p).unwrap();
                d
            })
            .collect();
        let n = pe.len() as u32;
        let unit_disk: Vec<u32> = (0..PAGES).map(|p| p % n).collect();
        let free = (0..n).map(|d| 40 - unit_disk.iter().filter(|&&x| x == d).count()).collect();
        let mut w = AccessWindow::new(HotnessParams::default().window);
        for &p in stream {
            w.record_access(p);
        }
        let snapshot = HotnessSnapshot::take(&w, &HotnessParams::default().thresholds(), PAGES as usize);
        Toy { disks, k_o, unit_disk, free, snapshot, event: 0 }
    }

    fn view(&self) -> ArrayView<'_> {
        ArrayView {
            disks: &self.disks,
            k_o: self.k_o,
            unit_disk: &self.unit_disk,
            free_slots: &self.free,
            snapshot: &self.snapshot,
            io: IoCounters { host_writes: self.event, ..IoCounters::default() },
            event: self.event,
            redistributed: true,
        }
    }

    fn apply(&mut self, page: u32, src: u32, dst: u32) {
        assert_eq!(self.unit_disk[page as usize], src, "decision names the wrong source");
        self.unit_disk[page as usize] = dst;
        self.free[src as usize] += 1;
        self.free[dst as usize] -= 1;
    }
}

fn ctx(k_p: f64) -> PolicyContext {
    PolicyContext {
        controller: ControllerParams { migrations_per_period: 4, ..ControllerParams::default() },
        hotness: HotnessParams::default(),
        lifetime: LifetimeParams { k: 1.0, k_p },
        failure: FailureModelParams::default(),
        baselines: BaselineParams::default(),
        n_base: PAGES as usize,
    }
}

/// Run `rounds` sampling periods of `writes` host writes; returns every
/// executed decision with the gap seen at its sample.
fn drive(policy: &mut ProbabilitySensitive, toy: &mut Toy, rounds: usize, writes: u32) -> Vec<(u32, u32, u32, f64)> {
    let mut log = Vec::new();
    for _ in 0..rounds {
        let gap = policy.on_sample(&toy.view()).map_or(0.0, |s| s.relative_gap);
        for w in 0..writes {
            toy.event += 1;
            if let PolicyDecision::Migrate { page, src, dst } = policy.on_host_write(&toy.view(), w % PAGES) {
                let gap_ref = 2.0 * ControllerParams::default().lambda;
                assert!(migration_allowed(page, toy.view().is_extended(dst), policy.zone(), gap, gap_ref));
                assert_ne!(toy.snapshot.score(page).class, HotnessClass::Cold, "cold page {page} proposed");
                toy.apply(page, src, dst);
                policy.on_migrated(&toy.view(), page, src, dst);
                log.push((page, src, dst, gap));
            }
        }
    }
    log
}

fn streams() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(prop_oneof![3 => 0u32..6, 1 => 0u32..PAGES], 0..800)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn never_cold_and_zone_respected(stream in streams(), pe_o in 0.0f64..2500.0, pe_s in 0.0f64..2500.0, k_p in 0.0f64..1e6) {
        let mut toy = Toy::new(&[pe_o, pe_o, pe_s], 2, &stream);
        let mut p = ProbabilitySensitive::new(&ctx(k_p), false);
        drive(&mut p, &mut toy, 6, 50);
    }

    #[test]
    fn ablation_equivalent_without_penalty(stream in streams(), pe in prop::collection::vec(0.0f64..2500.0, 3)) {
        let (mut a_toy, mut b_toy) = (Toy::new(&pe, 2, &stream), Toy::new(&pe, 2, &stream));
        let mut a = ProbabilitySensitive::new(&ctx(0.0), false);
        let mut b = ProbabilitySensitive::new(&ctx(0.0), true);
        prop_assert_eq!(drive(&mut a, &mut a_toy, 6, 50), drive(&mut b, &mut b_toy, 6, 50));
    }
}

#[test]
fn large_gap_moves_a_hot_page_onto_the_extended_disk() {
    // page 0 lives on disk 0 and takes most accesses
    let stream: Vec<u32> = (0..400).map(|i| if i % 3 == 0 { (i / 3) % PAGES } else { 0 }).collect();
    let mut toy = Toy::new(&[1500.0, 1500.0, 0.0], 2, &stream);
    assert_eq!(toy.snapshot.score(0).class, HotnessClass::ExtremelyHot);
    let mut p = ProbabilitySensitive::new(&ctx(1e6), false);
    let log = drive(&mut p, &mut toy, 1, 10);
    assert_eq!(log.first().map(|&(page, src, dst, _)| (page, src, dst)), Some((0, 0, 2)));
}

#[test]
fn balanced_array_takes_no_action() {
    let stream: Vec<u32> = (0..400).map(|i| i % 7).collect();
    for kind in [PolicyKind::PsWl, PolicyKind::PsWlAblation, PolicyKind::LazyWl] {
        let mut toy = Toy::new(&[800.0, 800.0, 800.0], 2, &stream);
        let mut p = build_policy(kind, &ctx(1e6));
        for _ in 0..4 {
            if let Some(s) = p.on_sample(&toy.view()) {
                assert_eq!(s.u, 0.0, "{kind}");
            }
            for w in 0..50 {
                toy.event += 1;
                assert_eq!(p.on_host_write(&toy.view(), w), PolicyDecision::NoAction, "{kind}");
            }
        }
    }
}
