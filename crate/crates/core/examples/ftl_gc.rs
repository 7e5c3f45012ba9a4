//! A single device under a skewed overwrite load: garbage collection, write
//! amplification and erase spread.

use pswl::flash::{DeviceGeometry, DeviceState, FtlParams, PageState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let geometry = DeviceGeometry::default();
    let mut dev = DeviceState::new(geometry, FtlParams::default()).unwrap();
    let cap = dev.logical_capacity();
    println!("{} blocks x {} pages, {cap} logical pages", geometry.blocks_per_disk, geometry.pages_per_block);

    for lpn in 0..cap {
        dev.host_write(lpn).unwrap();
    }
    // 80% of writes hit the first tenth of the address space
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let hot = cap / 10;
    for _ in 0..50_000 {
        let lpn = if rng.random_bool(0.8) { rng.random_range(0..hot) } else { rng.random_range(hot..cap) };
        dev.host_write(lpn).unwrap();
    }

    let c = dev.counters();
    println!("host writes {}, programs {}, relocations {}, erases {}", c.host_writes, c.programs, c.relocations, c.erases);
    println!("write amplification {:.3}", c.programs as f64 / c.host_writes as f64);
    println!("mean P/E {:.2}, free blocks {}", dev.pe_count(), dev.free_blocks());
    let erases = dev.block_erase_counts();
    println!("block erases min {} max {}", erases.iter().min().unwrap(), erases.iter().max().unwrap());
    println!(
        "pages valid {} invalid {} free {}",
        dev.count_pages(PageState::Valid),
        dev.count_pages(PageState::Invalid),
        dev.count_pages(PageState::Free)
    );
}
