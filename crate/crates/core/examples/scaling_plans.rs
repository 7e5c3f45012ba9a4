//! How each scaling scheme redistributes a small array when disks are added.

use pswl::scaling::{ArrayLayout, ScalingScheme};

fn main() {
    let (k_o, k_s, units) = (4, 2, 48);
    for scheme in ScalingScheme::ALL {
        let level = scheme.native_level();
        let old = ArrayLayout::striped(level, k_o, units).unwrap();
        let (new, plan) = scheme.plan(&old, k_s).unwrap();
        new.validate().unwrap();
        let onto_new = plan.moves.iter().filter(|m| m.dst.disk >= k_o).count();
        println!(
            "{scheme} ({level}) {k_o}+{k_s}: {} moves ({onto_new} onto new disks), {} stripes recomputed, {} parity writes",
            plan.moves.len(),
            plan.recomputed_stripes.len(),
            plan.parity_updates
        );
        println!("  data per disk before {:?} after {:?}", old.data_per_disk(), new.data_per_disk());
    }

    let old = ArrayLayout::striped(ScalingScheme::FastScale.native_level(), 3, 12).unwrap();
    let (_, plan) = ScalingScheme::FastScale.plan(&old, 1).unwrap();
    println!("\nFastScale 3+1 plan over 12 units:\n{}", plan.to_text());
}
