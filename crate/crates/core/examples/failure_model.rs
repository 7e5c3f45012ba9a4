//! Failure probability and effective lifetime across a device's life.

use pswl::reliability::{
    array_failure_probability, effective_lifetime, failure_probability, initial_wear_for_probability,
    FailureModelParams, LifetimeParams,
};

fn main() {
    let fp = FailureModelParams::default();
    let raw = LifetimeParams { k: 1.0, k_p: 0.0 };
    let weighted = LifetimeParams { k: 1.0, k_p: 1e6 };

    println!("{:>6} {:>12} {:>10} {:>12}", "P/E", "P(fail)", "L raw", "L k_p=1e6");
    for t in [500.0, 1000.0, 1500.0, 2000.0, 2500.0, 2800.0, 3000.0, 3200.0] {
        let p = failure_probability(t, &fp).unwrap();
        println!(
            "{t:>6.0} {p:>12.3e} {:>10.1} {:>12.1}",
            effective_lifetime(t, &raw, &fp),
            effective_lifetime(t, &weighted, &fp)
        );
    }

    let pe = initial_wear_for_probability(1e-4, &fp).unwrap();
    println!("\nwear for a 1e-4 failure probability: {pe:.1} P/E");

    // three aged disks next to one fresh disk
    let p_old = failure_probability(pe, &fp).unwrap();
    println!("array failure probability, 3 aged + 1 fresh: {:.3e}", array_failure_probability(&[p_old, p_old, p_old, 0.0]));
}
