//! The wear controller on a toy plant: aged originals and a fresh extended
//! disk share a write stream, and the controller output steers a share of
//! the originals' writes onto the extended disk until the lifetimes meet.

use pswl::controller::{ControllerParams, ControllerPhase, WearController};
use pswl::reliability::{effective_lifetime, FailureModelParams, LifetimeParams};

fn main() {
    let fp = FailureModelParams::default();
    let lp = LifetimeParams { k: 1.0, k_p: 1e6 };
    let params = ControllerParams::default();
    let mut ctl = WearController::new(params);

    let (mut pe_o, mut pe_s) = (1200.0_f64, 0.0_f64);
    let mut shift = 0.0_f64;
    let (mut wl_io, mut total_io) = (0u64, 0u64);
    for step in 0..400u64 {
        // one P/E per disk per period before steering
        let moved = shift.min(0.9);
        pe_o += 1.0 - moved;
        pe_s += 1.0 + 3.0 * moved;
        wl_io += (moved * 100.0) as u64;
        total_io += 400;

        let (l_o, l_s) = (effective_lifetime(pe_o, &lp, &fp), effective_lifetime(pe_s, &lp, &fp));
        let s = ctl.sample(l_o, l_s, true, step, (wl_io, total_io));
        shift = if s.phase == ControllerPhase::Chasing { s.u.clamp(0.0, 1.0) } else { 0.0 };
        if step % 25 == 0 || s.phase == ControllerPhase::Converged {
            println!(
                "step {step:>3} pe {pe_o:>7.1}/{pe_s:>7.1} gap {:.4} u {:.3} gains {:.3?} {}",
                s.relative_gap,
                s.u,
                s.gains,
                s.phase.as_str()
            );
        }
        if s.phase == ControllerPhase::Converged {
            break;
        }
    }
    println!("transitions: {:?}", ctl.transitions());
}
