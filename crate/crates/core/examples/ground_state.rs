//! Ground state by Petviashvili iteration, checked against Pohozaev ratios and the shooting oracle.

use inls::ground_state::{ground_state, oracle_deviation, pohozaev_check, shooting_solve};
use inls::spectral_core::PhysicsParams;

fn main() -> inls::error::Result<()> {
    for (a, b) in [(0.0, 0.25), (1.0, 0.25), (1.0, 0.5)] {
        let g = ground_state(a, b)?;
        let p = PhysicsParams::focusing(a, b)?;
        let po = pohozaev_check(&g, &p);
        let oracle = shooting_solve(&p, 1e-13)?;
        println!(
            "a = {a}, b = {b}: N = {}, residual {:.1e}, Pohozaev {:.1e}, oracle {:.1e}, C_GN = {:.10}, M E = {:.8}",
            g.grid().len(),
            g.residual,
            po.max_rel_error(),
            oracle_deviation(&g, &oracle),
            g.c_sharp,
            g.threshold_me
        );
    }
    Ok(())
}
