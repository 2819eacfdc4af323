//! Sweep the Hardy coupling a and tabulate the ground-state thresholds for a small Gaussian.

use inls::cli_io::{parse_config, sweep, SweepAxis};

fn main() -> inls::error::Result<()> {
    let cfg = parse_config(
        "physics.a = 0\nphysics.b = 0.5\nphysics.lambda = focusing\ngrid.n = 512\ngrid.r_max = 48\n\
         initial.amplitude = 0.5\nevolution.dt = 0.01\nevolution.t_end = 1\n\
         output.dir = sweep_a\n",
    )?;
    let root = std::env::temp_dir().join("inls-example");
    for r in sweep(&cfg, SweepAxis::A, &[-0.1875, 0.0, 1.0], &root)? {
        println!("a = {:8.4}  {}  M E = {:.8}  grad = {:.8}  C_GN = {:.8}  class = {}", r.value, r.verdict, r.threshold_me, r.threshold_grad, r.c_sharp, r.class);
    }
    Ok(())
}
