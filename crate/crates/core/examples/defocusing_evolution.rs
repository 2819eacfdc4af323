//! Defocusing evolution with conservation monitors and the splitting self-convergence order.

use inls::evolution::{convergence_study, evolve, EvolutionConfig};
use inls::spectral_core::{build_grid, PhysicsParams, RadialField};

fn main() -> inls::error::Result<()> {
    let p = PhysicsParams::defocusing(0.0, 0.25)?;
    let u0 = RadialField::from_real_profile(build_grid(0.5, 512, 80.0)?, |r| (-r * r / 2.0).exp());
    let run = evolve(&u0, &p, &EvolutionConfig { dt: 1e-3, t_end: 5.0, monitor_stride: 100, ..Default::default() })?;
    for s in &run.series().samples {
        println!("t = {:5.2}  M = {:.15}  E = {:.12}  sup = {:.6}", s.t, s.m, s.e, s.sup);
    }
    let study = convergence_study(&u0, &p, 1.0, &[0.01, 0.005, 0.0025])?;
    println!("errors {:?}\norder {:.3}", study.errors, study.order);
    Ok(())
}
