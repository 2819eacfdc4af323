//! Focusing data 1.5·Q with negative energy: the Ḣ¹ₐ growth detector fires.

use inls::evolution::{evolve, EvolutionConfig};
use inls::ground_state::{petviashvili_solve_with, PetviashviliOptions, Projection};
use inls::spectral_core::{build_grid, PhysicsParams};

fn main() -> inls::error::Result<()> {
    let p = PhysicsParams::focusing(0.0, 0.5)?;
    let grid = build_grid(0.5, 16383, 25.0)?;
    let g = petviashvili_solve_with(&p, grid, None, PetviashviliOptions { projection: Projection::Collocation, ..Default::default() })?;
    let u0 = g.q.scaled(1.5);
    let cfg = EvolutionConfig { dt: 1e-4, t_end: 10.0, monitor_stride: 20, ..Default::default() };
    let run = evolve(&u0, &p, &cfg)?;
    println!("E(1.5 Q) = {:.6}", run.state.e0);
    println!("verdict = {:?}", run.verdict);
    for s in run.series().samples.iter().rev().take(5).rev() {
        println!("t = {:.4}  K = {:.4e}", s.t, s.k);
    }
    Ok(())
}
