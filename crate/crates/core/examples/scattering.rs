//! Scattering audit: a below-threshold focusing run against the stationary ground state.

use inls::diagnostics::{classify_run, scattering_detect, scattering_detect_fields, ScatteringConfig};
use inls::evolution::{evolve, EvolutionConfig};
use inls::ground_state::{petviashvili_solve_with, PetviashviliOptions, Projection};
use inls::spectral_core::{build_grid, PhysicsParams};
use num_complex::Complex64;

fn main() -> inls::error::Result<()> {
    let p = PhysicsParams::focusing(0.0, 0.5)?;
    let opts = PetviashviliOptions { projection: Projection::Collocation, ..Default::default() };
    let cfg = ScatteringConfig::default();

    let g = petviashvili_solve_with(&p, build_grid(0.5, 32767, 3200.0)?, None, opts)?;
    let u0 = g.q.scaled(0.6);
    println!("class of 0.6 Q: {}", classify_run(&p, &u0, &g));
    let run = evolve(&u0, &p, &EvolutionConfig { dt: 0.01, t_end: 50.0, monitor_stride: 50, field_stride: 10, ..Default::default() })?;
    let s = scattering_detect(&run, &cfg)?;
    println!("0.6 Q: Cauchy tail {:.2e}, min mass in ball {:.2e}, consistent = {}", s.max_cauchy, s.min_ball_mass, s.consistent);

    // the standing wave e^{it}Q never disperses
    let q = petviashvili_solve_with(&p, build_grid(0.5, 512, 32.0)?, None, opts)?.q;
    let traj: Vec<_> = (0..=10).map(|i| 5.0 * i as f64).map(|t| (t, q.rotated(Complex64::from_polar(1.0, t)))).collect();
    let s = scattering_detect_fields(&traj.iter().collect::<Vec<_>>(), true, &cfg)?;
    println!("standing wave: Cauchy tail {:.2e}, min mass in ball {:.2e}, consistent = {}", s.max_cauchy, s.min_ball_mass, s.consistent);
    Ok(())
}
