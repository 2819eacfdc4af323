//! Virial identity and Morawetz averages on a defocusing run.

use inls::diagnostics::{morawetz_fit, potential_decay_scan, virial_track, VirialTarget};
use inls::evolution::{evolve, EvolutionConfig};
use inls::functionals::WeightKind;
use inls::spectral_core::{build_grid, PhysicsParams, RadialField};

fn main() -> inls::error::Result<()> {
    let p = PhysicsParams::defocusing(1.0, 0.5)?;
    let nu = p.nu();
    let u0 = RadialField::from_real_profile(build_grid(nu, 512, 256.0)?, |r| r.powf(nu - 0.5) * (-(r / 2.0).powi(2)).exp());
    let u0 = u0.scaled(1.0 / inls::functionals::mass(&u0).sqrt());
    let cfg = EvolutionConfig {
        dt: 0.01,
        t_end: 100.0,
        monitor_stride: 10,
        field_stride: 1,
        // the fast tail reaches the wall late in the run but cannot return to the Morawetz balls
        reflect_mass_cap: 0.5,
        weights: vec![WeightKind::Quadratic, WeightKind::Truncated { radius: 40.0 }],
        ..Default::default()
    };
    let run = evolve(&u0, &p, &cfg)?;
    for (i, w) in run.series().weights.iter().enumerate() {
        let v = virial_track(run.series(), &p, i, VirialTarget::Identity)?;
        println!("virial ({}) max mismatch {:.2e}", w.label(), v.max_mismatch);
    }
    let fit = morawetz_fit(&run, &[25.0, 50.0, 100.0])?;
    println!("Morawetz constants {:?}, spread {:.3}", fit.constants, fit.spread);
    for d in potential_decay_scan(&run, 4) {
        println!("T = {:6.2}  R = {:6.2}  min potential {:.3e}", d.t, d.radius, d.value);
    }
    Ok(())
}
