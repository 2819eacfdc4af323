//! The Gagliardo–Nirenberg quotient of Q against seeded random radial fields.

use inls::functionals::gn_quotient;
use inls::ground_state::{petviashvili_solve, recommended_grid};
use inls::spectral_core::{build_grid, PhysicsParams, RadialField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> inls::error::Result<()> {
    let p = PhysicsParams::focusing(1.0, 0.5)?;
    let (n, r_max) = recommended_grid(p.a, p.b);
    let grid = build_grid(p.nu(), n, r_max)?;
    let g = petviashvili_solve(&p, grid.clone(), None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nu = p.nu();
    let mut best: f64 = 0.0;
    for _ in 0..20 {
        let (c1, s1, c2, s2) = (rng.random_range(0.1..2.0), rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0));
        let f = RadialField::from_real_profile(grid.clone(), |r| r.powf(nu - 0.5) * (c1 * (-(r / s1).powi(2)).exp() + c2 * (-(r / s2).powi(2)).exp()));
        best = best.max(gn_quotient(&f, &p)?);
    }
    println!("C_GN(Q) = {:.10}, best random = {best:.10}, ratio {:.4}", g.c_sharp, best / g.c_sharp);
    Ok(())
}
