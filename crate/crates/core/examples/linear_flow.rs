//! Free evolution of a Gaussian at a = 0 against the closed form
//! u(t, r) = (1 + 2it)^{-3/2} exp(−r²/(2(1 + 2it))).

use inls::functionals::mass;
use inls::spectral_core::{build_grid, linear_propagate, RadialField};
use num_complex::Complex64;

fn main() -> inls::error::Result<()> {
    let grid = build_grid(0.5, 512, 40.0)?;
    let u0 = RadialField::from_real_profile(grid.clone(), |r| (-r * r / 2.0).exp());
    for t in [0.1, 0.5, 1.0, 2.0] {
        let u = linear_propagate(&u0, t);
        let z = Complex64::new(1.0, 2.0 * t);
        let exact = RadialField::from_profile(grid.clone(), |r| z.powf(-1.5) * (-r * r / (2.0 * z)).exp());
        println!("t = {t}: L2 error {:.2e}, mass drift {:.2e}", u.l2_distance(&exact)?, (mass(&u) - mass(&u0)).abs() / mass(&u0));
    }
    Ok(())
}
