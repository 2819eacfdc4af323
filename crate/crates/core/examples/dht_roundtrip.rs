//! Round-trip random fields through the discrete Hankel transform for a few orders.

use inls::cli_io::dht_selftest;

fn main() -> inls::error::Result<()> {
    for nu in [0.5, 0.25, 1.118_033_988_749_895] {
        let r = dht_selftest(nu, 256, 1.0, 100, 7)?;
        println!(
            "nu = {nu:.4}: max relative error {:.2e}, 100 round trips in {:.3} s (setup {:.3} s)",
            r.max_rel_error,
            r.elapsed.as_secs_f64(),
            r.setup.as_secs_f64()
        );
    }
    Ok(())
}
