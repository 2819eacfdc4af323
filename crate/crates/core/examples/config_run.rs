//! Parse a config, run it into a directory and re-run the audits from disk.

use inls::cli_io::{diagnose, emit_config, parse_config, reference_defocusing_config, run_experiment};

fn main() -> inls::error::Result<()> {
    let cfg = parse_config(reference_defocusing_config())?;
    print!("{}", emit_config(&cfg));
    let root = std::env::temp_dir().join("inls-example");
    let out = run_experiment(&cfg, &root)?;
    println!("verdict = {} in {}", out.verdict.label(), out.dir.display());
    print!("{}", diagnose(&out.dir)?.render());
    Ok(())
}
