//! Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.
//! Criteria run one at a time so timings and memory are not shared between them.

use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use inls::cli_io::{dht_selftest, parse_config, run_experiment};
use inls::diagnostics::{
    classical_morawetz, coercivity_track, dispersive_decay_check, l4_accumulation, linear_growth, morawetz_fit, plateau, scattering_detect,
    scattering_detect_fields, virial_track, ScatteringConfig, VirialTarget,
};
use inls::evolution::{convergence_study, evolve, EvolutionConfig, SplitStepper, Verdict};
use inls::functionals::{self, gn_quotient, inverse_cube_term, quartic_term, weighted_quartic_term};
use inls::ground_state::{ground_state, oracle_deviation, petviashvili_solve, petviashvili_solve_with, pohozaev_check, shooting_solve, GroundStateResult, PetviashviliOptions, Projection};
use inls::quadrature::cumulative_trapezoid;
use inls::spectral_core::{build_grid, linear_propagate, PhysicsParams, RadialField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written straight to stderr so the line shows without `--nocapture`.
fn verdict(id: usize, name: &str, pass: bool, details: &[String]) -> bool {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id:>2} {} {name}", if pass { "PASS" } else { "FAIL" });
    for d in details {
        let _ = writeln!(err, "    {d}");
    }
    pass
}

fn unit_gaussian(nu: f64, n: usize, r_max: f64, width: f64) -> RadialField {
    let f = RadialField::from_real_profile(build_grid(nu, n, r_max).unwrap(), |r| r.powf(nu - 0.5) * (-(r / width).powi(2)).exp());
    let m = functionals::mass(&f);
    f.scaled(1.0 / m.sqrt())
}

fn collocated(p: &PhysicsParams, n: usize, r_max: f64) -> GroundStateResult {
    let opts = PetviashviliOptions { projection: Projection::Collocation, ..Default::default() };
    petviashvili_solve_with(p, build_grid(p.nu(), n, r_max).unwrap(), None, opts).unwrap()
}

#[test]
fn criterion_01_transform_fidelity() {
    let _g = serial();
    let mut pass = true;
    let mut details = Vec::new();
    for (a, nu) in [(0.0, 0.5), (1.0, 1.25f64.sqrt()), (-0.1875, 0.25)] {
        let r = dht_selftest(nu, 256, 10.0, 100, 1).unwrap();
        let ok = r.max_rel_error <= 1e-10 && r.elapsed.as_secs_f64() < 1.0;
        pass &= ok;
        details.push(format!("a = {a}: max relative L2 error {:.2e} (<= 1e-10), 100 round trips {:.4} s (< 1 s)", r.max_rel_error, r.elapsed.as_secs_f64()));
    }
    assert!(verdict(1, "transform fidelity", pass, &details));
}

#[test]
fn criterion_02_linear_propagator() {
    let _g = serial();
    let mut details = Vec::new();
    let mut worst: f64 = 0.0;
    for a in [0.0, 1.0, -0.1875] {
        let p = PhysicsParams::defocusing(a, 0.5).unwrap();
        let u = unit_gaussian(p.nu(), 256, 20.0, 1.0);
        let stepper = SplitStepper::new(u.grid().clone(), &p, 1e-3).linear_only();
        let mut w = u.samples().to_vec();
        let m = |w: &[Complex64]| -> f64 { 4.0 * std::f64::consts::PI * w.iter().zip(u.grid().weights()).map(|(z, om)| om * z.norm_sqr()).sum::<f64>() };
        let m0 = m(&w);
        let mut prev = m0;
        let mut drift: f64 = 0.0;
        for _ in 0..200 {
            stepper.step(&mut w);
            let now = m(&w);
            drift = drift.max((now - prev).abs() / m0);
            prev = now;
        }
        worst = worst.max(drift);
        details.push(format!("a = {a}: max mass drift per step {drift:.2e} (<= 1e-12)"));
    }
    let grid = build_grid(0.5, 512, 40.0).unwrap();
    let u0 = RadialField::from_real_profile(grid.clone(), |r| (-r * r / 2.0).exp());
    let z = Complex64::new(1.0, 1.0);
    let exact = RadialField::from_profile(grid, |r| z.powf(-1.5) * (-r * r / (2.0 * z)).exp());
    let err = linear_propagate(&u0, 0.5).l2_distance(&exact).unwrap();
    details.push(format!("a = 0 Gaussian at t = 0.5: L2 error against the closed form {err:.2e} (<= 1e-6)"));
    assert!(verdict(2, "linear propagator", worst <= 1e-12 && err <= 1e-6, &details));
}

#[test]
fn criterion_03_dispersive_decay() {
    let _g = serial();
    let times: Vec<f64> = (0..=20).map(|i| 10f64.powf(i as f64 / 20.0)).collect();
    let p1 = PhysicsParams::defocusing(1.0, 0.5).unwrap();
    let d1 = dispersive_decay_check(&p1, &unit_gaussian(p1.nu(), 2048, 200.0, 1.0), &times).unwrap();
    let pm = PhysicsParams::defocusing(-0.1875, 0.5).unwrap();
    let dm = dispersive_decay_check(&pm, &unit_gaussian(pm.nu(), 2048, 200.0, 1.0), &times).unwrap();
    let e = d1.exponent.unwrap();
    let spread = dm.ratio_spread.unwrap();
    let pass = (e + 1.5).abs() <= 0.1 && spread <= 2.0 && d1.trusted && dm.trusted;
    let details = [
        format!("a = 1: fitted sup-norm exponent {e:.4} on t in [1, 10] (-1.5 +- 0.1)"),
        format!("a = -3/16: weighted ratio max/min {spread:.4} (<= 2)"),
        format!("outer-shell mass below 1e-4 at t = 10: {} / {}", d1.trusted, dm.trusted),
    ];
    assert!(verdict(3, "dispersive decay", pass, &details));
}

#[test]
fn criterion_04_ground_state() {
    let _g = serial();
    let mut pass = true;
    let mut details = Vec::new();
    for a in [-0.1875, 0.0, 1.0] {
        for b in [0.25, 0.5] {
            let p = PhysicsParams::focusing(a, b).unwrap();
            let t0 = Instant::now();
            let g = ground_state(a, b).unwrap();
            let po = pohozaev_check(&g, &p);
            let oracle = shooting_solve(&p, 1e-13).unwrap();
            let dev = oracle_deviation(&g, &oracle);
            let ok = g.residual <= 1e-8 && po.k_over_m.rel_error() <= 1e-4 && po.p_over_m.rel_error() <= 1e-4 && dev <= 1e-4;
            pass &= ok;
            details.push(format!(
                "(a, b) = ({a}, {b}) N = {}: residual {:.1e}, K/M {:.1e}, P/M {:.1e}, shooting sup {:.1e} [{}] {:.0} s",
                g.grid().len(),
                g.residual,
                po.k_over_m.rel_error(),
                po.p_over_m.rel_error(),
                dev,
                if ok { "ok" } else { "out of tolerance" },
                t0.elapsed().as_secs_f64()
            ));
        }
    }
    let p0 = PhysicsParams::focusing(0.0, 0.0).unwrap();
    let s = shooting_solve(&p0, 1e-13).unwrap();
    let g0 = ground_state(0.0, 0.0).unwrap();
    let (e_shoot, e_pet) = ((s.c / 4.3374 - 1.0).abs(), (g0.origin_amplitude() / 4.3374 - 1.0).abs());
    pass &= e_shoot <= 1e-3 && e_pet <= 1e-3;
    details.push(format!("(0, 0): shooting Q(0) = {:.8}, Petviashvili Q(0) = {:.8}, against 4.3374 to 1e-3: {e_shoot:.1e}, {e_pet:.1e}", s.c, g0.origin_amplitude()));
    assert!(verdict(4, "ground state", pass, &details));
}

#[test]
fn criterion_05_gn_sharpness() {
    let _g = serial();
    let mut pass = true;
    let mut details = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (a, b, n, r_max) in [(1.0, 0.5, 512, 10.0), (0.0, 0.25, 1024, 8.0)] {
        let p = PhysicsParams::focusing(a, b).unwrap();
        let grid = build_grid(p.nu(), n, r_max).unwrap();
        let g = petviashvili_solve(&p, grid.clone(), None).unwrap();
        let nu = p.nu();
        let qv = g.profile_values();
        let mut best: f64 = 0.0;
        for i in 0..50 {
            let f = if i < 25 {
                let (c1, s1, c2, s2) = (rng.random_range(0.1..2.0), rng.random_range(0.3..2.5), rng.random_range(-1.0..1.0), rng.random_range(0.3..3.0));
                RadialField::from_real_profile(grid.clone(), move |r| r.powf(nu - 0.5) * (c1 * (-(r / s1).powi(2)).exp() + c2 * (-(r / s2).powi(2)).exp()))
            } else {
                let (eps, s, r0) = (rng.random_range(0.01..0.3), rng.random_range(0.3..2.0), rng.random_range(0.0..3.0));
                let bump: Vec<f64> = grid.nodes().iter().map(|&r| r.powf(nu - 0.5) * (-((r - r0) / s).powi(2)).exp()).collect();
                let w: Vec<Complex64> = grid
                    .nodes()
                    .iter()
                    .zip(qv.iter().zip(&bump))
                    .map(|(&r, (q, h))| Complex64::from(r.sqrt() * (q + eps * qv[0] * h)))
                    .collect();
                RadialField::from_reduced(grid.clone(), w).unwrap()
            };
            best = best.max(gn_quotient(&f, &p).unwrap());
        }
        let ratio = best / g.c_sharp;
        pass &= ratio <= 1.0 + 1e-3;
        details.push(format!("(a, b) = ({a}, {b}): C_GN(Q) = {:.10}, best of 50 random fields / C_GN(Q) = {ratio:.6} (<= 1.001)", g.c_sharp));
    }
    assert!(verdict(5, "GN sharpness", pass, &details));
}

#[test]
fn criterion_06_splitting_order() {
    let _g = serial();
    let mut pass = true;
    let mut details = Vec::new();
    for b in [0.0, 0.25, 0.75] {
        let p = PhysicsParams::defocusing(0.0, b).unwrap();
        let u = RadialField::from_real_profile(build_grid(0.5, 128, 20.0).unwrap(), |r| (-r * r / 2.0).exp());
        let rep = convergence_study(&u, &p, 1.0, &[0.01, 0.005, 0.0025]).unwrap();
        if b < 0.5 {
            pass &= !rep.inconclusive && (rep.order - 2.0).abs() <= 0.1;
            details.push(format!("b = {b}: order {:.4} (2.0 +- 0.1), ratios {:?}", rep.order, rep.ratios));
        } else {
            details.push(format!("b = {b}: measured order {:.4} (reported)", rep.order));
        }
    }
    assert!(verdict(6, "splitting order", pass, &details));
}

#[test]
fn criterion_07_virial_identity() {
    let _g = serial();
    let p = PhysicsParams::defocusing(1.0, 0.5).unwrap();
    let nu = p.nu();
    let u = RadialField::from_real_profile(build_grid(nu, 256, 20.0).unwrap(), |r| r.powf(nu - 0.5) * (-r * r / 2.0).exp());
    let track = |dt: f64, target| {
        let cfg = EvolutionConfig { dt, t_end: 1.0, monitor_stride: 1, ..Default::default() };
        let run = evolve(&u, &p, &cfg).unwrap();
        virial_track(run.series(), &p, 0, target).unwrap().max_mismatch
    };
    let (coarse, fine) = (track(2e-3, VirialTarget::Displayed), track(1e-3, VirialTarget::Displayed));
    let order = (coarse / fine).log2();
    let (ic, ifn) = (track(2e-3, VirialTarget::Identity), track(1e-3, VirialTarget::Identity));
    let pass = (order - 2.0).abs() <= 0.1 && fine <= 1e-4;
    let details = [
        format!("against 8[K + lambda P]: mismatch {coarse:.3e} at dt = 2e-3, {fine:.3e} at dt = 1e-3 (<= 1e-4), ratio {:.3} (order 2 +- 0.1)", coarse / fine),
        format!("against 8K + 2(3+b) lambda P: mismatch {ic:.3e} at dt = 2e-3, {ifn:.3e} at dt = 1e-3, ratio {:.3}", ic / ifn),
    ];
    assert!(verdict(7, "virial identity", pass, &details));
}

#[test]
fn criterion_08_morawetz_decay() {
    let _g = serial();
    let p = PhysicsParams::defocusing(1.0, 0.5).unwrap();
    let cfg = EvolutionConfig { dt: 0.01, t_end: 100.0, monitor_stride: 10, field_stride: 1, reflect_mass_cap: 0.5, ..Default::default() };
    let horizons = [25.0, 50.0, 100.0];
    let t0 = Instant::now();
    let run = evolve(&unit_gaussian(p.nu(), 512, 256.0, 2.0), &p, &cfg).unwrap();
    let fit = morawetz_fit(&run, &horizons).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let wide = evolve(&unit_gaussian(p.nu(), 1024, 512.0, 2.0), &p, &cfg).unwrap();
    let wide_fit = morawetz_fit(&wide, &horizons).unwrap();
    let wall = fit.values.iter().zip(&wide_fit.values).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    let pass = fit.spread <= 2.0 && elapsed <= 600.0;
    let details = [
        format!("C_T at T = 25, 50, 100: {:?}", fit.constants.iter().map(|c| format!("{c:.4e}")).collect::<Vec<_>>()),
        format!("max C_T / min C_T = {:.4} (<= 2), runtime {elapsed:.1} s (<= 600 s)", fit.spread),
        format!("same data on a doubled domain changes the averages by {wall:.1e}"),
    ];
    assert!(verdict(8, "Morawetz decay", pass, &details));
}

struct FocusingRun {
    c: f64,
    verdict: Verdict,
    delta_emp: f64,
    c_emp: f64,
    max_cauchy: f64,
    min_ball_mass: f64,
    consistent: bool,
}

/// c·Q runs at (a, b) = (0, 1/2) up to t = 50, shared by the coercivity and scattering criteria.
fn focusing_family() -> &'static Vec<FocusingRun> {
    static FAMILY: OnceLock<Vec<FocusingRun>> = OnceLock::new();
    FAMILY.get_or_init(|| {
        let p = PhysicsParams::focusing(0.0, 0.5).unwrap();
        let g = collocated(&p, 32767, 3200.0);
        let cfg = EvolutionConfig { dt: 0.01, t_end: 50.0, monitor_stride: 50, field_stride: 10, ..Default::default() };
        (3..=9)
            .map(|k| {
                let c = k as f64 / 10.0;
                let run = evolve(&g.q.scaled(c), &p, &cfg).unwrap();
                let co = coercivity_track(run.series(), &p, &g);
                let s = scattering_detect(&run, &ScatteringConfig::default()).unwrap();
                FocusingRun {
                    c,
                    verdict: run.verdict,
                    delta_emp: co.delta_emp,
                    c_emp: co.c_emp.unwrap(),
                    max_cauchy: s.max_cauchy,
                    min_ball_mass: s.min_ball_mass,
                    consistent: s.consistent,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_09_coercivity() {
    let _g = serial();
    let family = focusing_family();
    let mut pass = true;
    let mut details = Vec::new();
    for f in family {
        pass &= f.verdict == Verdict::Completed && f.delta_emp > 0.0 && f.c_emp > 0.0;
        details.push(format!("c = {}: {} to t = 50, min (i) margin {:.4e}, min (ii) margin (K-P)/P {:.4e}", f.c, f.verdict.label(), f.delta_emp, f.c_emp));
    }
    let monotone = family.windows(2).all(|w| w[1].delta_emp <= w[0].delta_emp && w[1].c_emp <= w[0].c_emp);
    details.push(format!("margins nonincreasing in c: {monotone}"));
    assert!(verdict(9, "coercivity", pass, &details));
}

#[test]
fn criterion_10_scattering_dichotomy() {
    let _g = serial();
    let cfg = ScatteringConfig::default();
    let mut details = Vec::new();

    let pd = PhysicsParams::defocusing(1.0, 0.5).unwrap();
    let ev = EvolutionConfig { dt: 0.01, t_end: 100.0, monitor_stride: 10, field_stride: 10, ..Default::default() };
    let drun = evolve(&unit_gaussian(pd.nu(), 512, 256.0, 5.0), &pd, &ev).unwrap();
    let ds = scattering_detect(&drun, &cfg).unwrap();
    details.push(format!("defocusing a = 1: Cauchy tail {:.2e}, min mass in ball {:.2e}, consistent {}", ds.max_cauchy, ds.min_ball_mass, ds.consistent));
    let mut pass = ds.consistent;

    for f in focusing_family() {
        pass &= f.consistent;
        details.push(format!("focusing {} Q: Cauchy tail {:.2e}, min mass in ball {:.2e}, consistent {}", f.c, f.max_cauchy, f.min_ball_mass, f.consistent));
    }

    let pf = PhysicsParams::focusing(0.0, 0.5).unwrap();
    let q = collocated(&pf, 512, 32.0).q;
    let traj: Vec<(f64, RadialField)> = (0..=50).map(|i| i as f64).map(|t| (t, q.rotated(Complex64::from_polar(1.0, t)))).collect();
    let cs = scattering_detect_fields(&traj.iter().collect::<Vec<_>>(), true, &cfg).unwrap();
    let control = cs.max_cauchy >= 1e2 * cfg.cauchy_tol && cs.min_ball_mass >= 1e2 * cfg.epsilon_sq;
    pass &= control;
    details.push(format!(
        "standing wave e^(it)Q: Cauchy tail {:.2e} (>= {:.0e}), min mass in ball {:.2e} (>= {:.0e})",
        cs.max_cauchy,
        1e2 * cfg.cauchy_tol,
        cs.min_ball_mass,
        1e2 * cfg.epsilon_sq
    ));

    let g = collocated(&pf, 16383, 25.0);
    let u0 = g.q.scaled(1.5);
    let e0 = functionals::energy(&u0, &pf);
    let brun = evolve(&u0, &pf, &EvolutionConfig { dt: 1e-4, t_end: 10.0, monitor_stride: 20, ..Default::default() }).unwrap();
    let blew = matches!(brun.verdict, Verdict::BlowupDetected { t } if t < 10.0);
    pass &= blew && e0 < 0.0;
    details.push(format!("1.5 Q: E = {e0:.4}, verdict {:?}", brun.verdict));
    assert!(verdict(10, "scattering dichotomy", pass, &details));
}

#[test]
fn criterion_11_spacetime_bounds() {
    let _g = serial();
    let p = PhysicsParams::defocusing(1.0, 0.5).unwrap();
    let run = evolve(&unit_gaussian(p.nu(), 512, 256.0, 5.0), &p, &EvolutionConfig { dt: 0.01, t_end: 50.0, monitor_stride: 10, ..Default::default() }).unwrap();
    let series = run.series();
    let t = series.times();
    let (i1, i2) = classical_morawetz(series);
    let l4 = l4_accumulation(series);
    let growth = [plateau(&t, &i1, 0.2).growth, plateau(&t, &i2, 0.2).growth, plateau(&t, &l4, 0.2).growth];
    let mut pass = run.verdict == Verdict::Completed && growth.iter().all(|g| *g < 0.01);
    let mut details = vec![format!("defocusing a = 1, T = 50: growth over the final fifth I1 {:.2e}, I2 {:.2e}, L4^4 {:.2e} (< 1e-2)", growth[0], growth[1], growth[2])];

    let pf = PhysicsParams::focusing(0.0, 0.5).unwrap();
    let q = collocated(&pf, 512, 32.0).q;
    let times: Vec<f64> = (0..=100).map(|i| 0.5 * i as f64).collect();
    let traj: Vec<RadialField> = times.iter().map(|&s| q.rotated(Complex64::from_polar(1.0, s))).collect();
    for (name, integrand) in [
        ("I1", traj.iter().map(inverse_cube_term).collect::<Vec<_>>()),
        ("I2", traj.iter().map(|u| weighted_quartic_term(u, pf.b)).collect()),
        ("L4^4", traj.iter().map(quartic_term).collect()),
    ] {
        let cum = cumulative_trapezoid(&times, &integrand);
        let (slope, r2) = linear_growth(&times, &cum, 1.0);
        let g = plateau(&times, &cum, 0.2).growth;
        pass &= r2 > 0.999 && slope > 0.0 && g > 0.01;
        details.push(format!("standing wave {name}: slope {slope:.4e}, linear fit R^2 {r2:.6}, final-fifth growth {g:.3}"));
    }
    assert!(verdict(11, "spacetime bounds", pass, &details));
}

#[test]
fn criterion_12_determinism() {
    let _g = serial();
    let text = "physics.a = 1\nphysics.b = 0.5\nphysics.lambda = focusing\ngrid.n = 128\ngrid.r_max = 30\n\
                initial.family = ground_state_multiple\ninitial.multiplier = 0.7\nevolution.dt = 0.01\nevolution.t_end = 2\n\
                evolution.monitor_stride = 5\nevolution.field_stride = 4\nseed = 42\n";
    let cfg = parse_config(text).unwrap();
    let base = std::env::temp_dir().join(format!("inls-acceptance-{}", std::process::id()));
    let read_all = |root: &std::path::Path| {
        let out = run_experiment(&cfg, root).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(out.dir.join("fields")).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.push(out.dir.join("timeseries.csv"));
        files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>()
    };
    let (a, b) = (read_all(&base.join("first")), read_all(&base.join("second")));
    let _ = std::fs::remove_dir_all(&base);
    let pass = a == b && a.len() > 1;
    let details = [format!("{} CSV and snapshot files compared byte for byte: identical {}", a.len(), a == b)];
    assert!(verdict(12, "determinism", pass, &details));
}
