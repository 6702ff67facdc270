//! Acceptance gate. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails. Tolerances are fixed here, not read
//! from a config.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dabsig::dab::{interval_map, solve_half_cycle, verify_symmetry};
use dabsig::oracle::{measure_frequency_response, run_to_steady_state};
use dabsig::pwlti::{closed_form_state, propagate, solve_periodic_fixed_point};
use dabsig::small_signal::{
    build_half_cycle, delta_h, delta_h_dual, h_fix, resolvent_similarity_residual, verify_surface_equivalence,
};
use dabsig::{
    Complex64, DabParams, DabSchedule, Injection, Matrix, Polarity, Schedule, Segment, SimConfig, Spacing, Surface,
    SurfaceLabel, SurfacePair, SweepSpec, SymmetryConstants, TimingOverride, Tolerances, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn random_params(count: usize, seed: u64) -> Vec<DabParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let log = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
            DabParams {
                n_turns: rng.gen_range(0.5..2.0),
                inductance: log(&mut rng, 5e-6, 50e-6),
                capacitance: log(&mut rng, 20e-6, 500e-6),
                series_resistance: log(&mut rng, 5e-3, 0.2),
                esr: rng.gen_range(0.0..0.05),
                load: log(&mut rng, 2.0, 50.0),
                vin: rng.gen_range(50.0..400.0),
                fs: log(&mut rng, 20e3, 200e3),
                phase_shift: rng.gen_range(0.05..0.95),
                ramp_amplitude: rng.gen_range(0.5..5.0),
            }
        })
        .collect()
}

const PARAM_SEED: u64 = 2024;

fn rel(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn c1_closed_form_vs_iteration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let segs: Vec<Segment> = (0..n)
            .map(|_| {
                let (d1, d2) = (rng.gen_range(1e2..1e5), rng.gen_range(1e1..1e4));
                let k = rng.gen_range(1e2..1e5);
                let r = rng.gen_range(0.01..10.0);
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let a = Matrix::from_row_slice(2, 2, &[-d1, s * k, -s * k * r, -d2]);
                let b = Matrix::from_row_slice(2, 1, &[rng.gen_range(-1e5..1e5), rng.gen_range(-1e3..1e3)]);
                Segment::new(a, b, rng.gen_range(0.0..1e-4)).unwrap()
            })
            .collect();
        let u = Vector::from_column_slice(&[rng.gen_range(-500.0..500.0)]);
        let x0 = Vector::from_column_slice(&[rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)]);
        let full = Schedule::new(segs.clone(), u.clone()).map_err(e)?;
        let xs = propagate(&full, &x0).map_err(e)?;
        for k in 1..=n {
            let prefix = Schedule::new(segs[..k].to_vec(), u.clone()).map_err(e)?;
            let closed = closed_form_state(&prefix, &x0).map_err(e)?;
            worst = worst.max(rel(&closed, &xs[k - 1]));
        }
    }
    ensure!(worst <= 1e-12, "max relative error {worst:.3e} > 1e-12");
    Ok(format!("max relative error {worst:.3e} (100 schedules, every index)"))
}

fn c2_fixed_point_residual() -> Outcome {
    let mut worst = 0.0f64;
    for p in random_params(50, PARAM_SEED) {
        let dab = DabSchedule::build(p).map_err(e)?;
        let x = solve_periodic_fixed_point(&dab.schedule).map_err(e)?;
        let back = closed_form_state(&dab.schedule, &x).map_err(e)?;
        worst = worst.max((&back - &x).norm() / (1.0 + x.norm()));
    }
    ensure!(worst <= 1e-10, "max scaled residual {worst:.3e} > 1e-10");
    Ok(format!("max ‖X_n(x*) - x*‖/(1+‖x*‖) = {worst:.3e}"))
}

fn c3_half_cycle_equivalence() -> Outcome {
    let (mut eq, mut ret) = (0.0f64, 0.0f64);
    for p in random_params(50, PARAM_SEED) {
        let dab = DabSchedule::build(p).map_err(e)?;
        let full = solve_periodic_fixed_point(&dab.schedule).map_err(e)?;
        let half = solve_half_cycle(&dab).map_err(e)?;
        eq = eq.max(rel(&half, &full));
        ret = ret.max(rel(&closed_form_state(&dab.schedule, &half).map_err(e)?, &half));
    }
    ensure!(eq <= 1e-10 && ret <= 1e-10, "half vs full {eq:.3e}, four-step return {ret:.3e}");
    Ok(format!("half vs full {eq:.3e}, four-step return {ret:.3e}"))
}

const SYMMETRY_NAMES: [&str; 4] = ["Phi3 = S Phi1 S", "Phi4 = S Phi2 S", "Gamma3 = -S Gamma1", "Gamma4 = -S Gamma2"];

fn c4_segment_symmetry() -> Outcome {
    let mut worst = 0.0f64;
    for p in random_params(50, PARAM_SEED) {
        let dab = DabSchedule::build(p).map_err(e)?;
        let r = verify_symmetry(&dab, 1e-12).map_err(e)?;
        for name in SYMMETRY_NAMES {
            let c = r.get(name).ok_or_else(|| format!("missing check {name}"))?;
            ensure!(c.passed(), "{name}: {:.3e} on {p:?}", c.residual);
            worst = worst.max(c.residual);
        }
    }
    let p = DabParams::reference();
    let t3 = 1.1 * p.phase_shift * p.half_period();
    let skewed = DabSchedule::build_with(p, TimingOverride { t3: Some(t3) }).map_err(e)?;
    let r = verify_symmetry(&skewed, 1e-12).map_err(e)?;
    let failing: Vec<&str> = SYMMETRY_NAMES.iter().copied().filter(|n| !r.get(n).unwrap().passed()).collect();
    ensure!(failing.len() == 4, "T3 override only broke {failing:?}");
    Ok(format!("max residual {worst:.3e}; T3 = 1.1·T1 breaks all four"))
}

fn c5_oracle_steady_state() -> Outcome {
    let start = Instant::now();
    let dab = DabSchedule::build(DabParams::reference()).map_err(e)?;
    let ss = run_to_steady_state(&dab, &SimConfig::default()).map_err(e)?;
    let elapsed = start.elapsed();
    let x = solve_periodic_fixed_point(&dab.schedule).map_err(e)?;
    let dev = rel(&ss.x, &x);
    let v_dev = (ss.x[1] - x[1]).abs() / x[1].abs();
    ensure!(dev <= 1e-6, "oracle deviation {dev:.3e} > 1e-6");
    ensure!(elapsed <= Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("state deviation {dev:.3e} (v_C {v_dev:.3e}) after {} periods in {elapsed:.2?}", ss.periods))
}

fn c6_eta_finite_differences() -> Outcome {
    let delta = 1e-9;
    let dr = SymmetryConstants::d_r();
    let mut worst = 0.0f64;
    for p in random_params(20, PARAM_SEED + 1) {
        let dab = DabSchedule::build(p).map_err(e)?;
        for label in SurfaceLabel::ALL {
            let s = Surface::new(label);
            let m = build_half_cycle(&dab, s).map_err(e)?;
            let end = |ta: f64, tb: f64| -> Result<Vector, String> {
                let ma = interval_map(&dab, s.a, ta).map_err(e)?;
                let mb = interval_map(&dab, s.b, tb).map_err(e)?;
                Ok(&dr * mb.apply(&ma.apply(&m.x_star)))
            };
            let (ta, tb) = (dab.segment(s.a).duration, dab.segment(s.b).duration);
            let fa = (end(ta + delta, tb)? - end(ta - delta, tb)?) / (2.0 * delta);
            let fb = (end(ta, tb + delta)? - end(ta, tb - delta)?) / (2.0 * delta);
            worst = worst.max(rel(&fa, &m.eta_a)).max(rel(&fb, &m.eta_b));
        }
    }
    ensure!(worst <= 1e-4, "max relative error {worst:.3e} > 1e-4");
    Ok(format!("max relative error {worst:.3e} (20 sets x 4 surfaces)"))
}

fn c7_transfer_vs_injection() -> Outcome {
    let start = Instant::now();
    let dab = DabSchedule::build(DabParams::reference()).map_err(e)?;
    let fs = dab.params.fs;
    let ts = dab.params.period();
    let surface = Surface::new(SurfaceLabel::PrimaryPlus);
    let model = build_half_cycle(&dab, surface).map_err(e)?;
    let grid = SweepSpec { f_min: fs / 1000.0, f_max: fs / 10.0, points: 8, spacing: Spacing::Log };
    let (mut worst_mag, mut worst_ph) = (0.0f64, 0.0f64);
    for f in grid.frequencies(fs).map_err(e)? {
        let inj = Injection::coherent(f, 4000, 2000, ts).map_err(e)?;
        let cfg = SimConfig { injection: Some(inj), ..SimConfig::default() };
        let g = measure_frequency_response(&dab, surface, &cfg).map_err(e)?.gain();
        let h = h_fix(&model, &dab.c_phys, model.z_at(inj.f)).map_err(e)?;
        for ch in 0..2 {
            let r = g[ch] / h[ch];
            worst_mag = worst_mag.max((g[ch].norm() / h[ch].norm() - 1.0).abs());
            worst_ph = worst_ph.max(r.arg().to_degrees().abs());
        }
    }
    let elapsed = start.elapsed();
    ensure!(worst_mag <= 0.02 && worst_ph <= 2.0, "magnitude {worst_mag:.3e}, phase {worst_ph:.3e} deg");
    ensure!(elapsed <= Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("max magnitude error {worst_mag:.3e}, phase {worst_ph:.3e} deg, {elapsed:.2?}"))
}

fn c8_delta_h() -> Outcome {
    let dab = DabSchedule::build(DabParams::reference()).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let zs: Vec<Complex64> = (0..100).map(|_| Complex64::from_polar(1.0, rng.gen_range(-PI..PI))).collect();
    let fs = dab.params.fs;
    let sweep = SweepSpec { f_min: fs / 1000.0, f_max: fs, points: 200, spacing: Spacing::Log };
    let freqs = sweep.frequencies(fs).map_err(e)?;
    let one = Complex64::new(1.0, 0.0);
    let (mut dual, mut dc, mut ratio) = (0.0f64, 0.0f64, 0.0f64);
    for label in SurfaceLabel::ALL {
        let m = build_half_cycle(&dab, Surface::new(label)).map_err(e)?;
        for &z in &zs {
            dual = dual.max(delta_h_dual(&m, &dab.c_phys, z, 1e-14).map_err(e)?.residual);
        }
        let h1 = h_fix(&m, &dab.c_phys, one).map_err(e)?.norm();
        dc = dc.max(delta_h(&m, &dab.c_phys, one).map_err(e)?.norm() / h1);
        for &f in &freqs {
            let ev = delta_h_dual(&m, &dab.c_phys, m.z_at(f), 1e-14).map_err(e)?;
            ratio = ratio.max(ev.closed_form.norm() / ev.bound);
        }
    }
    ensure!(dual <= 1e-12, "dual-path residual {dual:.3e} > 1e-12");
    ensure!(dc <= f64::EPSILON, "ΔH(1) relative {dc:.3e}");
    ensure!(ratio <= 1.0, "‖ΔH‖ exceeds the bound by a factor {ratio}");
    Ok(format!("dual path {dual:.3e}, ΔH(1) {dc:.1e}, max ‖ΔH‖/bound {ratio:.3}"))
}

fn c9_surface_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut resolvent = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..5);
        let t = Matrix::from_fn(n, n, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let z = Complex64::from_polar(rng.gen_range(1.5..3.0), rng.gen_range(0.0..2.0 * PI));
        resolvent = resolvent.max(resolvent_similarity_residual(&t, &a, z).map_err(e)?);
    }

    let dab = DabSchedule::build(DabParams::reference()).map_err(e)?;
    let zs: Vec<Complex64> = (0..64).map(|k| Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / 64.0)).collect();
    let tol = Tolerances { similarity: 1e-12, surface_chain: 1e-10, ..Tolerances::default() };
    let mut parts = vec![format!("resolvent {resolvent:.3e}")];
    let mut failures = Vec::new();
    if resolvent > 1e-12 {
        failures.push(format!("resolvent identity {resolvent:.3e} > 1e-12"));
    }
    for pair in [SurfacePair::Plus, SurfacePair::Minus] {
        let r = verify_surface_equivalence(&dab, pair, &zs, &tol, None).map_err(e)?;
        for c in &r.checks {
            parts.push(format!("{} {:.3e}", c.name.split_whitespace().take(2).collect::<Vec<_>>().join(" "), c.residual));
            if !c.passed() {
                failures.push(format!("{} = {:.3e} > {:.0e}", c.name, c.residual, c.tolerance));
            }
        }
    }

    // same polarity on both surfaces of a pair: the secondary input vector
    // must come out as exactly the negative of the correct-polarity one
    let s = Surface::new(SurfaceLabel::SecondaryPlus);
    let right = build_half_cycle(&dab, s).map_err(e)?;
    let wrong = build_half_cycle(&dab, s.with_polarity_override(Polarity::Negative)).map_err(e)?;
    let flip = zs
        .iter()
        .map(|&z| (wrong.input_vector(z) + right.input_vector(z)).norm() / right.input_vector(z).norm())
        .fold(0.0, f64::max);
    let neg = verify_surface_equivalence(&dab, SurfacePair::Plus, &zs, &tol, Some(Polarity::Negative)).map_err(e)?;
    let b_fails = !neg.checks[1].passed();
    parts.push(format!("same-polarity sign flip {flip:.1e}"));
    if !(flip == 0.0 && b_fails) {
        failures.push(format!("same-polarity test: flip residual {flip:.3e}, b check failing = {b_fails}"));
    }
    ensure!(failures.is_empty(), "{} [measured: {}]", failures.join("; "), parts.join(", "));
    Ok(parts.join(", "))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn c10_cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dabsig");
    let config = workspace_root().join("configs/reference.toml");
    let dir = std::env::temp_dir().join(format!("dabsig-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(e)?;
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("steady-state", vec!["--method", "full"]),
        ("steady-state", vec!["--method", "half"]),
        ("bode", vec!["--model", "fix"]),
        ("bode", vec!["--model", "sc"]),
        ("bode", vec!["--model", "both", "--surface", "S-"]),
        ("simulate", vec![]),
        ("compare", vec![]),
        ("verify", vec![]),
    ];
    let mut failures = Vec::new();
    let mut verify_code = None;
    for (i, (cmd, extra)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.join(format!("{i}-{rep}.out"));
            let mut c = Command::new(bin);
            c.arg(cmd).arg(&config).args(extra);
            if *cmd != "verify" {
                c.arg("--out").arg(&out);
            }
            let res = c.output().map_err(e)?;
            let data = if *cmd == "verify" {
                verify_code = res.status.code();
                res.stdout
            } else {
                if !res.status.success() {
                    failures.push(format!("{cmd} exited {:?}", res.status.code()));
                }
                std::fs::read(&out).unwrap_or_default()
            };
            outputs.push(data);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            failures.push(format!("{cmd} {extra:?} output differs between runs"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    if verify_code != Some(0) {
        failures.push(format!("verify exited {verify_code:?} on the reference config"));
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok("8 invocations byte-identical; verify exits 0".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed form vs iteration", c1_closed_form_vs_iteration),
        ("fixed-point residual", c2_fixed_point_residual),
        ("half-cycle equivalence", c3_half_cycle_equivalence),
        ("segment symmetry identities", c4_segment_symmetry),
        ("oracle steady state", c5_oracle_steady_state),
        ("timing sensitivities vs finite differences", c6_eta_finite_differences),
        ("transfer function vs injection", c7_transfer_vs_injection),
        ("ΔH identity and bound", c8_delta_h),
        ("surface equivalence", c9_surface_equivalence),
        ("CLI determinism", c10_cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2}: {name} — {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} — {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
