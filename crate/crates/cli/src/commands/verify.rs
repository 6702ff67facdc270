//! Identity suite run by `dabsig verify`.

use std::f64::consts::PI;
use std::fmt::Write;

use dabsig::dab::{solve_half_cycle, verify_symmetry};
use dabsig::pwlti::{closed_form_state, solve_periodic_fixed_point};
use dabsig::small_signal::{
    build_half_cycle, delta_h, delta_h_dual, h_fix, resolvent_similarity_residual, verify_surface_equivalence,
};
use dabsig::{Check, Complex64, DabSchedule, Matrix, Result, SurfaceLabel, SurfacePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::configured_surface;
use crate::{CliError, ConfigFile};

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub check: Check,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub rows: Vec<SuiteRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.check.passed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteRow> {
        self.rows.iter().filter(|r| !r.check.passed())
    }

    fn extend(&mut self, suite: &'static str, checks: Result<Vec<Check>>) {
        match checks {
            Ok(checks) => self.rows.extend(checks.into_iter().map(|check| SuiteRow { suite, check })),
            Err(e) => self.rows.push(SuiteRow {
                suite,
                check: Check::new("suite could not run", f64::NAN, 0.0).with_note(e.to_string()),
            }),
        }
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.check.name.len()).max().unwrap_or(0).max(8);
        let mut s = format!("{:<20} {:<width$} {:>10} {:>10}  result\n", "suite", "identity", "residual", "tolerance");
        for r in &self.rows {
            let c = &r.check;
            let _ = write!(
                s,
                "{:<20} {:<width$} {:>10.3e} {:>10.1e}  {}",
                r.suite,
                c.name,
                c.residual,
                c.tolerance,
                if c.passed() { "PASS" } else { "FAIL" }
            );
            if let Some(note) = &c.note {
                let _ = write!(s, "  ({note})");
            }
            s.push('\n');
        }
        let failed = self.failures().count();
        let _ = writeln!(s, "{} checks, {} failed", self.rows.len(), failed);
        s
    }
}

fn unit_circle(n: usize) -> Vec<Complex64> {
    // offset by half a step so neither z = 1 nor z = -1 is hit
    (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / n as f64)).collect()
}

fn segment_symmetry(dab: &DabSchedule, cfg: &ConfigFile) -> Result<Vec<Check>> {
    Ok(verify_symmetry(dab, cfg.tolerances.symmetry)?.checks)
}

fn half_cycle(dab: &DabSchedule, cfg: &ConfigFile) -> Result<Vec<Check>> {
    let tol = &cfg.tolerances;
    let full = solve_periodic_fixed_point(&dab.schedule)?;
    let back = closed_form_state(&dab.schedule, &full)?;
    let mut checks = vec![Check::new(
        "X4(x*) = x*",
        (&back - &full).norm() / (1.0 + full.norm()),
        tol.relative,
    )];
    let half = solve_half_cycle(dab)?;
    let scale = full.norm().max(tol.absolute_floor);
    checks.push(Check::new("half-cycle x0 = full-period x*", (&half - &full).norm() / scale, tol.half_cycle));
    let ret = closed_form_state(&dab.schedule, &half)?;
    checks.push(Check::new(
        "four steps from half-cycle x0 return to x0",
        (&ret - &half).norm() / half.norm().max(tol.absolute_floor),
        tol.half_cycle,
    ));
    Ok(checks)
}

fn resolvent_similarity(cfg: &ConfigFile) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.verify.seed);
    let mut worst = 0.0f64;
    for _ in 0..cfg.verify.random_matrices {
        let n = rng.gen_range(2..5);
        let t = Matrix::from_fn(n, n, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let z = Complex64::from_polar(rng.gen_range(1.5..3.0), rng.gen_range(0.0..2.0 * PI));
        worst = worst.max(resolvent_similarity_residual(&t, &a, z)?);
    }
    Ok(vec![Check::new(
        format!("(zI - T^-1 A T)^-1 = T^-1 (zI - A)^-1 T, {} random", cfg.verify.random_matrices),
        worst,
        cfg.tolerances.similarity,
    )])
}

fn surfaces(dab: &DabSchedule, cfg: &ConfigFile) -> Result<Vec<Check>> {
    let grid = unit_circle(cfg.verify.z_points);
    let mut checks = Vec::new();
    for pair in [SurfacePair::Plus, SurfacePair::Minus] {
        let r = verify_surface_equivalence(dab, pair, &grid, &cfg.tolerances, cfg.overrides.secondary_polarity)?;
        checks.extend(r.checks);
    }
    Ok(checks)
}

fn delta_h_suite(dab: &DabSchedule, cfg: &ConfigFile) -> Result<Vec<Check>> {
    let tol = &cfg.tolerances;
    let grid = unit_circle(cfg.verify.delta_h_points);
    let freqs = cfg.sweep().frequencies(dab.params.fs)?;
    let one = Complex64::new(1.0, 0.0);
    let mut checks = Vec::new();
    for label in SurfaceLabel::ALL {
        let m = build_half_cycle(dab, configured_surface(cfg, label))?;
        let mut dual = 0.0f64;
        for &z in &grid {
            dual = dual.max(delta_h_dual(&m, &dab.c_phys, z, tol.absolute_floor)?.residual);
        }
        checks.push(Check::new(format!("{label} H_fix - H_sc = dH"), dual, tol.delta_h));

        let at_dc = delta_h(&m, &dab.c_phys, one)?.norm() / h_fix(&m, &dab.c_phys, one)?.norm().max(tol.absolute_floor);
        checks.push(Check::new(format!("{label} dH(1) = 0"), at_dc, f64::EPSILON));

        // ratio ‖ΔH‖ / bound; at most 1 up to rounding
        let mut ratio = 0.0f64;
        for &f in &freqs {
            let e = delta_h_dual(&m, &dab.c_phys, m.z_at(f), tol.absolute_floor)?;
            if e.bound > 0.0 {
                ratio = ratio.max(e.closed_form.norm() / e.bound);
            }
        }
        checks.push(Check::new(format!("{label} |dH| / bound on sweep"), ratio, 1.0 + 1e-12));
    }
    Ok(checks)
}

pub fn run_suite(cfg: &ConfigFile) -> std::result::Result<VerifyReport, CliError> {
    let dab = cfg.schedule()?;
    let mut report = VerifyReport::default();
    report.extend("segment symmetry", segment_symmetry(&dab, cfg));
    report.extend("half-cycle", half_cycle(&dab, cfg));
    report.extend("resolvent", resolvent_similarity(cfg));
    report.extend("surface equivalence", surfaces(&dab, cfg));
    report.extend("dH identity", delta_h_suite(&dab, cfg));
    Ok(report)
}

/// Prints the table on stdout; `Ok(false)` when any identity fails.
pub fn verify(cfg: &ConfigFile) -> std::result::Result<bool, CliError> {
    let report = run_suite(cfg)?;
    print!("{}", report.table());
    for r in report.failures() {
        eprintln!("FAILED [{}] {}", r.suite, r.check.name);
    }
    Ok(report.passed())
}
