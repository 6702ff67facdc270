use std::fmt::Write;
use std::path::Path;

use dabsig::oracle::{measure_frequency_response, run_to_steady_state};
use dabsig::pwlti::solve_periodic_fixed_point;
use dabsig::small_signal::{build_half_cycle, h_fix};
use dabsig::{Complex64, Injection, SimConfig, SurfaceLabel, SweepSpec};

use super::configured_surface;
use crate::output::{num, phase_deg, write_atomic};
use crate::{CliError, ConfigFile};

struct Row {
    f: f64,
    /// Oracle over model, `[I_rec, V_out]`.
    ratio: [Complex64; 2],
}

/// Closed-form `H_fix` against injection measurements at the sweep points,
/// plus the oracle-vs-closed-form steady-state deviation.
pub fn compare(cfg: &ConfigFile, label: Option<SurfaceLabel>, out: &Path) -> Result<(), CliError> {
    let dab = cfg.schedule()?;
    let settings = cfg.compare;
    let surface = configured_surface(cfg, label.unwrap_or(settings.surface));
    let ts = dab.params.period();

    let sweep = match settings.points {
        Some(points) => SweepSpec { points, ..cfg.sweep() },
        None => cfg.sweep(),
    };
    let injections = sweep
        .frequencies(dab.params.fs)?
        .into_iter()
        .map(|f| {
            let inj = Injection::coherent(f, settings.measure_periods, settings.settle_periods, ts)?;
            Ok(Injection { amplitude: settings.amplitude, ..inj })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let x_closed = solve_periodic_fixed_point(&dab.schedule)?;
    let steady = run_to_steady_state(&dab, &cfg.sim)?;
    let ss_rel_dev = (&steady.x - &x_closed).norm() / x_closed.norm().max(cfg.tolerances.absolute_floor);

    let model = build_half_cycle(&dab, surface)?;
    let measured: Vec<Result<Row, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = injections
            .iter()
            .map(|inj| {
                let (dab, model) = (&dab, &model);
                let sim = SimConfig { injection: Some(*inj), ..cfg.sim };
                scope.spawn(move || -> Result<Row, CliError> {
                    let m = measure_frequency_response(dab, surface, &sim)?;
                    let h = h_fix(model, &dab.c_phys, model.z_at(inj.f))?;
                    let g = m.gain();
                    Ok(Row { f: inj.f, ratio: [g[0] / h[0], g[1] / h[1]] })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::new(crate::EXIT_FAILURE, "worker panicked"))))
            .collect()
    });

    let mut csv = String::from(
        "f_hz,mag_ratio_irec,phase_diff_deg_irec,mag_ratio_vout,phase_diff_deg_vout,ss_rel_dev\n",
    );
    let mut worst = 0.0f64;
    for row in measured {
        let row = row?;
        let _ = write!(csv, "{}", num(row.f));
        for r in row.ratio {
            worst = worst.max((r.norm() - 1.0).abs());
            let _ = write!(csv, ",{},{}", num(r.norm()), num(phase_deg(r)));
        }
        let _ = writeln!(csv, ",{}", num(ss_rel_dev));
    }
    eprintln!("max |mag_ratio - 1| = {worst:.3e}; steady-state deviation {ss_rel_dev:.3e}");
    write_atomic(out, csv.as_bytes())
}
