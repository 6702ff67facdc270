use std::fmt::Write;
use std::path::Path;

use dabsig::oracle::run_to_steady_state;

use crate::output::{num, write_atomic};
use crate::{CliError, ConfigFile};

/// One steady-state switching period from the time-domain oracle.
pub fn simulate(cfg: &ConfigFile, out: &Path) -> Result<(), CliError> {
    let dab = cfg.schedule()?;
    let ss = run_to_steady_state(&dab, &cfg.sim)?;
    eprintln!("converged after {} periods (change {:.3e})", ss.periods, ss.residual);
    let w = &ss.waveform;
    let mut csv = String::from("t,i_L,v_C,i_rec,v_out\n");
    for ((t, x), y) in w.t.iter().zip(&w.x).zip(&w.y) {
        let _ = writeln!(csv, "{},{},{},{},{}", num(*t), num(x[0]), num(x[1]), num(y[0]), num(y[1]));
    }
    write_atomic(out, csv.as_bytes())
}
