use std::fmt::Write;
use std::path::Path;

use dabsig::small_signal::bode_sweep;
use dabsig::{FrequencyResponseRow, ModelKind, SurfaceLabel};

use super::configured_surface;
use crate::output::{mag_db, num, phase_deg, write_atomic};
use crate::{CliError, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodeModel {
    Fix,
    Sc,
    /// Both models, interleaved per frequency with a `model` column.
    Both,
}

fn cells(row: &FrequencyResponseRow) -> String {
    let mut s = num(row.f);
    for h in [row.h_irec, row.h_vout] {
        match h {
            Some(h) => {
                let _ = write!(s, ",{},{}", num(mag_db(h)), num(phase_deg(h)));
            }
            None => s.push_str(",,"),
        }
    }
    s
}

pub fn bode(cfg: &ConfigFile, label: SurfaceLabel, model: BodeModel, out: &Path) -> Result<(), CliError> {
    let dab = cfg.schedule()?;
    let surface = configured_surface(cfg, label);
    let sweep = cfg.sweep();
    let kinds: &[ModelKind] = match model {
        BodeModel::Fix => &[ModelKind::Fix],
        BodeModel::Sc => &[ModelKind::Sc],
        BodeModel::Both => &[ModelKind::Fix, ModelKind::Sc],
    };
    let tables = kinds
        .iter()
        .map(|&k| bode_sweep(&dab, surface, k, &sweep))
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("f_hz,mag_db_irec,phase_deg_irec,mag_db_vout,phase_deg_vout");
    if model == BodeModel::Both {
        csv.push_str(",model");
    }
    csv.push('\n');
    for i in 0..tables[0].len() {
        for (kind, rows) in kinds.iter().zip(&tables) {
            let row = &rows[i];
            if row.h_irec.is_none() || row.h_vout.is_none() {
                eprintln!(
                    "warning: {} f = {} Hz lies on a pole of the half-cycle map; row left empty",
                    kind.as_str(),
                    row.f
                );
            }
            csv.push_str(&cells(row));
            if model == BodeModel::Both {
                csv.push(',');
                csv.push_str(kind.as_str());
            }
            csv.push('\n');
        }
    }
    write_atomic(out, csv.as_bytes())
}
