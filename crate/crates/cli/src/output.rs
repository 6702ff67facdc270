use std::fs;
use std::io::Write;
use std::path::Path;

use dabsig::Complex64;

use crate::CliError;

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// a failed command never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::config(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::new(
            crate::EXIT_FAILURE,
            format!("cannot write {}: {e}", path.display()),
        ));
    }
    Ok(())
}

/// Round-trip float formatting (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn mag_db(h: Complex64) -> f64 {
    20.0 * h.norm().log10()
}

/// Phase in degrees on `(-180, 180]`.
pub fn phase_deg(h: Complex64) -> f64 {
    let p = h.arg().to_degrees();
    if p <= -180.0 {
        p + 360.0
    } else {
        p
    }
}
