use std::path::Path;

use dabsig::dab::solve_half_cycle;
use dabsig::pwlti::{closed_form_state, monodromy_eigenvalues, solve_periodic_fixed_point};
use dabsig::Vector;
use serde::Serialize;

use crate::output::write_atomic;
use crate::{CliError, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Full-period fixed point `(I - Π)X = forcing`.
    Full,
    /// Half-cycle condition `(D′ - Φ₂Φ₁)X = Φ₂Γ₁ + Γ₂`.
    Half,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Half => "half",
        }
    }
}

#[derive(Serialize)]
struct Report {
    method: &'static str,
    /// `[i_L, v_C]` at the start of interval 1.
    x_star: [f64; 2],
    /// `‖X₄(x*) - x*‖ / (1 + ‖x*‖)` after one full period.
    residual: f64,
    #[serde(rename = "eigenvalues_of_Pi")]
    eigenvalues_of_pi: Vec<[f64; 2]>,
    cross_check: CrossCheck,
}

/// Distance to the solution of the other method.
#[derive(Serialize)]
struct CrossCheck {
    method: &'static str,
    relative_difference: f64,
}

pub fn steady_state(cfg: &ConfigFile, method: Method, out: &Path) -> Result<(), CliError> {
    let dab = cfg.schedule()?;
    let full = || solve_periodic_fixed_point(&dab.schedule);
    let half = || solve_half_cycle(&dab);
    let (x, other, other_method): (Vector, _, _) = match method {
        Method::Full => (full()?, half(), Method::Half),
        Method::Half => (half()?, full(), Method::Full),
    };
    let back = closed_form_state(&dab.schedule, &x)?;
    let residual = (&back - &x).norm() / (1.0 + x.norm());
    let relative_difference = match other {
        Ok(y) => (&x - &y).norm() / x.norm().max(cfg.tolerances.absolute_floor),
        Err(e) => {
            eprintln!("warning: {} method failed: {e}", other_method.as_str());
            f64::NAN
        }
    };
    let eig = monodromy_eigenvalues(&dab.schedule)?;
    let report = Report {
        method: method.as_str(),
        x_star: [x[0], x[1]],
        residual,
        eigenvalues_of_pi: eig.iter().map(|z| [z.re, z.im]).collect(),
        cross_check: CrossCheck {
            method: other_method.as_str(),
            relative_difference,
        },
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::new(crate::EXIT_FAILURE, e.to_string()))?;
    json.push('\n');
    write_atomic(out, json.as_bytes())?;
    if residual > cfg.tolerances.relative {
        eprintln!("warning: fixed-point residual {residual:.3e} above {:.1e}", cfg.tolerances.relative);
    }
    Ok(())
}
