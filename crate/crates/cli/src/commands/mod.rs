mod bode;
mod compare;
mod simulate;
mod steady_state;
pub mod verify;

pub use bode::{bode, BodeModel};
pub use compare::compare;
pub use simulate::simulate;
pub use steady_state::{steady_state, Method};
pub use verify::verify;

use dabsig::{Surface, SurfaceLabel};

use crate::ConfigFile;

/// Surface from the table, with the configured secondary-side polarity
/// override applied to `S+` / `S-`.
pub(crate) fn configured_surface(cfg: &ConfigFile, label: SurfaceLabel) -> Surface {
    let s = Surface::new(label);
    match (label, cfg.overrides.secondary_polarity) {
        (SurfaceLabel::SecondaryPlus | SurfaceLabel::SecondaryMinus, Some(rho)) => s.with_polarity_override(rho),
        _ => s,
    }
}
