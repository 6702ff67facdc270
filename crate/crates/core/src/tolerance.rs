use serde::{Deserialize, Serialize};

/// Thresholds for the identity checks. Every check compares a residual
/// norm against `tol · scale`, where the scale is documented at the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Default relative tolerance for equalities between solver routes.
    pub relative: f64,
    /// Absolute floor used where a reference norm may vanish.
    pub absolute_floor: f64,
    /// Similarity and sign identities between segment maps.
    pub symmetry: f64,
    /// Half-cycle vs full-period fixed point.
    pub half_cycle: f64,
    /// Resolvent similarity on random matrices, and `T⁻¹ΦT` similarity.
    pub similarity: f64,
    /// Input-vector and full transfer chain between paired surfaces.
    pub surface_chain: f64,
    /// Agreement of the two `ΔH` evaluation routes.
    pub delta_h: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relative: 1e-10,
            absolute_floor: 1e-14,
            symmetry: 1e-12,
            half_cycle: 1e-10,
            similarity: 1e-12,
            surface_chain: 1e-10,
            delta_h: 1e-12,
        }
    }
}

/// One named residual compared against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Free-form note, e.g. a diagnosis when the check fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}
