//! Sampled-data small-signal model on the four half-cycle sampling
//! surfaces.
//!
//! Each surface `(a, b)` samples the state at the start of subinterval
//! `a`. Over one half cycle the rectified state advances by
//! `x_{k+1} = D_r (Φ_b (Φ_a x_k + Γ_a) + Γ_b)`. A fixed-frequency
//! modulator perturbs the two durations by
//! `T̂_a,k = ρ κ v̂_c,k` and `T̂_b,k = -ρ κ v̂_c,k+1` with `κ = T_h / V_r`,
//! giving `x̂_{k+1} = Φ x̂_k + β₋ v̂_c,k + β₊ v̂_c,k+1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dab::{DabSchedule, SymmetryConstants};
use crate::error::{Error, Result};
use crate::pwlti::{solve_guarded, sorted_eigenvalues, Matrix, Vector};
use crate::tolerance::{Check, Tolerances};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Distance from an eigenvalue of `Φ^(ab)` inside which the resolvent is
/// treated as singular.
pub const RESOLVENT_GUARD: f64 = 1e-12;

const HALF_PERIOD_REL_TOL: f64 = 1e-12;

/// Modulator logic sign `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceLabel {
    #[serde(rename = "P+")]
    PrimaryPlus,
    #[serde(rename = "S+")]
    SecondaryPlus,
    #[serde(rename = "P-")]
    PrimaryMinus,
    #[serde(rename = "S-")]
    SecondaryMinus,
}

impl SurfaceLabel {
    pub const ALL: [SurfaceLabel; 4] = [
        SurfaceLabel::PrimaryPlus,
        SurfaceLabel::SecondaryPlus,
        SurfaceLabel::PrimaryMinus,
        SurfaceLabel::SecondaryMinus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceLabel::PrimaryPlus => "P+",
            SurfaceLabel::SecondaryPlus => "S+",
            SurfaceLabel::PrimaryMinus => "P-",
            SurfaceLabel::SecondaryMinus => "S-",
        }
    }
}

impl fmt::Display for SurfaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SurfaceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P+" | "p+" | "Pplus" | "pplus" => Ok(SurfaceLabel::PrimaryPlus),
            "S+" | "s+" | "Splus" | "splus" => Ok(SurfaceLabel::SecondaryPlus),
            "P-" | "p-" | "Pminus" | "pminus" => Ok(SurfaceLabel::PrimaryMinus),
            "S-" | "s-" | "Sminus" | "sminus" => Ok(SurfaceLabel::SecondaryMinus),
            _ => Err(Error::Config(format!("unknown surface {s:?} (expected P+, S+, P-, S-)"))),
        }
    }
}

/// A half-cycle sampling surface: the pair of subintervals covering one
/// half cycle, and the modulator polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Surface {
    pub label: SurfaceLabel,
    /// 1-based subinterval indices.
    pub a: usize,
    pub b: usize,
    pub rho: Polarity,
}

impl Surface {
    /// Surface with the polarity from the modulator table: primary-side
    /// surfaces use negative logic, secondary-side positive.
    pub fn new(label: SurfaceLabel) -> Self {
        let (a, b, rho) = match label {
            SurfaceLabel::PrimaryPlus => (1, 2, Polarity::Negative),
            SurfaceLabel::SecondaryPlus => (2, 3, Polarity::Positive),
            SurfaceLabel::PrimaryMinus => (3, 4, Polarity::Negative),
            SurfaceLabel::SecondaryMinus => (4, 1, Polarity::Positive),
        };
        Self { label, a, b, rho }
    }

    /// Replaces the tabulated polarity. Only meaningful for negative tests.
    pub fn with_polarity_override(mut self, rho: Polarity) -> Self {
        self.rho = rho;
        self
    }
}

/// Which input model a transfer evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Exact fixed-frequency model with input `β₋ + z β₊`.
    Fix,
    /// Same-cycle approximation with input `β₋ + β₊`.
    Sc,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Fix => "fix",
            ModelKind::Sc => "sc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfCycleModel {
    pub surface: Surface,
    pub phi_ab: Matrix,
    pub g_ab: Vector,
    pub x_star: Vector,
    pub x_a_end: Vector,
    pub x_b_end: Vector,
    /// `∂x_{k+1}/∂T_a` at the fixed point, state units per second.
    pub eta_a: Vector,
    /// `∂x_{k+1}/∂T_b` at the fixed point, state units per second.
    pub eta_b: Vector,
    /// State units per volt of control.
    pub beta_minus: Vector,
    pub beta_plus: Vector,
    /// Seconds per volt.
    pub kappa: f64,
    pub th: f64,
    pub eigenvalues: Vec<Complex64>,
}

pub fn build_half_cycle(dab: &DabSchedule, surface: Surface) -> Result<HalfCycleModel> {
    let (a, b) = (surface.a, surface.b);
    let valid = matches!((a, b), (1, 2) | (2, 3) | (3, 4) | (4, 1));
    if !valid {
        return Err(Error::Config(format!("({a}, {b}) is not a half-cycle surface")));
    }
    let th = dab.half_period();
    let (seg_a, seg_b) = (dab.segment(a), dab.segment(b));
    let sum = seg_a.duration + seg_b.duration;
    if (sum - th).abs() > HALF_PERIOD_REL_TOL * th {
        return Err(Error::Schedule(format!(
            "surface {}: T_{a} + T_{b} = {sum:e} differs from T_h = {th:e}",
            surface.label
        )));
    }

    let maps = dab.segment_maps()?;
    let (ma, mb) = (&maps[a - 1], &maps[b - 1]);
    let dr = SymmetryConstants::d_r();
    let phi_ab = &dr * &mb.phi * &ma.phi;
    let g_ab = &dr * (&mb.phi * &ma.gamma + &mb.gamma);
    let lhs = Matrix::identity(2, 2) - &phi_ab;
    let x_star = solve_guarded(&lhs, &g_ab, &phi_ab)?;

    let x_a_end = ma.apply(&x_star);
    let x_b_end = mb.apply(&x_a_end);
    let u = dab.schedule.input();
    let field_a = &seg_a.a * &x_a_end + &seg_a.b * u;
    let field_b = &seg_b.a * &x_b_end + &seg_b.b * u;
    let eta_a = &dr * &mb.phi * field_a;
    let eta_b = &dr * field_b;

    let kappa = th / dab.params.ramp_amplitude;
    let rho = surface.rho.sign();
    let beta_minus = &eta_a * (rho * kappa);
    let beta_plus = &eta_b * (-rho * kappa);
    let eigenvalues = sorted_eigenvalues(&phi_ab);

    Ok(HalfCycleModel {
        surface,
        phi_ab,
        g_ab,
        x_star,
        x_a_end,
        x_b_end,
        eta_a,
        eta_b,
        beta_minus,
        beta_plus,
        kappa,
        th,
        eigenvalues,
    })
}

impl HalfCycleModel {
    /// `z = e^{j 2π f T_h}`.
    pub fn z_at(&self, f: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * self.th)
    }

    /// `b(z) = β₋ + z β₊`.
    pub fn input_vector(&self, z: Complex64) -> CVector {
        to_complex(&self.beta_minus) + to_complex(&self.beta_plus) * z
    }

    pub fn same_cycle_input(&self) -> CVector {
        to_complex(&(&self.beta_minus + &self.beta_plus))
    }

    /// `(zI - Φ^(ab))⁻¹ v` by a direct complex solve.
    pub fn resolvent_apply(&self, z: Complex64, v: &CVector) -> Result<CVector> {
        self.guard(z)?;
        resolvent_solve(&self.phi_ab, z, v)
            .ok_or_else(|| Error::ResolventSingular { z, eigenvalue: z, distance: 0.0 })
    }

    pub fn resolvent(&self, z: Complex64) -> Result<CMatrix> {
        self.guard(z)?;
        shifted(&self.phi_ab, z)
            .try_inverse()
            .ok_or(Error::ResolventSingular { z, eigenvalue: z, distance: 0.0 })
    }

    fn guard(&self, z: Complex64) -> Result<()> {
        for &ev in &self.eigenvalues {
            let distance = (z - ev).norm();
            if distance <= RESOLVENT_GUARD {
                return Err(Error::ResolventSingular { z, eigenvalue: ev, distance });
            }
        }
        Ok(())
    }

    pub fn transfer(&self, kind: ModelKind, c_phys: &Matrix, z: Complex64) -> Result<CVector> {
        match kind {
            ModelKind::Fix => h_fix(self, c_phys, z),
            ModelKind::Sc => h_sc(self, c_phys, z),
        }
    }
}

/// `C_phys (zI - Φ)⁻¹ (β₋ + z β₊)`.
pub fn h_fix(model: &HalfCycleModel, c_phys: &Matrix, z: Complex64) -> Result<CVector> {
    let w = model.resolvent_apply(z, &model.input_vector(z))?;
    Ok(to_complex_matrix(c_phys) * w)
}

/// `C_phys (zI - Φ)⁻¹ (β₋ + β₊)`.
pub fn h_sc(model: &HalfCycleModel, c_phys: &Matrix, z: Complex64) -> Result<CVector> {
    let w = model.resolvent_apply(z, &model.same_cycle_input())?;
    Ok(to_complex_matrix(c_phys) * w)
}

/// Closed-form `ΔH(z) = C_phys (zI - Φ)⁻¹ (z - 1) β₊`.
pub fn delta_h(model: &HalfCycleModel, c_phys: &Matrix, z: Complex64) -> Result<CVector> {
    let v = to_complex(&model.beta_plus) * (z - 1.0);
    let w = model.resolvent_apply(z, &v)?;
    Ok(to_complex_matrix(c_phys) * w)
}

/// Both routes to `ΔH`: the closed form and `H_fix - H_sc`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaHEvaluation {
    pub closed_form: CVector,
    pub by_subtraction: CVector,
    /// `‖closed - subtracted‖ / max(‖H_fix‖, ‖H_sc‖, floor)`.
    pub residual: f64,
    /// `2|sin(ωT_h/2)| · ‖C_phys‖₂ · ‖(zI - Φ)⁻¹‖₂ · ‖β₊‖₂`.
    pub bound: f64,
}

pub fn delta_h_dual(model: &HalfCycleModel, c_phys: &Matrix, z: Complex64, floor: f64) -> Result<DeltaHEvaluation> {
    let closed_form = delta_h(model, c_phys, z)?;
    let fix = h_fix(model, c_phys, z)?;
    let sc = h_sc(model, c_phys, z)?;
    let by_subtraction = &fix - &sc;
    let scale = fix.norm().max(sc.norm()).max(floor);
    let residual = (&closed_form - &by_subtraction).norm() / scale;
    let omega_th = z.arg();
    let bound = 2.0 * (omega_th / 2.0).sin().abs()
        * spectral_norm(&to_complex_matrix(c_phys))
        * spectral_norm(&model.resolvent(z)?)
        * model.beta_plus.norm();
    Ok(DeltaHEvaluation {
        closed_form,
        by_subtraction,
        residual,
        bound,
    })
}

/// Which pair of surfaces to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfacePair {
    /// P+ against S+, similarity `T = Φ₁`.
    Plus,
    /// P- against S-, similarity `T = Φ₃`.
    Minus,
}

impl SurfacePair {
    pub fn surfaces(self) -> (Surface, Surface, usize) {
        match self {
            SurfacePair::Plus => (
                Surface::new(SurfaceLabel::PrimaryPlus),
                Surface::new(SurfaceLabel::SecondaryPlus),
                1,
            ),
            SurfacePair::Minus => (
                Surface::new(SurfaceLabel::PrimaryMinus),
                Surface::new(SurfaceLabel::SecondaryMinus),
                3,
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfacePair::Plus => "P+/S+",
            SurfacePair::Minus => "P-/S-",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceEquivalenceReport {
    pub pair: SurfacePair,
    pub secondary_rho: Polarity,
    /// `T⁻¹Φ^(s)T = Φ^(p)`, `b^(p)(z) = T⁻¹b^(s)(z)`, and the transfer chain.
    pub checks: Vec<Check>,
    /// Worst residual of the sign-flipped input relation
    /// `b^(p)(z) = -T⁻¹b^(s)(z)`.
    pub sign_flipped_b_residual: f64,
}

impl SurfaceEquivalenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, prefix: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name.starts_with(prefix))
    }
}

/// Checks the similarity between the primary- and secondary-side surface
/// realizations of one pair over `z_grid`. `secondary_rho` replaces the
/// tabulated polarity of the secondary surface when given.
pub fn verify_surface_equivalence(
    dab: &DabSchedule,
    pair: SurfacePair,
    z_grid: &[Complex64],
    tol: &Tolerances,
    secondary_rho: Option<Polarity>,
) -> Result<SurfaceEquivalenceReport> {
    let (p_surface, mut s_surface, t_interval) = pair.surfaces();
    if let Some(rho) = secondary_rho {
        s_surface = s_surface.with_polarity_override(rho);
    }
    let maps = dab.segment_maps()?;
    let t = &maps[t_interval - 1].phi;
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SimilaritySingular(format!("Phi{t_interval} is not invertible")))?;
    let tc_inv = to_complex_matrix(&t_inv);

    let mp = build_half_cycle(dab, p_surface)?;
    let ms = build_half_cycle(dab, s_surface)?;
    let floor = tol.absolute_floor;

    let similar = &t_inv * &ms.phi_ab * t;
    let sim_res = (&similar - &mp.phi_ab).norm() / (1.0 + mp.phi_ab.norm());

    let c_phys = to_complex_matrix(&dab.c_phys);
    let c_t_inv = &c_phys * &tc_inv;
    let (mut b_res, mut flip_res, mut chain_res) = (0.0f64, 0.0f64, 0.0f64);
    for &z in z_grid {
        let bp = mp.input_vector(z);
        let bs_mapped = &tc_inv * ms.input_vector(z);
        let scale = bp.norm().max(floor);
        b_res = b_res.max((&bp - &bs_mapped).norm() / scale);
        flip_res = flip_res.max((&bp + &bs_mapped).norm() / scale);

        let hp = h_fix(&mp, &dab.c_phys, z)?;
        let chain = &c_t_inv * ms.resolvent_apply(z, &ms.input_vector(z))?;
        chain_res = chain_res.max((&hp - &chain).norm() / hp.norm().max(floor));
    }

    let (pl, sl) = (p_surface.label, s_surface.label);
    let b_check = {
        let c = Check::new(
            format!("{} input vector b_{pl}(z) = T^-1 b_{sl}(z)", pair.name()),
            b_res,
            tol.surface_chain,
        );
        if flip_res <= tol.surface_chain && b_res > tol.surface_chain {
            c.with_note("holds only up to a global sign: polarity mismatch between surfaces")
        } else if b_res > tol.surface_chain {
            c.with_note(format!("sign-flipped relation residual {flip_res:.3e}"))
        } else {
            c
        }
    };
    let checks = vec![
        Check::new(
            format!("{} similarity T^-1 Phi_{sl} T = Phi_{pl}", pair.name()),
            sim_res,
            tol.similarity,
        ),
        b_check,
        Check::new(
            format!("{} chain H_{pl}(z) = C T^-1 (zI - Phi_{sl})^-1 b_{sl}(z)", pair.name()),
            chain_res,
            tol.surface_chain,
        ),
    ];
    Ok(SurfaceEquivalenceReport {
        pair,
        secondary_rho: s_surface.rho,
        checks,
        sign_flipped_b_residual: flip_res,
    })
}

/// `‖(zI - T⁻¹AT)⁻¹ - T⁻¹(zI - A)⁻¹T‖ / ‖T⁻¹(zI - A)⁻¹T‖` (Frobenius).
pub fn resolvent_similarity_residual(t: &Matrix, a: &Matrix, z: Complex64) -> Result<f64> {
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SimilaritySingular("T is not invertible".into()))?;
    let similar = &t_inv * a * t;
    let singular = || Error::ResolventSingular { z, eigenvalue: z, distance: 0.0 };
    let lhs = shifted(&similar, z).try_inverse().ok_or_else(singular)?;
    let inner = shifted(a, z).try_inverse().ok_or_else(singular)?;
    let rhs = to_complex_matrix(&t_inv) * inner * to_complex_matrix(t);
    Ok((&lhs - &rhs).norm() / rhs.norm())
}

/// Log or linear frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    /// Frequencies in ascending order, endpoints exact.
    pub fn frequencies(&self, nyquist: f64) -> Result<Vec<f64>> {
        let Self { f_min, f_max, points, spacing } = *self;
        if !(f_min > 0.0 && f_min < f_max && f_max <= nyquist * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "sweep needs 0 < f_min < f_max <= {nyquist:e} Hz, got [{f_min:e}, {f_max:e}]"
            )));
        }
        if points < 2 {
            return Err(Error::Config(format!("sweep needs at least 2 points, got {points}")));
        }
        let last = (points - 1) as f64;
        Ok((0..points)
            .map(|i| match i {
                0 => f_min,
                i if i == points - 1 => f_max,
                i => {
                    let r = i as f64 / last;
                    match spacing {
                        Spacing::Linear => f_min + (f_max - f_min) * r,
                        Spacing::Log => f_min * (f_max / f_min).powf(r),
                    }
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseRow {
    pub f: f64,
    /// `None` when `z` sits on a resolvent singularity.
    pub h_irec: Option<Complex64>,
    pub h_vout: Option<Complex64>,
}

/// Evaluates the transfer of one surface on a frequency grid with
/// `z = e^{j 2π f T_h}`. Frequencies must not exceed `1 / (2 T_h)`.
pub fn bode_sweep(
    dab: &DabSchedule,
    surface: Surface,
    kind: ModelKind,
    sweep: &SweepSpec,
) -> Result<Vec<FrequencyResponseRow>> {
    let model = build_half_cycle(dab, surface)?;
    let freqs = sweep.frequencies(0.5 / model.th)?;
    freqs
        .into_iter()
        .map(|f| match model.transfer(kind, &dab.c_phys, model.z_at(f)) {
            Ok(h) => Ok(FrequencyResponseRow {
                f,
                h_irec: Some(h[0]),
                h_vout: Some(h[1]),
            }),
            Err(Error::ResolventSingular { .. }) => Ok(FrequencyResponseRow {
                f,
                h_irec: None,
                h_vout: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn to_complex(v: &Vector) -> CVector {
    v.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_matrix(m: &Matrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn shifted(phi: &Matrix, z: Complex64) -> CMatrix {
    let n = phi.nrows();
    CMatrix::from_diagonal_element(n, n, z) - to_complex_matrix(phi)
}

fn resolvent_solve(phi: &Matrix, z: Complex64, v: &CVector) -> Option<CVector> {
    shifted(phi, z).lu().solve(v)
}
