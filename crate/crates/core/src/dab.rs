//! Four-interval dual-active-bridge model.
//!
//! State is `[i_L, v_C]ᵀ` (inductor current, output capacitor voltage),
//! the input is the scalar `V_in`. Single-phase-shift modulation sets the
//! subinterval durations `T₁ = T₃ = D·T_h`, `T₂ = T₄ = (1 - D)·T_h` with
//! `T_h = T_s / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwlti::{segment_map, solve_guarded, Matrix, Schedule, Segment, SegmentMap, Vector};
use crate::tolerance::Check;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DabParams {
    /// Transformer turns ratio `n`.
    pub n_turns: f64,
    /// Series inductance, H.
    #[serde(rename = "L")]
    pub inductance: f64,
    /// Output capacitance, F.
    #[serde(rename = "Co")]
    pub capacitance: f64,
    /// Total series resistance, Ω.
    #[serde(rename = "Rt")]
    pub series_resistance: f64,
    /// Capacitor ESR, Ω.
    #[serde(rename = "Rc")]
    pub esr: f64,
    /// Load resistance, Ω.
    #[serde(rename = "Ro")]
    pub load: f64,
    /// Input voltage, V.
    #[serde(rename = "Vin")]
    pub vin: f64,
    /// Switching frequency, Hz.
    pub fs: f64,
    /// Phase-shift ratio `D` in (0, 1).
    #[serde(rename = "D_phase")]
    pub phase_shift: f64,
    /// Modulator ramp amplitude, V.
    #[serde(rename = "Vr")]
    pub ramp_amplitude: f64,
}

impl DabParams {
    /// The bench configuration used throughout the tests: 1:1, 10 µH,
    /// 100 µF, 50 mΩ, 10 mΩ ESR, 10 Ω load, 100 V, 100 kHz, D = 0.3,
    /// 1 V ramp.
    pub fn reference() -> Self {
        Self {
            n_turns: 1.0,
            inductance: 10e-6,
            capacitance: 100e-6,
            series_resistance: 50e-3,
            esr: 10e-3,
            load: 10.0,
            vin: 100.0,
            fs: 100e3,
            phase_shift: 0.3,
            ramp_amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_turns", self.n_turns),
            ("L", self.inductance),
            ("Co", self.capacitance),
            ("Ro", self.load),
            ("Vr", self.ramp_amplitude),
            ("fs", self.fs),
            ("Vin", self.vin),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} = {v} must be finite and > 0")));
            }
        }
        for (name, v) in [("Rt", self.series_resistance), ("Rc", self.esr)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.phase_shift > 0.0 && self.phase_shift < 1.0) {
            return Err(Error::Parameter(format!(
                "D_phase = {} must lie in (0, 1)",
                self.phase_shift
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.fs
    }

    pub fn half_period(&self) -> f64 {
        0.5 / self.fs
    }

    /// `R_c ∥ R_o`.
    pub fn esr_parallel_load(&self) -> f64 {
        self.esr * self.load / (self.esr + self.load)
    }
}

/// Sign involutions tied to the `[i_L, v_C]` state ordering.
pub struct SymmetryConstants;

impl SymmetryConstants {
    /// `S = diag(1, -1)`.
    pub fn s() -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, -1.0]))
    }

    /// `D′ = diag(-1, 1)`: current flips, voltage kept.
    pub fn d_prime() -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(&[-1.0, 1.0]))
    }

    /// Rectification involution `D_r = diag(-1, 1) = -S`.
    pub fn d_r() -> Matrix {
        Self::d_prime()
    }
}

/// Deliberate deviation from the matched-half-cycle timing, for negative
/// tests. `T₃` is forced to the given value and `T₄ = T_h - T₃`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingOverride {
    pub t3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DabSchedule {
    pub params: DabParams,
    pub schedule: Schedule,
    /// `C₁..C₄` used for waveform reconstruction.
    pub c_per_interval: [Matrix; 4],
    /// Physical output map to `[I_rec, V_out]`, the same on every surface.
    pub c_phys: Matrix,
}

impl DabSchedule {
    pub fn build(params: DabParams) -> Result<Self> {
        Self::build_with(params, TimingOverride::default())
    }

    pub fn build_with(params: DabParams, timing: TimingOverride) -> Result<Self> {
        params.validate()?;
        let n = params.n_turns;
        let l = params.inductance;
        let co = params.capacitance;
        let rt = params.series_resistance;
        let rc = params.esr;
        let ro = params.load;

        let a11 = -(n * n * rt + ro * rc / (ro + rc)) / (n * n * l);
        let a12 = ro / (n * l * (ro + rc));
        let a21 = -ro / (n * co * (ro + rc));
        let a22 = -1.0 / (co * (ro + rc));
        let a1 = Matrix::from_row_slice(2, 2, &[a11, a12, a21, a22]);
        let a2 = Matrix::from_row_slice(2, 2, &[a11, -a12, -a21, a22]);
        let b1 = Matrix::from_row_slice(2, 1, &[1.0 / l, 0.0]);
        let b3 = -&b1;

        let th = params.half_period();
        let d = params.phase_shift;
        let (t1, t2) = (d * th, (1.0 - d) * th);
        let (t3, t4) = match timing.t3 {
            None => (t1, t2),
            Some(t3) => {
                if !(0.0..=th).contains(&t3) {
                    return Err(Error::Parameter(format!("T3 override {t3} outside [0, T_h]")));
                }
                (t3, th - t3)
            }
        };

        let segments = vec![
            Segment::new(a1.clone(), b1.clone(), t1)?,
            Segment::new(a2.clone(), b1, t2)?,
            Segment::new(a2, b3.clone(), t3)?,
            Segment::new(a1, b3, t4)?,
        ];
        let input = Vector::from_column_slice(&[params.vin]);
        let schedule = Schedule::with_period(segments, input, params.period())?;

        let rp = params.esr_parallel_load();
        let kv = ro / (rc + ro);
        let c1 = Matrix::from_row_slice(2, 2, &[-1.0 / n, 0.0, -rp / n, kv]);
        let c2 = Matrix::from_row_slice(2, 2, &[1.0 / n, 0.0, rp / n, kv]);
        let c_phys = Matrix::from_row_slice(2, 2, &[1.0 / n, 0.0, rp / n, kv]);

        Ok(Self {
            params,
            schedule,
            c_per_interval: [c1.clone(), c2.clone(), c2, c1],
            c_phys,
        })
    }

    pub fn half_period(&self) -> f64 {
        self.params.half_period()
    }

    pub fn segment(&self, interval: usize) -> &Segment {
        &self.schedule.segments()[interval - 1]
    }

    pub fn segment_maps(&self) -> Result<[SegmentMap; 4]> {
        let maps = self.schedule.segment_maps()?;
        maps.try_into()
            .map_err(|_| Error::Schedule("DAB schedule must have four segments".into()))
    }

    /// Maximum deviation from the structural relations
    /// `A₄ = A₁, A₂ = A₃ = S A₁ S, B₁ = B₂, B₃ = B₄ = -B₁, T₁ = T₃, T₂ = T₄`.
    pub fn structural_residual(&self) -> f64 {
        let s = SymmetryConstants::s();
        let seg = |i| self.segment(i);
        let a1 = &seg(1).a;
        let sas = &s * a1 * &s;
        let rel = |x: &Matrix, y: &Matrix| (x - y).amax() / x.amax().max(f64::MIN_POSITIVE);
        let t_rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        [
            rel(&seg(4).a, a1),
            rel(&seg(2).a, &sas),
            rel(&seg(3).a, &sas),
            rel(&seg(2).b, &seg(1).b),
            rel(&seg(3).b, &-&seg(1).b),
            rel(&seg(4).b, &-&seg(1).b),
            t_rel(seg(3).duration, seg(1).duration),
            t_rel(seg(4).duration, seg(2).duration),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Per-interval output `C_i x`, `interval` in 1..=4.
    pub fn output(&self, x: &Vector, interval: usize) -> Result<Vector> {
        if !(1..=4).contains(&interval) {
            return Err(Error::Range { from: interval, to: interval, len: 4 });
        }
        check_state(x)?;
        Ok(&self.c_per_interval[interval - 1] * x)
    }

    /// Sampled physical output `[I_rec, V_out] = C_phys x`.
    pub fn output_phys(&self, x: &Vector) -> Result<Vector> {
        check_state(x)?;
        Ok(&self.c_phys * x)
    }
}

fn check_state(x: &Vector) -> Result<()> {
    if x.len() != 2 {
        return Err(Error::Dimension(format!("DAB state has 2 entries, got {}", x.len())));
    }
    Ok(())
}

/// Residuals of the similarity/sign relations between the first and
/// second half-cycle segment maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub checks: Vec<Check>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `Φ₃ = SΦ₁S`, `Φ₄ = SΦ₂S`, `Γ₃ = -SΓ₁`, `Γ₄ = -SΓ₂`, and the
/// `D_r`-conjugacy forms of the first two. Φ residuals are scaled by
/// `1 + ‖Φ₁‖`, Γ residuals by `1 + ‖Γ_ref‖` (Frobenius norms).
pub fn verify_symmetry(dab: &DabSchedule, tol: f64) -> Result<SymmetryReport> {
    let [m1, m2, m3, m4] = dab.segment_maps()?;
    let s = SymmetryConstants::s();
    let dr = SymmetryConstants::d_r();
    let phi_scale = 1.0 + m1.phi.norm();
    let phi_res = |lhs: &Matrix, rhs: Matrix| (lhs - rhs).norm() / phi_scale;
    let gam_res = |lhs: &Vector, rhs: Vector, r: &Vector| (lhs - rhs).norm() / (1.0 + r.norm());

    let checks = vec![
        Check::new("Phi3 = S Phi1 S", phi_res(&m3.phi, &s * &m1.phi * &s), tol),
        Check::new("Phi4 = S Phi2 S", phi_res(&m4.phi, &s * &m2.phi * &s), tol),
        Check::new("Gamma3 = -S Gamma1", gam_res(&m3.gamma, -(&s * &m1.gamma), &m1.gamma), tol),
        Check::new("Gamma4 = -S Gamma2", gam_res(&m4.gamma, -(&s * &m2.gamma), &m2.gamma), tol),
        Check::new("Phi3 = Dr Phi1 Dr", phi_res(&m3.phi, &dr * &m1.phi * &dr), tol),
        Check::new("Phi4 = Dr Phi2 Dr", phi_res(&m4.phi, &dr * &m2.phi * &dr), tol),
    ];
    Ok(SymmetryReport { checks })
}

/// Solves the half-cycle condition `Φ₂Φ₁X₀ + (Φ₂Γ₁ + Γ₂) = D′X₀`.
pub fn solve_half_cycle(dab: &DabSchedule) -> Result<Vector> {
    let [m1, m2, _, _] = dab.segment_maps()?;
    let half = m1.then(&m2);
    let dp = SymmetryConstants::d_prime();
    let lhs = &dp - &half.phi;
    solve_guarded(&lhs, &half.gamma, &(&dp * &half.phi))
}

/// The two half-cycle maps `H(X) = Φ₂Φ₁X + Φ₂Γ₁ + Γ₂` and
/// `G(Z) = Φ₄Φ₃Z + Φ₄Γ₃ + Γ₄`.
pub fn half_cycle_maps(dab: &DabSchedule) -> Result<(SegmentMap, SegmentMap)> {
    let [m1, m2, m3, m4] = dab.segment_maps()?;
    Ok((m1.then(&m2), m3.then(&m4)))
}

/// Segment map for a single DAB interval at an arbitrary duration.
pub fn interval_map(dab: &DabSchedule, interval: usize, duration: f64) -> Result<SegmentMap> {
    let seg = dab.segment(interval);
    let seg = Segment::new(seg.a.clone(), seg.b.clone(), duration)?;
    segment_map(&seg, dab.schedule.input())
}
