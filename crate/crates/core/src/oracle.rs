//! Brute-force time-domain oracle.
//!
//! The oracle steps the physical four-interval sequence one subinterval at
//! a time with exact exponential maps, so it carries no integration error.
//! It builds its own maps from the augmented exponential and never calls
//! the closed-form fixed-point or half-cycle solvers: agreement between the
//! two isolates modelling mistakes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dab::{DabSchedule, SymmetryConstants};
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::pwlti::{Matrix, Vector};
use crate::small_signal::Surface;

/// Default injection amplitude as a fraction of the ramp amplitude.
pub const DEFAULT_INJECTION_FRACTION: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;
const COHERENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    /// Injected frequency, Hz.
    pub f: f64,
    /// Peak control-voltage perturbation, V. `None` selects
    /// `1e-4 · V_r` with automatic halving if a duration would go negative.
    #[serde(default)]
    pub amplitude: Option<f64>,
    pub settle_periods: usize,
    pub measure_periods: usize,
}

impl Injection {
    /// Snaps `f_target` to the nearest frequency completing a whole number
    /// of cycles in `measure_periods` switching periods.
    pub fn coherent(f_target: f64, measure_periods: usize, settle_periods: usize, ts: f64) -> Result<Self> {
        let window = measure_periods as f64 * ts;
        let cycles = (f_target * window).round().max(1.0);
        let inj = Self {
            f: cycles / window,
            amplitude: None,
            settle_periods,
            measure_periods,
        };
        inj.validate(ts)?;
        Ok(inj)
    }

    /// Requires `f · measure_periods · T_s` to be a positive integer.
    pub fn validate(&self, ts: f64) -> Result<()> {
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(Error::Config(format!("injection frequency {} must be > 0", self.f)));
        }
        if self.measure_periods == 0 {
            return Err(Error::Config("measure_periods must be > 0".into()));
        }
        if let Some(a) = self.amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::Config(format!("injection amplitude {a} must be >= 0")));
            }
        }
        let cycles = self.f * self.measure_periods as f64 * ts;
        if cycles.round() < 1.0 || (cycles - cycles.round()).abs() > COHERENCE_TOL * cycles.max(1.0) {
            return Err(Error::Config(format!(
                "non-coherent window: f * measure_periods * Ts = {cycles} is not a positive integer"
            )));
        }
        if self.f > 1.0 / ts {
            return Err(Error::Config(format!(
                "injection frequency {} above the half-cycle Nyquist rate {}",
                self.f,
                1.0 / ts
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Period budget for the steady-state search.
    pub periods: usize,
    pub substeps_per_interval: usize,
    /// Relative period-to-period change that counts as converged.
    pub convergence_tol: f64,
    pub injection: Option<Injection>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            periods: 20_000,
            substeps_per_interval: 16,
            convergence_tol: 1e-12,
            injection: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, ts: f64) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::Config("periods must be > 0".into()));
        }
        if self.substeps_per_interval == 0 {
            return Err(Error::Config("substeps_per_interval must be > 0".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::Config("convergence_tol must be > 0".into()));
        }
        if let Some(inj) = &self.injection {
            inj.validate(ts)?;
        }
        Ok(())
    }
}

/// One switching period sampled on a uniform sub-grid of every interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Waveform {
    pub t: Vec<f64>,
    /// `[i_L, v_C]` per sample.
    pub x: Vec<[f64; 2]>,
    /// `C_i x` using the interval the sample closes (interval 1 at `t = 0`).
    pub y: Vec<[f64; 2]>,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn mean_output_voltage(&self) -> f64 {
        // trapezoidal mean over the period
        let span = self.t.last().copied().unwrap_or(0.0) - self.t.first().copied().unwrap_or(0.0);
        if span <= 0.0 {
            return f64::NAN;
        }
        let area: f64 = self
            .t
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0][1] + y[1][1]))
            .sum();
        area / span
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// State at the start of interval 1.
    pub x: Vector,
    pub periods: usize,
    pub residual: f64,
    pub waveform: Waveform,
}

/// Exact `(Φ, Γ)` from `exp([[A, BU], [0, 0]] t)`.
fn exact_map(a: &Matrix, bu: &Vector, t: f64) -> Result<(Matrix, Vector)> {
    let n = a.nrows();
    let mut aug = Matrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, 1)).copy_from(bu);
    let e = expm(&aug, t)?;
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, 1)).column(0).into_owned()))
}

struct Plant {
    a: Vec<Matrix>,
    bu: Vec<Vector>,
    durations: Vec<f64>,
}

impl Plant {
    fn new(dab: &DabSchedule) -> Self {
        let u = dab.schedule.input();
        let segs = dab.schedule.segments();
        Self {
            a: segs.iter().map(|s| s.a.clone()).collect(),
            bu: segs.iter().map(|s| &s.b * u).collect(),
            durations: segs.iter().map(|s| s.duration).collect(),
        }
    }

    /// Advances `x` through interval `i` (0-based) for `t` seconds.
    fn step(&self, i: usize, t: f64, x: &Vector) -> Result<Vector> {
        let (phi, gamma) = exact_map(&self.a[i], &self.bu[i], t)?;
        Ok(phi * x + gamma)
    }
}

/// Iterates whole periods from `x = 0` until the relative change
/// `‖X_k - X_{k-1}‖ / (1 + ‖X_k‖)` drops below `cfg.convergence_tol`.
pub fn run_to_steady_state(dab: &DabSchedule, cfg: &SimConfig) -> Result<SteadyState> {
    cfg.validate(dab.params.period())?;
    let plant = Plant::new(dab);
    let maps: Vec<(Matrix, Vector)> = (0..plant.a.len())
        .map(|i| exact_map(&plant.a[i], &plant.bu[i], plant.durations[i]))
        .collect::<Result<_>>()?;

    let n = dab.schedule.state_dim();
    let mut x = Vector::zeros(n);
    let mut residual = f64::INFINITY;
    for k in 1..=cfg.periods {
        let next = maps.iter().fold(x.clone(), |acc, (phi, gamma)| phi * acc + gamma);
        residual = (&next - &x).norm() / (1.0 + next.norm());
        x = next;
        if residual <= cfg.convergence_tol {
            let waveform = sample_period(dab, &plant, &x, cfg.substeps_per_interval)?;
            return Ok(SteadyState { x, periods: k, residual, waveform });
        }
    }
    Err(Error::Convergence { periods: cfg.periods, residual })
}

/// Keeps iterating whole periods until the period-to-period change stops
/// shrinking, so the injection starts on the orbit to rounding level.
fn polish_orbit(plant: &Plant, mut x: Vector, budget: usize) -> Result<Vector> {
    const PATIENCE: usize = 200;
    let maps: Vec<(Matrix, Vector)> = (0..plant.a.len())
        .map(|i| exact_map(&plant.a[i], &plant.bu[i], plant.durations[i]))
        .collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for _ in 0..budget {
        let next = maps.iter().fold(x.clone(), |acc, (phi, gamma)| phi * acc + gamma);
        let change = (&next - &x).norm();
        x = next;
        if change == 0.0 {
            break;
        }
        if change < best {
            best = change;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= PATIENCE {
                break;
            }
        }
    }
    Ok(x)
}

fn sample_period(dab: &DabSchedule, plant: &Plant, x0: &Vector, substeps: usize) -> Result<Waveform> {
    let mut w = Waveform::default();
    let push = |w: &mut Waveform, t: f64, x: &Vector, interval: usize| {
        let y = &dab.c_per_interval[interval] * x;
        w.t.push(t);
        w.x.push([x[0], x[1]]);
        w.y.push([y[0], y[1]]);
    };
    push(&mut w, 0.0, x0, 0);
    let mut x = x0.clone();
    let mut t0 = 0.0;
    for i in 0..plant.a.len() {
        let dt = plant.durations[i];
        if dt == 0.0 {
            continue;
        }
        let h = dt / substeps as f64;
        let (phi, gamma) = exact_map(&plant.a[i], &plant.bu[i], h)?;
        for j in 1..=substeps {
            x = &phi * &x + &gamma;
            let t = if j == substeps { t0 + dt } else { t0 + h * j as f64 };
            push(&mut w, t, &x, i);
        }
        t0 += dt;
    }
    Ok(w)
}

/// Single-bin Fourier components of the injected control voltage and of
/// the sampled outputs over the measurement window, normalised to peak
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionMeasurement {
    pub f: f64,
    pub amplitude: f64,
    pub input: Complex64,
    /// `[I_rec, V_out]` components.
    pub output: [Complex64; 2],
}

impl InjectionMeasurement {
    /// `output / input`.
    pub fn gain(&self) -> [Complex64; 2] {
        [self.output[0] / self.input, self.output[1] / self.input]
    }
}

/// Injects `v̂_c,k = A sin(2π f k T_h)` on `surface`, re-timing every half
/// cycle as `T_a + ρκ v̂_c,k` and `T_b - ρκ v̂_c,k+1`, and extracts the
/// Fourier component at `f` of the rectified `C_phys x_k` samples.
pub fn measure_frequency_response(dab: &DabSchedule, surface: Surface, cfg: &SimConfig) -> Result<InjectionMeasurement> {
    let ts = dab.params.period();
    cfg.validate(ts)?;
    let inj = cfg
        .injection
        .ok_or_else(|| Error::Config("frequency measurement needs an injection section".into()))?;

    let plant = Plant::new(dab);
    let (a0, b0) = (surface.a - 1, surface.b - 1);
    let (ta, tb) = (plant.durations[a0], plant.durations[b0]);
    let th = dab.half_period();
    let kappa = th / dab.params.ramp_amplitude;
    let rho = surface.rho.sign();

    let amplitude = match inj.amplitude {
        Some(a) => {
            if kappa * a > ta.min(tb) {
                return Err(Error::Amplitude(format!(
                    "amplitude {a} V shifts edges by {:e} s, exceeding min(T_a, T_b) = {:e} s",
                    kappa * a,
                    ta.min(tb)
                )));
            }
            a
        }
        None => {
            let mut a = DEFAULT_INJECTION_FRACTION * dab.params.ramp_amplitude;
            let mut halvings = 0;
            while kappa * a > ta.min(tb) {
                a *= 0.5;
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Amplitude(format!(
                        "no admissible amplitude: min(T_a, T_b) = {:e} s",
                        ta.min(tb)
                    )));
                }
            }
            a
        }
    };

    let steady_cfg = SimConfig {
        convergence_tol: cfg.convergence_tol.min(1e-13),
        injection: None,
        ..*cfg
    };
    let steady = run_to_steady_state(dab, &steady_cfg)?;
    let mut x = polish_orbit(&plant, steady.x, cfg.periods)?;
    for i in 0..a0 {
        x = plant.step(i, plant.durations[i], &x)?;
    }

    let dr = SymmetryConstants::d_r();
    let c_phys = &dab.c_phys;
    let y_ref = c_phys * &x;
    let omega_th = 2.0 * PI * inj.f * th;
    let control = |k: usize| amplitude * (omega_th * k as f64).sin();

    let settle = 2 * inj.settle_periods;
    let window = 2 * inj.measure_periods;
    let mut v_acc = Complex64::new(0.0, 0.0);
    let mut y_acc = [Complex64::new(0.0, 0.0); 2];
    for k in 0..settle + window {
        if k >= settle {
            let rect = if k % 2 == 0 { x.clone() } else { &dr * &x };
            let y = c_phys * rect - &y_ref;
            let w = Complex64::from_polar(1.0, -omega_th * k as f64);
            v_acc += w * control(k);
            y_acc[0] += w * y[0];
            y_acc[1] += w * y[1];
        }
        let shift = 2 * (k % 2);
        let (ia, ib) = ((a0 + shift) % 4, (b0 + shift) % 4);
        let da = ta + rho * kappa * control(k);
        let db = tb - rho * kappa * control(k + 1);
        if da < 0.0 || db < 0.0 {
            return Err(Error::Amplitude(format!("negative duration at half cycle {k}")));
        }
        x = plant.step(ia, da, &x)?;
        x = plant.step(ib, db, &x)?;
    }

    let norm = 2.0 / window as f64;
    Ok(InjectionMeasurement {
        f: inj.f,
        amplitude,
        input: v_acc * norm,
        output: [y_acc[0] * norm, y_acc[1] * norm],
    })
}
