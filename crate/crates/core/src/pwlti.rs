//! Piecewise-LTI machinery: exact segment maps, ordered transition
//! products, closed-form propagation and the periodic fixed point.
//!
//! A schedule is a list of constant-topology segments `ẋ = A_i x + B_i U`
//! of duration `T_i`, driven by one constant input `U`. Across segment
//! `i` the state obeys the affine map `x⁺ = Φ_i x⁻ + Γ_i`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::{expm, one_norm};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Condition-number estimate above which a periodic solve is refused.
pub const MARGINAL_CONDITION_LIMIT: f64 = 1e12;

const PERIOD_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub a: Matrix,
    pub b: Matrix,
    /// Duration in seconds.
    pub duration: f64,
}

impl Segment {
    pub fn new(a: Matrix, b: Matrix, duration: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "segment A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::Dimension(format!(
                "segment B has {} rows, A has {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::Schedule(format!("segment duration {duration} must be finite and >= 0")));
        }
        Ok(Self { a, b, duration })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    input: Vector,
    period: f64,
}

impl Schedule {
    /// Builds a schedule whose period is the sum of the segment durations.
    pub fn new(segments: Vec<Segment>, input: Vector) -> Result<Self> {
        let period = segments.iter().map(|s| s.duration).sum();
        Self::with_period(segments, input, period)
    }

    /// Builds a schedule with an explicit period, which must match the sum
    /// of durations to 1e-12 relative.
    pub fn with_period(segments: Vec<Segment>, input: Vector, period: f64) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Schedule("at least one segment is required".into()))?;
        let n = first.state_dim();
        for (i, seg) in segments.iter().enumerate() {
            if seg.state_dim() != n {
                return Err(Error::Dimension(format!(
                    "segment {} has state dimension {}, expected {n}",
                    i + 1,
                    seg.state_dim()
                )));
            }
            if seg.b.ncols() != input.len() {
                return Err(Error::Dimension(format!(
                    "segment {} B has {} columns, input has {} entries",
                    i + 1,
                    seg.b.ncols(),
                    input.len()
                )));
            }
        }
        let sum: f64 = segments.iter().map(|s| s.duration).sum();
        if !period.is_finite() || (period - sum).abs() > PERIOD_REL_TOL * period.abs().max(sum.abs()) {
            return Err(Error::Schedule(format!(
                "period {period} does not match the sum of durations {sum}"
            )));
        }
        Ok(Self { segments, input, period })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn input(&self) -> &Vector {
        &self.input
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn state_dim(&self) -> usize {
        self.segments[0].state_dim()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Exact `(Φ_i, Γ_i)` for every segment, in schedule order.
    pub fn segment_maps(&self) -> Result<Vec<SegmentMap>> {
        self.segments
            .iter()
            .map(|s| segment_map(s, &self.input))
            .collect()
    }

    fn check_state(&self, x: &Vector) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "state has {} entries, schedule has dimension {}",
                x.len(),
                self.state_dim()
            )));
        }
        Ok(())
    }
}

/// The affine update `x⁺ = Φ x⁻ + Γ` across one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMap {
    pub phi: Matrix,
    pub gamma: Vector,
}

impl SegmentMap {
    pub fn identity(n: usize) -> Self {
        Self {
            phi: Matrix::identity(n, n),
            gamma: Vector::zeros(n),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.phi * x + &self.gamma
    }

    /// The map equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &SegmentMap) -> SegmentMap {
        SegmentMap {
            phi: &next.phi * &self.phi,
            gamma: &next.phi * &self.gamma + &next.gamma,
        }
    }
}

/// `Φ = e^{AT}` and `Γ = ∫₀ᵀ e^{A(T-τ)} B U dτ`.
///
/// `Γ` is read off the exponential of the augmented generator
/// `[[A, BU], [0, 0]]`, which stays exact when `A` is singular.
pub fn segment_map(seg: &Segment, input: &Vector) -> Result<SegmentMap> {
    let n = seg.state_dim();
    if seg.b.ncols() != input.len() {
        return Err(Error::Dimension(format!(
            "B has {} columns, input has {} entries",
            seg.b.ncols(),
            input.len()
        )));
    }
    if seg.duration == 0.0 {
        return Ok(SegmentMap::identity(n));
    }
    let forcing = &seg.b * input;
    let mut aug = Matrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&seg.a);
    aug.view_mut((0, n), (n, 1)).copy_from(&forcing);
    let e = expm(&aug, seg.duration)?;
    Ok(SegmentMap {
        phi: e.view((0, 0), (n, n)).into_owned(),
        gamma: e.view((0, n), (n, 1)).column(0).into_owned(),
    })
}

/// `Γ = A⁻¹ (Φ - I) B U`, valid only for invertible `A`. Kept as a
/// cross-check on [`segment_map`].
pub fn gamma_via_inverse(seg: &Segment, phi: &Matrix, input: &Vector) -> Result<Vector> {
    let n = seg.state_dim();
    let rhs = (phi - Matrix::identity(n, n)) * (&seg.b * input);
    seg.a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Dimension("A is singular".into()))
}

/// `Φ_to · Φ_{to-1} · … · Φ_from` with 1-based inclusive bounds.
///
/// Empty and inverted ranges are rejected rather than mapped to `I`.
pub fn reverse_product(maps: &[Matrix], from: usize, to: usize) -> Result<Matrix> {
    if from == 0 || from > to || to > maps.len() {
        return Err(Error::Range { from, to, len: maps.len() });
    }
    let mut acc = maps[from - 1].clone();
    for m in &maps[from..to] {
        if m.nrows() != acc.nrows() || m.ncols() != acc.ncols() {
            return Err(Error::Dimension("mismatched factors in ordered product".into()));
        }
        acc = m * acc;
    }
    Ok(acc)
}

/// States `X_1..X_n` by sequential application of the segment maps.
pub fn propagate(schedule: &Schedule, x0: &Vector) -> Result<Vec<Vector>> {
    schedule.check_state(x0)?;
    let maps = schedule.segment_maps()?;
    let mut x = x0.clone();
    Ok(maps
        .iter()
        .map(|m| {
            x = m.apply(&x);
            x.clone()
        })
        .collect())
}

/// `X_n = Π X_0 + Σ_{i<n} (Φ_n…Φ_{i+1}) Γ_i + Γ_n`, evaluated term by term.
pub fn closed_form_state(schedule: &Schedule, x0: &Vector) -> Result<Vector> {
    schedule.check_state(x0)?;
    let maps = schedule.segment_maps()?;
    let (phis, gammas) = split(&maps);
    let n = phis.len();
    Ok(reverse_product(&phis, 1, n)? * x0 + forcing_sum(&phis, &gammas)?)
}

/// `Π = Φ_n · … · Φ_1`.
pub fn monodromy(schedule: &Schedule) -> Result<Matrix> {
    let maps = schedule.segment_maps()?;
    let (phis, _) = split(&maps);
    reverse_product(&phis, 1, phis.len())
}

/// Eigenvalues of `Π`, sorted by descending modulus.
pub fn monodromy_eigenvalues(schedule: &Schedule) -> Result<Vec<Complex64>> {
    Ok(sorted_eigenvalues(&monodromy(schedule)?))
}

pub fn spectral_radius(m: &Matrix) -> f64 {
    sorted_eigenvalues(m).first().map_or(0.0, |e| e.norm())
}

/// Solves `(I - Π) X* = Σ_{i<n} (Φ_n…Φ_{i+1}) Γ_i + Γ_n`.
pub fn solve_periodic_fixed_point(schedule: &Schedule) -> Result<Vector> {
    let maps = schedule.segment_maps()?;
    let (phis, gammas) = split(&maps);
    let n = phis.len();
    let pi = reverse_product(&phis, 1, n)?;
    let dim = schedule.state_dim();
    let lhs = Matrix::identity(dim, dim) - &pi;
    let rhs = forcing_sum(&phis, &gammas)?;
    solve_guarded(&lhs, &rhs, &pi)
}

/// LU solve of `lhs · x = rhs`, refusing when the 1-norm condition estimate
/// of `lhs` exceeds [`MARGINAL_CONDITION_LIMIT`]. `report` is the matrix
/// whose eigenvalues are attached to the error.
pub(crate) fn solve_guarded(lhs: &Matrix, rhs: &Vector, report: &Matrix) -> Result<Vector> {
    let marginal = |condition: f64| Error::Marginal {
        condition,
        eigenvalues: sorted_eigenvalues(report),
    };
    let lu = lhs.clone().lu();
    let inv = lu.try_inverse().ok_or_else(|| marginal(f64::INFINITY))?;
    let condition = one_norm(lhs) * one_norm(&inv);
    if !condition.is_finite() || condition > MARGINAL_CONDITION_LIMIT {
        return Err(marginal(condition));
    }
    let mut x = lu.solve(rhs).ok_or_else(|| marginal(f64::INFINITY))?;
    // one step of iterative refinement
    let r = rhs - lhs * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

pub(crate) fn sorted_eigenvalues(m: &Matrix) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect();
    ev.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    ev
}

fn split(maps: &[SegmentMap]) -> (Vec<Matrix>, Vec<Vector>) {
    maps.iter().map(|m| (m.phi.clone(), m.gamma.clone())).unzip()
}

fn forcing_sum(phis: &[Matrix], gammas: &[Vector]) -> Result<Vector> {
    let n = phis.len();
    let mut acc = gammas[n - 1].clone();
    for i in 1..n {
        acc += reverse_product(phis, i + 1, n)? * &gammas[i - 1];
    }
    Ok(acc)
}
