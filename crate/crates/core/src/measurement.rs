//! Fourier-basis analyzers and their realization with cascaded delay
//! Mach-Zehnder interferometers.
//!
//! A stage with delay `δ` slots maps input slot `k` to output slots `k` and
//! `k + δ`, so a stage acting on `n` slots has `n + δ` output slots. Cascading
//! stages with delays `1, 2, …, 2ⁿ⁻¹` and phases `θ, 2θ, …, 2ⁿ⁻¹θ`, then
//! keeping only detections in output slot `d − 1`, realizes the projection
//! onto the Fourier state `|θ⟩` for `d = 2ⁿ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qudit::{BipartiteState, DensityOperator, PureState};

/// Phase offsets `α_a` for Alice's two bases, in units of `2π/d`.
pub const ALICE_OFFSETS: [f64; 2] = [0.0, 0.5];
/// Phase offsets `β_b` for Bob's two bases, in units of `2π/d`.
pub const BOB_OFFSETS: [f64; 2] = [0.25, -0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// One analyzer configuration: which party, which of the two bases, and
/// which outcome `l` is being projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementSetting {
    party: Party,
    basis: usize,
    outcome: usize,
    dim: usize,
}

impl MeasurementSetting {
    pub fn new(party: Party, basis: usize, outcome: usize, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if basis > 1 {
            return Err(Error::out_of_range("basis", basis as f64, "{0, 1}"));
        }
        if outcome >= dim {
            return Err(Error::out_of_range("outcome", outcome as f64, "[0, d-1]"));
        }
        Ok(Self {
            party,
            basis,
            outcome,
            dim,
        })
    }

    pub fn alice(basis: usize, outcome: usize, dim: usize) -> Result<Self> {
        Self::new(Party::Alice, basis, outcome, dim)
    }

    pub fn bob(basis: usize, outcome: usize, dim: usize) -> Result<Self> {
        Self::new(Party::Bob, basis, outcome, dim)
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn basis(&self) -> usize {
        self.basis
    }

    pub fn outcome(&self) -> usize {
        self.outcome
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phase(&self) -> f64 {
        analyzer_phase(self)
    }
}

/// Analyzer phase `θ_l`: `(2π/d)(l + α_a)` for Alice, `(2π/d)(−l + β_b)` for Bob.
pub fn analyzer_phase(setting: &MeasurementSetting) -> f64 {
    let step = 2.0 * PI / setting.dim as f64;
    let l = setting.outcome as f64;
    match setting.party {
        Party::Alice => step * (l + ALICE_OFFSETS[setting.basis]),
        Party::Bob => step * (-l + BOB_OFFSETS[setting.basis]),
    }
}

fn fourier_vector(d: usize, theta: f64) -> DVector<Complex64> {
    let norm = 1.0 / (d as f64).sqrt();
    DVector::from_fn(d, |k, _| Complex64::from_polar(norm, theta * k as f64))
}

/// `|θ⟩ = (1/√d) Σ_k e^{iθk} |k⟩`.
pub fn fourier_state(d: usize, theta: f64) -> Result<PureState> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    PureState::new(fourier_vector(d, theta).iter().copied().collect())
}

/// A (generally non-unitary) linear map between time-slot spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBinOperator {
    matrix: DMatrix<Complex64>,
}

impl TimeBinOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    /// Number of output slots.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of input slots.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `next ∘ self`: apply `self`, then `next`.
    pub fn then(&self, next: &TimeBinOperator) -> Result<Self> {
        if next.cols() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: next.cols(),
            });
        }
        Ok(Self {
            matrix: &next.matrix * &self.matrix,
        })
    }

    /// `|s⟩⟨s| M`: keep only output slot `slot`.
    pub fn postselect(&self, slot: usize) -> Result<Self> {
        if slot >= self.rows() {
            return Err(Error::out_of_range("slot", slot as f64, "[0, rows)"));
        }
        let mut matrix = DMatrix::zeros(self.rows(), self.cols());
        matrix.set_row(slot, &self.matrix.row(slot));
        Ok(Self { matrix })
    }

    /// `M†M`, the effect this operator induces on its input space.
    pub fn effect(&self) -> DMatrix<Complex64> {
        self.matrix.adjoint() * &self.matrix
    }
}

/// Output port of a delay interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    /// `|k⟩ ↦ (|k⟩ + e^{iθ}|k+δ⟩)/2`
    X,
    /// `|k⟩ ↦ (|k⟩ − e^{iθ}|k+δ⟩)/2`
    Y,
}

/// One lossless delay-MZI stage acting on `d_in` input slots.
pub fn mzi_stage(d_in: usize, delay: usize, theta: f64, port: Port) -> Result<TimeBinOperator> {
    lossy_stage(d_in, delay, theta, 1.0, port)
}

/// Delay-MZI stage whose long arm transmits a fraction `transmittance` of the
/// power, so the delayed amplitude carries an extra `√transmittance`.
pub fn lossy_stage(
    d_in: usize,
    delay: usize,
    theta: f64,
    transmittance: f64,
    port: Port,
) -> Result<TimeBinOperator> {
    if d_in == 0 {
        return Err(Error::DimensionTooSmall(d_in));
    }
    if delay == 0 {
        return Err(Error::out_of_range("delay", 0.0, "[1, inf)"));
    }
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::out_of_range(
            "transmittance",
            transmittance,
            "[0, 1]",
        ));
    }
    let sign = match port {
        Port::X => 1.0,
        Port::Y => -1.0,
    };
    let short = Complex64::new(0.5, 0.0);
    let long = Complex64::from_polar(0.5 * sign * transmittance.sqrt(), theta);
    let mut matrix = DMatrix::zeros(d_in + delay, d_in);
    for k in 0..d_in {
        matrix[(k, k)] = short;
        matrix[(k + delay, k)] = long;
    }
    Ok(TimeBinOperator { matrix })
}

fn stage_count(d: usize) -> Result<u32> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if !d.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(d));
    }
    Ok(d.trailing_zeros())
}

/// Postselected measurement operator of an ideal `log₂ d`-stage cascade at
/// port x, keeping output slot `d − 1`.
pub fn cascaded_measurement(d: usize, theta: f64) -> Result<TimeBinOperator> {
    Analyzer::ideal(d)?.operator(theta)
}

/// A cascaded delay-MZI analyzer for `d = 2ⁿ` time slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analyzer {
    dim: usize,
    long_arm_transmittance: f64,
}

impl Analyzer {
    pub fn ideal(d: usize) -> Result<Self> {
        Self::with_loss(d, 1.0)
    }

    /// Every stage's long arm transmits `transmittance` of the power.
    pub fn with_loss(d: usize, transmittance: f64) -> Result<Self> {
        stage_count(d)?;
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::out_of_range(
                "transmittance",
                transmittance,
                "[0, 1]",
            ));
        }
        Ok(Self {
            dim: d,
            long_arm_transmittance: transmittance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn long_arm_transmittance(&self) -> f64 {
        self.long_arm_transmittance
    }

    /// Cascade at port x before postselection, `(2d − 1) × d`.
    pub fn cascade(&self, theta: f64) -> Result<TimeBinOperator> {
        let stages = stage_count(self.dim)?;
        let mut slots = self.dim;
        let mut op: Option<TimeBinOperator> = None;
        for stage in 0..stages {
            let delay = 1usize << stage;
            let m = lossy_stage(
                slots,
                delay,
                theta * delay as f64,
                self.long_arm_transmittance,
                Port::X,
            )?;
            slots += delay;
            op = Some(match op {
                None => m,
                Some(prev) => prev.then(&m)?,
            });
        }
        Ok(op.expect("at least one stage"))
    }

    /// Cascade followed by postselection on output slot `d − 1`.
    pub fn operator(&self, theta: f64) -> Result<TimeBinOperator> {
        self.cascade(theta)?.postselect(self.dim - 1)
    }

    /// Coefficients `r_k` of the postselected amplitude `Σ_k r_k ψ_k`.
    pub fn detection_row(&self, theta: f64) -> Result<DVector<Complex64>> {
        let op = self.cascade(theta)?;
        Ok(op.matrix.row(self.dim - 1).transpose())
    }
}

/// A two-party state that can be queried for projective joint outcomes.
pub trait JointState {
    /// Per-party dimension.
    fn dim(&self) -> usize;

    /// `⟨a ⊗ b| ρ |a ⊗ b⟩` for single-party kets `a`, `b`.
    fn projection_probability(&self, ket_a: &DVector<Complex64>, ket_b: &DVector<Complex64>)
        -> f64;
}

fn kron(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    let (na, nb) = (a.len(), b.len());
    DVector::from_fn(na * nb, |i, _| a[i / nb] * b[i % nb])
}

impl JointState for BipartiteState {
    fn dim(&self) -> usize {
        BipartiteState::dim(self)
    }

    fn projection_probability(
        &self,
        ket_a: &DVector<Complex64>,
        ket_b: &DVector<Complex64>,
    ) -> f64 {
        kron(ket_a, ket_b).dotc(self.amplitudes()).norm_sqr()
    }
}

impl JointState for DensityOperator {
    fn dim(&self) -> usize {
        DensityOperator::dim(self)
    }

    fn projection_probability(
        &self,
        ket_a: &DVector<Complex64>,
        ket_b: &DVector<Complex64>,
    ) -> f64 {
        self.sandwich(&kron(ket_a, ket_b))
    }
}

/// `|⟨θ_A| ⊗ ⟨θ_B| ψ⟩|²` for arbitrary analyzer phases.
pub fn fourier_joint_probability<S: JointState + ?Sized>(
    state: &S,
    theta_a: f64,
    theta_b: f64,
) -> f64 {
    let d = state.dim();
    state.projection_probability(&fourier_vector(d, theta_a), &fourier_vector(d, theta_b))
}

/// Probability of the outcome pair `(l_A, l_B)` with normalized Fourier
/// projectors. The `1/d²` postselection factor of the MZI realization is not
/// included; see [`Analyzer`] for that.
pub fn joint_outcome_probability<S: JointState + ?Sized>(
    state: &S,
    alice: &MeasurementSetting,
    bob: &MeasurementSetting,
) -> Result<f64> {
    if alice.party != Party::Alice || bob.party != Party::Bob {
        return Err(Error::InvalidTable(
            "joint outcome needs one Alice and one Bob setting".into(),
        ));
    }
    for setting in [alice, bob] {
        if setting.dim != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                found: setting.dim,
            });
        }
    }
    Ok(fourier_joint_probability(
        state,
        analyzer_phase(alice),
        analyzer_phase(bob),
    ))
}
