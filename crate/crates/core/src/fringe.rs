//! Ququart coincidence fringes, their two-parameter fit and the visibility
//! thresholds for a CGLMP violation.
//!
//! A fringe depends on the analyzer phases only through `φ = θ_A + θ_B`.
//! Counts follow `m₁·P(φ)/ΔP + m₂`, so `m₂` is the trough and `m₁ + m₂` the
//! peak, and the visibility is `m₁/(m₁ + 2m₂)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cglmp::{critical_lambda, critical_lambda_for, visibility_from_lambda};
use crate::error::{Error, Result};
use crate::lm::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::qudit::BipartiteState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FringeKind {
    /// `(1, 1, 1, 1)/2`
    Mes,
    /// `(1, γ, γ, 1)/√(2(1+γ²))`
    Oes,
}

impl fmt::Display for FringeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FringeKind::Mes => "mes",
            FringeKind::Oes => "oes",
        })
    }
}

impl FromStr for FringeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mes" => Ok(FringeKind::Mes),
            "oes" => Ok(FringeKind::Oes),
            other => Err(Error::Parse(format!(
                "unknown fringe model `{other}` (expected `mes` or `oes`)"
            ))),
        }
    }
}

/// Fringe of a Schmidt-diagonal ququart pair seen through two ideal
/// analyzers. `ΔP` is derived from `kind` and `gamma` on every call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeModel {
    kind: FringeKind,
    gamma: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::out_of_range("gamma", gamma, "(0, inf)"));
    }
    Ok(())
}

impl FringeModel {
    pub fn mes() -> Self {
        Self {
            kind: FringeKind::Mes,
            gamma: 1.0,
        }
    }

    pub fn oes(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            kind: FringeKind::Oes,
            gamma,
        })
    }

    /// `gamma` is ignored for [`FringeKind::Mes`].
    pub fn new(kind: FringeKind, gamma: f64) -> Result<Self> {
        match kind {
            FringeKind::Mes => Ok(Self::mes()),
            FringeKind::Oes => Self::oes(gamma),
        }
    }

    pub fn kind(&self) -> FringeKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Peak-to-trough span of `P`: `1/4` for MES, `(1+γ)²/(8(1+γ²))` for OES.
    pub fn delta_p(&self) -> f64 {
        match self.kind {
            FringeKind::Mes => 0.25,
            FringeKind::Oes => {
                let g = self.gamma;
                (1.0 + g).powi(2) / (8.0 * (1.0 + g * g))
            }
        }
    }

    pub fn state(&self) -> Result<BipartiteState> {
        match self.kind {
            FringeKind::Mes => BipartiteState::maximally_entangled(4),
            FringeKind::Oes => BipartiteState::gamma_state(self.gamma),
        }
    }

    /// `P/ΔP`, in `[0, 1]` with maximum at `φ = 0`.
    pub fn shape(&self, theta_a: f64, theta_b: f64) -> f64 {
        let phi = theta_a + theta_b;
        match self.kind {
            FringeKind::Mes => ((phi / 2.0).cos() * phi.cos()).powi(2),
            FringeKind::Oes => {
                let g = oes_amplitude(phi, self.gamma);
                (g / (1.0 + self.gamma)).powi(2)
            }
        }
    }

    /// `∂(P/ΔP)/∂γ`; zero for MES.
    pub fn shape_dgamma(&self, theta_a: f64, theta_b: f64) -> f64 {
        match self.kind {
            FringeKind::Mes => 0.0,
            FringeKind::Oes => {
                let phi = theta_a + theta_b;
                let s = 1.0 + self.gamma;
                let g = oes_amplitude(phi, self.gamma);
                2.0 * g * (phi / 2.0).cos() / (s * s) - 2.0 * g * g / (s * s * s)
            }
        }
    }

    /// Joint probability `P(θ_A, θ_B)` of the two Fourier projections.
    pub fn probability(&self, theta_a: f64, theta_b: f64) -> f64 {
        self.delta_p() * self.shape(theta_a, theta_b)
    }

    pub fn counts(&self, theta_a: f64, theta_b: f64, m1: f64, m2: f64) -> f64 {
        m1 * self.shape(theta_a, theta_b) + m2
    }
}

/// `cos(3φ/2) + γ cos(φ/2)`
fn oes_amplitude(phi: f64, gamma: f64) -> f64 {
    (1.5 * phi).cos() + gamma * (0.5 * phi).cos()
}

/// `m₁·P(θ_A, θ_B)/ΔP + m₂`.
pub fn fringe_model(model: &FringeModel, theta_a: f64, theta_b: f64, m1: f64, m2: f64) -> f64 {
    model.counts(theta_a, theta_b, m1, m2)
}

/// Lowest fringe visibility that still admits `S₄ > 2` under white noise.
pub fn critical_visibility(model: &FringeModel) -> Result<f64> {
    visibility_from_lambda(critical_lambda(&model.state()?)?, model.delta_p())
}

/// [`critical_visibility`] for a state with known pure-state `S` and fringe
/// span `ΔP`.
pub fn critical_visibility_for(s_pure: f64, delta_p: f64) -> Result<f64> {
    visibility_from_lambda(critical_lambda_for(s_pure)?, delta_p)
}

/// `m₁/(m₁ + 2m₂)`
pub fn visibility(m1: f64, m2: f64) -> f64 {
    let denom = m1 + 2.0 * m2;
    if denom > 0.0 {
        m1 / denom
    } else {
        0.0
    }
}

/// One measured fringe sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub theta_a: f64,
    pub theta_b: f64,
    pub counts: f64,
}

impl FringePoint {
    /// Reads CSV with header `theta_a,theta_b,counts`; `#` lines are comments.
    pub fn parse_csv(text: &str) -> Result<Vec<Self>> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?;
        if header.iter().ne(["theta_a", "theta_b", "counts"]) {
            return Err(Error::Parse(
                "expected header `theta_a,theta_b,counts`".into(),
            ));
        }
        reader
            .deserialize()
            .map(|row| row.map_err(Error::from))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Constant variance.
    #[default]
    Uniform,
    /// Variance equal to the model value, floored at one count.
    Poisson,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitOptions {
    pub weighting: Weighting,
    /// Also fit γ (OES only), starting from the model's value.
    pub fit_gamma: bool,
    /// Starting `(m₁, m₂)`; defaults to `(max − min, min)` of the counts.
    pub initial: Option<(f64, f64)>,
    pub lm: LmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FringeModel,
    pub m1: f64,
    pub m2: f64,
    /// Fitted γ when it was a free parameter.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    pub visibility: f64,
    /// Parameter covariance in the order `(m₁, m₂[, γ])`.
    pub covariance: Vec<Vec<f64>>,
    pub visibility_stderr: f64,
    pub residual_sum_squares: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn m1_stderr(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    pub fn m2_stderr(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }

    pub fn gamma_stderr(&self) -> Option<f64> {
        self.gamma.map(|_| self.covariance[2][2].max(0.0).sqrt())
    }
}

struct FringeProblem<'a> {
    data: &'a [FringePoint],
    model: FringeModel,
    weighting: Weighting,
    fit_gamma: bool,
}

impl FringeProblem<'_> {
    fn model_at(&self, params: &[f64]) -> FringeModel {
        if self.fit_gamma {
            FringeModel {
                gamma: params[2],
                ..self.model
            }
        } else {
            self.model
        }
    }

    /// Unweighted model gradient for one point.
    fn gradient(&self, model: &FringeModel, params: &[f64], point: &FringePoint) -> [f64; 3] {
        [
            model.shape(point.theta_a, point.theta_b),
            1.0,
            params[0] * model.shape_dgamma(point.theta_a, point.theta_b),
        ]
    }
}

impl LeastSquares for FringeProblem<'_> {
    fn num_params(&self) -> usize {
        if self.fit_gamma {
            3
        } else {
            2
        }
    }

    fn num_residuals(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        let model = self.model_at(params);
        DVector::from_fn(self.data.len(), |i, _| {
            let p = &self.data[i];
            let f = model.counts(p.theta_a, p.theta_b, params[0], params[1]);
            match self.weighting {
                Weighting::Uniform => f - p.counts,
                Weighting::Poisson => (f - p.counts) / f.max(1.0).sqrt(),
            }
        })
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let model = self.model_at(params);
        let n = self.num_params();
        let mut jac = DMatrix::zeros(self.data.len(), n);
        for (i, p) in self.data.iter().enumerate() {
            let grad = self.gradient(&model, params, p);
            let f = model.counts(p.theta_a, p.theta_b, params[0], params[1]);
            // d/dp[(f − y)/√f] = f′(f + y)/(2f^{3/2}) above the one-count floor.
            let scale = match self.weighting {
                Weighting::Uniform => 1.0,
                Weighting::Poisson if f > 1.0 => (f + p.counts) / (2.0 * f.powf(1.5)),
                Weighting::Poisson => 1.0,
            };
            for j in 0..n {
                jac[(i, j)] = grad[j] * scale;
            }
        }
        jac
    }

    fn project(&self, params: &mut [f64]) {
        params[0] = params[0].max(0.0);
        params[1] = params[1].max(0.0);
        if self.fit_gamma {
            params[2] = params[2].max(1e-6);
        }
    }
}

/// Least-squares fit of `(m₁, m₂)` (and optionally γ) to measured fringe
/// samples, with first-order visibility uncertainty.
///
/// The covariance is
/// `s²(JᵀJ)⁻¹` with `s²` the residual variance per degree of freedom.
pub fn lm_fit(
    data: &[FringePoint],
    model: &FringeModel,
    options: &FitOptions,
) -> Result<FitResult> {
    if options.fit_gamma && model.kind() != FringeKind::Oes {
        return Err(Error::Config("fitting gamma requires the oes model".into()));
    }
    let problem = FringeProblem {
        data,
        model: *model,
        weighting: options.weighting,
        fit_gamma: options.fit_gamma,
    };
    let n_params = problem.num_params();
    if data.len() < 3 || data.len() <= n_params {
        return Err(Error::InsufficientData(format!(
            "{} fringe points for {} parameters",
            data.len(),
            n_params
        )));
    }
    for p in data {
        if !(p.counts.is_finite() && p.counts >= 0.0) {
            return Err(Error::InvalidCounts(format!(
                "count {} is not a non-negative number",
                p.counts
            )));
        }
        if !(p.theta_a.is_finite() && p.theta_b.is_finite()) {
            return Err(Error::InvalidCounts("non-finite phase".into()));
        }
    }
    let max = data
        .iter()
        .map(|p| p.counts)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = data.iter().map(|p| p.counts).fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Err(Error::InvalidCounts("all fringe counts are zero".into()));
    }

    let (m1_0, m2_0) = options.initial.unwrap_or((max - min, min));
    let mut initial = vec![m1_0, m2_0];
    if options.fit_gamma {
        initial.push(model.gamma());
    }
    let solution = levenberg_marquardt(&problem, &initial, &options.lm)?;
    if !solution.converged {
        return Err(Error::NoConvergence {
            method: "Levenberg-Marquardt",
            iterations: solution.iterations,
        });
    }

    let dof = (data.len() - n_params) as f64;
    let s2 = 2.0 * solution.cost / dof;
    let covariance = solution
        .normal_inverse()
        .map(|inv| inv * s2)
        .ok_or_else(|| {
            Error::InsufficientData("fringe samples do not determine the parameters".into())
        })?;

    let (m1, m2) = (solution.params[0], solution.params[1]);
    let denom = (m1 + 2.0 * m2).powi(2);
    let grad = [2.0 * m2 / denom, -2.0 * m1 / denom];
    let var_v: f64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| grad[i] * covariance[(i, j)] * grad[j])
        .sum();

    let fitted_model = problem.model_at(&solution.params);
    let rss = data
        .iter()
        .map(|p| (fitted_model.counts(p.theta_a, p.theta_b, m1, m2) - p.counts).powi(2))
        .sum();
    Ok(FitResult {
        model: fitted_model,
        m1,
        m2,
        gamma: options.fit_gamma.then(|| solution.params[2]),
        visibility: visibility(m1, m2),
        covariance: (0..n_params)
            .map(|i| (0..n_params).map(|j| covariance[(i, j)]).collect())
            .collect(),
        visibility_stderr: var_v.max(0.0).sqrt(),
        residual_sum_squares: rss,
        converged: solution.converged,
        iterations: solution.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use crate::measurement::fourier_joint_probability;

    fn grid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 2.0 * PI * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn mes_peak_and_trough() {
        let m = FringeModel::mes();
        assert!((fringe_model(&m, 0.3, -0.3, 600.0, 30.0) - 630.0).abs() < 1e-12);
        assert!((fringe_model(&m, 1.0, PI - 1.0, 600.0, 30.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn probabilities_match_state_projection() {
        for model in [FringeModel::mes(), FringeModel::oes(0.739).unwrap()] {
            let psi = model.state().unwrap();
            for &ta in &grid(17) {
                for tb in [0.0, PI / 4.0, 1.3] {
                    let direct = fourier_joint_probability(&psi, ta, tb);
                    assert!((model.probability(ta, tb) - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn delta_p_values() {
        assert_eq!(FringeModel::mes().delta_p(), 0.25);
        let oes = FringeModel::oes(0.739).unwrap();
        assert!((oes.delta_p() - 0.244493).abs() < 1e-6);
        assert!((FringeModel::oes(1.0).unwrap().delta_p() - 0.25).abs() < 1e-15);
        assert!(FringeModel::oes(0.0).is_err());
    }

    #[test]
    fn oes_minor_peaks_are_higher() {
        let mes = FringeModel::mes();
        let oes = FringeModel::oes(0.739).unwrap();
        // Minor peaks of the MES fringe sit at φ = ±2π/3-ish; compare the
        // local maxima between the two zeros around φ = π.
        let minor_max = |m: &FringeModel| {
            (0..=2000)
                .map(|i| PI / 2.0 + 0.001 * i as f64 * PI / 2.0)
                .map(|t| m.counts(t, 0.0, 600.0, 10.0))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        assert!(minor_max(&oes) > minor_max(&mes));
    }

    #[test]
    fn gamma_derivative_matches_finite_difference() {
        let h = 1e-6;
        for phi in grid(13) {
            let m = FringeModel::oes(0.739).unwrap();
            let plus = FringeModel::oes(0.739 + h).unwrap().shape(phi, 0.0);
            let minus = FringeModel::oes(0.739 - h).unwrap().shape(phi, 0.0);
            assert!((m.shape_dgamma(phi, 0.0) - (plus - minus) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn critical_visibilities() {
        let mes = critical_visibility(&FringeModel::mes()).unwrap();
        assert!((mes - 0.817).abs() < 1e-3);
        let oes = critical_visibility(&FringeModel::oes(0.739).unwrap()).unwrap();
        assert!((oes - 0.801).abs() < 1e-3);
        assert_eq!(critical_visibility_for(2.0, 0.25).unwrap(), 1.0);
        assert!(critical_visibility_for(1.9, 0.25).is_err());
    }

    fn synthetic(model: &FringeModel, m1: f64, m2: f64) -> Vec<FringePoint> {
        grid(41)
            .into_iter()
            .map(|theta_a| FringePoint {
                theta_a,
                theta_b: 0.0,
                counts: model.counts(theta_a, 0.0, m1, m2),
            })
            .collect()
    }

    #[test]
    fn noiseless_recovery() {
        let model = FringeModel::mes();
        let fit = lm_fit(
            &synthetic(&model, 600.0, 5.0),
            &model,
            &FitOptions::default(),
        )
        .unwrap();
        assert!((fit.m1 / 600.0 - 1.0).abs() < 1e-8);
        assert!((fit.m2 / 5.0 - 1.0).abs() < 1e-8);
        assert!((fit.visibility - 600.0 / 610.0).abs() < 1e-10);
        assert!(fit.converged);
    }

    #[test]
    fn noiseless_recovery_with_free_gamma() {
        let model = FringeModel::oes(0.739).unwrap();
        let start = FringeModel::oes(0.9).unwrap();
        let options = FitOptions {
            fit_gamma: true,
            ..Default::default()
        };
        let fit = lm_fit(&synthetic(&model, 500.0, 12.0), &start, &options).unwrap();
        assert!((fit.gamma.unwrap() - 0.739).abs() < 1e-8);
        assert!((fit.m1 / 500.0 - 1.0).abs() < 1e-8);
        assert!(lm_fit(
            &synthetic(&model, 500.0, 12.0),
            &FringeModel::mes(),
            &options
        )
        .is_err());
    }

    #[test]
    fn poisson_weighting_recovers_exact_data() {
        let model = FringeModel::oes(0.739).unwrap();
        let options = FitOptions {
            weighting: Weighting::Poisson,
            ..Default::default()
        };
        let fit = lm_fit(&synthetic(&model, 450.0, 20.0), &model, &options).unwrap();
        assert!((fit.m1 / 450.0 - 1.0).abs() < 1e-8);
        assert!((fit.m2 / 20.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fringe_csv() {
        let pts = FringePoint::parse_csv("# fringe\ntheta_a,theta_b,counts\n0,0,610\n1.5, 0, 12\n")
            .unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].counts, 12.0);
        assert!(FringePoint::parse_csv("a,b,c\n1,2,3\n").is_err());
        assert!(FringePoint::parse_csv("theta_a,theta_b,counts\n1,x,3\n").is_err());
    }

    #[test]
    fn input_errors() {
        let model = FringeModel::mes();
        let pts = synthetic(&model, 600.0, 5.0);
        assert!(matches!(
            lm_fit(&pts[..2], &model, &FitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        let zeros: Vec<_> = pts
            .iter()
            .map(|p| FringePoint { counts: 0.0, ..*p })
            .collect();
        assert!(matches!(
            lm_fit(&zeros, &model, &FitOptions::default()),
            Err(Error::InvalidCounts(_))
        ));
        let mut negative = pts.clone();
        negative[3].counts = -1.0;
        assert!(matches!(
            lm_fit(&negative, &model, &FitOptions::default()),
            Err(Error::InvalidCounts(_))
        ));
    }
}
