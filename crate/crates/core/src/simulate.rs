//! Monte Carlo photon-counting runs that produce synthetic count tables.
//!
//! Every one of the `4d²` phase settings is a separate run of
//! `gates_per_setting` pump gates. Within a gate, each pair is routed to one
//! of four fates: both analyzers fire in their postselected slot, only
//! Alice's fires, only Bob's fires, or neither. Pairs are independent, so
//! the number of pairs with a visible fate is Poisson with mean `μ·v`, where
//! `v` is the single-pair probability of a visible fate. Detectors do not
//! resolve photon number and add independent dark counts.
//!
//! Gates in which nothing can fire are skipped in bulk: the number of gates
//! with any detector activity is drawn from a binomial, and only those gates
//! are sampled, each conditioned on being active. The result has the same
//! distribution as gate-by-gate sampling.
//!
//! Randomness: ChaCha8 seeded from `seed`, with stream number equal to the
//! flat setting index `((a·2 + b)·d + l_A)·d + l_B`. Settings are simulated
//! in parallel; the table does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::optimize_state;
use crate::cglmp::table_index;
use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::measurement::{analyzer_phase, Analyzer, MeasurementSetting};
use crate::photon::{measurement_probs_at, MeasurementProbs, NoiseParams};
use crate::qudit::{BipartiteState, PumpProfile};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSource {
    /// Poissonian pair number with mean `μ` per gate.
    #[default]
    Poisson,
    /// Exactly one pair per gate; `μ` is ignored.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub gates_per_setting: u64,
    #[serde(default)]
    pub pair_source: PairSource,
    /// Power transmittance of every delayed interferometer arm.
    #[serde(default = "unit")]
    pub long_arm_transmittance: f64,
}

fn unit() -> f64 {
    1.0
}

impl Schedule {
    pub fn new(gates_per_setting: u64) -> Self {
        Self {
            gates_per_setting,
            pair_source: PairSource::Poisson,
            long_arm_transmittance: 1.0,
        }
    }
}

/// Fate probabilities of one pair.
#[derive(Debug, Clone, Copy)]
struct Fates {
    both: f64,
    alice_only: f64,
    bob_only: f64,
}

impl Fates {
    fn new(probs: &MeasurementProbs, eta_a: f64, eta_b: f64) -> Self {
        let both = eta_a * eta_b * probs.p_ab;
        Self {
            both,
            alice_only: (eta_a * probs.p_a - both).max(0.0),
            bob_only: (eta_b * probs.p_b - both).max(0.0),
        }
    }

    fn visible(&self) -> f64 {
        self.both + self.alice_only + self.bob_only
    }
}

/// Draws `K ~ Poisson(mean)` conditioned on `K ≥ 1` by inversion.
fn positive_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    let u: f64 = rng.random();
    // P(K = 1 | K ≥ 1) = mean / (e^mean − 1)
    let mut pk = mean / mean.exp_m1();
    let mut cumulative = pk;
    let mut k = 1;
    while u > cumulative && pk > 0.0 {
        k += 1;
        pk *= mean / k as f64;
        cumulative += pk;
    }
    k
}

fn simulate_setting(
    fates: Fates,
    noise: &NoiseParams,
    schedule: &Schedule,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    let v = fates.visible();
    let mean = noise.mu * v;
    // P(no visible pair in a gate)
    let p_none = match schedule.pair_source {
        PairSource::Poisson => (-mean).exp(),
        PairSource::Single => 1.0 - v,
    };
    let dark = noise.dark_prob;
    let p_quiet = p_none * (1.0 - dark) * (1.0 - dark);
    let p_active = 1.0 - p_quiet;
    if p_active <= 0.0 {
        return Ok(0);
    }
    let active = Binomial::new(schedule.gates_per_setting, p_active.min(1.0))
        .map_err(|e| Error::Config(format!("binomial draw: {e}")))?
        .sample(rng);

    let p_pairs = (1.0 - p_none) / p_active;
    // Dark-only gates: the three non-quiet dark patterns.
    let dark_only = [dark * (1.0 - dark), (1.0 - dark) * dark, dark * dark];
    let dark_total: f64 = dark_only.iter().sum();

    let mut coincidences = 0;
    for _ in 0..active {
        let (mut fired_a, mut fired_b);
        if rng.random::<f64>() < p_pairs {
            fired_a = rng.random::<f64>() < dark;
            fired_b = rng.random::<f64>() < dark;
            let pairs = match schedule.pair_source {
                PairSource::Poisson => positive_poisson(rng, mean),
                PairSource::Single => 1,
            };
            for _ in 0..pairs {
                let u = rng.random::<f64>() * v;
                if u < fates.both {
                    fired_a = true;
                    fired_b = true;
                } else if u < fates.both + fates.alice_only {
                    fired_a = true;
                } else {
                    fired_b = true;
                }
            }
        } else {
            let u = rng.random::<f64>() * dark_total;
            fired_a = u < dark_only[0] || u >= dark_only[0] + dark_only[1];
            fired_b = u >= dark_only[0];
        }
        if fired_a && fired_b {
            coincidences += 1;
        }
    }
    Ok(coincidences)
}

/// Simulates a full CGLMP run: all `4d²` phase combinations, each for
/// `schedule.gates_per_setting` gates.
pub fn simulate_experiment(
    state: &BipartiteState,
    noise: &NoiseParams,
    schedule: &Schedule,
) -> Result<CountTable> {
    noise.validate()?;
    if schedule.gates_per_setting == 0 {
        return Err(Error::Config("gates_per_setting must be positive".into()));
    }
    let d = state.dim();
    let analyzer = Analyzer::with_loss(d, schedule.long_arm_transmittance)?;

    let mut settings = Vec::with_capacity(4 * d * d);
    for a in 0..2 {
        for b in 0..2 {
            for la in 0..d {
                let theta_a = analyzer_phase(&MeasurementSetting::alice(a, la, d)?);
                for lb in 0..d {
                    let theta_b = analyzer_phase(&MeasurementSetting::bob(b, lb, d)?);
                    let probs = measurement_probs_at(state, &analyzer, theta_a, theta_b)?;
                    settings.push((
                        table_index(d, a, b, la, lb),
                        Fates::new(&probs, noise.eta_a, noise.eta_b),
                    ));
                }
            }
        }
    }

    let counts = settings
        .into_par_iter()
        .map(|(index, fates)| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(index as u64);
            simulate_setting(fates, noise, schedule, &mut rng)
        })
        .collect::<Result<Vec<u64>>>()?;

    Ok(CountTable::new(d, counts)?
        .with_metadata("source", "simulation")
        .with_metadata("mu", noise.mu)
        .with_metadata("eta_a", noise.eta_a)
        .with_metadata("eta_b", noise.eta_b)
        .with_metadata("dark_prob", noise.dark_prob)
        .with_metadata("seed", noise.seed)
        .with_metadata("gates_per_setting", schedule.gates_per_setting)
        .with_metadata("rng", "chacha8, stream = setting index"))
}

/// Which pair state to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Mes {
        d: usize,
    },
    /// Ququart `(1, γ, γ, 1)` state.
    Oes {
        gamma: f64,
    },
    /// Maximizer of `S_d`.
    Optimized {
        d: usize,
    },
    /// State shaped by per-bin pump intensities.
    Pump {
        intensities: Vec<f64>,
    },
}

impl StateSpec {
    pub fn build(&self) -> Result<BipartiteState> {
        match self {
            StateSpec::Mes { d } => BipartiteState::maximally_entangled(*d),
            StateSpec::Oes { gamma } => BipartiteState::gamma_state(*gamma),
            StateSpec::Optimized { d } => Ok(optimize_state(*d)?.state),
            StateSpec::Pump { intensities } => {
                BipartiteState::from_pump(&PumpProfile::new(intensities.clone())?)
            }
        }
    }
}

/// JSON simulation request: `{"state": …, "noise": …, "schedule": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub state: StateSpec,
    pub noise: NoiseParams,
    pub schedule: Schedule,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.noise.validate()?;
        Ok(config)
    }

    pub fn run(&self) -> Result<CountTable> {
        simulate_experiment(&self.state.build()?, &self.noise, &self.schedule)
    }
}
