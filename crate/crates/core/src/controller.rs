//! Mutation-rate controllers.
//!
//! Every controller answers two questions per generation: which
//! subpopulations to create (size and per-bit probability), and how to move
//! its state after seeing which subpopulation produced the selected
//! offspring. The self-adjusting controllers follow the two-rate scheme: the
//! rate `r` yields subpopulations at `r/2` and `2r` (plus `r` itself in the
//! three-subpopulation variant); after selection the rate moves by the
//! update factor `F` towards the winner with probability 1/2 and in a
//! uniformly random direction otherwise, then is clamped to
//! `min{max{F, r}, n/(2F)}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Result};

/// One block of offspring sharing a mutation probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subpopulation {
    pub size: usize,
    /// Scaled rate `r`; the flip probability is `r / n`.
    pub rate: f64,
    pub probability: f64,
}

/// What the engine reports back after selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationOutcome {
    /// Subpopulation index of the (tie-broken) best offspring.
    pub winner_subpopulation: usize,
    pub best_fitness_distance: u64,
    /// Whether the best offspring is strictly better than the parent.
    pub improved: bool,
}

/// State of the self-adjusting controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub rate: f64,
    pub update_factor: f64,
    pub lower_clamp: f64,
    pub upper_clamp: f64,
    pub random_steps: bool,
    /// 2 (rates `r/2`, `2r`) or 3 (rates `r/2`, `r`, `2r`).
    pub subpopulations: usize,
}

impl ControllerState {
    /// Controller for problem size `n`. The clamp interval is `[F, n/(2F)]`,
    /// which is `[2, n/4]` for the default `F = 2`. When `n < 2F²` the
    /// interval is empty and the upper bound wins, as in `min{max{F, r}, n/(2F)}`.
    pub fn new(
        n: usize,
        update_factor: f64,
        random_steps: bool,
        subpopulations: usize,
        initial_rate: Option<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return config_err("problem size n must be at least 1");
        }
        if !(update_factor > 1.0 && update_factor.is_finite()) {
            return config_err(format!("update factor {update_factor} must be a finite value > 1"));
        }
        if !(2..=3).contains(&subpopulations) {
            return config_err(format!("subpopulation count {subpopulations} must be 2 or 3"));
        }
        let lower_clamp = update_factor;
        let upper_clamp = n as f64 / (2.0 * update_factor);
        let initial = initial_rate.unwrap_or(lower_clamp);
        if !(initial >= lower_clamp && initial.is_finite()) {
            return config_err(format!(
                "initial rate {initial} below the lower clamp {lower_clamp}"
            ));
        }
        if lower_clamp <= upper_clamp && initial > upper_clamp {
            return config_err(format!(
                "initial rate {initial} above the upper clamp {upper_clamp}"
            ));
        }
        let mut state = Self {
            rate: initial,
            update_factor,
            lower_clamp,
            upper_clamp,
            random_steps,
            subpopulations,
        };
        state.rate = state.clamp(initial);
        Ok(state)
    }

    /// Algorithm 1 with `F = 2`, random steps and two subpopulations.
    pub fn two_rate(n: usize) -> Result<Self> {
        Self::new(n, 2.0, true, 2, None)
    }

    #[inline]
    pub fn clamp(&self, rate: f64) -> f64 {
        rate.max(self.lower_clamp).min(self.upper_clamp)
    }

    /// Subpopulation rates relative to `r`.
    fn rate_multipliers(&self) -> &'static [f64] {
        if self.subpopulations == 2 {
            &[0.5, 2.0]
        } else {
            &[0.5, 1.0, 2.0]
        }
    }

    pub fn propose_rates(&self, n: usize, lambda: usize) -> Result<Vec<Subpopulation>> {
        if lambda == 0 || !lambda.is_multiple_of(self.subpopulations) {
            return config_err(format!(
                "lambda = {lambda} is not a positive multiple of {} subpopulations",
                self.subpopulations
            ));
        }
        let size = lambda / self.subpopulations;
        Ok(self
            .rate_multipliers()
            .iter()
            .map(|m| {
                let rate = self.rate * m;
                Subpopulation {
                    size,
                    rate,
                    probability: (rate / n as f64).min(1.0),
                }
            })
            .collect())
    }

    /// Moves the rate after one generation.
    ///
    /// Random draws, in order: the adjustment-type coin (`true` means follow
    /// the winner), then, only for a random step, the direction coin (`true`
    /// means multiply by `F`). Without random steps no draw is made.
    pub fn update_rate<R: Rng + ?Sized>(&self, outcome: &GenerationOutcome, rng: &mut R) -> Self {
        let follow_winner = !self.random_steps || rng.random_bool(0.5);
        let factor = if follow_winner {
            self.winner_factor(outcome.winner_subpopulation)
        } else if rng.random_bool(0.5) {
            self.update_factor
        } else {
            self.update_factor.recip()
        };
        Self {
            rate: self.clamp(self.rate * factor),
            ..*self
        }
    }

    /// Multiplicative step towards the winner's subpopulation.
    pub fn winner_factor(&self, winner: usize) -> f64 {
        assert!(winner < self.subpopulations, "winner index {winner} out of range");
        match (self.subpopulations, winner) {
            (_, 0) => self.update_factor.recip(),
            (3, 1) => 1.0,
            _ => self.update_factor,
        }
    }
}

/// Static-rate baseline rate `r` (probability `r / n`).
pub fn static_rate(r: f64, n: usize) -> Result<Controller> {
    if !(r > 0.0 && r <= n as f64) {
        return config_err(format!("static rate {r} outside (0, n = {n}]"));
    }
    Ok(Controller::Static { rate: r })
}

/// Fitness-dependent probability `max{ln λ / (n ln(en/d)), 1/n}`.
pub fn fitness_dependent_rate(d: u64, n: usize, lambda: usize) -> Result<f64> {
    if d == 0 || d as usize > n {
        return domain_err(format!("fitness distance {d} outside [1, n = {n}]"));
    }
    if lambda < 2 {
        return domain_err(format!("lambda = {lambda} must be at least 2"));
    }
    let n_f = n as f64;
    let scaled = (lambda as f64).ln() / (n_f * (std::f64::consts::E * n_f / d as f64).ln());
    Ok(scaled.max(1.0 / n_f))
}

/// A constructed controller, ready to drive a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Controller {
    SelfAdjusting(ControllerState),
    Static { rate: f64 },
    FitnessDependent,
}

impl Controller {
    pub fn subpopulations(&self) -> usize {
        match self {
            Self::SelfAdjusting(s) => s.subpopulations,
            _ => 1,
        }
    }

    pub fn propose_rates(
        &self,
        n: usize,
        lambda: usize,
        parent_distance: u64,
    ) -> Result<Vec<Subpopulation>> {
        match self {
            Self::SelfAdjusting(s) => s.propose_rates(n, lambda),
            Self::Static { rate } => Ok(vec![Subpopulation {
                size: lambda,
                rate: *rate,
                probability: rate / n as f64,
            }]),
            Self::FitnessDependent => {
                // Small n can push the formula above 1.
                let p = fitness_dependent_rate(parent_distance, n, lambda)?.min(1.0);
                Ok(vec![Subpopulation {
                    size: lambda,
                    rate: p * n as f64,
                    probability: p,
                }])
            }
        }
    }

    pub fn update_rate<R: Rng + ?Sized>(&self, outcome: &GenerationOutcome, rng: &mut R) -> Self {
        match self {
            Self::SelfAdjusting(s) => Self::SelfAdjusting(s.update_rate(outcome, rng)),
            other => *other,
        }
    }

    /// Scaled rate `r` in effect for a parent at `parent_distance`.
    pub fn current_rate(&self, n: usize, lambda: usize, parent_distance: u64) -> f64 {
        match self {
            Self::SelfAdjusting(s) => s.rate,
            Self::Static { rate } => *rate,
            Self::FitnessDependent => fitness_dependent_rate(parent_distance.max(1), n, lambda)
                .map(|p| p.min(1.0) * n as f64)
                .unwrap_or(f64::NAN),
        }
    }
}

/// Named static rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedStaticRate {
    /// `r = ln(λ)/2`.
    HalfLnLambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StaticRateSpec {
    Fixed(f64),
    Named(NamedStaticRate),
}

impl StaticRateSpec {
    pub fn resolve(&self, lambda: usize) -> f64 {
        match self {
            Self::Fixed(r) => *r,
            Self::Named(NamedStaticRate::HalfLnLambda) => (lambda as f64).ln() / 2.0,
        }
    }
}

fn default_factor() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

fn default_subpopulations() -> usize {
    2
}

/// Serializable controller description, as found in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControllerSpec {
    SelfAdjusting {
        #[serde(default = "default_factor")]
        factor: f64,
        #[serde(default = "default_true")]
        random_steps: bool,
        #[serde(default = "default_subpopulations")]
        subpopulations: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_rate: Option<f64>,
    },
    Static {
        rate: StaticRateSpec,
    },
    FitnessDependent,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self::SelfAdjusting {
            factor: 2.0,
            random_steps: true,
            subpopulations: 2,
            initial_rate: None,
        }
    }
}

impl ControllerSpec {
    pub fn build(&self, n: usize, lambda: usize) -> Result<Controller> {
        let controller = match *self {
            Self::SelfAdjusting {
                factor,
                random_steps,
                subpopulations,
                initial_rate,
            } => Controller::SelfAdjusting(ControllerState::new(
                n,
                factor,
                random_steps,
                subpopulations,
                initial_rate,
            )?),
            Self::Static { rate } => static_rate(rate.resolve(lambda), n)?,
            Self::FitnessDependent => Controller::FitnessDependent,
        };
        let subpops = controller.subpopulations();
        if lambda < 2 || !lambda.is_multiple_of(subpops) {
            return config_err(format!(
                "lambda = {lambda} must be at least 2 and divisible by {subpops} for controller {}",
                self.id()
            ));
        }
        Ok(controller)
    }

    /// Short identifier used in result tables.
    pub fn id(&self) -> String {
        match self {
            Self::SelfAdjusting {
                random_steps,
                subpopulations,
                ..
            } => {
                let base = if *subpopulations == 3 { "three-rate" } else { "two-rate" };
                if *random_steps {
                    base.to_string()
                } else {
                    format!("{base}-no-random")
                }
            }
            Self::Static {
                rate: StaticRateSpec::Named(NamedStaticRate::HalfLnLambda),
            } => "static-half-ln-lambda".to_string(),
            Self::Static {
                rate: StaticRateSpec::Fixed(r),
            } => format!("static-{r}"),
            Self::FitnessDependent => "fitness-dependent".to_string(),
        }
    }

    pub fn factor(&self) -> Option<f64> {
        match self {
            Self::SelfAdjusting { factor, .. } => Some(*factor),
            _ => None,
        }
    }

    pub fn random_steps(&self) -> Option<bool> {
        match self {
            Self::SelfAdjusting { random_steps, .. } => Some(*random_steps),
            _ => None,
        }
    }

    pub fn subpopulations(&self) -> usize {
        match self {
            Self::SelfAdjusting { subpopulations, .. } => *subpopulations,
            _ => 1,
        }
    }
}
