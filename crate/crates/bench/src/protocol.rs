use newton_mr_core::linesearch::LineSearchConfig;
use newton_mr_core::minres::MinresConfig;
use newton_mr_core::newton_mr::{FirstOrderConfig, InexactnessRule, SecondOrderConfig};
use newton_mr_core::oracle::{OracleCounter, OracleWeights};

/// Termination rules and solver settings shared by every grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub eps_g: f64,
    pub eps_h: f64,
    pub theta: f64,
    pub inexactness: InexactnessRule,
    /// A run fails once its weighted oracle total exceeds this.
    pub budget: f64,
    pub min_step: f64,
    pub inner_max_iters: usize,
    pub weights: OracleWeights,
    pub lbfgs_memory: usize,
    pub tr_initial_radius: f64,
    pub tr_max_radius: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            eps_g: 1e-10,
            eps_h: 0.1,
            theta: 0.1,
            inexactness: InexactnessRule::Fixed,
            budget: 1e5,
            min_step: 1e-18,
            inner_max_iters: 1000,
            weights: OracleWeights::default(),
            lbfgs_memory: 10,
            tr_initial_radius: 1.0,
            tr_max_radius: 1e10,
        }
    }
}

impl Protocol {
    pub fn counter(&self) -> OracleCounter {
        OracleCounter::new(self.weights)
    }

    pub fn exhausted(&self, counter: &OracleCounter) -> bool {
        counter.total() > self.budget
    }

    pub fn armijo(&self, rho: f64) -> LineSearchConfig {
        LineSearchConfig {
            rho,
            min_step: self.min_step,
            ..LineSearchConfig::default()
        }
    }

    pub fn first_order(&self) -> FirstOrderConfig {
        FirstOrderConfig {
            eps_g: self.eps_g,
            theta: self.theta,
            inexactness: self.inexactness,
            ls: self.armijo(1e-4),
            minres: MinresConfig {
                max_iters: self.inner_max_iters,
                ..MinresConfig::default()
            },
            oracle_budget: self.budget,
            weights: self.weights,
            ..FirstOrderConfig::default()
        }
    }

    pub fn second_order(&self, seed: u64) -> SecondOrderConfig {
        SecondOrderConfig {
            first: self.first_order(),
            eps_h: self.eps_h,
            rng_seed: seed,
        }
    }
}
