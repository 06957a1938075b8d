//! Oracle-call accounting in function-evaluation equivalents.

use serde::{Deserialize, Serialize};

/// Cost of one evaluation of each oracle, in function-evaluation units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleWeights {
    pub value: f64,
    pub gradient: f64,
    pub hessian_vector: f64,
}

impl Default for OracleWeights {
    fn default() -> Self {
        Self {
            value: 1.0,
            gradient: 2.0,
            hessian_vector: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleCounter {
    pub f_evals: u64,
    pub g_evals: u64,
    pub hv_evals: u64,
    pub weights: OracleWeights,
}

impl OracleCounter {
    pub fn new(weights: OracleWeights) -> Self {
        Self {
            weights,
            ..Self::default()
        }
    }

    pub fn charge_value(&mut self, n: usize) {
        self.f_evals += n as u64;
    }

    pub fn charge_gradient(&mut self, n: usize) {
        self.g_evals += n as u64;
    }

    pub fn charge_hessian_vector(&mut self, n: usize) {
        self.hv_evals += n as u64;
    }

    pub fn total(&self) -> f64 {
        self.weights.value * self.f_evals as f64
            + self.weights.gradient * self.g_evals as f64
            + self.weights.hessian_vector * self.hv_evals as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_total() {
        let mut c = OracleCounter::default();
        c.charge_value(3);
        c.charge_gradient(2);
        c.charge_hessian_vector(5);
        assert_eq!(c.total(), 3.0 + 4.0 + 20.0);
    }
}
