//! Armijo-type step-size selection along a fixed direction.
//!
//! [`backtrack`] shrinks a trial step geometrically until the sufficient
//! decrease condition holds. [`forward_backward`] first tries to grow the
//! step while the condition keeps holding, which pays off along directions
//! of negative curvature.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    pub rho: f64,
    pub zeta: f64,
    pub alpha0: f64,
    pub max_ls_iters: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            rho: 1e-4,
            zeta: 0.5,
            alpha0: 1.0,
            max_ls_iters: 1000,
            min_step: 1e-18,
            max_step: 1e12,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |msg: String| Err(CoreError::InvalidConfig(msg));
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad(format!("zeta must lie in (0, 1), got {}", self.zeta));
        }
        if !(self.min_step > 0.0 && self.min_step < self.alpha0 && self.alpha0 <= self.max_step) {
            return bad(format!(
                "need 0 < min_step < alpha0 <= max_step, got {} / {} / {}",
                self.min_step, self.alpha0, self.max_step
            ));
        }
        if self.max_ls_iters == 0 {
            return bad("max_ls_iters must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineSearchStatus {
    Accepted,
    FailedMinStep,
    FailedMaxIters,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub f_new: f64,
    /// Number of objective evaluations performed.
    pub trials: usize,
    pub status: LineSearchStatus,
}

impl LineSearchOutcome {
    pub fn accepted(&self) -> bool {
        self.status == LineSearchStatus::Accepted
    }
}

/// `f(x + alpha d) <= f(x) + rho alpha <g, d>`.
pub fn armijo_holds(f_trial: f64, f_x: f64, alpha: f64, slope: f64, rho: f64) -> bool {
    f_trial <= f_x + rho * alpha * slope
}

/// `f(x + alpha d) <= f(x) + rho alpha^2 <d, H d> / 2`.
pub fn armijo2_holds(f_trial: f64, f_x: f64, alpha: f64, dhd: f64, rho: f64) -> bool {
    f_trial <= f_x + 0.5 * rho * alpha * alpha * dhd
}

/// Sufficient decrease condition with its data bound in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decrease {
    /// First-order model with slope `<g, d>`.
    Armijo { f_x: f64, slope: f64, rho: f64 },
    /// Curvature model with `<d, H d>`.
    Curvature { f_x: f64, dhd: f64, rho: f64 },
}

impl Decrease {
    pub fn holds(&self, alpha: f64, f_trial: f64) -> bool {
        match *self {
            Decrease::Armijo { f_x, slope, rho } => armijo_holds(f_trial, f_x, alpha, slope, rho),
            Decrease::Curvature { f_x, dhd, rho } => armijo2_holds(f_trial, f_x, alpha, dhd, rho),
        }
    }
}

/// Tries `alpha0, zeta alpha0, zeta^2 alpha0, ...` and returns the first
/// step satisfying `condition`.
pub fn backtrack<E>(mut evaluate: E, condition: &Decrease, cfg: &LineSearchConfig) -> LineSearchOutcome
where
    E: FnMut(f64) -> f64,
{
    backtrack_from(&mut evaluate, condition, cfg, cfg.alpha0, None)
}

fn backtrack_from<E>(
    evaluate: &mut E,
    condition: &Decrease,
    cfg: &LineSearchConfig,
    mut alpha: f64,
    first: Option<f64>,
) -> LineSearchOutcome
where
    E: FnMut(f64) -> f64,
{
    let mut trials = 0;
    let mut cached = first;
    let mut f_last = f64::NAN;
    loop {
        if alpha < cfg.min_step {
            return LineSearchOutcome {
                alpha,
                f_new: f_last,
                trials,
                status: LineSearchStatus::FailedMinStep,
            };
        }
        if trials >= cfg.max_ls_iters {
            return LineSearchOutcome {
                alpha,
                f_new: f_last,
                trials,
                status: LineSearchStatus::FailedMaxIters,
            };
        }
        let f_trial = cached.take().unwrap_or_else(|| evaluate(alpha));
        trials += 1;
        f_last = f_trial;
        if condition.holds(alpha, f_trial) {
            return LineSearchOutcome {
                alpha,
                f_new: f_trial,
                trials,
                status: LineSearchStatus::Accepted,
            };
        }
        alpha *= cfg.zeta;
    }
}

/// Grows the step by `1 / zeta` while `condition` keeps holding and returns
/// the last step that satisfied it. Falls back to [`backtrack`] when
/// `alpha0` is rejected.
pub fn forward_backward<E>(mut evaluate: E, condition: &Decrease, cfg: &LineSearchConfig) -> LineSearchOutcome
where
    E: FnMut(f64) -> f64,
{
    let alpha0 = cfg.alpha0;
    let f0 = evaluate(alpha0);
    if !condition.holds(alpha0, f0) {
        return backtrack_from(&mut evaluate, condition, cfg, alpha0, Some(f0));
    }
    let mut best = (alpha0, f0);
    let mut trials = 1;
    loop {
        let next = best.0 / cfg.zeta;
        if next > cfg.max_step || trials >= cfg.max_ls_iters {
            break;
        }
        let f_trial = evaluate(next);
        trials += 1;
        if condition.holds(next, f_trial) {
            best = (next, f_trial);
        } else {
            break;
        }
    }
    LineSearchOutcome {
        alpha: best.0,
        f_new: best.1,
        trials,
        status: LineSearchStatus::Accepted,
    }
}
