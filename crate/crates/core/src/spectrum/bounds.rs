//! Worst-case iteration counts for the two exits of the Krylov solver and
//! for the randomized curvature probe.
//!
//! All logarithms are natural.

use statrs::function::gamma::ln_gamma;

use super::{Sign, SpectrumReport};
use crate::error::CoreError;

/// Spectral constants feeding the iteration bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// Bound on the relevant curvature magnitude.
    pub l_g: f64,
    /// Lower bound on the magnitude of the eigenvalues the relevant mass
    /// sits on.
    pub mu: f64,
    /// Fraction of the nonzero relevant mass carried by those eigenvalues.
    pub nu: f64,
    pub grade: usize,
}

impl BoundInputs {
    pub fn new(l_g: f64, mu: f64, nu: f64, grade: usize) -> Result<Self, CoreError> {
        if !(l_g > 0.0 && mu > 0.0 && nu > 0.0 && nu <= 1.0) || grade == 0 {
            return Err(CoreError::InvalidConfig(format!(
                "bound inputs need l_g, mu > 0, 0 < nu <= 1, grade >= 1; got ({l_g}, {mu}, {nu}, {grade})"
            )));
        }
        Ok(Self { l_g, mu, nu, grade })
    }

    /// Constants for the solution exit, taking the `top` largest positive
    /// and the negatives from 1-based position `from_negative` onward.
    /// `None` picks every positive and every negative, which gives
    /// `nu = 1`.
    pub fn for_solution(
        report: &SpectrumReport,
        top: Option<usize>,
        from_negative: Option<usize>,
    ) -> Result<Self, CoreError> {
        let l_g = report.relevant_norm();
        let total = report.nonzero_mass();
        let first_neg = report.psi_plus + report.psi_zero + 1;
        let pos = (report.psi_plus >= 1).then(|| top.unwrap_or(report.psi_plus));
        let neg = (report.psi_minus >= 1).then(|| from_negative.unwrap_or(first_neg));
        if let Some(i) = pos {
            if i == 0 || i > report.psi_plus {
                return Err(CoreError::InvalidConfig(format!("positive index {i} out of range")));
            }
        }
        if let Some(j) = neg {
            if j < first_neg || j > report.grade {
                return Err(CoreError::InvalidConfig(format!("negative index {j} out of range")));
            }
        }
        let (mu, mass) = match (pos, neg) {
            (Some(i), Some(j)) => {
                let mu = report.at(i).unwrap().lambda.min(-report.at(j).unwrap().lambda);
                (mu, report.mass(1..=i) + report.mass(j..=report.grade))
            }
            (Some(i), None) => (report.at(i).unwrap().lambda, report.mass(1..=i)),
            (None, Some(j)) => (-report.at(j).unwrap().lambda, report.mass(j..=report.grade)),
            (None, None) => return Err(CoreError::MissingEigenvalue("nonzero")),
        };
        Self::new(l_g, mu, (mass / total).min(1.0), report.grade)
    }

    /// Constants for the curvature exit using the negatives from 1-based
    /// position `from_negative` onward (default: all of them).
    pub fn for_npc(report: &SpectrumReport, from_negative: Option<usize>) -> Result<Self, CoreError> {
        if report.psi_minus == 0 {
            return Err(CoreError::MissingEigenvalue("negative"));
        }
        let first_neg = report.psi_plus + report.psi_zero + 1;
        let j = from_negative.unwrap_or(first_neg);
        if j < first_neg || j > report.grade {
            return Err(CoreError::InvalidConfig(format!("negative index {j} out of range")));
        }
        let mu = -report.at(j).unwrap().lambda;
        let nu = (report.mass(j..=report.grade) / report.nonzero_mass()).min(1.0);
        Self::new(report.relevant_norm(), mu, nu, report.grade)
    }
}

fn ceil_count(x: f64) -> usize {
    if x.is_nan() || x <= 0.0 {
        0
    } else {
        x.ceil() as usize
    }
}

/// Iterations after which the inexactness test with tolerance `eta` must
/// have fired.
pub fn bound_t_s(inp: &BoundInputs, eta: f64) -> Result<usize, CoreError> {
    if !(eta > 0.0) {
        return Err(CoreError::InvalidConfig(format!("eta must be positive, got {eta}")));
    }
    let gap = eta * eta / (inp.l_g * inp.l_g + eta * eta) - (1.0 - inp.nu);
    if !(gap > 0.0) {
        return Err(CoreError::InfeasibleBound("eta too small for nu".into()));
    }
    let x = (inp.l_g / inp.mu).sqrt() / 4.0 * (4.0 / gap).ln() + 1.0;
    Ok(ceil_count(x).max(1).min(inp.grade))
}

/// Iterations after which the curvature test must have fired, for inputs
/// describing negative relevant eigenvalues.
pub fn bound_t_n(inp: &BoundInputs) -> usize {
    let (l, mu, nu) = (inp.l_g, inp.mu, inp.nu);
    let x = (2.0 * (l + mu) / mu).sqrt() / 4.0 * (2.0 * (l + mu) * (1.0 - nu) / (mu * nu)).ln() + 1.0;
    ceil_count(x).max(1).min(inp.grade)
}

/// Upper bound on `zeta_t - lambda_j`, where `zeta_t` is the smallest
/// Lanczos Ritz value after `t` steps and `j` a 1-based position among the
/// negative relevant eigenvalues.
pub fn lanczos_eig_gap_bound(report: &SpectrumReport, j: usize, t: usize) -> Result<f64, CoreError> {
    if report.psi_plus == 0 {
        return Err(CoreError::MissingEigenvalue("positive"));
    }
    if report.psi_minus == 0 {
        return Err(CoreError::MissingEigenvalue("negative"));
    }
    let first_neg = report.psi_plus + report.psi_zero + 1;
    if j < first_neg || j > report.grade || t == 0 {
        return Err(CoreError::InvalidConfig(format!("need {first_neg} <= j <= {} and t >= 1", report.grade)));
    }
    let l1 = report.at(1).unwrap().lambda;
    let lj = report.at(j).unwrap().lambda;
    debug_assert_eq!(report.at(j).unwrap().sign, Sign::Negative);
    let kappa = l1 / -lj;
    let nu = (report.mass(j..=report.grade) / report.nonzero_mass()).min(1.0);
    let root = (kappa + 1.0).sqrt();
    let rate = (root - 1.0) / (root + 1.0);
    Ok(4.0 * (1.0 - nu) / nu * (l1 - lj) * rate.powi(2 * (t as i32 - 1)))
}

/// Iterations for the randomized probe to expose curvature below `-eps_h`
/// with probability `1 - delta`.
pub fn bound_t_nl(l_g: f64, eps_h: f64, delta: f64, d: usize) -> Result<usize, CoreError> {
    if !(delta > 0.0 && delta < 1.0) || !(eps_h > 0.0) || !(l_g > 0.0) || d == 0 {
        return Err(CoreError::InvalidConfig("need l_g, eps_h > 0, 0 < delta < 1, d >= 1".into()));
    }
    let x = (l_g / eps_h).sqrt() / 2.0 * (2.75 * d as f64 / (delta * delta)).ln() + 1.0;
    Ok(ceil_count(x).min(d))
}

/// Ratio `Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2))` governing the squared
/// projection of a uniform unit vector onto a fixed direction.
pub fn sphere_projection_constant(d: usize) -> f64 {
    let d = d as f64;
    (ln_gamma(d / 2.0) - ln_gamma((d - 1.0) / 2.0)).exp() / std::f64::consts::PI.sqrt()
}

/// Probe iterations under a benign-saddle curvature `-mu`, holding with
/// probability `1 - delta`.
pub fn bound_t_p(l_g: f64, mu: f64, eps_h: f64, delta: f64, d: usize) -> Result<usize, CoreError> {
    if !(0.5 * eps_h < mu) || !(eps_h > 0.0) {
        return Err(CoreError::InvalidConfig(format!("need 0 < eps_h / 2 < mu, got eps_h = {eps_h}, mu = {mu}")));
    }
    if !(delta > 0.0 && delta < 1.0) || d < 3 {
        return Err(CoreError::InvalidConfig("need 0 < delta < 1 and d >= 3".into()));
    }
    let c = sphere_projection_constant(d);
    let ratio = (l_g + mu) / (mu - 0.5 * eps_h);
    let x = 0.25 * ratio.sqrt() * (4.0 * ratio * (4.0 * c * c / (delta * delta) - 1.0)).ln() + 1.0;
    Ok(ceil_count(x).max(3).min(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseSymmetricMatrix, Vector};
    use crate::spectrum::{g_relevant_spectrum, SpectrumConfig};

    fn report(eigs: &[f64], g: &[f64]) -> SpectrumReport {
        g_relevant_spectrum(
            &DenseSymmetricMatrix::from_diagonal(eigs),
            &Vector::from_column_slice(g),
            &SpectrumConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn solution_bound_closed_forms() {
        let inp = BoundInputs::new(2.0, 2.0, 1.0, 50).unwrap();
        // argument 4 / (1/2) = 8
        assert_eq!(bound_t_s(&inp, 2.0).unwrap(), 2);
        let limit = ((0.25 * 4f64.ln()).ceil() as usize) + 1;
        assert_eq!(bound_t_s(&inp, 1e12).unwrap(), limit);
        let capped = BoundInputs::new(1e6, 1.0, 1.0, 3).unwrap();
        assert_eq!(bound_t_s(&capped, 0.1).unwrap(), 3);
    }

    #[test]
    fn solution_bound_infeasible() {
        let inp = BoundInputs::new(1.0, 1.0, 0.5, 10).unwrap();
        assert!(matches!(bound_t_s(&inp, 0.1), Err(CoreError::InfeasibleBound(_))));
        assert!(bound_t_s(&inp, 0.0).is_err());
    }

    #[test]
    fn npc_bound_closed_forms() {
        assert_eq!(bound_t_n(&BoundInputs::new(5.0, 1.0, 1.0, 9).unwrap()), 1);
        // l_g = mu, nu = 1/2: ceil(ln 4 / 2 + 1) = 2
        assert_eq!(bound_t_n(&BoundInputs::new(1.0, 1.0, 0.5, 9).unwrap()), 2);
        assert_eq!(bound_t_n(&BoundInputs::new(1.0, 1.0, 0.5, 1).unwrap()), 1);
    }

    #[test]
    fn gap_bound_edge_cases() {
        let r = report(&[4.0, -1.0], &[1.0, 1.0]);
        // t = 1 leaves the prefactor: 4 (1/2)/(1/2) (4 + 1) = 20
        assert!((lanczos_eig_gap_bound(&r, 2, 1).unwrap() - 20.0).abs() < 1e-12);
        let r = report(&[4.0, -1.0], &[1e-3, 1.0]);
        assert!(lanczos_eig_gap_bound(&r, 2, 3).unwrap() < lanczos_eig_gap_bound(&r, 2, 2).unwrap());
        assert!(lanczos_eig_gap_bound(&r, 1, 1).is_err());
        let pos_only = report(&[4.0, 1.0], &[1.0, 1.0]);
        assert!(lanczos_eig_gap_bound(&pos_only, 2, 1).is_err());
    }

    #[test]
    fn gap_bound_vanishes_as_mass_concentrates_on_negatives() {
        // weight 1e-8 on the positive eigenvalue: 4 (1e-8) (5) to first order
        let r = report(&[4.0, -1.0], &[1e-4, 1.0]);
        let b = lanczos_eig_gap_bound(&r, 2, 1).unwrap();
        assert!((b - 2e-7).abs() < 1e-12);
        let only_neg = report(&[-1.0, -2.0], &[1.0, 1.0]);
        assert!(lanczos_eig_gap_bound(&only_neg, 1, 1).is_err());
    }

    #[test]
    fn probe_bounds() {
        assert_eq!(bound_t_nl(1.0, 1e-6, 0.05, 3).unwrap(), 3);
        let x = (1.0f64 / 0.5).sqrt() / 2.0 * (2.75 * 100.0 / 0.0025f64).ln() + 1.0;
        assert_eq!(bound_t_nl(1.0, 0.5, 0.05, 100).unwrap(), x.ceil() as usize);
        assert!(bound_t_nl(1.0, 0.5, 1.0, 10).is_err());
        assert!(bound_t_p(1.0, 0.1, 0.2, 0.05, 10).is_err());
        assert!(bound_t_p(1.0, 1.0, 0.2, 0.05, 2).is_err());
        let v = bound_t_p(10.0, 1.0, 0.1, 0.05, 1000).unwrap();
        assert!((3..=1000).contains(&v));
    }

    #[test]
    fn sphere_constant() {
        assert!((sphere_projection_constant(3) - 0.5).abs() < 1e-14);
        // Stirling series for the Gamma ratio at d = 100
        let d = 100.0f64;
        let z = (d - 1.0) / 2.0;
        let ratio = z.sqrt() * (1.0 - 1.0 / (8.0 * z) + 1.0 / (128.0 * z * z));
        let expected = ratio / std::f64::consts::PI.sqrt();
        assert!((sphere_projection_constant(100) - expected).abs() < 1e-6);
        assert!((sphere_projection_constant(100) - (d / (2.0 * std::f64::consts::PI)).sqrt()).abs() < 0.05);
    }

    #[test]
    fn default_indices_give_full_mass() {
        let r = report(&[5.0, 2.0, 0.0, -1.0, -3.0], &[1.0, 2.0, 1.0, 0.5, 1.0]);
        let s = BoundInputs::for_solution(&r, None, None).unwrap();
        assert_eq!(s.nu, 1.0);
        assert_eq!(s.mu, 1.0);
        assert_eq!(s.l_g, 5.0);
        assert_eq!(s.grade, 5);
        let n = BoundInputs::for_npc(&r, None).unwrap();
        assert_eq!(n.mu, 1.0);
        assert!((n.nu - 1.25 / 6.25).abs() < 1e-15);
        let n5 = BoundInputs::for_npc(&r, Some(5)).unwrap();
        assert_eq!(n5.mu, 3.0);
        assert!(BoundInputs::for_npc(&r, Some(2)).is_err());
    }
}
