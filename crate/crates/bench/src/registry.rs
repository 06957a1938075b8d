use std::sync::Arc;

use newton_mr_core::problems::{analytic_suite, regularized_nlls, synthetic_dataset};
use newton_mr_core::Problem;

use crate::BenchError;

pub const NLLS_LAMBDA: f64 = 1e-6;
pub const NLLS_DEFAULT: (usize, usize) = (1000, 50);

/// `nlls` or `nlls-n{n}-d{d}`, built from seed-0 synthetic data.
fn nlls_by_name(name: &str) -> Option<Result<Arc<dyn Problem>, BenchError>> {
    let (n, d) = if name == "nlls" {
        NLLS_DEFAULT
    } else {
        let rest = name.strip_prefix("nlls-n")?;
        let (n, d) = rest.split_once("-d")?;
        (n.parse().ok()?, d.parse().ok()?)
    };
    Some((|| {
        let data = synthetic_dataset(n, d, 0)?;
        let p = regularized_nlls(data, NLLS_LAMBDA)?.with_name(name);
        Ok(Arc::new(p) as Arc<dyn Problem>)
    })())
}

pub fn problem_by_name(name: &str) -> Result<Arc<dyn Problem>, BenchError> {
    if let Some(p) = analytic_suite().into_iter().find(|p| p.name() == name) {
        return Ok(p);
    }
    nlls_by_name(name).unwrap_or_else(|| Err(BenchError::Parse(format!("unknown problem {name:?}"))))
}

pub fn problem_names() -> Vec<String> {
    let mut names: Vec<String> = analytic_suite().iter().map(|p| p.name().to_string()).collect();
    names.push("nlls".into());
    names.push("nlls-n{N}-d{D}".into());
    names
}
