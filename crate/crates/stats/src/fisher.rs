//! Comparing two correlations with Fisher's z transformation.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::StatsError;

/// Two-sided standard-normal tail probability `P(|N(0,1)| >= |z|)`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherComparison {
    pub z: f64,
    pub p_two_sided: f64,
}

/// `Z = |atanh(ρ₁) − atanh(ρ₂)| / sqrt(2 / (n − 3))` and its two-sided p-value.
pub fn fisher_z_compare(rho_1: f64, rho_2: f64, n: usize) -> Result<FisherComparison, StatsError> {
    for r in [rho_1, rho_2] {
        if !(r.abs() < 1.0) {
            return Err(StatsError::InvalidRho(r));
        }
    }
    if n < 4 {
        return Err(StatsError::SampleTooSmall(n));
    }
    let se = (2.0 / (n as f64 - 3.0)).sqrt();
    let z = (rho_1.atanh() - rho_2.atanh()).abs() / se;
    Ok(FisherComparison {
        z,
        p_two_sided: normal_two_sided_p(z),
    })
}

/// Smallest p-value comparing `method_rho` with each expert-pair correlation.
pub fn min_pairwise_pvalue(expert_rhos: &[f64], method_rho: f64, n: usize) -> Result<f64, StatsError> {
    if expert_rhos.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    expert_rhos
        .iter()
        .map(|&r| fisher_z_compare(method_rho, r, n).map(|c| c.p_two_sided))
        .try_fold(1.0f64, |acc, p| p.map(|p| acc.min(p)))
}
