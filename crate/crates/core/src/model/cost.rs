use serde::{Deserialize, Serialize};

/// Affine per-expansion cost in the effective (padded) sequence length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Fixed cost per candidate expansion.
    pub c0: f64,
    /// Cost per unit of effective length per expansion.
    pub c1: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c0 >= 0.0 && self.c1 >= 0.0 && self.c0.is_finite() && self.c1.is_finite()) {
            return Err(format!("cost coefficients must be finite and non-negative, got c0={} c1={}", self.c0, self.c1));
        }
        if self.c0 + self.c1 <= 0.0 {
            return Err("c0 + c1 must be positive".to_owned());
        }
        Ok(())
    }
}

/// Simulated cost of one timestep: `num_expansions * (c0 + c1 * effective_len)`.
///
/// `effective_len` is the largest `l_t` among the selected beams, since every
/// selected beam is padded to it.
pub fn step_cost(num_expansions: usize, effective_len: usize, params: &CostParams) -> f64 {
    if num_expansions == 0 {
        return 0.0;
    }
    num_expansions as f64 * (params.c0 + params.c1 * effective_len as f64)
}
