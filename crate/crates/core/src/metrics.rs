//! Step counters and the report summary.

use serde::{Deserialize, Serialize};

use crate::model::{step_cost, CostParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub timestep: usize,
    pub expansions: usize,
    pub effective_len: usize,
    pub cost: f64,
}

/// Aggregate counters for one run. Only active candidates count as
/// expansions; no-op carry-overs of finalized candidates are free.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub timesteps: usize,
    pub candidate_expansions: usize,
    pub simulated_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_step_trace: Option<Vec<StepRecord>>,
}

impl MetricsReport {
    pub fn new(trace: bool) -> Self {
        Self {
            per_step_trace: trace.then(Vec::new),
            ..Self::default()
        }
    }

    pub fn record_step(&mut self, num_expansions: usize, effective_len: usize, cost: &CostParams) {
        self.timesteps += 1;
        self.candidate_expansions += num_expansions;
        let step = step_cost(num_expansions, effective_len, cost);
        self.simulated_cost += step;
        if let Some(trace) = self.per_step_trace.as_mut() {
            trace.push(StepRecord {
                timestep: self.timesteps,
                expansions: num_expansions,
                effective_len,
                cost: step,
            });
        }
    }

    /// Unrounded expansions per timestep; 0 when no step ran.
    pub fn expansions_per_step(&self) -> f64 {
        if self.timesteps == 0 {
            0.0
        } else {
            self.candidate_expansions as f64 / self.timesteps as f64
        }
    }

    pub fn summarize(&self) -> MetricsSummary {
        let defined = self.timesteps > 0;
        let ratio = if defined {
            format_ratio(self.candidate_expansions, self.timesteps)
        } else {
            "0.0".to_owned()
        };
        MetricsSummary {
            timesteps: self.timesteps,
            candidate_expansions: self.candidate_expansions,
            expansions_per_step: ratio.parse().expect("formatted decimal"),
            expansions_per_step_text: ratio,
            ratio_undefined: !defined,
            simulated_cost: self.simulated_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub timesteps: usize,
    pub candidate_expansions: usize,
    /// Rounded to one decimal, half up.
    pub expansions_per_step: f64,
    pub expansions_per_step_text: String,
    /// Set when no timestep ran and the ratio is reported as 0.
    pub ratio_undefined: bool,
    pub simulated_cost: f64,
}

/// `numerator / denominator` to one decimal, rounding half up, in exact
/// integer arithmetic.
pub fn format_ratio(numerator: usize, denominator: usize) -> String {
    assert!(denominator > 0, "ratio with zero denominator");
    let (num, den) = (numerator as u128, denominator as u128);
    let tenths = (20 * num + den) / (2 * den);
    format!("{}.{}", tenths / 10, tenths % 10)
}
