use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::scenario::{ResourceId, ResourceKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResourceKpi<T: Real> {
    pub resource: ResourceId,
    pub kind: ResourceKind,
    pub tasks: usize,
    pub violations: usize,
    /// Mean end-to-end delay of tasks processed here; zero when idle.
    pub mean_delay: T,
}

/// End-of-run indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KpiReport<T: Real> {
    pub task_count: usize,
    pub min_remaining_fraction: T,
    /// Mean end-to-end delay in seconds; zero for an empty run.
    pub mean_delay: T,
    pub violation_count: usize,
    /// Set when the run had no tasks and `mean_delay` is a placeholder.
    pub empty: bool,
    pub per_resource: Vec<ResourceKpi<T>>,
    pub remaining_fraction: Vec<T>,
    pub remaining_energy: Vec<T>,
}

impl<T: Real> KpiReport<T> {
    /// Column names of [`KpiReport::csv_row`] for `resources` resources, of
    /// which the first `abs_count` are ABSs.
    pub fn csv_header(resources: usize, abs_count: usize) -> Vec<String> {
        let mut cols: Vec<String> = ["policy", "seed", "min_remaining_fraction", "mean_delay_s", "violations"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for r in 0..resources {
            cols.push(format!("tasks_r{r}"));
            cols.push(format!("violations_r{r}"));
            cols.push(format!("mean_delay_r{r}"));
        }
        for j in 0..abs_count {
            cols.push(format!("remaining_fraction_r{j}"));
        }
        cols
    }

    pub fn csv_row(&self, policy: &str, seed: &str) -> Vec<String> {
        let mut row = vec![
            policy.to_string(),
            seed.to_string(),
            format!("{:.6}", self.min_remaining_fraction.as_f64()),
            format!("{:.6}", self.mean_delay.as_f64()),
            self.violation_count.to_string(),
        ];
        for r in &self.per_resource {
            row.push(r.tasks.to_string());
            row.push(r.violations.to_string());
            row.push(format!("{:.6}", r.mean_delay.as_f64()));
        }
        for f in &self.remaining_fraction {
            row.push(format!("{:.6}", f.as_f64()));
        }
        row
    }
}
