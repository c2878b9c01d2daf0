use serde::{Deserialize, Serialize};

/// One metric from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: String,
    pub value: f64,
    pub config_hash: String,
    pub seed: u64,
}

/// Mean and sample standard deviation of one metric across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub seeds: Vec<u64>,
}

pub fn summarize(records: &[MetricRecord]) -> Vec<MetricSummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.metric.as_str()) {
            names.push(&r.metric);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let group: Vec<&MetricRecord> = records.iter().filter(|r| r.metric == name).collect();
            let n = group.len();
            let mean = group.iter().map(|r| r.value).sum::<f64>() / n as f64;
            let std = if n > 1 {
                (group.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            MetricSummary { metric: name.to_string(), mean, std, n, seeds: group.iter().map(|r| r.seed).collect() }
        })
        .collect()
}
