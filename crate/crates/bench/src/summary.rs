use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use cosparse::metrics::boxplot_stats;
use cosparse::BoxplotSummary;

use crate::error::{BenchError, Result};
use crate::runner::RunRecord;
use crate::spec::Algorithm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKey {
    Cr,
    Algorithm,
    Channel,
}

impl FromStr for GroupKey {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cr" => Ok(GroupKey::Cr),
            "algorithm" => Ok(GroupKey::Algorithm),
            "channel" => Ok(GroupKey::Channel),
            other => Err(BenchError::Config(format!("unknown group key '{other}' (cr, algorithm, channel)"))),
        }
    }
}

impl GroupKey {
    /// Parses a comma-separated key list such as `cr,algorithm`.
    pub fn parse_list(s: &str) -> Result<Vec<GroupKey>> {
        let keys = s.split(',').map(str::parse).collect::<Result<Vec<_>>>()?;
        if keys.is_empty() {
            return Err(BenchError::Config("empty group-by list".into()));
        }
        Ok(keys)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Prd,
    Iterations,
    WallTime,
    SolveCount,
}

impl Metric {
    pub fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Prd => r.prd,
            Metric::Iterations => r.iterations as f64,
            Metric::WallTime => r.wall_time,
            Metric::SolveCount => r.solve_count as f64,
        }
    }
}

impl FromStr for Metric {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "prd" => Ok(Metric::Prd),
            "iterations" => Ok(Metric::Iterations),
            "wall_time" => Ok(Metric::WallTime),
            "solve_count" => Ok(Metric::SolveCount),
            other => Err(BenchError::Config(format!(
                "unknown metric '{other}' (prd, iterations, wall_time, solve_count)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    /// Label such as `cr=0.5;algorithm=sgap`; never contains a comma.
    pub group: String,
    pub summary: BoxplotSummary,
}

// Orders groups numerically by ratio, then by algorithm and channel.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
enum Part {
    Cr(f64),
    Algorithm(Algorithm),
    Channel(usize),
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Part::Cr(v) => write!(f, "cr={v}"),
            Part::Algorithm(a) => write!(f, "algorithm={a}"),
            Part::Channel(c) => write!(f, "channel={c}"),
        }
    }
}

/// One boxplot row per distinct group, in ascending group order.
pub fn summarize(records: &[RunRecord], group_by: &[GroupKey], metric: Metric) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(BenchError::Config("no records to summarize".into()));
    }
    let mut groups: Vec<(Vec<Part>, Vec<f64>)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        let key: Vec<Part> = group_by
            .iter()
            .map(|k| match k {
                GroupKey::Cr => Part::Cr(r.cr),
                GroupKey::Algorithm => Part::Algorithm(r.algorithm),
                GroupKey::Channel => Part::Channel(r.channel),
            })
            .collect();
        let label = label(&key);
        let slot = *index.entry(label).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(metric.of(r));
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut out = Vec::with_capacity(groups.len());
    for (key, values) in groups {
        match boxplot_stats(&values) {
            Ok(summary) => out.push(GroupSummary { group: label(&key), summary }),
            Err(e) => log::warn!("group {} omitted: {e}", label(&key)),
        }
    }
    Ok(out)
}

fn label(parts: &[Part]) -> String {
    if parts.is_empty() {
        return "all".into();
    }
    parts.iter().map(Part::to_string).collect::<Vec<_>>().join(";")
}
