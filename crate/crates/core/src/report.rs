//! Solutions and solve reports, with their TOML file form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bb::{BbOptions, BbStats};
use crate::error::{Error, Result};

/// One vehicle tour on one day. `stops` are matrix node indices of the GAPs
/// in visiting order; the depot is implicit at both ends.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Route {
    pub vehicle: usize,
    /// 1-based.
    pub day: usize,
    pub stops: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub objective: f64,
    pub routing_cost: f64,
    pub bin_cost: f64,
    /// Visit combination id per GAP.
    pub visits: Vec<usize>,
    /// Bin combination id per GAP.
    pub bins: Vec<usize>,
    pub routes: Vec<Route>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Stopped by a node or time budget.
    Dnf,
}

impl SolveStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Optimal => 0,
            SolveStatus::Infeasible => 1,
            SolveStatus::Dnf => 2,
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Dnf => "dnf",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mip,
    Benders,
}

/// Solver configuration; spelled `mip`, `mip+vis`, `benders+vis+lshaped` and
/// so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    pub method: Method,
    pub vis: bool,
    pub partial: bool,
    pub lshaped: bool,
}

impl MethodSpec {
    pub fn mip(vis: bool) -> Self {
        MethodSpec {
            method: Method::Mip,
            vis,
            partial: false,
            lshaped: false,
        }
    }

    pub fn benders(vis: bool, partial: bool, lshaped: bool) -> Self {
        MethodSpec {
            method: Method::Benders,
            vis,
            partial,
            lshaped,
        }
    }

    /// The ten configurations: two MIP and eight Benders variants.
    pub fn all() -> Vec<MethodSpec> {
        let mut out = vec![MethodSpec::mip(false), MethodSpec::mip(true)];
        for mask in 0..8 {
            out.push(MethodSpec::benders(mask & 1 != 0, mask & 2 != 0, mask & 4 != 0));
        }
        out
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.method {
            Method::Mip => "mip",
            Method::Benders => "benders",
        })?;
        if self.vis {
            f.write_str("+vis")?;
        }
        if self.lshaped {
            f.write_str("+lshaped")?;
        }
        if self.partial {
            f.write_str("+partial")?;
        }
        Ok(())
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('+');
        let method = match parts.next() {
            Some("mip") => Method::Mip,
            Some("benders") | Some("bd") => Method::Benders,
            _ => return Err(Error::invalid("method", format!("unknown method '{s}'"))),
        };
        let mut spec = MethodSpec {
            method,
            vis: false,
            partial: false,
            lshaped: false,
        };
        for flag in parts {
            match flag {
                "vis" => spec.vis = true,
                "partial" if method == Method::Benders => spec.partial = true,
                "lshaped" if method == Method::Benders => spec.lshaped = true,
                _ => return Err(Error::invalid("method", format!("unknown option '{flag}' in '{s}'"))),
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub bb: BbOptions,
}

/// One integer master candidate seen by the decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub node: u64,
    /// Visit combination per GAP of the candidate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub visits: Vec<usize>,
    /// Master objective without the subproblem estimate.
    pub routing: f64,
    pub master_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_lp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heuristic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integer: Option<f64>,
    pub cuts: Vec<String>,
    pub outcome: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub nodes: u64,
    pub master_iterations: u64,
    pub post_processing_iterations: u64,
    pub lp_solves: u64,
    pub open_solutions: u64,
    pub cuts: BTreeMap<String, u64>,
}

impl ReportStats {
    pub fn from_bb(stats: &BbStats) -> Self {
        ReportStats {
            nodes: stats.nodes,
            master_iterations: stats.master_iterations,
            post_processing_iterations: stats.post_processing_iterations,
            lp_solves: stats.lp_solves,
            open_solutions: 0,
            cuts: stats.cuts.iter().map(|(k, v)| (k.name().to_string(), *v)).collect(),
        }
    }

    pub fn cut_total(&self) -> u64 {
        self.cuts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub method: String,
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<Solution>,
    pub stats: ReportStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml_str(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for spec in MethodSpec::all() {
            let text = spec.to_string();
            assert_eq!(text.parse::<MethodSpec>().unwrap(), spec, "{text}");
        }
        assert!("mip+lshaped".parse::<MethodSpec>().is_err());
        assert!("cplex".parse::<MethodSpec>().is_err());
    }

    #[test]
    fn report_round_trips() {
        let report = SolveReport {
            instance: "toy".into(),
            method: "benders+vis".into(),
            status: SolveStatus::Optimal,
            solution: Some(Solution {
                objective: 11.22,
                routing_cost: 11.0,
                bin_cost: 0.22,
                visits: vec![1],
                bins: vec![1],
                routes: vec![Route { vehicle: 0, day: 1, stops: vec![1] }],
            }),
            stats: ReportStats {
                nodes: 3,
                cuts: [("optimality".to_string(), 2)].into_iter().collect(),
                ..Default::default()
            },
            trace: vec![TraceRow {
                iteration: 1,
                node: 0,
                visits: vec![1],
                routing: 11.0,
                master_estimate: 11.11,
                sub_lp: Some(0.2),
                heuristic: Some(0.22),
                integer: None,
                cuts: vec!["optimality".into()],
                outcome: "open".into(),
            }],
        };
        let text = report.to_toml_string();
        assert_eq!(SolveReport::from_toml_str(&text).unwrap(), report);
    }
}
