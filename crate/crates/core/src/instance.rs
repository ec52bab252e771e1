//! Problem data: GAPs, depot, travel times, fleet, horizon, visit patterns
//! and the bin catalogue, together with the text file format used to store
//! them.
//!
//! Node `0` of the travel matrix is the depot; GAP `k` (1-based id) sits at
//! matrix index `k`. Visit days are numbered `1..=horizon_days` in files and
//! in [`VisitCombination::days`]; solver code addresses days 0-based through
//! [`VisitCombination::visits_on`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::preproc::{self, BinCombination};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinType {
    pub id: usize,
    pub purchase_cost: Fixed,
    pub daily_cost: Fixed,
    pub capacity: Fixed,
    pub area: Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub id: usize,
    /// Waste generated per day, m3.
    pub daily_generation: f64,
    /// Time spent emptying the GAP, minutes.
    pub service_time: f64,
    /// Space available for bins, m2.
    pub available_space: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCombination {
    pub id: usize,
    /// Sorted, 1-based day numbers.
    pub days: Vec<usize>,
    pub beta: usize,
}

impl VisitCombination {
    pub fn new(id: usize, days: &[usize], horizon: usize) -> Result<Self> {
        let beta = derive_beta(days, horizon)?;
        let mut days = days.to_vec();
        days.sort_unstable();
        days.dedup();
        Ok(VisitCombination { id, days, beta })
    }

    /// Whether the pattern includes the 0-based day `t`.
    pub fn visits_on(&self, t: usize) -> bool {
        self.days.binary_search(&(t + 1)).is_ok()
    }
}

/// Largest number of days between two consecutive visits when the horizon
/// repeats cyclically. `days` are 1-based day numbers.
pub fn derive_beta(days: &[usize], horizon: usize) -> Result<usize> {
    if days.is_empty() {
        return Err(Error::EmptyVisitDays);
    }
    if let Some(&bad) = days.iter().find(|&&d| d == 0 || d > horizon) {
        return Err(Error::invalid(
            "visits.days",
            format!("day {bad} outside horizon 1..={horizon}"),
        ));
    }
    let mut sorted = days.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let wrap = horizon - sorted[sorted.len() - 1] + sorted[0];
    let inner = sorted.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    Ok(inner.max(wrap))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetParams {
    pub vehicle_capacity: f64,
    pub vehicle_count: usize,
    pub time_limit: f64,
    pub warnings: Vec<String>,
}

fn ceil_tol(value: f64) -> f64 {
    (value - 1e-9).ceil().max(0.0)
}

/// Downsized fleet: `Q = ceil(sum b / 2)`, `|L| = ceil(|I0| / 2)`,
/// `TL = ceil(sum c_ij / 2)`.
pub fn synthesize_fleet_params(gaps: &[Gap], travel: &[Vec<f64>]) -> FleetParams {
    let demand: f64 = gaps.iter().map(|g| g.daily_generation).sum();
    let arcs: f64 = travel
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
        .map(|(_, c)| *c)
        .sum();
    let mut warnings = Vec::new();
    let time_limit = ceil_tol(arcs / 2.0);
    if time_limit == 0.0 {
        warnings.push("all travel times are zero; time limit is 0".to_string());
        log::warn!("{}", warnings[0]);
    }
    FleetParams {
        vehicle_capacity: ceil_tol(demand / 2.0),
        vehicle_count: (gaps.len() + 1).div_ceil(2),
        time_limit,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub gaps: Vec<Gap>,
    /// Minutes, `(|I|+1) x (|I|+1)`, depot at index 0.
    pub travel: Vec<Vec<f64>>,
    pub horizon_days: usize,
    pub vehicle_count: usize,
    pub vehicle_capacity: f64,
    pub time_limit: f64,
    /// Cost per minute of vehicle time.
    pub alpha: f64,
    pub visit_combinations: Vec<VisitCombination>,
    pub bin_types: Vec<BinType>,
    /// Keep only the `k` cheapest Pareto combinations per GAP.
    pub combination_limit: Option<usize>,
}

impl Instance {
    pub fn gap_count(&self) -> usize {
        self.gaps.len()
    }

    /// Matrix index of a GAP position in `gaps`.
    pub fn node(&self, gap_index: usize) -> usize {
        gap_index + 1
    }

    /// Service time of a matrix node; the depot has none.
    pub fn service(&self, node: usize) -> f64 {
        if node == 0 {
            0.0
        } else {
            self.gaps[node - 1].service_time
        }
    }

    /// Time charged for traversing `(i, j)`: travel plus service at the tail.
    pub fn arc_time(&self, i: usize, j: usize) -> f64 {
        self.travel[i][j] + self.service(i)
    }

    /// Volume picked up at a GAP assigned to visit pattern `r`.
    pub fn pickup(&self, gap_index: usize, r: usize) -> f64 {
        self.gaps[gap_index].daily_generation * self.visit_combinations[r].beta as f64
    }

    /// GAP position farthest from the depot; ties go to the lowest index.
    pub fn furthest_gap(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for g in 0..self.gaps.len() {
            let c = self.travel[0][self.node(g)];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((g, c));
            }
        }
        best.map(|(g, _)| g)
    }

    /// Pareto-optimal bin combinations for every GAP, ids by ascending cost.
    pub fn combinations_per_gap(&self) -> Result<Vec<Vec<BinCombination>>> {
        self.gaps
            .iter()
            .map(|gap| {
                let mut front = preproc::preprocess(&self.bin_types, gap.available_space)
                    .map_err(|_| Error::NoBinCombination {
                        gap: gap.id,
                        space: gap.available_space.to_string(),
                    })?;
                if let Some(k) = self.combination_limit {
                    front.truncate(k.max(1));
                }
                Ok(front)
            })
            .collect()
    }

    /// Soft check that the fleet can in principle carry the waste.
    pub fn capacity_warnings(&self) -> Vec<String> {
        let beta_min = self
            .visit_combinations
            .iter()
            .map(|r| r.beta)
            .min()
            .unwrap_or(1) as f64;
        let need: f64 = self.gaps.iter().map(|g| g.daily_generation * beta_min).sum();
        let have = self.vehicle_count as f64 * self.vehicle_capacity * self.horizon_days as f64;
        if need > have + 1e-9 {
            vec![format!(
                "accumulated waste {need:.3} m3 exceeds fleet capacity {have:.3} m3 over the horizon"
            )]
        } else {
            Vec::new()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gaps.len() + 1;
        if self.gaps.is_empty() {
            return Err(Error::invalid("gaps", "at least one GAP is required"));
        }
        for (k, gap) in self.gaps.iter().enumerate() {
            if gap.id != k + 1 {
                return Err(Error::invalid(
                    "gaps.id",
                    format!("expected id {} at position {k}, found {}", k + 1, gap.id),
                ));
            }
            if !(gap.daily_generation >= 0.0) || !gap.daily_generation.is_finite() {
                return Err(Error::invalid("gaps.b", format!("GAP {} must be >= 0", gap.id)));
            }
            if !(gap.service_time >= 0.0) || !gap.service_time.is_finite() {
                return Err(Error::invalid("gaps.s", format!("GAP {} must be >= 0", gap.id)));
            }
        }
        if self.travel.len() != n || self.travel.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(
                "travel",
                format!("matrix must be {n}x{n} (depot plus {} GAPs)", n - 1),
            ));
        }
        for (i, row) in self.travel.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::invalid(
                        "travel",
                        format!("travel must be >= 0 (entry {i},{j} is {c})"),
                    ));
                }
                if i == j && c != 0.0 {
                    return Err(Error::invalid("travel", format!("diagonal entry {i} must be 0")));
                }
            }
        }
        if self.horizon_days == 0 {
            return Err(Error::invalid("meta.horizon_days", "must be >= 1"));
        }
        if self.vehicle_count == 0 {
            return Err(Error::invalid("meta.vehicles", "must be >= 1"));
        }
        if !(self.vehicle_capacity > 0.0) {
            return Err(Error::invalid("meta.vehicle_capacity", "must be > 0"));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::invalid("meta.time_limit", "must be > 0"));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("meta.alpha", "must be >= 0"));
        }
        if self.visit_combinations.is_empty() {
            return Err(Error::invalid("visits", "at least one visit combination is required"));
        }
        for (k, r) in self.visit_combinations.iter().enumerate() {
            if r.id != k {
                return Err(Error::invalid(
                    "visits.id",
                    format!("expected id {k}, found {}", r.id),
                ));
            }
            let beta = derive_beta(&r.days, self.horizon_days)?;
            if beta != r.beta {
                return Err(Error::invalid(
                    "visits.beta",
                    format!("combination {k} declares beta {} but days give {beta}", r.beta),
                ));
            }
        }
        if self.bin_types.is_empty() {
            return Err(Error::invalid("bins", "at least one bin type is required"));
        }
        for (k, b) in self.bin_types.iter().enumerate() {
            if b.id != k {
                return Err(Error::invalid("bins.id", format!("expected id {k}, found {}", b.id)));
            }
            if !b.capacity.is_positive() {
                return Err(Error::invalid("bins.capacity", format!("bin {k} must be > 0")));
            }
            if !b.area.is_positive() {
                return Err(Error::invalid("bins.area", format!("bin {k} must be > 0")));
            }
            if !b.daily_cost.is_positive() {
                return Err(Error::invalid("bins.daily_cost", format!("bin {k} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(source: &str) -> Result<Self> {
        let file: InstanceFile =
            toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_instance()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&InstanceFile::from(self)).expect("instance serializes")
    }
}

/// Loads and validates an instance document.
pub fn load_instance(source: &str) -> Result<Instance> {
    Instance::from_toml_str(source)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaSection {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    horizon_days: usize,
    alpha: f64,
    vehicle_capacity: f64,
    time_limit: f64,
    vehicles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    combination_limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GapRecord {
    id: usize,
    b: f64,
    s: f64,
    space: Fixed,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TravelSection {
    minutes: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisitRecord {
    id: usize,
    days: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BinRecord {
    pub id: usize,
    #[serde(default)]
    pub purchase_cost: Fixed,
    pub daily_cost: Fixed,
    pub capacity: Fixed,
    pub area: Fixed,
}

impl From<BinRecord> for BinType {
    fn from(b: BinRecord) -> Self {
        BinType {
            id: b.id,
            purchase_cost: b.purchase_cost,
            daily_cost: b.daily_cost,
            capacity: b.capacity,
            area: b.area,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    meta: MetaSection,
    bins: Vec<BinRecord>,
    gaps: Vec<GapRecord>,
    travel: TravelSection,
    visits: Vec<VisitRecord>,
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let horizon = self.meta.horizon_days;
        let mut visit_combinations = Vec::with_capacity(self.visits.len());
        for v in self.visits {
            let beta = derive_beta(&v.days, horizon)?;
            if let Some(declared) = v.beta {
                if declared != beta {
                    return Err(Error::invalid(
                        "visits.beta",
                        format!("combination {} declares beta {declared} but days give {beta}", v.id),
                    ));
                }
            }
            let mut days = v.days;
            days.sort_unstable();
            days.dedup();
            visit_combinations.push(VisitCombination { id: v.id, days, beta });
        }
        let instance = Instance {
            name: self.meta.name,
            gaps: self
                .gaps
                .into_iter()
                .map(|g| Gap {
                    id: g.id,
                    daily_generation: g.b,
                    service_time: g.s,
                    available_space: g.space,
                })
                .collect(),
            travel: self.travel.minutes,
            horizon_days: horizon,
            vehicle_count: self.meta.vehicles,
            vehicle_capacity: self.meta.vehicle_capacity,
            time_limit: self.meta.time_limit,
            alpha: self.meta.alpha,
            visit_combinations,
            bin_types: self.bins.into_iter().map(BinType::from).collect(),
            combination_limit: self.meta.combination_limit,
        };
        instance.validate()?;
        Ok(instance)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            meta: MetaSection {
                name: inst.name.clone(),
                horizon_days: inst.horizon_days,
                alpha: inst.alpha,
                vehicle_capacity: inst.vehicle_capacity,
                time_limit: inst.time_limit,
                vehicles: inst.vehicle_count,
                combination_limit: inst.combination_limit,
            },
            bins: inst
                .bin_types
                .iter()
                .map(|b| BinRecord {
                    id: b.id,
                    purchase_cost: b.purchase_cost,
                    daily_cost: b.daily_cost,
                    capacity: b.capacity,
                    area: b.area,
                })
                .collect(),
            gaps: inst
                .gaps
                .iter()
                .map(|g| GapRecord {
                    id: g.id,
                    b: g.daily_generation,
                    s: g.service_time,
                    space: g.available_space,
                })
                .collect(),
            travel: TravelSection {
                minutes: inst.travel.clone(),
            },
            visits: inst
                .visit_combinations
                .iter()
                .map(|r| VisitRecord {
                    id: r.id,
                    days: r.days.clone(),
                    beta: Some(r.beta),
                })
                .collect(),
        }
    }
}

/// Bin catalogue document: a `[[bins]]` array, as found in instance files.
pub fn load_bin_types(source: &str) -> Result<Vec<BinType>> {
    #[derive(Deserialize)]
    struct BinsOnly {
        bins: Vec<BinRecord>,
    }
    let parsed: BinsOnly = toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    let bins: Vec<BinType> = parsed.bins.into_iter().map(BinType::from).collect();
    for (k, b) in bins.iter().enumerate() {
        if b.id != k {
            return Err(Error::invalid("bins.id", format!("expected id {k}, found {}", b.id)));
        }
        if !b.capacity.is_positive() || !b.area.is_positive() || !b.daily_cost.is_positive() {
            return Err(Error::invalid(
                "bins",
                format!("bin {k}: capacity, area and daily_cost must be > 0"),
            ));
        }
    }
    Ok(bins)
}

/// Bin types I, II and III from the Bahia Blanca study.
pub fn reference_bin_types() -> Vec<BinType> {
    let row = |id, purchase: f64, daily: f64, cap: f64, area: f64| BinType {
        id,
        purchase_cost: Fixed::from_f64(purchase),
        daily_cost: Fixed::from_f64(daily),
        capacity: Fixed::from_f64(cap),
        area: Fixed::from_f64(area),
    };
    vec![
        row(0, 386.80, 0.1113, 1.1, 1.42),
        row(1, 1102.79, 0.3172, 2.4, 2.23),
        row(2, 1287.24, 0.3703, 3.2, 2.60),
    ]
}
