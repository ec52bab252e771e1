//! Seeded instance generators: desk-scale random instances for equivalence
//! testing, a fixed two-GAP fixture, and 5-GAP instances in the shape
//! `zone/|I|/|T|/k` of the published benchmark.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::instance::{reference_bin_types, synthesize_fleet_params, Gap, Instance, VisitCombination};

pub const SERVICE_MINUTES: f64 = 1.28;
pub const ALPHA_PER_MINUTE: f64 = 0.5764;

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Visit patterns used with 2- and 4-day horizons.
pub fn standard_patterns(horizon: usize) -> Result<Vec<VisitCombination>> {
    let sets: Vec<Vec<usize>> = match horizon {
        2 => vec![vec![1, 2], vec![1], vec![2]],
        4 => vec![vec![1, 2, 3, 4], vec![1, 3], vec![2, 4]],
        _ => (1..=horizon).map(|d| vec![d]).chain(std::iter::once((1..=horizon).collect())).collect(),
    };
    sets.iter()
        .enumerate()
        .map(|(k, days)| VisitCombination::new(k, days, horizon))
        .collect()
}

fn random_travel(rng: &mut ChaCha8Rng, nodes: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..nodes)
        .map(|i| {
            (0..nodes)
                .map(|j| if i == j { 0.0 } else { round_to(rng.random_range(lo..hi), 0.1) })
                .collect()
        })
        .collect()
}

fn gaps(rng: &mut ChaCha8Rng, count: usize, lo: f64, hi: f64) -> Vec<Gap> {
    (0..count)
        .map(|k| Gap {
            id: k + 1,
            daily_generation: round_to(rng.random_range(lo..hi), 0.01),
            service_time: SERVICE_MINUTES,
            available_space: Fixed::from_f64(5.0),
        })
        .collect()
}

/// Random instance small enough for the brute-force oracle: `gap_count`
/// GAPs, two days, two vehicles.
pub fn oracle_instance(seed: u64, gap_count: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = gaps(&mut rng, gap_count, 0.5, 1.6);
    let travel = random_travel(&mut rng, gap_count + 1, 1.0, 8.0);
    let total: f64 = gaps.iter().map(|g| g.daily_generation).sum();
    let vehicle_capacity = (total * rng.random_range(0.8..1.6)).ceil().max(2.0);
    let tour: f64 = (1..=gap_count)
        .map(|i| travel[0][i] + travel[i][0] + SERVICE_MINUTES)
        .fold(0.0, f64::max);
    let time_limit = (tour * rng.random_range(1.1..2.2)).ceil();
    Instance {
        name: format!("oracle-{gap_count}-{seed}"),
        gaps,
        travel,
        horizon_days: 2,
        vehicle_count: 2,
        vehicle_capacity,
        time_limit,
        alpha: ALPHA_PER_MINUTE,
        visit_combinations: standard_patterns(2).expect("two-day patterns"),
        bin_types: reference_bin_types(),
        combination_limit: None,
    }
}

/// Two GAPs, two days, two vehicles, fixed data. Visiting once per horizon
/// is cheapest for routing, and the resulting bin demands fall strictly
/// inside the cost envelope, so the LP bound of the allocation is loose.
pub fn toy_instance() -> Instance {
    Instance {
        name: "toy".into(),
        gaps: vec![
            Gap {
                id: 1,
                daily_generation: 0.825,
                service_time: SERVICE_MINUTES,
                available_space: Fixed::from_f64(5.0),
            },
            Gap {
                id: 2,
                daily_generation: 1.15,
                service_time: SERVICE_MINUTES,
                available_space: Fixed::from_f64(5.0),
            },
        ],
        travel: vec![
            vec![0.0, 6.5, 4.2],
            vec![6.1, 0.0, 3.3],
            vec![4.8, 2.9, 0.0],
        ],
        horizon_days: 2,
        vehicle_count: 2,
        vehicle_capacity: 4.0,
        time_limit: 20.0,
        alpha: ALPHA_PER_MINUTE,
        visit_combinations: standard_patterns(2).expect("two-day patterns"),
        bin_types: reference_bin_types(),
        combination_limit: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    University,
    Downtown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub zone: Zone,
    pub gaps: usize,
    pub days: usize,
    pub index: Option<usize>,
}

impl Shape {
    /// Bin combinations kept per GAP: two, except the later 4-day rows.
    pub fn combinations(&self) -> usize {
        match self.index {
            Some(k) if self.days == 4 && k > 2 => 8,
            _ => 2,
        }
    }
}

/// Parses `<zone>/<gaps>/<days>` with an optional `/<index>`; zone is `U`
/// (university, wider spread) or `D` (downtown).
pub fn parse_shape(shape: &str) -> Result<Shape> {
    let bad = || Error::invalid("shape", format!("expected U|D/<gaps>/<days>[/<k>], got '{shape}'"));
    let parts: Vec<&str> = shape.split('/').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad());
    }
    let zone = match parts[0] {
        "U" => Zone::University,
        "D" => Zone::Downtown,
        _ => return Err(bad()),
    };
    let num = |s: &str| s.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(bad);
    Ok(Shape {
        zone,
        gaps: num(parts[1])?,
        days: num(parts[2])?,
        index: parts.get(3).map(|s| num(s)).transpose()?,
    })
}

/// Benchmark-shaped instance: fleet sized by the downsizing formulas.
pub fn synthesize(shape: &str, seed: u64) -> Result<Instance> {
    let sh = parse_shape(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = gaps(&mut rng, sh.gaps, 0.8, 1.8);
    let (lo, hi) = match sh.zone {
        Zone::University => (1.5, 6.0),
        Zone::Downtown => (1.2, 5.0),
    };
    let travel = random_travel(&mut rng, sh.gaps + 1, lo, hi);
    let fleet = synthesize_fleet_params(&gaps, &travel);
    Ok(Instance {
        name: format!("{shape}#{seed}"),
        gaps,
        travel,
        horizon_days: sh.days,
        vehicle_count: fleet.vehicle_count,
        vehicle_capacity: fleet.vehicle_capacity,
        time_limit: fleet.time_limit,
        alpha: ALPHA_PER_MINUTE,
        visit_combinations: standard_patterns(sh.days)?,
        bin_types: reference_bin_types(),
        combination_limit: Some(sh.combinations()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(oracle_instance(7, 3), oracle_instance(7, 3));
        assert_ne!(oracle_instance(7, 3), oracle_instance(8, 3));
        assert_eq!(synthesize("U/5/2", 1).unwrap(), synthesize("U/5/2", 1).unwrap());
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..20 {
            oracle_instance(seed, 2).validate().unwrap();
            oracle_instance(seed, 3).validate().unwrap();
            synthesize("U/5/2/1", seed).unwrap().validate().unwrap();
        }
        toy_instance().validate().unwrap();
    }

    #[test]
    fn benchmark_shape() {
        let inst = synthesize("U/5/2/1", 3).unwrap();
        assert_eq!(inst.gap_count(), 5);
        assert_eq!(inst.vehicle_count, 3);
        assert_eq!(inst.visit_combinations.len(), 3);
        assert!(inst.combinations_per_gap().unwrap().iter().all(|c| c.len() == 2));
        assert!(parse_shape("X/5/2").is_err());
        assert_eq!(parse_shape("U/5/4/3").unwrap().combinations(), 8);
    }

    #[test]
    fn four_day_patterns() {
        let p = standard_patterns(4).unwrap();
        assert_eq!(p.iter().map(|r| r.beta).collect::<Vec<_>>(), vec![1, 2, 2]);
    }
}
