//! Bin-combination preprocessing: enumerate every multiset of bin types that
//! fits a GAP's space and keep the combinations that are Pareto-optimal in
//! (joint cost, joint capacity).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::instance::BinType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCombination {
    pub id: usize,
    /// Number of bins of each type, indexed like the catalogue.
    pub counts: Vec<u32>,
    /// Daily cost of the whole combination.
    pub joint_cost: Fixed,
    pub joint_capacity: Fixed,
    pub joint_area: Fixed,
}

impl BinCombination {
    fn from_indices(id: usize, indices: &[usize], bin_types: &[BinType]) -> Self {
        let mut counts = vec![0u32; bin_types.len()];
        for &i in indices {
            counts[i] += 1;
        }
        let sum = |f: fn(&BinType) -> Fixed| -> Fixed {
            indices.iter().map(|&i| f(&bin_types[i])).sum()
        };
        BinCombination {
            id,
            joint_cost: sum(|b| b.daily_cost),
            joint_capacity: sum(|b| b.capacity),
            joint_area: sum(|b| b.area),
            counts,
        }
    }

    pub fn cost(&self) -> f64 {
        self.joint_cost.to_f64()
    }

    pub fn capacity(&self) -> f64 {
        self.joint_capacity.to_f64()
    }

    pub fn bin_count(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Bin-type indices in nondecreasing order, e.g. `[0, 0, 1]`.
    pub fn type_sequence(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }

    /// `a` dominates `b`: no more expensive, no less capacity, one strictly.
    pub fn dominates(&self, other: &BinCombination) -> bool {
        self.joint_cost <= other.joint_cost
            && self.joint_capacity >= other.joint_capacity
            && (self.joint_cost < other.joint_cost || self.joint_capacity > other.joint_capacity)
    }
}

/// Every multiset of 1..=r' bins (r' = floor(space / smallest area)) whose
/// joint area fits `space`.
pub fn enumerate_feasible(bin_types: &[BinType], space: Fixed) -> Vec<BinCombination> {
    let Some(min_area) = bin_types.iter().map(|b| b.area).min() else {
        return Vec::new();
    };
    if !min_area.is_positive() || space < min_area {
        log::warn!("space {space} is smaller than every bin area");
        return Vec::new();
    }
    let max_bins = (space.raw() / min_area.raw()) as usize;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(max_bins);
    for size in 1..=max_bins {
        fill(bin_types, space, size, 0, &mut current, &mut out);
    }
    out
}

// Nondecreasing index tuples visit each multiset exactly once.
fn fill(
    bin_types: &[BinType],
    space: Fixed,
    size: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<BinCombination>,
) {
    if current.len() == size {
        let area: Fixed = current.iter().map(|&i| bin_types[i].area).sum();
        if area <= space {
            out.push(BinCombination::from_indices(out.len(), current, bin_types));
        }
        return;
    }
    for i in start..bin_types.len() {
        current.push(i);
        fill(bin_types, space, size, i, current, out);
        current.pop();
    }
}

fn kung_order(a: &BinCombination, b: &BinCombination) -> Ordering {
    b.joint_capacity
        .cmp(&a.joint_capacity)
        .then(a.joint_cost.cmp(&b.joint_cost))
        .then_with(|| a.type_sequence().cmp(&b.type_sequence()))
}

fn front(sorted: &[BinCombination]) -> Vec<BinCombination> {
    if sorted.len() <= 1 {
        return sorted.to_vec();
    }
    let (top, bottom) = sorted.split_at(sorted.len() / 2);
    let mut top = front(top);
    let bottom = front(bottom);
    // Everything in `top` has at least the capacity of anything in `bottom`,
    // so a cheaper-or-equal member of `top` dominates.
    let kept: Vec<_> = bottom
        .into_iter()
        .filter(|b| top.iter().all(|t| t.joint_cost > b.joint_cost))
        .collect();
    top.extend(kept);
    top
}

/// Non-dominated combinations (Kung's divide and conquer), ascending cost.
/// Exact ties keep the lexicographically smallest multiset.
pub fn pareto_front(combinations: &[BinCombination]) -> Vec<BinCombination> {
    let mut sorted = combinations.to_vec();
    sorted.sort_by(kung_order);
    let mut result = front(&sorted);
    result.sort_by(|a, b| {
        a.joint_cost
            .cmp(&b.joint_cost)
            .then(a.joint_capacity.cmp(&b.joint_capacity))
    });
    result
}

/// Pareto-optimal combinations for a GAP with the given space, ids
/// renumbered `0..` by ascending joint cost.
pub fn preprocess(bin_types: &[BinType], space: Fixed) -> Result<Vec<BinCombination>> {
    let feasible = enumerate_feasible(bin_types, space);
    if feasible.is_empty() {
        return Err(Error::NoFeasibleBins {
            space: space.to_string(),
        });
    }
    let mut front = pareto_front(&feasible);
    for (id, c) in front.iter_mut().enumerate() {
        c.id = id;
    }
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::reference_bin_types;
    use proptest::prelude::*;

    fn brute_force_multisets(types: &[BinType], space: Fixed) -> Vec<Vec<usize>> {
        // Independent enumeration: all count vectors in a box.
        let min_area = types.iter().map(|b| b.area).min().unwrap();
        let cap = (space.raw() / min_area.raw()) as u32;
        let mut out = Vec::new();
        let mut counts = vec![0u32; types.len()];
        loop {
            let area: i64 = counts
                .iter()
                .zip(types)
                .map(|(&c, b)| c as i64 * b.area.raw())
                .sum();
            let n: u32 = counts.iter().sum();
            if n > 0 && area <= space.raw() {
                let mut seq = Vec::new();
                for (i, &c) in counts.iter().enumerate() {
                    seq.extend(std::iter::repeat_n(i, c as usize));
                }
                out.push(seq);
            }
            let mut k = 0;
            loop {
                if k == counts.len() {
                    out.sort();
                    return out;
                }
                counts[k] += 1;
                if counts[k] <= cap {
                    break;
                }
                counts[k] = 0;
                k += 1;
            }
        }
    }

    fn pairwise_front(all: &[BinCombination]) -> Vec<(Fixed, Fixed, Vec<usize>)> {
        let mut keep: Vec<&BinCombination> = all
            .iter()
            .filter(|c| !all.iter().any(|o| o.dominates(c)))
            .collect();
        keep.sort_by(|a, b| {
            a.joint_cost
                .cmp(&b.joint_cost)
                .then(a.joint_capacity.cmp(&b.joint_capacity))
                .then_with(|| a.type_sequence().cmp(&b.type_sequence()))
        });
        keep.dedup_by(|b, a| {
            a.joint_cost == b.joint_cost && a.joint_capacity == b.joint_capacity
        });
        keep.iter()
            .map(|c| (c.joint_cost, c.joint_capacity, c.type_sequence()))
            .collect()
    }

    #[test]
    fn reference_catalogue_has_nine_feasible_multisets() {
        let types = reference_bin_types();
        let got: Vec<Vec<usize>> = {
            let mut v: Vec<_> = enumerate_feasible(&types, Fixed::from_f64(5.0))
                .iter()
                .map(|c| c.type_sequence())
                .collect();
            v.sort();
            v
        };
        assert_eq!(got, brute_force_multisets(&types, Fixed::from_f64(5.0)));
        assert_eq!(got.len(), 9);
        assert!(!got.contains(&vec![0, 0, 1]));
    }

    #[test]
    fn reference_front_matches_published_table() {
        let front = preprocess(&reference_bin_types(), Fixed::from_f64(5.0)).unwrap();
        let expected = [
            (0.11, 1.10),
            (0.22, 2.20),
            (0.32, 2.40),
            (0.33, 3.30),
            (0.43, 3.50),
            (0.48, 4.30),
            (0.6344, 4.80),
            (0.69, 5.60),
        ];
        assert_eq!(front.len(), 8);
        for (k, (c, (cost, cap))) in front.iter().zip(expected).enumerate() {
            assert_eq!(c.id, k);
            assert!((c.cost() - cost).abs() <= 0.005, "{k}: {}", c.cost());
            assert!((c.capacity() - cap).abs() <= 0.005, "{k}: {}", c.capacity());
        }
        // type III alone is dominated by three type I bins
        assert!(!front.iter().any(|c| c.type_sequence() == vec![2]));
    }

    #[test]
    fn single_type_that_fits_once() {
        let types = vec![BinType {
            id: 0,
            purchase_cost: Fixed::ZERO,
            daily_cost: Fixed::from_f64(1.0),
            capacity: Fixed::from_f64(1.0),
            area: Fixed::from_f64(3.0),
        }];
        let all = enumerate_feasible(&types, Fixed::from_f64(5.0));
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].counts, vec![1]);
    }

    #[test]
    fn tiny_space_is_empty() {
        let types = reference_bin_types();
        assert!(enumerate_feasible(&types, Fixed::from_f64(0.5)).is_empty());
        assert!(matches!(
            preprocess(&types, Fixed::from_f64(0.5)),
            Err(Error::NoFeasibleBins { .. })
        ));
    }

    #[test]
    fn single_element_front() {
        let types = reference_bin_types();
        let one = enumerate_feasible(&types[..1], Fixed::from_f64(2.0));
        assert_eq!(pareto_front(&one), one);
    }

    #[test]
    fn equal_capacity_keeps_cheaper() {
        let mk = |id, cost: f64| BinCombination {
            id,
            counts: vec![1],
            joint_cost: Fixed::from_f64(cost),
            joint_capacity: Fixed::from_f64(2.0),
            joint_area: Fixed::from_f64(1.0),
        };
        let front = pareto_front(&[mk(0, 12.0), mk(1, 10.0)]);
        assert_eq!(front.len(), 1);
        assert_eq!(front[0].cost(), 10.0);
    }

    #[test]
    fn two_type_catalogue_matches_oracle() {
        let types = reference_bin_types()[..2].to_vec();
        let space = Fixed::from_f64(5.0);
        let all = enumerate_feasible(&types, space);
        let got: Vec<_> = preprocess(&types, space)
            .unwrap()
            .iter()
            .map(|c| (c.joint_cost, c.joint_capacity, c.type_sequence()))
            .collect();
        assert_eq!(got, pairwise_front(&all));
        // {I}, {I,I}, {II}, {I,I,I}, {I,II}, {II,II}
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn duplicated_type_collapses() {
        let mut types = reference_bin_types()[..1].to_vec();
        let mut dup = types[0].clone();
        dup.id = 1;
        types.push(dup);
        let space = Fixed::from_f64(5.0);
        let single: Vec<_> = preprocess(&types[..1], space)
            .unwrap()
            .iter()
            .map(|c| (c.joint_cost, c.joint_capacity, c.type_sequence()))
            .collect();
        let doubled: Vec<_> = preprocess(&types, space)
            .unwrap()
            .iter()
            .map(|c| (c.joint_cost, c.joint_capacity, c.type_sequence()))
            .collect();
        assert_eq!(single, doubled);
    }

    fn arb_types() -> impl Strategy<Value = Vec<BinType>> {
        prop::collection::vec((1i64..60, 1i64..40, 5i64..30), 1..=6).prop_map(|raw| {
            raw.into_iter()
                .enumerate()
                .map(|(id, (cost, cap, area))| BinType {
                    id,
                    purchase_cost: Fixed::ZERO,
                    daily_cost: Fixed::from_raw(cost * 100),
                    capacity: Fixed::from_raw(cap * 1000),
                    area: Fixed::from_raw(area * 1000),
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn kung_matches_pairwise(types in arb_types(), space in 10i64..70) {
            let space = Fixed::from_raw(space * 1000);
            let all = enumerate_feasible(&types, space);
            prop_assume!(!all.is_empty());
            let front = pareto_front(&all);
            let got: Vec<_> = front
                .iter()
                .map(|c| (c.joint_cost, c.joint_capacity, c.type_sequence()))
                .collect();
            prop_assert_eq!(&got, &pairwise_front(&all));

            for a in &front {
                for b in &front {
                    prop_assert!(!a.dominates(b));
                }
            }
            for c in &all {
                prop_assert!(front.iter().any(|f| f.joint_cost <= c.joint_cost
                    && f.joint_capacity >= c.joint_capacity));
            }
            for w in front.windows(2) {
                prop_assert!(w[0].joint_cost < w[1].joint_cost);
                prop_assert!(w[0].joint_capacity < w[1].joint_capacity);
            }
        }
    }
}
