//! Classical covering and median location baselines on the same travel
//! geometry as the main model: set covering (LSCP), maximal covering (MCLP),
//! p-median, p-center, and double-coverage set covering.
//!
//! All five run exact include/exclude branch-and-bound over location subsets
//! with admissible bounds, so at desk scale their results equal subset
//! enumeration. Locations are branched in index order, include before
//! exclude, and incumbents are replaced only on strict improvement; ties
//! therefore resolve to the first subset found in that order.
//!
//! Coverage and travel use the order-to-location direction of the travel
//! matrix; demand weights default to 1 per order.

use std::fmt;

use crate::exact::PRUNE_SLACK;
use crate::instance::{Instance, FEASIBILITY_TOLERANCE_HOURS};

/// Limit on orders imposed by the bitmask representation of covered sets.
const MAX_ORDERS: usize = 128;

/// Shared parameters of the covering/median baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSpec {
    /// An order counts as covered by a location within this travel time.
    pub coverage_radius_hours: f64,
    /// Number of facilities to open (MCLP treats it as a maximum, p-median
    /// and p-center open exactly this many).
    pub p: usize,
    /// Per-order demand weights; `None` means unit weights.
    pub demand_weights: Option<Vec<f64>>,
}

/// Radii for double coverage: at least one facility within the primary
/// radius and at least two within the (larger) backup radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackupSpec {
    pub primary_radius_hours: f64,
    pub backup_radius_hours: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalError {
    InvalidSpec(String),
    /// These orders cannot reach the required number of facilities at any
    /// subset of locations.
    Uncoverable { orders: Vec<usize> },
}

impl fmt::Display for ClassicalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassicalError::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            ClassicalError::Uncoverable { orders } => {
                write!(f, "orders not coverable by any location subset: {orders:?}")
            }
        }
    }
}

impl std::error::Error for ClassicalError {}

fn check_size(instance: &Instance) -> Result<(), ClassicalError> {
    if instance.n_orders() > MAX_ORDERS {
        return Err(ClassicalError::InvalidSpec(format!(
            "baselines support at most {MAX_ORDERS} orders, instance has {}",
            instance.n_orders()
        )));
    }
    Ok(())
}

fn check_radius(radius: f64) -> Result<(), ClassicalError> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(ClassicalError::InvalidSpec(format!(
            "coverage radius must be finite and nonnegative, got {radius}"
        )));
    }
    Ok(())
}

fn check_p(instance: &Instance, p: usize) -> Result<(), ClassicalError> {
    if p < 1 || p > instance.n_locations() {
        return Err(ClassicalError::InvalidSpec(format!(
            "p must be between 1 and {}, got {p}",
            instance.n_locations()
        )));
    }
    Ok(())
}

fn weights(instance: &Instance, spec: &CoverSpec) -> Result<Vec<f64>, ClassicalError> {
    match &spec.demand_weights {
        None => Ok(vec![1.0; instance.n_orders()]),
        Some(w) => {
            if w.len() != instance.n_orders() {
                return Err(ClassicalError::InvalidSpec(format!(
                    "expected {} demand weights, got {}",
                    instance.n_orders(),
                    w.len()
                )));
            }
            if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(ClassicalError::InvalidSpec(format!(
                    "demand weights must be finite and nonnegative, got {bad}"
                )));
            }
            Ok(w.clone())
        }
    }
}

/// Per-location bitmask of the orders it covers within `radius`.
fn cover_masks(instance: &Instance, radius: f64) -> Vec<u128> {
    let tol = FEASIBILITY_TOLERANCE_HOURS;
    (0..instance.n_locations())
        .map(|j| {
            let mut mask = 0u128;
            for i in 0..instance.n_orders() {
                if instance.d_order_to_loc(i, j) <= radius + tol {
                    mask |= 1 << i;
                }
            }
            mask
        })
        .collect()
}

fn full_mask(n_orders: usize) -> u128 {
    if n_orders == 128 {
        u128::MAX
    } else {
        (1u128 << n_orders) - 1
    }
}

/// Orders whose bit is missing from the union of all masks.
fn uncovered_by_all(masks: &[u128], n_orders: usize) -> Vec<usize> {
    let union = masks.iter().fold(0u128, |acc, m| acc | m);
    (0..n_orders).filter(|&i| union & (1 << i) == 0).collect()
}

struct SetCoverSearch<'a> {
    masks: &'a [u128],
    full: u128,
    /// `reachable_from[idx]` = union of masks of locations `>= idx`.
    reachable_from: Vec<u128>,
    best: Option<(usize, Vec<usize>)>,
    open: Vec<usize>,
}

impl SetCoverSearch<'_> {
    fn dfs(&mut self, idx: usize, covered: u128) {
        if covered == self.full {
            let better = self.best.as_ref().is_none_or(|(count, _)| self.open.len() < *count);
            if better {
                self.best = Some((self.open.len(), self.open.clone()));
            }
            return;
        }
        if idx == self.masks.len() {
            return;
        }
        if covered | self.reachable_from[idx] != self.full {
            return;
        }
        if let Some((count, _)) = &self.best {
            if self.open.len() + 1 >= *count {
                return;
            }
        }
        self.open.push(idx);
        self.dfs(idx + 1, covered | self.masks[idx]);
        self.open.pop();
        self.dfs(idx + 1, covered);
    }
}

/// Location set cover: the minimum number of facilities such that every
/// order lies within the coverage radius of an open one.
pub fn lscp(instance: &Instance, spec: &CoverSpec) -> Result<(Vec<usize>, usize), ClassicalError> {
    check_size(instance)?;
    check_radius(spec.coverage_radius_hours)?;
    let masks = cover_masks(instance, spec.coverage_radius_hours);
    let missing = uncovered_by_all(&masks, instance.n_orders());
    if !missing.is_empty() {
        return Err(ClassicalError::Uncoverable { orders: missing });
    }
    let nj = instance.n_locations();
    let mut reachable_from = vec![0u128; nj + 1];
    for j in (0..nj).rev() {
        reachable_from[j] = reachable_from[j + 1] | masks[j];
    }
    let mut search = SetCoverSearch {
        masks: &masks,
        full: full_mask(instance.n_orders()),
        reachable_from,
        best: None,
        open: Vec::new(),
    };
    search.dfs(0, 0);
    let (count, open) = search.best.expect("full coverage is achievable, so a cover exists");
    Ok((open, count))
}

/// Sum of weights of the orders in `covered`, accumulated in order-index
/// order (the same way the brute-force reference sums them).
fn mask_weight(covered: u128, weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, w) in weights.iter().enumerate() {
        if covered & (1 << i) != 0 {
            total += w;
        }
    }
    total
}

struct MaxCoverSearch<'a> {
    masks: &'a [u128],
    weights: &'a [f64],
    p: usize,
    /// Union of masks of locations `>= idx`.
    reachable_from: Vec<u128>,
    best: Option<(f64, Vec<usize>)>,
    open: Vec<usize>,
}

impl MaxCoverSearch<'_> {
    fn consider(&mut self, covered: u128) {
        let value = mask_weight(covered, self.weights);
        let better = self.best.as_ref().is_none_or(|(best, _)| value > *best);
        if better {
            self.best = Some((value, self.open.clone()));
        }
    }

    fn dfs(&mut self, idx: usize, covered: u128) {
        if self.open.len() == self.p || idx == self.masks.len() {
            self.consider(covered);
            return;
        }
        if let Some((best, _)) = &self.best {
            let optimistic = mask_weight(covered | self.reachable_from[idx], self.weights);
            if optimistic <= best - PRUNE_SLACK {
                return;
            }
        }
        self.open.push(idx);
        self.dfs(idx + 1, covered | self.masks[idx]);
        self.open.pop();
        self.dfs(idx + 1, covered);
    }
}

/// Maximal covering: open at most `p` facilities to maximize the total
/// demand weight within the coverage radius.
pub fn mclp(instance: &Instance, spec: &CoverSpec) -> Result<(Vec<usize>, f64), ClassicalError> {
    check_size(instance)?;
    check_radius(spec.coverage_radius_hours)?;
    check_p(instance, spec.p)?;
    let w = weights(instance, spec)?;
    let masks = cover_masks(instance, spec.coverage_radius_hours);
    let nj = instance.n_locations();
    let mut reachable_from = vec![0u128; nj + 1];
    for j in (0..nj).rev() {
        reachable_from[j] = reachable_from[j + 1] | masks[j];
    }
    let mut search = MaxCoverSearch {
        masks: &masks,
        weights: &w,
        p: spec.p,
        reachable_from,
        best: None,
        open: Vec::new(),
    };
    search.dfs(0, 0);
    let (value, open) = search.best.expect("the empty subset is always feasible");
    Ok((open, value))
}

/// Objective of a median/center subset, recomputed from scratch so the
/// accumulation order matches the brute-force reference: per order, the
/// minimum travel over open locations (scanning open ascending), then either
/// weighted-summed or maxed over orders ascending.
fn assignment_value(instance: &Instance, open: &[usize], weights: Option<&[f64]>) -> f64 {
    let mut total = 0.0;
    let mut worst = 0.0f64;
    for i in 0..instance.n_orders() {
        let nearest = open
            .iter()
            .map(|&j| instance.d_order_to_loc(i, j))
            .fold(f64::INFINITY, f64::min);
        match weights {
            Some(w) => total += w[i] * nearest,
            None => worst = worst.max(nearest),
        }
    }
    if weights.is_some() {
        total
    } else {
        worst
    }
}

struct MedianSearch<'a> {
    instance: &'a Instance,
    weights: Option<&'a [f64]>,
    p: usize,
    /// `suffix_min[idx][i]` = cheapest travel for order `i` over locations
    /// `>= idx` (infinite past the end).
    suffix_min: Vec<Vec<f64>>,
    best: Option<(f64, Vec<usize>)>,
    open: Vec<usize>,
}

impl MedianSearch<'_> {
    /// Admissible bound: every undecided location counts as open.
    fn bound(&self, idx: usize, current_min: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for (i, &cur) in current_min.iter().enumerate() {
            let reachable = cur.min(self.suffix_min[idx][i]);
            match self.weights {
                Some(w) => total += w[i] * reachable,
                None => worst = worst.max(reachable),
            }
        }
        if self.weights.is_some() {
            total
        } else {
            worst
        }
    }

    fn dfs(&mut self, idx: usize, current_min: &mut Vec<f64>) {
        let nj = self.instance.n_locations();
        if self.open.len() == self.p {
            let value = assignment_value(self.instance, &self.open, self.weights);
            let better = self.best.as_ref().is_none_or(|(best, _)| value < *best);
            if better {
                self.best = Some((value, self.open.clone()));
            }
            return;
        }
        if nj - idx < self.p - self.open.len() {
            return;
        }
        if let Some((best, _)) = &self.best {
            if self.bound(idx, current_min) > best + PRUNE_SLACK {
                return;
            }
        }
        self.open.push(idx);
        let saved: Vec<f64> = current_min.clone();
        for i in 0..current_min.len() {
            current_min[i] = current_min[i].min(self.instance.d_order_to_loc(i, idx));
        }
        self.dfs(idx + 1, current_min);
        *current_min = saved;
        self.open.pop();
        self.dfs(idx + 1, current_min);
    }
}

fn median_like(
    instance: &Instance,
    p: usize,
    weights: Option<&[f64]>,
) -> (Vec<usize>, f64) {
    let nj = instance.n_locations();
    let ni = instance.n_orders();
    let mut suffix_min = vec![vec![f64::INFINITY; ni]; nj + 1];
    for j in (0..nj).rev() {
        for i in 0..ni {
            suffix_min[j][i] = suffix_min[j + 1][i].min(instance.d_order_to_loc(i, j));
        }
    }
    let mut search = MedianSearch {
        instance,
        weights,
        p,
        suffix_min,
        best: None,
        open: Vec::new(),
    };
    let mut current_min = vec![f64::INFINITY; ni];
    search.dfs(0, &mut current_min);
    let (value, open) = search.best.expect("p <= n_locations, so some subset of size p exists");
    (open, value)
}

/// p-median: open exactly `p` facilities minimizing total weighted travel
/// from each order to its nearest open facility.
pub fn p_median(instance: &Instance, spec: &CoverSpec) -> Result<(Vec<usize>, f64), ClassicalError> {
    check_size(instance)?;
    check_p(instance, spec.p)?;
    let w = weights(instance, spec)?;
    let (open, value) = median_like(instance, spec.p, Some(&w));
    Ok((open, value))
}

/// p-center: open exactly `p` facilities minimizing the worst travel from
/// any order to its nearest open facility.
pub fn p_center(instance: &Instance, spec: &CoverSpec) -> Result<(Vec<usize>, f64), ClassicalError> {
    check_size(instance)?;
    check_p(instance, spec.p)?;
    let (open, value) = median_like(instance, spec.p, None);
    Ok((open, value))
}

struct BackupSearch<'a> {
    primary_masks: &'a [u128],
    backup_masks: &'a [u128],
    full: u128,
    primary_reachable: Vec<u128>,
    /// `backup_remaining[idx][i]` = number of backup coverers of order `i`
    /// among locations `>= idx`.
    backup_remaining: Vec<Vec<u8>>,
    n_orders: usize,
    best: Option<(usize, Vec<usize>)>,
    open: Vec<usize>,
}

impl BackupSearch<'_> {
    fn dfs(&mut self, idx: usize, primary: u128, backup_counts: &mut Vec<u8>) {
        let done = primary == self.full
            && backup_counts.iter().take(self.n_orders).all(|&c| c >= 2);
        if done {
            let better = self.best.as_ref().is_none_or(|(count, _)| self.open.len() < *count);
            if better {
                self.best = Some((self.open.len(), self.open.clone()));
            }
            return;
        }
        if idx == self.primary_masks.len() {
            return;
        }
        if primary | self.primary_reachable[idx] != self.full {
            return;
        }
        for i in 0..self.n_orders {
            if backup_counts[i].saturating_add(self.backup_remaining[idx][i]) < 2 {
                return;
            }
        }
        if let Some((count, _)) = &self.best {
            if self.open.len() + 1 >= *count {
                return;
            }
        }
        self.open.push(idx);
        for i in 0..self.n_orders {
            if self.backup_masks[idx] & (1 << i) != 0 {
                backup_counts[i] = backup_counts[i].saturating_add(1);
            }
        }
        self.dfs(idx + 1, primary | self.primary_masks[idx], backup_counts);
        for i in 0..self.n_orders {
            if self.backup_masks[idx] & (1 << i) != 0 {
                backup_counts[i] -= 1;
            }
        }
        self.open.pop();
        self.dfs(idx + 1, primary, backup_counts);
    }
}

/// Double-coverage set cover: the minimum number of facilities such that
/// every order has at least one within the primary radius and at least two
/// within the backup radius.
pub fn backup_lscp(
    instance: &Instance,
    spec: &BackupSpec,
) -> Result<(Vec<usize>, usize), ClassicalError> {
    check_size(instance)?;
    check_radius(spec.primary_radius_hours)?;
    check_radius(spec.backup_radius_hours)?;
    if spec.primary_radius_hours > spec.backup_radius_hours {
        return Err(ClassicalError::InvalidSpec(format!(
            "primary radius {} exceeds backup radius {}",
            spec.primary_radius_hours, spec.backup_radius_hours
        )));
    }
    let primary_masks = cover_masks(instance, spec.primary_radius_hours);
    let backup_masks = cover_masks(instance, spec.backup_radius_hours);
    let ni = instance.n_orders();
    let mut impossible = uncovered_by_all(&primary_masks, ni);
    for i in 0..ni {
        let backup_count =
            backup_masks.iter().filter(|m| *m & (1 << i) != 0).count();
        if backup_count < 2 && !impossible.contains(&i) {
            impossible.push(i);
        }
    }
    if !impossible.is_empty() {
        impossible.sort_unstable();
        return Err(ClassicalError::Uncoverable { orders: impossible });
    }

    let nj = instance.n_locations();
    let mut primary_reachable = vec![0u128; nj + 1];
    for j in (0..nj).rev() {
        primary_reachable[j] = primary_reachable[j + 1] | primary_masks[j];
    }
    let mut backup_remaining = vec![vec![0u8; ni]; nj + 1];
    for j in (0..nj).rev() {
        for i in 0..ni {
            let here = u8::from(backup_masks[j] & (1 << i) != 0);
            backup_remaining[j][i] = backup_remaining[j + 1][i].saturating_add(here);
        }
    }
    let mut search = BackupSearch {
        primary_masks: &primary_masks,
        backup_masks: &backup_masks,
        full: full_mask(ni),
        primary_reachable,
        backup_remaining,
        n_orders: ni,
        best: None,
        open: Vec::new(),
    };
    let mut counts = vec![0u8; ni];
    search.dfs(0, 0, &mut counts);
    let (count, open) =
        search.best.expect("double coverage is achievable, so a cover exists");
    Ok((open, count))
}
