//! Travel costs and the three canvassing policies.
//!
//! Entering a neighborhood costs `inter_cost` (alpha) and each further property
//! visited inside it costs `intra_cost`. Leaving a neighborhood and coming back
//! later pays alpha again. There is no cost to start or to return home.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spatial::CityModel;

/// Slack for comparing accumulated float costs against a budget.
const BUDGET_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    intra_cost: f64,
    inter_cost: f64,
}

impl CostModel {
    /// Unit intra-neighborhood cost and inter-neighborhood cost `alpha`.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_costs(1.0, alpha)
    }

    pub fn with_costs(intra_cost: f64, inter_cost: f64) -> Result<Self> {
        if !(intra_cost.is_finite()
            && inter_cost.is_finite()
            && intra_cost > 0.0
            && inter_cost >= intra_cost)
        {
            return Err(Error::invalid(format!(
                "costs must satisfy inter ({inter_cost}) >= intra ({intra_cost}) > 0"
            )));
        }
        Ok(CostModel {
            intra_cost,
            inter_cost,
        })
    }

    pub fn intra_cost(&self) -> f64 {
        self.intra_cost
    }

    pub fn inter_cost(&self) -> f64 {
        self.inter_cost
    }

    /// Cost of one uninterrupted run of `len` properties in a neighborhood.
    pub fn run_cost(&self, len: usize) -> f64 {
        if len == 0 {
            0.0
        } else {
            self.inter_cost + (len - 1) as f64 * self.intra_cost
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Visit {
    /// Zero-based neighborhood index.
    pub neighborhood: usize,
    pub rank: usize,
    pub high_risk: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    NonTargeting,
    Hpt,
    Tpt,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::NonTargeting => "non_targeting",
            PolicyKind::Hpt => "hpt",
            PolicyKind::Tpt => "tpt",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "non_targeting" | "non-targeting" | "nt" => Ok(PolicyKind::NonTargeting),
            "hpt" => Ok(PolicyKind::Hpt),
            "tpt" => Ok(PolicyKind::Tpt),
            other => Err(Error::invalid(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanvassPlan {
    pub policy: PolicyKind,
    pub budget: f64,
    pub cost_model: CostModel,
    pub visits: Vec<Visit>,
    pub total_cost: f64,
    pub visited_high_risk: usize,
    pub visited_low_risk: usize,
}

impl CanvassPlan {
    fn from_visits(
        policy: PolicyKind,
        budget: f64,
        cost_model: CostModel,
        visits: Vec<Visit>,
    ) -> Self {
        let visited_high_risk = visits.iter().filter(|v| v.high_risk).count();
        CanvassPlan {
            policy,
            budget,
            cost_model,
            total_cost: route_cost(&visits, &cost_model),
            visited_low_risk: visits.len() - visited_high_risk,
            visited_high_risk,
            visits,
        }
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    /// Running cost after each visit.
    pub fn cumulative_costs(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.visits.len());
        let mut acc = 0.0;
        let mut prev: Option<usize> = None;
        for v in &self.visits {
            acc += if prev == Some(v.neighborhood) {
                self.cost_model.intra_cost
            } else {
                self.cost_model.inter_cost
            };
            prev = Some(v.neighborhood);
            out.push(acc);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderingKey {
    HighRiskCount,
    PriorEvictions,
}

impl OrderingKey {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderingKey::HighRiskCount => "high_risk_count",
            OrderingKey::PriorEvictions => "prior_evictions",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodOrder {
    ids: Vec<usize>,
    key: OrderingKey,
}

impl NeighborhoodOrder {
    /// Descending High-Risk count, lower index first on ties.
    pub fn by_high_risk_count(model: &CityModel) -> Self {
        let counts: Vec<usize> = (0..model.num_neighborhoods())
            .map(|b| model.high_risk_count(b))
            .collect();
        NeighborhoodOrder {
            ids: descending_by(&counts),
            key: OrderingKey::HighRiskCount,
        }
    }

    /// Descending prior eviction count, lower index first on ties.
    pub fn by_prior_evictions(model: &CityModel, prior_evictions: &[u64]) -> Result<Self> {
        if prior_evictions.len() != model.num_neighborhoods() {
            return Err(Error::invalid(format!(
                "{} prior-eviction counts for {} neighborhoods",
                prior_evictions.len(),
                model.num_neighborhoods()
            )));
        }
        Ok(NeighborhoodOrder {
            ids: descending_by(prior_evictions),
            key: OrderingKey::PriorEvictions,
        })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn key(&self) -> OrderingKey {
        self.key
    }

    fn check(&self, model: &CityModel) -> Result<()> {
        let n = model.num_neighborhoods();
        let mut seen = vec![false; n];
        if self.ids.len() != n
            || self
                .ids
                .iter()
                .any(|&b| b >= n || std::mem::replace(&mut seen[b], true))
        {
            return Err(Error::invalid(
                "neighborhood order is not a permutation of the city's neighborhoods",
            ));
        }
        Ok(())
    }
}

fn descending_by<K: Ord + Copy>(keys: &[K]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..keys.len()).collect();
    ids.sort_by(|&a, &b| keys[b].cmp(&keys[a]).then(a.cmp(&b)));
    ids
}

/// Sum over maximal same-neighborhood runs of `alpha + (run_length - 1)`.
pub fn route_cost(visits: &[Visit], cost_model: &CostModel) -> f64 {
    visits
        .chunk_by(|a, b| a.neighborhood == b.neighborhood)
        .map(|run| cost_model.run_cost(run.len()))
        .sum()
}

/// Cost of fully canvassing the first `m` neighborhoods of `order`.
pub fn budget_for_neighborhoods(
    model: &CityModel,
    order: &NeighborhoodOrder,
    m: usize,
    cost_model: &CostModel,
) -> Result<f64> {
    order.check(model)?;
    if m == 0 || m > model.num_neighborhoods() {
        return Err(Error::invalid(format!(
            "M = {m} outside 1..={}",
            model.num_neighborhoods()
        )));
    }
    Ok(order.ids[..m]
        .iter()
        .map(|&b| cost_model.run_cost(model.neighborhood(b).len()))
        .sum())
}

fn check_budget(budget: f64) -> Result<()> {
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::invalid(format!(
            "budget {budget} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Walks `order`, visiting the properties `select` keeps in each neighborhood
/// (ascending rank) until the budget runs out. Neighborhoods with nothing
/// selected are skipped for free.
fn greedy_walk(
    model: &CityModel,
    order: &NeighborhoodOrder,
    budget: f64,
    cost_model: &CostModel,
    policy: PolicyKind,
    select: impl Fn(usize) -> bool,
) -> Result<CanvassPlan> {
    order.check(model)?;
    check_budget(budget)?;
    let mut visits = Vec::new();
    let mut spent = 0.0;
    'walk: for &b in &order.ids {
        let mut ranks: Vec<usize> = model
            .neighborhood(b)
            .iter()
            .copied()
            .filter(|&r| select(r))
            .collect();
        if ranks.is_empty() {
            continue;
        }
        ranks.sort_unstable();
        for (i, rank) in ranks.into_iter().enumerate() {
            let step = if i == 0 {
                cost_model.inter_cost
            } else {
                cost_model.intra_cost
            };
            if spent + step > budget + BUDGET_EPS {
                break 'walk;
            }
            spent += step;
            visits.push(Visit {
                neighborhood: b,
                rank,
                high_risk: model.is_high_risk(rank),
            });
        }
    }
    Ok(CanvassPlan::from_visits(
        policy,
        budget,
        *cost_model,
        visits,
    ))
}

/// Canvasses every property of each neighborhood in `order` until the budget
/// runs out; the last neighborhood may be partially visited.
pub fn non_targeting(
    model: &CityModel,
    order: &NeighborhoodOrder,
    budget: f64,
    cost_model: &CostModel,
) -> Result<CanvassPlan> {
    greedy_walk(
        model,
        order,
        budget,
        cost_model,
        PolicyKind::NonTargeting,
        |_| true,
    )
}

/// High-Risk Property Targeting: the non-targeting walk restricted to
/// High-Risk properties.
pub fn hpt(
    model: &CityModel,
    order: &NeighborhoodOrder,
    budget: f64,
    cost_model: &CostModel,
) -> Result<CanvassPlan> {
    greedy_walk(model, order, budget, cost_model, PolicyKind::Hpt, |r| {
        model.is_high_risk(r)
    })
}

/// Cost of visiting exactly the `k` riskiest properties, one run per neighborhood.
pub fn tpt_cost(model: &CityModel, k: usize, cost_model: &CostModel) -> f64 {
    let mut counts = vec![0usize; model.num_neighborhoods()];
    for rank in 1..=k {
        counts[model.neighborhood_of(rank)] += 1;
    }
    counts.into_iter().map(|c| cost_model.run_cost(c)).sum()
}

/// Largest `k` whose top-`k` route fits in `budget`.
///
/// `tpt_cost` strictly increases with `k`, so a binary search over `0..=total` applies.
pub fn tpt_max_k(model: &CityModel, budget: f64, cost_model: &CostModel) -> Result<usize> {
    check_budget(budget)?;
    let (mut lo, mut hi) = (0usize, model.total_properties());
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if tpt_cost(model, mid, cost_model) <= budget + BUDGET_EPS {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

/// Top-k Property Targeting: visits exactly ranks `1..=k*`.
///
/// Neighborhoods are toured by descending count of selected properties
/// (lower index first on ties), ascending rank within each.
pub fn tpt(model: &CityModel, budget: f64, cost_model: &CostModel) -> Result<CanvassPlan> {
    let k = tpt_max_k(model, budget, cost_model)?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); model.num_neighborhoods()];
    for rank in 1..=k {
        groups[model.neighborhood_of(rank)].push(rank);
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let visits = descending_by(&sizes)
        .into_iter()
        .flat_map(|b| {
            groups[b].iter().map(move |&rank| Visit {
                neighborhood: b,
                rank,
                high_risk: model.is_high_risk(rank),
            })
        })
        .collect();
    Ok(CanvassPlan::from_visits(
        PolicyKind::Tpt,
        budget,
        *cost_model,
        visits,
    ))
}

/// Runs the named policy; TPT ignores `order`.
pub fn plan(
    policy: PolicyKind,
    model: &CityModel,
    order: &NeighborhoodOrder,
    budget: f64,
    cost_model: &CostModel,
) -> Result<CanvassPlan> {
    match policy {
        PolicyKind::NonTargeting => non_targeting(model, order, budget, cost_model),
        PolicyKind::Hpt => hpt(model, order, budget, cost_model),
        PolicyKind::Tpt => tpt(model, budget, cost_model),
    }
}
