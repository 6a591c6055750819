//! Discovered evictions, the RENT ratio and expected intervention utility.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::policy::{
    budget_for_neighborhoods, plan, CanvassPlan, CostModel, NeighborhoodOrder, PolicyKind,
};
use crate::seed::stream_rng;
use crate::spatial::{sample_city, CityConfig};

/// Eviction probability given a High-Risk (`p`) or Low-Risk (`q`) label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeModel {
    p: f64,
    q: f64,
}

impl OutcomeModel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(OutcomeModel { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RentResult {
    pub s_b: f64,
    pub s_t: f64,
    /// `None` when the targeting policy discovers nothing.
    pub rent: Option<f64>,
    pub budget: f64,
    pub policy_kind: PolicyKind,
}

impl RentResult {
    fn new(s_b: f64, s_t: f64, budget: f64, policy_kind: PolicyKind) -> Self {
        RentResult {
            s_b,
            s_t,
            rent: (s_t > 0.0).then(|| s_b / s_t),
            budget,
            policy_kind,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterventionScenario {
    reduction_fraction: f64,
}

impl InterventionScenario {
    pub fn new(reduction_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reduction_fraction) {
            return Err(Error::invalid(format!(
                "reduction fraction {reduction_fraction} outside [0, 1]"
            )));
        }
        Ok(InterventionScenario { reduction_fraction })
    }

    pub fn reduction_fraction(&self) -> f64 {
        self.reduction_fraction
    }
}

/// `p * visited_high_risk + q * visited_low_risk`.
pub fn expected_discovered(plan: &CanvassPlan, outcome: &OutcomeModel) -> f64 {
    outcome.p * plan.visited_high_risk as f64 + outcome.q * plan.visited_low_risk as f64
}

/// Visited properties whose outcome bit is set. `outcomes[rank - 1]` is the
/// bit for `rank`; a visited property without one is a data error.
pub fn realized_discovered(plan: &CanvassPlan, outcomes: &[Option<bool>]) -> Result<usize> {
    plan.visits.iter().try_fold(0, |acc, v| {
        match outcomes.get(v.rank - 1).copied().flatten() {
            Some(bit) => Ok(acc + usize::from(bit)),
            None => Err(Error::data(format!(
                "no eviction outcome for rank {}",
                v.rank
            ))),
        }
    })
}

fn check_same_budget(plan_b: &CanvassPlan, plan_t: &CanvassPlan) -> Result<()> {
    if plan_b.budget != plan_t.budget {
        return Err(Error::invalid(format!(
            "plans built under different budgets ({} vs {})",
            plan_b.budget, plan_t.budget
        )));
    }
    Ok(())
}

/// Expected-discovery RENT of a non-targeting plan against a targeting plan.
pub fn rent(
    plan_b: &CanvassPlan,
    plan_t: &CanvassPlan,
    outcome: &OutcomeModel,
) -> Result<RentResult> {
    check_same_budget(plan_b, plan_t)?;
    Ok(RentResult::new(
        expected_discovered(plan_b, outcome),
        expected_discovered(plan_t, outcome),
        plan_t.budget,
        plan_t.policy,
    ))
}

/// RENT from observed eviction bits.
pub fn rent_realized(
    plan_b: &CanvassPlan,
    plan_t: &CanvassPlan,
    outcomes: &[Option<bool>],
) -> Result<RentResult> {
    check_same_budget(plan_b, plan_t)?;
    Ok(RentResult::new(
        realized_discovered(plan_b, outcomes)? as f64,
        realized_discovered(plan_t, outcomes)? as f64,
        plan_t.budget,
        plan_t.policy,
    ))
}

/// `reduction_fraction * sum of calibrated probabilities over visited
/// properties`; `calibrated_probs[rank - 1]` belongs to `rank`.
pub fn expected_reduction(
    plan: &CanvassPlan,
    calibrated_probs: &[f64],
    scenario: &InterventionScenario,
) -> Result<f64> {
    let mut total = 0.0;
    for v in &plan.visits {
        let prob = *calibrated_probs
            .get(v.rank - 1)
            .ok_or_else(|| Error::data(format!("no calibrated probability for rank {}", v.rank)))?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::data(format!(
                "probability {prob} for rank {} outside [0, 1]",
                v.rank
            )));
        }
        total += prob;
    }
    Ok(scenario.reduction_fraction * total)
}

/// Axes of a RENT sweep; every combination is one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub phis: Vec<f64>,
    pub neighborhoods: Vec<usize>,
    pub properties_per: Vec<usize>,
    pub m_values: Vec<usize>,
    pub alphas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    pub policies: Vec<PolicyKind>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub phi: f64,
    pub neighborhoods: usize,
    pub properties_per: usize,
    pub m: usize,
    pub alpha: f64,
    pub fraction: f64,
    pub p: f64,
    pub q: f64,
    pub policy: PolicyKind,
}

impl SweepGrid {
    /// Grid points with `phi` varying fastest, then `q`, `p`, `fraction`,
    /// `alpha`, `M`, `n`, `N`, and the policy slowest.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &policy in &self.policies {
            for &neighborhoods in &self.neighborhoods {
                for &properties_per in &self.properties_per {
                    for &m in &self.m_values {
                        for &alpha in &self.alphas {
                            for &fraction in &self.fractions {
                                for &p in &self.ps {
                                    for &q in &self.qs {
                                        for &phi in &self.phis {
                                            out.push(SweepPoint {
                                                phi,
                                                neighborhoods,
                                                properties_per,
                                                m,
                                                alpha,
                                                fraction,
                                                p,
                                                q,
                                                policy,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Rejects empty axes and parameter combinations that cannot run.
    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("phi", self.phis.len()),
            ("N", self.neighborhoods.len()),
            ("n", self.properties_per.len()),
            ("M", self.m_values.len()),
            ("alpha", self.alphas.len()),
            ("fraction", self.fractions.len()),
            ("p", self.ps.len()),
            ("q", self.qs.len()),
            ("policy", self.policies.len()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, len)| *len == 0) {
            return Err(Error::invalid(format!("sweep axis '{name}' is empty")));
        }
        if self.policies.contains(&PolicyKind::NonTargeting) {
            return Err(Error::invalid(
                "sweep policy must be a targeting policy (hpt or tpt)",
            ));
        }
        for &phi in &self.phis {
            crate::ranking::MallowsParams::kendall(crate::ranking::Ranking::identity(1)?, phi)?;
        }
        for &a in &self.alphas {
            CostModel::new(a)?;
        }
        for &p in &self.ps {
            for &q in &self.qs {
                OutcomeModel::new(p, q)?;
            }
        }
        for &n_nb in &self.neighborhoods {
            for &per in &self.properties_per {
                for &f in &self.fractions {
                    CityConfig::uniform(n_nb, per, f)?;
                }
            }
            if let Some(&m) = self.m_values.iter().find(|&&m| m == 0 || m > n_nb) {
                return Err(Error::invalid(format!("M = {m} outside 1..={n_nb}")));
            }
        }
        Ok(())
    }
}

/// One replicate at a grid point: sample a city, budget the first `M`
/// neighborhoods, run both policies and compare expected discoveries.
pub fn run_replicate<R: rand::Rng + ?Sized>(point: &SweepPoint, rng: &mut R) -> Result<RentResult> {
    let config = CityConfig::uniform(point.neighborhoods, point.properties_per, point.fraction)?;
    let city = sample_city(&config, point.phi, rng)?;
    let cost = CostModel::new(point.alpha)?;
    let order = NeighborhoodOrder::by_high_risk_count(&city);
    let budget = budget_for_neighborhoods(&city, &order, point.m, &cost)?;
    let baseline = plan(PolicyKind::NonTargeting, &city, &order, budget, &cost)?;
    let targeted = plan(point.policy, &city, &order, budget, &cost)?;
    rent(&baseline, &targeted, &OutcomeModel::new(point.p, point.q)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    /// Mean over replicates with a defined RENT.
    pub mean_rent: Option<f64>,
    pub stderr_rent: Option<f64>,
    pub mean_s_b: f64,
    pub mean_s_t: f64,
    /// Replicates contributing to `mean_rent`.
    pub replicates: usize,
    pub undefined: usize,
}

fn mean_and_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Mean RENT per grid point. Replicate `r` of grid point `g` draws from the
/// stream seeded by `(base_seed, g, r)`, so rows are reproducible and
/// independent of scheduling; rows come back in [`SweepGrid::points`] order.
pub fn rent_sweep(grid: &SweepGrid, replicates: usize, base_seed: u64) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    if replicates == 0 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    let points = grid.points();
    let results: Vec<RentResult> = (0..points.len() * replicates)
        .into_par_iter()
        .map(|task| {
            let (g, r) = (task / replicates, task % replicates);
            let mut rng = stream_rng(base_seed, &[g as u64, r as u64]);
            run_replicate(&points[g], &mut rng)
        })
        .collect::<Result<_>>()?;

    Ok(points
        .into_iter()
        .zip(results.chunks(replicates))
        .map(|(point, reps)| {
            let rents: Vec<f64> = reps.iter().filter_map(|r| r.rent).collect();
            let stats = mean_and_stderr(&rents);
            let n = reps.len() as f64;
            if rents.len() < reps.len() {
                log::warn!(
                    "{} of {} replicates at phi={} have undefined RENT",
                    reps.len() - rents.len(),
                    reps.len(),
                    point.phi
                );
            }
            SweepRow {
                point,
                mean_rent: stats.map(|s| s.0),
                stderr_rent: stats.map(|s| s.1),
                mean_s_b: reps.iter().map(|r| r.s_b).sum::<f64>() / n,
                mean_s_t: reps.iter().map(|r| r.s_t).sum::<f64>() / n,
                replicates: rents.len(),
                undefined: reps.len() - rents.len(),
            }
        })
        .collect())
}
