//! Placing ranked properties into neighborhoods.
//!
//! Ranks are risk ranks (1 = riskiest). A sampled [`Ranking`] is read slot by
//! slot, and neighborhood `b` owns the `b`-th consecutive block of slots, so the
//! identity ranking puts the riskiest properties together in neighborhood 1.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ranking::{sample_rim, MallowsParams, Ranking};

#[derive(Clone, Debug, PartialEq)]
pub struct CityConfig {
    sizes: Vec<usize>,
    high_risk_fraction: f64,
}

impl CityConfig {
    /// `neighborhoods` blocks of `properties_per` properties each.
    pub fn uniform(
        neighborhoods: usize,
        properties_per: usize,
        high_risk_fraction: f64,
    ) -> Result<Self> {
        if neighborhoods == 0 || properties_per == 0 {
            return Err(Error::invalid(
                "neighborhood count and size must be positive",
            ));
        }
        Self::with_sizes(vec![properties_per; neighborhoods], high_risk_fraction)
    }

    /// Explicit per-neighborhood property counts.
    pub fn with_sizes(sizes: Vec<usize>, high_risk_fraction: f64) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::invalid("a city needs at least one neighborhood"));
        }
        if let Some(b) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!(
                "neighborhood {b} has no properties"
            )));
        }
        if !(high_risk_fraction > 0.0 && high_risk_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "high-risk fraction {high_risk_fraction} outside (0, 1]"
            )));
        }
        Ok(CityConfig {
            sizes,
            high_risk_fraction,
        })
    }

    pub fn num_neighborhoods(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total_properties(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn high_risk_fraction(&self) -> f64 {
        self.high_risk_fraction
    }

    /// Common neighborhood size, if all neighborhoods have the same size.
    pub fn uniform_size(&self) -> Option<usize> {
        let first = self.sizes[0];
        self.sizes.iter().all(|&s| s == first).then_some(first)
    }

    /// Properties ranked at or above this are High-Risk (round half up).
    pub fn high_risk_cutoff(&self) -> usize {
        let exact = self.high_risk_fraction * self.total_properties() as f64;
        ((exact + 0.5).floor() as usize).min(self.total_properties())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CityModel {
    config: CityConfig,
    neighborhoods: Vec<Vec<usize>>,
    neighborhood_of_rank: Vec<usize>,
    high_risk_cutoff: usize,
    risk_scores: Option<Vec<f64>>,
    neighborhood_ids: Vec<String>,
}

impl CityModel {
    pub fn config(&self) -> &CityConfig {
        &self.config
    }

    pub fn num_neighborhoods(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn total_properties(&self) -> usize {
        self.neighborhood_of_rank.len()
    }

    /// Ranks held by neighborhood `b`, in slot order.
    pub fn neighborhood(&self, b: usize) -> &[usize] {
        &self.neighborhoods[b]
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    /// Zero-based neighborhood index holding `rank`.
    pub fn neighborhood_of(&self, rank: usize) -> usize {
        self.neighborhood_of_rank[rank - 1]
    }

    pub fn high_risk_cutoff(&self) -> usize {
        self.high_risk_cutoff
    }

    pub fn is_high_risk(&self, rank: usize) -> bool {
        rank <= self.high_risk_cutoff
    }

    pub fn high_risk_count(&self, b: usize) -> usize {
        self.neighborhoods[b]
            .iter()
            .filter(|&&r| self.is_high_risk(r))
            .count()
    }

    /// Score of each rank (`risk_scores()[rank - 1]`), nonincreasing in rank.
    pub fn risk_scores(&self) -> Option<&[f64]> {
        self.risk_scores.as_deref()
    }

    pub fn neighborhood_ids(&self) -> &[String] {
        &self.neighborhood_ids
    }

    pub fn with_risk_scores(mut self, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != self.total_properties() {
            return Err(Error::invalid(format!(
                "{} risk scores for {} properties",
                scores.len(),
                self.total_properties()
            )));
        }
        if let Some(bad) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::data(format!(
                "risk score of rank {} is not finite",
                bad + 1
            )));
        }
        if let Some(w) = scores.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::data(format!(
                "risk scores must be nonincreasing in rank (rank {} < rank {})",
                w + 1,
                w + 2
            )));
        }
        self.risk_scores = Some(scores);
        Ok(self)
    }

    pub fn with_neighborhood_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.num_neighborhoods() {
            return Err(Error::invalid(format!(
                "{} ids for {} neighborhoods",
                ids.len(),
                self.num_neighborhoods()
            )));
        }
        self.neighborhood_ids = ids;
        Ok(self)
    }

    /// Concatenation of the neighborhood blocks; inverse of [`assign_to_neighborhoods`].
    pub fn to_ranking(&self) -> Ranking {
        Ranking::from_vec_unchecked(self.neighborhoods.concat())
    }
}

/// Identity ranking over `neighborhoods * properties_per` properties.
pub fn homogeneous_central_ranking(neighborhoods: usize, properties_per: usize) -> Result<Ranking> {
    if neighborhoods == 0 || properties_per == 0 {
        return Err(Error::invalid(
            "neighborhood count and size must be positive",
        ));
    }
    Ranking::identity(neighborhoods * properties_per)
}

/// Splits `r` into consecutive blocks following `config`'s neighborhood sizes.
pub fn assign_to_neighborhoods(r: &Ranking, config: &CityConfig) -> Result<CityModel> {
    let total = config.total_properties();
    if r.len() != total {
        return Err(Error::invalid(format!(
            "ranking of length {} for a city of {total} properties",
            r.len()
        )));
    }
    let mut neighborhoods = Vec::with_capacity(config.num_neighborhoods());
    let mut neighborhood_of_rank = vec![0; total];
    let mut start = 0;
    for (b, &size) in config.sizes().iter().enumerate() {
        let block = r.items()[start..start + size].to_vec();
        for &rank in &block {
            neighborhood_of_rank[rank - 1] = b;
        }
        neighborhoods.push(block);
        start += size;
    }
    Ok(CityModel {
        high_risk_cutoff: config.high_risk_cutoff(),
        neighborhood_ids: (1..=config.num_neighborhoods())
            .map(|b| b.to_string())
            .collect(),
        config: config.clone(),
        neighborhoods,
        neighborhood_of_rank,
        risk_scores: None,
    })
}

/// Samples a city whose ranking is Mallows-distributed around the homogeneous ranking.
pub fn sample_city<R: Rng + ?Sized>(
    config: &CityConfig,
    phi: f64,
    rng: &mut R,
) -> Result<CityModel> {
    let center = Ranking::identity(config.total_properties())?;
    let params = MallowsParams::kendall(center, phi)?;
    assign_to_neighborhoods(&sample_rim(&params, rng)?, config)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodStats {
    pub high_risk_counts: Vec<usize>,
    pub totals: Vec<usize>,
    pub high_risk_rates: Vec<f64>,
}

pub fn neighborhood_stats(model: &CityModel) -> NeighborhoodStats {
    let high_risk_counts: Vec<usize> = (0..model.num_neighborhoods())
        .map(|b| model.high_risk_count(b))
        .collect();
    let totals: Vec<usize> = model.neighborhoods.iter().map(Vec::len).collect();
    let high_risk_rates = high_risk_counts
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| h as f64 / t as f64)
        .collect();
    NeighborhoodStats {
        high_risk_counts,
        totals,
        high_risk_rates,
    }
}

/// Gini index `sum_ij |x_i - x_j| / (2 N^2 mean)`.
///
/// Evaluated from the sorted values in O(N log N). Ranges from 0 (all equal)
/// to `(N - 1) / N` (everything in one entry).
pub fn gini_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("Gini index of an empty sequence"));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("Gini index needs finite nonnegative values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let sum: f64 = sorted.iter().sum();
    if sum == 0.0 {
        return Err(Error::UndefinedMean);
    }
    // sum_ij |x_i - x_j| = 2 sum_i (2i - n - 1) x_(i), 1-based i
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i + 1) as f64 - n - 1.0) * x)
        .sum();
    Ok(weighted / (n * sum))
}

/// Gini index of integer counts.
///
/// The weighted sum is accumulated in integers so the only rounding is the
/// final division.
pub fn gini_of_counts(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::invalid("Gini index of an empty sequence"));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as i128;
    let sum: i128 = sorted.iter().map(|&c| c as i128).sum();
    if sum == 0 {
        return Err(Error::UndefinedMean);
    }
    let weighted: i128 = sorted
        .iter()
        .enumerate()
        .map(|(i, &c)| (2 * (i as i128 + 1) - n - 1) * c as i128)
        .sum();
    Ok(weighted as f64 / (n * sum) as f64)
}
