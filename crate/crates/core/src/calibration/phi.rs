//! Fitting the Mallows dispersion to an observed spread of High-Risk properties.
//!
//! Two procedures, both driven by simulated cities with uniform neighborhood
//! sizes: per-rank min/max envelopes of High-Risk rates, and inversion of the
//! mean-Gini-versus-phi curve.

use std::fmt;

use rayon::prelude::*;

use crate::calibration::scores::pav;
use crate::error::{Error, Result};
use crate::seed::stream_rng;
use crate::spatial::{
    gini_index, gini_of_counts, neighborhood_stats, sample_city, CityConfig, CityModel,
};

/// Neighborhood size used for calibration simulations.
pub const DEFAULT_SIM_PROPERTIES_PER: usize = 100;
/// Neighborhoods smaller than this are dropped from observed data.
pub const DEFAULT_MIN_NEIGHBORHOOD_SIZE: usize = 30;
pub const DEFAULT_ENVELOPE_SIMS: usize = 1000;
pub const DEFAULT_GINI_SAMPLES: usize = 500;

/// 200 points in [0.5, 0.9999], log-spaced in `1 - phi` so they crowd toward 1.
pub fn default_phi_grid() -> Vec<f64> {
    log_spaced_phi_grid(0.5, 0.9999, 200)
}

/// `steps` values of phi in `[lo, hi]` with `1 - phi` geometrically spaced.
pub fn log_spaced_phi_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let (a, b) = ((1.0 - lo).ln(), (1.0 - hi).ln());
    (0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            if i == steps - 1 {
                hi
            } else {
                1.0 - (a + t * (b - a)).exp()
            }
        })
        .collect()
}

fn check_grid(phi_grid: &[f64]) -> Result<()> {
    if phi_grid.is_empty() {
        return Err(Error::invalid("phi grid is empty"));
    }
    if phi_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("phi grid values must lie in [0, 1]"));
    }
    if phi_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("phi grid must be strictly increasing"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GiniCurveRow {
    pub phi: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl GiniCurveRow {
    /// Running mean, so identical samples reproduce their value exactly.
    fn summarize(phi: f64, ginis: &[f64]) -> Self {
        let mut mean = 0.0;
        for (k, &g) in ginis.iter().enumerate() {
            mean += (g - mean) / (k + 1) as f64;
        }
        Self {
            phi,
            mean,
            min: ginis.iter().copied().fold(f64::INFINITY, f64::min),
            max: ginis.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Monte Carlo mean, min and max Gini of per-neighborhood High-Risk counts.
///
/// Sample `s` at grid index `g` uses the stream `(base_seed, g, s)`.
pub fn gini_curve(
    config: &CityConfig,
    phi_grid: &[f64],
    samples: usize,
    base_seed: u64,
) -> Result<Vec<GiniCurveRow>> {
    if phi_grid.is_empty() {
        return Err(Error::invalid("phi grid is empty"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let ginis: Vec<f64> = (0..phi_grid.len() * samples)
        .into_par_iter()
        .map(|task| {
            let (g, s) = (task / samples, task % samples);
            let mut rng = stream_rng(base_seed, &[g as u64, s as u64]);
            let city = sample_city(config, phi_grid[g], &mut rng)?;
            gini_of_counts(&neighborhood_stats(&city).high_risk_counts)
        })
        .collect::<Result<_>>()?;
    Ok(phi_grid
        .iter()
        .zip(ginis.chunks(samples))
        .map(|(&phi, gs)| GiniCurveRow::summarize(phi, gs))
        .collect())
}

/// High-Risk counts and sizes of observed neighborhoods.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedNeighborhoodProfile {
    high_risk_counts: Vec<usize>,
    totals: Vec<usize>,
}

impl ObservedNeighborhoodProfile {
    pub fn new(high_risk_counts: Vec<usize>, totals: Vec<usize>) -> Result<Self> {
        if high_risk_counts.is_empty() || high_risk_counts.len() != totals.len() {
            return Err(Error::invalid(
                "profile needs matching, nonempty counts and totals",
            ));
        }
        if let Some(b) = high_risk_counts
            .iter()
            .zip(&totals)
            .position(|(&h, &t)| t == 0 || h > t)
        {
            return Err(Error::data(format!(
                "neighborhood {b}: {} High-Risk of {} properties",
                high_risk_counts[b], totals[b]
            )));
        }
        if high_risk_counts.iter().all(|&h| h == 0) {
            return Err(Error::data("profile has no High-Risk properties"));
        }
        Ok(ObservedNeighborhoodProfile {
            high_risk_counts,
            totals,
        })
    }

    pub fn from_model(model: &CityModel) -> Self {
        let stats = neighborhood_stats(model);
        ObservedNeighborhoodProfile {
            high_risk_counts: stats.high_risk_counts,
            totals: stats.totals,
        }
    }

    /// Keeps neighborhoods with at least `min_size` properties.
    pub fn filtered(&self, min_size: usize) -> Result<Self> {
        let (h, t): (Vec<usize>, Vec<usize>) = self
            .high_risk_counts
            .iter()
            .zip(&self.totals)
            .filter(|(_, &t)| t >= min_size)
            .map(|(&h, &t)| (h, t))
            .unzip();
        Self::new(h, t)
    }

    pub fn num_neighborhoods(&self) -> usize {
        self.totals.len()
    }

    pub fn high_risk_counts(&self) -> &[usize] {
        &self.high_risk_counts
    }

    pub fn totals(&self) -> &[usize] {
        &self.totals
    }

    pub fn high_risk_fraction(&self) -> f64 {
        self.high_risk_counts.iter().sum::<usize>() as f64
            / self.totals.iter().sum::<usize>() as f64
    }

    pub fn rates(&self) -> Vec<f64> {
        self.high_risk_counts
            .iter()
            .zip(&self.totals)
            .map(|(&h, &t)| h as f64 / t as f64)
            .collect()
    }

    /// Rates sorted from highest to lowest.
    pub fn rates_by_rank(&self) -> Vec<f64> {
        sorted_desc(self.rates())
    }

    /// Gini index of the High-Risk rates (the counts, rescaled to a common size).
    pub fn gini(&self) -> Result<f64> {
        gini_index(&self.rates())
    }

    /// The uniform-size city the calibration simulations run on.
    pub fn simulation_config(&self, properties_per: usize) -> Result<CityConfig> {
        CityConfig::uniform(
            self.num_neighborhoods(),
            properties_per,
            self.high_risk_fraction(),
        )
    }
}

fn sorted_desc(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(|a, b| b.total_cmp(a));
    xs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhiMethod {
    Envelope,
    GiniMatch,
}

impl PhiMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PhiMethod::Envelope => "envelope",
            PhiMethod::GiniMatch => "gini_match",
        }
    }
}

impl fmt::Display for PhiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimateStatus {
    Found,
    /// No grid value covers every rank; `phi` is the one covering the most.
    NotFound,
    /// Observed Gini outside the simulated range; `phi` is the nearest endpoint.
    OutOfRange,
}

impl EstimateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateStatus::Found => "found",
            EstimateStatus::NotFound => "not_found",
            EstimateStatus::OutOfRange => "out_of_range",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhiDiagnostics {
    Envelope {
        /// Observed ranks (1-based) outside the envelope, for each grid phi.
        uncovered: Vec<(f64, Vec<usize>)>,
        best_coverage: usize,
        ranks: usize,
    },
    GiniMatch {
        observed: f64,
        /// Monotone-smoothed simulated mean Gini at the returned phi.
        fitted: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiEstimate {
    pub phi: f64,
    pub method: PhiMethod,
    pub status: EstimateStatus,
    pub diagnostics: PhiDiagnostics,
}

/// Simulated per-rank range of High-Risk rates at one phi.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiEnvelope {
    pub phi: f64,
    pub min_rates: Vec<f64>,
    pub max_rates: Vec<f64>,
}

/// Envelopes for every grid phi; simulation `s` at grid index `g` uses
/// the stream `(base_seed, g, s)`.
pub fn simulate_envelopes(
    config: &CityConfig,
    phi_grid: &[f64],
    n_sims: usize,
    base_seed: u64,
) -> Result<Vec<PhiEnvelope>> {
    check_grid(phi_grid)?;
    if n_sims == 0 {
        return Err(Error::invalid("n_sims must be at least 1"));
    }
    phi_grid
        .par_iter()
        .enumerate()
        .map(|(g, &phi)| {
            let ranks = config.num_neighborhoods();
            let mut min_rates = vec![f64::INFINITY; ranks];
            let mut max_rates = vec![f64::NEG_INFINITY; ranks];
            for s in 0..n_sims {
                let mut rng = stream_rng(base_seed, &[g as u64, s as u64]);
                let city = sample_city(config, phi, &mut rng)?;
                let rates = sorted_desc(neighborhood_stats(&city).high_risk_rates);
                for (r, rate) in rates.into_iter().enumerate() {
                    min_rates[r] = min_rates[r].min(rate);
                    max_rates[r] = max_rates[r].max(rate);
                }
            }
            Ok(PhiEnvelope {
                phi,
                min_rates,
                max_rates,
            })
        })
        .collect()
}

/// Smallest grid phi whose envelope contains every observed rank-ordered rate.
pub fn envelope_estimate(
    profile: &ObservedNeighborhoodProfile,
    envelopes: &[PhiEnvelope],
) -> Result<PhiEstimate> {
    const TOL: f64 = 1e-12;
    if envelopes.is_empty() {
        return Err(Error::invalid("no envelopes to compare against"));
    }
    let observed = profile.rates_by_rank();
    let mut uncovered_per_phi = Vec::with_capacity(envelopes.len());
    for env in envelopes {
        if env.min_rates.len() != observed.len() {
            return Err(Error::invalid(format!(
                "envelope covers {} ranks but the profile has {}",
                env.min_rates.len(),
                observed.len()
            )));
        }
        let uncovered: Vec<usize> = observed
            .iter()
            .enumerate()
            .filter(|&(r, &x)| x < env.min_rates[r] - TOL || x > env.max_rates[r] + TOL)
            .map(|(r, _)| r + 1)
            .collect();
        uncovered_per_phi.push((env.phi, uncovered));
    }
    let ranks = observed.len();
    let found = uncovered_per_phi.iter().position(|(_, u)| u.is_empty());
    let (idx, status) = match found {
        Some(i) => (i, EstimateStatus::Found),
        None => {
            // fewest uncovered; earliest (smallest phi) on ties
            let best = uncovered_per_phi
                .iter()
                .enumerate()
                .min_by_key(|(i, (_, u))| (u.len(), *i))
                .map(|(i, _)| i)
                .unwrap_or(0);
            (best, EstimateStatus::NotFound)
        }
    };
    let best_coverage = ranks
        - uncovered_per_phi
            .iter()
            .map(|(_, u)| u.len())
            .min()
            .unwrap_or(ranks);
    Ok(PhiEstimate {
        phi: envelopes[idx].phi,
        method: PhiMethod::Envelope,
        status,
        diagnostics: PhiDiagnostics::Envelope {
            uncovered: uncovered_per_phi,
            best_coverage,
            ranks,
        },
    })
}

pub fn calibrate_phi_envelope(
    profile: &ObservedNeighborhoodProfile,
    phi_grid: &[f64],
    n_sims: usize,
    base_seed: u64,
) -> Result<PhiEstimate> {
    calibrate_phi_envelope_with_size(
        profile,
        phi_grid,
        n_sims,
        base_seed,
        DEFAULT_SIM_PROPERTIES_PER,
    )
}

pub fn calibrate_phi_envelope_with_size(
    profile: &ObservedNeighborhoodProfile,
    phi_grid: &[f64],
    n_sims: usize,
    base_seed: u64,
    properties_per: usize,
) -> Result<PhiEstimate> {
    let config = profile.simulation_config(properties_per)?;
    envelope_estimate(
        profile,
        &simulate_envelopes(&config, phi_grid, n_sims, base_seed)?,
    )
}

/// Inverts a simulated Gini curve at the profile's observed Gini.
///
/// The curve's means are first made monotone by weighted PAV, in the
/// direction of their overall trend from the first grid value to the last,
/// then the first bracketing grid interval is linearly interpolated.
pub fn gini_estimate(
    profile: &ObservedNeighborhoodProfile,
    curve: &[GiniCurveRow],
) -> Result<PhiEstimate> {
    if curve.is_empty() {
        return Err(Error::invalid("empty Gini curve"));
    }
    let observed = profile.gini()?;
    let last = curve.len() - 1;
    // orient so the smoothed curve is nondecreasing along the grid
    let sign = if curve[last].mean < curve[0].mean {
        -1.0
    } else {
        1.0
    };
    let means = pav(
        &curve.iter().map(|r| sign * r.mean).collect::<Vec<_>>(),
        &vec![1.0; curve.len()],
    );
    let target = sign * observed;
    let estimate = |phi, fitted: f64, status| PhiEstimate {
        phi,
        method: PhiMethod::GiniMatch,
        status,
        diagnostics: PhiDiagnostics::GiniMatch {
            observed,
            fitted: sign * fitted,
        },
    };
    if target < means[0] {
        return Ok(estimate(curve[0].phi, means[0], EstimateStatus::OutOfRange));
    }
    if target > means[last] {
        return Ok(estimate(
            curve[last].phi,
            means[last],
            EstimateStatus::OutOfRange,
        ));
    }
    for i in 0..last {
        let (g0, g1) = (means[i], means[i + 1]);
        if target >= g0 && target <= g1 {
            let (p0, p1) = (curve[i].phi, curve[i + 1].phi);
            let phi = if g1 > g0 {
                p0 + (target - g0) / (g1 - g0) * (p1 - p0)
            } else {
                p0
            };
            return Ok(estimate(phi, target, EstimateStatus::Found));
        }
    }
    // single-point curve equal to the observation
    Ok(estimate(curve[0].phi, means[0], EstimateStatus::Found))
}

/// Envelopes and Gini curve computed together.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationTables {
    pub envelopes: Vec<PhiEnvelope>,
    pub gini_curve: Vec<GiniCurveRow>,
}

/// Same output as [`simulate_envelopes`] and [`gini_curve`] with the same
/// seed, but every city is drawn once and feeds both tables.
pub fn simulate_calibration(
    config: &CityConfig,
    phi_grid: &[f64],
    n_sims: usize,
    gini_samples: usize,
    base_seed: u64,
) -> Result<CalibrationTables> {
    check_grid(phi_grid)?;
    if n_sims == 0 || gini_samples == 0 {
        return Err(Error::invalid("n_sims and gini_samples must be at least 1"));
    }
    let per_point: Vec<(PhiEnvelope, GiniCurveRow)> = phi_grid
        .par_iter()
        .enumerate()
        .map(|(g, &phi)| {
            let ranks = config.num_neighborhoods();
            let mut min_rates = vec![f64::INFINITY; ranks];
            let mut max_rates = vec![f64::NEG_INFINITY; ranks];
            let mut ginis = Vec::with_capacity(gini_samples);
            for s in 0..n_sims.max(gini_samples) {
                let mut rng = stream_rng(base_seed, &[g as u64, s as u64]);
                let stats = neighborhood_stats(&sample_city(config, phi, &mut rng)?);
                if s < gini_samples {
                    ginis.push(gini_of_counts(&stats.high_risk_counts)?);
                }
                if s < n_sims {
                    for (r, rate) in sorted_desc(stats.high_risk_rates).into_iter().enumerate() {
                        min_rates[r] = min_rates[r].min(rate);
                        max_rates[r] = max_rates[r].max(rate);
                    }
                }
            }
            Ok((
                PhiEnvelope {
                    phi,
                    min_rates,
                    max_rates,
                },
                GiniCurveRow::summarize(phi, &ginis),
            ))
        })
        .collect::<Result<_>>()?;
    let (envelopes, gini_curve) = per_point.into_iter().unzip();
    Ok(CalibrationTables {
        envelopes,
        gini_curve,
    })
}

pub fn calibrate_phi_gini(
    profile: &ObservedNeighborhoodProfile,
    phi_grid: &[f64],
    samples: usize,
    base_seed: u64,
) -> Result<PhiEstimate> {
    calibrate_phi_gini_with_size(
        profile,
        phi_grid,
        samples,
        base_seed,
        DEFAULT_SIM_PROPERTIES_PER,
    )
}

pub fn calibrate_phi_gini_with_size(
    profile: &ObservedNeighborhoodProfile,
    phi_grid: &[f64],
    samples: usize,
    base_seed: u64,
    properties_per: usize,
) -> Result<PhiEstimate> {
    check_grid(phi_grid)?;
    let config = profile.simulation_config(properties_per)?;
    gini_estimate(profile, &gini_curve(&config, phi_grid, samples, base_seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::Ranking;
    use crate::spatial::assign_to_neighborhoods;
    use approx::assert_relative_eq;

    #[test]
    fn default_grid_shape() {
        let g = default_phi_grid();
        assert_eq!(g.len(), 200);
        assert_relative_eq!(g[0], 0.5, max_relative = 1e-12);
        assert_eq!(*g.last().unwrap(), 0.9999);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        // denser near 1
        assert!(g[199] - g[198] < g[1] - g[0]);
    }

    #[test]
    fn gini_curve_at_zero_is_closed_form() {
        let cfg = CityConfig::uniform(30, 20, 0.2).unwrap();
        let rows = gini_curve(&cfg, &[0.0], 5, 3).unwrap();
        assert_eq!(rows[0].mean, 0.8);
        assert_eq!(rows[0].min, rows[0].max);
        assert!(gini_curve(&cfg, &[], 5, 3).is_err());
        assert!(gini_curve(&cfg, &[0.5], 0, 3).is_err());
    }

    #[test]
    fn gini_curve_is_reproducible_and_falls_with_phi() {
        let cfg = CityConfig::uniform(30, 20, 0.2).unwrap();
        let grid = [0.3, 0.9, 0.999];
        let a = gini_curve(&cfg, &grid, 50, 8).unwrap();
        assert_eq!(a, gini_curve(&cfg, &grid, 50, 8).unwrap());
        // Gini of counts falls as High-Risk properties spread out
        assert!(a[0].mean > a[1].mean && a[1].mean > a[2].mean);
    }

    #[test]
    fn profile_validation_and_filtering() {
        let p = ObservedNeighborhoodProfile::new(vec![4, 0, 3], vec![40, 35, 10]).unwrap();
        assert_relative_eq!(p.high_risk_fraction(), 7.0 / 85.0);
        let f = p.filtered(30).unwrap();
        assert_eq!(f.totals(), &[40, 35]);
        assert_eq!(f.rates_by_rank(), vec![0.1, 0.0]);
        assert!(ObservedNeighborhoodProfile::new(vec![5], vec![4]).is_err());
        assert!(ObservedNeighborhoodProfile::new(vec![0, 0], vec![4, 4]).is_err());
        assert!(ObservedNeighborhoodProfile::new(vec![], vec![]).is_err());
    }

    fn homogeneous_profile(n_nb: usize, per: usize, fraction: f64) -> ObservedNeighborhoodProfile {
        let cfg = CityConfig::uniform(n_nb, per, fraction).unwrap();
        let m = assign_to_neighborhoods(&Ranking::identity(n_nb * per).unwrap(), &cfg).unwrap();
        ObservedNeighborhoodProfile::from_model(&m)
    }

    #[test]
    fn envelope_homogeneous_profile_returns_grid_minimum() {
        let profile = homogeneous_profile(10, 100, 0.2);
        let grid = [0.0, 0.5, 0.9];
        let est = calibrate_phi_envelope(&profile, &grid, 50, 1).unwrap();
        assert_eq!(est.status, EstimateStatus::Found);
        assert_eq!(est.phi, 0.0);
    }

    #[test]
    fn envelope_reports_best_coverage_when_nothing_covers() {
        let profile = ObservedNeighborhoodProfile::new(vec![50, 50, 0, 0], vec![100; 4]).unwrap();
        // fraction 0.25 homogeneous puts 100 in one block: rank 1 rate 1.0, rank 2 rate 0
        let est = calibrate_phi_envelope(&profile, &[0.0], 5, 1).unwrap();
        assert_eq!(est.status, EstimateStatus::NotFound);
        match est.diagnostics {
            PhiDiagnostics::Envelope {
                best_coverage,
                ranks,
                ref uncovered,
            } => {
                assert_eq!(ranks, 4);
                assert_eq!(best_coverage, 2);
                assert_eq!(uncovered[0].1, vec![1, 2]);
            }
            _ => panic!("wrong diagnostics"),
        }
    }

    #[test]
    fn gini_estimate_interpolates_and_flags_range() {
        let curve = vec![
            GiniCurveRow {
                phi: 0.5,
                mean: 0.2,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.7,
                mean: 0.4,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.9,
                mean: 0.6,
                min: 0.0,
                max: 0.0,
            },
        ];
        // rates (0.5, 0.5, 0.25, 0.25): Gini = 1/6
        let p = ObservedNeighborhoodProfile::new(vec![2, 2, 1, 1], vec![4; 4]).unwrap();
        assert_relative_eq!(p.gini().unwrap(), 1.0 / 6.0, max_relative = 1e-12);
        let est = gini_estimate(&p, &curve).unwrap();
        assert_eq!(est.status, EstimateStatus::OutOfRange);
        assert_eq!(est.phi, 0.5);

        let p = ObservedNeighborhoodProfile::new(vec![4, 2, 0, 0], vec![4; 4]).unwrap();
        let g = p.gini().unwrap();
        assert_relative_eq!(g, 7.0 / 12.0, max_relative = 1e-12);
        let est = gini_estimate(&p, &curve).unwrap();
        assert_eq!(est.status, EstimateStatus::Found);
        assert_relative_eq!(est.phi, 0.7 + (g - 0.4), max_relative = 1e-12);

        let p = ObservedNeighborhoodProfile::new(vec![4, 0, 0, 0], vec![4; 4]).unwrap();
        let est = gini_estimate(&p, &curve).unwrap();
        assert_eq!((est.status, est.phi), (EstimateStatus::OutOfRange, 0.9));
    }

    #[test]
    fn gini_estimate_follows_a_decreasing_curve() {
        let curve = vec![
            GiniCurveRow {
                phi: 0.5,
                mean: 0.6,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.7,
                mean: 0.4,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.9,
                mean: 0.2,
                min: 0.0,
                max: 0.0,
            },
        ];
        let p = ObservedNeighborhoodProfile::new(vec![4, 2, 0, 0], vec![4; 4]).unwrap();
        let est = gini_estimate(&p, &curve).unwrap();
        assert_eq!(est.status, EstimateStatus::Found);
        assert_relative_eq!(est.phi, 0.5 + (0.6 - 7.0 / 12.0), max_relative = 1e-12);
        match est.diagnostics {
            PhiDiagnostics::GiniMatch { observed, fitted } => assert_eq!(observed, fitted),
            _ => panic!("wrong diagnostics"),
        }
        // above the whole curve: the least dispersed end
        let p = ObservedNeighborhoodProfile::new(vec![4, 0, 0, 0], vec![4; 4]).unwrap();
        let est = gini_estimate(&p, &curve).unwrap();
        assert_eq!((est.status, est.phi), (EstimateStatus::OutOfRange, 0.5));
        // G = 0 lies below it: the most dispersed end
        let p = ObservedNeighborhoodProfile::new(vec![1, 1, 1, 1], vec![4; 4]).unwrap();
        let est = gini_estimate(&p, &curve).unwrap();
        assert_eq!((est.status, est.phi), (EstimateStatus::OutOfRange, 0.9));
    }

    #[test]
    fn combined_pass_matches_separate_simulations() {
        let cfg = CityConfig::uniform(6, 10, 0.15).unwrap();
        let grid = [0.6, 0.9, 0.99];
        let t = simulate_calibration(&cfg, &grid, 7, 4, 21).unwrap();
        assert_eq!(t.envelopes, simulate_envelopes(&cfg, &grid, 7, 21).unwrap());
        assert_eq!(t.gini_curve, gini_curve(&cfg, &grid, 4, 21).unwrap());
        let t = simulate_calibration(&cfg, &grid, 3, 9, 21).unwrap();
        assert_eq!(t.envelopes, simulate_envelopes(&cfg, &grid, 3, 21).unwrap());
        assert_eq!(t.gini_curve, gini_curve(&cfg, &grid, 9, 21).unwrap());
    }

    #[test]
    fn gini_estimate_smooths_noisy_curve() {
        let curve = vec![
            GiniCurveRow {
                phi: 0.1,
                mean: 0.3,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.2,
                mean: 0.5,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.3,
                mean: 0.4,
                min: 0.0,
                max: 0.0,
            },
            GiniCurveRow {
                phi: 0.4,
                mean: 0.7,
                min: 0.0,
                max: 0.0,
            },
        ];
        let p = ObservedNeighborhoodProfile::new(vec![4, 2, 0, 0], vec![4; 4]).unwrap();
        let est = gini_estimate(&p, &curve).unwrap();
        // pooled means (0.3, 0.45, 0.45, 0.7); observed 7/12 lies on the last segment
        assert_relative_eq!(
            est.phi,
            0.3 + (7.0 / 12.0 - 0.45) / 0.25 * 0.1,
            max_relative = 1e-12
        );
    }
}
