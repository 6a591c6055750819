//! Mapping raw risk scores to eviction probabilities.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const PLATT_MAX_ITER: usize = 100;
const PLATT_TOL: f64 = 1e-10;
const PLATT_MIN_STEP: f64 = 1e-10;
const PLATT_RIDGE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CalibratorKind {
    Platt,
    Isotonic,
}

impl CalibratorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CalibratorKind::Platt => "platt",
            CalibratorKind::Isotonic => "isotonic",
        }
    }
}

impl fmt::Display for CalibratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted score-to-probability map.
#[derive(Clone, Debug, PartialEq)]
pub enum CalibratorFn {
    /// `1 / (1 + exp(-(slope * score + intercept)))`
    Platt { slope: f64, intercept: f64 },
    /// Nondecreasing step function: `values[i]` applies from `breakpoints[i]`
    /// up to the next breakpoint; clamped at both ends.
    Isotonic {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl CalibratorFn {
    pub fn kind(&self) -> CalibratorKind {
        match self {
            CalibratorFn::Platt { .. } => CalibratorKind::Platt,
            CalibratorFn::Isotonic { .. } => CalibratorKind::Isotonic,
        }
    }

    pub fn apply(&self, score: f64) -> f64 {
        match self {
            CalibratorFn::Platt { slope, intercept } => sigmoid(slope * score + intercept),
            CalibratorFn::Isotonic {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b <= score);
                values[idx.saturating_sub(1)]
            }
        }
    }

    pub fn apply_all(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply(s)).collect()
    }

    /// Plain-text `key=value` form, one key per line.
    pub fn to_text(&self) -> String {
        fn join(xs: &[f64]) -> String {
            xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            CalibratorFn::Platt { slope, intercept } => {
                format!("kind=platt\nslope={slope}\nintercept={intercept}\n")
            }
            CalibratorFn::Isotonic {
                breakpoints,
                values,
            } => format!(
                "kind=isotonic\nbreakpoints={}\nvalues={}\n",
                join(breakpoints),
                join(values)
            ),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut fields = std::collections::HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::data(format!(
                    "calibrator line {}: expected key=value",
                    lineno + 1
                ))
            })?;
            if k.trim() == "kind" {
                kind = Some(v.trim().to_string());
            } else {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let field = |name: &str| {
            fields
                .get(name)
                .ok_or_else(|| Error::data(format!("calibrator is missing '{name}'")))
        };
        let number = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::data(format!("calibrator value '{s}' is not a number")))
        };
        let list = |s: &str| -> Result<Vec<f64>> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',').map(|x| number(x.trim())).collect()
        };
        match kind.as_deref() {
            Some("platt") => {
                let slope = number(field("slope")?)?;
                let intercept = number(field("intercept")?)?;
                if !(slope.is_finite() && intercept.is_finite()) {
                    return Err(Error::data("Platt parameters must be finite"));
                }
                Ok(CalibratorFn::Platt { slope, intercept })
            }
            Some("isotonic") => {
                let breakpoints = list(field("breakpoints")?)?;
                let values = list(field("values")?)?;
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::data(
                        "isotonic calibrator needs equally many breakpoints and values",
                    ));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::data(
                        "isotonic breakpoints must be strictly increasing",
                    ));
                }
                if values.windows(2).any(|w| w[1] < w[0])
                    || values.iter().any(|v| !(0.0..=1.0).contains(v))
                {
                    return Err(Error::data(
                        "isotonic values must be nondecreasing and within [0, 1]",
                    ));
                }
                Ok(CalibratorFn::Isotonic {
                    breakpoints,
                    values,
                })
            }
            Some(other) => Err(Error::data(format!("unknown calibrator kind '{other}'"))),
            None => Err(Error::data("calibrator is missing 'kind'")),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_pairs(scores: &[f64], outcomes_len: usize) -> Result<()> {
    if scores.len() != outcomes_len {
        return Err(Error::invalid(format!(
            "{} scores but {} outcomes",
            scores.len(),
            outcomes_len
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::data("scores must be finite"));
    }
    Ok(())
}

/// Maximum-likelihood sigmoid fit of `outcomes` on `scores`.
///
/// Targets are Platt's prior-corrected labels `(N+ + 1) / (N+ + 2)` and
/// `1 / (N- + 2)`, which keep the fit finite on separable data. Damped Newton
/// with backtracking, stopping when the log-likelihood gains less than 1e-10
/// or after 100 iterations.
pub fn platt_scaling(scores: &[f64], outcomes: &[bool]) -> Result<CalibratorFn> {
    check_pairs(scores, outcomes.len())?;
    if scores.len() < 2 {
        return Err(Error::DegenerateFit(
            "Platt scaling needs at least two samples".into(),
        ));
    }
    let n_pos = outcomes.iter().filter(|&&y| y).count();
    let n_neg = outcomes.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateFit(
            "Platt scaling needs both outcome classes".into(),
        ));
    }
    let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let lo = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = outcomes.iter().map(|&y| if y { hi } else { lo }).collect();

    if scores.iter().all(|&s| s == scores[0]) {
        // slope is unidentifiable; fit the intercept alone
        let mean_t = targets.iter().sum::<f64>() / targets.len() as f64;
        let intercept = (mean_t / (1.0 - mean_t)).ln();
        return Ok(CalibratorFn::Platt {
            slope: 0.0,
            intercept,
        });
    }

    let mut intercept = ((n_pos as f64 + 1.0) / (n_neg as f64 + 1.0)).ln();

    let nll = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| {
                let z = a * s + b;
                t * softplus(-z) + (1.0 - t) * softplus(z)
            })
            .sum()
    };

    let mut slope = 0.0;
    let mut f = nll(slope, intercept);
    for _ in 0..PLATT_MAX_ITER {
        let (mut g_a, mut g_b, mut h_aa, mut h_ab, mut h_bb) =
            (0.0, 0.0, PLATT_RIDGE, 0.0, PLATT_RIDGE);
        for (&s, &t) in scores.iter().zip(&targets) {
            let p = sigmoid(slope * s + intercept);
            let w = p * (1.0 - p);
            g_a += (p - t) * s;
            g_b += p - t;
            h_aa += w * s * s;
            h_ab += w * s;
            h_bb += w;
        }
        let det = h_aa * h_bb - h_ab * h_ab;
        if det.is_nan() || det <= 0.0 {
            break;
        }
        let d_a = -(h_bb * g_a - h_ab * g_b) / det;
        let d_b = -(h_aa * g_b - h_ab * g_a) / det;
        let slope_dir = g_a * d_a + g_b * d_b;

        let mut step = 1.0;
        let mut accepted = None;
        while step >= PLATT_MIN_STEP {
            let (a, b) = (slope + step * d_a, intercept + step * d_b);
            let f_new = nll(a, b);
            if f_new <= f + 1e-4 * step * slope_dir {
                accepted = Some((a, b, f_new));
                break;
            }
            step /= 2.0;
        }
        let Some((a, b, f_new)) = accepted else {
            break;
        };
        let gain = f - f_new;
        slope = a;
        intercept = b;
        f = f_new;
        if gain < PLATT_TOL {
            break;
        }
    }
    if !(slope.is_finite() && intercept.is_finite()) {
        return Err(Error::DegenerateFit("Platt fit diverged".into()));
    }
    Ok(CalibratorFn::Platt { slope, intercept })
}

/// Weighted pool-adjacent-violators: the nondecreasing sequence minimizing
/// `sum_i w_i (fit_i - y_i)^2`.
pub fn pav(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // (mean, weight, number of inputs pooled)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&y, &w) in values.iter().zip(weights) {
        let mut cur = (y, w, 1usize);
        while let Some(&(m, wt, len)) = blocks.last() {
            if m < cur.0 {
                break;
            }
            blocks.pop();
            let total = wt + cur.1;
            cur = ((m * wt + cur.0 * cur.1) / total, total, len + cur.2);
        }
        blocks.push(cur);
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat_n(m, len))
        .collect()
}

/// Least-squares monotone fit of `outcomes` against `scores`.
///
/// Points are sorted by score and equal scores are pooled to their mean
/// before PAV, so the fit is a function of the score.
pub fn isotonic_regression(scores: &[f64], outcomes: &[f64]) -> Result<CalibratorFn> {
    check_pairs(scores, outcomes.len())?;
    if scores.is_empty() {
        return Err(Error::invalid(
            "isotonic regression needs at least one sample",
        ));
    }
    if outcomes.iter().any(|y| !(0.0..=1.0).contains(y)) {
        return Err(Error::data("outcomes must lie in [0, 1]"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut breakpoints = Vec::new();
    let mut means = Vec::new();
    let mut weights = Vec::new();
    for group in idx.chunk_by(|&a, &b| scores[a] == scores[b]) {
        breakpoints.push(scores[group[0]]);
        means.push(group.iter().map(|&i| outcomes[i]).sum::<f64>() / group.len() as f64);
        weights.push(group.len() as f64);
    }
    let values = pav(&means, &weights)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Ok(CalibratorFn::Isotonic {
        breakpoints,
        values,
    })
}

/// Convenience wrapper for binary outcomes.
pub fn isotonic_regression_bits(scores: &[f64], outcomes: &[bool]) -> Result<CalibratorFn> {
    let ys: Vec<f64> = outcomes.iter().map(|&y| f64::from(u8::from(y))).collect();
    isotonic_regression(scores, &ys)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binning {
    /// Consecutive bins of this many samples in score order; the last may be smaller.
    EqualFrequency(usize),
    /// This many equal-width bins over the observed score range.
    EqualWidth(usize),
}

impl FromStr for Binning {
    type Err = Error;

    /// `freq:<size>` or `width:<count>`.
    fn from_str(s: &str) -> Result<Self> {
        let (mode, n) = s.split_once(':').ok_or_else(|| {
            Error::invalid(format!(
                "binning '{s}' should be freq:<size> or width:<count>"
            ))
        })?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::invalid(format!("binning size '{n}' is not an integer")))?;
        match mode {
            "freq" => Ok(Binning::EqualFrequency(n)),
            "width" => Ok(Binning::EqualWidth(n)),
            _ => Err(Error::invalid(format!("unknown binning mode '{mode}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityBin {
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub mean_predicted: f64,
    pub empirical_rate: f64,
    pub count: usize,
}

/// Mean prediction and observed outcome rate per bin, bins in score order.
/// Empty equal-width bins are omitted.
pub fn reliability_curve(
    predictions: &[f64],
    outcomes: &[bool],
    binning: Binning,
) -> Result<Vec<ReliabilityBin>> {
    check_pairs(predictions, outcomes.len())?;
    let groups: Vec<Vec<usize>> = match binning {
        Binning::EqualFrequency(0) | Binning::EqualWidth(0) => {
            return Err(Error::invalid("binning parameter must be at least 1"));
        }
        Binning::EqualFrequency(size) => {
            let mut idx: Vec<usize> = (0..predictions.len()).collect();
            idx.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]).then(a.cmp(&b)));
            idx.chunks(size).map(<[usize]>::to_vec).collect()
        }
        Binning::EqualWidth(count) => {
            if predictions.is_empty() {
                return Ok(Vec::new());
            }
            let lo = predictions.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = predictions
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut bins = vec![Vec::new(); count];
            for (i, &x) in predictions.iter().enumerate() {
                let b = if hi > lo {
                    (((x - lo) / (hi - lo)) * count as f64) as usize
                } else {
                    0
                };
                bins[b.min(count - 1)].push(i);
            }
            bins
        }
    };
    Ok(groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .enumerate()
        .map(|(bin, g)| {
            let n = g.len() as f64;
            ReliabilityBin {
                bin,
                lower: g
                    .iter()
                    .map(|&i| predictions[i])
                    .fold(f64::INFINITY, f64::min),
                upper: g
                    .iter()
                    .map(|&i| predictions[i])
                    .fold(f64::NEG_INFINITY, f64::max),
                mean_predicted: g.iter().map(|&i| predictions[i]).sum::<f64>() / n,
                empirical_rate: g.iter().filter(|&&i| outcomes[i]).count() as f64 / n,
                count: g.len(),
            }
        })
        .collect())
}
