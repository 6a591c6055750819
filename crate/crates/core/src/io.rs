//! Property-file ingestion, CSV result tables and run manifests.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::calibration::{
    GiniCurveRow, ObservedNeighborhoodProfile, PhiDiagnostics, PhiEstimate, ReliabilityBin,
};
use crate::error::{Error, Result};
use crate::evaluation::SweepRow;
use crate::policy::CanvassPlan;
use crate::ranking::Ranking;
use crate::spatial::{assign_to_neighborhoods, CityConfig, CityModel};

pub const PROPERTY_COLUMNS: [&str; 6] = [
    "property_id",
    "neighborhood_id",
    "risk_score",
    "high_risk",
    "evicted",
    "prior_evictions_neighborhood",
];
const REQUIRED_COLUMNS: usize = 4;

/// One row of a property file.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyRecord {
    pub property_id: String,
    pub neighborhood_id: String,
    pub risk_score: f64,
    pub high_risk: bool,
    pub evicted: Option<bool>,
    pub prior_evictions_neighborhood: Option<u64>,
}

/// A property file turned into a ranked city.
#[derive(Clone, Debug)]
pub struct LoadedCity {
    /// Ranks by descending risk score (ties by property id); neighborhoods in
    /// order of first appearance; High-Risk cutoff = number of `high_risk` rows.
    pub model: CityModel,
    pub profile: ObservedNeighborhoodProfile,
    /// `property_ids[rank - 1]`.
    pub property_ids: Vec<String>,
    /// `outcomes[rank - 1]`, or `None` without an `evicted` column.
    pub outcomes: Option<Vec<Option<bool>>>,
    /// Per neighborhood, when every retained neighborhood carries a value.
    pub prior_evictions: Option<Vec<u64>>,
    pub dropped_neighborhoods: usize,
    pub dropped_properties: usize,
    /// Properties whose `high_risk` flag disagrees with their rank.
    pub label_mismatches: usize,
}

fn parse_bit(field: &str) -> std::result::Result<bool, String> {
    match field.trim() {
        "1" | "true" | "TRUE" | "True" => Ok(true),
        "0" | "false" | "FALSE" | "False" => Ok(false),
        other => Err(format!("expected 0 or 1, found '{other}'")),
    }
}

/// Parses every row of a property file.
pub fn read_property_records(path: &Path) -> Result<Vec<PropertyRecord>> {
    let file = File::open(path)?;
    if file.metadata()?.len() == 0 {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [None; 6];
    for (slot, name) in idx.iter_mut().zip(PROPERTY_COLUMNS) {
        *slot = column(name);
    }
    if let Some(missing) = (0..REQUIRED_COLUMNS).find(|&c| idx[c].is_none()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing required column '{}'", PROPERTY_COLUMNS[missing]),
        });
    }
    let req = |c: usize| idx[c].expect("required column");

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |c: usize| row.get(c).unwrap_or("");
        let property_id = field(req(0)).to_string();
        if property_id.is_empty() {
            return Err(fail("empty property_id".into()));
        }
        let neighborhood_id = field(req(1)).to_string();
        if neighborhood_id.is_empty() {
            return Err(fail("empty neighborhood_id".into()));
        }
        let risk_score: f64 = field(req(2))
            .parse()
            .map_err(|_| fail(format!("risk_score '{}' is not a number", field(req(2)))))?;
        if !risk_score.is_finite() {
            return Err(fail(format!(
                "risk_score '{}' is not finite",
                field(req(2))
            )));
        }
        let high_risk = parse_bit(field(req(3))).map_err(|m| fail(format!("high_risk: {m}")))?;
        let evicted = match idx[4].map(field).filter(|s| !s.is_empty()) {
            Some(s) => Some(parse_bit(s).map_err(|m| fail(format!("evicted: {m}")))?),
            None => None,
        };
        let prior_evictions_neighborhood =
            match idx[5].map(field).filter(|s| !s.is_empty()) {
                Some(s) => Some(s.parse().map_err(|_| {
                    fail(format!("prior_evictions_neighborhood '{s}' is not a count"))
                })?),
                None => None,
            };
        records.push(PropertyRecord {
            property_id,
            neighborhood_id,
            risk_score,
            high_risk,
            evicted,
            prior_evictions_neighborhood,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    Ok(records)
}

/// Reads a property file, dropping neighborhoods with fewer than
/// `min_neighborhood_size` properties.
pub fn load_properties(path: &Path, min_neighborhood_size: usize) -> Result<LoadedCity> {
    let records = read_property_records(path)?;
    let has_outcomes = records.iter().any(|r| r.evicted.is_some());
    city_from_records(records, min_neighborhood_size, has_outcomes)
}

fn city_from_records(
    records: Vec<PropertyRecord>,
    min_size: usize,
    has_outcomes: bool,
) -> Result<LoadedCity> {
    let mut seen = HashMap::with_capacity(records.len());
    for r in &records {
        if seen.insert(r.property_id.as_str(), ()).is_some() {
            return Err(Error::data(format!(
                "duplicate property_id '{}'",
                r.property_id
            )));
        }
    }

    let mut order: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        members
            .entry(r.neighborhood_id.as_str())
            .or_insert_with(|| {
                order.push(r.neighborhood_id.as_str());
                Vec::new()
            })
            .push(i);
    }
    let (kept, dropped): (Vec<&str>, Vec<&str>) = order
        .into_iter()
        .partition(|id| members[id].len() >= min_size);
    let dropped_properties: usize = dropped.iter().map(|id| members[id].len()).sum();
    if !dropped.is_empty() {
        log::info!(
            "dropped {} neighborhoods ({} properties) below size {min_size}",
            dropped.len(),
            dropped_properties
        );
    }
    if kept.is_empty() {
        return Err(Error::data(format!(
            "no neighborhood has at least {min_size} properties"
        )));
    }

    // slot order: neighborhoods in first-appearance order, file order within each
    let slots: Vec<usize> = kept
        .iter()
        .flat_map(|id| members[id].iter().copied())
        .collect();
    let mut by_risk = slots.clone();
    by_risk.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        rb.risk_score
            .total_cmp(&ra.risk_score)
            .then_with(|| ra.property_id.cmp(&rb.property_id))
    });
    let mut rank_of = vec![0usize; records.len()];
    for (i, &rec) in by_risk.iter().enumerate() {
        rank_of[rec] = i + 1;
    }

    let high_risk_total = slots.iter().filter(|&&i| records[i].high_risk).count();
    if high_risk_total == 0 {
        return Err(Error::data("no retained property is labeled high_risk"));
    }
    let label_mismatches = by_risk
        .iter()
        .enumerate()
        .filter(|&(i, &rec)| records[rec].high_risk != (i < high_risk_total))
        .count();
    if label_mismatches > 0 {
        log::warn!(
            "{label_mismatches} high_risk labels disagree with the top-{high_risk_total} risk-score cutoff"
        );
    }

    let sizes: Vec<usize> = kept.iter().map(|id| members[id].len()).collect();
    let total = slots.len();
    let config = CityConfig::with_sizes(sizes, high_risk_total as f64 / total as f64)?;
    let ranking = Ranking::new(slots.iter().map(|&i| rank_of[i]).collect())?;
    let model = assign_to_neighborhoods(&ranking, &config)?
        .with_risk_scores(by_risk.iter().map(|&i| records[i].risk_score).collect())?
        .with_neighborhood_ids(kept.iter().map(|s| s.to_string()).collect())?;
    if model.high_risk_cutoff() != high_risk_total {
        return Err(Error::data(
            "High-Risk cutoff does not reproduce the labeled count",
        ));
    }

    let outcomes = has_outcomes.then(|| by_risk.iter().map(|&i| records[i].evicted).collect());
    let mut prior = Vec::with_capacity(kept.len());
    for id in &kept {
        let values: Vec<u64> = members[id]
            .iter()
            .filter_map(|&i| records[i].prior_evictions_neighborhood)
            .collect();
        if values.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::data(format!(
                "neighborhood '{id}' has conflicting prior_evictions_neighborhood values"
            )));
        }
        prior.push(values.first().copied());
    }
    let prior_evictions = prior
        .iter()
        .all(Option::is_some)
        .then(|| prior.into_iter().flatten().collect());

    Ok(LoadedCity {
        profile: ObservedNeighborhoodProfile::from_model(&model),
        model,
        property_ids: by_risk
            .iter()
            .map(|&i| records[i].property_id.clone())
            .collect(),
        outcomes,
        prior_evictions,
        dropped_neighborhoods: dropped.len(),
        dropped_properties,
        label_mismatches,
    })
}

/// Property rows reproducing `model` when loaded back: neighborhoods and slots
/// in model order, ids `p<rank>`, and risk scores taken from the model or
/// else `1 - (rank - 1) / total`.
pub fn city_records(
    model: &CityModel,
    outcomes: Option<&[bool]>,
    prior_evictions: Option<&[u64]>,
) -> Vec<PropertyRecord> {
    let total = model.total_properties();
    let width = total.to_string().len();
    let score = |rank: usize| match model.risk_scores() {
        Some(s) => s[rank - 1],
        None => 1.0 - (rank - 1) as f64 / total as f64,
    };
    let mut out = Vec::with_capacity(total);
    for (b, block) in model.neighborhoods().iter().enumerate() {
        for &rank in block {
            out.push(PropertyRecord {
                property_id: format!("p{rank:0width$}"),
                neighborhood_id: model.neighborhood_ids()[b].clone(),
                risk_score: score(rank),
                high_risk: model.is_high_risk(rank),
                evicted: outcomes.map(|o| o[rank - 1]),
                prior_evictions_neighborhood: prior_evictions.map(|p| p[b]),
            });
        }
    }
    out
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Writes `path` through a temporary file in the same directory, so readers
/// never observe a partial table.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serializes a header and rows to CSV, then writes it atomically.
pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn write_property_records(path: &Path, records: &[PropertyRecord]) -> Result<()> {
    write_table(
        path,
        &PROPERTY_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.property_id.clone(),
                r.neighborhood_id.clone(),
                r.risk_score.to_string(),
                bit(r.high_risk).into(),
                r.evicted.map_or(String::new(), |e| bit(e).into()),
                r.prior_evictions_neighborhood
                    .map_or(String::new(), |p| p.to_string()),
            ]
        }),
    )
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "phi",
    "N",
    "n",
    "M",
    "alpha",
    "fraction",
    "p",
    "q",
    "policy",
    "mean_rent",
    "stderr_rent",
    "mean_s_b",
    "mean_s_t",
    "replicates",
];

/// Undefined RENT is written as `NA`.
pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_table(
        path,
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            let p = &r.point;
            vec![
                p.phi.to_string(),
                p.neighborhoods.to_string(),
                p.properties_per.to_string(),
                p.m.to_string(),
                p.alpha.to_string(),
                p.fraction.to_string(),
                p.p.to_string(),
                p.q.to_string(),
                p.policy.to_string(),
                opt(r.mean_rent),
                opt(r.stderr_rent),
                r.mean_s_b.to_string(),
                r.mean_s_t.to_string(),
                r.replicates.to_string(),
            ]
        }),
    )
}

pub fn write_plan(path: &Path, model: &CityModel, plan: &CanvassPlan) -> Result<()> {
    write_table(
        path,
        &[
            "visit_index",
            "neighborhood_id",
            "property_rank",
            "high_risk",
            "cumulative_cost",
        ],
        plan.visits
            .iter()
            .zip(plan.cumulative_costs())
            .enumerate()
            .map(|(i, (v, cost))| {
                vec![
                    (i + 1).to_string(),
                    model.neighborhood_ids()[v.neighborhood].clone(),
                    v.rank.to_string(),
                    bit(v.high_risk).into(),
                    cost.to_string(),
                ]
            }),
    )
}

pub fn write_city_snapshot(path: &Path, model: &CityModel) -> Result<()> {
    let rows = model
        .neighborhoods()
        .iter()
        .enumerate()
        .flat_map(|(b, block)| {
            block.iter().map(move |&rank| {
                vec![
                    model.neighborhood_ids()[b].clone(),
                    rank.to_string(),
                    bit(model.is_high_risk(rank)).into(),
                    opt(model.risk_scores().map(|s| s[rank - 1])),
                ]
            })
        });
    write_table(
        path,
        &[
            "neighborhood_id",
            "property_rank",
            "high_risk",
            "risk_score",
        ],
        rows,
    )
}

pub fn write_gini_curve(path: &Path, rows: &[GiniCurveRow]) -> Result<()> {
    write_table(
        path,
        &["phi", "mean_gini", "min_gini", "max_gini"],
        rows.iter().map(|r| {
            vec![
                r.phi.to_string(),
                r.mean.to_string(),
                r.min.to_string(),
                r.max.to_string(),
            ]
        }),
    )
}

pub fn write_phi_estimates(path: &Path, estimates: &[PhiEstimate]) -> Result<()> {
    write_table(
        path,
        &[
            "method",
            "phi",
            "status",
            "observed_gini",
            "fitted_gini",
            "covered_ranks",
            "ranks",
        ],
        estimates.iter().map(|e| {
            let (obs, fit, covered, ranks) = match &e.diagnostics {
                PhiDiagnostics::GiniMatch { observed, fitted } => (
                    observed.to_string(),
                    fitted.to_string(),
                    "NA".into(),
                    "NA".into(),
                ),
                PhiDiagnostics::Envelope {
                    uncovered,
                    best_coverage,
                    ranks,
                } => {
                    let at_phi = uncovered
                        .iter()
                        .find(|(phi, _)| *phi == e.phi)
                        .map_or(*best_coverage, |(_, u)| ranks - u.len());
                    (
                        "NA".into(),
                        "NA".into(),
                        at_phi.to_string(),
                        ranks.to_string(),
                    )
                }
            };
            vec![
                e.method.to_string(),
                e.phi.to_string(),
                e.status.as_str().into(),
                obs,
                fit,
                covered,
                ranks,
            ]
        }),
    )
}

/// Per-phi envelope coverage: how many observed ranks fall inside.
pub fn write_envelope_coverage(path: &Path, estimate: &PhiEstimate) -> Result<()> {
    let PhiDiagnostics::Envelope {
        uncovered, ranks, ..
    } = &estimate.diagnostics
    else {
        return Err(Error::invalid("not an envelope estimate"));
    };
    write_table(
        path,
        &["phi", "covered_ranks", "ranks", "uncovered"],
        uncovered.iter().map(|(phi, u)| {
            vec![
                phi.to_string(),
                (ranks - u.len()).to_string(),
                ranks.to_string(),
                u.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
            ]
        }),
    )
}

pub fn write_reliability(path: &Path, tables: &[(&str, Vec<ReliabilityBin>)]) -> Result<()> {
    let rows = tables.iter().flat_map(|(name, bins)| {
        bins.iter().map(move |b| {
            vec![
                name.to_string(),
                b.bin.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
                b.mean_predicted.to_string(),
                b.empirical_rate.to_string(),
                b.count.to_string(),
            ]
        })
    });
    write_table(
        path,
        &[
            "calibrator",
            "bin",
            "lower",
            "upper",
            "mean_predicted",
            "empirical_rate",
            "count",
        ],
        rows,
    )
}

/// Parameters of a run, stored as `key=value` lines. `arg` lines hold the
/// command-line arguments (minus the output directory) for replay.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub params: Vec<(String, String)>,
    pub args: Vec<String>,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = format!("command={}\nversion={}\n", self.command, self.version);
        if let Some(seed) = self.seed {
            s += &format!("seed={seed}\n");
        }
        for (k, v) in &self.params {
            s += &format!("param.{k}={v}\n");
        }
        for a in &self.args {
            s += &format!("arg={a}\n");
        }
        for o in &self.outputs {
            s += &format!("output={o}\n");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = Manifest {
            command: String::new(),
            version: String::new(),
            seed: None,
            params: Vec::new(),
            args: Vec::new(),
            outputs: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::data(format!("manifest line {}: expected key=value", i + 1))
            })?;
            match key {
                "command" => m.command = value.into(),
                "version" => m.version = value.into(),
                "seed" => {
                    m.seed =
                        Some(value.parse().map_err(|_| {
                            Error::data(format!("manifest line {}: bad seed", i + 1))
                        })?)
                }
                "arg" => m.args.push(value.into()),
                "output" => m.outputs.push(value.into()),
                k => match k.strip_prefix("param.") {
                    Some(name) => m.params.push((name.into(), value.into())),
                    None => {
                        return Err(Error::data(format!(
                            "manifest line {}: unknown key '{k}'",
                            i + 1
                        )))
                    }
                },
            }
        }
        if m.command.is_empty() {
            return Err(Error::data("manifest has no command"));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut text = String::new();
        for line in BufReader::new(file).lines() {
            text += &line?;
            text.push('\n');
        }
        Self::from_text(&text)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        write_atomic(&path, self.to_text().as_bytes())?;
        Ok(path)
    }
}
