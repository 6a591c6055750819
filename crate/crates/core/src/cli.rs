//! The `rentsim` command line.
//!
//! Every subcommand writes its tables plus a `manifest.txt` into `--out`.
//! `replay --manifest <file>` reruns a recorded invocation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::calibration::{
    default_phi_grid, envelope_estimate, gini_curve, gini_estimate, isotonic_regression_bits,
    platt_scaling, reliability_curve, simulate_calibration, simulate_envelopes, Binning,
    CalibratorFn, ObservedNeighborhoodProfile, PhiEstimate,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    expected_discovered, expected_reduction, realized_discovered, rent, rent_realized, rent_sweep,
    InterventionScenario, OutcomeModel, SweepGrid,
};
use crate::io::{
    city_records, load_properties, write_atomic, write_city_snapshot, write_envelope_coverage,
    write_gini_curve, write_phi_estimates, write_plan, write_property_records, write_reliability,
    write_sweep, write_table, LoadedCity, Manifest, MANIFEST_FILE,
};
use crate::policy::{
    budget_for_neighborhoods, plan, CanvassPlan, CostModel, NeighborhoodOrder, PolicyKind,
};
use crate::seed::stream_rng;
use crate::spatial::{neighborhood_stats, sample_city, CityConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stream coordinates reserved for one-off draws, kept apart from the
/// `(grid, replicate)` streams used by sweeps and calibration.
const SYNTH_CITY_STREAM: u64 = 0x5359_4e54;
const SYNTH_OUTCOME_STREAM: u64 = 0x4f55_5443;
const SYNTH_PRIOR_STREAM: u64 = 0x5052_494f;

#[derive(Debug, Parser)]
#[command(
    name = "rentsim",
    version,
    about = "Spatial eviction-risk simulation and outreach policy evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// RENT sweep over phi and city/cost/outcome parameters.
    Simulate(SimulateArgs),
    /// Mean/min/max Gini of High-Risk counts across a phi grid.
    GiniCurve(GiniCurveArgs),
    /// Estimate phi from a property file or a synthetic city.
    CalibratePhi(CalibratePhiArgs),
    /// Compare policies on a property file.
    Evaluate(EvaluateArgs),
    /// Fit Platt and isotonic calibrators and tabulate reliability.
    CalibrateScores(CalibrateScoresArgs),
    /// Expected eviction reduction per policy under intervention scenarios.
    Utility(UtilityArgs),
    /// Write a synthetic property file.
    Synthesize(SynthesizeArgs),
    /// Rerun the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed for all randomness.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// `lo:hi:steps`, evenly spaced and inclusive.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("grid '{s}' is not lo:hi:steps"));
        let [lo, hi, steps] = parts[..] else {
            return Err(bad());
        };
        let spec = GridSpec {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            steps: steps.parse().map_err(|_| bad())?,
        };
        if spec.steps == 0 || spec.hi < spec.lo || (spec.steps > 1 && spec.hi == spec.lo) {
            return Err(bad());
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    /// Dispersion value (repeatable).
    #[arg(long = "phi", conflicts_with = "phi_grid")]
    pub phi: Vec<f64>,
    /// Evenly spaced grid `lo:hi:steps`.
    #[arg(long = "phi-grid")]
    pub phi_grid: Option<GridSpec>,
}

impl PhiArgs {
    fn values_or(&self, default: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
        match (&self.phi_grid, self.phi.is_empty()) {
            (Some(g), _) => g.values(),
            (None, false) => self.phi.clone(),
            (None, true) => default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub phi: PhiArgs,
    #[arg(long, default_values_t = [50])]
    pub neighborhoods: Vec<usize>,
    #[arg(long = "properties-per", default_values_t = [12])]
    pub properties_per: Vec<usize>,
    #[arg(long, default_values_t = [10])]
    pub m: Vec<usize>,
    #[arg(long, default_values_t = [3.0])]
    pub alpha: Vec<f64>,
    #[arg(long, default_values_t = [0.2])]
    pub fraction: Vec<f64>,
    #[arg(long, default_values_t = [1.0])]
    pub p: Vec<f64>,
    #[arg(long, default_values_t = [0.0])]
    pub q: Vec<f64>,
    #[arg(long, default_values_t = [PolicyKind::Hpt])]
    pub policy: Vec<PolicyKind>,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
}

#[derive(Debug, Args)]
pub struct GiniCurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub phi: PhiArgs,
    #[arg(long, default_value_t = 30)]
    pub neighborhoods: usize,
    #[arg(long = "properties-per", default_value_t = 20)]
    pub properties_per: usize,
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhiMethodArg {
    Both,
    Envelope,
    Gini,
}

#[derive(Debug, Args)]
pub struct CalibratePhiArgs {
    #[command(flatten)]
    pub common: Common,
    /// Property file to calibrate against.
    #[arg(
        long,
        required_unless_present = "target_phi",
        conflicts_with = "target_phi"
    )]
    pub input: Option<PathBuf>,
    /// Calibrate against one synthetic city drawn at this phi instead.
    #[arg(long = "target-phi")]
    pub target_phi: Option<f64>,
    /// Synthetic city shape (with `--target-phi`).
    #[arg(long, default_value_t = 43)]
    pub neighborhoods: usize,
    #[arg(long = "properties-per", default_value_t = 100)]
    pub properties_per: usize,
    #[arg(long, default_value_t = 0.11)]
    pub fraction: f64,
    #[arg(long = "min-neighborhood-size", default_value_t = 30)]
    pub min_neighborhood_size: usize,
    #[command(flatten)]
    pub phi: PhiArgs,
    #[arg(long, value_enum, default_value_t = PhiMethodArg::Both)]
    pub method: PhiMethodArg,
    /// Simulations per grid value for the envelope method.
    #[arg(long, default_value_t = 1000)]
    pub sims: usize,
    /// Samples per grid value for the Gini method.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Neighborhood size of the calibration simulations.
    #[arg(long = "sim-properties-per", default_value_t = 100)]
    pub sim_properties_per: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderingArg {
    /// Prior evictions when the file has them, else High-Risk counts.
    Auto,
    HighRiskCount,
    PriorEvictions,
}

#[derive(Debug, Args)]
pub struct CityInputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "min-neighborhood-size", default_value_t = 30)]
    pub min_neighborhood_size: usize,
    #[arg(long, value_enum, default_value_t = OrderingArg::Auto)]
    pub ordering: OrderingArg,
    /// Budget = cost of fully canvassing the first M neighborhoods (repeatable).
    #[arg(long, default_values_t = [1])]
    pub m: Vec<usize>,
    #[arg(long, default_values_t = [3.0])]
    pub alpha: Vec<f64>,
    /// Targeting policies to compare with non-targeting.
    #[arg(long, default_values_t = [PolicyKind::Hpt, PolicyKind::Tpt])]
    pub policy: Vec<PolicyKind>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub city: CityInputArgs,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    /// Also write every plan to `plans/`.
    #[arg(long = "write-plans")]
    pub write_plans: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateScoresArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "min-neighborhood-size", default_value_t = 30)]
    pub min_neighborhood_size: usize,
    /// `freq:<per-bin count>` or `width:<bins>`.
    #[arg(long, default_value = "freq:30")]
    pub binning: Binning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CalibrationArg {
    Platt,
    Isotonic,
}

#[derive(Debug, Args)]
pub struct UtilityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub city: CityInputArgs,
    /// Saved calibrator; otherwise one is fitted to the file's `evicted` column.
    #[arg(long)]
    pub calibrator: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CalibrationArg::Isotonic, conflicts_with = "calibrator")]
    pub calibration: CalibrationArg,
    /// Relative drop in eviction probability at canvassed properties (repeatable).
    #[arg(long, default_values_t = [0.3, 0.5, 0.7])]
    pub reduction: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub phi: f64,
    #[arg(long, default_value_t = 43)]
    pub neighborhoods: usize,
    #[arg(long = "properties-per", default_value_t = 100)]
    pub properties_per: usize,
    #[arg(long, default_value_t = 0.11)]
    pub fraction: f64,
    /// Eviction probability of High-Risk properties.
    #[arg(long, default_value_t = 0.078)]
    pub p: f64,
    /// Eviction probability of Low-Risk properties.
    #[arg(long, default_value_t = 0.008)]
    pub q: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs; returns the exit code.
/// 0 on success, 2 on usage errors, 1 on everything else.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(cli, &recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rentsim: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Drops `--out <dir>` / `--out=<dir>` so a manifest can be replayed elsewhere.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

pub fn execute(cli: Cli, args: &[String]) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a, args),
        Command::GiniCurve(a) => gini_curve_cmd(&a, args),
        Command::CalibratePhi(a) => calibrate_phi(&a, args),
        Command::Evaluate(a) => evaluate(&a, args),
        Command::CalibrateScores(a) => calibrate_scores(&a, args),
        Command::Utility(a) => utility(&a, args),
        Command::Synthesize(a) => synthesize(&a, args),
        Command::Replay(a) => replay(&a),
    }
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let manifest = Manifest::read(&a.manifest)?;
    if manifest.command == "replay" {
        return Err(Error::invalid("cannot replay a replay"));
    }
    let out = match &a.out {
        Some(o) => o.clone(),
        None => manifest
            .params
            .iter()
            .find(|(k, _)| k == "out")
            .map(|(_, v)| PathBuf::from(v))
            .ok_or_else(|| Error::data("manifest records no output directory; pass --out"))?,
    };
    let mut argv = vec!["rentsim".to_string()];
    argv.extend(manifest.args.iter().cloned());
    argv.push("--out".into());
    argv.push(out.to_string_lossy().into_owned());
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::invalid(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::invalid("cannot replay a replay"));
    }
    execute(cli, &argv[1..])
}

struct Run<'a> {
    command: &'static str,
    common: &'a Common,
    args: &'a [String],
    params: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, common: &'a Common, args: &'a [String]) -> Self {
        Run {
            command,
            common,
            args,
            params: vec![("out".into(), common.out.to_string_lossy().into_owned())],
            outputs: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl std::fmt::Debug) {
        self.params.push((key.into(), format!("{value:?}")));
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.into());
        self.common.out.join(name)
    }

    fn finish(self) -> Result<()> {
        let manifest = Manifest {
            command: self.command.into(),
            version: VERSION.into(),
            seed: Some(self.common.seed),
            params: self.params,
            args: strip_out(self.args),
            outputs: self.outputs,
        };
        manifest.write(&self.common.out)?;
        log::info!("wrote {}", self.common.out.join(MANIFEST_FILE).display());
        Ok(())
    }
}

fn simulate(a: &SimulateArgs, args: &[String]) -> Result<()> {
    let grid = SweepGrid {
        phis: a.phi.values_or(|| vec![0.3, 0.6, 0.9, 0.99, 0.999]),
        neighborhoods: a.neighborhoods.clone(),
        properties_per: a.properties_per.clone(),
        m_values: a.m.clone(),
        alphas: a.alpha.clone(),
        fractions: a.fraction.clone(),
        ps: a.p.clone(),
        qs: a.q.clone(),
        policies: a.policy.clone(),
    };
    grid.validate()?;
    if a.replicates == 0 {
        return Err(Error::invalid("--replicates must be at least 1"));
    }
    let mut run = Run::new("simulate", &a.common, args);
    run.param("grid", &grid);
    run.param("replicates", a.replicates);
    let rows = rent_sweep(&grid, a.replicates, a.common.seed)?;
    write_sweep(&run.path("rent_sweep.csv"), &rows)?;
    run.finish()
}

fn gini_curve_cmd(a: &GiniCurveArgs, args: &[String]) -> Result<()> {
    let config = CityConfig::uniform(a.neighborhoods, a.properties_per, a.fraction)?;
    let phis = a.phi.values_or(default_phi_grid);
    check_phis(&phis)?;
    if a.samples == 0 {
        return Err(Error::invalid("--samples must be at least 1"));
    }
    let mut run = Run::new("gini-curve", &a.common, args);
    run.param("config", &config);
    run.param("phis", &phis);
    run.param("samples", a.samples);
    let rows = gini_curve(&config, &phis, a.samples, a.common.seed)?;
    write_gini_curve(&run.path("gini_curve.csv"), &rows)?;
    run.finish()
}

fn check_phis(phis: &[f64]) -> Result<()> {
    if phis.is_empty() {
        return Err(Error::invalid("empty phi grid"));
    }
    if let Some(p) = phis.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("phi = {p} outside [0, 1]")));
    }
    Ok(())
}

fn calibrate_phi(a: &CalibratePhiArgs, args: &[String]) -> Result<()> {
    let phis = a.phi.values_or(default_phi_grid);
    check_phis(&phis)?;
    if phis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("phi grid must be strictly increasing"));
    }
    if a.sims == 0 || a.samples == 0 {
        return Err(Error::invalid("--sims and --samples must be at least 1"));
    }
    let profile = match (&a.input, a.target_phi) {
        (Some(path), _) => load_properties(path, a.min_neighborhood_size)?.profile,
        (None, Some(phi)) => {
            let config = CityConfig::uniform(a.neighborhoods, a.properties_per, a.fraction)?;
            let mut rng = stream_rng(a.common.seed, &[SYNTH_CITY_STREAM]);
            let city = sample_city(&config, phi, &mut rng)?;
            ObservedNeighborhoodProfile::from_model(&city)
        }
        (None, None) => return Err(Error::invalid("pass --input or --target-phi")),
    };
    let sim_config = profile.simulation_config(a.sim_properties_per)?;

    let mut run = Run::new("calibrate-phi", &a.common, args);
    run.param("profile_neighborhoods", profile.num_neighborhoods());
    run.param("profile_fraction", profile.high_risk_fraction());
    run.param("sim_config", &sim_config);
    run.param("phis", &phis);
    run.param("method", a.method);
    run.param("sims", a.sims);
    run.param("samples", a.samples);

    let mut estimates: Vec<PhiEstimate> = Vec::new();
    let (envelopes, curve) = match a.method {
        PhiMethodArg::Both => {
            let t = simulate_calibration(&sim_config, &phis, a.sims, a.samples, a.common.seed)?;
            (Some(t.envelopes), Some(t.gini_curve))
        }
        PhiMethodArg::Envelope => (
            Some(simulate_envelopes(
                &sim_config,
                &phis,
                a.sims,
                a.common.seed,
            )?),
            None,
        ),
        PhiMethodArg::Gini => (
            None,
            Some(gini_curve(&sim_config, &phis, a.samples, a.common.seed)?),
        ),
    };
    if let Some(envelopes) = envelopes {
        let est = envelope_estimate(&profile, &envelopes)?;
        write_envelope_coverage(&run.path("envelope_coverage.csv"), &est)?;
        estimates.push(est);
    }
    if let Some(curve) = curve {
        write_gini_curve(&run.path("gini_curve.csv"), &curve)?;
        estimates.push(gini_estimate(&profile, &curve)?);
    }
    write_phi_estimates(&run.path("phi_estimates.csv"), &estimates)?;
    run.finish()
}

fn neighborhood_order(loaded: &LoadedCity, ordering: OrderingArg) -> Result<NeighborhoodOrder> {
    match (ordering, &loaded.prior_evictions) {
        (OrderingArg::HighRiskCount, _) | (OrderingArg::Auto, None) => {
            Ok(NeighborhoodOrder::by_high_risk_count(&loaded.model))
        }
        (_, Some(prior)) => NeighborhoodOrder::by_prior_evictions(&loaded.model, prior),
        (OrderingArg::PriorEvictions, None) => Err(Error::invalid(
            "--ordering prior-evictions needs prior_evictions_neighborhood for every neighborhood",
        )),
    }
}

fn check_city_args(c: &CityInputArgs, loaded: &LoadedCity) -> Result<Vec<CostModel>> {
    if c.m.is_empty() || c.alpha.is_empty() {
        return Err(Error::invalid("--m and --alpha need at least one value"));
    }
    let n = loaded.model.num_neighborhoods();
    if let Some(m) = c.m.iter().find(|&&m| m == 0 || m > n) {
        return Err(Error::invalid(format!("--m {m} outside 1..={n}")));
    }
    if c.policy.contains(&PolicyKind::NonTargeting) {
        return Err(Error::invalid(
            "--policy takes targeting policies (hpt, tpt)",
        ));
    }
    c.alpha.iter().map(|&a| CostModel::new(a)).collect()
}

struct Budgeted {
    alpha: f64,
    m: usize,
    budget: f64,
    baseline: CanvassPlan,
    targeted: Vec<CanvassPlan>,
}

fn plans_for(c: &CityInputArgs, loaded: &LoadedCity, costs: &[CostModel]) -> Result<Vec<Budgeted>> {
    let order = neighborhood_order(loaded, c.ordering)?;
    let mut out = Vec::new();
    for (cost, &alpha) in costs.iter().zip(&c.alpha) {
        for &m in &c.m {
            let budget = budget_for_neighborhoods(&loaded.model, &order, m, cost)?;
            let baseline = plan(
                PolicyKind::NonTargeting,
                &loaded.model,
                &order,
                budget,
                cost,
            )?;
            let targeted = c
                .policy
                .iter()
                .map(|&p| plan(p, &loaded.model, &order, budget, cost))
                .collect::<Result<_>>()?;
            out.push(Budgeted {
                alpha,
                m,
                budget,
                baseline,
                targeted,
            });
        }
    }
    Ok(out)
}

fn na<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn evaluate(a: &EvaluateArgs, args: &[String]) -> Result<()> {
    let outcome = OutcomeModel::new(a.p, a.q)?;
    let loaded = load_properties(&a.city.input, a.city.min_neighborhood_size)?;
    let costs = check_city_args(&a.city, &loaded)?;
    let order = neighborhood_order(&loaded, a.city.ordering)?;

    let mut run = Run::new("evaluate", &a.common, args);
    run.param("input", &a.city.input);
    run.param("ordering", order.key());
    run.param("p", a.p);
    run.param("q", a.q);
    run.param("dropped_neighborhoods", loaded.dropped_neighborhoods);
    run.param("dropped_properties", loaded.dropped_properties);

    let budgeted = plans_for(&a.city, &loaded, &costs)?;
    let outcomes = loaded.outcomes.as_deref();
    let mut rows = Vec::new();
    for b in &budgeted {
        let row =
            |p: &CanvassPlan, rent_e: Option<f64>, rent_r: Option<f64>| -> Result<Vec<String>> {
                Ok(vec![
                    b.alpha.to_string(),
                    b.m.to_string(),
                    b.budget.to_string(),
                    order.key().as_str().into(),
                    p.policy.to_string(),
                    p.len().to_string(),
                    p.visited_high_risk.to_string(),
                    p.visited_low_risk.to_string(),
                    p.total_cost.to_string(),
                    expected_discovered(p, &outcome).to_string(),
                    na(outcomes.map(|o| realized_discovered(p, o)).transpose()?),
                    na(rent_e),
                    na(rent_r),
                ])
            };
        rows.push(row(&b.baseline, None, None)?);
        for t in &b.targeted {
            let e = rent(&b.baseline, t, &outcome)?.rent;
            let r = match outcomes {
                Some(o) => rent_realized(&b.baseline, t, o)?.rent,
                None => None,
            };
            rows.push(row(t, e, r)?);
        }
    }
    write_table(
        &run.path("evaluate.csv"),
        &[
            "alpha",
            "M",
            "budget",
            "ordering",
            "policy",
            "visits",
            "visited_high_risk",
            "visited_low_risk",
            "total_cost",
            "expected_discovered",
            "realized_discovered",
            "rent_expected",
            "rent_realized",
        ],
        rows,
    )?;
    write_city_snapshot(&run.path("city.csv"), &loaded.model)?;
    if a.write_plans {
        for b in &budgeted {
            for p in std::iter::once(&b.baseline).chain(&b.targeted) {
                let name = format!("plans/{}_alpha{}_m{}.csv", p.policy, b.alpha, b.m);
                write_plan(&run.path(&name), &loaded.model, p)?;
            }
        }
    }
    run.finish()
}

fn labelled_scores(loaded: &LoadedCity) -> Result<(Vec<f64>, Vec<bool>)> {
    let outcomes = loaded
        .outcomes
        .as_ref()
        .ok_or_else(|| Error::data("input has no evicted column"))?;
    let scores = loaded
        .model
        .risk_scores()
        .expect("loaded cities carry scores");
    let (s, y): (Vec<f64>, Vec<bool>) = scores
        .iter()
        .zip(outcomes)
        .filter_map(|(&s, &o)| o.map(|o| (s, o)))
        .unzip();
    if s.is_empty() {
        return Err(Error::data("no property has an evicted value"));
    }
    Ok((s, y))
}

fn calibrate_scores(a: &CalibrateScoresArgs, args: &[String]) -> Result<()> {
    let loaded = load_properties(&a.input, a.min_neighborhood_size)?;
    let (scores, outcomes) = labelled_scores(&loaded)?;
    let mut run = Run::new("calibrate-scores", &a.common, args);
    run.param("input", &a.input);
    run.param("binning", a.binning);
    run.param("labelled", scores.len());

    let platt = platt_scaling(&scores, &outcomes)?;
    let iso = isotonic_regression_bits(&scores, &outcomes)?;
    write_atomic(&run.path("platt.txt"), platt.to_text().as_bytes())?;
    write_atomic(&run.path("isotonic.txt"), iso.to_text().as_bytes())?;

    let mut tables = Vec::new();
    if scores.iter().all(|s| (0.0..=1.0).contains(s)) {
        tables.push(("raw", reliability_curve(&scores, &outcomes, a.binning)?));
    }
    tables.push((
        "platt",
        reliability_curve(&platt.apply_all(&scores), &outcomes, a.binning)?,
    ));
    tables.push((
        "isotonic",
        reliability_curve(&iso.apply_all(&scores), &outcomes, a.binning)?,
    ));
    write_reliability(&run.path("reliability.csv"), &tables)?;

    let all_scores = loaded
        .model
        .risk_scores()
        .expect("loaded cities carry scores");
    write_table(
        &run.path("calibrated.csv"),
        &["property_id", "risk_score", "platt", "isotonic"],
        loaded.property_ids.iter().zip(all_scores).map(|(id, &s)| {
            vec![
                id.clone(),
                s.to_string(),
                platt.apply(s).to_string(),
                iso.apply(s).to_string(),
            ]
        }),
    )?;
    run.finish()
}

fn utility(a: &UtilityArgs, args: &[String]) -> Result<()> {
    let scenarios: Vec<InterventionScenario> = a
        .reduction
        .iter()
        .map(|&r| InterventionScenario::new(r))
        .collect::<Result<_>>()?;
    if scenarios.is_empty() {
        return Err(Error::invalid("--reduction needs at least one value"));
    }
    let loaded = load_properties(&a.city.input, a.city.min_neighborhood_size)?;
    let costs = check_city_args(&a.city, &loaded)?;
    let calibrator = match &a.calibrator {
        Some(path) => CalibratorFn::from_text(&fs::read_to_string(path)?)?,
        None => {
            let (s, y) = labelled_scores(&loaded)?;
            match a.calibration {
                CalibrationArg::Platt => platt_scaling(&s, &y)?,
                CalibrationArg::Isotonic => isotonic_regression_bits(&s, &y)?,
            }
        }
    };
    let probs = calibrator.apply_all(
        loaded
            .model
            .risk_scores()
            .expect("loaded cities carry scores"),
    );

    let mut run = Run::new("utility", &a.common, args);
    run.param("input", &a.city.input);
    run.param(
        "calibrator",
        calibrator.to_text().trim_end().replace('\n', ";"),
    );
    run.param("reductions", &a.reduction);

    let budgeted = plans_for(&a.city, &loaded, &costs)?;
    let mut rows = Vec::new();
    for s in &scenarios {
        for b in &budgeted {
            for p in std::iter::once(&b.baseline).chain(&b.targeted) {
                rows.push(vec![
                    s.reduction_fraction().to_string(),
                    b.alpha.to_string(),
                    b.m.to_string(),
                    b.budget.to_string(),
                    p.policy.to_string(),
                    p.len().to_string(),
                    expected_reduction(p, &probs, s)?.to_string(),
                ]);
            }
        }
    }
    write_table(
        &run.path("utility.csv"),
        &[
            "reduction",
            "alpha",
            "M",
            "budget",
            "policy",
            "visits",
            "expected_reduction",
        ],
        rows,
    )?;
    run.finish()
}

fn synthesize(a: &SynthesizeArgs, args: &[String]) -> Result<()> {
    let config = CityConfig::uniform(a.neighborhoods, a.properties_per, a.fraction)?;
    let outcome = OutcomeModel::new(a.p, a.q)?;
    if !(0.0..=1.0).contains(&a.phi) {
        return Err(Error::invalid(format!("phi = {} outside [0, 1]", a.phi)));
    }
    let mut run = Run::new("synthesize", &a.common, args);
    run.param("config", &config);
    run.param("phi", a.phi);
    run.param("outcome", outcome);

    let city = sample_city(
        &config,
        a.phi,
        &mut stream_rng(a.common.seed, &[SYNTH_CITY_STREAM]),
    )?;
    let prob = |rank: usize| if city.is_high_risk(rank) { a.p } else { a.q };
    let mut rng = stream_rng(a.common.seed, &[SYNTH_OUTCOME_STREAM]);
    let evicted: Vec<bool> = (1..=city.total_properties())
        .map(|r| rng.random_bool(prob(r)))
        .collect();
    let mut rng = stream_rng(a.common.seed, &[SYNTH_PRIOR_STREAM]);
    let prior: Vec<u64> = city
        .neighborhoods()
        .iter()
        .map(|block| block.iter().filter(|&&r| rng.random_bool(prob(r))).count() as u64)
        .collect();
    let records = city_records(&city, Some(&evicted), Some(&prior));
    write_property_records(&run.path("properties.csv"), &records)?;
    run.param(
        "high_risk_counts",
        neighborhood_stats(&city).high_risk_counts,
    );
    run.finish()
}

/// Output directory contents, for callers comparing runs.
pub fn list_outputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}
