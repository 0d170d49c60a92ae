//! Configuration files, command dispatch and report emission.
//!
//! Every command reads one JSON configuration, writes a JSON report to
//! standard output and, with `--out`, the same report plus CSV series into a
//! directory. Reports contain no timestamps and are byte-identical for equal
//! inputs.
//!
//! Exit codes: `0` success, `2` input/resource/IO errors, `3` numeric
//! failures, `4` policy violations.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::certifier::{
    certify_generator_derivative, certify_hellinger, evidence_theorem2, margin_sweep,
    near_isometry_check, replay_theorem3, Arc, Tolerances,
};
use crate::circle::{ActionSpec, CircleDiffeo, DiffeoSpec, Grid};
use crate::error::{Error, Result};
use crate::group::{max_ball_elements, Family, Gen, GroupSpec, Word};
use crate::measures::{
    affinity, avg_hellinger_sq, avg_hellinger_sq_pushforward, hellinger, hellinger_sq, l1_distance,
    GridFunction, MeasureSpec, MeasuredAction,
};
use crate::module_rep::{
    build_folner_witness, folner_defect_exact, random_witness, verify_witness_with, ModuleVector,
};
use crate::spectral::{lambda1_dirichlet, lambda1_dirichlet_series, lambda1_exact, Lambda1Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_POLICY: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Resource(_) | Error::Capability(_) | Error::UnsupportedMeasure(_) => {
            EXIT_INPUT
        }
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Policy(_) => EXIT_POLICY,
    }
}

/// Source of `λ₁` for a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Lambda1Spec {
    #[default]
    Exact,
    CertifiedLowerBound { value: f64, source: String },
    /// Dirichlet truncation on the ball of the given radius.
    Estimate { radius: usize },
}

impl Lambda1Spec {
    pub fn resolve(&self, group: GroupSpec) -> Result<Lambda1Value> {
        match self {
            Lambda1Spec::Exact => lambda1_exact(group),
            Lambda1Spec::CertifiedLowerBound { value, source } => {
                Lambda1Value::certified_lower_bound(*value, source.clone())
            }
            Lambda1Spec::Estimate { radius } => lambda1_dirichlet(group, *radius),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WitnessSpec {
    /// `δ_e ⊗ 1_X`.
    Point,
    /// Normalized indicator of the box `{0, …, n−1}^d`.
    Folner { n: usize },
    /// Random smooth field on `B_radius` satisfying (a) and (b), with weight
    /// `center_weight` at the identity and 1 elsewhere.
    Random {
        radius: usize,
        #[serde(default = "one")]
        center_weight: f64,
    },
    /// Grid values per group element.
    Explicit { entries: BTreeMap<String, Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub a: Vec<f64>,
}

fn default_grid() -> usize {
    4096
}

fn default_radius() -> usize {
    3
}

fn default_epsilon() -> f64 {
    0.1
}

/// The configuration file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub group: GroupSpec,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// One map per generator `a, b, …`; inverses are computed.
    #[serde(default)]
    pub action: Option<BTreeMap<String, DiffeoSpec>>,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default = "default_radius")]
    pub radius: usize,
    #[serde(default)]
    pub lambda1: Lambda1Spec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub witness: Option<WitnessSpec>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub arc: Option<Arc>,
    /// Rotation action to compare with; defaults to the rotations the
    /// generator maps perturb.
    #[serde(default)]
    pub comparison: Option<BTreeMap<String, DiffeoSpec>>,
    #[serde(default)]
    pub mu1: Option<MeasureSpec>,
    #[serde(default)]
    pub mu2: Option<MeasureSpec>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub file: ConfigFile,
    /// The configuration as parsed JSON, echoed in reports.
    pub echo: Value,
    pub grid: Grid,
}

fn at(pointer: &str, err: Error) -> Error {
    let prefix = |m: String| format!("{pointer}: {m}");
    match err {
        Error::Input(m) => Error::Input(prefix(m)),
        Error::Resource(m) => Error::Resource(prefix(m)),
        Error::Capability(m) => Error::Capability(prefix(m)),
        Error::UnsupportedMeasure(m) => Error::UnsupportedMeasure(prefix(m)),
        Error::Numeric(m) => Error::Numeric(prefix(m)),
        Error::Policy(m) => Error::Policy(prefix(m)),
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let echo: Value =
        serde_json::from_str(text).map_err(|e| Error::input(format!("malformed JSON: {e}")))?;
    let file: ConfigFile = serde_path_to_error::deserialize(echo.clone()).map_err(|e| {
        let pointer = json_pointer(e.path());
        Error::input(format!("{pointer}: {}", e.into_inner()))
    })?;
    let n = file.grid;
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::input(format!("/grid: must be a power of two ≥ 8, got {n}")));
    }
    let grid = Grid::new(n)?;
    file.tolerances.validate().map_err(|e| at("/tolerances", e))?;
    if !(file.epsilon >= 0.0) {
        return Err(Error::input("/epsilon: must be ≥ 0"));
    }
    Ok(RunConfig { file, echo, grid })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn build_assignment(
    group: GroupSpec,
    grid: Grid,
    maps: &BTreeMap<String, DiffeoSpec>,
    pointer: &str,
) -> Result<Vec<CircleDiffeo>> {
    let gens: Vec<Gen> = group.generators().into_iter().filter(|s| !s.is_inverse()).collect();
    for key in maps.keys() {
        if !gens.iter().any(|s| s.symbol().to_string() == *key) {
            return Err(Error::input(format!(
                "{pointer}/{key}: not a generator symbol (expected one of {})",
                gens.iter().map(|s| s.symbol().to_string()).collect::<Vec<_>>().join(", ")
            )));
        }
    }
    gens.iter()
        .map(|s| {
            let key = s.symbol().to_string();
            let spec = maps
                .get(&key)
                .ok_or_else(|| Error::input(format!("{pointer}: missing map for generator {key}")))?;
            spec.build(grid).map_err(|e| at(&format!("{pointer}/{key}"), e))
        })
        .collect()
}

impl RunConfig {
    pub fn group(&self) -> GroupSpec {
        self.file.group
    }

    pub fn action(&self) -> Result<ActionSpec> {
        let maps = self
            .file
            .action
            .as_ref()
            .ok_or_else(|| Error::input("/action: required for this command"))?;
        let maps = build_assignment(self.group(), self.grid, maps, "/action")?;
        ActionSpec::new(self.group(), maps).map_err(|e| at("/action", e))
    }

    /// The given comparison action, or rotations by the base angles of the
    /// generator maps.
    pub fn comparison(&self) -> Result<ActionSpec> {
        let maps = match &self.file.comparison {
            Some(maps) => build_assignment(self.group(), self.grid, maps, "/comparison")?,
            None => {
                let action = self
                    .file
                    .action
                    .as_ref()
                    .ok_or_else(|| Error::input("/action: required for this command"))?;
                let gens: Vec<Gen> =
                    self.group().generators().into_iter().filter(|s| !s.is_inverse()).collect();
                gens.iter()
                    .map(|s| {
                        let key = s.symbol().to_string();
                        let theta = action.get(&key).and_then(DiffeoSpec::base_rotation).ok_or_else(|| {
                            Error::input(format!(
                                "/comparison: required because /action/{key} has no base rotation"
                            ))
                        })?;
                        Ok(CircleDiffeo::rotation(self.grid, theta))
                    })
                    .collect::<Result<_>>()?
            }
        };
        ActionSpec::new(self.group(), maps).map_err(|e| at("/comparison", e))
    }

    fn measure(&self, spec: Option<&MeasureSpec>, pointer: &str) -> Result<crate::measures::GridMeasure> {
        spec.unwrap_or(&MeasureSpec::Lebesgue)
            .build(self.grid)
            .map_err(|e| at(pointer, e))
    }

    pub fn witness(&self) -> Result<ModuleVector> {
        let spec = self
            .file
            .witness
            .as_ref()
            .ok_or_else(|| Error::input("/witness: required for this command"))?;
        let group = self.group();
        let grid = self.grid;
        let built = match spec {
            WitnessSpec::Point => ModuleVector::from_entries(
                group,
                grid,
                [(group.identity(), GridFunction::constant(grid, 1.0))],
            ),
            WitnessSpec::Folner { n } => build_folner_witness(group, *n, grid),
            WitnessSpec::Random { radius, center_weight } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.file.seed);
                let support: Vec<(Word, f64)> = group
                    .ball(*radius)?
                    .elements()
                    .iter()
                    .map(|k| (k.clone(), if k.is_identity() { *center_weight } else { 1.0 }))
                    .collect();
                random_witness(&mut rng, group, grid, &support)
            }
            WitnessSpec::Explicit { entries } => ModuleVector::from_map(group, grid, entries),
        };
        built.map_err(|e| at("/witness", e))
    }
}

/// The commands understood by [`execute`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Certify,
    Lambda1,
    Hellinger,
    Evidence,
    NearIsometry,
    Replay,
    Witness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Lambda1 => "lambda1",
            Command::Hellinger => "hellinger",
            Command::Evidence => "evidence",
            Command::NearIsometry => "near-isometry",
            Command::Replay => "replay",
            Command::Witness => "witness",
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    grid_n: usize,
    seed: u64,
    max_ball_elements: usize,
    tolerances: &'a Tolerances,
    config: &'a Value,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'static str,
    provenance: Provenance<'a>,
    result: Value,
}

/// A CSV series to be written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvFile {
    pub name: String,
    pub content: String,
}

/// Report text and CSV series produced by one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub report: String,
    pub csv: Vec<CsvFile>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::numeric(format!("report serialization failed: {e}")))
}

fn csv_text<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::numeric(format!("CSV serialization failed: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::numeric(format!("CSV serialization failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::numeric(e.to_string()))
}

#[derive(Serialize)]
struct SeriesRow {
    radius: usize,
    value: f64,
}

#[derive(Serialize)]
struct EvidenceRow {
    radius: usize,
    sup_integral: f64,
    inf_integral: f64,
}

/// Runs `command` on a validated configuration.
pub fn execute(command: Command, config: &RunConfig) -> Result<Output> {
    let mut warnings = Vec::new();
    let mut csv = Vec::new();
    let group = config.group();
    let tol = &config.file.tolerances;
    let result = match command {
        Command::Certify => {
            let action = config.action()?;
            warnings.extend(action.warnings().iter().cloned());
            let nu = config.measure(config.file.measure.as_ref(), "/measure")?;
            let lambda1 = config.file.lambda1.resolve(group).map_err(|e| at("/lambda1", e))?;
            let cert = certify_hellinger(&action, &nu, &lambda1, tol)?;
            let mut out = serde_json::Map::new();
            out.insert("certificate".into(), to_value(&cert)?);
            if matches!(config.file.measure, None | Some(MeasureSpec::Lebesgue)) {
                let route = certify_generator_derivative(&action, &lambda1, tol)?;
                out.insert(
                    "cross_check".into(),
                    serde_json::json!({
                        "generator_derivative": to_value(&route)?,
                        "route_difference": (route.avg_h_sq - cert.avg_h_sq).abs(),
                    }),
                );
            }
            if let Some(sweep) = &config.file.sweep {
                let maps = config.file.action.as_ref().expect("action present");
                let thetas: Vec<f64> = group
                    .generators()
                    .into_iter()
                    .filter(|s| !s.is_inverse())
                    .map(|s| {
                        maps.get(&s.symbol().to_string())
                            .and_then(DiffeoSpec::base_rotation)
                            .ok_or_else(|| Error::input("/sweep: every generator map needs a base rotation"))
                    })
                    .collect::<Result<_>>()?;
                let rows = margin_sweep(group, config.grid, &thetas, &sweep.a, &lambda1, tol)
                    .map_err(|e| at("/sweep", e))?;
                csv.push(CsvFile {
                    name: "sweep.csv".into(),
                    content: csv_text(&rows)?,
                });
                out.insert("sweep".into(), to_value(&rows)?);
            }
            Value::Object(out)
        }
        Command::Lambda1 => {
            let value = config.file.lambda1.resolve(group).map_err(|e| at("/lambda1", e))?;
            if let Lambda1Value {
                kind: crate::spectral::Lambda1Kind::EstimateFromAbove { radius },
                ..
            } = &value
            {
                let rows: Vec<SeriesRow> = lambda1_dirichlet_series(group, *radius)?
                    .into_iter()
                    .map(|(radius, value)| SeriesRow { radius, value })
                    .collect();
                csv.push(CsvFile {
                    name: "lambda1_series.csv".into(),
                    content: csv_text(&rows)?,
                });
            }
            to_value(&value)?
        }
        Command::Hellinger => {
            let nu = config.measure(config.file.measure.as_ref(), "/measure")?;
            let mu1 = config.measure(
                Some(config.file.mu1.as_ref().ok_or_else(|| Error::input("/mu1: required"))?),
                "/mu1",
            )?;
            let mu2 = config.measure(
                Some(config.file.mu2.as_ref().ok_or_else(|| Error::input("/mu2: required"))?),
                "/mu2",
            )?;
            let h = hellinger(&mu1, &mu2, &nu)?;
            let h2 = hellinger_sq(&mu1, &mu2, &nu)?;
            let l1 = l1_distance(&mu1, &mu2, &nu)?;
            let tv = 0.5 * l1;
            let upper = h * (2.0 - h2).sqrt();
            let mut out = serde_json::json!({
                "hellinger": h,
                "hellinger_sq": h2,
                "affinity": affinity(&mu1, &mu2, &nu)?,
                "l1_distance": l1,
                "total_variation": tv,
                "sandwich": {
                    "lower": h2,
                    "upper": upper,
                    "holds": h2 <= tv + 1e-12 && tv <= upper + 1e-12,
                },
            });
            if config.file.action.is_some() {
                let action = config.action()?;
                warnings.extend(action.warnings().iter().cloned());
                out["avg_h_sq"] = serde_json::json!({
                    "radon_nikodym": avg_hellinger_sq(&action, &nu)?,
                    "pushforward": avg_hellinger_sq_pushforward(&action, &nu)?,
                });
            }
            out
        }
        Command::Evidence => {
            let action = config.action()?;
            warnings.extend(action.warnings().iter().cloned());
            let nu = config.measure(config.file.measure.as_ref(), "/measure")?;
            let m = MeasuredAction::new(&action, &nu).map_err(|e| at("/measure", e))?;
            let report = evidence_theorem2(&m, config.file.radius)?;
            let rows: Vec<EvidenceRow> = report
                .radii
                .iter()
                .zip(&report.sup_integrals)
                .zip(&report.inf_integrals)
                .map(|((&radius, &s), &i)| EvidenceRow {
                    radius,
                    sup_integral: s,
                    inf_integral: i,
                })
                .collect();
            csv.push(CsvFile {
                name: "evidence.csv".into(),
                content: csv_text(&rows)?,
            });
            to_value(&report)?
        }
        Command::NearIsometry => {
            let action = config.action()?;
            warnings.extend(action.warnings().iter().cloned());
            let comparison = config.comparison()?;
            let nu = config.measure(config.file.measure.as_ref(), "/measure")?;
            let m = MeasuredAction::new(&action, &nu).map_err(|e| at("/measure", e))?;
            let arc = config.file.arc.ok_or_else(|| Error::input("/arc: required"))?;
            let report = near_isometry_check(&m, &comparison, arc, config.file.radius)
                .map_err(|e| match e {
                    Error::Input(msg) if msg.contains("arc") => at("/arc", Error::Input(msg)),
                    other => other,
                })?;
            to_value(&report)?
        }
        Command::Replay => {
            let action = config.action()?;
            warnings.extend(action.warnings().iter().cloned());
            let nu = config.measure(config.file.measure.as_ref(), "/measure")?;
            let m = MeasuredAction::new(&action, &nu).map_err(|e| at("/measure", e))?;
            let xi = config.witness()?;
            let lambda1 = config.file.lambda1.resolve(group).map_err(|e| at("/lambda1", e))?;
            to_value(&replay_theorem3(&m, &xi, config.file.radius, &lambda1, tol)?)?
        }
        Command::Witness => {
            let action = config.action()?;
            warnings.extend(action.warnings().iter().cloned());
            let xi = config.witness()?;
            let orbit = crate::circle::Orbit::new(&action);
            let report = verify_witness_with(&xi, &orbit, config.file.epsilon, tol.unit_norm)?;
            let mut out = to_value(&report)?;
            if let Some(WitnessSpec::Folner { n }) = config.file.witness {
                if group.family() == Family::FreeAbelian {
                    let (num, den) = folner_defect_exact(group, n)?;
                    out["defect_exact"] = Value::String(format!("{num}/{den}"));
                }
            }
            out
        }
    };
    let envelope = Envelope {
        command: command.name(),
        provenance: Provenance {
            tool: "amencert",
            version: env!("CARGO_PKG_VERSION"),
            grid_n: config.grid.len(),
            seed: config.file.seed,
            max_ball_elements: max_ball_elements(),
            tolerances: tol,
            config: &config.echo,
            warnings,
        },
        result,
    };
    let mut report = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::numeric(format!("report serialization failed: {e}")))?;
    report.push('\n');
    Ok(Output { report, csv })
}

/// Writes `<command>.json` and the CSV series into `dir`.
pub fn write_output(dir: &Path, command: Command, output: &Output) -> Result<()> {
    let io = |e: std::io::Error| Error::input(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{}.json", command.name())), &output.report).map_err(io)?;
    for f in &output.csv {
        std::fs::write(dir.join(&f.name), &f.content).map_err(io)?;
    }
    Ok(())
}

#[derive(Parser, Debug)]
#[command(name = "amencert", version, about = "Numerical non-amenability certificates for circle actions")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the JSON report and CSV series.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Lambda1Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Group as JSON, e.g. '{"family":"free","rank":2}', or as `free:2`.
    #[arg(long)]
    group: Option<String>,
    /// Dirichlet truncation radius.
    #[arg(long, conflicts_with = "exact")]
    radius: Option<usize>,
    /// Closed-form value.
    #[arg(long)]
    exact: bool,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Hellinger/spectral-gap certificate.
    Certify(Common),
    /// Bottom of the spectrum of the Cayley-graph Laplacian.
    Lambda1(Lambda1Args),
    /// Hellinger distance, affinity and L1 distance of two measures.
    Hellinger(Common),
    /// Integrals of truncated Radon–Nikodym bounds.
    Evidence(Common),
    /// C¹ comparison with a rotation action on an arc.
    NearIsometry(Common),
    /// Replay of the certificate's inequality chain on a field.
    Replay(Common),
    /// Checks the amenability-witness conditions for a field.
    Witness(Common),
}

fn parse_group_flag(text: &str) -> Result<GroupSpec> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| Error::input(format!("--group: {e}")));
    }
    let (family, rank) = trimmed
        .split_once(':')
        .ok_or_else(|| Error::input("--group: expected JSON or `free:k` / `free_abelian:d`"))?;
    let family = match family {
        "free" => Family::Free,
        "free_abelian" => Family::FreeAbelian,
        other => return Err(Error::Capability(format!("--group: unknown family {other}"))),
    };
    let rank: u32 = rank
        .parse()
        .map_err(|_| Error::input(format!("--group: invalid rank {rank}")))?;
    GroupSpec::new(family, rank)
}

fn lambda1_config(args: &Lambda1Args) -> Result<RunConfig> {
    let mut value: Value = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::input(format!("malformed JSON: {e}")))?
        }
        None => serde_json::json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::input("/: configuration must be a JSON object"))?;
    if let Some(g) = &args.group {
        obj.insert("group".into(), to_value(&parse_group_flag(g)?)?);
    }
    if args.exact {
        obj.insert("lambda1".into(), serde_json::json!({"kind": "exact"}));
    } else if let Some(r) = args.radius {
        obj.insert("lambda1".into(), serde_json::json!({"kind": "estimate", "radius": r}));
    }
    if !obj.contains_key("group") {
        return Err(Error::input("/group: required (use --group or --config)"));
    }
    parse_config_str(&value.to_string())
}

fn dispatch(cli: Cli) -> Result<(Command, Output, Option<PathBuf>)> {
    let (command, config, out) = match cli.command {
        CliCommand::Lambda1(args) => (Command::Lambda1, lambda1_config(&args)?, args.out),
        CliCommand::Certify(c) => (Command::Certify, parse_config(&c.config)?, c.out),
        CliCommand::Hellinger(c) => (Command::Hellinger, parse_config(&c.config)?, c.out),
        CliCommand::Evidence(c) => (Command::Evidence, parse_config(&c.config)?, c.out),
        CliCommand::NearIsometry(c) => (Command::NearIsometry, parse_config(&c.config)?, c.out),
        CliCommand::Replay(c) => (Command::Replay, parse_config(&c.config)?, c.out),
        CliCommand::Witness(c) => (Command::Witness, parse_config(&c.config)?, c.out),
    };
    let output = execute(command, &config)?;
    Ok((command, output, out))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok((command, output, out)) => {
            if let Some(dir) = out {
                if let Err(e) = write_output(&dir, command, &output) {
                    let _ = writeln!(stderr, "error: {e}");
                    return exit_code(&e);
                }
            }
            let _ = stdout.write_all(output.report.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
