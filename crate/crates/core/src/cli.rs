//! Command-line front end.
//!
//! Every command writes newline-delimited JSON records; each record carries
//! the full [`RunSpec`] under `"run"`. Exit codes are listed in [`exit`].

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    check_conditions_slice, cross_validate, search_violations, CrossValidationError, SearchError,
};
use crate::dynamics::{simulate, SimConfig, SimultaneityPolicy};
use crate::game::{
    default_max_moves, longest_negative_play, play_negative_game, BuiltinStrategy, GameError, GamePosition,
    StrategyKind, WeightMatrix,
};
use crate::model::{collision_bound, EventRecord, MassProfile, ModelError, StateRecord, SystemState, Termination};
use crate::sampling::{MassSampler, PositionSampler, SystemSampler, VelocitySampler};
use crate::scalar::{parse_rational, Exact, NumericMode, Rendered, RenderedSeq, Scalar, ScalarError, Tolerance};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const MULTIPLE_COLLISION: i32 = 2;
    pub const CAP: i32 = 3;
    pub const CONDITION_FAILED: i32 = 4;
    pub const AUDIT_FAILED: i32 = 5;
    pub const CRITICAL: i32 = 6;
}

/// Environment variable that relocates relative `--out` paths.
pub const OUT_DIR_ENV: &str = "HARDBALL_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    /// Simulate one system and write its event log.
    Simulate,
    /// Play the negative numbers game from a start position.
    Game,
    /// Report the geometric- and arithmetic-mean mass conditions.
    Check,
    /// Simulate and audit the trace against the numbers game.
    Certify,
    /// Sample random systems and collect those exceeding n(n+1)/2.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Error,
    Forbid,
    LeftFirst,
    RightFirst,
}

impl From<PolicyArg> for SimultaneityPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Error => SimultaneityPolicy::ErrorOnAdjacent,
            PolicyArg::Forbid => SimultaneityPolicy::Forbidden,
            PolicyArg::LeftFirst => SimultaneityPolicy::ResolveLeftFirst,
            PolicyArg::RightFirst => SimultaneityPolicy::ResolveRightFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Conforming,
    Equal,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Leftmost,
    Rightmost,
    Random,
    MostNegative,
}

impl From<StrategyArg> for StrategyKind {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Leftmost => StrategyKind::Leftmost,
            StrategyArg::Rightmost => StrategyKind::Rightmost,
            StrategyArg::Random => StrategyKind::Random,
            StrategyArg::MostNegative => StrategyKind::MostNegative,
        }
    }
}

/// Command-line arguments.
#[derive(Debug, Parser)]
#[command(name = "hardball", version, about = "One-dimensional elastic collisions and their numbers-game certificate")]
pub struct Cli {
    pub command: CommandKind,
    /// Exact rational arithmetic (default unless mass-derived game weights need floats).
    #[arg(long, conflicts_with = "float")]
    pub exact: bool,
    /// Binary floating point with comparison tolerance --tol.
    #[arg(long)]
    pub float: bool,
    #[arg(long, default_value_t = Tolerance::DEFAULT_TAU)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Event cap for simulations, move cap for games.
    #[arg(long)]
    pub max_events: Option<usize>,
    /// Number of random trials (search, certify ensembles).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Number of pairs n (n + 1 balls) for sampled systems.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Leftmost)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Error)]
    pub simultaneity: PolicyArg,
    #[arg(long, value_enum, default_value_t = SamplerKind::Conforming)]
    pub sampler: SamplerKind,
    /// Game: search every integer start in [-R, R]^n and every move order.
    #[arg(long)]
    pub search_radius: Option<i64>,
    /// JSON input document.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated masses, e.g. `1,1/100,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub masses: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub positions: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub velocities: Option<String>,
    /// Game start position p_1..p_n.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Game neighbour weights k_{1,2}..k_{n-1,n}.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("field `{field}`: {source}")]
    Field { field: String, source: ScalarError },
    #[error("cannot read input {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("malformed input document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("invalid system: {0}")]
    Model(#[from] ModelError),
    #[error("invalid game: {0}")]
    Game(#[from] GameError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

/// A number in the input document: either a JSON string (`"1/100"`, `"0.25"`) or a JSON number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumText {
    Text(String),
    Number(serde_json::Number),
}

impl NumText {
    fn text(&self) -> String {
        match self {
            NumText::Text(s) => s.clone(),
            NumText::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputDocument {
    masses: Option<Vec<NumText>>,
    positions: Option<Vec<NumText>>,
    velocities: Option<Vec<NumText>>,
    start: Option<Vec<NumText>>,
    weights: Option<Vec<Vec<NumText>>>,
    neighbor_weights: Option<Vec<NumText>>,
}

/// Parsed system description, kept as exact rationals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SystemSpec {
    pub masses: Option<Vec<BigRational>>,
    pub positions: Option<Vec<BigRational>>,
    pub velocities: Option<Vec<BigRational>>,
    pub start: Option<Vec<BigRational>>,
    pub weights: Option<Vec<Vec<BigRational>>>,
    pub neighbor_weights: Option<Vec<BigRational>>,
}

impl SystemSpec {
    /// Parses an input document with optional fields `masses`, `positions`,
    /// `velocities`, `start`, `weights` (full matrix) and `neighbor_weights`.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: InputDocument = serde_json::from_str(text)?;
        let list = |field: &str, v: &Option<Vec<NumText>>| -> Result<Option<Vec<BigRational>>, CliError> {
            v.as_ref()
                .map(|items| parse_list(field, items.iter().map(NumText::text)))
                .transpose()
        };
        Ok(SystemSpec {
            masses: list("masses", &doc.masses)?,
            positions: list("positions", &doc.positions)?,
            velocities: list("velocities", &doc.velocities)?,
            start: list("start", &doc.start)?,
            neighbor_weights: list("neighbor_weights", &doc.neighbor_weights)?,
            weights: doc
                .weights
                .as_ref()
                .map(|rows| {
                    rows.iter()
                        .enumerate()
                        .map(|(r, row)| parse_list(&format!("weights[{r}]"), row.iter().map(NumText::text)))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?,
        })
    }
}

impl Serialize for SystemSpec {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        use serde::ser::SerializeMap;
        let render = |v: &Vec<BigRational>| v.iter().map(Scalar::render).collect::<Vec<_>>();
        let mut map = serializer.serialize_map(None)?;
        for (key, value) in [
            ("masses", &self.masses),
            ("positions", &self.positions),
            ("velocities", &self.velocities),
            ("start", &self.start),
            ("neighbor_weights", &self.neighbor_weights),
        ] {
            if let Some(v) = value {
                map.serialize_entry(key, &render(v))?;
            }
        }
        if let Some(w) = &self.weights {
            map.serialize_entry("weights", &w.iter().map(render).collect::<Vec<_>>())?;
        }
        map.end()
    }
}

fn parse_list(field: &str, items: impl IntoIterator<Item = String>) -> Result<Vec<BigRational>, CliError> {
    items
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            parse_rational(&text).map_err(|source| CliError::Field {
                field: format!("{field}[{i}]"),
                source,
            })
        })
        .collect()
}

fn parse_inline(field: &str, text: &str) -> Result<Vec<BigRational>, CliError> {
    parse_list(field, text.split(',').map(str::to_string))
}

/// Everything that determines a run's output. Embedded in every record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub command: CommandKind,
    pub mode: NumericMode,
    /// Absent in exact mode, where it has no effect.
    pub tol: Option<f64>,
    pub seed: u64,
    pub input: Option<String>,
    pub out: Option<String>,
    pub max_events: Option<usize>,
    pub trials: Option<u64>,
    pub n: Option<usize>,
    pub strategy: StrategyKind,
    pub simultaneity: SimultaneityPolicy,
    pub sampler: SamplerKind,
    pub search_radius: Option<i64>,
    pub system: SystemSpec,
}

impl RunSpec {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut system = match &cli.input {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                    path: path.display().to_string(),
                    source,
                })?;
                SystemSpec::from_json(&text)?
            }
            None => SystemSpec::default(),
        };
        let inline = |field: &str, v: &Option<String>| v.as_ref().map(|t| parse_inline(field, t)).transpose();
        if let Some(m) = inline("masses", &cli.masses)? {
            system.masses = Some(m);
        }
        if let Some(x) = inline("positions", &cli.positions)? {
            system.positions = Some(x);
        }
        if let Some(v) = inline("velocities", &cli.velocities)? {
            system.velocities = Some(v);
        }
        if let Some(p) = inline("start", &cli.start)? {
            system.start = Some(p);
        }
        if let Some(k) = inline("weights", &cli.weights)? {
            system.neighbor_weights = Some(k);
        }

        let tolerance = Tolerance::new(cli.tol).map_err(|source| CliError::Field {
            field: "tol".into(),
            source,
        })?;
        let mass_weighted_game = cli.command == CommandKind::Game
            && system.masses.is_some()
            && system.weights.is_none()
            && system.neighbor_weights.is_none();
        let mode = if cli.float || (!cli.exact && mass_weighted_game) {
            NumericMode::Float
        } else {
            NumericMode::Exact
        };
        if mode == NumericMode::Exact && mass_weighted_game {
            return Err(CliError::Usage(
                "weights derived from masses involve square roots; use --float or supply --weights".into(),
            ));
        }

        Ok(RunSpec {
            command: cli.command,
            mode,
            tol: (mode == NumericMode::Float).then_some(tolerance.tau()),
            seed: cli.seed,
            input: cli.input.as_ref().map(|p| p.display().to_string()),
            out: cli.out.as_ref().map(|p| p.display().to_string()),
            max_events: cli.max_events,
            trials: cli.trials,
            n: cli.n,
            strategy: cli.strategy.into(),
            simultaneity: cli.simultaneity.into(),
            sampler: cli.sampler,
            search_radius: cli.search_radius,
            system,
        })
    }

    /// Tolerance used by the run (zero in exact mode).
    pub fn tolerance(&self) -> Tolerance {
        self.tol.and_then(|t| Tolerance::new(t).ok()).unwrap_or(Tolerance::ZERO)
    }

    /// Where output goes: `--out` resolved against [`OUT_DIR_ENV`] when relative, else stdout.
    pub fn output_path(&self) -> Option<PathBuf> {
        let out = PathBuf::from(self.out.as_ref()?);
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if out.is_relative() => Some(Path::new(&dir).join(out)),
            _ => Some(out),
        }
    }

    fn sim_config(&self, balls: usize) -> SimConfig {
        let mut config = SimConfig::for_balls(balls)
            .with_policy(self.simultaneity)
            .with_tolerance(self.tolerance());
        if let Some(cap) = self.max_events {
            config = config.with_max_events(cap);
        }
        config
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    record: &'static str,
    run: &'a RunSpec,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(out: &mut dyn Write, spec: &RunSpec, record: &'static str, body: T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, &Record { record, run: spec, body })?;
    out.write_all(b"\n")?;
    Ok(())
}

fn convert<S: Scalar>(v: &[BigRational]) -> Vec<S> {
    v.iter().map(S::from_rational).collect()
}

fn load_system<S: Scalar>(system: &SystemSpec) -> Result<(MassProfile<S>, SystemState<S>), CliError> {
    let masses = MassProfile::new(convert(system.masses.as_ref().ok_or(CliError::Missing("masses"))?))?;
    let positions = convert(system.positions.as_ref().ok_or(CliError::Missing("positions"))?);
    let velocities = convert(system.velocities.as_ref().ok_or(CliError::Missing("velocities"))?);
    let state = SystemState::new(positions, velocities, &masses)?;
    Ok((masses, state))
}

/// Residuals of momentum and `sum m v^2` between two velocity vectors:
/// exact differences in exact mode, relative magnitudes in float mode.
#[derive(Serialize)]
struct Residuals {
    momentum: serde_json::Value,
    energy: serde_json::Value,
}

fn residuals<S: Scalar>(masses: &MassProfile<S>, before: &[S], after: &[S]) -> Residuals {
    let dp = masses.momentum(after) - masses.momentum(before);
    let de = masses.vis_viva(after) - masses.vis_viva(before);
    match S::MODE {
        NumericMode::Exact => Residuals {
            momentum: dp.render().into(),
            energy: de.render().into(),
        },
        NumericMode::Float => {
            let abs_momentum: f64 = masses
                .as_slice()
                .iter()
                .zip(before)
                .map(|(m, v)| (m.to_f64() * v.to_f64()).abs())
                .sum();
            let energy = masses.vis_viva(before).to_f64();
            Residuals {
                momentum: (dp.to_f64().abs() / abs_momentum.max(f64::MIN_POSITIVE)).into(),
                energy: (de.to_f64().abs() / energy.max(f64::MIN_POSITIVE)).into(),
            }
        }
    }
}

#[derive(Serialize)]
#[serde(bound = "")]
struct MultipleCollisionRecord<'a, S: Scalar> {
    time: Rendered<'a, S>,
    pairs: &'a [usize],
}

fn termination_exit<S>(t: &Termination<S>) -> i32 {
    match t {
        Termination::Sorted => exit::OK,
        Termination::EventCapReached => exit::CAP,
        Termination::MultipleCollision { .. } => exit::MULTIPLE_COLLISION,
    }
}

fn run_simulate<S: Scalar>(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CliError> {
    let (masses, state) = load_system::<S>(&spec.system)?;
    let config = spec.sim_config(masses.len());
    let trace = simulate(&state, &masses, &config)?;
    for event in &trace.events {
        emit(out, spec, "event", EventRecord::from(event))?;
    }
    let multiple = match &trace.termination {
        Termination::MultipleCollision { time, pairs } => Some(MultipleCollisionRecord::<S> {
            time: Rendered(time),
            pairs,
        }),
        _ => None,
    };
    emit(
        out,
        spec,
        "summary",
        serde_json::json!({
            "collisions": trace.total_collisions(),
            "events": trace.events.len(),
            "bound": collision_bound(masses.pairs()),
            "termination": trace.termination.label(),
            "multiple_collision": multiple,
            "residuals": residuals(&masses, &state.velocities, &trace.final_state.velocities),
            "final": StateRecord::from(&trace.final_state),
        }),
    )?;
    Ok(termination_exit(&trace.termination))
}

#[derive(Serialize)]
#[serde(bound = "")]
struct MoveRecord<'a, S: Scalar> {
    #[serde(rename = "move")]
    number: usize,
    index: usize,
    position: RenderedSeq<'a, S>,
    inversions: u64,
    near_ties: usize,
}

fn load_weights<S: Scalar>(spec: &RunSpec) -> Result<WeightMatrix<S>, CliError> {
    let tol = spec.tolerance();
    if let Some(rows) = &spec.system.weights {
        let rows: Vec<Vec<S>> = rows.iter().map(|r| convert(r)).collect();
        return Ok(WeightMatrix::from_matrix(&rows, tol)?);
    }
    if let Some(k) = &spec.system.neighbor_weights {
        let n = spec
            .system
            .start
            .as_ref()
            .map(Vec::len)
            .or(spec.n)
            .unwrap_or(k.len() + 1);
        return Ok(WeightMatrix::from_neighbors(n, convert(k))?);
    }
    Err(CliError::Missing("masses, weights or neighbor_weights"))
}

fn run_game_with<S: Scalar>(spec: &RunSpec, k: &WeightMatrix<S>, out: &mut dyn Write) -> Result<i32, CliError> {
    let tol = spec.tolerance();
    let bound = collision_bound(k.n());
    let max_moves = spec.max_events.unwrap_or_else(|| default_max_moves(k, tol));

    if let Some(radius) = spec.search_radius {
        if spec.system.start.is_some() {
            return Err(CliError::Usage("--search-radius replaces --start; give one or the other".into()));
        }
        let radius = radius.clamp(0, 50);
        let side = (2 * radius + 1) as u64;
        let total = side.checked_pow(k.n() as u32).filter(|&t| t <= 5_000_000).ok_or_else(|| {
            CliError::Usage(format!("search space (2R+1)^n too large for n = {}", k.n()))
        })?;
        let best = (0..total)
            .into_par_iter()
            .map(|code| {
                let mut c = code;
                let p: Vec<S> = (0..k.n())
                    .map(|_| {
                        let digit = (c % side) as i64 - radius;
                        c /= side;
                        S::from_i64(digit)
                    })
                    .collect();
                let start = GamePosition::new(p).expect("n >= 1");
                let (len, path) = longest_negative_play(&start, k, max_moves, tol);
                (len, std::cmp::Reverse(code), start, path)
            })
            .max_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let (len, _, start, path) = best.expect("non-empty search space");
        emit(
            out,
            spec,
            "search",
            serde_json::json!({
                "starts_searched": total,
                "longest_play": len,
                "start": RenderedSeq(start.as_slice()),
                "firings": path,
                "bound": bound,
                "exceeds_bound": len as u64 > bound,
                "certificate": k.certificate_holds(tol),
            }),
        )?;
        return Ok(if len >= max_moves { exit::CAP } else { exit::OK });
    }

    let start = GamePosition::new(convert::<S>(spec.system.start.as_ref().ok_or(CliError::Missing("start"))?))?;
    let mut strategy = BuiltinStrategy::new(spec.strategy, spec.seed);
    let play = play_negative_game(&start, k, &mut strategy, max_moves, tol)?;
    for (number, m) in play.moves.iter().enumerate() {
        emit(
            out,
            spec,
            "move",
            MoveRecord {
                number: number + 1,
                index: m.index,
                position: RenderedSeq(m.position.as_slice()),
                inversions: m.inversions.count,
                near_ties: m.inversions.near_ties.len(),
            },
        )?;
    }
    emit(
        out,
        spec,
        "summary",
        serde_json::json!({
            "moves": play.len(),
            "terminated": play.terminated,
            "bound": bound,
            "exceeds_bound": play.len() as u64 > bound,
            "certificate": k.certificate_holds(tol),
            "inversion_sequence": play.inversion_sequence(),
            "max_moves": max_moves,
        }),
    )?;
    Ok(if play.terminated { exit::OK } else { exit::CAP })
}

fn run_game(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CliError> {
    let user_weights = spec.system.weights.is_some() || spec.system.neighbor_weights.is_some();
    match (spec.mode, user_weights) {
        (NumericMode::Exact, true) => run_game_with::<Exact>(spec, &load_weights(spec)?, out),
        (NumericMode::Float, true) => run_game_with::<f64>(spec, &load_weights(spec)?, out),
        (_, false) => {
            let masses = MassProfile::new(convert::<f64>(spec.system.masses.as_ref().ok_or(CliError::Missing("masses"))?))?;
            run_game_with::<f64>(spec, &WeightMatrix::from_masses(&masses), out)
        }
    }
}

fn run_check<S: Scalar>(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CliError> {
    let masses: Vec<S> = convert(spec.system.masses.as_ref().ok_or(CliError::Missing("masses"))?);
    let report = check_conditions_slice(&masses, spec.tolerance())?;
    let ok = report.geometric_ok;
    emit(out, spec, "conditions", report)?;
    Ok(if ok { exit::OK } else { exit::CONDITION_FAILED })
}

#[derive(Serialize)]
struct CertifyRecord {
    trial: Option<u64>,
    collisions: u64,
    termination: &'static str,
    passed: bool,
    weights_ok: bool,
    inversion_sequence: Vec<u64>,
    near_tie_events: Vec<usize>,
    failure: Option<String>,
    failed_event: Option<usize>,
}

fn certify_one<S: Scalar>(
    masses: &MassProfile<S>,
    state: &SystemState<S>,
    config: &SimConfig,
    trial: Option<u64>,
) -> Result<(CertifyRecord, i32), CliError> {
    let trace = simulate(state, masses, config)?;
    let audit = cross_validate(&trace, masses, audit_tolerance(config.tolerance));
    let termination_code = termination_exit(&trace.termination);
    let record = match audit {
        Ok(cv) => CertifyRecord {
            trial,
            collisions: trace.total_collisions(),
            termination: trace.termination.label(),
            passed: termination_code == exit::OK,
            weights_ok: cv.weights_ok,
            inversion_sequence: cv.inversion_sequence,
            near_tie_events: cv.near_tie_events,
            failure: None,
            failed_event: None,
        },
        Err(err) => {
            let failed_event = match &err {
                CrossValidationError::MismatchAt { event, .. }
                | CrossValidationError::NonNegativeFiring { event, .. }
                | CrossValidationError::InversionNotDecreasing { event, .. } => Some(*event),
                CrossValidationError::Model(_) => None,
            };
            let record = CertifyRecord {
                trial,
                collisions: trace.total_collisions(),
                termination: trace.termination.label(),
                passed: false,
                weights_ok: false,
                inversion_sequence: Vec::new(),
                near_tie_events: Vec::new(),
                failure: Some(err.to_string()),
                failed_event,
            };
            return Ok((record, exit::AUDIT_FAILED));
        }
    };
    Ok((record, termination_code))
}

/// Audits run in float even for exact traces, so they need a nonzero tolerance.
fn audit_tolerance(tol: Tolerance) -> Tolerance {
    if tol.tau() > 0.0 {
        tol
    } else {
        Tolerance::default()
    }
}

fn run_certify<S: Scalar>(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CliError> {
    let Some(trials) = spec.trials else {
        let (masses, state) = load_system::<S>(&spec.system)?;
        let (record, code) = certify_one(&masses, &state, &spec.sim_config(masses.len()), None)?;
        emit(out, spec, "certificate", record)?;
        return Ok(code);
    };
    let sampler = sampler_for(spec)?;
    let config = spec.sim_config(sampler.n + 1);
    let results: Vec<Result<(CertifyRecord, i32), CliError>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (masses, state) = sampler.sample::<S>(spec.seed, trial)?;
            certify_one(&masses, &state, &config, Some(trial))
        })
        .collect();
    let (mut passed, mut failed, mut skipped) = (0u64, 0u64, 0u64);
    for result in results {
        let (record, code) = result?;
        match code {
            exit::OK => passed += 1,
            exit::AUDIT_FAILED => failed += 1,
            _ => skipped += 1,
        }
        if code != exit::OK {
            emit(out, spec, "certificate", record)?;
        }
    }
    emit(
        out,
        spec,
        "summary",
        serde_json::json!({ "trials": trials, "passed": passed, "audit_failures": failed, "undefined_or_capped": skipped }),
    )?;
    Ok(if failed > 0 { exit::AUDIT_FAILED } else { exit::OK })
}

fn sampler_for(spec: &RunSpec) -> Result<SystemSampler, CliError> {
    let sys = &spec.system;
    let n = match (&sys.masses, spec.n) {
        (Some(m), _) => m.len().checked_sub(1).filter(|&n| n >= 1).ok_or(ModelError::TooFewBalls(m.len()))?,
        (None, Some(n)) if n >= 1 => n,
        (None, Some(n)) => return Err(ModelError::TooFewBalls(n + 1).into()),
        (None, None) => 4,
    };
    let masses = match (&sys.masses, spec.sampler) {
        (Some(m), _) => MassSampler::Fixed(m.clone()),
        (None, SamplerKind::Conforming) => MassSampler::LogConcave { max_term: 12 },
        (None, SamplerKind::Equal) => MassSampler::Equal,
        (None, SamplerKind::Unconstrained) => MassSampler::Unconstrained { max_term: 100 },
    };
    let velocities = match &sys.velocities {
        Some(v) => VelocitySampler::Fixed(v.clone()),
        None => VelocitySampler::Integers { bound: None },
    };
    let positions = match &sys.positions {
        Some(x) => PositionSampler::Fixed(x.clone()),
        None => PositionSampler::RandomGaps,
    };
    let sampler = SystemSampler {
        n,
        masses,
        velocities,
        positions,
    };
    // surface length errors before fanning out
    sampler.sample_exact(spec.seed, 0)?;
    Ok(sampler)
}

#[derive(Serialize)]
#[serde(bound = "")]
struct FindingRecord<'a, S: Scalar> {
    trial: u64,
    masses: RenderedSeq<'a, S>,
    initial: StateRecord<'a, S>,
    count: crate::analysis::CollisionCount,
    geometric_ok: bool,
    weights_ok: bool,
}

fn run_search<S: Scalar>(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CliError> {
    let trials = spec.trials.unwrap_or(1000);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let sampler = sampler_for(spec)?;
    let config = spec.sim_config(sampler.n + 1);
    match search_violations::<S>(&sampler, trials, spec.seed, &config) {
        Ok(report) => {
            for f in &report.findings {
                emit(
                    out,
                    spec,
                    "finding",
                    FindingRecord {
                        trial: f.trial,
                        masses: RenderedSeq(f.masses.as_slice()),
                        initial: StateRecord::from(&f.initial),
                        count: f.count,
                        geometric_ok: f.conditions.geometric_ok,
                        weights_ok: f.conditions.weights_ok,
                    },
                )?;
            }
            emit(
                out,
                spec,
                "summary",
                serde_json::json!({
                    "n": report.n,
                    "trials": report.trials,
                    "findings": report.findings.len(),
                    "bound": collision_bound(report.n),
                    "conforming_trials": report.conforming_trials,
                    "multiple_collision_trials": report.multiple_collision_trials,
                    "capped_trials": report.capped_trials,
                    "sampler": sampler,
                }),
            )?;
            Ok(exit::OK)
        }
        Err(SearchError::CriticalFinding(f)) => {
            emit(
                out,
                spec,
                "critical",
                FindingRecord {
                    trial: f.trial,
                    masses: RenderedSeq(f.masses.as_slice()),
                    initial: StateRecord::from(&f.initial),
                    count: f.count,
                    geometric_ok: f.conditions.geometric_ok,
                    weights_ok: f.conditions.weights_ok,
                },
            )?;
            Ok(exit::CRITICAL)
        }
        Err(SearchError::Sampler { source, .. }) => Err(source.into()),
    }
}

fn dispatch(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CliError> {
    macro_rules! by_mode {
        ($f:ident) => {
            match spec.mode {
                NumericMode::Exact => $f::<Exact>(spec, out),
                NumericMode::Float => $f::<f64>(spec, out),
            }
        };
    }
    match spec.command {
        CommandKind::Simulate => by_mode!(run_simulate),
        CommandKind::Game => run_game(spec, out),
        CommandKind::Check => by_mode!(run_check),
        CommandKind::Certify => by_mode!(run_certify),
        CommandKind::Search => by_mode!(run_search),
    }
}

/// Runs a command, writing records to `out` and diagnostics to `diag`. Returns the exit code.
pub fn run(spec: &RunSpec, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    match dispatch(spec, out).and_then(|code| {
        out.flush()?;
        Ok(code)
    }) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(diag, "error: {err}");
            exit::INPUT
        }
    }
}

/// Parses arguments, runs the command, and writes to `--out` or stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { exit::INPUT } else { exit::OK };
        }
    };
    let spec = match RunSpec::from_cli(&cli) {
        Ok(spec) => spec,
        Err(err) => {
            eprintln!("error: {err}");
            return exit::INPUT;
        }
    };
    let stderr = &mut io::stderr();
    match spec.output_path() {
        Some(path) => match fs::File::create(&path) {
            Ok(file) => run(&spec, &mut io::BufWriter::new(file), stderr),
            Err(err) => {
                eprintln!("error: cannot create {}: {err}", path.display());
                exit::INPUT
            }
        },
        None => run(&spec, &mut io::stdout().lock(), stderr),
    }
}
