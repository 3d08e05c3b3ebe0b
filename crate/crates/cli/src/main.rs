//! `refmodel`: command-line front end to the reference-model toolkit.
//!
//! Exit status is 0 on success, 1 when a check reports findings (`validate`,
//! `coverage`), and 2 on usage, parse and other errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use refmodel_core::composition::{
    apply_pattern, capability_coverage, connect, enumerate_alternatives, extract_view, slot_occupant, trace,
    validate_configuration, DotGraph, MergeMode, TraceDirection, Viewpoint,
};
use refmodel_core::document::{model_from_json, model_to_json};
use refmodel_core::evaluator::{compare, ensemble, rank_configurations, EnsembleSpec, PlannerRegistry, Scenario};
use refmodel_core::model::{Aspect, BlockKind, ConcernLayer, Model, Port, PortRef};
use refmodel_core::planners::{AdaptivePlanner, CoveragePlanner, PlannerId};
use refmodel_core::report::{charge_chart_svg, paths_svg, ranking_csv, ranking_text};
use refmodel_core::repository::{Asset, AssetFilter, Overrides, ReferenceRepository};
use refmodel_core::simulation::{run, SimParams, DEFAULT_CAPACITY, DEFAULT_CONSUMPTION_FACTOR};
use refmodel_core::terrain::{GenParams, Position, TerrainMap};
use refmodel_core::demo;

/// Repository file looked up under `REFMODEL_HOME` when `--repo` is absent.
const HOME_REPO_FILE: &str = "reference.refrepo.json";

#[derive(Parser)]
#[command(name = "refmodel", version, about = "Reference-architecture modeling and coverage-path energy evaluation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Repository document (default: $REFMODEL_HOME/reference.refrepo.json)
    #[arg(long, global = true)]
    repo: Option<PathBuf>,
    /// Model document
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Terrain map (text grid)
    #[arg(long, global = true)]
    map: Option<PathBuf>,
    /// Seed of the first generated map
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Battery capacity in energy units (default: 100)
    #[arg(long, global = true)]
    capacity: Option<f64>,
    /// Multiplier on every step's energy (default: 1)
    #[arg(long = "consumption-factor", global = true)]
    consumption_factor: Option<f64>,
    /// Start cell as row,col (default: first free cell in row-major order)
    #[arg(long, global = true)]
    start: Option<Position>,
    /// Write outputs into this directory instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Dot,
    Svg,
    Text,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Dot => "dot",
            Format::Svg => "svg",
            Format::Text => "txt",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Manage the reference repository
    #[command(subcommand)]
    Repo(RepoCommand),
    /// Build an application model from repository assets
    #[command(subcommand)]
    Model(ModelCommand),
    /// Check wiring, trace links and references (exit 1 on findings)
    Validate,
    /// Follow trace links from an element
    Trace {
        element: String,
        #[arg(long, value_enum, default_value = "down")]
        direction: Direction,
    },
    /// Capability coverage (exit 1 unless every capability is covered)
    Coverage,
    /// Extract the view of a (subject layer, aspect) viewpoint
    View {
        #[arg(value_parser = parse_layer)]
        subject: ConcernLayer,
        #[arg(value_parser = parse_aspect)]
        aspect: Aspect,
    },
    /// Configurations obtained by swapping the block in a slot
    Alternatives { slot: String },
    /// Plan a coverage path and print it
    Plan {
        #[arg(long, default_value = "edge-follow")]
        planner: String,
    },
    /// Plan and simulate one planner
    Simulate {
        #[arg(long, default_value = "terrain-aware")]
        planner: String,
    },
    /// Run several planners on the same map
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "edge-follow,terrain-aware")]
        planners: Vec<PlannerId>,
        /// With --format svg, draw the paths instead of the charge curves
        #[arg(long)]
        paths: bool,
    },
    /// Compare planners over a family of generated maps
    Ensemble {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "edge-follow,terrain-aware")]
        planners: Vec<PlannerId>,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Simulate and order the alternatives for an algorithm slot
    Rank {
        slot: String,
        /// Score over this many generated maps instead of --map
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Write the mowing-robot repository, model and reference map
    Demo,
}

#[derive(Subcommand)]
enum RepoCommand {
    /// Create an empty repository
    Init,
    /// Add an asset document ({"block": ...}, {"pattern": ...} or {"viewpoint": ...})
    Add { file: PathBuf },
    /// List asset ids
    List {
        #[arg(long, value_parser = parse_layer)]
        layer: Option<ConcernLayer>,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<BlockKind>,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Create an empty model
    Init { id: String },
    /// Copy a repository block into the model unchanged
    Adopt { asset: String },
    /// Copy a repository block with a new name, parameters or interface types
    Adapt {
        asset: String,
        #[arg(long)]
        name: Option<String>,
        /// name=value
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// port=InterfaceType
        #[arg(long = "interface", value_parser = parse_pair)]
        interfaces: Vec<(String, String)>,
    },
    /// Copy a repository block and add ports or parameters
    Extend {
        asset: String,
        /// port=InterfaceType
        #[arg(long, value_parser = parse_pair)]
        provides: Vec<(String, String)>,
        /// port=InterfaceType
        #[arg(long, value_parser = parse_pair)]
        requires: Vec<(String, String)>,
        /// name=value
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
    /// Wire a provided port to a required port (block.port)
    Connect { from: PortRef, to: PortRef },
    /// Merge a repository pattern into the model
    ApplyPattern {
        pattern: String,
        /// anchor=block
        #[arg(long = "bind", value_parser = parse_pair)]
        bindings: Vec<(String, String)>,
        /// Let pattern content replace differing blocks and bindings
        #[arg(long)]
        force: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Up,
    Down,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    /// Elevation bands, 1 to 4
    #[arg(long, default_value_t = 4)]
    levels: u8,
    #[arg(long = "feature-size", default_value_t = 4)]
    feature_size: usize,
}

impl GenArgs {
    fn params(&self) -> GenParams {
        GenParams {
            width: self.width,
            height: self.height,
            obstacle_density: self.density,
            levels: self.levels,
            feature_size: self.feature_size,
        }
    }
}

fn parse_layer(s: &str) -> Result<ConcernLayer, String> {
    ConcernLayer::from_token(s).ok_or_else(|| format!("unknown layer `{s}`"))
}

fn parse_aspect(s: &str) -> Result<Aspect, String> {
    Aspect::from_token(s).ok_or_else(|| format!("unknown aspect `{s}`"))
}

fn parse_kind(s: &str) -> Result<BlockKind, String> {
    BlockKind::from_token(s).ok_or_else(|| format!("unknown block kind `{s}`"))
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected key=value, got `{s}`")),
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = parse_pair(s)?;
    let v: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k, v))
}

enum Outcome {
    Ok,
    Findings,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Findings) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Repo(cmd) => repo_command(g, cmd),
        Command::Model(cmd) => model_command(g, cmd),
        Command::Validate => {
            let report = validate_configuration(&load_model(g)?);
            emit(g, "validation", Format::Text, &[Format::Text], |_| report.to_string())?;
            Ok(if report.is_valid() { Outcome::Ok } else { Outcome::Findings })
        }
        Command::Trace { element, direction } => {
            let direction = match direction {
                Direction::Up => TraceDirection::Up,
                Direction::Down => TraceDirection::Down,
            };
            let tree = trace(&load_model(g)?, element, direction)?;
            emit(g, "trace", Format::Text, &[Format::Text, Format::Dot], |f| match f {
                Format::Dot => tree.to_dot(),
                _ => tree.to_text(),
            })?;
            Ok(Outcome::Ok)
        }
        Command::Coverage => {
            let report = capability_coverage(&load_model(g)?);
            emit(g, "coverage", Format::Text, &[Format::Text, Format::Csv], |f| match f {
                Format::Csv => report.to_csv(),
                _ => report.to_text(),
            })?;
            Ok(if report.all_covered() { Outcome::Ok } else { Outcome::Findings })
        }
        Command::View { subject, aspect } => {
            let model = load_model(g)?;
            let viewpoint = Viewpoint::new(*subject, *aspect);
            let view = extract_view(&model, &viewpoint)?;
            emit(g, &viewpoint.name, Format::Text, &[Format::Text, Format::Dot], |f| match f {
                Format::Dot => view.dot(&model).to_dot(),
                _ => view.to_text(),
            })?;
            Ok(Outcome::Ok)
        }
        Command::Alternatives { slot } => {
            let model = load_model(g)?;
            let alternatives = enumerate_alternatives(&model, &load_repo(g)?, slot)?;
            let mut listing = String::new();
            for (i, alt) in alternatives.iter().enumerate() {
                listing.push_str(&format!("{i}\t{}\n", slot_occupant(&model, alt, slot)));
                if let Some(dir) = &g.out {
                    write_file(&dir.join(format!("alternative_{i}.refmodel.json")), &model_to_json(alt))?;
                }
            }
            print!("{listing}");
            Ok(Outcome::Ok)
        }
        Command::Plan { planner } => {
            let (map, start) = load_map(g)?;
            let path = named_planner(planner)?.plan(&map, start)?;
            emit(g, "path", Format::Csv, &[Format::Csv], |_| path.to_csv())?;
            Ok(Outcome::Ok)
        }
        Command::Simulate { planner } => {
            let (map, start) = load_map(g)?;
            let params = sim_params(g)?;
            let result = run(&map, named_planner(planner)?.as_ref(), start, &params)?;
            emit(g, "simulation", Format::Csv, &[Format::Csv, Format::Text, Format::Svg], |f| match f {
                Format::Text => result.to_text(params.capacity),
                Format::Svg => charge_chart_svg(&[&result], params.capacity),
                _ => result.to_csv(),
            })?;
            Ok(Outcome::Ok)
        }
        Command::Compare { planners, paths } => {
            let (map, start) = load_map(g)?;
            let params = sim_params(g)?;
            let report = compare(&map, planners, start, &params)?;
            let runs: Vec<_> = report.results.iter().map(|(_, r)| r).collect();
            emit(g, "compare", Format::Text, &[Format::Text, Format::Csv, Format::Svg], |f| match f {
                Format::Csv => report.to_csv(),
                Format::Svg if *paths => paths_svg(&map, &runs),
                Format::Svg => charge_chart_svg(&runs, params.capacity),
                _ => report.to_text(),
            })?;
            if g.out.is_some() && g.format.is_none_or(|f| f == Format::Csv) {
                emit_file(g, "compare_summary.csv", &report.summary_csv())?;
            }
            Ok(Outcome::Ok)
        }
        Command::Ensemble { n, planners, gen } => {
            let spec = EnsembleSpec {
                gen: gen.params(),
                seed0: g.seed.unwrap_or(0),
                n_maps: *n,
            };
            let stats = ensemble(&spec, planners, &sim_params(g)?)?;
            emit(g, "ensemble", Format::Text, &[Format::Text, Format::Csv], |f| match f {
                Format::Csv => stats.to_csv(),
                _ => stats.to_text(),
            })?;
            Ok(Outcome::Ok)
        }
        Command::Rank { slot, n, gen } => {
            let scenario = match n {
                Some(n) => Scenario::Ensemble(EnsembleSpec {
                    gen: gen.params(),
                    seed0: g.seed.unwrap_or(0),
                    n_maps: *n,
                }),
                None => {
                    let (map, start) = load_map(g)?;
                    Scenario::Map { map, start }
                }
            };
            let ranked = rank_configurations(
                &load_model(g)?,
                &load_repo(g)?,
                slot,
                &scenario,
                &sim_params(g)?,
                &PlannerRegistry::default(),
            )?;
            emit(g, "ranking", Format::Text, &[Format::Text, Format::Csv], |f| match f {
                Format::Csv => ranking_csv(&ranked),
                _ => ranking_text(&ranked),
            })?;
            Ok(Outcome::Ok)
        }
        Command::Demo => {
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let model = demo::demo_model();
            let view = extract_view(&model, &Viewpoint::new(ConcernLayer::Service, Aspect::Structure))?;
            write_file(&dir.join("reference.refrepo.json"), &demo::reference_repository().save())?;
            write_file(&dir.join("demo.refmodel.json"), &model_to_json(&model))?;
            write_file(&dir.join("reference.terrain.txt"), &demo::reference_map().save())?;
            write_file(&dir.join("service_structure.dot"), &view.dot(&model).to_dot())?;
            Ok(Outcome::Ok)
        }
    }
}

fn repo_command(g: &Global, cmd: &RepoCommand) -> Result<Outcome> {
    let path = repo_path(g)?;
    match cmd {
        RepoCommand::Init => {
            if path.exists() {
                bail!("{} already exists", path.display());
            }
            write_file(&path, &ReferenceRepository::new().save())?;
        }
        RepoCommand::Add { file } => {
            let text = read(file)?;
            let asset = Asset::from_json(&text).with_context(|| format!("reading {}", file.display()))?;
            let repo = load_repo(g)?.add_asset(asset)?;
            write_file(&path, &repo.save())?;
        }
        RepoCommand::List { layer, kind } => {
            let repo = load_repo(g)?;
            for id in repo.list_assets(AssetFilter {
                layer: *layer,
                kind: *kind,
            }) {
                let label = repo.get(&id).map(Asset::kind_label).unwrap_or("");
                println!("{id}\t{label}");
            }
        }
    }
    Ok(Outcome::Ok)
}

fn model_command(g: &Global, cmd: &ModelCommand) -> Result<Outcome> {
    let path = g.model.as_ref().ok_or_else(|| anyhow!("--model is required"))?;
    let next = match cmd {
        ModelCommand::Init { id } => {
            if path.exists() {
                bail!("{} already exists", path.display());
            }
            Model::new(id.as_str())
        }
        ModelCommand::Adopt { asset } => load_repo(g)?.adopt(asset, &load_model(g)?)?,
        ModelCommand::Adapt {
            asset,
            name,
            params,
            interfaces,
        } => {
            let overrides = Overrides {
                name: name.clone(),
                parameters: params.iter().cloned().collect(),
                interface_types: interfaces.iter().cloned().collect(),
                ..Overrides::default()
            };
            load_repo(g)?.adapt(asset, &overrides, &load_model(g)?)?
        }
        ModelCommand::Extend {
            asset,
            provides,
            requires,
            params,
        } => {
            let repo = load_repo(g)?;
            let layer = match repo.get(asset) {
                Some(Asset::Block(b)) => b.layer,
                _ => bail!("`{asset}` is not a block asset"),
            };
            let ports: Vec<Port> = provides
                .iter()
                .map(|(id, ty)| Port::provided(id, ty, layer))
                .chain(requires.iter().map(|(id, ty)| Port::required(id, ty, layer)))
                .collect();
            let params: BTreeMap<String, f64> = params.iter().cloned().collect();
            repo.extend(asset, &ports, &params, &load_model(g)?)?
        }
        ModelCommand::Connect { from, to } => connect(&load_model(g)?, from, to)?,
        ModelCommand::ApplyPattern {
            pattern,
            bindings,
            force,
        } => {
            let repo = load_repo(g)?;
            let bindings: BTreeMap<String, String> = bindings.iter().cloned().collect();
            let mode = if *force { MergeMode::ForceTheirs } else { MergeMode::Strict };
            apply_pattern(&load_model(g)?, repo.pattern(pattern)?, &bindings, mode)?
        }
    };
    write_file(path, &model_to_json(&next))?;
    Ok(Outcome::Ok)
}

fn named_planner(name: &str) -> Result<Box<dyn CoveragePlanner>> {
    if name == "adaptive" {
        return Ok(Box::new(AdaptivePlanner::default()));
    }
    Ok(Box::new(name.parse::<PlannerId>()?))
}

fn sim_params(g: &Global) -> Result<SimParams> {
    Ok(SimParams::new(
        g.capacity.unwrap_or(DEFAULT_CAPACITY),
        g.consumption_factor.unwrap_or(DEFAULT_CONSUMPTION_FACTOR),
    )?)
}

fn repo_path(g: &Global) -> Result<PathBuf> {
    if let Some(p) = &g.repo {
        return Ok(p.clone());
    }
    match std::env::var_os("REFMODEL_HOME") {
        Some(home) => Ok(PathBuf::from(home).join(HOME_REPO_FILE)),
        None => bail!("no repository: pass --repo or set REFMODEL_HOME"),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_repo(g: &Global) -> Result<ReferenceRepository> {
    let path = repo_path(g)?;
    ReferenceRepository::load(&read(&path)?).with_context(|| format!("in {}", path.display()))
}

fn load_model(g: &Global) -> Result<Model> {
    let path = g.model.as_ref().ok_or_else(|| anyhow!("--model is required"))?;
    model_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_map(g: &Global) -> Result<(TerrainMap, Position)> {
    let path = g.map.as_ref().ok_or_else(|| anyhow!("--map is required"))?;
    let map = TerrainMap::load(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let start = g.start.unwrap_or_else(|| map.default_start());
    Ok((map, start))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn emit_file(g: &Global, name: &str, content: &str) -> Result<()> {
    match &g.out {
        Some(dir) => write_file(&dir.join(name), content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Renders in the requested format (or `default`) to standard output, or to
/// `<out>/<stem>.<ext>` when `--out` is given.
fn emit(g: &Global, stem: &str, default: Format, supported: &[Format], render: impl Fn(Format) -> String) -> Result<()> {
    let format = g.format.unwrap_or(default);
    if !supported.contains(&format) {
        let names: Vec<String> = supported
            .iter()
            .filter_map(|f| f.to_possible_value().map(|v| v.get_name().to_string()))
            .collect();
        bail!("unsupported format for this command; choose one of {}", names.join(", "));
    }
    emit_file(g, &format!("{stem}.{}", format.extension()), &render(format))
}
