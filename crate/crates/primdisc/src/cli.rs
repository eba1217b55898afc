//! Command line interface.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};

use primdisc_core::codec::{decode, encode, DecodeMode, MAX_PRIMITIVES};
use primdisc_core::cuboid::rasterize_boxes;
use primdisc_core::eval::TruthFill;
use primdisc_core::geometry::Aabb;
use primdisc_core::matching::ShapeDescriptor;
use primdisc_core::render::{camera_rig, render_depth, Intrinsics};
use primdisc_core::solver::build_milp;
use primdisc_core::voxel::BOUNDS_PADDING;
use primdisc_core::{Lattice, PipelineConfig};

use crate::ablation::{default_drops, parse_drop_list, run_ablation};
use crate::dataset::{load_dataset, shape_id, RunManifest, ShapeRecord};
use crate::formats::{
    load_mesh, parse_features, parse_primitives, read_text, write_context, write_csv, write_depth_pgm, write_file,
    write_lp, write_off, write_primitives, write_proposals, write_voxels, write_wireframe, MetricsRow,
};
use crate::pipeline::{self, prepare, select, ShapeInput};
use crate::synthetic::{generate_copies, generate_suite, DEFAULT_JITTER};

#[derive(Debug, Parser)]
#[command(name = "primdisc", version, about = "Discover cuboid primitives in 3D shapes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh to primitive-set JSON and OBJ wireframe.
    Discover(DiscoverArgs),
    /// Dataset directory to per-shape metrics CSV.
    Evaluate(EvaluateArgs),
    /// Dataset directory to ablation table CSV.
    Ablate(AblateArgs),
    /// Primitive-set JSON to OBJ wireframe and/or voxel file.
    Export(ExportArgs),
    /// Writes a synthetic box-assembly dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    /// Input mesh (.off or .obj).
    pub mesh: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
    /// Largest number of primitives written to the primitive set.
    #[arg(long, default_value_t = MAX_PRIMITIVES)]
    pub max_primitives: usize,
    /// Also write all proposals (JSON and OBJ wireframe).
    #[arg(long)]
    pub dump_proposals: bool,
    /// Also write the cost bundle JSON.
    #[arg(long)]
    pub dump_context: bool,
    /// Also write the MILP in LP text format.
    #[arg(long)]
    pub dump_lp: bool,
    /// Also write the six depth views as 16-bit PGM images.
    #[arg(long)]
    pub dump_depth: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of .off/.obj meshes.
    pub dataset: PathBuf,
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
    /// Feature file replacing the built-in shape descriptors.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    pub dataset: PathBuf,
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
    /// Comma-separated drop sets; `+` joins costs into one set
    /// (e.g. `oc,su+pc`). Default: every single cost.
    #[arg(long)]
    pub drop: Option<String>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Every primitive in the file, likelihood ignored.
    All,
    /// Primitives with likelihood at least 0.5.
    Expected,
    /// Each primitive with probability equal to its likelihood.
    Sampled,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Primitive-set JSON.
    pub primitives: PathBuf,
    #[arg(long)]
    pub obj: Option<PathBuf>,
    #[arg(long)]
    pub voxels: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::All)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    pub out: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Vertex jitter sigma as a fraction of the shape diagonal.
    #[arg(long, default_value_t = DEFAULT_JITTER)]
    pub jitter: f64,
    /// Write `count` jittered copies of a single shape instead.
    #[arg(long)]
    pub copies: bool,
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got '{s}'")),
    }
}

/// Overrides for every configuration key; applied on top of `--config`.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// TOML configuration file; keys mirror the manifest's `config`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub fov_deg: Option<f64>,
    #[arg(long)]
    pub max_depth_jump: Option<f64>,
    #[arg(long)]
    pub angle_threshold_deg: Option<f64>,
    #[arg(long)]
    pub spacing_factor: Option<f64>,
    #[arg(long)]
    pub min_region_size: Option<usize>,
    #[arg(long)]
    pub proximity_factor: Option<f64>,
    #[arg(long)]
    pub dedup_threshold: Option<f64>,
    #[arg(long)]
    pub min_extent_fraction: Option<f64>,
    #[arg(long)]
    pub extent_padding_factor: Option<f64>,
    /// Lattice resolution for proposal de-duplication IoU.
    #[arg(long)]
    pub proposal_iou_resolution: Option<usize>,

    #[arg(long)]
    pub grid_resolution: Option<usize>,
    #[arg(long)]
    pub compactness_cells: Option<usize>,
    #[arg(long)]
    pub face_band_fraction: Option<f64>,
    #[arg(long)]
    pub support_cap: Option<f64>,
    /// Lattice resolution for overlap and co-occurrence IoU.
    #[arg(long)]
    pub cost_iou_resolution: Option<usize>,
    #[arg(long)]
    pub incidence_threshold: Option<f64>,
    #[arg(long)]
    pub incidence_margin_fraction: Option<f64>,
    #[arg(long)]
    pub symmetry_max_points: Option<usize>,
    #[arg(long)]
    pub convexity_max_points: Option<usize>,

    /// Six unary weights in cost order oc,su,pc,sc,co,ss.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu_u: Option<Vec<f64>>,
    /// Six unary normalizers in cost order.
    #[arg(long, value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_pw: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_par: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_cov: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_coc: Option<f64>,
    /// Calibrate normalizers on the processed shapes.
    #[arg(long, value_parser = parse_bool)]
    pub calibrate: Option<bool>,

    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub max_nodes: Option<usize>,

    /// Enable co-occurrence across shapes.
    #[arg(long, value_parser = parse_bool)]
    pub matching: Option<bool>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub descriptor_cells: Option<usize>,

    #[arg(long)]
    pub eval_resolution: Option<usize>,
    #[arg(long, value_parser = ["solid", "hollow"])]
    pub truth_fill: Option<String>,
}

fn six(name: &str, v: &[f64]) -> anyhow::Result<[f64; 6]> {
    <[f64; 6]>::try_from(v).map_err(|_| anyhow::anyhow!("--{name} takes 6 comma-separated values, got {}", v.len()))
}

impl ConfigArgs {
    /// Defaults, then the config file, then individual flags.
    pub fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = read_text(path)?;
                toml::from_str::<PipelineConfig>(&text).with_context(|| format!("reading {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    c.$($field)+ = v;
                }
            };
        }
        set!(seed => seed);
        set!(image_size => proposals.image_size);
        set!(fov_deg => proposals.fov_deg);
        set!(max_depth_jump => proposals.max_depth_jump);
        set!(angle_threshold_deg => proposals.angle_threshold_deg);
        set!(spacing_factor => proposals.spacing_factor);
        set!(min_region_size => proposals.min_region_size);
        set!(proximity_factor => proposals.proximity_factor);
        set!(dedup_threshold => proposals.dedup_threshold);
        set!(min_extent_fraction => proposals.min_extent_fraction);
        set!(extent_padding_factor => proposals.extent_padding_factor);
        set!(proposal_iou_resolution => proposals.iou_resolution);
        set!(grid_resolution => costs.grid_resolution);
        set!(compactness_cells => costs.compactness_cells);
        set!(face_band_fraction => costs.face_band_fraction);
        set!(support_cap => costs.support_cap);
        set!(cost_iou_resolution => costs.iou_resolution);
        set!(incidence_threshold => costs.incidence_threshold);
        set!(incidence_margin_fraction => costs.incidence_margin_fraction);
        set!(symmetry_max_points => costs.symmetry_max_points);
        set!(convexity_max_points => costs.convexity_max_points);
        set!(mu_pw => weights.mu_pw);
        set!(mu_par => weights.mu_par);
        set!(mu_cov => weights.mu_cov);
        set!(mu_coc => weights.mu_coc);
        set!(calibrate => calibrate_normalizers);
        set!(time_limit => solver.time_limit_secs);
        set!(max_nodes => solver.max_nodes);
        set!(matching => matching.enabled);
        set!(k => matching.k);
        set!(rounds => matching.rounds);
        set!(descriptor_cells => matching.descriptor_cells);
        set!(eval_resolution => eval.resolution);
        if let Some(v) = &self.mu_u {
            c.weights.mu_u = six("mu-u", v)?;
        }
        if let Some(v) = &self.w {
            c.weights.w = six("w", v)?;
        }
        if let Some(f) = &self.truth_fill {
            c.eval.truth_fill = if f == "solid" { TruthFill::Solid } else { TruthFill::Hollow };
        }
        c.weights.validate_relaxed()?;
        if !(c.solver.time_limit_secs >= 0.0) {
            bail!("time limit must be non-negative");
        }
        Ok(c)
    }
}

fn read_features(path: Option<&Path>) -> anyhow::Result<Option<Vec<ShapeDescriptor>>> {
    match path {
        Some(p) => Ok(Some(parse_features(&read_text(p)?).with_context(|| format!("reading {}", p.display()))?)),
        None => Ok(None),
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn output(manifest: &mut RunManifest, path: PathBuf, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    write_file(&path, contents)?;
    manifest.outputs.push(path.display().to_string());
    Ok(())
}

fn discover(args: &DiscoverArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = args.config.resolve()?;
    create_dir(&args.out)?;
    let (mesh, report) = load_mesh(&args.mesh)?;
    if !report.degenerate_faces.is_empty() {
        log::warn!("{} degenerate faces kept", report.degenerate_faces.len());
    }
    let id = shape_id(&args.mesh);
    let mut manifest = RunManifest::new("discover", &config);

    if args.dump_depth {
        let rig = camera_rig(&mesh.bounds())?;
        let size = config.proposals.image_size;
        let k = Intrinsics::from_vertical_fov(size, size, config.proposals.fov_deg);
        for (v, cam) in rig.iter().enumerate() {
            let view = render_depth(&mesh, &cam.pose, &k, size, size)?;
            output(&mut manifest, args.out.join(format!("{id}.view{v}.pgm")), write_depth_pgm(&view))?;
        }
    }

    let mut prepared = prepare(vec![ShapeInput { id: id.clone(), mesh }], &config);
    let weights = prepared.weights;
    manifest.effective_weights = weights;
    let selections = select(&mut prepared, &weights, None).map_err(anyhow::Error::msg)?;
    let selection = &selections[0];
    manifest.shapes.push(ShapeRecord::from_selection(&id, selection));

    if let Ok(ctx) = &prepared.contexts[0] {
        if args.dump_proposals {
            output(&mut manifest, args.out.join(format!("{id}.proposals.json")), write_proposals(&ctx.proposals)?)?;
            output(&mut manifest, args.out.join(format!("{id}.proposals.obj")), write_wireframe(&ctx.proposals))?;
        }
        if args.dump_context {
            output(&mut manifest, args.out.join(format!("{id}.context.json")), write_context(ctx)?)?;
        }
        if args.dump_lp && !ctx.proposals.is_empty() {
            output(&mut manifest, args.out.join(format!("{id}.lp")), write_lp(&build_milp(ctx, &weights)?))?;
        }
    }

    let boxes = prepared.primitives(0, selection);
    let energies = prepared.energies(0, selection, &weights);
    if !boxes.is_empty() {
        let set = encode(&boxes, &energies, args.max_primitives.max(1))?;
        output(&mut manifest, args.out.join(format!("{id}.primitives.json")), write_primitives(&set)?)?;
        output(&mut manifest, args.out.join(format!("{id}.primitives.obj")), write_wireframe(&set.to_boxes()?))?;
    }
    log::info!("{id}: {} primitives ({})", boxes.len(), selection.status.as_str());
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    if let Some(msg) = &selection.message {
        bail!("{id}: {msg}");
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> anyhow::Result<()> {
    let config = args.config.resolve()?;
    create_dir(&args.out)?;
    let features = read_features(args.features.as_deref())?;
    let (inputs, failed) = load_dataset(&args.dataset)?;
    if inputs.is_empty() && failed.is_empty() {
        bail!("no meshes in {}", args.dataset.display());
    }
    let mut manifest = RunManifest::new("evaluate", &config);
    let result = pipeline::run(inputs, &config, features.as_deref()).map_err(anyhow::Error::msg)?;
    manifest.effective_weights = result.prepared.weights;

    let mut rows = Vec::new();
    let prim_dir = args.out.join("primitives");
    create_dir(&prim_dir)?;
    for (i, s) in result.selections.iter().enumerate() {
        let id = &result.prepared.inputs[i].id;
        manifest.shapes.push(ShapeRecord::from_selection(id, s));
        if let Some(m) = &result.metrics[i] {
            rows.push(MetricsRow::new(id, s.status.as_str(), s.indices.len(), m));
        }
        let boxes = result.prepared.primitives(i, s);
        if !boxes.is_empty() {
            let energies = result.prepared.energies(i, s, &result.prepared.weights);
            let set = encode(&boxes, &energies, boxes.len())?;
            output(&mut manifest, prim_dir.join(format!("{id}.primitives.json")), write_primitives(&set)?)?;
        }
    }
    for (id, e) in &failed {
        manifest.shapes.push(ShapeRecord::failed(id, e));
    }
    output(&mut manifest, args.out.join("metrics.csv"), write_csv(&rows)?)?;
    log::info!("mean recall {:.4} over {} shapes", result.mean_recall(), result.selections.len());
    manifest.seconds = result.seconds;
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(())
}

fn ablate(args: &AblateArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = args.config.resolve()?;
    create_dir(&args.out)?;
    let features = read_features(args.features.as_deref())?;
    let drops = match &args.drop {
        Some(d) => parse_drop_list(d).map_err(anyhow::Error::msg)?,
        None => default_drops(),
    };
    let (inputs, failed) = load_dataset(&args.dataset)?;
    if inputs.is_empty() {
        bail!("no readable meshes in {}", args.dataset.display());
    }
    let mut manifest = RunManifest::new("ablate", &config);
    let mut prepared = prepare(inputs, &config);
    manifest.effective_weights = prepared.weights;
    let rows = run_ablation(&mut prepared, &drops, features.as_deref()).map_err(anyhow::Error::msg)?;
    for (i, input) in prepared.inputs.iter().enumerate() {
        if let Err(e) = &prepared.contexts[i] {
            manifest.shapes.push(ShapeRecord::failed(&input.id, e));
        }
    }
    for (id, e) in &failed {
        manifest.shapes.push(ShapeRecord::failed(id, e));
    }
    output(&mut manifest, args.out.join("ablation.csv"), write_csv(&rows)?)?;
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(())
}

fn export(args: &ExportArgs) -> anyhow::Result<()> {
    let set = parse_primitives(&read_text(&args.primitives)?)?;
    if args.obj.is_none() && args.voxels.is_none() {
        bail!("nothing to export: pass --obj and/or --voxels");
    }
    let boxes = set.to_boxes()?;
    if let Some(path) = &args.obj {
        write_file(path, write_wireframe(&boxes))?;
    }
    if let Some(path) = &args.voxels {
        let bounds = boxes
            .iter()
            .map(|b| b.aabb())
            .reduce(|a, b| a.union(&b))
            .unwrap_or(Aabb::new(primdisc_core::Vec3::ZERO, primdisc_core::Vec3::splat(1.0)));
        let lattice = Lattice::enclosing(&bounds, args.resolution, BOUNDS_PADDING)?;
        let grid = match args.mode {
            ModeArg::All => rasterize_boxes(&boxes, &lattice),
            ModeArg::Expected => decode(&set, &lattice, DecodeMode::Expected)?,
            ModeArg::Sampled => decode(&set, &lattice, DecodeMode::Sampled { seed: args.seed })?,
        };
        write_file(path, write_voxels(&grid))?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    create_dir(&args.out)?;
    let shapes = if args.copies {
        generate_copies(args.count, args.jitter, args.seed)
    } else {
        generate_suite(args.count, args.jitter, args.seed)
    };
    for s in &shapes {
        write_file(&args.out.join(format!("{}.off", s.id)), write_off(&s.mesh))?;
        write_file(&args.out.join(format!("{}.truth.json", s.id)), write_proposals(&s.boxes)?)?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Discover(a) => discover(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Ablate(a) => ablate(a),
        Command::Export(a) => export(a),
        Command::Synth(a) => synth(a),
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
