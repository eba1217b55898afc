//! Dataset-level orchestration: contexts, normalizer calibration,
//! alternating co-occurrence rounds, solving under a deadline and
//! evaluation.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use primdisc_core::config::{EvalConfig, SolverConfig};
use primdisc_core::context::{build_context, calibrate_weights};
use primdisc_core::eval::{evaluate_shape, VoxelMetrics};
use primdisc_core::matching::{build_cooccurrence, knn_shapes, shape_descriptor, ShapeDescriptor};
use primdisc_core::solver::{build_milp, solve_branch_and_bound_with, BranchOptions, Status};
use primdisc_core::{CrfWeights, OrientedBox, PipelineConfig, ShapeContext, TriangleMesh};

#[derive(Debug, Clone)]
pub struct ShapeInput {
    pub id: String,
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeStatus {
    Optimal,
    TimeLimit,
    Infeasible,
    /// The proposal stage produced no box; nothing is selected.
    NoProposals,
    /// The shape could not be processed; see the message.
    Failed,
}

impl ShapeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeStatus::Optimal => "optimal",
            ShapeStatus::TimeLimit => "time_limit",
            ShapeStatus::Infeasible => "infeasible",
            ShapeStatus::NoProposals => "no_proposals",
            ShapeStatus::Failed => "failed",
        }
    }
}

impl From<Status> for ShapeStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Optimal => ShapeStatus::Optimal,
            Status::TimeLimit => ShapeStatus::TimeLimit,
            Status::Infeasible => ShapeStatus::Infeasible,
        }
    }
}

/// Selected proposals of one shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub status: ShapeStatus,
    pub objective: f64,
    pub nodes: usize,
    pub seconds: f64,
    pub message: Option<String>,
}

impl Selection {
    fn failed(status: ShapeStatus, message: String) -> Selection {
        Selection { indices: Vec::new(), status, objective: 0.0, nodes: 0, seconds: 0.0, message: Some(message) }
    }
}

/// Contexts of a dataset and the weights they are solved with.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub inputs: Vec<ShapeInput>,
    /// Per shape: the context or the reason it could not be built.
    pub contexts: Vec<Result<ShapeContext, String>>,
    /// `config.weights`, with calibrated normalizers when enabled.
    pub weights: CrfWeights,
    pub config: PipelineConfig,
}

impl Prepared {
    pub fn valid(&self) -> impl Iterator<Item = (usize, &ShapeContext)> {
        self.contexts.iter().enumerate().filter_map(|(i, c)| c.as_ref().ok().map(|c| (i, c)))
    }

    /// Selected boxes of shape `i` in world coordinates.
    pub fn primitives(&self, i: usize, selection: &Selection) -> Vec<OrientedBox> {
        match &self.contexts[i] {
            Ok(ctx) => selection.indices.iter().map(|&j| ctx.proposals[j].clone()).collect(),
            Err(_) => Vec::new(),
        }
    }

    /// Fused unary energies of shape `i`'s selected boxes.
    pub fn energies(&self, i: usize, selection: &Selection, weights: &CrfWeights) -> Vec<f64> {
        match &self.contexts[i] {
            Ok(ctx) => {
                let e = ctx.fused_unary(weights);
                selection.indices.iter().map(|&j| e[j]).collect()
            }
            Err(_) => Vec::new(),
        }
    }
}

/// Builds every context and calibrates normalizers on the valid ones.
pub fn prepare(inputs: Vec<ShapeInput>, config: &PipelineConfig) -> Prepared {
    let contexts: Vec<Result<ShapeContext, String>> = inputs
        .iter()
        .map(|s| {
            let t = Instant::now();
            let r = build_context(&s.mesh, config).map_err(|e| e.to_string());
            match &r {
                Ok(c) => log::info!(
                    "{}: {} proposals, {} regions in {:.2}s",
                    s.id,
                    c.proposals.len(),
                    c.regions.len(),
                    t.elapsed().as_secs_f64()
                ),
                Err(e) => log::warn!("{}: {e}", s.id),
            }
            r
        })
        .collect();
    let weights = if config.calibrate_normalizers {
        let valid: Vec<&ShapeContext> = contexts.iter().filter_map(|c| c.as_ref().ok()).collect();
        if valid.iter().any(|c| !c.unary.is_empty()) {
            calibrate_weights(&config.weights, valid)
        } else {
            config.weights
        }
    } else {
        config.weights
    };
    log::info!("normalizers {:?}", weights.w);
    Prepared { inputs, contexts, weights, config: config.clone() }
}

/// Solves one shape's MILP under the configured time and node limits.
pub fn solve_shape(ctx: &ShapeContext, weights: &CrfWeights, solver: &SolverConfig) -> Selection {
    if ctx.proposals.is_empty() {
        return Selection::failed(ShapeStatus::NoProposals, "no proposals".into());
    }
    let start = Instant::now();
    let problem = match build_milp(ctx, weights) {
        Ok(p) => p,
        Err(e) => return Selection::failed(ShapeStatus::Failed, e.to_string()),
    };
    let limit = Duration::from_secs_f64(solver.time_limit_secs.max(0.0));
    let stop = || start.elapsed() >= limit;
    let options = BranchOptions { max_nodes: solver.max_nodes, record_nodes: false };
    match solve_branch_and_bound_with(&problem, &stop, &options) {
        Ok(out) => Selection {
            indices: out.solution.selected(&problem),
            status: out.solution.status.into(),
            objective: out.solution.objective_value,
            nodes: out.solution.node_count,
            seconds: start.elapsed().as_secs_f64(),
            message: None,
        },
        Err(e) => Selection::failed(ShapeStatus::Failed, e.to_string()),
    }
}

fn solve_all(prepared: &Prepared, weights: &CrfWeights) -> Vec<Selection> {
    prepared
        .contexts
        .iter()
        .zip(&prepared.inputs)
        .map(|(c, input)| match c {
            Ok(ctx) => {
                let s = solve_shape(ctx, weights, &prepared.config.solver);
                log::debug!("{}: {:?} {:?} in {:.3}s", input.id, s.status, s.indices, s.seconds);
                s
            }
            Err(e) => Selection::failed(ShapeStatus::Failed, e.clone()),
        })
        .collect()
}

/// Descriptor per valid shape, either computed from its voxel grid or
/// looked up by id in `features`.
pub fn descriptors(prepared: &Prepared, features: Option<&[ShapeDescriptor]>) -> Result<Vec<(usize, ShapeDescriptor)>, String> {
    prepared
        .valid()
        .map(|(i, ctx)| {
            let id = &prepared.inputs[i].id;
            let vector = match features {
                Some(f) => f
                    .iter()
                    .find(|d| &d.shape_id == id)
                    .map(|d| d.vector.clone())
                    .ok_or_else(|| format!("no feature vector for shape '{id}'"))?,
                None => shape_descriptor(&ctx.grid, prepared.config.matching.descriptor_cells),
            };
            Ok((i, ShapeDescriptor { shape_id: id.clone(), vector }))
        })
        .collect()
}

/// Runs the selection rounds with `weights`. Round 0 ignores
/// co-occurrence; each later round rebuilds every `t_i` from the previous
/// round's selections of the shape's nearest neighbours and re-solves.
/// Co-occurrence tables are left as built by the last round.
pub fn select(
    prepared: &mut Prepared,
    weights: &CrfWeights,
    features: Option<&[ShapeDescriptor]>,
) -> Result<Vec<Selection>, String> {
    for c in prepared.contexts.iter_mut().flatten() {
        c.clear_cooccurrence();
    }
    let mut first = *weights;
    first.mu_coc = 0.0;
    let mut selections = solve_all(prepared, &first);

    let m = &prepared.config.matching;
    let valid = prepared.valid().count();
    if !m.enabled || m.rounds <= 1 || valid < 2 || m.k == 0 || weights.mu_coc == 0.0 {
        return Ok(selections);
    }
    let k = m.k.min(valid - 1);
    let descs = descriptors(prepared, features)?;
    let dataset: Vec<ShapeDescriptor> = descs.iter().map(|(_, d)| d.clone()).collect();
    let mut neighbours: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, d) in &descs {
        let ids = knn_shapes(d, &dataset, k).map_err(|e| e.to_string())?;
        let idx = ids.iter().map(|id| descs.iter().find(|(_, d)| &d.shape_id == id).expect("known id").0).collect();
        neighbours.push((*i, idx));
    }
    let resolution = prepared.config.costs.iou_resolution;
    for round in 1..m.rounds {
        let canonical: Vec<Vec<OrientedBox>> = prepared
            .contexts
            .iter()
            .zip(&selections)
            .map(|(c, s)| match c {
                Ok(ctx) => s.indices.iter().map(|&j| ctx.proposals[j].transformed(&ctx.canonical)).collect(),
                Err(_) => Vec::new(),
            })
            .collect();
        for (i, nb) in &neighbours {
            let sets: Vec<(usize, Vec<OrientedBox>)> = nb.iter().map(|&j| (j, canonical[j].clone())).collect();
            let ctx = prepared.contexts[*i].as_mut().expect("valid context");
            ctx.cooc = build_cooccurrence(ctx, &sets, resolution).map_err(|e| e.to_string())?;
        }
        selections = solve_all(prepared, weights);
        log::info!("round {round} done");
    }
    Ok(selections)
}

/// Voxel metrics of every shape, `None` where the shape failed.
pub fn evaluate(prepared: &Prepared, selections: &[Selection], eval: &EvalConfig) -> Vec<Option<VoxelMetrics>> {
    selections
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let ctx = prepared.contexts[i].as_ref().ok()?;
            let boxes = prepared.primitives(i, s);
            match evaluate_shape(&prepared.inputs[i].mesh, &ctx.canonical, &boxes, eval.resolution, eval.truth_fill) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("{}: evaluation failed: {e}", prepared.inputs[i].id);
                    None
                }
            }
        })
        .collect()
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunResult {
    pub prepared: Prepared,
    pub selections: Vec<Selection>,
    pub metrics: Vec<Option<VoxelMetrics>>,
    pub seconds: f64,
}

impl RunResult {
    /// Mean recall over all shapes; failed shapes count as 0.
    pub fn mean_recall(&self) -> f64 {
        primdisc_core::eval::mean(self.metrics.iter().map(|m| m.as_ref().map_or(0.0, |m| m.recall)))
    }
}

/// Full pipeline on a dataset.
pub fn run(inputs: Vec<ShapeInput>, config: &PipelineConfig, features: Option<&[ShapeDescriptor]>) -> Result<RunResult, String> {
    let start = Instant::now();
    let mut prepared = prepare(inputs, config);
    let weights = prepared.weights;
    let selections = select(&mut prepared, &weights, features)?;
    let metrics = evaluate(&prepared, &selections, &config.eval);
    Ok(RunResult { prepared, selections, metrics, seconds: start.elapsed().as_secs_f64() })
}
