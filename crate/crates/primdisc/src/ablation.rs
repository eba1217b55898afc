//! Ablation runner: the full model, the model with cost subsets switched
//! off, and the unary-only baseline that keeps the lowest-energy boxes.

use primdisc_core::eval::{mean, unary_only_selection, UNARY_ONLY_COUNT};
use primdisc_core::matching::ShapeDescriptor;
use primdisc_core::potentials::{cost_index, COST_NAMES};

use crate::formats::AblationRow;
use crate::pipeline::{evaluate, select, Prepared, Selection, ShapeStatus};

/// Parses `"oc,su+pc"` into drop sets `[[oc], [su, pc]]`.
pub fn parse_drop_list(text: &str) -> Result<Vec<Vec<usize>>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|set| {
            set.split('+')
                .map(|name| cost_index(name.trim()).ok_or_else(|| format!("unknown cost '{name}'")))
                .collect()
        })
        .collect()
}

/// Every single cost, one set each.
pub fn default_drops() -> Vec<Vec<usize>> {
    (0..COST_NAMES.len()).map(|i| vec![i]).collect()
}

fn drop_name(drop: &[usize]) -> String {
    drop.iter().map(|&i| COST_NAMES[i]).collect::<Vec<_>>().join("+")
}

/// Selections keeping the `UNARY_ONLY_COUNT` lowest fused energies.
pub fn unary_only(prepared: &Prepared) -> Vec<Selection> {
    prepared
        .contexts
        .iter()
        .map(|c| match c {
            Ok(ctx) => Selection {
                indices: unary_only_selection(&ctx.fused_unary(&prepared.weights), UNARY_ONLY_COUNT),
                status: ShapeStatus::Optimal,
                objective: 0.0,
                nodes: 0,
                seconds: 0.0,
                message: None,
            },
            Err(e) => Selection {
                indices: Vec::new(),
                status: ShapeStatus::Failed,
                objective: 0.0,
                nodes: 0,
                seconds: 0.0,
                message: Some(e.clone()),
            },
        })
        .collect()
}

fn mean_recall(prepared: &Prepared, selections: &[Selection]) -> f64 {
    let metrics = evaluate(prepared, selections, &prepared.config.eval);
    mean(metrics.iter().map(|m| m.as_ref().map_or(0.0, |m| m.recall)))
}

/// One row per configuration: `full`, `w/o <costs>` for each drop set,
/// then `unary only (top 4)`. Contexts are reused across configurations.
pub fn run_ablation(
    prepared: &mut Prepared,
    drops: &[Vec<usize>],
    features: Option<&[ShapeDescriptor]>,
) -> Result<Vec<AblationRow>, String> {
    let shapes = prepared.inputs.len();
    let base = prepared.weights;
    let mut rows = Vec::new();
    let full = select(prepared, &base, features)?;
    rows.push(AblationRow { configuration: "full".into(), dropped: String::new(), mean_recall: mean_recall(prepared, &full), shapes });
    for drop in drops {
        let w = base.without_costs(drop);
        let s = select(prepared, &w, features)?;
        let name = drop_name(drop);
        rows.push(AblationRow { configuration: format!("w/o {name}"), dropped: name, mean_recall: mean_recall(prepared, &s), shapes });
    }
    let u = unary_only(prepared);
    rows.push(AblationRow {
        configuration: format!("unary only (top {UNARY_ONLY_COUNT})"),
        dropped: String::new(),
        mean_recall: mean_recall(prepared, &u),
        shapes,
    });
    Ok(rows)
}
