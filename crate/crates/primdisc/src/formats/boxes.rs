//! Box and primitive interchange: proposal JSON, primitive-set JSON and
//! OBJ wireframes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use primdisc_core::codec::PrimitiveSet;
use primdisc_core::{OrientedBox, Vec3};

use crate::error::Result;

/// One proposal record. `axes` rows are the box axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub center: [f64; 3],
    pub axes: [[f64; 3]; 3],
    pub extents: [f64; 3],
    pub source_regions: Vec<usize>,
}

impl From<&OrientedBox> for ProposalRecord {
    fn from(b: &OrientedBox) -> Self {
        ProposalRecord {
            center: b.center.to_array(),
            axes: [b.axes[0].to_array(), b.axes[1].to_array(), b.axes[2].to_array()],
            extents: b.extents,
            source_regions: b.source_regions.clone(),
        }
    }
}

impl ProposalRecord {
    pub fn to_box(&self) -> Result<OrientedBox> {
        let axes = [Vec3::from(self.axes[0]), Vec3::from(self.axes[1]), Vec3::from(self.axes[2])];
        Ok(OrientedBox::new(Vec3::from(self.center), axes, self.extents)?.with_sources(self.source_regions.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalFile {
    pub proposals: Vec<ProposalRecord>,
}

pub fn write_proposals(boxes: &[OrientedBox]) -> Result<String> {
    let file = ProposalFile { proposals: boxes.iter().map(ProposalRecord::from).collect() };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn parse_proposals(text: &str) -> Result<Vec<OrientedBox>> {
    let file: ProposalFile = serde_json::from_str(text)?;
    file.proposals.iter().map(|r| r.to_box()).collect()
}

pub fn write_primitives(set: &PrimitiveSet) -> Result<String> {
    Ok(serde_json::to_string_pretty(set)?)
}

/// Parses and validates a primitive-set file (any count ≥ 1 is accepted).
pub fn parse_primitives(text: &str) -> Result<PrimitiveSet> {
    let set: PrimitiveSet = serde_json::from_str(text)?;
    set.validate(usize::MAX)?;
    Ok(set)
}

/// Box edges as OBJ `v`/`l` records: 8 vertices and 12 lines per box,
/// each box in its own group `box<i>`.
pub fn write_wireframe(boxes: &[OrientedBox]) -> String {
    // Corner k has sign bits x = k & 1, y = k & 2, z = k & 4.
    const EDGES: [(usize, usize); 12] =
        [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7), (0, 4), (1, 5), (2, 6), (3, 7)];
    let mut s = String::new();
    for (i, b) in boxes.iter().enumerate() {
        let _ = writeln!(s, "g box{i}");
        for c in b.corners() {
            let _ = writeln!(s, "v {:?} {:?} {:?}", c.x, c.y, c.z);
        }
        let base = 8 * i + 1;
        for (a, c) in EDGES {
            let _ = writeln!(s, "l {} {}", base + a, base + c);
        }
    }
    s
}
