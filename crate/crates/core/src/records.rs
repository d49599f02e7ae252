//! Run records and checkpoint persistence.
//!
//! A [`RunRecord`] is the complete diagnostic output of one simulation:
//! the configuration echo, per-step time series of the energy-balance
//! terms and constraint residuals, sparse samples of the regularity
//! functional, and references to any snapshot checkpoints. Records
//! serialize to JSON and round-trip bit-exactly (floating-point values
//! are printed in shortest round-trip form).
//!
//! Checkpoints are self-describing binary files: an eight-byte magic tag,
//! a JSON header with grid metadata and physical parameters, then the raw
//! velocity and magnetic component arrays as little-endian `f64` in node
//! order (normal index fastest). The header's `version` field guards the
//! layout.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::ChannelGrid;
use crate::solver::{FieldState, SimConfig};

/// Magic tag opening every checkpoint file.
const CHECKPOINT_MAGIC: &[u8; 8] = b"CHNSNAP\x01";
/// Current checkpoint layout version.
const CHECKPOINT_VERSION: u32 = 1;

/// Per-step diagnostic time series. All vectors run in lockstep with `t`.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Series {
    /// Time stamps, strictly increasing.
    pub t: Vec<f64>,
    /// Total energy `(|v|^2 + |H|^2) / 2`.
    pub energy: Vec<f64>,
    /// Squared strain-rate magnitude of the velocity, `|Sv|^2`.
    pub strain_v_sq: Vec<f64>,
    /// Squared strain-rate magnitude of the magnetic field, `|SH|^2`.
    pub strain_h_sq: Vec<f64>,
    /// Wall flux `oint (|v_tau|^2 + |H_tau|^2)` over both walls.
    pub wall_flux: Vec<f64>,
    /// Relative divergence residual of the velocity.
    pub div_v: Vec<f64>,
    /// Relative divergence residual of the magnetic field.
    pub div_h: Vec<f64>,
    /// Largest wall vorticity-relation residual over walls and fields.
    pub wall_vorticity: Vec<f64>,
    /// Cross helicity `int v . H`.
    pub cross_helicity: Vec<f64>,
}

impl Series {
    /// Number of recorded samples.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn consistent(&self) -> bool {
        let n = self.t.len();
        self.energy.len() == n
            && self.strain_v_sq.len() == n
            && self.strain_h_sq.len() == n
            && self.wall_flux.len() == n
            && self.div_v.len() == n
            && self.div_h.len() == n
            && self.wall_vorticity.len() == n
            && self.cross_helicity.len() == n
    }
}

/// One sample of the regularity functional, taken every few steps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularitySample {
    pub step: usize,
    pub t: f64,
    /// Total of the six functional summands at the configured order.
    pub value: f64,
}

/// Reference to a snapshot taken during a run. The path is filled in once
/// the snapshot is written to disk; in-memory runs leave it empty.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckpointRef {
    pub step: usize,
    pub t: f64,
    pub path: Option<String>,
}

/// Complete diagnostic record of one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    /// Echo of the configuration the run was started from.
    pub config: SimConfig,
    /// Per-step diagnostics.
    pub series: Series,
    /// Sparse regularity-functional samples.
    pub regularity: Vec<RegularitySample>,
    /// Snapshot references in step order.
    pub checkpoints: Vec<CheckpointRef>,
}

impl RunRecord {
    /// Check the structural invariants: strictly increasing time stamps and
    /// consistent series lengths.
    pub fn validate(&self) -> Result<()> {
        if !self.series.consistent() {
            return Err(Error::Usage(
                "run record series have inconsistent lengths".to_string(),
            ));
        }
        for w in self.series.t.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Usage(format!(
                    "run record time stamps must increase strictly; got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for w in self.regularity.windows(2) {
            if w[1].step <= w[0].step {
                return Err(Error::Usage(
                    "regularity samples out of order".to_string(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<RunRecord> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunRecord> {
        RunRecord::from_json(&fs::read_to_string(path)?)
    }
}

/// Physical parameters stored alongside a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckpointMeta {
    pub epsilon: f64,
    pub zeta: f64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CheckpointHeader {
    version: u32,
    dim: usize,
    n_tangential: usize,
    n_normal: usize,
    t: f64,
    epsilon: f64,
    zeta: f64,
    /// Number of vector components stored per field (equals `dim`).
    components: usize,
}

/// Write a snapshot of `state` with its physical parameters.
pub fn write_checkpoint(
    path: &Path,
    state: &FieldState,
    meta: CheckpointMeta,
) -> Result<()> {
    let grid = state.v.grid();
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        dim: grid.dim(),
        n_tangential: grid.n_tangential(),
        n_normal: grid.n_normal(),
        t: state.t,
        epsilon: meta.epsilon,
        zeta: meta.zeta,
        components: grid.dim(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut file = fs::File::create(path)?;
    file.write_all(CHECKPOINT_MAGIC)?;
    file.write_all(&(header_json.len() as u32).to_le_bytes())?;
    file.write_all(&header_json)?;
    let mut buf = Vec::with_capacity(grid.n_nodes() * 8);
    for field in [&state.v, &state.h] {
        for c in 0..grid.dim() {
            buf.clear();
            for &x in field.comp(c) {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            file.write_all(&buf)?;
        }
    }
    Ok(())
}

/// Read a snapshot back, reconstructing the grid from the header.
pub fn read_checkpoint(path: &Path) -> Result<(FieldState, CheckpointMeta)> {
    let mut file = fs::File::open(path)?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Usage(format!(
            "{} is not a checkpoint file (bad magic)",
            path.display()
        )));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    file.read_exact(&mut header_json)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_json)?;
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::Usage(format!(
            "checkpoint version {} is not supported (expected {})",
            header.version, CHECKPOINT_VERSION
        )));
    }
    let grid = ChannelGrid::new(header.dim, header.n_tangential, header.n_normal)?;
    let n = grid.n_nodes();
    let mut read_field = || -> Result<VectorField> {
        let mut comps = Vec::with_capacity(header.components);
        for _ in 0..header.components {
            let mut bytes = vec![0u8; n * 8];
            file.read_exact(&mut bytes)?;
            let vals: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            comps.push(vals);
        }
        Ok(VectorField::from_comps(&grid, comps))
    };
    let v = read_field()?;
    let h = read_field()?;
    Ok((
        FieldState { t: header.t, v, h },
        CheckpointMeta {
            epsilon: header.epsilon,
            zeta: header.zeta,
        },
    ))
}
