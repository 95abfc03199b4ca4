use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wafer::{JunctionKind, WaferMap, WaferRecord};

/// One structure type placed once on every die.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaferGroupSpec {
    pub kind: JunctionKind,
    pub area_um2: f64,
    pub n_junctions: u32,
    pub rn_mean_ohm: f64,
    /// σ/μ of the normal draw.
    pub rsd: f64,
}

/// Die pitch of the synthetic layout, mm.
const DIE_PITCH_MM: f64 = 10.0;

/// Wafer with `n_dies` dies on a square grid, each carrying one structure of
/// every group with R_n drawn from N(μ, (rsd·μ)²).
pub fn synth_wafer(groups: &[WaferGroupSpec], n_dies: usize, seed: u64) -> Result<WaferMap> {
    for g in groups {
        if !(g.rn_mean_ohm > 0.0 && g.rsd >= 0.0 && g.rsd < 0.3) {
            return Err(Error::invalid("rsd", "need rn_mean_ohm > 0 and 0 <= rsd < 0.3"));
        }
    }
    let side = (n_dies as f64).sqrt().ceil().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_dies * groups.len());
    for die in 0..n_dies {
        let (row, col) = (die / side, die % side);
        let offset = 0.5 * (side as f64 - 1.0);
        for g in groups {
            let z: f64 = StandardNormal.sample(&mut rng);
            records.push(WaferRecord {
                die_id: format!("D{die:02}"),
                x_mm: (col as f64 - offset) * DIE_PITCH_MM,
                y_mm: (row as f64 - offset) * DIE_PITCH_MM,
                kind: g.kind,
                area_um2: g.area_um2,
                n_junctions: g.n_junctions,
                rn_ohm: g.rn_mean_ohm * (1.0 + g.rsd * z),
            });
        }
    }
    WaferMap::new(format!("synthetic-{seed}"), records)
}
