pub mod extract;
pub mod fit;
pub mod spectrum;
pub mod synth;
pub mod wafer;
pub mod zeta;

use std::path::Path;

use fluxcoh_core::qubit::QubitFile;
use fluxcoh_core::FluxoniumParams;

use crate::error::Result;

pub(crate) fn load_qubit(path: &Path) -> Result<(QubitFile, FluxoniumParams)> {
    let file = QubitFile::load(path)?;
    let params = file.params()?;
    if let Some(w) = params.ratio_warning() {
        log::warn!("{}: {w}", path.display());
    }
    Ok((file, params))
}
