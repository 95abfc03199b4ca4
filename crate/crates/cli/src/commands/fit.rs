use fluxcoh_core::fit::{
    bloch_envelope, fit_exponential, fit_gaussian_dephasing, fit_joint_t1, fit_nonexponential, DephasingMode,
    JointOptions,
};
use fluxcoh_core::{DecayTrace, DephasingTriple, InitLabel, SequenceType};
use serde::Serialize;

use crate::config::{EnvelopeMode, FitModel, LoadedConfig};
use crate::error::Result;
use crate::output::OutputDir;

#[derive(Serialize)]
struct Report<'a> {
    model: &'static str,
    inputs: Vec<String>,
    fit: &'a fluxcoh_core::FitResult,
}

pub fn run(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("fit", &cfg.config.fit)?;
    let expected = match sec.model {
        FitModel::Joint => 2,
        _ => 1,
    };
    if sec.traces.len() != expected {
        return Err(cfg.invalid(format!(
            "fit model `{}` takes {expected} trace file(s), got {}",
            sec.model.name(),
            sec.traces.len()
        )));
    }
    let paths = sec
        .traces
        .iter()
        .map(|p| cfg.input("fit.traces", p))
        .collect::<Result<Vec<_>>>()?;
    let t1_ref = || {
        sec.t1_us
            .ok_or_else(|| cfg.invalid(format!("fit model `{}` needs `t1_us`", sec.model.name())))
    };
    let seq = sec.sequence.unwrap_or_else(SequenceType::echo);
    let mode = match sec.mode {
        EnvelopeMode::Gaussian => DephasingMode::Gaussian {
            include_white: sec.include_white,
        },
        EnvelopeMode::Exponential => DephasingMode::Exponential,
    };
    let result = match sec.model {
        FitModel::Exp => fit_exponential(&DecayTrace::read_csv(&paths[0], InitLabel::From1)?)?,
        FitModel::Nonexp => fit_nonexponential(&DecayTrace::read_csv(&paths[0], InitLabel::From1)?)?,
        FitModel::Joint => {
            let [a, b] = sec.inits.unwrap_or([InitLabel::From1, InitLabel::From0]);
            let first = DecayTrace::read_csv(&paths[0], a)?;
            let second = DecayTrace::read_csv(&paths[1], b)?;
            let opts = JointOptions {
                fixed_b: sec.fixed_b,
                f01_ghz: sec.f01_mhz.map(|f| f * 1e-3),
            };
            fit_joint_t1(&first, &second, &opts)?
        }
        FitModel::Gaussian => {
            let env = DecayTrace::read_csv(&paths[0], InitLabel::None)?;
            fit_gaussian_dephasing(&env, t1_ref()?, seq, mode)?
        }
        FitModel::Composite => {
            let triple = DephasingTriple::read_csv(&paths[0])?;
            fit_gaussian_dephasing(&bloch_envelope(&triple)?, t1_ref()?, seq, mode)?
        }
    };
    for f in &result.flags {
        log::warn!("{f}");
    }
    let report = Report {
        model: sec.model.name(),
        inputs: sec.traces.iter().map(|p| p.display().to_string()).collect(),
        fit: &result,
    };
    out.write_json(&format!("fit_{}.json", sec.model.name()), &report)?;
    Ok(())
}
