use fluxcoh_core::noise::NoiseFile;
use fluxcoh_core::synth::{
    simulate_dephasing, synth_1f_noise, synth_decay_trace, synth_flux_scan, synth_wafer, NoiseTrajectorySpec,
    TraceModel,
};
use fluxcoh_core::DephasingTriple;

use super::load_qubit;
use crate::config::{LoadedConfig, SynthSection};
use crate::error::Result;
use crate::output::OutputDir;

pub fn run(cfg: &LoadedConfig, seed: u64, out: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("synth", &cfg.config.synth)?;
    let comments = out.comments();
    match sec {
        SynthSection::Scan {
            qubit,
            noise,
            phi,
            sequences,
            dips,
            scatter,
        } => {
            let (_, params) = load_qubit(&cfg.input("synth.qubit", qubit)?)?;
            let env = NoiseFile::load(cfg.input("synth.noise", noise)?)?;
            let grid = phi.points("synth.phi").map_err(|r| cfg.invalid(r))?;
            let scan = synth_flux_scan(&params, &env, &grid, sequences, dips, *scatter, seed)?;
            out.write_with("flux_scan.csv", |w| scan.write_csv(w, &comments))?;
        }
        SynthSection::Trace { model, delays, shots } => {
            let grid = delays.points("synth.delays").map_err(|r| cfg.invalid(r))?;
            let traces = synth_decay_trace(model, &grid, *shots, seed)?;
            match model {
                TraceModel::CompositeChi { .. } => {
                    let [a, b, c]: [_; 3] = traces
                        .try_into()
                        .map_err(|_| cfg.invalid("composite model must yield three traces"))?;
                    let triple = DephasingTriple::new([a, b, c])?;
                    out.write_with("triple.csv", |w| triple.write_csv(w, &comments))?;
                }
                TraceModel::JointPair { .. } => {
                    for (t, name) in traces.iter().zip(["trace_from_1.csv", "trace_from_0.csv"]) {
                        out.write_with(name, |w| t.write_csv(w, &comments))?;
                    }
                }
                _ => {
                    out.write_with("trace.csv", |w| traces[0].write_csv(w, &comments))?;
                }
            }
        }
        SynthSection::Noise {
            a_phi,
            duration_us,
            dt_us,
            f_low_hz,
            f_high_hz,
        } => {
            let mut spec = NoiseTrajectorySpec::with_default_band(*a_phi, *duration_us, *dt_us, seed);
            spec.f_low_hz = f_low_hz.unwrap_or(spec.f_low_hz);
            spec.f_high_hz = f_high_hz.unwrap_or(spec.f_high_hz);
            let x = synth_1f_noise(&spec)?;
            let rows: Vec<String> = x
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{},{}", i as f64 * dt_us, v))
                .collect();
            out.write_csv("noise_trajectory.csv", "t_us,delta_phi_phi0", &rows)?;
        }
        SynthSection::Ensemble {
            a_phi,
            dispersion,
            sequence,
            delays,
            n_traj,
            dt_us,
        } => {
            let grid = delays.points("synth.delays").map_err(|r| cfg.invalid(r))?;
            let duration = grid.last().copied().unwrap_or(0.0).max(*dt_us);
            let spec = NoiseTrajectorySpec::with_default_band(*a_phi, duration, *dt_us, seed);
            let r = simulate_dephasing(&spec, *dispersion, *sequence, &grid, *n_traj, seed)?;
            let rows: Vec<String> = (0..r.delays.len())
                .map(|i| format!("{},{},{}", r.delays[i], r.envelope[i], r.std_error[i]))
                .collect();
            out.write_csv("ensemble.csv", "delay_us,envelope,std_error", &rows)?;
        }
        SynthSection::Wafer { groups, n_dies } => {
            let map = synth_wafer(groups, *n_dies, seed)?;
            out.write_with("wafer.csv", |w| map.write_csv(w, &comments))?;
        }
    }
    Ok(())
}
