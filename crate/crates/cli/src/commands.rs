use std::path::{Path, PathBuf};

use dvqe::driver::{self, LadderReport, SweepPlan};
use dvqe::oracle::exact_spectrum;
use dvqe::pauli::{PauliSum, MAX_DENSE_QUBITS};
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::CliError;

/// Whether every level (or point) converged.
pub type Converged = bool;

#[derive(Serialize)]
struct LadderDocument<'a> {
    schema_version: u32,
    mode: Mode,
    seed: u64,
    qubit_count: usize,
    /// Oracle eigenvalues for the solved levels.
    oracle: Option<Vec<f64>>,
    converged: bool,
    ladder: &'a LadderReport,
}

fn oracle(h: &PauliSum, levels: usize) -> Option<Vec<f64>> {
    if h.qubit_count() > MAX_DENSE_QUBITS {
        return None;
    }
    exact_spectrum(h)
        .ok()
        .map(|s| s.eigenvalues.into_iter().take(levels).collect())
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn write_ladder(
    dir: &Path,
    config: &RunConfig,
    h: &PauliSum,
    report: &LadderReport,
) -> Result<(), CliError> {
    create_dir(dir)?;
    let doc = LadderDocument {
        schema_version: crate::config::SCHEMA_VERSION,
        mode: config.mode,
        seed: config.seed,
        qubit_count: h.qubit_count(),
        oracle: oracle(h, report.levels.len()),
        converged: report.converged(),
        ladder: report,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(CliError::json)?;
    write(&dir.join("ladder.json"), &(json + "\n"))?;
    write(&dir.join("ladder.csv"), &driver::ladder_csv(report))
}

pub fn load_hamiltonian(path: &Path) -> Result<PauliSum, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    PauliSum::parse(&text).map_err(|e| CliError::Core(e).at(path))
}

/// Solves `levels` rungs of one Hamiltonian into `ladder.json` and
/// `ladder.csv`.
pub fn solve(config: &RunConfig, hamiltonian: &Path, levels: usize) -> Result<Converged, CliError> {
    let h = load_hamiltonian(hamiltonian)?;
    let settings = config.settings()?;
    let mode = config.evaluation_mode(h.qubit_count(), settings.shots.shots_for(0))?;
    let report = driver::solve_ladder(&h, levels, &settings, &mode, config.seed, None)?;
    write_ladder(&config.out_dir, config, &h, &report)?;
    log::info!("wrote {}", config.out_dir.join("ladder.json").display());
    Ok(report.converged())
}

/// Directory of one sweep point under the output directory.
pub fn point_dir(out_dir: &Path, distance: f64) -> PathBuf {
    out_dir.join("points").join(format!("{distance}"))
}

/// Solves every point of a sweep plan. Each point gets its own ladder
/// files; `sweep.csv` and `errors_by_level.csv` collect them.
pub fn sweep(config: &RunConfig, plan_path: &Path) -> Result<Converged, CliError> {
    let (plan, points) = SweepPlan::load(plan_path).map_err(|e| CliError::Core(e).at(plan_path))?;
    let qubits = points[0].hamiltonian.qubit_count();
    if let Some(p) = points
        .iter()
        .find(|p| p.hamiltonian.qubit_count() != qubits)
    {
        return Err(CliError::Config(format!(
            "distance {} has {} qubits, the first point has {qubits}",
            p.distance,
            p.hamiltonian.qubit_count()
        ))
        .at(plan_path));
    }
    let settings = config.settings()?;
    let mode = config.evaluation_mode(qubits, settings.shots.shots_for(0))?;
    let report = driver::sweep(
        &points,
        plan.anchor_distance,
        plan.levels,
        &settings,
        &mode,
        config.seed,
    )?;

    create_dir(&config.out_dir)?;
    for (point, result) in points.iter().zip(&report.points) {
        let dir = point_dir(&config.out_dir, point.distance);
        match (&result.ladder, &result.error) {
            (Some(ladder), _) => write_ladder(&dir, config, &point.hamiltonian, ladder)?,
            (None, Some(e)) => {
                create_dir(&dir)?;
                write(&dir.join("error.txt"), &format!("{e}\n"))?;
            }
            (None, None) => {}
        }
    }
    write(
        &config.out_dir.join("sweep.csv"),
        &driver::sweep_csv(&report),
    )?;
    write(
        &config.out_dir.join("errors_by_level.csv"),
        &driver::errors_by_level_csv(&report),
    )?;
    let failed: Vec<f64> = report
        .points
        .iter()
        .filter(|p| p.failed())
        .map(|p| p.distance)
        .collect();
    if !failed.is_empty() {
        log::warn!("points without full convergence: {failed:?}");
    }
    Ok(failed.is_empty())
}
