use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use phaselab::diagnostics::{negativity_volume, parse_partition, positivity_time, validate_measure, write_diagnostics_csv};
use phaselab::dynamics::{run_with, DecoherenceSpec, SolverKind, Trajectory};
use phaselab::phase_grid::io::{read_snapshot, write_csv, write_snapshot};
use phaselab::{IndexBox, PhaseField, Tolerances};
use rayon::prelude::*;

use crate::config::{RawConfig, RunConfig, Scenario};
use crate::render::{render_ppm, Overlay};
use crate::CliError;

fn load(config: &Path, out: Option<&Path>) -> Result<RawConfig, CliError> {
    let text = fs::read_to_string(config).map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    if let Some(out) = out {
        raw.set("output_dir", out.display().to_string());
    }
    Ok(raw)
}

struct Manifest {
    command: &'static str,
    started: Instant,
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Self { command, started: Instant::now(), lines: Vec::new() }
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    /// Run information as comments, then the merged configuration, which can be fed
    /// back through `--config` to repeat the run.
    fn write(&self, dir: &Path, raw: &RawConfig, error: Option<&CliError>) -> Result<(), CliError> {
        let mut text = String::new();
        writeln!(text, "# phaselab {} {}", env!("CARGO_PKG_VERSION"), self.command).expect("string");
        match error {
            None => writeln!(text, "# status = ok"),
            Some(e) => writeln!(text, "# status = error (exit {}): {e}", e.exit_code()),
        }
        .expect("string");
        writeln!(text, "# wall_time_s = {:.3}", self.started.elapsed().as_secs_f64()).expect("string");
        for (k, v) in &self.lines {
            writeln!(text, "# {k} = {v}").expect("string");
        }
        text.push_str(&raw.echo());
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.txt"), text)?;
        Ok(())
    }
}

fn write_records(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    write_diagnostics_csv(BufWriter::new(fs::File::create(path)?), traj.records())?;
    Ok(())
}

fn run_config(
    cfg: &RunConfig,
    solver: SolverKind,
    dec: &DecoherenceSpec,
    manifest: &mut Manifest,
    tag: &str,
) -> Result<Trajectory, CliError> {
    let evo = cfg.evolution(dec)?;
    manifest.note(format!("{tag}dt_used"), format!("{:?}", evo.step_size()));
    manifest.note(format!("{tag}steps"), evo.n_steps());
    manifest.note(format!("{tag}stride_used"), evo.stride);
    let initial = cfg.state.initial(&cfg.grid, cfg.hamiltonian.mass(), solver)?;
    Ok(run_with(initial, &cfg.hamiltonian, dec, &evo, &cfg.regions, &Tolerances::default())?)
}

pub fn simulate(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let raw = load(config, out)?;
    let cfg = raw.resolve()?;
    let mut manifest = Manifest::new("simulate");
    let result = simulate_into(&cfg, &mut manifest);
    manifest.write(&cfg.output_dir, &raw, result.as_ref().err())?;
    result
}

fn simulate_into(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let traj = run_config(cfg, cfg.solver, &cfg.decoherence, manifest, "")?;
    let snap_dir = cfg.output_dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for (k, s) in traj.snapshots().iter().enumerate() {
        write_snapshot(snap_dir.join(format!("snapshot_{k:05}.wig")), s)?;
    }
    write_records(&cfg.output_dir.join("diagnostics.csv"), &traj)?;
    manifest.note("snapshots", traj.snapshots().len());
    if let Some(t) = positivity_time(&traj) {
        manifest.note("positivity_time", format!("{t:?}"));
    }
    if traj.kind() == SolverKind::Classical {
        manifest.note("clipped_mass", format!("{:e}", traj.clipped_mass()));
    }
    Ok(())
}

pub fn triptych(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let raw = load(config, out)?;
    if raw.scenario != Scenario::Quartic {
        return Err(CliError::Config(format!("triptych needs scenario = quartic, got {}", raw.scenario)));
    }
    let cfg = raw.resolve()?;
    if cfg.decoherence.effective_rate() <= 0.0 {
        return Err(CliError::Config("triptych needs D > 0 for its decohered panels".into()));
    }
    let mut manifest = Manifest::new("triptych");
    let result = triptych_into(&cfg, &mut manifest);
    manifest.write(&cfg.output_dir, &raw, result.as_ref().err())?;
    result
}

fn triptych_into(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let panels = [
        ("a", SolverKind::Quantum, DecoherenceSpec::none()),
        ("b", SolverKind::Quantum, cfg.decoherence),
        ("c", SolverKind::Classical, cfg.decoherence),
    ];
    let mut finals: Vec<(&str, Trajectory)> = Vec::new();
    for (name, solver, dec) in panels {
        let traj = run_config(cfg, solver, &dec, manifest, &format!("panel_{name}."))?;
        finals.push((name, traj));
    }
    fs::create_dir_all(&cfg.output_dir)?;
    // One colour scale for all panels so negative structure is comparable.
    let scale = finals.iter().map(|(_, t)| t.last().max_abs()).fold(0.0_f64, f64::max);
    let mut summary = String::from("panel,solver,D,time,min_value,max_value,negativity_volume,positive,positivity_time\n");
    for (name, traj) in &finals {
        let last = traj.last();
        let dir = &cfg.output_dir;
        fs::write(dir.join(format!("panel_{name}.ppm")), render_ppm(last, scale, Some(Overlay::four_hbar(last))))?;
        write_csv(BufWriter::new(fs::File::create(dir.join(format!("panel_{name}.csv")))?), last)?;
        write_snapshot(dir.join(format!("panel_{name}.wig")), last)?;
        write_records(&dir.join(format!("diagnostics_{name}.csv")), traj)?;
        let record = traj.records().last().expect("at least one record");
        writeln!(
            summary,
            "{name},{},{:?},{:?},{:?},{:?},{:?},{},{}",
            traj.kind(),
            traj.decoherence().effective_rate(),
            last.time(),
            last.min(),
            last.max(),
            negativity_volume(last),
            record.positive,
            positivity_time(traj).map(|t| format!("{t:?}")).unwrap_or_default()
        )
        .expect("string");
    }
    fs::write(cfg.output_dir.join("triptych.csv"), summary)?;
    manifest.note("color_scale", format!("{scale:?}"));
    Ok(())
}

/// Parameters a sweep may vary, with the configuration key each one sets.
pub fn sweep_key(param: &str) -> Result<&'static str, CliError> {
    match param {
        "hbar" => Ok("hbar"),
        "D" => Ok("D"),
        "m" | "mass" => Ok("mass"),
        other => Err(CliError::Config(format!("cannot sweep {other:?} (hbar, D, m)"))),
    }
}

pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("bad sweep value {s:?}"))))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    Ok(values)
}

struct SweepRow {
    value: f64,
    positivity_time: Option<f64>,
    max_flux_deviation: f64,
    final_negativity_volume: f64,
}

/// Middle half of the grid in both directions; tracked when a sweep config names no region.
fn default_region(cfg: &RunConfig) -> IndexBox {
    let (n_q, n_p) = cfg.grid.shape();
    IndexBox::new(n_q / 4..3 * n_q / 4, n_p / 4..3 * n_p / 4)
}

fn sweep_one(raw: &RawConfig, key: &str, value: f64, dir: PathBuf) -> Result<SweepRow, CliError> {
    let mut raw = raw.clone();
    raw.set(key, format!("{value:?}"));
    raw.set("output_dir", dir.display().to_string());
    let mut cfg = raw.resolve()?;
    if cfg.regions.is_empty() {
        cfg.regions = vec![default_region(&cfg)];
    }
    let mut manifest = Manifest::new("sweep");
    let result = run_config(&cfg, cfg.solver, &cfg.decoherence, &mut manifest, "");
    manifest.write(&dir, &raw, result.as_ref().err())?;
    let traj = result?;
    write_records(&dir.join("diagnostics.csv"), &traj)?;
    write_snapshot(dir.join("final.wig"), traj.last())?;
    let max_flux_deviation =
        traj.records().iter().flat_map(|r| r.flux_deviation.iter()).filter(|v| v.is_finite()).fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(SweepRow {
        value,
        positivity_time: positivity_time(&traj),
        max_flux_deviation,
        final_negativity_volume: negativity_volume(traj.last()),
    })
}

/// Least-squares slope of `ln y` on `ln x` over the pairs where both are positive.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite()).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub fn sweep(config: &Path, param: &str, values: &str, out: Option<&Path>) -> Result<(), CliError> {
    let key = sweep_key(param)?;
    let values = parse_values(values)?;
    let raw = load(config, out)?;
    let base = raw.resolve()?.output_dir;
    fs::create_dir_all(&base)?;
    // Each value gets its own directory; runs share nothing mutable.
    let results: Vec<Result<SweepRow, CliError>> =
        values.par_iter().enumerate().map(|(k, &v)| sweep_one(&raw, key, v, base.join(format!("{param}_{k:02}")))).collect();

    let mut csv = format!("{param},positivity_time,max_flux_deviation,final_negativity_volume,status\n");
    let mut first_error = None;
    let mut rows = Vec::new();
    for (v, r) in values.iter().zip(results) {
        match r {
            Ok(row) => {
                writeln!(
                    csv,
                    "{:?},{},{:?},{:?},ok",
                    row.value,
                    row.positivity_time.map(|t| format!("{t:?}")).unwrap_or_default(),
                    row.max_flux_deviation,
                    row.final_negativity_volume
                )
                .expect("string");
                rows.push(row);
            }
            Err(e) => {
                writeln!(csv, "{v:?},,,,\"error: {}\"", e.to_string().replace('"', "'")).expect("string");
                first_error.get_or_insert(e);
            }
        }
    }
    fs::write(base.join("sweep_summary.csv"), csv)?;

    let flux = log_log_fit(&rows.iter().map(|r| (r.value, r.max_flux_deviation)).collect::<Vec<_>>());
    let td = log_log_fit(&rows.iter().filter_map(|r| r.positivity_time.map(|t| (r.value, t))).collect::<Vec<_>>());
    let fmt = |e: Option<f64>| e.map(|v| format!("{v:?}")).unwrap_or_else(|| "none".into());
    let fits = format!(
        "parameter = {param}\nruns_ok = {}\nflux_deviation_exponent = {}\npositivity_time_exponent = {}\n",
        rows.len(),
        fmt(flux),
        fmt(td)
    );
    fs::write(base.join("sweep_fits.txt"), &fits)?;
    print!("{fits}");
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn validate(snapshot: &Path, partition: &str) -> Result<(), CliError> {
    let field: PhaseField = read_snapshot(snapshot).map_err(|e| match e {
        phaselab::Error::Io(io) => CliError::Config(format!("cannot read {}: {io}", snapshot.display())),
        other => CliError::Config(other.to_string()),
    })?;
    let boxes = parse_partition(partition, field.grid())?;
    let report = validate_measure(&field, &boxes)?;
    print!("{}", report.to_key_values());
    Ok(())
}
