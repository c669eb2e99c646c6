//! `dmkp-lab` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! failure. Failures print one JSON object on standard error.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{RunConfig, OUTPUT_DIR_ENV};
use crate::duhamel::{cutoff_theta, picard_solve, PicardConfig, Trajectory};
use crate::error::{Error, Result};
use crate::illposed::{scan_and_fit, ScanConfig};
use crate::io::{fmt_f64, read_snapshot, write_snapshot, CsvTable, SnapshotManifest};
use crate::norms::{bourgain_norm, sobolev_norm, NormSpec, SpaceTimeField};
use crate::probes::{
    forcing_frequencies, modulated_forcing, probe_bilinear_estimate, probe_linear_estimate,
    probe_retarded_estimate, random_ensemble, rectangle_data_on_lattice, ProbeStats, TimeSampling,
};
use crate::propagator::{simulate_with, EnergyMonitor, Stepper};
use crate::spectral::{forward, inverse, SpectralGrid};
use crate::symbols::ModelParams;

#[derive(Debug, Parser)]
#[command(name = "dmkp-lab", version, about = "Pseudo-spectral laboratory for the DMKP equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-step a configuration; writes snapshots and `series.csv`.
    Simulate {
        config: PathBuf,
        /// Overrides the configured and environment output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Norms of a snapshot, or of every snapshot in a directory; CSV on stdout.
    Norms {
        input: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s2: f64,
        /// With a directory, also report the Bourgain norm of the windowed
        /// trajectory with this `b`.
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, default_value_t = 4)]
        pad_factor: usize,
    },
    /// Picard iteration of the Duhamel map; residual table and final trajectory.
    Picard {
        config: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 60)]
        max_iter: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Norm-growth scan of the second iterate.
    Illposed {
        #[arg(long = "N-list", alias = "n-list", value_delimiter = ',', default_values_t = vec![16.0, 32.0, 64.0, 128.0])]
        n_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![-0.75, -0.25])]
        s_list: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Quadrature order for every axis (outer and inner).
        #[arg(long, default_value_t = 8)]
        orders: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Ratio statistics for one of the estimate probes.
    Probe {
        kind: ProbeKind,
        #[arg(long, default_value_t = 100)]
        ensemble: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        nx: usize,
        #[arg(long, default_value_t = 16)]
        ny: usize,
        /// Box side; both directions.
        #[arg(long, default_value_t = 4.0 * PI)]
        box_len: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 2.5)]
        t_w: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s2: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Spectral decay of the random ensemble.
        #[arg(long, default_value_t = 1.0)]
        slope: f64,
        /// Frequency band `|xi|, |eta| <= band` of the random ensemble.
        #[arg(long, default_value_t = 2.0)]
        band: f64,
        /// Cutoff scale of the bilinear probe.
        #[arg(long, default_value_t = 1.0)]
        t_cut: f64,
        /// Also run at doubled space and time resolution.
        #[arg(long)]
        refine: bool,
        /// Bilinear probe on the rectangle data for these N instead of the
        /// random ensemble.
        #[arg(long = "phiN-list", alias = "phin-list", value_delimiter = ',')]
        phin_list: Vec<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Linear,
    Retarded,
    Bilinear,
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return 0;
            }
            report_error("usage", &e.to_string(), 2);
            return 2;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            report_error(e.kind(), &e.to_string(), code);
            code
        }
    }
}

fn report_error(kind: &str, message: &str, code: i32) {
    let line = serde_json::json!({ "error": kind, "message": message.trim(), "exit_code": code });
    eprintln!("{line}");
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config, output_dir } => cmd_simulate(&config, output_dir),
        Command::Norms {
            input,
            s1,
            s2,
            b,
            pad_factor,
        } => {
            let table = cmd_norms(&input, s1, s2, b, pad_factor)?;
            print!("{}", table.render());
            Ok(())
        }
        Command::Picard {
            config,
            tol,
            max_iter,
            output_dir,
        } => cmd_picard(&config, tol, max_iter, output_dir),
        Command::Illposed {
            n_list,
            s_list,
            eps,
            orders,
            alpha,
            beta,
            epsilon,
            output_dir,
        } => {
            let params = ModelParams::new(alpha, beta, epsilon, crate::symbols::DissipationKind::Dmkp)
                .map_err(|e| Error::Config(e.to_string()))?;
            let cfg = ScanConfig {
                n_list,
                s_list,
                eps,
                outer: (orders, orders),
                inner: (orders, orders),
                ..ScanConfig::default()
            };
            cfg.validate()?;
            if cfg.n_list.len() < 4 {
                return Err(Error::Config("--N-list needs at least 4 values".into()));
            }
            cmd_illposed(&cfg, &params, &resolve_dir(output_dir, None))
        }
        Command::Probe {
            kind,
            ensemble,
            seed,
            nx,
            ny,
            box_len,
            dt,
            t_w,
            s1,
            s2,
            delta,
            slope,
            band,
            t_cut,
            refine,
            phin_list,
            output_dir,
        } => {
            let opts = ProbeOptions {
                kind,
                ensemble,
                seed,
                nx,
                ny,
                box_len,
                dt,
                t_w,
                s1,
                s2,
                delta,
                slope,
                band,
                t_cut,
                refine,
                phin_list,
            };
            let (table, ratios) = cmd_probe(&opts)?;
            let dir = resolve_dir(output_dir, None);
            let name = match kind {
                ProbeKind::Linear => "probe_linear.csv",
                ProbeKind::Retarded => "probe_retarded.csv",
                ProbeKind::Bilinear => "probe_bilinear.csv",
            };
            table.write(&dir.join(name))?;
            ratios.write(&dir.join(name.replace(".csv", "_ratios.csv")))?;
            print!("{}", table.render());
            Ok(())
        }
    }
}

/// Flag, then environment, then configuration, then `out`.
fn resolve_dir(flag: Option<PathBuf>, config: Option<&RunConfig>) -> PathBuf {
    if let Some(d) = flag {
        return d;
    }
    match config {
        Some(c) => c.output_dir(),
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => PathBuf::from("out"),
        },
    }
}

/// Runs a configuration; returns the series table. Snapshots go to
/// `dir/snapshots`.
pub fn run_simulation(config: &RunConfig, dir: &Path) -> Result<CsvTable> {
    let run = config.resolve()?;
    let phi = config.init.build(&run.grid)?;
    let every = config.time.output_every;
    let (s1, s2) = (config.diagnostics.s1, config.diagnostics.s2);
    let stepper = Stepper::new(run.grid.clone(), run.params, config.time.dt)?;
    let dt = stepper.dt();
    let snap_dir = dir.join("snapshots");
    let mut monitor = EnergyMonitor::new(dt);
    let mut observed: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut io_error: Option<Error> = None;
    let mut step = 0usize;
    let mut observer = |state: &crate::propagator::SimState| {
        monitor.observe(state);
        let l2 = state.field.l2_norm();
        if step % every == 0 {
            observed.push((step, state.time, l2, sobolev_norm(&state.field, s1, s2)));
            if io_error.is_none() {
                let real = inverse(&state.field);
                let m = SnapshotManifest::new(&real, state.time, Some(step), Some(state.params), "simulate");
                if let Err(e) = write_snapshot(&snap_dir.join(format!("snap_{step:06}.fld")), &real, &m) {
                    io_error = Some(e);
                }
            }
        }
        step += 1;
    };
    simulate_with(&stepper, &phi, config.time.t_final, 1, &mut observer)?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let mut table = CsvTable::new(
        "simulate",
        &["t", "l2", "h_s1_s2", "energy_lhs", "energy_rhs", "energy_residual"],
    );
    for (n, t, l2, h) in observed {
        let row = match monitor.sample(n) {
            Some(e) => [t, l2, h, e.lhs, e.rhs, e.residual()],
            None => [t, l2, h, f64::NAN, f64::NAN, f64::NAN],
        };
        table.push_values(&row);
    }
    Ok(table)
}

fn cmd_simulate(config_path: &Path, output_dir: Option<PathBuf>) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    config.resolve()?;
    let dir = resolve_dir(output_dir, Some(&config));
    let table = run_simulation(&config, &dir)?;
    table.write(&dir.join("series.csv"))?;
    println!("wrote {} rows to {}", table.len(), dir.join("series.csv").display());
    Ok(())
}

fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "fld"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no .fld snapshots in {}", dir.display())));
    }
    Ok(files)
}

/// Norm table for a snapshot or a directory of snapshots.
pub fn cmd_norms(input: &Path, s1: f64, s2: f64, b: Option<f64>, pad_factor: usize) -> Result<CsvTable> {
    let mut table = CsvTable::new("norms", &["quantity", "file", "time", "b", "s1", "s2", "value"]);
    let is_dir = input.is_dir();
    let files = if is_dir {
        snapshot_files(input)?
    } else {
        vec![input.to_path_buf()]
    };
    let mut frames = Vec::new();
    let mut times = Vec::new();
    let mut params = None;
    for f in &files {
        let (real, manifest) = read_snapshot(f)?;
        let time = crate::io::snapshot_time(f)?;
        let spec = forward(&real);
        table.push(vec![
            "sobolev".into(),
            f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            fmt_f64(time),
            b.filter(|_| !is_dir).map(fmt_f64).unwrap_or_default(),
            fmt_f64(s1),
            fmt_f64(s2),
            fmt_f64(sobolev_norm(&spec, s1, s2)),
        ]);
        if params.is_none() {
            params = manifest.and_then(|m| m.params);
        }
        frames.push(spec);
        times.push(time);
    }
    if let Some(b) = b.filter(|_| is_dir) {
        if frames.len() < 3 {
            return Err(Error::Config("a Bourgain norm needs a directory with at least 3 snapshots".into()));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
            return Err(Error::Config("snapshot times are not uniformly spaced".into()));
        }
        let params = params.unwrap_or_default();
        let half = 0.5 * (times[times.len() - 1] - times[0]);
        let centre = times[0] + half;
        let traj = Trajectory::new(-half, dt, frames)?;
        let mut st = SpaceTimeField::new(traj, pad_factor)?;
        st.apply_window(|t| cutoff_theta(2.0 * t / half))?;
        let value = bourgain_norm(&st, NormSpec::new(b, s1, s2), &params)?;
        table.push(vec![
            "bourgain".into(),
            input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            fmt_f64(centre),
            fmt_f64(b),
            fmt_f64(s1),
            fmt_f64(s2),
            fmt_f64(value),
        ]);
    }
    Ok(table)
}

fn cmd_picard(config_path: &Path, tol: f64, max_iter: usize, output_dir: Option<PathBuf>) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let run = config.resolve()?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Config("--tol must be positive and --max-iter at least 1".into()));
    }
    let dir = resolve_dir(output_dir, Some(&config));
    let phi = config.init.build(&run.grid)?;
    let pc = PicardConfig {
        t_final: config.time.t_final,
        steps: run.steps,
        max_iter,
        tol,
    };
    let write_residuals = |res: &[f64]| -> Result<()> {
        let mut t = CsvTable::new("picard", &["iteration", "residual", "ratio"]);
        for (k, r) in res.iter().enumerate() {
            let ratio = if k == 0 { f64::NAN } else { r / res[k - 1] };
            t.push(vec![k.to_string(), fmt_f64(*r), fmt_f64(ratio)]);
        }
        t.write(&dir.join("picard_residuals.csv"))
    };
    match picard_solve(&phi, &pc, &run.params) {
        Ok(out) => {
            write_residuals(&out.residuals)?;
            let traj = &out.trajectory;
            let every = config.time.output_every;
            for n in (0..traj.len()).filter(|n| n % every == 0 || *n == traj.len() - 1) {
                let real = inverse(&traj.frames()[n]);
                let m = SnapshotManifest::new(&real, traj.time(n), Some(n), Some(run.params), "picard");
                write_snapshot(&dir.join("picard").join(format!("snap_{n:06}.fld")), &real, &m)?;
            }
            println!(
                "converged in {} iterations, final residual {}",
                out.residuals.len(),
                fmt_f64(*out.residuals.last().unwrap_or(&0.0))
            );
            Ok(())
        }
        Err(Error::NotContracting {
            iterations,
            last_residual,
            history,
        }) => {
            write_residuals(&history)?;
            Err(Error::NotContracting {
                iterations,
                last_residual,
                history,
            })
        }
        Err(e) => Err(e),
    }
}

/// Writes `illposed_scan.csv` and prints the slope summary.
pub fn cmd_illposed(cfg: &ScanConfig, params: &ModelParams, dir: &Path) -> Result<()> {
    let res = scan_and_fit(cfg, params)?;
    let mut table = CsvTable::new("illposed", &["N", "s", "eps", "norm", "slope"]);
    for r in &res.rows {
        table.push_values(&[r.n, r.s, r.eps, r.norm, r.slope]);
    }
    table.write(&dir.join("illposed_scan.csv"))?;
    let mut summary = CsvTable::new("illposed_slopes", &["s", "slope", "lower_bound"]);
    for (s, slope) in &res.slopes {
        summary.push_values(&[*s, *slope, -s - 0.5 - cfg.eps]);
    }
    print!("{}", summary.render());
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub kind: ProbeKind,
    pub ensemble: usize,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub box_len: f64,
    pub dt: f64,
    pub t_w: f64,
    pub s1: f64,
    pub s2: f64,
    pub delta: f64,
    pub slope: f64,
    pub band: f64,
    pub t_cut: f64,
    pub refine: bool,
    pub phin_list: Vec<f64>,
}

fn stats_row(table: &mut CsvTable, ratios: &mut CsvTable, probe: &str, label: String, st: &ProbeStats) {
    for (i, r) in st.ratios.iter().enumerate() {
        ratios.push(vec![probe.into(), label.clone(), i.to_string(), fmt_f64(*r)]);
    }
    table.push(vec![
        probe.into(),
        label,
        st.ratios.len().to_string(),
        fmt_f64(st.min),
        fmt_f64(st.median),
        fmt_f64(st.max),
    ]);
}

/// Ratio statistics table for a probe, and the per-sample ratios.
pub fn cmd_probe(o: &ProbeOptions) -> Result<(CsvTable, CsvTable)> {
    let mut table = CsvTable::new("probe", &["probe", "label", "count", "min", "median", "max"]);
    let mut ratios = CsvTable::new("probe_ratios", &["probe", "label", "sample", "ratio"]);
    let params = ModelParams::default();
    if o.ensemble == 0 {
        return Err(Error::Config("--ensemble must be at least 1".into()));
    }
    if o.kind == ProbeKind::Bilinear && !o.phin_list.is_empty() {
        for &n in &o.phin_list {
            let phi = rectangle_data_on_lattice(n, o.s1).map_err(|e| Error::Config(e.to_string()))?;
            let t = n.powf(-4.0);
            let sampling = TimeSampling {
                t_w: 2.5 * t,
                dt: t / 16.0,
                pad_factor: 4,
            };
            let st = probe_bilinear_estimate(&[(phi.clone(), phi)], o.s1, o.s2, o.delta, t, &params, sampling)?;
            stats_row(&mut table, &mut ratios, "bilinear", format!("N={n}"), &st);
        }
        return Ok((table, ratios));
    }
    let levels: &[usize] = if o.refine { &[1, 2] } else { &[1] };
    for &r in levels {
        let grid = SpectralGrid::new(o.nx * r, o.ny * r, o.box_len, o.box_len).map_err(|e| Error::Config(e.to_string()))?;
        let sampling = TimeSampling {
            t_w: o.t_w,
            dt: o.dt / r as f64,
            pad_factor: 4,
        };
        let label = format!("nx={} dt={}", o.nx * r, fmt_f64(sampling.dt));
        let st = match o.kind {
            ProbeKind::Linear => {
                let phis = random_ensemble(&grid, o.ensemble, o.band, o.slope, o.seed).map_err(|e| Error::Config(e.to_string()))?;
                probe_linear_estimate(&phis, NormSpec::new(0.5, o.s1, o.s2), &params, sampling)?
            }
            ProbeKind::Retarded => {
                let phis = random_ensemble(&grid, o.ensemble, o.band, o.slope, o.seed).map_err(|e| Error::Config(e.to_string()))?;
                let ws = phis
                    .iter()
                    .zip(forcing_frequencies(o.ensemble, 5.0))
                    .map(|(g, w)| modulated_forcing(g, w, sampling, &params))
                    .collect::<Result<Vec<_>>>()?;
                probe_retarded_estimate(&ws, NormSpec::new(0.5, o.s1, o.s2), o.delta, &params)?
            }
            ProbeKind::Bilinear => {
                let phis =
                    random_ensemble(&grid, 2 * o.ensemble, o.band, o.slope, o.seed).map_err(|e| Error::Config(e.to_string()))?;
                let pairs: Vec<_> = phis.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect();
                probe_bilinear_estimate(&pairs, o.s1, o.s2, o.delta, o.t_cut, &params, sampling)?
            }
        };
        let name = match o.kind {
            ProbeKind::Linear => "linear",
            ProbeKind::Retarded => "retarded",
            ProbeKind::Bilinear => "bilinear",
        };
        stats_row(&mut table, &mut ratios, name, label, &st);
    }
    Ok((table, ratios))
}
