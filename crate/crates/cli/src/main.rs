//! `em1d`: command-line front end for the spectral toolkit and the
//! nonlinear torus simulator.
//!
//! Exit codes: 0 success, 1 configuration or model error, 2 usage error
//! (from argument parsing), 3 assertion failure under `--assert`.

mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use em1d_core::diagnostics::{fit_decay_rate, FitMode};
use em1d_core::green::{expm_oracle_e, expm_oracle_f, green_e, green_f};
use em1d_core::linalg::CMat;
use em1d_core::linsolve::{
    make_profile, sample_series_e, sample_series_f, EComponent, EContinuumData, FComponent,
    FContinuumData,
};
use em1d_core::nonlinear;
use em1d_core::spectrum::{eigen_f, label_spectrum_e, Regime, RegimeThresholds};
use rayon::prelude::*;
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "em1d",
    version,
    about = "Spectral toolkit and simulator for a one-dimensional two-fluid plasma model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Block {
    /// Transverse fields (u_r, E_r, B_r) seeded through the magnetic field.
    Transverse,
    /// Longitudinal fields (u_1, E_1) seeded through the electric field.
    Longitudinal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RateMode {
    /// Fit ln(value) against ln(1 + t).
    Power,
    /// Fit ln(value) against t.
    Exponential,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the labeled mode frequencies over a wavenumber sweep.
    Spectrum {
        #[arg(long, default_value_t = 1e-3)]
        k_min: f64,
        #[arg(long, default_value_t = 1e3)]
        k_max: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Sound-speed parameter of the longitudinal pair.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check assembled propagators against the matrix exponential.
    GreenCheck {
        /// Comma-separated evaluation times.
        #[arg(long, default_value = "0.1,1,10,100")]
        times: String,
        #[arg(long, default_value_t = 2e-3)]
        k_min: f64,
        #[arg(long, default_value_t = 1e3)]
        k_max: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Fail (exit 3) if the normalized gap exceeds this tolerance.
        #[arg(long)]
        assert_tol: Option<f64>,
        /// Optional CSV of per-point gaps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample linear continuum norm series and fit their decay rates.
    Linear {
        /// Run file providing the initial profile and pressure law.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Block::Transverse)]
        block: Block,
        #[arg(long, default_value_t = 1e2)]
        t_min: f64,
        #[arg(long, default_value_t = 1e5)]
        t_max: f64,
        #[arg(long, default_value_t = 25)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Spacing::Log)]
        spacing: Spacing,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the nonlinear torus problem described by a run file.
    Nonlinear {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the run file.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Check constraint preservation and energy boundedness; write
        /// assertions.json and exit 3 on failure.
        #[arg(long)]
        assert: bool,
    },
    /// Fit a decay rate to one column of a series CSV.
    Rates {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, value_enum, default_value_t = RateMode::Power)]
        mode: RateMode,
        /// Fit window as `start,end` (defaults to the full series).
        #[arg(long)]
        window: Option<String>,
    },
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("EM1D_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => {
                eprintln!("error: EM1D_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(1);
            }
        }
    }
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.command {
        Command::Spectrum {
            k_min,
            k_max,
            samples,
            gamma,
            out,
        } => cmd_spectrum(k_min, k_max, samples, gamma, out),
        Command::GreenCheck {
            times,
            k_min,
            k_max,
            samples,
            gamma,
            assert_tol,
            out,
        } => cmd_green_check(&times, k_min, k_max, samples, gamma, assert_tol, out),
        Command::Linear {
            config,
            block,
            t_min,
            t_max,
            samples,
            spacing,
            out,
        } => cmd_linear(&config, block, t_min, t_max, samples, spacing, out),
        Command::Nonlinear {
            config,
            out_dir,
            assert,
        } => cmd_nonlinear(&config, out_dir, assert),
        Command::Rates {
            input,
            column,
            mode,
            window,
        } => cmd_rates(&input, &column, mode, window.as_deref()),
    }
}

fn sweep(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Result<Vec<f64>, Box<dyn Error>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || n < 2 {
        return Err(
            format!("need at least 2 samples over a finite range, got [{lo}, {hi}] x {n}").into(),
        );
    }
    Ok(match spacing {
        Spacing::Log => {
            if lo <= 0.0 {
                return Err("log spacing needs a positive lower bound".into());
            }
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
        Spacing::Linear => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    })
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<(), Box<dyn Error>> {
    match out {
        Some(path) => {
            output::write_atomic(&path, text.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_spectrum(
    k_min: f64,
    k_max: f64,
    samples: usize,
    gamma: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode, Box<dyn Error>> {
    let thresholds = RegimeThresholds::standard();
    let ks = sweep(k_min, k_max, samples, Spacing::Log)?;
    let rows: Result<Vec<String>, _> = ks
        .par_iter()
        .map(|&k| -> Result<String, Box<dyn Error + Send + Sync>> {
            let symbol = label_spectrum_e(k, &thresholds)?;
            let pair = eigen_f(k, gamma)?;
            let regime = match symbol.regime {
                Regime::Low => "low",
                Regime::Mid => "mid",
                Regime::High => "high",
            };
            let mut row = format!("{k}");
            for l in symbol.lambdas {
                row.push_str(&format!(",{},{}", l.re, l.im));
            }
            row.push_str(&format!(
                ",{regime},{},{},{}\n",
                symbol.min_cross_family_gap, pair.plus.re, pair.plus.im
            ));
            Ok(row)
        })
        .collect();
    let mut text = String::from("k");
    for j in 1..=6 {
        text.push_str(&format!(",l{j}_re,l{j}_im"));
    }
    text.push_str(",regime,cross_family_gap,f_plus_re,f_plus_im\n");
    for row in rows.map_err(|e| -> Box<dyn Error> { e.to_string().into() })? {
        text.push_str(&row);
    }
    emit(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_green_check(
    times: &str,
    k_min: f64,
    k_max: f64,
    samples: usize,
    gamma: f64,
    assert_tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<ExitCode, Box<dyn Error>> {
    let ts: Vec<f64> = times
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("--times `{times}` is not a comma-separated number list"))?;
    let ks = sweep(k_min, k_max, samples, Spacing::Log)?;
    // Gap normalized by max(1, |G|_max): absolute for small entries,
    // relative where the longitudinal entries grow with k.
    let gap = |a: &CMat, b: &CMat| a.max_abs_diff(b) / a.max_abs().max(1.0);
    let rows: Result<Vec<(f64, f64, f64, f64)>, _> = ts
        .iter()
        .flat_map(|&t| ks.iter().map(move |&k| (t, k)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(
            |&(t, k)| -> Result<(f64, f64, f64, f64), Box<dyn Error + Send + Sync>> {
                let ge = gap(&green_e(t, k)?.matrix, &expm_oracle_e(t, k)?.matrix);
                let gf = gap(
                    &green_f(t, k, gamma)?.matrix,
                    &expm_oracle_f(t, k, gamma)?.matrix,
                );
                Ok((t, k, ge, gf))
            },
        )
        .collect();
    let rows = rows.map_err(|e| -> Box<dyn Error> { e.to_string().into() })?;
    let worst = rows
        .iter()
        .fold(0.0f64, |m, &(_, _, ge, gf)| m.max(ge).max(gf));
    if let Some(path) = out {
        let mut text = String::from("t,k,gap_transverse,gap_longitudinal\n");
        for (t, k, ge, gf) in &rows {
            text.push_str(&format!("{t},{k},{ge},{gf}\n"));
        }
        output::write_atomic(&path, text.as_bytes())?;
        eprintln!("wrote {}", path.display());
    }
    println!(
        "{}",
        serde_json::json!({
            "points": rows.len(),
            "max_normalized_gap": worst,
            "tolerance": assert_tol,
        })
    );
    if let Some(tol) = assert_tol {
        if !(worst <= tol) {
            eprintln!("assertion failed: gap {worst:.3e} exceeds tolerance {tol:.3e}");
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_linear(
    config_path: &PathBuf,
    block: Block,
    t_min: f64,
    t_max: f64,
    samples: usize,
    spacing: Spacing,
    out: Option<PathBuf>,
) -> Result<ExitCode, Box<dyn Error>> {
    let cfg = config::load(config_path)?;
    let profile = make_profile(cfg.profile_spec())?;
    let times = sweep(t_min, t_max, samples, spacing)?;
    let gamma = cfg
        .to_run_config()
        .map_err(|e| -> Box<dyn Error> { e.to_string().into() })?
        .law
        .gamma();
    let (series, fit_mode) = match block {
        Block::Transverse => {
            let data = EContinuumData::magnetic(profile);
            let requests = [
                (EComponent::Ur, 0),
                (EComponent::Er, 0),
                (EComponent::Br, 0),
                (EComponent::Ur, 1),
                (EComponent::Er, 1),
                (EComponent::Br, 1),
            ];
            (
                sample_series_e(&data, &times, &requests)?,
                FitMode::PowerLaw,
            )
        }
        Block::Longitudinal => {
            let data = FContinuumData {
                u1: None,
                e1: Some(profile),
            };
            let requests = [
                (FComponent::U1, 0),
                (FComponent::E1, 0),
                (FComponent::U1, 1),
                (FComponent::E1, 1),
            ];
            (
                sample_series_f(&data, &times, &requests, gamma)?,
                FitMode::Exponential,
            )
        }
    };
    let columns: Vec<(String, Vec<f64>)> = series
        .columns()
        .iter()
        .map(|c| (c.label.clone(), c.values.clone()))
        .collect();
    let window = (times[0], *times.last().unwrap());
    let mut fits = serde_json::Map::new();
    for (label, values) in &columns {
        let fit = fit_decay_rate(&times, values, window, fit_mode)?;
        fits.insert(
            label.clone(),
            serde_json::json!({
                "slope": fit.slope,
                "std_error": fit.std_error,
                "samples": fit.samples,
            }),
        );
    }
    emit(out, &output::series_csv(&times, &columns))?;
    println!(
        "{}",
        serde_json::json!({ "evaluator": series.evaluator, "fits": fits })
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_nonlinear(
    config_path: &PathBuf,
    out_dir: Option<PathBuf>,
    assert: bool,
) -> Result<ExitCode, Box<dyn Error>> {
    let cfg = config::load(config_path)?;
    let mut run_config = cfg
        .to_run_config()
        .map_err(|e| -> Box<dyn Error> { e.to_string().into() })?;
    if out_dir.is_some() {
        run_config.output_dir = out_dir;
    }
    let dir = run_config
        .output_dir
        .clone()
        .ok_or("no output directory: set `output_dir` in the run file or pass --out-dir")?;
    std::fs::create_dir_all(&dir)?;
    let out = nonlinear::run(&run_config)?;

    let labels = ["rho", "u1", "e1", "ur", "er", "br"];
    let mut columns: Vec<(String, Vec<f64>)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.to_string(), out.norms.iter().map(|n| n[i]).collect()))
        .collect();
    columns.push(("q".to_string(), out.q.clone()));
    columns.push((
        "energy".to_string(),
        out.energy.iter().map(|r| r.energy).collect(),
    ));
    columns.push((
        "dissipation".to_string(),
        out.energy.iter().map(|r| r.dissipation).collect(),
    ));
    let series_path = dir.join("series.csv");
    output::write_atomic(
        &series_path,
        output::series_csv(&out.times, &columns).as_bytes(),
    )?;

    let mut artifacts = vec![series_path];
    artifacts.extend(out.snapshots.iter().cloned());

    let e0 = out.energy[0].energy;
    let emax = out.energy.iter().fold(0.0f64, |m, r| m.max(r.energy));
    let mut exit = ExitCode::SUCCESS;
    if assert {
        let checks = vec![
            serde_json::json!({
                "name": "constraint_residual",
                "value": out.max_constraint_residual,
                "threshold": 1e-8,
                "pass": out.max_constraint_residual < 1e-8,
            }),
            serde_json::json!({
                "name": "energy_growth",
                "value": emax / e0,
                "threshold": 1.05,
                "pass": emax / e0 <= 1.05,
            }),
        ];
        let pass = checks.iter().all(|c| c["pass"] == true);
        let assertions_path = dir.join("assertions.json");
        output::write_atomic(
            &assertions_path,
            serde_json::to_string_pretty(&serde_json::json!({
                "pass": pass,
                "checks": checks,
            }))?
            .as_bytes(),
        )?;
        artifacts.push(assertions_path);
        if !pass {
            eprintln!("assertion failed: see assertions.json");
            exit = ExitCode::from(3);
        }
    }

    let info = serde_json::json!({
        "grid_length": run_config.grid_length,
        "mode_count": run_config.mode_count,
        "t_end": run_config.t_end,
        "dt": out.dt,
        "seed": run_config.init.seed,
        "max_constraint_residual": out.max_constraint_residual,
        "dissipation_integral": out.dissipation_integral,
        "energy_initial": e0,
        "energy_max": emax,
    });
    let manifest = output::write_run_manifest(&dir, &artifacts, info)?;
    eprintln!("wrote {}", manifest.display());
    println!(
        "{}",
        serde_json::json!({
            "dt": out.dt,
            "samples": out.times.len(),
            "max_constraint_residual": out.max_constraint_residual,
            "energy_max_over_initial": emax / e0,
        })
    );
    Ok(exit)
}

fn cmd_rates(
    input: &PathBuf,
    column: &str,
    mode: RateMode,
    window: Option<&str>,
) -> Result<ExitCode, Box<dyn Error>> {
    let (times, columns) = output::read_series_csv(input)?;
    let values = &columns
        .iter()
        .find(|(l, _)| l == column)
        .ok_or_else(|| {
            format!(
                "no column `{column}` in {} (have: {})",
                input.display(),
                columns
                    .iter()
                    .map(|(l, _)| l.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })?
        .1;
    let window = match window {
        Some(w) => {
            let (a, b) = w
                .split_once(',')
                .ok_or_else(|| format!("--window `{w}` must be `start,end`"))?;
            (
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad window start `{a}`"))?,
                b.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad window end `{b}`"))?,
            )
        }
        None => (times[0], *times.last().unwrap()),
    };
    let fit_mode = match mode {
        RateMode::Power => FitMode::PowerLaw,
        RateMode::Exponential => FitMode::Exponential,
    };
    let fit = fit_decay_rate(&times, values, window, fit_mode)?;
    println!(
        "{}",
        serde_json::json!({
            "column": column,
            "mode": match mode { RateMode::Power => "power", RateMode::Exponential => "exponential" },
            "window": [window.0, window.1],
            "slope": fit.slope,
            "intercept": fit.intercept,
            "std_error": fit.std_error,
            "samples": fit.samples,
        })
    );
    Ok(ExitCode::SUCCESS)
}
