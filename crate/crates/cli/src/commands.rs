use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;

use rydfock::blockade::{self, SurvivalDistribution};
use rydfock::clicks::{self, bootstrap_error, Estimator, SynthModel};
use rydfock::ratemodel::{fit_p_eg, predict_probabilities};
use rydfock::{exact_pair_survival, BlockadeConfig, FockDistribution, SourceModel, TrialCounts, Window};

use crate::config::{parse_arms, parse_window, RunConfig};

pub fn write_text(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write(&mut out).and_then(|_| out.flush()).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, |out| writeln!(out, "{text}"))
}

#[derive(Args, Debug)]
pub struct BlockadeArgs {
    /// Blockade radius in μm
    #[arg(long)]
    rb: Option<f64>,
    /// Cloud length in μm
    #[arg(long = "L")]
    length: Option<f64>,
    /// Largest input photon number
    #[arg(long)]
    n: Option<usize>,
    /// Trials per input photon number
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Serialize)]
struct ColumnStats {
    n: usize,
    trials: u64,
    probs: Vec<f64>,
    std_errors: Vec<f64>,
}

impl From<&SurvivalDistribution> for ColumnStats {
    fn from(c: &SurvivalDistribution) -> Self {
        Self { n: c.input_n, trials: c.trials, probs: c.probs(), std_errors: c.std_errors() }
    }
}

#[derive(Serialize)]
struct OracleCheck {
    /// Probability that both photons of `|2⟩` survive.
    exact: f64,
    simulated: f64,
    std_error: f64,
    within_3_sigma: bool,
}

#[derive(Serialize)]
struct BlockadeSummary<'a> {
    config: &'a BlockadeConfig,
    columns: Vec<ColumnStats>,
    pair_survival: Option<OracleCheck>,
}

pub fn blockade(mut cfg: RunConfig, args: BlockadeArgs) -> anyhow::Result<()> {
    let b = &mut cfg.pipeline.blockade;
    if let Some(rb) = args.rb {
        b.blockade_radius = rb;
    }
    if let Some(l) = args.length {
        b.cloud_length = l;
    }
    if let Some(n) = args.n {
        b.n_max = n;
    }
    if let Some(t) = args.trials {
        b.trials_per_fock = t;
    }
    let b = cfg.pipeline.blockade.clone();
    let columns = blockade::simulate_columns(&b)?;
    let matrix = blockade::matrix_from_columns::<f64>(&columns)?;
    write_text(&cfg.out_dir.join("blockade_matrix.csv"), |out| matrix.write_csv(out))?;

    let pair_survival = match columns.get(2) {
        Some(col) => {
            let exact = exact_pair_survival(b.blockade_radius, b.cloud_length)?;
            let simulated = col.probs::<f64>()[2];
            let std_error = col.std_errors()[2];
            let within_3_sigma = (simulated - exact).abs() <= 3.0 * std_error;
            if !within_3_sigma {
                eprintln!("warning: pair survival {simulated} deviates from {exact} by more than 3σ");
            }
            Some(OracleCheck { exact, simulated, std_error, within_3_sigma })
        }
        None => None,
    };
    let summary = BlockadeSummary { config: &b, columns: columns.iter().map(ColumnStats::from).collect(), pair_survival };
    write_json(&cfg.out_dir.join("blockade_summary.json"), &summary)
}

#[derive(Args, Debug)]
pub struct G2Args {
    /// Click file (`trial_id,detector,time_ns` with a `# trials=N` header)
    clicks: PathBuf,
    /// Signal window `start:end` in ns
    #[arg(long, value_parser = parse_window)]
    window: Option<Window>,
    /// Noise window `start:end` in ns
    #[arg(long, value_parser = parse_window)]
    noise_window: Option<Window>,
    /// The two HBT detectors, e.g. `D2,D3`
    #[arg(long, value_parser = parse_arms)]
    detectors: Option<clicks::Arms>,
    /// Bootstrap resamples
    #[arg(long)]
    resamples: Option<usize>,
}

#[derive(Serialize)]
struct WindowsOut {
    signal: [u64; 2],
    noise: [u64; 2],
}

#[derive(Serialize)]
struct G2Report {
    g2_raw: f64,
    g2_corrected: f64,
    /// Bootstrap standard error of `g2_corrected`.
    error: f64,
    error_raw: f64,
    #[serde(flatten)]
    counts: TrialCounts,
    windows: WindowsOut,
    detectors: [String; 2],
    resamples: usize,
    seed: u64,
}

pub fn g2(mut cfg: RunConfig, args: G2Args) -> anyhow::Result<()> {
    if let Some(w) = args.window {
        cfg.signal_window = w;
    }
    if let Some(w) = args.noise_window {
        cfg.noise_window = w;
    }
    if let Some(a) = args.detectors {
        cfg.arms = a;
    }
    let resamples = args.resamples.unwrap_or(cfg.resamples);
    let windows = cfg.windows()?;
    let table = clicks::ingest_table(&args.clicks, &windows, cfg.arms)
        .with_context(|| format!("reading {}", args.clicks.display()))?;
    let counts = table.counts();
    let g2_raw = clicks::g2_raw(&counts)?;
    let g2_corrected = clicks::g2_noise_corrected(&counts)?;
    let error = bootstrap_error(&table, Estimator::NoiseCorrected, resamples, cfg.rng_seed)?.std_error;
    let error_raw = bootstrap_error(&table, Estimator::Raw, resamples, cfg.rng_seed)?.std_error;
    let report = G2Report {
        g2_raw,
        g2_corrected,
        error,
        error_raw,
        counts,
        windows: WindowsOut {
            signal: [cfg.signal_window.start_ns, cfg.signal_window.end_ns],
            noise: [cfg.noise_window.start_ns, cfg.noise_window.end_ns],
        },
        detectors: [cfg.arms.first.to_string(), cfg.arms.second.to_string()],
        resamples,
        seed: cfg.rng_seed,
    };
    println!("g2_raw = {g2_raw} ± {error_raw}, g2_corrected = {g2_corrected} ± {error}");
    write_json(&cfg.out_dir.join("g2_report.json"), &report)
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum State {
    /// Single photon `|1⟩`
    Fock1,
    /// Coherent state with mean `--mu`
    Coherent,
    /// Heralded read state with excitation probability `--p`
    Dlcz,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    state: State,
    #[arg(long, default_value_t = 0.2)]
    mu: f64,
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// Detection efficiency applied before the beam splitter
    #[arg(long, default_value_t = 1.0)]
    efficiency: f64,
    /// Background rates of D1, D2, D3 in Hz, e.g. `0,50,50`
    #[arg(long, value_parser = parse_rates, default_value = "0,0,0")]
    noise_hz: [f64; 3],
    /// Output file name inside the output directory
    #[arg(long, default_value = "clicks.csv")]
    file: PathBuf,
}

fn parse_rates(v: &str) -> Result<[f64; 3], String> {
    let xs = v
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("cannot parse `{}`", s.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    xs.try_into().map_err(|_| "expected three comma-separated rates".to_string())
}

pub fn synth(cfg: RunConfig, args: SynthArgs) -> anyhow::Result<()> {
    let dist = match args.state {
        State::Fock1 => FockDistribution::number_state(1, rydfock::DEFAULT_N_MAX)?,
        State::Coherent => FockDistribution::coherent_auto(args.mu)?,
        State::Dlcz => SourceModel::new(args.p, cfg.t_w)?.conditional_read_state_auto()?,
    };
    let model = SynthModel {
        dist,
        detection_efficiency: args.efficiency,
        noise_hz: args.noise_hz,
        windows: cfg.windows()?,
        arms: cfg.arms,
    };
    let stream = clicks::synthesize(&model, args.trials, cfg.rng_seed)?;
    let path = cfg.out_dir.join(&args.file);
    clicks::write_click_file(&path, &stream)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct FitPegArgs {
    /// CSV with header `p_w,p_r_given_w`
    data: PathBuf,
}

#[derive(Serialize)]
struct Residual {
    p_w: f64,
    measured: f64,
    predicted: f64,
    residual: f64,
}

#[derive(Serialize)]
struct FitReport {
    p_eg: f64,
    residual_norm: f64,
    at_boundary: bool,
    rows: Vec<Residual>,
}

pub fn read_peg_data(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["p_w", "p_r_given_w"] {
        return Err(rydfock::Error::Parse { line: 1, msg: "expected header `p_w,p_r_given_w`".into() }.into());
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or(rydfock::Error::Parse { line, msg: format!("bad number in column {}", i + 1) })
        };
        rows.push((num(0)?, num(1)?));
    }
    Ok(rows)
}

pub fn fit_peg(cfg: RunConfig, args: FitPegArgs) -> anyhow::Result<()> {
    let data = read_peg_data(&args.data)?;
    let fit = fit_p_eg(&cfg.rate, &data)?;
    if fit.at_boundary {
        eprintln!("warning: fitted p_eg = {} sits on the boundary of [0, 1]", fit.p_eg);
    }
    let rows = data
        .iter()
        .map(|&(p_w, measured)| {
            let p = cfg.rate.p_for_write_probability(p_w);
            let predicted = predict_probabilities(&rydfock::RateModelParams { p, p_eg: fit.p_eg, ..cfg.rate })?.p_r_given_w;
            Ok(Residual { p_w, measured, predicted, residual: predicted - measured })
        })
        .collect::<rydfock::Result<Vec<_>>>()?;
    println!("p_eg = {} (residual norm {})", fit.p_eg, fit.residual_norm);
    write_json(
        &cfg.out_dir.join("fit_peg.json"),
        &FitReport { p_eg: fit.p_eg, residual_norm: fit.residual_norm, at_boundary: fit.at_boundary, rows },
    )
}
