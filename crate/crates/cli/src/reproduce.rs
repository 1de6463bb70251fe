//! Model curves behind the figures, written as CSV tables.
//!
//! | figure  | files                                                    |
//! |---------|----------------------------------------------------------|
//! | `fig3`  | `fig3_dlcz.csv`, `fig3_wcs.csv` (+ `_slow_light` variants) |
//! | `fig4`  | `fig4_dlcz.csv`, `fig4_wcs.csv`                          |
//! | `figS3` | `figS3.csv`                                              |
//! | `figS5` | `figS5_distributions.csv`, `figS5_g2.csv`                |

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use rydfock::pipeline::{self, write_sweep_csv, InputKind, PipelineConfig};
use rydfock::ratemodel::{predict_cross_correlation, with_storage};
use rydfock::{EfficiencyTable, Pipeline, SourceModel, SweepRow, TAIL_TOL};

use crate::commands::write_text;
use crate::config::RunConfig;
use crate::Figure;

/// Multiphoton strengths of the input-distribution figure.
pub const FIG_S5_ZETAS: [f64; 3] = [0.01, 0.05, 0.5];

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Also emit fig3 curves for unstored pulses (stretched-medium model)
    #[arg(long)]
    slow_light: bool,
    /// Storage efficiency table `p_w,eta` for figS3 (overrides `eff_table`)
    #[arg(long)]
    eff_table: Option<PathBuf>,
}

pub fn run(mut cfg: RunConfig, args: ReproduceArgs) -> anyhow::Result<()> {
    if args.eff_table.is_some() {
        cfg.eff_table = args.eff_table;
    }
    match args.figure {
        Figure::Fig3 => fig3(&cfg, args.slow_light),
        Figure::Fig4 => fig4(&cfg),
        Figure::FigS3 => fig_s3(&cfg),
        Figure::FigS5 => fig_s5(&cfg),
    }
}

fn kinds(cfg: &RunConfig) -> [(&'static str, InputKind); 2] {
    [("dlcz", InputKind::Dlcz { t_w: cfg.t_w }), ("wcs", InputKind::Wcs)]
}

fn sweep_kind(cfg: &RunConfig, kind: InputKind, medium_scale: f64) -> anyhow::Result<Vec<SweepRow>> {
    let pc = PipelineConfig { input_kind: kind, medium_scale, ..cfg.pipeline.clone() };
    Ok(pipeline::sweep(&pc, &cfg.zeta_grid)?)
}

fn fig3(cfg: &RunConfig, slow_light: bool) -> anyhow::Result<()> {
    let mut variants = vec![("", 1.0)];
    if slow_light {
        variants.push(("_slow_light", cfg.slow_light_scale));
    }
    for (suffix, scale) in variants {
        for (name, kind) in kinds(cfg) {
            let rows = sweep_kind(cfg, kind, scale)?;
            let path = cfg.out_dir.join(format!("fig3_{name}{suffix}.csv"));
            write_text(&path, |out| write_sweep_csv(&rows, out))?;
        }
    }
    Ok(())
}

fn fig4(cfg: &RunConfig) -> anyhow::Result<()> {
    for (name, kind) in kinds(cfg) {
        let rows = sweep_kind(cfg, kind, 1.0)?;
        write_text(&cfg.out_dir.join(format!("fig4_{name}.csv")), |out| {
            writeln!(out, "zeta,param,eta,eta_lo,eta_hi")?;
            for r in &rows {
                writeln!(out, "{},{},{},{},{}", r.zeta, r.param, r.eta, r.eta_lo, r.eta_hi)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Storage efficiency of heralded read photons against the detected write
/// probability, from the pipeline model.
fn model_efficiency_table(cfg: &RunConfig, p_w: &[f64]) -> anyhow::Result<EfficiencyTable> {
    let pl = Pipeline::new(PipelineConfig { input_kind: InputKind::Dlcz { t_w: cfg.t_w }, ..cfg.pipeline.clone() })?;
    let points = p_w
        .iter()
        .map(|&x| {
            let p = cfg.rate.p_for_write_probability(x).max(rydfock::source::P_MIN);
            let input = SourceModel::new(p, cfg.t_w)?.conditional_read_state_auto()?;
            Ok((x, pl.efficiency(&input)?))
        })
        .collect::<rydfock::Result<Vec<_>>>()?;
    Ok(EfficiencyTable::new(points)?)
}

fn fig_s3(cfg: &RunConfig) -> anyhow::Result<()> {
    let mut grid = cfg.p_w_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let eff = match &cfg.eff_table {
        Some(path) => EfficiencyTable::from_csv(path).with_context(|| format!("reading {}", path.display()))?,
        None => model_efficiency_table(cfg, &grid)?,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &p_w in &grid {
        let unstored = cfg.rate.with_p(cfg.rate.p_for_write_probability(p_w));
        let stored = with_storage(&unstored, &eff, p_w);
        rows.push([
            p_w,
            unstored.p,
            predict_cross_correlation(&unstored)?,
            predict_cross_correlation(&stored)?,
            predict_cross_correlation(&unstored.without_read_noise())?,
            predict_cross_correlation(&stored.without_read_noise())?,
            eff.eval(p_w),
        ]);
    }
    write_text(&cfg.out_dir.join("figS3.csv"), |out| {
        writeln!(out, "p_w,p,g2_unstored,g2_stored,g2_unstored_noise_free,g2_stored_noise_free,eta")?;
        for r in &rows {
            let cells: Vec<String> = r.iter().map(f64::to_string).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    })
}

fn fig_s5(cfg: &RunConfig) -> anyhow::Result<()> {
    let mut columns = Vec::new();
    let mut summary = Vec::new();
    for (name, kind) in kinds(cfg) {
        let pc = PipelineConfig { input_kind: kind, ..cfg.pipeline.clone() };
        for zeta in FIG_S5_ZETAS {
            let (param, input) = pipeline::input_for_zeta(&pc, zeta)?;
            let at_cloud = pc.cloud_input(&input)?;
            summary.push((name, zeta, param, input.g2()?, at_cloud.tail_mass(3)));
            columns.push((format!("{name}_{zeta}"), at_cloud));
        }
    }
    let k_max = columns
        .iter()
        .map(|(_, d)| (0..=d.n_max()).find(|&k| d.tail_mass(k + 1) < TAIL_TOL).unwrap_or(d.n_max()))
        .max()
        .unwrap_or(0);
    write_text(&cfg.out_dir.join("figS5_distributions.csv"), |out| {
        let names: Vec<&str> = columns.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(out, "k,{}", names.join(","))?;
        for k in 0..=k_max {
            let cells: Vec<String> = columns.iter().map(|(_, d)| d.prob(k).to_string()).collect();
            writeln!(out, "{k},{}", cells.join(","))?;
        }
        Ok(())
    })?;
    write_text(&cfg.out_dir.join("figS5_g2.csv"), |out| {
        writeln!(out, "kind,zeta,param,g2_in,tail3")?;
        for (name, zeta, param, g2, tail) in &summary {
            writeln!(out, "{name},{zeta},{param},{g2},{tail}")?;
        }
        Ok(())
    })
}
