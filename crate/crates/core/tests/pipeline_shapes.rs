use rydfock::blockade::exact_pair_survival;
use rydfock::pipeline::{sweep, InputKind, Pipeline, PipelineConfig};
use rydfock::BlockadeConfig;

const GRID: [f64; 8] = [0.01, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5];

fn cfg(kind: InputKind) -> PipelineConfig<f64> {
    PipelineConfig {
        input_kind: kind,
        blockade: BlockadeConfig { trials_per_fock: 50_000, rng_seed: 5, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn dlcz_crosses_wcs_where_input_g2_is_one() {
    let dlcz = sweep(&cfg(InputKind::Dlcz { t_w: 0.21 }), &GRID).unwrap();
    let wcs = sweep(&cfg(InputKind::Wcs), &GRID).unwrap();
    let diff: Vec<f64> = dlcz.iter().zip(&wcs).map(|(d, w)| d.g2_out - w.g2_out).collect();
    let cross = diff.windows(2).position(|w| w[0] < 0.0 && w[1] > 0.0).expect("curves cross");
    assert_eq!(diff.iter().filter(|d| **d < 0.0).count(), cross + 1);
    let (g_before, g_after) = (dlcz[cross].g2_in, dlcz[cross + 1].g2_in);
    assert!(g_before < 1.0 + 0.25 && g_after > 1.0 - 0.25, "g2_in {g_before}..{g_after}");
    assert!(wcs.windows(2).all(|w| w[1].g2_out >= w[0].g2_out));
    assert!(dlcz.windows(2).all(|w| w[1].eta < w[0].eta));
    assert!(wcs.windows(2).all(|w| w[1].eta < w[0].eta));
}

#[test]
fn dlcz_tail_exceeds_wcs_at_high_zeta() {
    let tail = |kind| {
        let pl = Pipeline::new(PipelineConfig {
            blockade: BlockadeConfig { blockade_radius: 0.0, trials_per_fock: 1, ..Default::default() },
            ..cfg(kind)
        })
        .unwrap();
        let (_, input) = pl.input_for_zeta(0.5).unwrap();
        pl.cloud_input(&input).unwrap().tail_mass(3)
    };
    assert!(tail(InputKind::Dlcz { t_w: 0.21 }) > tail(InputKind::Wcs));
}

#[test]
fn wcs_plateau_is_pair_survival() {
    let pl = Pipeline::new(cfg(InputKind::Wcs)).unwrap();
    let (_, input) = pl.input_for_zeta(1e-5).unwrap();
    let m22 = pl.blockade_matrix().get(2, 2);
    assert!((pl.g2_after_storage(&input).unwrap() - m22).abs() < 1e-4);
    let sigma = (0.09 * 0.91 / 50_000f64).sqrt();
    assert!((m22 - exact_pair_survival(10.5, 15.0).unwrap()).abs() < 3.0 * sigma);
}

#[test]
fn slow_light_weakens_the_blockade() {
    let stored = Pipeline::new(cfg(InputKind::Wcs)).unwrap();
    let slow = Pipeline::new(PipelineConfig { medium_scale: 2.5, ..cfg(InputKind::Wcs) }).unwrap();
    let (_, input) = stored.input_for_zeta(0.2).unwrap();
    assert!(slow.g2_after_storage(&input).unwrap() > 3.0 * stored.g2_after_storage(&input).unwrap());
}
