use ris_keygen::exec::Executor;
use ris_keygen::experiment::run_sweep;
use ris_keygen::presets::{figure_preset, Figure};

#[test]
fn kmr_does_not_grow_with_snr() {
    let preset = figure_preset(Figure::Fig4).with_n_keys(4_000).with_seed(21);
    let exec = Executor::parallel(0).unwrap();
    for label in ["ris_ts2_q2", "ris_tstk", "no_ris"] {
        let result = run_sweep(&preset.curve(label).unwrap().config, &exec).unwrap();
        for w in result.rows.windows(2) {
            let (a, b) = (&w[0].stats, &w[1].stats);
            assert!(
                b.kmr_hat <= a.kmr_hat + a.ci_halfwidth + b.ci_halfwidth,
                "{label}: {} dB {} -> {} dB {}",
                w[0].sweep_value,
                a.kmr_hat,
                w[1].sweep_value,
                b.kmr_hat
            );
        }
    }
}

#[test]
fn no_ris_kmr_is_flat_in_element_count() {
    let preset = figure_preset(Figure::Fig3).with_seed(22);
    let result = run_sweep(
        &preset.curve("no_ris").unwrap().config,
        &Executor::parallel(0).unwrap(),
    )
    .unwrap();
    let kmrs: Vec<f64> = result.rows.iter().map(|r| r.kmr()).collect();
    let spread = kmrs.iter().cloned().fold(f64::MIN, f64::max)
        - kmrs.iter().cloned().fold(f64::MAX, f64::min);
    let ci = result
        .rows
        .iter()
        .map(|r| r.stats.ci_halfwidth)
        .fold(0.0, f64::max);
    assert!(spread <= 0.01 + 2.0 * ci, "spread {spread}, ci {ci}");
}

#[test]
fn throughput_tracks_mismatch_on_every_figure() {
    let exec = Executor::parallel(0).unwrap();
    for fig in Figure::ALL {
        for curve in figure_preset(fig).with_n_keys(300).curves {
            let result = run_sweep(&curve.config, &exec).unwrap();
            assert!(
                result.rows.iter().all(|r| r.identities_hold()),
                "{fig} {}",
                curve.label
            );
            assert_eq!(
                result.rows.iter().all(|r| r.theory_bound.is_some()),
                matches!(fig, Figure::Fig5 | Figure::Fig6)
            );
        }
    }
}
