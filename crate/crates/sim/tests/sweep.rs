use fhpmip_core::scenario::ScenarioConfig;
use fhpmip_sim::config::{parse_config, ConfigError};
use fhpmip_sim::runner::{parse_grid, sweep, RunError};

fn base(extra: &[(&str, &str)]) -> ScenarioConfig {
    let mut text = include_str!("../scenarios/corridor_untimely.ini").to_string();
    for (from, to) in extra {
        assert!(text.contains(from), "{from} not in base scenario");
        text = text.replace(from, to);
    }
    parse_config(&text).unwrap()
}

fn grid(axes: &str) -> fhpmip_sim::runner::Grid {
    parse_grid(&format!("[grid]\nbase = unused.ini\n{axes}")).unwrap()
}

#[test]
fn two_by_two_grid_gives_four_ordered_rows() {
    let rows = sweep(
        &grid("threshold_x = 3, 6\ninterval = 10ms, 20ms\n"),
        &base(&[]),
    )
    .unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "interval=10ms;threshold_x=3",
            "interval=10ms;threshold_x=6",
            "interval=20ms;threshold_x=3",
            "interval=20ms;threshold_x=6",
        ]
    );
}

#[test]
fn rows_do_not_depend_on_neighbouring_cells() {
    let b = base(&[]);
    let all = sweep(&grid("n = 1, 3\nt_u_pred = 0, 20ms\n"), &b).unwrap();
    let one = sweep(&grid("n = 3\nt_u_pred = 20ms\n"), &b).unwrap();
    assert_eq!(all[3], one[0]);
}

#[test]
fn loss_grows_with_prediction_lag() {
    let b = base(&[("mode = aggregated", "mode = per_sensor")]);
    let rows = sweep(&grid("t_u_pred = 0, 10ms, 20ms\n"), &b).unwrap();
    let loss: Vec<u64> = rows.iter().map(|r| r.sim_loss).collect();
    assert!(loss.windows(2).all(|w| w[0] <= w[1]), "{loss:?}");
    assert!(loss[0] < loss[2], "{loss:?}");
}

#[test]
fn per_sensor_oracle_latency_is_linear_in_n() {
    let b = base(&[("mode = aggregated", "mode = per_sensor")]);
    let rows = sweep(&grid("n = 1, 2, 3, 4, 5\n"), &b).unwrap();
    let lat: Vec<i64> = rows.iter().map(|r| r.oracle_latency_us as i64).collect();
    let step = lat[1] - lat[0];
    assert!(step > 0);
    assert!(lat.windows(2).all(|w| w[1] - w[0] == step), "{lat:?}");
}

#[test]
fn cell_errors_name_the_cell() {
    let err = sweep(&grid("n = 2, 0\n"), &base(&[])).unwrap_err();
    assert_eq!(err.cell, "n=0");
    assert!(matches!(
        err.source,
        RunError::Config(ConfigError::Validation(_))
    ));
}
