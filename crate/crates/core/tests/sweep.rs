use std::fs;

use fhnburst::integrator::IntegratorConfig;
use fhnburst::sweep::contour::{cell_size, extract_boundaries, fraction_near, l2_levelsets};
use fhnburst::sweep::{run_sweep, AxisRange, RunOptions, SweepError, SweepGrid, SweepSpec};
use fhnburst::ModelParams;

fn small_spec(workers: usize) -> SweepSpec {
    let mut spec = SweepSpec::new(
        AxisRange::linspace(0.015, 0.03, 6),
        AxisRange::linspace(0.42, 0.54, 5),
    );
    spec.workers = workers;
    spec.checkpoint_every = 7;
    spec
}

fn run(spec: &SweepSpec, options: &RunOptions) -> Result<SweepGrid, SweepError> {
    run_sweep(spec, &ModelParams::default(), &IntegratorConfig::default(), options)
}

#[test]
fn worker_count_does_not_change_bytes() {
    let one = run(&small_spec(1), &RunOptions::default()).unwrap();
    let three = run(&small_spec(3), &RunOptions::default()).unwrap();
    assert_eq!(one.to_csv(), three.to_csv());
    assert_eq!(one.cells.len(), 30);
}

#[test]
fn resume_after_halts_matches_uninterrupted_run() {
    let spec = small_spec(2);
    let reference = run(&spec, &RunOptions::default()).unwrap().to_csv();

    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("sweep.ck");
    let mut halts = 0;
    let grid = loop {
        let opts = RunOptions {
            checkpoint: Some(ck.clone()),
            halt_after: Some(7),
        };
        match run(&spec, &opts) {
            Ok(grid) => break grid,
            Err(SweepError::Halted { completed }) => {
                assert!(completed > 0);
                halts += 1;
            }
            Err(e) => panic!("{e}"),
        }
    };
    assert!(halts >= 3, "only {halts} halts");
    assert_eq!(grid.to_csv(), reference);

    let text = fs::read_to_string(&ck).unwrap();
    let mut torn = text.clone();
    torn.push_str("29\tok\t2");
    fs::write(&ck, torn).unwrap();
    let again = run(&spec, &RunOptions { checkpoint: Some(ck.clone()), halt_after: None }).unwrap();
    assert_eq!(again.to_csv(), reference);
}

#[test]
fn checkpoint_of_other_spec_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("sweep.ck");
    let opts = RunOptions { checkpoint: Some(ck.clone()), halt_after: Some(1) };
    assert!(matches!(run(&small_spec(1), &opts), Err(SweepError::Halted { .. })));
    let mut other = small_spec(1);
    other.f_burst = 30.0;
    assert!(matches!(
        run(&other, &RunOptions { checkpoint: Some(ck), halt_after: None }),
        Err(SweepError::CheckpointMismatch { .. })
    ));
}

#[test]
fn csv_round_trip_and_sidecar() {
    let grid = run(&small_spec(2), &RunOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    grid.write_files(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text, grid.to_csv());
    let back = SweepGrid::from_csv(&text).unwrap();
    assert_eq!(back.to_csv(), text);
    assert!(fhnburst::sweep::sidecar_path(&path).exists());
}

#[test]
fn l2_level_sets_hug_spike_count_boundaries() {
    let mut spec = SweepSpec::new(
        AxisRange::linspace(0.01, 0.04, 20),
        AxisRange::linspace(0.40, 0.55, 20),
    );
    spec.workers = 4;
    let grid = run(&spec, &RunOptions::default()).unwrap();
    let boundaries = extract_boundaries(&grid).unwrap();
    let levels = l2_levelsets(&grid, 24).unwrap();
    assert!(!boundaries.is_empty());
    let frac = fraction_near(&boundaries, &levels, cell_size(&grid), 2.0);
    assert!(frac >= 0.5, "fraction {frac}");
    assert!(l2_levelsets(&grid, 0).unwrap().is_empty());
}
