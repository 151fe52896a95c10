use nbrecon_sim::config::{ExperimentSpec, StopRule};
use nbrecon_sim::engine::{build_code, fer_sweep, protocol_params, run_point, Engine};
use nbrecon_sim::reproduce::{reproduce, ReproduceOptions};
use nbrecon_sim::table::Table;

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        n: 300,
        snr_db: vec![11.0, 13.0, 15.0],
        stop: StopRule { min_frames: 40, max_frames: 40, max_errors: 10 },
        mc_samples: 2000,
        ..ExperimentSpec::default()
    }
}

fn sweep_csv(spec: &ExperimentSpec, workers: usize) -> Vec<u8> {
    let engine = Engine::new(Some(workers)).unwrap();
    let code = build_code(spec).unwrap();
    let mut table = Table::for_points(&[]);
    for p in fer_sweep(&engine, spec, &code).unwrap() {
        table.push_point(vec![], &p);
    }
    table.to_csv().unwrap()
}

#[test]
fn sweep_bytes_do_not_depend_on_workers() {
    let mut spec = small_spec();
    // Early stopping must also land on the same frame.
    spec.stop = StopRule { min_frames: 5, max_frames: 60, max_errors: 7 };
    let one = sweep_csv(&spec, 1);
    assert_eq!(one, sweep_csv(&spec, 3));
    assert_eq!(one, sweep_csv(&spec, 8));
}

#[test]
fn no_correlation_always_fails() {
    let spec = ExperimentSpec { stop: StopRule { min_frames: 100, max_frames: 100, max_errors: 1000 }, ..small_spec() };
    let engine = Engine::new(Some(4)).unwrap();
    let code = build_code(&spec).unwrap();
    let params = protocol_params(&spec, &code, 10.0).unwrap().with_rho(0.0).unwrap();
    let p = run_point(&engine, &params, &spec, spec.stop).unwrap();
    assert_eq!((p.frames, p.errors, p.fer), (100, 100, 1.0));
    assert!(p.efficiency.beta.is_nan());
}

#[test]
fn near_noiseless_never_fails() {
    let spec = ExperimentSpec { stop: StopRule { min_frames: 100, max_frames: 100, max_errors: 1000 }, ..small_spec() };
    let engine = Engine::new(Some(4)).unwrap();
    let code = build_code(&spec).unwrap();
    let params = protocol_params(&spec, &code, 10.0).unwrap().with_rho(0.9999).unwrap();
    let p = run_point(&engine, &params, &spec, spec.stop).unwrap();
    assert_eq!((p.frames, p.errors), (100, 0));
    assert!(p.ci_lo == 0.0 && p.ci_hi < 0.04);
}

#[test]
fn minimum_frames_respected() {
    let spec = ExperimentSpec { stop: StopRule { min_frames: 30, max_frames: 200, max_errors: 1 }, ..small_spec() };
    let engine = Engine::new(Some(2)).unwrap();
    let code = build_code(&spec).unwrap();
    let params = protocol_params(&spec, &code, 10.0).unwrap().with_rho(0.0).unwrap();
    let p = run_point(&engine, &params, &spec, spec.stop).unwrap();
    assert_eq!(p.frames, 30);
}

#[test]
fn sweep_csv_round_trips() {
    let bytes = sweep_csv(&small_spec(), 2);
    let table = Table::from_csv(&bytes).unwrap();
    assert_eq!(table.to_csv().unwrap(), bytes);
    let pts = table.points().unwrap();
    assert_eq!(pts.len(), 3);
    for p in pts {
        assert!(p.ci_lo <= p.fer && p.fer <= p.ci_hi);
        assert_eq!(p.frames, 40);
    }
}

#[test]
fn fig1_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let opts = ReproduceOptions {
        out_dir: dir.path().to_path_buf(),
        min_frames: 10,
        max_frames: 10,
        n_override: Some(200),
        mc_samples: 1000,
        snr_span: 2.0,
        snr_step: 1.0,
        d_values: vec![1, 3],
        ..ReproduceOptions::default()
    };
    let engine = Engine::new(Some(4)).unwrap();
    let files = reproduce(&engine, "fig1", &opts).unwrap();
    assert_eq!(files.len(), 3);
    for f in &files {
        let t = Table::read(f).unwrap();
        assert_eq!(t.header[0], "d");
        assert_eq!(t.rows.len(), 2 * 3);
    }
    assert!(dir.path().join("codes").read_dir().unwrap().count() == 3);
}
