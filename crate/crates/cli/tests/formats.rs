use fsbc::diagnostics::DiagnosticsRecord;
use fsbc_cli::io::{
    read_history, read_snapshot, read_timeseries, sidecar_path, timeseries_header, write_snapshot, write_timeseries,
    Snapshot, SNAPSHOT_VERSION,
};
use fsbc_cli::run::Simulation;
use fsbc_cli::{Config, FormatError};

fn config(overrides: &[&str]) -> Config {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    Config::from_toml("", &o).unwrap()
}

fn sample() -> Snapshot {
    let (nx, ny, nz) = (4, 6, 3);
    let f = |s: f64, n: usize| (0..n).map(|i| (s + i as f64).sin() / 3.0).collect::<Vec<_>>();
    Snapshot {
        dims: [nx, ny, nz],
        b: 2.5,
        sigma: 0.7,
        t: 1.0 / 3.0,
        psi: f(0.1, nx * ny),
        v: [f(1.0, nx * ny * nz), f(2.0, nx * ny * nz), f(3.0, nx * ny * nz)],
    }
}

#[test]
fn header_matches_the_documented_schema() {
    let h = timeseries_header();
    assert_eq!(h.split(',').count(), 16);
    assert!(h.starts_with("t,E,psi_c3,psi_t_c3,psi_tt_h15,vbar_sup,w1inf_integral,psi_t_c2,psi_t_h3,"));
    assert!(h.ends_with("vort_sup,bkm_integral,min_d3phi,depth_margin,grad_psi_sup,div_norm,energy_identity_residual"));
}

#[test]
fn timeseries_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ts.csv");
    let recs: Vec<_> = (0..5)
        .map(|k| {
            let mut x = [0.0; 16];
            for (i, v) in x.iter_mut().enumerate() {
                *v = ((k * 16 + i) as f64).exp().recip() * std::f64::consts::PI;
            }
            DiagnosticsRecord::from_values(x)
        })
        .collect();
    write_timeseries(&p, &recs).unwrap();
    assert_eq!(read_timeseries(&p).unwrap(), recs);
    std::fs::write(&p, format!("{}\n1,2,3\n", timeseries_header())).unwrap();
    assert!(matches!(read_timeseries(&p), Err(FormatError::Timeseries { line: 2, .. })));
}

#[test]
fn snapshot_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.snap");
    let s = sample();
    write_snapshot(&p, &s).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(&bytes[..8], b"EFSBSNAP");
    assert_eq!(bytes.len(), 48 + 8 * (24 + 3 * 72));
    let back = read_snapshot(&p).unwrap();
    assert_eq!(back, s);
    assert!(back.v.iter().flatten().zip(s.v.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn malformed_snapshots_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.snap");
    write_snapshot(&p, &sample()).unwrap();
    let good = std::fs::read(&p).unwrap();

    let mut v = good.clone();
    v[8..12].copy_from_slice(&(SNAPSHOT_VERSION + 1).to_le_bytes());
    std::fs::write(&p, &v).unwrap();
    assert!(matches!(read_snapshot(&p), Err(FormatError::Version { found: 2, expected: 1 })));

    std::fs::write(&p, &good[..good.len() - 8]).unwrap();
    assert!(matches!(read_snapshot(&p), Err(FormatError::Truncated { .. })));

    let mut m = good.clone();
    m[0] = b'X';
    std::fs::write(&p, &m).unwrap();
    assert!(matches!(read_snapshot(&p), Err(FormatError::BadMagic)));
}

#[test]
fn snapshot_on_another_grid_is_a_dimension_mismatch() {
    let cfg = config(&["grid.nz=9"]);
    let sim = Simulation::new(&cfg).unwrap();
    let other = config(&["grid.nz=17"]).grid().unwrap();
    assert!(matches!(sim.snapshot().to_state(&other), Err(FormatError::Dimensions { found: [16, 16, 9], .. })));
    let deeper = config(&["grid.nz=9", "grid.b=5"]).grid().unwrap();
    assert!(matches!(sim.snapshot().to_state(&deeper), Err(FormatError::Depth { .. })));
}

#[test]
fn equilibrium_snapshot_has_zero_surface() {
    let sim = Simulation::new(&config(&["grid.nz=9"])).unwrap();
    let s = sim.snapshot();
    assert!(s.psi.iter().all(|&x| x == 0.0));
    assert_eq!(s.dims, [16, 16, 9]);
    assert_eq!(s.to_state(sim.grid()).unwrap(), *sim.state());
}

#[test]
fn missing_sidecar_reads_as_none() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.snap");
    assert_eq!(sidecar_path(&p), dir.path().join("x.snap.history.json"));
    assert!(read_history(&p).unwrap().is_none());
}
