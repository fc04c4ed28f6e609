use fsbc::initial::SurfaceInit;
use fsbc_cli::{CliError, Config};

fn parse(text: &str, overrides: &[&str]) -> Result<Config, CliError> {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    Config::from_toml(text, &o)
}

fn key_of(e: CliError) -> String {
    match e {
        CliError::Config { key, .. } => key,
        other => panic!("expected a validation error, got {other}"),
    }
}

#[test]
fn minimal_file_gets_defaults() {
    let cfg = parse("[physics]\nsigma = 2.0\n", &[]).unwrap();
    assert_eq!(cfg.physics.sigma, 2.0);
    assert_eq!((cfg.grid.nx, cfg.grid.ny, cfg.grid.nz, cfg.grid.b), (16, 16, 16, 10.0));
    assert_eq!(cfg.initial_data.psi0, SurfaceInit::Flat);
    assert_eq!(cfg.cutoff.delta1, None);
    assert_eq!(cfg, parse("", &["physics.sigma=2.0"]).unwrap());
}

#[test]
fn zero_surface_tension_is_rejected_with_the_model_requirement() {
    for s in ["0", "-1.0", "nan"] {
        let e = parse(&format!("[physics]\nsigma = {s}\n"), &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("physics.sigma") && msg.contains("surface tension"), "{msg}");
    }
}

#[test]
fn narrow_cutoff_band_fails_the_slope_bound() {
    // amplitude 0.5: max|chi'| = 35/(16 w) <= 1/1.5 needs w >= 3.28125
    let wave = "[initial_data.psi0]\nfamily = \"single_mode\"\namplitude = 0.5\n";
    let e = parse(wave, &["cutoff.delta1=3.2"]).unwrap_err();
    assert!(e.to_string().contains("slope"), "{e}");
    assert_eq!(key_of(e), "cutoff");
    parse(wave, &["cutoff.delta1=3.3"]).unwrap();
}

#[test]
fn every_violation_names_its_key() {
    let cases = [
        ("stepping.safety=1.5", "stepping.safety"),
        ("stepping.max_steps=0", "stepping.max_steps"),
        ("tolerances.elliptic_tol=0", "tolerances.elliptic_tol"),
        ("tolerances.eps_geo=-1e-3", "tolerances.eps_geo"),
        ("diagnostics.record_every=0", "diagnostics.record_every"),
        ("diagnostics.window=2", "diagnostics.window"),
        ("dispersion.modes=[0]", "dispersion.modes"),
        ("grid.b=-1", "grid.b"),
        ("grid.nx=7", "grid"),
    ];
    for (o, key) in cases {
        assert_eq!(key_of(parse("", &[o]).unwrap_err()), key, "{o}");
    }
    // surface reaching the bottom
    let e = parse("[grid]\nb = 3.0\n[initial_data.psi0]\nfamily = \"single_mode\"\namplitude = 3.0\n", &[]).unwrap_err();
    assert_eq!(key_of(e), "initial_data.psi0");
}

#[test]
fn unknown_keys_and_bad_syntax_are_parse_errors() {
    for (text, o) in [("[grid]\nnq = 3\n", None), ("[grid\n", None), ("", Some("physics.colour=1"))] {
        let e = parse(text, o.as_slice()).unwrap_err();
        assert!(matches!(e, CliError::Parse(_)), "{e}");
        assert_eq!(e.exit_code(), 2);
    }
    assert!(parse("", &["physics.sigma"]).is_err());
    assert!(parse("", &["physics.sigma.x=1"]).is_err());
}

#[test]
fn overrides_reach_nested_tagged_tables() {
    let cfg = parse(
        "",
        &[
            "initial_data.v0.family=columnar_vortex",
            "initial_data.v0.circulation=0.2",
            "initial_data.v0.radius=0.5",
            "output.directory=runs/a",
        ],
    )
    .unwrap();
    assert_eq!(cfg.output.directory.to_str(), Some("runs/a"));
    assert!(matches!(cfg.initial_data.v0, fsbc::initial::VelocityInit::ColumnarVortex { radius, .. } if radius == 0.5));
}

#[test]
fn resolved_config_round_trips_through_toml() {
    let cfg = parse("", &["initial_data.psi0.family=single_mode", "initial_data.psi0.amplitude=0.01", "cutoff.delta1=8.0"]).unwrap();
    let text = toml::to_string(&cfg).unwrap();
    assert_eq!(parse(&text, &[]).unwrap(), cfg);
}
