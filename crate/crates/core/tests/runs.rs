use spinfaraday::config::{parse_config, render};
use spinfaraday::runner::run;

const SI_RAMP: &str = "[scenario]\nkind = \"stern\"\nb_phi = 0.0\nb_z = 1.0\nhbar_omega = 1e-23\n\
                       [integrator]\nsteps = 1024\n\
                       [drive]\ntarget = \"b_phi\"\nknots = [[0.0, 0.0], [1e-8, 1.0]]\nsamples = 17\n\
                       [output]\nunits = \"si\"\n";

#[test]
fn si_stern_ramp_reports_volts() {
    let cfg = parse_config(SI_RAMP).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run(&cfg, tmp.path()).unwrap();
    let si = outcome.result.si.as_ref().expect("si summary present");
    assert!(si.amplitude_volts > 1e-8 && si.amplitude_volts < 1e-6, "{}", si.amplitude_volts);
    let summary = std::fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("motive_force_amplitude_volts"));
    assert!(summary.contains(&cfg.hash()));
}

#[test]
fn rendered_config_reparses_identically() {
    let cfg = parse_config(SI_RAMP).unwrap();
    assert_eq!(parse_config(&render(&cfg)).unwrap(), cfg);
}
