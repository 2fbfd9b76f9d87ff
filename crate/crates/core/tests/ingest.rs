use dnf_core::io::write_sim_session;
use dnf_core::{condition, ingest, simulate, welch_psd, FilterConfig, SimConfig};

#[test]
fn simulated_session_survives_export_and_ingest() {
    let sim = simulate(&SimConfig {
        duration_s: 10.0,
        seed: 5,
        ..SimConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    write_sim_session(&path, &sim).unwrap();

    let back = ingest(&path, sim.session.sample_rate_hz).unwrap();
    assert_eq!(back.session.inner, sim.session.inner);
    assert_eq!(back.session.outer, sim.session.outer);
    assert_eq!(back.c.as_deref(), Some(sim.c.as_slice()));
    assert_eq!(back.r.as_deref(), Some(sim.r.as_slice()));
    assert_eq!(back.session.triggers, sim.session.triggers);
}

#[test]
fn outer_reference_is_stripped_below_its_cutoff() {
    let sim = simulate(&SimConfig {
        duration_s: 30.0,
        ..SimConfig::default()
    })
    .unwrap();
    let streams = condition(&sim.session, &FilterConfig::default()).unwrap();
    let fs = sim.session.sample_rate_hz;
    let pd = welch_psd(&streams.d, fs).unwrap();
    let px = welch_psd(&streams.x, fs).unwrap();
    // 1-3 Hz is EEG territory: kept on the inner channel, cut on the outer one
    let low = |p: &dnf_core::Periodogram| (1..=3).map(|k| p.density[k]).sum::<f64>();
    assert!(low(&px) < 0.1 * low(&pd), "{} vs {}", low(&px), low(&pd));
}
