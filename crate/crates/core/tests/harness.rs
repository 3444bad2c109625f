use std::fs;

use wicknls::dynamics::{Scheme, SimConfig};
use wicknls::harness::{
    emit_results, read_manifests, run_convergence, run_convergence_with, run_members, run_renormalization_demo,
    run_stochastic_campaign, LadderConfig, Report,
};
use wicknls::lp::norm;
use wicknls::noise::StochasticConfig;
use wicknls::{Domain, Error, Field, GridSpec};

fn small_ladder() -> LadderConfig {
    let base = SimConfig {
        grid: GridSpec::new(4.0, 32).unwrap(),
        dt: 2e-3,
        t_final: 0.04,
        scheme: Scheme::StrangPrimitive,
        record_energy: false,
        ..Default::default()
    };
    let mut cfg = LadderConfig::new(base, vec![0.5]);
    cfg.sample_every = 5;
    cfg.datum_width = 1.0;
    cfg
}

fn two_level_ladder() -> LadderConfig {
    let mut cfg = small_ladder();
    cfg.base.grid = GridSpec::new(4.0, 64).unwrap();
    cfg.eps_list = vec![0.5, 0.25];
    cfg
}

#[test]
fn quiet_noise_members_share_one_flow() {
    // With ξ ≡ 0 every member solves the same equation; only the
    // deterministic renormalizing phase e^{i c_ε t} tells them apart.
    let cfg = two_level_ladder();
    let xi = Field::zeros(cfg.base.grid, Domain::Physical);
    let plain = run_members(&cfg, false, Some(xi.clone()), None).unwrap();
    for (a, b) in plain[0].snapshots.iter().zip(&plain[1].snapshots) {
        let gap = a.sub(b).unwrap().max_abs();
        assert!(gap < 1e-13, "{gap}");
    }
    let report = run_convergence_with(&cfg, Some(xi), None).unwrap();
    let dc = plain[0].c_eps - plain[1].c_eps;
    let expect = plain[0]
        .times
        .iter()
        .zip(&plain[0].snapshots)
        .map(|(t, v)| 2.0 * (0.5 * dc * t).sin().abs() * norm(v, &cfg.norm).unwrap())
        .fold(0.0, f64::max);
    assert!((report.gaps[0] - expect).abs() < 1e-10 * expect, "{} vs {expect}", report.gaps[0]);
}

#[test]
fn corrected_demo_ladder_matches_convergence_run() {
    let cfg = two_level_ladder();
    let conv = run_convergence(&cfg, None).unwrap();
    let demo = run_renormalization_demo(&cfg, None).unwrap();
    for (a, b) in conv.gaps.iter().zip(&demo.corrected.gaps) {
        assert!((a - b).abs() < 1e-12 * a.max(1.0), "{a} vs {b}");
    }
    for (sa, sb) in conv.series.iter().zip(&demo.corrected.series) {
        for (a, b) in sa.iter().zip(sb) {
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }
    // At t = 0 the phase is 1 and both variants agree.
    for (c, u) in demo.corrected.series.iter().zip(&demo.uncorrected.series) {
        assert_eq!(c[0], u[0]);
    }
}

#[test]
fn members_share_one_noise_realization() {
    let cfg = two_level_ladder();
    let members = run_members(&cfg, true, None, None).unwrap();
    assert_eq!(members.len(), 2);
    assert_eq!(members[0].xi_hash, members[1].xi_hash);
    let report = run_convergence(&cfg, None).unwrap();
    assert!(report.coupled());
}

#[test]
fn weak_gaps_are_dominated_by_strong_gaps() {
    let cfg = two_level_ladder();
    let report = run_convergence(&cfg, None).unwrap();
    for (w, s) in report.weak_gaps.iter().zip(&report.gaps) {
        assert!(w <= s, "{w} > {s}");
    }
}

#[test]
fn unresolved_ladder_is_refused_with_sub_ladder() {
    let mut cfg = small_ladder();
    cfg.eps_list = vec![0.5, 0.25, 0.125];
    match run_convergence(&cfg, None) {
        Err(Error::UnderResolved(msg)) => assert!(msg.contains("[0.5]"), "{msg}"),
        other => panic!("expected refusal, got {:?}", other.map(|r| r.gaps)),
    }
}

#[test]
fn ladder_resumes_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = two_level_ladder();
    let first = run_members(&cfg, true, None, Some(dir.path())).unwrap();
    assert!(first.iter().all(|m| !m.resumed));
    let second = run_members(&cfg, true, None, Some(dir.path())).unwrap();
    assert!(second.iter().all(|m| m.resumed));
    for (a, b) in first[0].snapshots.iter().zip(&second[0].snapshots) {
        assert_eq!(a.values(), b.values());
    }
    let manifests = read_manifests(dir.path()).unwrap();
    assert_eq!(manifests.len(), 2);
    for m in &manifests {
        m.verify(dir.path()).unwrap();
    }

    // A tampered snapshot fails verification.
    let victim = dir.path().join(&manifests[0].files[0].path);
    fs::write(&victim, b"tampered").unwrap();
    assert!(manifests[0].verify(dir.path()).is_err());
}

#[test]
fn campaign_refuses_zero_realizations() {
    let g = GridSpec::new(3.0, 64).unwrap();
    let cfg = StochasticConfig::new(vec![0.25], 0, 1);
    assert!(matches!(run_stochastic_campaign(&g, &cfg, None), Err(Error::Statistics(_))));
}

#[test]
fn campaign_report_bytes_are_deterministic() {
    let g = GridSpec::new(3.0, 64).unwrap();
    let cfg = StochasticConfig::new(vec![0.375, 0.1875], 20, 7);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_stochastic_campaign(&g, &cfg, Some(a.path())).unwrap();
    run_stochastic_campaign(&g, &cfg, Some(b.path())).unwrap();
    let ta = fs::read(a.path().join("stochastic.txt")).unwrap();
    let tb = fs::read(b.path().join("stochastic.txt")).unwrap();
    assert_eq!(ta, tb);
    // The report carries the c_ε table exactly as computed.
    let text = String::from_utf8(ta).unwrap();
    for row in &ra.rows {
        let c = wicknls::noise::compute_c_eps(&g, row.eps).unwrap();
        assert_eq!(row.c_eps, c);
        assert!(text.contains(&format!("{c:.17e}")), "missing {c:.17e}");
    }
}

#[test]
fn emitted_svg_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_convergence(&two_level_ladder(), None).unwrap();
    let files = emit_results(&[Report::Convergence(report)], dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["convergence.csv", "convergence.svg"]);
    let svg = fs::read_to_string(dir.path().join("convergence.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().any(|n| n.tag_name().name() == "polyline"));
}

#[test]
fn empty_report_list_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_results(&[], dir.path()).unwrap();
    assert!(files.is_empty());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}
