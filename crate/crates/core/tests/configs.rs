use std::path::Path;

use wordlab::config::Config;
use wordlab::harness::ExperimentKind;

fn load(name: &str) -> wordlab::harness::ExperimentSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let spec = Config::load(&path).and_then(|c| c.to_spec()).unwrap_or_else(|e| panic!("{name}: {e}"));
    spec.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    spec
}

#[test]
fn shipped_configs_are_valid() {
    let xval = load("xval.conf");
    assert_eq!(xval.kind, ExperimentKind::Xval);
    assert_eq!(xval.learners.len(), 13);
    assert!(xval.learners.iter().any(|l| !l.settings().is_empty()));

    assert_eq!(load("dims_sweep.conf").train_caps.get(&10000), Some(&2000));
    assert_eq!(load("sensitivity_sweep.conf").dataset.n, 100);
    assert_eq!(load("online.conf").kind, ExperimentKind::Online);
    assert_eq!(load("clustered.conf").dataset.source.as_str(), "clustered");
    assert!(load("grid_develop.conf").grids.iter().all(|g| g.size() <= 32));
}

#[test]
fn tuned_params_only_set_learners() {
    let text = include_str!("../assets/tuned_params.conf");
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l.starts_with("learner.")), "{lines:?}");
}
