use std::path::{Path, PathBuf};

use shotwise::hamiltonian::load_hamiltonian;
use shotwise::harness::ExperimentConfig;
use shotwise::simulator::{load_circuit, presets};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn ansatz_files_match_presets() {
    for (name, circuit) in presets::all() {
        let path = root().join(format!("data/ansatz/{name}.toml"));
        let loaded = load_circuit(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(loaded, circuit, "{name}");
    }
}

#[test]
fn hamiltonian_files_load_and_round_trip() {
    let dir = root().join("data/hamiltonians");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let h = load_hamiltonian(&path).unwrap();
        let again = shotwise::hamiltonian::parse_hamiltonian(&h.to_toml_string()).unwrap();
        assert_eq!(again, h, "{}", path.display());
        assert!(h.exact_ground_energy().unwrap().is_finite());
        count += 1;
    }
    assert_eq!(count, 9);
}

#[test]
fn shipped_configs_prepare() {
    let dir = root().join("configs");
    let mut count = 0;
    for system in std::fs::read_dir(&dir).unwrap() {
        for entry in std::fs::read_dir(system.unwrap().path()).unwrap() {
            let path = entry.unwrap().path();
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(cfg.trials, 60);
            if cfg.method.uses_policy() {
                assert!(cfg.checkpoint.is_some(), "{}", path.display());
            } else {
                cfg.prepare().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            }
            count += 1;
        }
    }
    assert_eq!(count, 36);
}
