use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockade_sim::config::parse_config;

const BIN: &str = env!("CARGO_BIN_EXE_blockade-sim");

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn cli(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Rows of a CSV file without comment lines, split into cells.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const VALIDATE: &str = "\
[physics]
detuning = 200.0
signal_coupling = 10.0
blockade_shift = 500.0
rydberg_linewidth = 0.0
[pulse]
family = \"square\"
amplitude = 20.0
duration = 0.5
[validate]
n_atoms_max = 3
";

const SMALL_FULL: &str = "\
[physics]
n_atoms = 3
detuning = 200.0
signal_coupling = 10.0
blockade_shift = 500.0
rydberg_linewidth = 0.0
[pulse]
family = \"gaussian\"
amplitude = 20.0
duration = 1.0
center = 0.5
width = 0.15
[grid]
dt = 1e-4
record_stride = 100
";

#[test]
fn validate_passes_with_default_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "v.toml", VALIDATE);
    let o = cli(&["validate"], &config, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    let rows = csv_rows(&dir.path().join("validate.csv"));
    assert_eq!(rows[0], ["n_atoms", "drive", "max_deviation", "max_residual", "max_outside_basis"]);
    assert_eq!(rows.len(), 1 + 3 * 2);
}

#[test]
fn validate_threshold_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = VALIDATE.replace("n_atoms_max = 3", "n_atoms_max = 2\nmax_deviation = 0.0");
    let config = write_config(dir.path(), "v.toml", &text);
    let o = cli(&["validate"], &config, dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn raman_at_zero_detuning_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", "[physics]\ndetuning = 0.0\n[model]\ntier = \"raman\"\n");
    let o = cli(&["simulate"], &config, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("ERROR:"), "{err}");
    assert!(err.contains("adiabatic elimination undefined"), "{err}");
}

#[test]
fn typo_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", "[physics]\ndetunning = 10.0\n");
    let o = cli(&["rsn"], &config, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown key"), "{}", stderr(&o));
}

#[test]
fn missing_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["simulate"], &dir.path().join("absent.toml"), dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR:"));
}

#[test]
fn bad_arguments_use_error_prefix() {
    let o = Command::new(BIN).args(["simulate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR:"), "{}", stderr(&o));
    let o = Command::new(BIN).args(["plot", "--config", "x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(BIN).args(["sweep", "--config", "x.toml", "--jobs", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_over_atom_number_shows_sqrt_enhancement() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "s.toml",
        "[physics]\ndetuning = 2000.0\nsignal_coupling = 5.0\n\
         [pulse]\nfamily = \"square\"\namplitude = 40.0\nduration = 70.0\n\
         [grid]\ndt = 0.01\n[model]\ntier = \"two_level\"\n\
         [sweep]\nparameter = \"n_atoms\"\nvalues = [1, 4, 9, 16]\n",
    );
    let o = cli(&["sweep", "--no-timestamp"], &config, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    let col = rows[0].iter().position(|c| c == "fitted_collective_rabi").unwrap();
    assert_eq!(rows[0][0], "sweep_n_atoms");
    let freqs: Vec<f64> = rows[1..].iter().map(|r| r[col].parse().unwrap()).collect();
    for (w, expected) in freqs.iter().zip([1.0, 2.0, 3.0, 4.0]) {
        assert!((w / freqs[0] - expected).abs() < 1e-3, "{freqs:?}");
    }
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", SMALL_FULL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = cli(&["simulate", "--no-timestamp"], &config, out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["report.csv", "trajectory.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let traj = csv_rows(&a.join("trajectory.csv"));
    assert_eq!(traj[0], ["time", "P_ground", "P_single", "P_r1", "P_r2plus", "P_double_signal", "norm"]);
    assert_eq!(traj.len(), 1 + 101);
    let report = csv_rows(&a.join("report.csv"));
    assert_eq!(report.len(), 2);
    assert_eq!(report[0].len(), report[1].len());
    assert_eq!(report[1][0], "full");
}

#[test]
fn timestamp_line_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", "[physics]\nn_atoms = 1\n");
    let o = cli(&["rsn"], &config, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("rsn.csv")).unwrap();
    assert!(text.starts_with("# blockade-sim"));
    let o = cli(&["rsn", "--no-timestamp"], &config, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("rsn.csv")).unwrap();
    assert!(text.starts_with("density,length,wavelength,rsn\n"), "{text}");
}

#[test]
fn numbers_are_scientific_with_sixteen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", "[physics]\nn_atoms = 1\n");
    let o = cli(&["rsn", "--no-timestamp"], &config, dir.path());
    assert!(stdout(&o).contains("R_sn = 1.519817754635"), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("rsn.csv"));
    for cell in &rows[1] {
        let (mantissa, exponent) = cell.split_once('e').unwrap();
        assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 16, "{cell}");
        exponent.parse::<i32>().unwrap();
    }
}

#[test]
fn design_pulse_echoes_a_config_fragment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "d.toml",
        "[physics]\nn_atoms = 100\n\
         [pulse]\nfamily = \"square\"\namplitude = 400.0\nduration = 0.1\n\
         [model]\ntier = \"two_level\"\n[design]\nfree_parameter = \"duration\"\n",
    );
    let o = cli(&["design-pulse", "--no-timestamp"], &config, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fragment = fs::read_to_string(dir.path().join("pulse.toml")).unwrap();
    let parsed = parse_config(&fragment).unwrap();
    assert!((parsed.pulse.duration() - std::f64::consts::PI / 20.0).abs() < 1e-9);
    let rows = csv_rows(&dir.path().join("design.csv"));
    let transfer: f64 = rows[1][rows[0].iter().position(|c| c == "transfer").unwrap()].parse().unwrap();
    assert!(transfer >= 0.9999);
}

#[test]
fn design_pulse_rejects_full_tier() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "d.toml", "[physics]\nn_atoms = 2\n[model]\ntier = \"full\"\n");
    let o = cli(&["design-pulse"], &config, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("two_level or raman"), "{}", stderr(&o));
}

#[test]
fn basis_guard_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", SMALL_FULL);
    let o = Command::new(BIN)
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .env("BLOCKADE_SIM_MAX_BASIS", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exceeds the configured maximum 5"), "{}", stderr(&o));
}

#[test]
fn failed_sweep_rows_are_marked() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "s.toml",
        "[physics]\nn_atoms = 2\n[model]\ntier = \"raman\"\n\
         [pulse]\nfamily = \"square\"\namplitude = 40.0\nduration = 1.0\n[grid]\ndt = 0.01\n\
         [sweep]\nparameter = \"detuning\"\nvalues = [2000.0, 0.0]\n",
    );
    let o = cli(&["sweep", "--no-timestamp"], &config, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ERROR: detuning = 0"), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    assert_ne!(rows[1][3], "nan");
    assert_eq!(rows[2][3], "nan");
}
