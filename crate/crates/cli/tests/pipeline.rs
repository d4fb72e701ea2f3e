use std::path::{Path, PathBuf};
use std::process::Command;

use poldqc_core::dqc::{load_real_map, load_spectrum};

const CONFIG: &str = "[cavity]\nlambda0_au = 0.03\nn_mol = 1\n";

fn poldqc(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_poldqc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn ok(dir: &Path, args: &[&str]) {
    let (code, err) = poldqc(dir, args);
    assert_eq!(code, 0, "{args:?}: {err}");
}

fn workdir(config: &str) -> (tempfile::TempDir, PathBuf) {
    let d = tempfile::tempdir().unwrap();
    let c = d.path().join("c.cfg");
    std::fs::write(&c, config).unwrap();
    (d, c)
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn field_free_pipeline_gives_two_peaks() {
    let (d, _) = workdir(CONFIG);
    let dir = d.path();
    ok(dir, &["surface", "--config", "c.cfg", "--variant", "free", "--out", "s.txt"]);
    ok(dir, &["solve", "--config", "c.cfg", "--input", "s.txt", "--out", "e.txt"]);
    ok(dir, &["spectrum", "--config", "c.cfg", "--input", "e.txt", "--out", "sp.txt", "--channels", "re,im,abs"]);
    ok(dir, &["peaks", "--input", "sp.txt", "--input", "e.txt", "--threshold", "0.1", "--out", "p.tsv"]);
    let text = std::fs::read_to_string(dir.join("p.tsv")).unwrap();
    let peaks: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| l.starts_with("peak\t"))
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(peaks.len(), 2, "{text}");
    for p in &peaks {
        let w2: f64 = p[1].parse().unwrap();
        assert!((w2 - 8389.0).abs() < 1.0, "{text}");
        assert!(p[4].starts_with("f=f1"));
    }
    let s = load_spectrum(dir.join("sp.txt")).unwrap();
    assert!((s.max_abs() - 1.0).abs() < 1e-12);
    for ch in ["re", "im", "abs"] {
        assert_eq!(load_real_map(dir.join(format!("sp.{ch}.txt"))).unwrap().name, ch);
        assert!(dir.join(format!("sp.{ch}.txt")).exists());
    }
    let manifest = std::fs::read_to_string(dir.join("sp.txt.manifest")).unwrap();
    assert!(manifest.contains("input e.txt sha256 "));
    assert_eq!(manifest.matches("\noutput ").count(), 4);
}

#[test]
fn diff_of_full_and_linear_is_antisymmetric() {
    let (d, _) = workdir(CONFIG);
    let dir = d.path();
    for v in ["full", "linear"] {
        ok(dir, &["surface", "--config", "c.cfg", "--variant", v, "--out", &format!("s_{v}.txt")]);
        ok(dir, &["solve", "--config", "c.cfg", "--input", &format!("s_{v}.txt"), "--out", &format!("e_{v}.txt")]);
        ok(dir, &["spectrum", "--config", "c.cfg", "--input", &format!("e_{v}.txt"), "--out", &format!("sp_{v}.txt")]);
    }
    ok(dir, &["diff", "--input", "sp_full.txt", "--input", "sp_linear.txt", "--out", "ab.txt"]);
    ok(dir, &["diff", "--input", "sp_linear.txt", "--input", "sp_full.txt", "--out", "ba.txt"]);
    let (ab, ba) = (load_real_map(dir.join("ab.txt")).unwrap(), load_real_map(dir.join("ba.txt")).unwrap());
    assert!(ab.values.iter().zip(&ba.values).all(|(x, y)| *x == -*y));
    assert!(ab.max_abs() > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let (d, _) = workdir(CONFIG);
    let dir = d.path();
    for tag in ["a", "b"] {
        ok(dir, &["surface", "--config", "c.cfg", "--out", &format!("s{tag}.txt")]);
        ok(dir, &["solve", "--config", "c.cfg", "--input", &format!("s{tag}.txt"), "--out", &format!("e{tag}.txt")]);
    }
    assert_eq!(read(dir.join("sa.txt")), read(dir.join("sb.txt")));
    assert_eq!(read(dir.join("ea.txt")), read(dir.join("eb.txt")));
    assert_eq!(read(dir.join("ea.txt.wf")), read(dir.join("eb.txt.wf")));
}

#[test]
fn tiny_photon_range_leaks() {
    let (d, _) = workdir(&format!("{CONFIG}[grid]\nqc_min_au = -8\nqc_max_au = 8\n"));
    let dir = d.path();
    ok(dir, &["surface", "--config", "c.cfg", "--out", "s.txt"]);
    let (code, err) = poldqc(dir, &["solve", "--config", "c.cfg", "--input", "s.txt", "--out", "e.txt"]);
    assert_eq!(code, 5, "{err}");
    assert!(err.contains("boundary leak"), "{err}");
}

#[test]
fn exit_codes_by_failure_kind() {
    let (d, _) = workdir("[cavity]\nlambda0_au = 0.03\nn_mol = 1\nbogus = 1\n");
    let (code, err) = poldqc(d.path(), &["surface", "--config", "c.cfg"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");

    let (d, _) = workdir("[cavity]\nlambda0_au = -0.01\nn_mol = 1\n");
    assert_eq!(poldqc(d.path(), &["surface", "--config", "c.cfg"]).0, 3);

    let (d, _) = workdir(CONFIG);
    assert_eq!(poldqc(d.path(), &["solve", "--config", "c.cfg"]).0, 2);
    assert_eq!(poldqc(d.path(), &["spectrum", "--config", "c.cfg", "--input", "missing.txt"]).0, 6);
    assert_eq!(poldqc(d.path(), &["peaks", "--input", "c.cfg"]).0, 2);
    assert_eq!(poldqc(d.path(), &["nonsense"]).0, 2);
}
