#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lesr_imageio::{save_png, RgbImage};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

pub fn lesr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lesr"))
}

pub fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn lesr")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn assert_ok(out: &Output) {
    assert_eq!(
        code(out),
        0,
        "expected success\nstdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

pub fn write_toy_pngs(dir: &Path, count: usize, h: usize, w: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let data = (0..h * w * 3).map(|_| rng.random_range(0..=255u8)).collect();
        let img = RgbImage::new(h, w, data).unwrap();
        save_png(&img, dir.join(format!("img{i}.png"))).unwrap();
    }
}

/// Prepares a toy dataset under `root` and returns its directory.
pub fn toy_dataset(root: &Path, scales: &str) -> PathBuf {
    let hr = root.join("hr");
    write_toy_pngs(&hr, 3, 48, 44, 99);
    let ds = root.join("dataset");
    let out = run(lesr()
        .arg("prepare")
        .arg("--hr-dir")
        .arg(&hr)
        .arg("--scales")
        .arg(scales)
        .arg("--out")
        .arg(&ds));
    assert_ok(&out);
    ds
}

/// Flags describing the small test model; must match on every subcommand
/// that loads its checkpoints.
pub fn tiny_model_flags(cmd: &mut Command) -> &mut Command {
    cmd.args([
        "--variant",
        "lesrcnn",
        "--scale",
        "2",
        "--channels",
        "4",
        "--ieeb-depth",
        "5",
        "--irb-depth",
        "2",
    ])
}

/// Parsed loss.csv rows as (step, lr, loss) strings, wall time dropped.
pub fn loss_rows(path: &Path) -> Vec<(String, String, String)> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].to_string(), r[2].to_string())
        })
        .collect()
}
