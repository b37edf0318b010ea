#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const CHADPOD: &str = env!("CARGO_BIN_EXE_chadpod");
pub const STUB: &str = env!("CARGO_BIN_EXE_chadpod-stub-scorer");

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn chadpod<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(CHADPOD).args(args).output().expect("run chadpod")
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

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&read(path)).unwrap_or_else(|e| panic!("parse {}: {e}", path.display()))
}

/// Runs `build-dataset` on the game fixture into `dir`.
pub fn build_fixture_dataset(dir: &Path) -> Output {
    chadpod([
        "build-dataset".as_ref(),
        fixture("games").as_os_str(),
        "--out".as_ref(),
        dir.as_os_str(),
    ])
}

pub fn path_arg(p: &Path) -> String {
    p.to_str().expect("utf-8 path").to_string()
}

/// `external:exec:<stub> <args>` for `--scorer`.
pub fn stub_scorer(args: &str) -> String {
    format!("external:exec:{STUB} {args}")
}
