//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub const TS: &str = "2025-01-01T00:00:00Z";

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Run the built binary with every provider key variable removed.
pub fn bimcheck(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bimcheck"));
    cmd.args(args);
    for var in [
        "ANTHROPIC_API_KEY",
        "OPENAI_API_KEY",
        "GEMINI_API_KEY",
        "XAI_API_KEY",
        "COPILOT_API_KEY",
    ] {
        cmd.env_remove(var);
    }
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn fixtures() -> String {
    format!("{}/../core/fixtures", env!("CARGO_MANIFEST_DIR"))
}

/// Fresh empty directory under the target dir, unique per name.
pub fn scratch(name: &str) -> PathBuf {
    let dir =
        PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
