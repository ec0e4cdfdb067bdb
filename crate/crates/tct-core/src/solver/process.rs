//! Driving the external SMT solver as a subprocess.
//!
//! The solver receives one self-contained script on stdin and a soft timeout
//! via `-t:<ms>`, on which it answers `unknown` by itself. A hard deadline a
//! couple of seconds past the soft one guards against a hung process; hitting
//! it kills the solver and the run is reported as timed out.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::SolverError;

/// Slack past the soft timeout before the process is killed.
const HARD_GRACE_MS: u64 = 2_000;

pub struct SolverRun {
    pub stdout: String,
    pub stderr: String,
    /// True when the hard deadline fired and the process was killed.
    pub killed: bool,
}

pub fn run(program: &Path, script: &str, soft_timeout_ms: u64) -> Result<SolverRun, SolverError> {
    let mut child = Command::new(program)
        .arg("-in")
        .arg(format!("-t:{soft_timeout_ms}"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SolverError::Launch { program: program.display().to_string(), source })?;

    // Writer and readers run on their own threads so neither side of the
    // pipe pair can deadlock on a full buffer.
    let mut stdin = child.stdin.take().expect("stdin was piped");
    let script_owned = script.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(script_owned.as_bytes());
    });
    let mut out_pipe = child.stdout.take().expect("stdout was piped");
    let out_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = out_pipe.read_to_string(&mut buf);
        buf
    });
    let mut err_pipe = child.stderr.take().expect("stderr was piped");
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = err_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + Duration::from_millis(soft_timeout_ms + HARD_GRACE_MS);
    let mut killed = false;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    killed = true;
                    break;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(source) => {
                let _ = child.kill();
                return Err(SolverError::Launch {
                    program: program.display().to_string(),
                    source,
                });
            }
        }
    }
    let _ = writer.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(SolverRun { stdout, stderr, killed })
}

/// Run `program --version` and return its first output line, if the binary
/// is runnable at all.
pub fn probe_version(program: &Path) -> Option<String> {
    let output = Command::new(program)
        .arg("--version")
        .stdin(Stdio::null())
        .output()
        .ok()?;
    if !output.status.success() {
        return None;
    }
    let text = String::from_utf8_lossy(&output.stdout);
    let line = text.lines().next().unwrap_or("").trim();
    if line.is_empty() {
        None
    } else {
        Some(line.to_string())
    }
}
