//! Runs a problem's test command against a generated program.

use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROGRAM_FILE: &str = "program.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub passed: bool,
    pub timed_out: bool,
    /// Exit code, absent when the process was killed or ended by a signal.
    pub exit_code: Option<i32>,
}

/// Writes `program` into a fresh temporary directory and runs `command`
/// there via `sh -c`, killing it after `timeout_secs`.
///
/// `{program}` and `{dir}` in the command expand to the program file and the
/// directory; the same paths are exported as `ADADEC_PROGRAM` and
/// `ADADEC_WORKDIR`. Only a zero exit status counts as a pass. Failing to
/// launch the shell is an error, not a failed test.
pub fn run_test(command: &str, program: &str, timeout_secs: f64) -> Result<TestOutcome> {
    let dir = tempfile::Builder::new().prefix("adadec-test-").tempdir()?;
    let program_path = dir.path().join(PROGRAM_FILE);
    std::fs::write(&program_path, program)?;
    let expanded = command
        .replace("{program}", &program_path.to_string_lossy())
        .replace("{dir}", &dir.path().to_string_lossy());

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&expanded)
        .current_dir(dir.path())
        .env("ADADEC_PROGRAM", &program_path)
        .env("ADADEC_WORKDIR", dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::Sandbox(format!("failed to launch `sh -c {expanded}`: {e}")))?;

    let deadline = Instant::now() + Duration::from_secs_f64(timeout_secs);
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(TestOutcome {
                passed: status.success(),
                timed_out: false,
                exit_code: status.code(),
            });
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(TestOutcome {
                passed: false,
                timed_out: true,
                exit_code: None,
            });
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}
