//! A backend living in a child process, spoken to over stdio line-JSON.
//!
//! The child starts on the first call and is kept for later calls. Each call
//! writes one request line and waits for one response line. A timeout or an
//! early exit tears the child down; the next call starts a fresh one.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use diarkit_core::pipeline::{call_checked, Backend, BackendError};
use diarkit_core::protocol::{BackendRequest, BackendResponse};

pub const DEFAULT_TIMEOUT_SECS: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("backend command is empty")]
    Empty,
    #[error("backend command has unbalanced quoting")]
    Quoting,
}

/// Splits a shell-style command line into program and arguments.
pub fn parse_command(command: &str) -> Result<Vec<String>, CommandError> {
    let argv = shlex::split(command).ok_or(CommandError::Quoting)?;
    if argv.is_empty() {
        return Err(CommandError::Empty);
    }
    Ok(argv)
}

/// Incoming stdout lines; `Err` carries an unreadable or unterminated line.
type LineFeed = Receiver<Result<String, String>>;

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: LineFeed,
}

impl Running {
    fn spawn(argv: &[String]) -> Result<Self, BackendError> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::Spawn(format!("{}: {e}", argv[0])))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut buf = Vec::new();
                match reader.read_until(b'\n', &mut buf) {
                    Ok(0) => return,
                    Ok(_) if buf.last() != Some(&b'\n') => {
                        let _ = tx.send(Err("unterminated response line".to_string()));
                        return;
                    }
                    Ok(_) => {
                        buf.pop();
                        let line = String::from_utf8(buf).map_err(|_| "response line is not UTF-8".to_string());
                        if tx.send(line).is_err() {
                            return;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(format!("reading stdout: {e}")));
                        return;
                    }
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exit_description(&mut self) -> String {
        // the reader saw EOF, so the child is gone or about to be
        for _ in 0..50 {
            if let Ok(Some(status)) = self.child.try_wait() {
                return status.to_string();
            }
            thread::sleep(Duration::from_millis(10));
        }
        "closed its output".to_string()
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// See the module docs.
pub struct ProcessBackend {
    argv: Vec<String>,
    timeout: Duration,
    running: Option<Running>,
}

impl ProcessBackend {
    pub fn new(argv: Vec<String>, timeout: Duration) -> Result<Self, CommandError> {
        if argv.is_empty() {
            return Err(CommandError::Empty);
        }
        Ok(Self {
            argv,
            timeout,
            running: None,
        })
    }

    pub fn from_command_line(command: &str, timeout: Duration) -> Result<Self, CommandError> {
        Self::new(parse_command(command)?, timeout)
    }

    /// [`Backend::call`] plus the `status` and payload checks.
    pub fn run(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        call_checked(self, request)
    }

    fn exchange(&mut self, line: &str) -> Result<String, BackendError> {
        if self.running.is_none() {
            self.running = Some(Running::spawn(&self.argv)?);
        }
        let running = self.running.as_mut().expect("just started");
        let written = running
            .stdin
            .write_all(line.as_bytes())
            .and_then(|()| running.stdin.flush());
        if written.is_err() {
            let status = running.exit_description();
            self.running = None;
            return Err(BackendError::Exited(status));
        }
        match running.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(message)) => {
                self.running = None;
                Err(BackendError::Protocol(message))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.running = None;
                Err(BackendError::Timeout(self.timeout.as_secs_f64()))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = running.exit_description();
                self.running = None;
                Err(BackendError::Exited(status))
            }
        }
    }
}

impl Backend for ProcessBackend {
    fn call(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let mut line = serde_json::to_string(request).map_err(|e| BackendError::Protocol(e.to_string()))?;
        line.push('\n');
        let reply = self.exchange(&line)?;
        serde_json::from_str(&reply).map_err(|e| {
            let mut excerpt: String = reply.chars().take(120).collect();
            if excerpt.len() < reply.len() {
                excerpt.push_str("...");
            }
            BackendError::Protocol(format!("malformed response {excerpt:?}: {e}"))
        })
    }
}
