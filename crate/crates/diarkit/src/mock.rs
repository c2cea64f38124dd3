//! The stdio side of the fixture-driven mock backend.

use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use diarkit_core::fixture::Fixture;
use diarkit_core::protocol::{BackendRequest, BackendResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeOutcome {
    /// Input closed.
    EndOfInput,
    /// A fixture entry asked the process to exit without answering.
    ExitRequested,
}

/// Answers one response line per request line until input ends.
pub fn serve_fixture<R: BufRead, W: Write>(fixture: &Fixture, input: R, mut output: W) -> io::Result<ServeOutcome> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<BackendRequest>(&line) {
            Err(e) => BackendResponse::error(format!("malformed request: {e}")),
            Ok(request) => match fixture.lookup(&request) {
                None => fixture.respond(&request),
                Some(entry) => {
                    if let Some(ms) = entry.delay_ms {
                        thread::sleep(Duration::from_millis(ms));
                    }
                    if entry.exit {
                        return Ok(ServeOutcome::ExitRequested);
                    }
                    entry.response.clone()
                }
            },
        };
        let mut text = serde_json::to_string(&response).map_err(io::Error::other)?;
        text.push('\n');
        output.write_all(text.as_bytes())?;
        output.flush()?;
    }
    Ok(ServeOutcome::EndOfInput)
}
