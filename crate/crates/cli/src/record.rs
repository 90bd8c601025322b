use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// One line of JSONL output.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub cmd: String,
    pub params: Value,
    pub result: Value,
    pub version: String,
    pub elapsed_ms: u64,
}

/// Destination of records and tables.
pub struct Sink {
    out: Box<dyn Write>,
    timing: bool,
    label: String,
}

impl Sink {
    pub fn open(path: Option<&Path>, timing: bool) -> CliResult<Self> {
        let (out, label): (Box<dyn Write>, String) = match path {
            Some(p) => {
                let file = File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
                (Box::new(BufWriter::new(file)), p.display().to_string())
            }
            None => (Box::new(BufWriter::new(io::stdout())), "stdout".into()),
        };
        Ok(Sink { out, timing, label })
    }

    pub fn record(
        &mut self,
        cmd: &str,
        params: Value,
        result: Value,
        elapsed: Duration,
    ) -> CliResult<()> {
        let record = RunRecord {
            cmd: cmd.to_string(),
            params,
            result,
            version: rpnm_core::VERSION.to_string(),
            elapsed_ms: if self.timing {
                elapsed.as_millis() as u64
            } else {
                0
            },
        };
        let line = serde_json::to_string(&record).expect("records serialize");
        self.text(&format!("{line}\n"))
    }

    pub fn text(&mut self, text: &str) -> CliResult<()> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(self.label.clone(), e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out
            .flush()
            .map_err(|e| CliError::io(self.label.clone(), e))
    }
}
