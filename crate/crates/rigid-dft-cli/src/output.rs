use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    program: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

/// Floats with 17 significant digits; round-trips every f64.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, command: &str, config: &RunConfig) -> Result<String, CliError> {
        let cfg = serde_json::to_string(config).map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut s = format!("# rigid-dft {VERSION} {command} config={cfg}\n");
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        Ok(s)
    }
}

fn write(path: &str, text: &str) -> Result<(), CliError> {
    if let Some(dir) = Path::new(path).parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{path}: {e}")))
}

/// JSON goes to `<out>.json` (stdout without `out`), the table to `<out>.csv`.
pub fn emit<T: Serialize>(command: &str, config: &RunConfig, result: &T, table: Option<&Table>) -> Result<(), CliError> {
    let doc = Document { program: "rigid-dft", version: VERSION, command, config, result };
    let mut json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    match &config.out {
        None => print!("{json}"),
        Some(out) => {
            write(&format!("{out}.json"), &json)?;
            if let Some(t) = table {
                write(&format!("{out}.csv"), &t.render(command, config)?)?;
            }
        }
    }
    Ok(())
}
