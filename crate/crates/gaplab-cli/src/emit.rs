//! Output plumbing: versioned CSV documents, JSON reports, the sidecar log.

use std::fmt::Write as _;
use std::path::Path;

/// A CSV document with a versioned schema comment ahead of the header row.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(schema: &str, version: u32, columns: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# gaplab csv {schema} v{version}");
        let _ = writeln!(buf, "{}", columns.join(","));
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Shorthand building a row from heterogeneous displayable fields.
#[macro_export]
macro_rules! csv_row {
    ($csv:expr, $($field:expr),+ $(,)?) => {
        $csv.row(&[$(format!("{}", $field)),+])
    };
}

pub fn write_output(out: Option<&Path>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Run metadata, including the only timestamp anywhere: data outputs stay
/// byte-reproducible.
pub fn write_log(path: &Path, argv: &[String]) -> std::io::Result<()> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    std::fs::write(path, format!("unix_time={stamp} argv={}\n", argv.join(" ")))
}
