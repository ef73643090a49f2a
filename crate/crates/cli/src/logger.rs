//! Structured JSONL logging to stderr or a file.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use log::{Level, LevelFilter, Log, Metadata, Record};
use serde_json::json;

struct JsonLogger {
    level: LevelFilter,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl Log for JsonLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = json!({
            "ts": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "level": record.level().as_str().to_lowercase(),
            "target": record.target(),
            "msg": record.args().to_string(),
        });
        let mut sink = self.sink.lock().unwrap_or_else(|p| p.into_inner());
        let _ = writeln!(sink, "{line}");
    }

    fn flush(&self) {
        let _ = self.sink.lock().unwrap_or_else(|p| p.into_inner()).flush();
    }
}

pub fn init(level: Level, file: Option<&Path>) -> anyhow::Result<()> {
    let sink: Box<dyn Write + Send> = match file {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stderr()),
    };
    let logger = JsonLogger {
        level: level.to_level_filter(),
        sink: Mutex::new(sink),
    };
    log::set_boxed_logger(Box::new(logger))?;
    log::set_max_level(level.to_level_filter());
    Ok(())
}
