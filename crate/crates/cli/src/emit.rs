//! Artifact layout: `<out>/<subcommand>/{manifest.json, *.csv, *.gp, *.json}`.

use crate::config::RunConfig;
use crate::error::CliError;
use msqg::harness::config_hash;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Emitter, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(dir.display().to_string(), e.to_string()))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.dir.join(name);
        std::fs::write(&p, contents)
            .map_err(|e| CliError::io(p.display().to_string(), e.to_string()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &impl serde::Serialize) -> Result<(), CliError> {
        let s =
            serde_json::to_string_pretty(v).map_err(|e| CliError::config(None, e.to_string()))?;
        self.write(name, &(s + "\n"))
    }

    /// Writes `manifest.json` last so it lists every other file.
    pub fn finish(
        mut self,
        subcommand: &str,
        cfg: &RunConfig,
        pass: bool,
        guard_events: Value,
        summary: Value,
    ) -> Result<PathBuf, CliError> {
        let manifest = json!({
            "subcommand": subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": msqg::VERSION,
            "config_hash": config_hash(cfg),
            "seed_root": cfg.seed_root,
            "replicas": cfg.replicas,
            "pass": pass,
            "files": self.files,
            "guard_events": guard_events,
            "summary": summary,
            "config": cfg,
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir.join("manifest.json"))
    }
}

/// CSV with a header line; fields are written with shortest round-trip formatting.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv {
            buf: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let _ = write!(self.buf, "{f}");
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// gnuplot script for the real part of every recorded observable of replica 0.
pub fn series_plot(
    csv: &str,
    id_col: usize,
    t_col: usize,
    re_col: usize,
    count: usize,
    ylabel: &str,
) -> String {
    format!(
        "set datafile separator ','\n\
         set xlabel 't'\n\
         set ylabel '{ylabel}'\n\
         set key outside\n\
         plot for [o=0:{last}] '{csv}' every ::1 using {t}:((column(1)==0 && column({id})==o) ? column({re}) : NaN) \\\n  with lines title sprintf('observable %d', o)\n",
        last = count.saturating_sub(1),
        t = t_col,
        id = id_col,
        re = re_col,
    )
}
