//! Stage reports as CSV blocks or JSON lines.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use scitower::decision::{Answer, Problem};
use scitower::{PointCloud, TowerStage, C64};
use serde_json::{json, Value};

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub enum Report {
    Cloud { command: &'static str, cloud: PointCloud },
    Vector { command: &'static str, stage: TowerStage, x: Vec<C64>, residual: f64, below_threshold: bool },
    Value { command: &'static str, stage: TowerStage, value: f64 },
    Decision { problem: Problem, indices: Vec<u64>, answer: Answer, exact: Option<Answer> },
}

impl Report {
    pub fn cloud(command: &'static str, cloud: PointCloud) -> Self {
        Report::Cloud { command, cloud }
    }

    pub fn vector(command: &'static str, stage: TowerStage, x: Vec<C64>, residual: f64, below_threshold: bool) -> Self {
        Report::Vector { command, stage, x, residual, below_threshold }
    }

    pub fn value(command: &'static str, stage: TowerStage, value: f64) -> Self {
        Report::Value { command, stage, value }
    }

    pub fn decision(problem: Problem, indices: Vec<u64>, answer: Answer, exact: Option<Answer>) -> Self {
        Report::Decision { problem, indices, answer, exact }
    }

    fn flags(&self) -> &[String] {
        match self {
            Report::Cloud { cloud, .. } => &cloud.stage.flags,
            Report::Vector { stage, .. } | Report::Value { stage, .. } => &stage.flags,
            Report::Decision { .. } => &[],
        }
    }

    fn to_json(&self) -> Value {
        let pairs = |v: &[C64]| v.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>();
        match self {
            Report::Cloud { command, cloud } => {
                json!({"command": command, "stage": cloud.stage, "points": pairs(&cloud.points), "flags": cloud.stage.flags})
            }
            Report::Vector { command, stage, x, residual, below_threshold } => json!({
                "command": command,
                "stage": stage,
                "vector": pairs(x),
                "residual": if residual.is_finite() { json!(residual) } else { Value::Null },
                "below_threshold": below_threshold,
                "flags": stage.flags,
            }),
            Report::Value { command, stage, value } => {
                json!({"command": command, "stage": stage, "value": value, "flags": stage.flags})
            }
            Report::Decision { problem, indices, answer, exact } => json!({
                "command": "decide",
                "stage": {"tower": problem.to_string(), "indices": indices},
                "answer": answer.to_string(),
                "exact": exact.map(|a| a.to_string()),
                "flags": [],
            }),
        }
    }

    fn to_csv(&self) -> String {
        let header = |command: &str, stage: &TowerStage| {
            let idx: Vec<String> = stage.indices.iter().map(u64::to_string).collect();
            let mut s = format!("# {command} tower={} indices={}", stage.tower, idx.join(","));
            if !stage.thresholds.is_empty() {
                let t: Vec<String> = stage.thresholds.iter().map(f64::to_string).collect();
                let _ = write!(s, " thresholds={}", t.join(","));
            }
            for f in &stage.flags {
                let _ = write!(s, " flag=\"{f}\"");
            }
            s.push('\n');
            s
        };
        match self {
            Report::Cloud { command, cloud } => header(command, &cloud.stage) + &cloud.to_csv(),
            Report::Vector { command, stage, x, residual, below_threshold } => {
                let mut s = header(command, stage);
                if residual.is_finite() {
                    let _ = writeln!(s, "# residual={residual} below_threshold={below_threshold}");
                }
                s.push_str("index,re,im\n");
                for (i, z) in x.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{}", i + 1, z.re, z.im);
                }
                s
            }
            Report::Value { command, stage, value } => header(command, stage) + &format!("value\n{value}\n"),
            Report::Decision { problem, indices, answer, exact } => {
                let idx: Vec<String> = indices.iter().map(u64::to_string).collect();
                let exact = exact.map(|a| a.to_string()).unwrap_or_default();
                format!("# decide tower={problem} indices={}\nanswer,exact\n{answer},{exact}\n", idx.join(","))
            }
        }
    }
}

pub struct Sink {
    format: Format,
    path: Option<PathBuf>,
    buf: Vec<u8>,
    flagged: bool,
}

impl Sink {
    pub fn new(format: Format, path: Option<PathBuf>) -> Self {
        Self { format, path, buf: Vec::new(), flagged: false }
    }

    pub fn emit(&mut self, r: Report) -> Result<()> {
        self.flagged |= !r.flags().is_empty();
        let text = match self.format {
            Format::Json => r.to_json().to_string() + "\n",
            Format::Csv => r.to_csv(),
        };
        match &self.path {
            Some(_) => self.buf.extend_from_slice(text.as_bytes()),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
            }
        }
        Ok(())
    }

    pub fn finish(&mut self) -> Result<()> {
        if let Some(p) = &self.path {
            std::fs::write(p, &self.buf).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }

    pub fn flagged(&self) -> bool {
        self.flagged
    }
}
