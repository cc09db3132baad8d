//! Logged-data replay.
//!
//! A log is a CSV file with header `step,arm,reward`. Arms are 1-based in the
//! file and 0-based everywhere else.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const REPLAY_HEADER: &str = "step,arm,reward";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoggedStep {
    pub step: u64,
    /// 0-based arm index.
    pub arm: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayLog {
    steps: Vec<LoggedStep>,
    num_arms: usize,
}

impl ReplayLog {
    pub fn from_steps(steps: Vec<LoggedStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Data("replay log has no rows".into()));
        }
        if let Some(s) = steps.iter().find(|s| !s.reward.is_finite()) {
            return Err(Error::Data(format!("non-finite reward at step {}", s.step)));
        }
        let num_arms = steps.iter().map(|s| s.arm).max().unwrap_or(0) + 1;
        Ok(Self { steps, num_arms })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(r) => r?,
            None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
        };
        let got: Vec<&str> = header.iter().map(str::trim).collect();
        if got.join(",") != REPLAY_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{REPLAY_HEADER}`, got `{}`", got.join(",")),
            });
        }
        let mut steps = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse { line, message: format!("expected 3 fields, got {}", rec.len()) });
            }
            let field = |j: usize| rec[j].trim();
            let step: u64 = field(0)
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("invalid step `{}`", field(0)) })?;
            let arm: usize = field(1)
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("invalid arm `{}`", field(1)) })?;
            if arm == 0 {
                return Err(Error::Parse { line, message: "arms are 1-based".into() });
            }
            let reward: f64 = field(2)
                .parse()
                .ok()
                .filter(|r: &f64| r.is_finite())
                .ok_or_else(|| Error::Parse { line, message: format!("invalid reward `{}`", field(2)) })?;
            steps.push(LoggedStep { step, arm: arm - 1, reward });
        }
        Self::from_steps(steps)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(REPLAY_HEADER.split(','))?;
        for s in &self.steps {
            w.write_record([s.step.to_string(), (s.arm + 1).to_string(), s.reward.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn steps(&self) -> &[LoggedStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }
}

/// The logged `(arm, reward)` pair at `cursor` (0-based).
pub fn replay_select(log: &ReplayLog, cursor: usize) -> Result<(usize, f64)> {
    log.steps
        .get(cursor)
        .map(|s| (s.arm, s.reward))
        .ok_or(Error::EndOfData)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ArmCounts;

    fn parse(s: &str) -> Result<ReplayLog> {
        ReplayLog::from_reader(s.as_bytes())
    }

    #[test]
    fn direct_read() {
        let log = parse("step,arm,reward\n1,1,0.0\n2,2,1.0\n").unwrap();
        assert_eq!(replay_select(&log, 0).unwrap(), (0, 0.0));
        assert_eq!(replay_select(&log, 1).unwrap(), (1, 1.0));
        assert!(matches!(replay_select(&log, 2), Err(Error::EndOfData)));
        assert_eq!(log.num_arms(), 2);
    }

    #[test]
    fn full_replay_matches_tally() {
        let log = parse("step,arm,reward\n1,1,1\n2,2,0\n3,1,0\n4,1,1\n").unwrap();
        let mut counts = ArmCounts::new(log.num_arms());
        let mut cursor = 0;
        while let Ok((arm, r)) = replay_select(&log, cursor) {
            counts.record(arm, r);
            cursor += 1;
        }
        assert_eq!(counts.counts(), &[3, 1]);
        assert_eq!(counts.sum(0), 2.0);
    }

    #[test]
    fn round_trip() {
        let log = parse("step,arm,reward\n1,2,0.25\n2,1,-1.5\n").unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,arm,reward\n"));
        assert_eq!(parse(&text).unwrap(), log);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse("step,reward,arm\n1,1,0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("step,arm,reward\n1,0,1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("step,arm,reward\n1,1,1\n2,x,1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("step,arm,reward\n1,1,nan\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse("step,arm,reward\n").is_err());
        assert!(parse("").is_err());
    }
}
