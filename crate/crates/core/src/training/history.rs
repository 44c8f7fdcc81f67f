use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const HISTORY_HEADER: &str = "step,L_D,L_G,L_I,R1,R2,R3,R4,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    /// Number of completed iterations.
    pub step: u64,
    pub l_d: f64,
    pub l_g: f64,
    pub l_i: f64,
    pub r: [f64; 4],
    /// Seconds since the run started, or 0 when wall time is not recorded.
    pub seconds: f64,
}

impl TrainRecord {
    pub fn is_finite(&self) -> bool {
        [self.l_d, self.l_g, self.l_i]
            .iter()
            .chain(&self.r)
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<TrainRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrainRecord> {
        self.records.last()
    }

    /// Comma-separated export with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.step, r.l_d, r.l_g, r.l_i, r.r[0], r.r[1], r.r[2], r.r[3], r.seconds
            );
        }
        out
    }
}
