//! Per-check records and their text and JSON-lines renderings.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    DiscrepancyDocumented,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::DiscrepancyDocumented => "discrepancy-documented",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub problem: String,
    pub operation: String,
    pub verdict: Verdict,
    pub computed: String,
    pub expected: String,
    /// Only filled with `--timing`, so default output stays byte-stable.
    pub wall_time_ms: Option<f64>,
}

impl Record {
    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn text(&self) -> String {
        let mut s = format!(
            "{:<22} {:<10} {:<16} computed: {}\n{:33}expected: {}",
            self.verdict.name(),
            self.problem,
            self.operation,
            self.computed,
            "",
            self.expected
        );
        if let Some(t) = self.wall_time_ms {
            s.push_str(&format!(" ({t:.1} ms)"));
        }
        s
    }
}

#[derive(Debug, Default)]
pub struct Summary {
    pub counts: [usize; 4],
}

impl Summary {
    pub fn add(&mut self, v: Verdict) {
        self.counts[v as usize] += 1;
    }

    pub fn failures(&self) -> usize {
        self.counts[Verdict::Fail as usize]
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [p, fl, d, i] = self.counts;
        write!(f, "{p} pass, {fl} fail, {d} discrepancy-documented, {i} inconclusive")
    }
}
