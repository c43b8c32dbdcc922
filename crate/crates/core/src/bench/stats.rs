use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BenchError, Branch, EvalRecord};

/// Right/wrong counts per execution branch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub symbolic_right: u64,
    pub symbolic_wrong: u64,
    pub cot_right: u64,
    pub cot_wrong: u64,
}

impl ContingencyTable {
    pub fn new(symbolic_right: u64, symbolic_wrong: u64, cot_right: u64, cot_wrong: u64) -> Self {
        Self {
            symbolic_right,
            symbolic_wrong,
            cot_right,
            cot_wrong,
        }
    }

    pub fn total(&self) -> u64 {
        self.symbolic_right + self.symbolic_wrong + self.cot_right + self.cot_wrong
    }
}

/// Pearson's statistic without continuity correction.
pub fn chi_square(t: &ContingencyTable) -> Result<f64, BenchError> {
    let cells = [[t.symbolic_right, t.symbolic_wrong], [t.cot_right, t.cot_wrong]].map(|r| r.map(|c| c as f64));
    let rows = cells.map(|r| r[0] + r[1]);
    let cols = [cells[0][0] + cells[1][0], cells[0][1] + cells[1][1]];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return Err(BenchError::DegenerateMarginal);
    }
    let n = rows[0] + rows[1];
    let mut stat = 0.0;
    for (i, row) in cells.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            stat += (o - e).powi(2) / e;
        }
    }
    Ok(stat)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchStats {
    pub count: u64,
    pub correct: u64,
    pub accuracy: f64,
}

impl BranchStats {
    fn add(&mut self, correct: bool) {
        self.count += 1;
        self.correct += u64::from(correct);
    }

    fn finish(&mut self) {
        self.accuracy = ratio(self.correct, self.count);
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub symbolic: BranchStats,
    pub fallback: BranchStats,
    pub forward_pass: u64,
    pub backward_pass: u64,
    pub forward_rate: f64,
    pub backward_rate: f64,
    pub contingency: ContingencyTable,
    /// `None` when a marginal is zero.
    pub chi_square: Option<f64>,
    /// Sum of per-problem wall-clock time, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

pub fn summarize(records: &[EvalRecord]) -> Summary {
    let mut symbolic = BranchStats::default();
    let mut fallback = BranchStats::default();
    let (mut fwd, mut bwd) = (0, 0);
    let mut runtime: Option<f64> = None;
    for r in records {
        match r.branch {
            Branch::Symbolic => symbolic.add(r.correct),
            Branch::CotFallback => fallback.add(r.correct),
        }
        fwd += u64::from(r.forward.pass);
        bwd += u64::from(r.backward.pass);
        if let Some(ms) = r.elapsed_ms {
            *runtime.get_or_insert(0.0) += ms;
        }
    }
    symbolic.finish();
    fallback.finish();
    let total = records.len() as u64;
    let correct = symbolic.correct + fallback.correct;
    let contingency = ContingencyTable::new(symbolic.correct, symbolic.count - symbolic.correct, fallback.correct, fallback.count - fallback.correct);
    Summary {
        total,
        correct,
        accuracy: ratio(correct, total),
        symbolic,
        fallback,
        forward_pass: fwd,
        backward_pass: bwd,
        forward_rate: ratio(fwd, total),
        backward_rate: ratio(bwd, total),
        contingency,
        chi_square: chi_square(&contingency).ok(),
        runtime_ms: runtime,
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |x: f64| format!("{:.1}%", 100.0 * x);
        writeln!(f, "{:<18}{}", "problems", self.total)?;
        writeln!(f, "{:<18}{}/{} ({})", "accuracy", self.correct, self.total, pct(self.accuracy))?;
        for (name, b) in [("symbolic", &self.symbolic), ("cot fallback", &self.fallback)] {
            writeln!(f, "{:<18}{} right, {} wrong ({})", name, b.correct, b.count - b.correct, pct(b.accuracy))?;
        }
        writeln!(f, "{:<18}{}/{} ({})", "forward chains", self.forward_pass, self.total, pct(self.forward_rate))?;
        writeln!(f, "{:<18}{}/{} ({})", "backward chains", self.backward_pass, self.total, pct(self.backward_rate))?;
        match self.chi_square {
            Some(c) => writeln!(f, "{:<18}{c:.2}", "chi-square")?,
            None => writeln!(f, "{:<18}n/a", "chi-square")?,
        }
        if let Some(ms) = self.runtime_ms {
            writeln!(f, "{:<18}{ms:.1} ms", "runtime")?;
        }
        Ok(())
    }
}
