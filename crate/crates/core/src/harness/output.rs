//! CSV emitters. Floating-point fields carry 17 significant digits.

use std::io::{self, Write};

use super::runner::{AggregateRow, RegretTrace};

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(mut w: impl Write, traces: &[RegretTrace]) -> io::Result<()> {
    writeln!(w, "policy,replication,round,cumulative_regret")?;
    for t in traces {
        for &(round, regret) in &t.points {
            writeln!(w, "{},{},{},{}", t.policy, t.replication, round, fmt_f64(regret))?;
        }
    }
    Ok(())
}

pub fn write_aggregate_csv(mut w: impl Write, rows: &[AggregateRow]) -> io::Result<()> {
    writeln!(w, "policy,round,mean_regret,std_regret,n_reps")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.policy, r.round, fmt_f64(r.mean_regret), fmt_f64(r.std_regret), r.n_reps)?;
    }
    Ok(())
}
