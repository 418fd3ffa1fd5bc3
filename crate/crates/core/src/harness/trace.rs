use std::io::Write;

use crate::dynamics::ParticleEnsemble;
use crate::error::{Error, Result};

use super::RunTrace;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per iteration:
/// `k,t,beta,theta,violation,tolerance,passed,consensus_0..,V`.
/// `V` is empty when the problem has no known solution.
pub fn write_trace_csv<W: Write>(trace: &RunTrace, out: W) -> Result<()> {
    let d = trace.final_ensemble.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["k", "t", "beta", "theta", "violation", "tolerance", "passed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..d).map(|i| format!("consensus_{i}")));
    header.push("V".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            r.t.to_string(),
            r.beta.to_string(),
            r.theta.to_string(),
            r.violation.to_string(),
            r.tolerance.to_string(),
            u8::from(r.passed).to_string(),
        ];
        row.extend(r.consensus.iter().map(|c| c.to_string()));
        row.push(r.variance.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Particle positions, one row per particle: `x_0,..,x_{d-1}`.
pub fn write_positions_csv<W: Write>(ensemble: &ParticleEnsemble, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..ensemble.dim()).map(|i| format!("x_{i}")))
        .map_err(csv_err)?;
    for p in ensemble.particles() {
        w.write_record(p.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
