use std::path::Path;

use ccsbo_core::ccs::SimOutcome;

use crate::Error;

/// Reads a decision vector from a CSV file: one row, one column, or several
/// rows concatenated in order. No header.
pub fn read_x(path: &Path) -> Result<Vec<f64>, Error> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut x = Vec::new();
    for rec in r.records() {
        for field in rec?.iter().filter(|f| !f.is_empty()) {
            x.push(field.parse::<f64>().map_err(|e| Error::BadInput(format!("{field:?}: {e}")))?);
        }
    }
    Ok(x)
}

pub const OUTCOME_COLUMNS: [&str; 8] = [
    "day",
    "q_inj",
    "q_co2_prod",
    "q_brine",
    "pressure_psi",
    "m_mobile",
    "m_residual",
    "m_dissolved",
];

pub fn write_outcome<W: std::io::Write>(outcome: &SimOutcome, out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OUTCOME_COLUMNS)?;
    for s in &outcome.steps {
        w.write_record(
            [
                s.day,
                s.q_inj,
                s.q_co2_prod,
                s.q_brine,
                s.pressure,
                s.m_mobile,
                s.m_residual,
                s.m_dissolved,
            ]
            .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}
