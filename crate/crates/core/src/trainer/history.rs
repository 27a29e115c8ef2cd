use std::io::Write;

use super::EpochRecord;

pub const HISTORY_HEADER: [&str; 6] = ["epoch", "value", "accuracy", "precision", "recall", "f1"];

/// Writes one CSV row per epoch. Floats use the shortest round-trip
/// representation, so identical histories give identical bytes.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_HEADER)?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            r.value.to_string(),
            r.val.accuracy.to_string(),
            r.val.precision.to_string(),
            r.val.recall.to_string(),
            r.val.f1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn history_csv_string(history: &[EpochRecord]) -> String {
    let mut buf = Vec::new();
    write_history_csv(history, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}
