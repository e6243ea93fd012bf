use crate::error::{Error, Result};
use crate::signal::{average_active_energy, Dataset, Waveform};

use super::{Assignment, AssignmentTable};

const TIE_DB: f64 = 1e-12;

fn loudness(w: &Waveform, frame_len: usize, margin_db: f64) -> Result<Option<f64>> {
    match average_active_energy(w, frame_len, margin_db) {
        Ok(e) => Ok(Some(e)),
        Err(Error::NoActiveFrames) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Louder source (active-frame energy) on channel 0. Fixed for the whole run.
pub fn energy_assignment(dataset: &Dataset, frame_len: usize, silence_margin_db: f64) -> Result<AssignmentTable> {
    if dataset.num_sources() != 2 {
        return Err(Error::InvalidConfig(format!(
            "energy-based labels need 2 sources per mixture, got {}",
            dataset.num_sources()
        )));
    }
    let entries = dataset
        .mixtures
        .iter()
        .map(|m| {
            let (a, b) = (&m.sources[0], &m.sources[1]);
            let (ea, eb) = match (loudness(a, frame_len, silence_margin_db)?, loudness(b, frame_len, silence_margin_db)?) {
                (Some(x), Some(y)) => (x, y),
                // a silent source: rank by total power instead
                _ => (a.power(), b.power()),
            };
            let swapped = eb > ea && (eb - ea).abs() > TIE_DB;
            Ok(if swapped { Assignment::swap2() } else { Assignment::identity(2) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AssignmentTable::new(entries))
}
