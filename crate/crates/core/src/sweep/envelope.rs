//! Lower envelope of `g2` against population.

use serde::Serialize;

use super::records::SweepRecord;

/// Logarithmic bins per decade of `n_tot`.
pub const BINS_PER_DECADE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeBin {
    /// Geometric center of the bin.
    pub n_tot_center: f64,
    pub g2_min: f64,
    /// Record attaining the minimum.
    pub index: usize,
}

/// Smallest `g2` in each occupied logarithmic `n_tot` bin, ordered by
/// population. Failed records and non-positive populations are skipped.
pub fn lower_envelope(records: &[SweepRecord], bins_per_decade: usize) -> Vec<EnvelopeBin> {
    let per = bins_per_decade.max(1) as f64;
    let mut bins: std::collections::BTreeMap<i64, EnvelopeBin> = std::collections::BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if !r.is_ok() || !(r.n_tot > 0.0) || !r.g2.is_finite() {
            continue;
        }
        let k = (r.n_tot.log10() * per).floor() as i64;
        let center = 10f64.powf((k as f64 + 0.5) / per);
        let entry = bins.entry(k).or_insert(EnvelopeBin { n_tot_center: center, g2_min: f64::INFINITY, index: i });
        if r.g2 < entry.g2_min {
            entry.g2_min = r.g2;
            entry.index = i;
        }
    }
    bins.into_values().collect()
}
