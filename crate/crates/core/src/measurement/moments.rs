use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest total order `i + j` kept.
pub const MAX_ORDER: u32 = 4;

/// Quadrature moments `<X^i Y^j>` for `1 <= i + j <= 4`, DC means and the
/// number of samples they were estimated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MomentSetJson", try_from = "MomentSetJson")]
pub struct MomentSet {
    pub moments: BTreeMap<(u32, u32), f64>,
    pub dc: (f64, f64),
    pub n_samples: u64,
}

#[derive(Serialize, Deserialize)]
struct MomentSetJson {
    moments: BTreeMap<String, f64>,
    dc: [f64; 2],
    n_samples: u64,
}

impl From<MomentSet> for MomentSetJson {
    fn from(m: MomentSet) -> Self {
        Self {
            moments: m.moments.iter().map(|(&(i, j), &v)| (format!("{i}_{j}"), v)).collect(),
            dc: [m.dc.0, m.dc.1],
            n_samples: m.n_samples,
        }
    }
}

impl TryFrom<MomentSetJson> for MomentSet {
    type Error = Error;
    fn try_from(j: MomentSetJson) -> Result<Self> {
        let mut moments = BTreeMap::new();
        for (k, v) in j.moments {
            let parsed = k.split_once('_').and_then(|(a, b)| Some((a.parse::<u32>().ok()?, b.parse::<u32>().ok()?)));
            let (i, jj) = parsed.ok_or_else(|| Error::invalid(format!("bad moment key {k:?}, expected \"i_j\"")))?;
            moments.insert((i, jj), v);
        }
        MomentSet::new(moments, (j.dc[0], j.dc[1]), j.n_samples)
    }
}

/// All `(i, j)` with `1 <= i + j <= 4`, by order then by power of X.
pub fn moment_keys() -> Vec<(u32, u32)> {
    (1..=MAX_ORDER).flat_map(|order| (0..=order).rev().map(move |i| (i, order - i))).collect()
}

impl MomentSet {
    pub fn new(moments: BTreeMap<(u32, u32), f64>, dc: (f64, f64), n_samples: u64) -> Result<Self> {
        for (&(i, j), v) in &moments {
            if i + j == 0 || i + j > MAX_ORDER {
                return Err(Error::invalid(format!("moment order {} outside 1..=4", i + j)));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("moment ({i}, {j}) is not finite")));
            }
        }
        for key in [(2, 0), (0, 2)] {
            if let Some(&v) = moments.get(&key) {
                if v < 0.0 {
                    return Err(Error::invalid(format!("second moment {key:?} is negative")));
                }
            }
        }
        Ok(Self { moments, dc, n_samples })
    }

    /// `<X^i Y^j>`; `(0, 0)` is 1.
    pub fn get(&self, i: u32, j: u32) -> Result<f64> {
        if i + j == 0 {
            return Ok(1.0);
        }
        self.moments.get(&(i, j)).copied().ok_or_else(|| Error::invalid(format!("moment ({i}, {j}) missing")))
    }

    pub fn has_order(&self, order: u32) -> bool {
        (0..=order).all(|i| self.moments.contains_key(&(i, order - i)))
    }

    /// Element-wise mean of several sets with identical keys.
    pub fn mean(sets: &[MomentSet]) -> Result<MomentSet> {
        let first = sets.first().ok_or_else(|| Error::invalid("mean of zero moment sets"))?;
        let k = sets.len() as f64;
        let mut moments = BTreeMap::new();
        for key in first.moments.keys() {
            let mut acc = 0.0;
            for s in sets {
                acc += s.moments.get(key).ok_or_else(|| Error::invalid(format!("moment {key:?} missing in one packet")))?;
            }
            moments.insert(*key, acc / k);
        }
        let dc = (sets.iter().map(|s| s.dc.0).sum::<f64>() / k, sets.iter().map(|s| s.dc.1).sum::<f64>() / k);
        Ok(MomentSet { moments, dc, n_samples: sets.iter().map(|s| s.n_samples).sum() })
    }
}
