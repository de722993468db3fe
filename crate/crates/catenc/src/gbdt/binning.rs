//! Quantile binning of numeric features for histogram split search.

/// Bin index reserved for missing (NaN) values.
pub(crate) const MISSING_BIN: u16 = u16::MAX;

/// A numeric feature reduced to at most `max_bins` ordered bins.
///
/// `cuts` is ascending; a value `v` lands in bin `#{c ∈ cuts : c ≤ v}`, so
/// sending bins `0..=b` left is exactly the rule `v < cuts[b]`.
#[derive(Debug, Clone)]
pub(crate) struct BinnedFeature {
    pub bins: Vec<u16>,
    pub cuts: Vec<f64>,
}

impl BinnedFeature {
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }
}

fn bin_of(cuts: &[f64], v: f64) -> u16 {
    cuts.partition_point(|&c| c <= v) as u16
}

/// Midpoint of `a < b` that satisfies `a < mid ≤ b` even when the two are
/// adjacent floats.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid > a && mid <= b {
        mid
    } else {
        b
    }
}

/// Bins a column: one bin per distinct value when they fit, otherwise cut
/// points at evenly spaced quantiles. NaN goes to [`MISSING_BIN`].
pub(crate) fn bin_feature(values: &[f64], max_bins: usize) -> BinnedFeature {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);

    let mut cuts: Vec<f64> = Vec::new();
    if !sorted.is_empty() {
        let mut distinct: Vec<f64> = Vec::new();
        for &v in &sorted {
            if distinct.last() != Some(&v) {
                distinct.push(v);
            }
        }
        if distinct.len() <= max_bins {
            for pair in distinct.windows(2) {
                cuts.push(midpoint(pair[0], pair[1]));
            }
        } else {
            for i in 1..max_bins {
                let candidate = sorted[i * sorted.len() / max_bins];
                if cuts.last().is_none_or(|&last| candidate > last) && candidate > sorted[0] {
                    cuts.push(candidate);
                }
            }
        }
    }

    let bins = values
        .iter()
        .map(|&v| if v.is_nan() { MISSING_BIN } else { bin_of(&cuts, v) })
        .collect();
    BinnedFeature { bins, cuts }
}
