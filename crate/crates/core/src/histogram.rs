//! Fixed-width histograms of layer magnetizations on [-1/2, 1/2].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};

pub const RANGE_LO: f64 = -0.5;
pub const RANGE_HI: f64 = 0.5;
pub const FINE_BIN_WIDTH: f64 = 0.005;
pub const DEFAULT_COARSENING: usize = 10;

/// Values this far outside the range are still folded into the edge bins.
const EDGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<usize>,
    pub out_of_range: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalityReport {
    pub maxima: Vec<Peak>,
    /// The two highest maxima, ordered by center.
    pub highest: Vec<Peak>,
    /// Lowest bin between the two highest maxima.
    pub trough: Option<Peak>,
    pub bimodal: bool,
}

impl Histogram {
    pub fn from_values(values: &[f64], bin_width: f64) -> Result<Self> {
        let n_bins = ((RANGE_HI - RANGE_LO) / bin_width).round();
        if !(bin_width > 0.0) || n_bins < 1.0 || ((RANGE_HI - RANGE_LO) / bin_width - n_bins).abs() > 1e-9 {
            return Err(QcaError::InvalidParameter(format!("bin width {bin_width} does not tile [-1/2, 1/2]")));
        }
        let n_bins = n_bins as usize;
        let mut counts = vec![0; n_bins];
        let mut out_of_range = 0;
        for &v in values {
            if !v.is_finite() || v < RANGE_LO - EDGE_SLACK || v > RANGE_HI + EDGE_SLACK {
                out_of_range += 1;
                continue;
            }
            let idx = ((v - RANGE_LO) / bin_width).floor().clamp(0.0, (n_bins - 1) as f64) as usize;
            counts[idx] += 1;
        }
        Ok(Self { lo: RANGE_LO, bin_width, counts, out_of_range })
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Merges groups of `factor` adjacent bins.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_bins() % factor != 0 {
            return Err(QcaError::InvalidParameter(format!(
                "coarsening factor {factor} does not divide {} bins",
                self.n_bins()
            )));
        }
        let counts = self.counts.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(Self { lo: self.lo, bin_width: self.bin_width * factor as f64, counts, out_of_range: self.out_of_range })
    }

    /// Plateaus of equal nonzero counts whose neighbours on both sides are
    /// strictly lower (outside the range counts as zero).
    pub fn local_maxima(&self) -> Vec<Peak> {
        let c = &self.counts;
        let n = c.len();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && c[j + 1] == c[i] {
                j += 1;
            }
            let left = if i == 0 { 0 } else { c[i - 1] };
            let right = if j + 1 == n { 0 } else { c[j + 1] };
            if c[i] > 0 && left < c[i] && right < c[i] {
                let center = 0.5 * (self.bin_center(i) + self.bin_center(j));
                out.push(Peak { center, count: c[i] });
            }
            i = j + 1;
        }
        out
    }

    /// Bimodal means exactly two maxima, one on each side of zero.
    pub fn bimodality(&self) -> BimodalityReport {
        let maxima = self.local_maxima();
        let bimodal = maxima.len() == 2 && maxima[0].center < 0.0 && maxima[1].center > 0.0;
        let mut highest = maxima.clone();
        highest.sort_by(|x, y| y.count.cmp(&x.count).then(x.center.total_cmp(&y.center)));
        highest.truncate(2);
        highest.sort_by(|x, y| x.center.total_cmp(&y.center));
        let trough = if highest.len() == 2 {
            let lo = ((highest[0].center - self.lo) / self.bin_width).floor() as usize;
            let hi = ((highest[1].center - self.lo) / self.bin_width).floor() as usize;
            (lo..=hi).min_by_key(|&i| self.counts[i]).map(|i| Peak { center: self.bin_center(i), count: self.counts[i] })
        } else {
            None
        };
        BimodalityReport { maxima, highest, trough, bimodal }
    }

    /// CSV `bin_center,count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["bin_center", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            wtr.write_record([format!("{:.6}", self.bin_center(i)), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_and_edges() {
        let h = Histogram::from_values(&[-0.5, 0.5, 0.0, -0.0049, 0.7], FINE_BIN_WIDTH).unwrap();
        assert_eq!(h.n_bins(), 200);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[199], 1);
        assert_eq!(h.counts[100], 1);
        assert_eq!(h.counts[99], 1);
        assert_eq!(h.out_of_range, 1);
        assert!((h.bin_center(0) + 0.4975).abs() < 1e-12);
        assert!(Histogram::from_values(&[], 0.3).is_err());
    }

    #[test]
    fn coarsening_preserves_counts() {
        let vals: Vec<f64> = (0..1000).map(|i| -0.5 + i as f64 / 1000.0).collect();
        let h = Histogram::from_values(&vals, FINE_BIN_WIDTH).unwrap();
        let c = h.coarsen(DEFAULT_COARSENING).unwrap();
        assert_eq!(c.n_bins(), 20);
        assert_eq!(c.total(), 1000);
        assert!((c.bin_width - 0.05).abs() < 1e-15);
        assert!(h.coarsen(7).is_err());
    }

    #[test]
    fn plateau_maxima_and_bimodality() {
        let h = Histogram { lo: -0.5, bin_width: 0.1, counts: vec![0, 1, 4, 4, 2, 2, 5, 3, 0, 0], out_of_range: 0 };
        let m = h.local_maxima();
        assert_eq!(m.len(), 2);
        assert!((m[0].center + 0.2).abs() < 1e-12 && m[0].count == 4);
        assert!((m[1].center - 0.15).abs() < 1e-12);
        let r = h.bimodality();
        assert!(r.bimodal);
        assert_eq!(r.trough.unwrap().count, 2);

        let flat = Histogram { lo: -0.5, bin_width: 0.1, counts: vec![0, 0, 0, 0, 7, 7, 0, 0, 0, 0], out_of_range: 0 };
        let r = flat.bimodality();
        assert_eq!(r.maxima.len(), 1);
        assert!(!r.bimodal);
        assert!(r.trough.is_none());
        assert!(r.maxima[0].center.abs() < 1e-12);

        let three = Histogram { lo: -0.5, bin_width: 0.1, counts: vec![3, 0, 6, 1, 2, 1, 5, 0, 0, 0], out_of_range: 0 };
        let r = three.bimodality();
        assert_eq!(r.maxima.len(), 4);
        assert!(!r.bimodal);
        assert_eq!(r.highest.iter().map(|p| p.count).collect::<Vec<_>>(), vec![6, 5]);
        assert_eq!(r.trough.unwrap().count, 1);
    }

    #[test]
    fn csv_layout() {
        let h = Histogram::from_values(&[0.01], 0.25).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin_center,count\n-0.375000,0\n-0.125000,0\n0.125000,1\n0.375000,0\n");
    }
}
