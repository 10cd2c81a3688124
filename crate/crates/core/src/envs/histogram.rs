use std::io::Write;

use crate::error::{Error, Result};

/// Equal-width counts over `[lo, hi)`, plus under- and overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo < hi) {
            return Err(Error::InvalidConfig(format!("bad histogram range [{lo}, {hi}) with {bins} bins")));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    /// 50 bins over `[-1.6, 1.6]`.
    pub fn rps() -> Self {
        Self::new(-1.6, 1.6, 50).expect("valid range")
    }

    /// 50 bins over `[-1.4, 1.4]`.
    pub fn choice() -> Self {
        Self::new(-1.4, 1.4, 50).expect("valid range")
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo || x.is_nan() {
            self.underflow += 1;
        } else if x >= self.hi {
            // The top edge belongs to the last bin.
            if x == self.hi {
                *self.counts.last_mut().expect("non-empty") += 1;
            } else {
                self.overflow += 1;
            }
        } else {
            let width = (self.hi - self.lo) / self.counts.len() as f64;
            let i = (((x - self.lo) / width) as usize).min(self.counts.len() - 1);
            self.counts[i] += 1;
        }
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        for x in xs {
            self.add(x);
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// `bins + 1` edges.
    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }

    /// Share of all samples in the contiguous run of bins around the modal
    /// bin whose counts stay at or above `floor` times the peak count.
    pub fn modal_lobe_mass(&self, floor: f64) -> f64 {
        let total = self.total();
        let Some((peak_at, &peak)) = self.counts.iter().enumerate().max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
        else {
            return 0.0;
        };
        if total == 0 || peak == 0 {
            return 0.0;
        }
        let keep = |c: u64| c as f64 >= floor * peak as f64;
        let mut lo = peak_at;
        while lo > 0 && keep(self.counts[lo - 1]) {
            lo -= 1;
        }
        let mut hi = peak_at;
        while hi + 1 < self.counts.len() && keep(self.counts[hi + 1]) {
            hi += 1;
        }
        self.counts[lo..=hi].iter().sum::<u64>() as f64 / total as f64
    }

    /// `bin_lo,bin_hi,count` rows; under- and overflow use infinite edges.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,count")?;
        writeln!(w, "-inf,{},{}", self.lo, self.underflow)?;
        let edges = self.edges();
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", edges[i], edges[i + 1], c)?;
        }
        writeln!(w, "{},inf,{}", self.hi, self.overflow)?;
        Ok(())
    }
}

/// Share of `samples` in the closed interval `[lo, hi]`.
pub fn interval_mass(samples: &[f64], lo: f64, hi: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&x| (lo..=hi).contains(&x)).count() as f64 / samples.len() as f64
}
