//! Measurement: GMI, error-rate accumulation, horizontal dB gaps between
//! curves, and scatter/berry-centre diagnostics of the inverse-mapped signal.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{add_noise, check_n0};
use crate::demapper::{Demapper, LlrFrame, QciContext};
use crate::error::{Error, Result};
use crate::geometry::PlanePoint;
use crate::rng::{block_rng, SimRng};

/// Symbols per independently seeded Monte Carlo block.
pub const BLOCK_SYMBOLS: usize = 4096;

/// Minimum sample count accepted by [`gmi_estimate`].
pub const MIN_GMI_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Ber,
    Fer,
    Gmi,
    /// Point-distance evaluations per symbol.
    DistanceEvals,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Ber => "ber",
            MetricKind::Fer => "fer",
            MetricKind::Gmi => "gmi",
            MetricKind::DistanceEvals => "distance_evals",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            MetricKind::Ber,
            MetricKind::Fer,
            MetricKind::Gmi,
            MetricKind::DistanceEvals,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::Metric(format!("unknown metric `{s}`")))
    }
}

/// One measurement row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub psnr_db: f64,
    pub metric: MetricKind,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
    pub errors_counted: u64,
    pub seed: u64,
    pub constellation: String,
    pub demapper: String,
}

pub const CSV_HEADER: &str = "psnr_db,metric,value,stderr,trials,constellation,demapper,seed";

impl SweepRecord {
    /// Error-rate record (BER or FER) from raw counters.
    pub fn error_rate(
        metric: MetricKind,
        psnr_db: f64,
        errors: u64,
        trials: u64,
        seed: u64,
        constellation: &str,
        demapper: &str,
    ) -> Self {
        let mut r = SweepRecord {
            psnr_db,
            metric,
            value: 0.0,
            stderr: 0.0,
            trials,
            errors_counted: errors,
            seed,
            constellation: constellation.to_string(),
            demapper: demapper.to_string(),
        };
        r.refresh_rate();
        r
    }

    fn refresh_rate(&mut self) {
        if self.trials == 0 {
            self.value = 0.0;
            self.stderr = 0.0;
        } else {
            let p = self.errors_counted as f64 / self.trials as f64;
            self.value = p;
            self.stderr = (p * (1.0 - p) / self.trials as f64).sqrt();
        }
    }

    /// Accumulator with no trials yet; the identity for [`SweepRecord::merge`].
    pub fn empty_like(&self) -> Self {
        Self::error_rate(self.metric, self.psnr_db, 0, 0, self.seed, &self.constellation, &self.demapper)
    }

    /// Sums the error counters of two compatible error-rate records.
    pub fn merge(&self, other: &SweepRecord) -> Result<SweepRecord> {
        if !matches!(self.metric, MetricKind::Ber | MetricKind::Fer) {
            return Err(Error::Metric(format!("cannot merge {} records", self.metric)));
        }
        if self.metric != other.metric
            || self.constellation != other.constellation
            || self.demapper != other.demapper
            || self.psnr_db != other.psnr_db
        {
            return Err(Error::Metric(format!(
                "incompatible records: {}/{}/{}@{} vs {}/{}/{}@{}",
                self.metric,
                self.constellation,
                self.demapper,
                self.psnr_db,
                other.metric,
                other.constellation,
                other.demapper,
                other.psnr_db
            )));
        }
        let mut r = self.clone();
        r.trials += other.trials;
        r.errors_counted += other.errors_counted;
        r.refresh_rate();
        Ok(r)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.psnr_db,
            self.metric,
            self.value,
            self.stderr,
            self.trials,
            self.constellation,
            self.demapper,
            self.seed
        )
    }
}

/// Folds a stream of compatible error-rate records into one.
pub fn ber_accumulate<'a>(records: impl IntoIterator<Item = &'a SweepRecord>) -> Result<SweepRecord> {
    let mut it = records.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Metric("no records to accumulate".into()))?;
    it.try_fold(first.clone(), |acc, r| acc.merge(r))
}

pub fn write_records(out: &mut dyn Write, records: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Running mean/variance of per-symbol GMI contributions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GmiAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl GmiAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, o: GmiAccumulator) -> GmiAccumulator {
        GmiAccumulator {
            count: self.count + o.count,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn stderr(&self) -> f64 {
        let n = self.count as f64;
        let var = (self.sum_sq / n - self.mean().powi(2)).max(0.0) * n / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmiEstimate {
    /// Bits per symbol.
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// `log2(1 + exp(-x))` without overflow.
#[inline]
fn log2_1p_exp_neg(x: f64) -> f64 {
    let v = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    v * std::f64::consts::LOG2_E
}

/// Per-symbol BICM GMI term `m − Σ_i log2(1 + exp(−(1−2b_i)·LLR_i))`.
#[inline]
pub fn gmi_term(llrs: &[f64], label: u32) -> f64 {
    let m = llrs.len();
    let mut loss = 0.0;
    for (i, &l) in llrs.iter().enumerate() {
        let b = (label >> (m - 1 - i)) & 1;
        let signed = if b == 0 { l } else { -l };
        loss += log2_1p_exp_neg(signed);
    }
    m as f64 - loss
}

fn gmi_block(demapper: &Demapper, n0: f64, symbols: usize, rng: &mut SimRng) -> Result<GmiAccumulator> {
    let tx = demapper.tx();
    let m = tx.bits_per_symbol();
    let sigma = (n0 / 2.0).sqrt();
    let mut frame = LlrFrame::with_capacity(m);
    let mut acc = GmiAccumulator::default();
    for _ in 0..symbols {
        let k = rng.random_range(0..tx.order());
        let y = add_noise(tx.points()[k], sigma, rng);
        frame.clear();
        demapper.demap(y, n0, &mut frame)?;
        acc.push(gmi_term(&frame.values, tx.labels()[k]));
    }
    Ok(acc)
}

/// Monte Carlo BICM GMI of `demapper` at noise power `n0`.
///
/// Work is split into [`BLOCK_SYMBOLS`]-sized blocks, block `b` drawing from
/// stream `b` of `seed`; blocks run on the current rayon pool and are merged
/// in index order, so the result does not depend on the thread count.
pub fn gmi_estimate(demapper: &Demapper, n0: f64, samples: usize, seed: u64) -> Result<GmiEstimate> {
    if samples < MIN_GMI_SAMPLES {
        return Err(Error::Metric(format!(
            "GMI estimation needs at least {MIN_GMI_SAMPLES} samples, got {samples}"
        )));
    }
    gmi_estimate_unchecked(demapper, n0, samples, seed)
}

pub(crate) fn gmi_estimate_unchecked(
    demapper: &Demapper,
    n0: f64,
    samples: usize,
    seed: u64,
) -> Result<GmiEstimate> {
    check_n0(n0)?;
    let blocks = samples.div_ceil(BLOCK_SYMBOLS);
    let parts: Vec<GmiAccumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SYMBOLS.min(samples - b * BLOCK_SYMBOLS);
            gmi_block(demapper, n0, len, &mut block_rng(seed, b as u64))
        })
        .collect::<Result<_>>()?;
    let acc = parts.into_iter().fold(GmiAccumulator::default(), GmiAccumulator::merge);
    Ok(GmiEstimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        samples: acc.count,
    })
}

/// PSNR at which a sampled curve reaches `target`, by linear interpolation.
///
/// `curve` is `(psnr_db, value)` pairs in increasing PSNR. The target must be
/// crossed exactly once.
pub fn crossing(curve: &[(f64, f64)], target: f64) -> Result<f64> {
    if curve.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::Metric("curve PSNR values must be strictly increasing".into()));
    }
    let mut found = None;
    let mut count = 0;
    for w in curve.windows(2) {
        let (p0, v0) = w[0];
        let (p1, v1) = w[1];
        let lo = v0.min(v1);
        let hi = v0.max(v1);
        if target < lo || target > hi || v0 == v1 {
            continue;
        }
        // A crossing exactly at a shared sample counts once.
        if v0 == target && found.is_some() {
            continue;
        }
        count += 1;
        found.get_or_insert(p0 + (target - v0) * (p1 - p0) / (v1 - v0));
    }
    match (found, count) {
        (Some(p), 1) => Ok(p),
        (Some(_), _) => Err(Error::Metric(format!(
            "non-monotone bracket: curve crosses {target} {count} times"
        ))),
        (None, _) => Err(Error::Metric(format!("target {target} outside curve range"))),
    }
}

/// Horizontal distance `PSNR_a − PSNR_b` (dB) at which both curves reach `target`.
pub fn horizontal_gap(curve_a: &[(f64, f64)], curve_b: &[(f64, f64)], target: f64) -> Result<f64> {
    Ok(crossing(curve_a, target)? - crossing(curve_b, target)?)
}

/// One sample of the inverse-mapped QCI signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRow {
    pub point: usize,
    /// Transmitted symbol's canonical QAM preimage.
    pub x_qam: PlanePoint,
    /// Received sample after the inverse radial map (canonical coordinates).
    pub z: PlanePoint,
}

/// Centroid of the remapped cloud of one constellation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryCenter {
    pub point: usize,
    pub x_qam: PlanePoint,
    pub center: PlanePoint,
    /// Standard error of the centroid, per coordinate.
    pub stderr: PlanePoint,
    pub count: u64,
}

impl BerryCenter {
    /// Centroid offset from the QAM point in units of its standard error.
    pub fn offset_sigmas(&self) -> f64 {
        let d = self.center - self.x_qam;
        let su = d.u / self.stderr.u.max(f64::MIN_POSITIVE);
        let sv = d.v / self.stderr.v.max(f64::MIN_POSITIVE);
        su.hypot(sv)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterDump {
    pub rows: usize,
    pub centers: Vec<BerryCenter>,
}

/// Streams `samples` remapped received samples from uniformly drawn QCI symbols.
pub fn scatter_samples<'a, R: Rng + 'a>(
    ctx: &'a QciContext,
    n0: f64,
    samples: usize,
    mut rng: R,
) -> Result<impl Iterator<Item = ScatterRow> + 'a> {
    check_n0(n0)?;
    let sigma = (n0 / 2.0).sqrt();
    Ok((0..samples).map(move |_| {
        let k = rng.random_range(0..ctx.qci().order());
        let y = add_noise(ctx.qci().points()[k], sigma, &mut rng);
        ScatterRow {
            point: k,
            x_qam: ctx.qam().qam().points()[k],
            z: ctx.remap(y),
        }
    }))
}

/// Writes scatter rows and per-point berry centres as CSV to `sink`.
///
/// Columns: `kind,point,x_qam_u,x_qam_v,z_u,z_v,count`; `kind` is `sample`
/// for each received sample and `center` for each centroid (which carries the
/// sample count of its cloud).
pub fn scatter_dump<R: Rng>(
    ctx: &QciContext,
    n0: f64,
    samples: usize,
    rng: R,
    sink: &mut dyn Write,
) -> Result<ScatterDump> {
    let order = ctx.qci().order();
    let mut sums = vec![(0u64, PlanePoint::ORIGIN, PlanePoint::ORIGIN); order];
    let io = |e| Error::io("scatter output", e);
    writeln!(sink, "kind,point,x_qam_u,x_qam_v,z_u,z_v,count").map_err(io)?;
    let mut rows = 0;
    for r in scatter_samples(ctx, n0, samples, rng)? {
        writeln!(sink, "sample,{},{:?},{:?},{:?},{:?},1", r.point, r.x_qam.u, r.x_qam.v, r.z.u, r.z.v)
            .map_err(io)?;
        let s = &mut sums[r.point];
        s.0 += 1;
        s.1 = s.1 + r.z;
        s.2 = s.2 + PlanePoint::new(r.z.u * r.z.u, r.z.v * r.z.v);
        rows += 1;
    }
    let centers: Vec<BerryCenter> = sums
        .iter()
        .enumerate()
        .map(|(k, &(count, sum, sq))| {
            let n = count.max(1) as f64;
            let mean = (1.0 / n) * sum;
            let var = |s2: f64, m: f64| ((s2 / n - m * m).max(0.0) * n / (n - 1.0).max(1.0) / n).sqrt();
            BerryCenter {
                point: k,
                x_qam: ctx.qam().qam().points()[k],
                center: if count == 0 { PlanePoint::new(f64::NAN, f64::NAN) } else { mean },
                stderr: PlanePoint::new(var(sq.u, mean.u), var(sq.v, mean.v)),
                count,
            }
        })
        .collect();
    for c in &centers {
        writeln!(
            sink,
            "center,{},{:?},{:?},{:?},{:?},{}",
            c.point, c.x_qam.u, c.x_qam.v, c.center.u, c.center.v, c.count
        )
        .map_err(io)?;
    }
    Ok(ScatterDump { rows, centers })
}
