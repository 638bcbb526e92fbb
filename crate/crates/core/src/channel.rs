//! AWGN channel under a peak-power constraint.
//!
//! The transmitter is a hard limiter operated at saturation with a
//! peak-normalised constellation, so it never clips and is a no-op here. The
//! operating point is described by the PSNR `1/N0`; the average-power SNR
//! follows as `PSNR − OBO` in dB, where OBO is the constellation's PAPR.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constellation::PowerStats;
use crate::error::{Error, Result};
use crate::geometry::PlanePoint;

const PEAK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    /// Total noise power; each dimension has variance `n0 / 2`.
    pub n0: f64,
    pub peak_power: f64,
    pub psnr_db: f64,
    pub snr_db: f64,
    pub obo_db: f64,
}

impl ChannelSpec {
    /// Operating point for a peak-normalised constellation at `psnr_db`.
    pub fn from_psnr(psnr_db: f64, stats: &PowerStats) -> Result<Self> {
        if !psnr_db.is_finite() {
            return Err(Error::Channel(format!("PSNR must be finite, got {psnr_db}")));
        }
        if (stats.peak_power - 1.0).abs() > PEAK_TOL {
            return Err(Error::Channel(format!(
                "constellation must be peak-normalised (peak power {})",
                stats.peak_power
            )));
        }
        let obo_db = -10.0 * stats.avg_power.log10();
        Ok(ChannelSpec {
            n0: db_to_linear(-psnr_db),
            peak_power: 1.0,
            psnr_db,
            snr_db: psnr_db - obo_db,
            obo_db,
        })
    }

    /// Per-dimension noise standard deviation.
    pub fn sigma(&self) -> f64 {
        (self.n0 / 2.0).sqrt()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Adds one complex Gaussian noise sample of total power `n0` to `x`.
#[inline]
pub fn add_noise<R: Rng + ?Sized>(x: PlanePoint, sigma: f64, rng: &mut R) -> PlanePoint {
    let nu: f64 = rng.sample(StandardNormal);
    let nv: f64 = rng.sample(StandardNormal);
    PlanePoint::new(x.u + sigma * nu, x.v + sigma * nv)
}

/// `y_k = x_k + n_k` with i.i.d. noise of variance `n0/2` per dimension.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[PlanePoint],
    n0: f64,
    rng: &mut R,
) -> Result<Vec<PlanePoint>> {
    check_n0(n0)?;
    let sigma = (n0 / 2.0).sqrt();
    symbols
        .iter()
        .map(|&x| x.check_finite().map(|x| add_noise(x, sigma, rng)))
        .collect()
}

pub(crate) fn check_n0(n0: f64) -> Result<()> {
    if n0 > 0.0 && n0.is_finite() {
        Ok(())
    } else {
        Err(Error::Channel(format!("noise power must be positive and finite, got {n0}")))
    }
}
