//! Soft demapping: bit LLRs from received samples.
//!
//! Sign convention: a positive LLR means bit value 0 is more likely. Noise is
//! complex Gaussian with variance `n0/2` per dimension, so the likelihood
//! kernel is `exp(-‖y - x‖² / n0)` in one or two dimensions alike.
//!
//! Every path counts the point-distance evaluations it spends in
//! [`LlrFrame::distance_evals`]: `M` per symbol for a full 2D search and `2√M`
//! for the per-axis PAM decomposition.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{add_noise, check_n0};
use crate::constellation::{qam_side, Constellation};
use crate::error::{Error, Result};
use crate::geometry::{inverse_unchecked, PlanePoint};

/// LLR magnitude limit in natural-log units.
pub const LLR_CLAMP: f64 = 60.0;

/// Minimum Monte Carlo size for [`estimate_affine_compensation`].
pub const MIN_COMPENSATION_SAMPLES: usize = 10_000;

/// LLRs for a block of symbols plus the work spent producing them.
#[derive(Debug, Clone, Default)]
pub struct LlrFrame {
    /// `m` values per symbol, symbols back to back.
    pub values: Vec<f64>,
    pub distance_evals: u64,
    /// Radial inverse-map evaluations (LCD and remapped paths only).
    pub map_evals: u64,
    scratch: Vec<f64>,
}

impl LlrFrame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(values: usize) -> Self {
        LlrFrame {
            values: Vec::with_capacity(values),
            ..Self::default()
        }
    }

    /// Empties the frame and resets the counters, keeping allocations.
    pub fn clear(&mut self) {
        self.values.clear();
        self.distance_evals = 0;
        self.map_evals = 0;
    }
}

/// Gain/offset applied to remapped samples before demapping: `z ← alpha·z + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineCompensation {
    pub alpha: f64,
    pub beta: PlanePoint,
}

impl AffineCompensation {
    pub const IDENTITY: AffineCompensation = AffineCompensation {
        alpha: 1.0,
        beta: PlanePoint::ORIGIN,
    };

    pub fn new(alpha: f64, beta: PlanePoint) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !beta.is_finite() {
            return Err(Error::Demapper(format!(
                "compensation needs finite alpha > 0 and finite beta, got {alpha}, {beta:?}"
            )));
        }
        Ok(AffineCompensation { alpha, beta })
    }

    #[inline]
    pub fn apply(&self, z: PlanePoint) -> PlanePoint {
        self.alpha * z + self.beta
    }
}

#[inline]
fn clamp(llr: f64) -> f64 {
    llr.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// Log-MAP bit LLRs from per-point log-likelihoods `metric[k] = -d_k²/n0`.
///
/// Terms are normalised by the global maximum, which always lands in one of
/// the two subsets, so each denominator stays ≥ 1 or the ratio saturates the clamp.
fn logmap_llrs(metric: &[f64], labels: &[u32], bits: usize, out: &mut Vec<f64>) {
    let max = metric.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sums = [[0.0f64; 32]; 2];
    for (&d, &label) in metric.iter().zip(labels) {
        let e = (d - max).exp();
        if e == 0.0 {
            continue;
        }
        for i in 0..bits {
            let b = ((label >> (bits - 1 - i)) & 1) as usize;
            sums[b][i] += e;
        }
    }
    for i in 0..bits {
        out.push(clamp(sums[0][i].ln() - sums[1][i].ln()));
    }
}

fn maxlog_llrs(dist: &[f64], labels: &[u32], bits: usize, n0: f64, out: &mut Vec<f64>) {
    let mut mins = [[f64::INFINITY; 32]; 2];
    for (&d, &label) in dist.iter().zip(labels) {
        for i in 0..bits {
            let b = ((label >> (bits - 1 - i)) & 1) as usize;
            if d < mins[b][i] {
                mins[b][i] = d;
            }
        }
    }
    for i in 0..bits {
        out.push(clamp((mins[1][i] - mins[0][i]) / n0));
    }
}

fn check_2d(c: &Constellation) -> Result<()> {
    if c.dim() != 2 && c.dim() != 1 {
        return Err(Error::Demapper("unsupported dimension".into()));
    }
    Ok(())
}

/// Exact log-MAP LLRs over all `M` points.
pub fn llr_exact_2d(y: PlanePoint, c: &Constellation, n0: f64, frame: &mut LlrFrame) -> Result<()> {
    check_n0(n0)?;
    check_2d(c)?;
    exact_unchecked(y, c, n0, frame);
    Ok(())
}

#[inline]
fn exact_unchecked(y: PlanePoint, c: &Constellation, n0: f64, frame: &mut LlrFrame) {
    let inv = 1.0 / n0;
    frame.scratch.clear();
    frame
        .scratch
        .extend(c.points().iter().map(|x| -y.dist_sqr(x) * inv));
    logmap_llrs(&frame.scratch, c.labels(), c.bits_per_symbol(), &mut frame.values);
    frame.distance_evals += c.order() as u64;
}

/// Max-log approximation: `(min_{χ1} d² − min_{χ0} d²) / n0`.
pub fn llr_maxlog_2d(y: PlanePoint, c: &Constellation, n0: f64, frame: &mut LlrFrame) -> Result<()> {
    check_n0(n0)?;
    check_2d(c)?;
    frame.scratch.clear();
    frame.scratch.extend(c.points().iter().map(|x| y.dist_sqr(x)));
    maxlog_llrs(&frame.scratch, c.labels(), c.bits_per_symbol(), n0, &mut frame.values);
    frame.distance_evals += c.order() as u64;
    Ok(())
}

/// Exact LLRs of a 1D constellation for a single real sample.
pub fn llr_pam(y: f64, pam: &Constellation, n0: f64, frame: &mut LlrFrame) -> Result<()> {
    check_n0(n0)?;
    if pam.dim() != 1 {
        return Err(Error::Demapper(format!(
            "PAM demapping needs a 1D constellation, got {}D",
            pam.dim()
        )));
    }
    pam_unchecked(y, pam, n0, frame);
    Ok(())
}

#[inline]
fn pam_unchecked(y: f64, pam: &Constellation, n0: f64, frame: &mut LlrFrame) {
    let inv = 1.0 / n0;
    frame.scratch.clear();
    frame.scratch.extend(pam.points().iter().map(|x| {
        let d = y - x.u;
        -d * d * inv
    }));
    logmap_llrs(&frame.scratch, pam.labels(), pam.bits_per_symbol(), &mut frame.values);
    frame.distance_evals += pam.order() as u64;
}

/// A square QAM together with the PAM it factors into.
///
/// Both are held at a common `scale` relative to the canonical `[-1, 1]` grid.
#[derive(Debug, Clone)]
pub struct QamContext {
    qam: Constellation,
    pam: Constellation,
}

impl QamContext {
    /// Canonical `order`-QAM on `[-1, 1]²`.
    pub fn new(order: usize) -> Result<Self> {
        let side = qam_side(order)?;
        Ok(QamContext {
            qam: Constellation::qam(order)?,
            pam: Constellation::pam(side, true)?,
        })
    }

    /// Peak-normalised `order`-QAM.
    pub fn normalized(order: usize) -> Result<Self> {
        let c = Self::new(order)?;
        let s = c.qam.normalize_peak()?.scale();
        Ok(c.scaled(s))
    }

    pub fn scaled(&self, s: f64) -> Self {
        QamContext {
            qam: self.qam.scaled(s),
            pam: self.pam.scaled(s),
        }
    }

    pub fn qam(&self) -> &Constellation {
        &self.qam
    }

    pub fn pam(&self) -> &Constellation {
        &self.pam
    }
}

/// QAM LLRs from two independent PAM demappings: I bits first, then Q bits.
pub fn llr_qam_decomposed(
    y: PlanePoint,
    ctx: &QamContext,
    n0: f64,
    frame: &mut LlrFrame,
) -> Result<()> {
    check_n0(n0)?;
    decomposed_unchecked(y, ctx, n0, frame);
    Ok(())
}

#[inline]
fn decomposed_unchecked(y: PlanePoint, ctx: &QamContext, n0: f64, frame: &mut LlrFrame) {
    pam_unchecked(y.u, &ctx.pam, n0, frame);
    pam_unchecked(y.v, &ctx.pam, n0, frame);
}

/// QCI transmit constellation plus the canonical QAM it was mapped from.
#[derive(Debug, Clone)]
pub struct QciContext {
    qci: Constellation,
    qam: QamContext,
    peak_scale: f64,
}

impl QciContext {
    /// Peak-normalised `order`-QCI with its canonical QAM preimage.
    pub fn new(order: usize) -> Result<Self> {
        let qci = Constellation::qci(order)?.normalize_peak()?;
        Ok(QciContext {
            peak_scale: qci.scale(),
            qci,
            qam: QamContext::new(order)?,
        })
    }

    /// The transmitted (peak-normalised) QCI constellation.
    pub fn qci(&self) -> &Constellation {
        &self.qci
    }

    /// Canonical QAM preimage; point `k` here maps onto point `k` of [`Self::qci`].
    pub fn qam(&self) -> &QamContext {
        &self.qam
    }

    /// Factor from canonical coordinates to transmit coordinates.
    pub fn peak_scale(&self) -> f64 {
        self.peak_scale
    }

    /// Received sample pulled back into canonical square coordinates.
    #[inline]
    pub fn remap(&self, y: PlanePoint) -> PlanePoint {
        inverse_unchecked((1.0 / self.peak_scale) * y)
    }

    /// Noise power expressed in canonical coordinates.
    #[inline]
    pub fn canonical_n0(&self, n0: f64) -> f64 {
        n0 / (self.peak_scale * self.peak_scale)
    }
}

/// Low-complexity QCI demapping: inverse radial map, optional affine
/// correction, then per-axis PAM LLRs under the (mismatched) Gaussian model.
pub fn llr_qci_lcd(
    y: PlanePoint,
    ctx: &QciContext,
    n0: f64,
    comp: Option<&AffineCompensation>,
    frame: &mut LlrFrame,
) -> Result<()> {
    check_n0(n0)?;
    y.check_finite()?;
    lcd_unchecked(y, ctx, n0, comp, frame);
    Ok(())
}

#[inline]
fn lcd_unchecked(
    y: PlanePoint,
    ctx: &QciContext,
    n0: f64,
    comp: Option<&AffineCompensation>,
    frame: &mut LlrFrame,
) {
    let mut z = ctx.remap(y);
    if let Some(c) = comp {
        z = c.apply(z);
    }
    frame.map_evals += 1;
    decomposed_unchecked(z, &ctx.qam, ctx.canonical_n0(n0), frame);
}

/// Inverse radial map followed by the full 2D log-MAP over the canonical QAM.
pub fn llr_qci_remapped_2d(
    y: PlanePoint,
    ctx: &QciContext,
    n0: f64,
    frame: &mut LlrFrame,
) -> Result<()> {
    check_n0(n0)?;
    y.check_finite()?;
    remapped_unchecked(y, ctx, n0, frame);
    Ok(())
}

#[inline]
fn remapped_unchecked(y: PlanePoint, ctx: &QciContext, n0: f64, frame: &mut LlrFrame) {
    let z = ctx.remap(y);
    frame.map_evals += 1;
    exact_unchecked(z, ctx.qam.qam(), ctx.canonical_n0(n0), frame);
}

/// Affine correction `alpha·z + beta` for remapped samples `z = f⁻¹(y)`.
///
/// Chosen so the effective noise `alpha·z + beta − x` is zero-mean and
/// uncorrelated with the QAM preimage `x`: `alpha = Σ‖x‖² / Σ⟨z, x⟩` over
/// uniformly drawn QCI symbols, `beta` the mean of `x − alpha·z`. Gives
/// `alpha > 1` at finite noise (the inverse map compresses noise).
pub fn estimate_affine_compensation<R: Rng + ?Sized>(
    ctx: &QciContext,
    n0: f64,
    samples: usize,
    rng: &mut R,
) -> Result<AffineCompensation> {
    check_n0(n0)?;
    if samples < MIN_COMPENSATION_SAMPLES {
        return Err(Error::Demapper(format!(
            "affine compensation needs at least {MIN_COMPENSATION_SAMPLES} samples, got {samples}"
        )));
    }
    let sigma = (n0 / 2.0).sqrt();
    let tx = ctx.qci.points();
    let pre = ctx.qam.qam.points();
    let mut pairs = Vec::with_capacity(samples);
    let (mut zx, mut xx) = (0.0, 0.0);
    for _ in 0..samples {
        let k = rng.random_range(0..tx.len());
        let z = ctx.remap(add_noise(tx[k], sigma, rng));
        zx += z.dot(&pre[k]);
        xx += pre[k].norm_sqr();
        pairs.push((k, z));
    }
    // Residual made uncorrelated with the transmitted point, like real channel noise.
    // The least-squares fit zx/zz shrinks z and costs GMI.
    let alpha = xx / zx;
    let mut beta = PlanePoint::ORIGIN;
    for (k, z) in pairs {
        beta = beta + (pre[k] - alpha * z);
    }
    AffineCompensation::new(alpha, (1.0 / samples as f64) * beta)
}

/// Demapper selector used by the harness and bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemapperKind {
    Exact2d,
    MaxLog2d,
    QamDecomposed,
    QciLcd,
    QciLcdCompensated,
    QciRemapped2d,
}

impl DemapperKind {
    pub const ALL: [DemapperKind; 6] = [
        DemapperKind::Exact2d,
        DemapperKind::MaxLog2d,
        DemapperKind::QamDecomposed,
        DemapperKind::QciLcd,
        DemapperKind::QciLcdCompensated,
        DemapperKind::QciRemapped2d,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DemapperKind::Exact2d => "exact2d",
            DemapperKind::MaxLog2d => "maxlog2d",
            DemapperKind::QamDecomposed => "qam_decomposed",
            DemapperKind::QciLcd => "qci_lcd",
            DemapperKind::QciLcdCompensated => "qci_lcd_compensated",
            DemapperKind::QciRemapped2d => "qci_remapped_2d",
        }
    }

    pub fn needs_compensation(&self) -> bool {
        *self == DemapperKind::QciLcdCompensated
    }
}

impl fmt::Display for DemapperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DemapperKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DemapperKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown demapper `{s}`")))
    }
}

/// What is transmitted, with whatever structure the low-complexity paths need.
#[derive(Debug, Clone)]
pub enum Modulation {
    /// Any peak-normalised constellation (PAM, file-loaded, ...).
    Generic(Constellation),
    /// Peak-normalised square QAM.
    Qam(QamContext),
    Qci(QciContext),
}

impl Modulation {
    /// The peak-normalised transmit constellation.
    pub fn tx(&self) -> &Constellation {
        match self {
            Modulation::Generic(c) => c,
            Modulation::Qam(q) => q.qam(),
            Modulation::Qci(q) => q.qci(),
        }
    }
}

/// A demapping path bound to a modulation.
#[derive(Debug, Clone)]
pub struct Demapper {
    kind: DemapperKind,
    modulation: Modulation,
    comp: Option<AffineCompensation>,
}

impl Demapper {
    pub fn new(kind: DemapperKind, modulation: Modulation) -> Result<Self> {
        let ok = match kind {
            DemapperKind::Exact2d | DemapperKind::MaxLog2d => true,
            DemapperKind::QamDecomposed => matches!(modulation, Modulation::Qam(_)),
            DemapperKind::QciLcd
            | DemapperKind::QciLcdCompensated
            | DemapperKind::QciRemapped2d => matches!(modulation, Modulation::Qci(_)),
        };
        if !ok {
            return Err(Error::Demapper(format!(
                "demapper {kind} does not apply to constellation {}",
                modulation.tx().name()
            )));
        }
        Ok(Demapper {
            kind,
            modulation,
            comp: None,
        })
    }

    pub fn kind(&self) -> DemapperKind {
        self.kind
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    pub fn tx(&self) -> &Constellation {
        self.modulation.tx()
    }

    pub fn compensation(&self) -> Option<&AffineCompensation> {
        self.comp.as_ref()
    }

    pub fn set_compensation(&mut self, comp: Option<AffineCompensation>) {
        self.comp = comp;
    }

    pub fn qci_context(&self) -> Option<&QciContext> {
        match &self.modulation {
            Modulation::Qci(q) => Some(q),
            _ => None,
        }
    }

    /// Appends the LLRs of one received sample to `frame`.
    ///
    /// The compensated path falls back to the identity when no compensation is set.
    #[inline]
    pub fn demap(&self, y: PlanePoint, n0: f64, frame: &mut LlrFrame) -> Result<()> {
        check_n0(n0)?;
        y.check_finite()?;
        match (&self.modulation, self.kind) {
            (m, DemapperKind::Exact2d) => exact_unchecked(y, m.tx(), n0, frame),
            (m, DemapperKind::MaxLog2d) => llr_maxlog_2d(y, m.tx(), n0, frame)?,
            (Modulation::Qam(q), DemapperKind::QamDecomposed) => {
                decomposed_unchecked(y, q, n0, frame)
            }
            (Modulation::Qci(q), DemapperKind::QciLcd) => lcd_unchecked(y, q, n0, None, frame),
            (Modulation::Qci(q), DemapperKind::QciLcdCompensated) => {
                lcd_unchecked(y, q, n0, self.comp.as_ref(), frame)
            }
            (Modulation::Qci(q), DemapperKind::QciRemapped2d) => {
                remapped_unchecked(y, q, n0, frame)
            }
            _ => unreachable!("validated in Demapper::new"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::transmit;
    use crate::geometry::radial_inverse;
    use crate::rng::block_rng;
    use proptest::prelude::*;
    use rand::Rng;

    /// Direct evaluation of the bit-LLR definition: two plain loops, no shared code.
    fn brute_llrs(y: PlanePoint, c: &Constellation, n0: f64) -> Vec<f64> {
        let m = c.bits_per_symbol();
        (0..m)
            .map(|i| {
                let mut num = 0.0;
                let mut den = 0.0;
                for (k, x) in c.points().iter().enumerate() {
                    let du = y.u - x.u;
                    let dv = y.v - x.v;
                    let p = (-(du * du + dv * dv) / n0).exp();
                    let bit = (c.labels()[k] >> (m - 1 - i)) & 1;
                    if bit == 0 {
                        num += p;
                    } else {
                        den += p;
                    }
                }
                (num / den).ln().clamp(-LLR_CLAMP, LLR_CLAMP)
            })
            .collect()
    }

    fn antipodal() -> Constellation {
        Constellation::new(
            "bpsk",
            vec![PlanePoint::new(1.0, 0.0), PlanePoint::new(-1.0, 0.0)],
            vec![0, 1],
            2,
        )
        .unwrap()
    }

    fn one(f: impl FnOnce(&mut LlrFrame) -> Result<()>) -> LlrFrame {
        let mut frame = LlrFrame::new();
        f(&mut frame).unwrap();
        frame
    }

    #[test]
    fn antipodal_closed_form() {
        let c = antipodal();
        let y = PlanePoint::new(0.5, 0.0);
        let exact = one(|f| llr_exact_2d(y, &c, 1.0, f));
        assert!((exact.values[0] - 2.0).abs() < 1e-12);
        let maxlog = one(|f| llr_maxlog_2d(y, &c, 1.0, f));
        assert!((maxlog.values[0] - 2.0).abs() < 1e-12);
        let pam2 = Constellation::pam(2, true).unwrap();
        let pam = one(|f| llr_pam(0.5, &pam2, 1.0, f));
        assert!((pam.values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_point_gives_zero() {
        let q = Constellation::qam(16).unwrap();
        let f = one(|f| llr_exact_2d(PlanePoint::ORIGIN, &q, 0.3, f));
        // First I bit and first Q bit split the plane through the origin.
        assert!(f.values[0].abs() < 1e-12);
        assert!(f.values[2].abs() < 1e-12);
        let pam4 = Constellation::pam(4, true).unwrap();
        let f = one(|f| llr_pam(0.0, &pam4, 0.7, f));
        assert!(f.values[0].abs() < 1e-12);
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut rng = block_rng(11, 0);
        for order in [16, 64] {
            let c = Constellation::qam(order).unwrap();
            for _ in 0..300 {
                let y = PlanePoint::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let n0 = 10f64.powf(rng.random_range(-1.5..0.5));
                let f = one(|f| llr_exact_2d(y, &c, n0, f));
                for (a, b) in f.values.iter().zip(brute_llrs(y, &c, n0)) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn pam_matches_brute_force() {
        let pam = Constellation::pam(4, true).unwrap();
        let mut rng = block_rng(12, 0);
        for _ in 0..500 {
            let y = rng.random_range(-2.0..2.0);
            let n0 = 10f64.powf(rng.random_range(-1.5..0.5));
            let f = one(|f| llr_pam(y, &pam, n0, f));
            let b = brute_llrs(PlanePoint::new(y, 0.0), &pam, n0);
            for (a, b) in f.values.iter().zip(b) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert!(llr_pam(0.0, &Constellation::qam(16).unwrap(), 1.0, &mut LlrFrame::new()).is_err());
    }

    #[test]
    fn decomposed_equals_exact_and_counts() {
        let mut rng = block_rng(13, 0);
        for order in [16, 64, 256] {
            let ctx = QamContext::new(order).unwrap();
            for _ in 0..200 {
                let y = PlanePoint::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let n0 = 10f64.powf(rng.random_range(-1.5..0.5));
                let a = one(|f| llr_qam_decomposed(y, &ctx, n0, f));
                let b = one(|f| llr_exact_2d(y, ctx.qam(), n0, f));
                for (x, z) in a.values.iter().zip(&b.values) {
                    assert!((x - z).abs() < 1e-9);
                }
                let side = (order as f64).sqrt() as u64;
                assert_eq!(a.distance_evals, 2 * side);
                assert_eq!(b.distance_evals, order as u64);
            }
        }
    }

    #[test]
    fn maxlog_bounds() {
        let c = Constellation::qam(16).unwrap();
        let mut rng = block_rng(14, 0);
        for _ in 0..500 {
            let y = PlanePoint::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            let n0 = 10f64.powf(rng.random_range(-1.0..0.5));
            let e = one(|f| llr_exact_2d(y, &c, n0, f));
            let m = one(|f| llr_maxlog_2d(y, &c, n0, f));
            for (a, b) in e.values.iter().zip(&m.values) {
                assert!((a - b).abs() <= (8f64).ln() + 1e-12);
            }
        }
        // Far away the nearest point dominates both sums.
        let y = PlanePoint::new(10.0, 6.0);
        let e = one(|f| llr_exact_2d(y, &c, 1.0, f));
        let m = one(|f| llr_maxlog_2d(y, &c, 1.0, f));
        for (a, b) in e.values.iter().zip(&m.values) {
            assert!(a.abs() < LLR_CLAMP);
            assert!((a - b).abs() <= 0.01 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn clamping_keeps_sign() {
        let c = Constellation::qam(16).unwrap();
        let f = one(|f| llr_exact_2d(PlanePoint::new(1.0, -1.0), &c, 1e-6, f));
        let raw = brute_llrs(PlanePoint::new(1.0, -1.0), &c, 1e-6);
        for (a, b) in f.values.iter().zip(raw) {
            assert!(a.abs() <= LLR_CLAMP);
            assert_eq!(a.signum(), b.signum());
        }
    }

    #[test]
    fn bit_flip_antisymmetry() {
        let c = Constellation::qam(16).unwrap();
        let flipped_labels = c.labels().iter().map(|l| l ^ 0b0100).collect();
        let flipped = Constellation::new("f", c.points().to_vec(), flipped_labels, 2).unwrap();
        let y = PlanePoint::new(0.2, -0.45);
        let a = one(|f| llr_exact_2d(y, &c, 0.4, f));
        let b = one(|f| llr_exact_2d(y, &flipped, 0.4, f));
        assert_eq!(a.values[1], -b.values[1]);
        assert_eq!(a.values[0], b.values[0]);
    }

    #[test]
    fn lcd_noiseless_recovers_labels() {
        for order in [16, 64, 256] {
            let ctx = QciContext::new(order).unwrap();
            let mut frame = LlrFrame::new();
            for (k, x) in ctx.qci().points().iter().enumerate() {
                frame.clear();
                let z = ctx.remap(*x);
                assert!((z - ctx.qam().qam().points()[k]).norm() < 1e-12);
                llr_qci_lcd(*x, &ctx, 1e-4, None, &mut frame).unwrap();
                llr_qci_remapped_2d(*x, &ctx, 1e-4, &mut frame).unwrap();
                let m = ctx.qci().bits_per_symbol();
                for i in 0..m {
                    let want = if ctx.qci().label_bit(k, i) == 0 { 1.0 } else { -1.0 };
                    assert_eq!(frame.values[i].signum(), want);
                    assert_eq!(frame.values[m + i].signum(), want);
                }
            }
        }
    }

    #[test]
    fn lcd_counts_and_identity_compensation() {
        let ctx = QciContext::new(64).unwrap();
        let y = PlanePoint::new(0.31, -0.52);
        let plain = one(|f| llr_qci_lcd(y, &ctx, 0.05, None, f));
        let ident = one(|f| llr_qci_lcd(y, &ctx, 0.05, Some(&AffineCompensation::IDENTITY), f));
        assert_eq!(plain.values, ident.values);
        assert_eq!(plain.distance_evals, 16);
        assert_eq!(plain.map_evals, 1);
        assert!(llr_qci_lcd(y, &ctx, 0.0, None, &mut LlrFrame::new()).is_err());
    }

    #[test]
    fn lcd_works_in_transmit_coordinates() {
        // The radial map is positively homogeneous, so remapping in canonical
        // coordinates equals remapping the received sample directly.
        let ctx = QciContext::new(16).unwrap();
        let y = PlanePoint::new(0.4, 0.9);
        let direct = radial_inverse(y).unwrap();
        let via = ctx.peak_scale() * ctx.remap(y);
        assert!((direct - via).norm() < 1e-15);
    }

    #[test]
    fn remapped_with_identity_map_is_exact() {
        // The remapped path with the map replaced by the identity is the plain
        // exact demapper over the canonical QAM.
        let ctx = QamContext::new(16).unwrap();
        let y = PlanePoint::new(0.1, 0.8);
        let mut a = LlrFrame::new();
        exact_unchecked(y, ctx.qam(), 0.2, &mut a);
        let b = one(|f| llr_exact_2d(y, ctx.qam(), 0.2, f));
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn lcd_hard_decisions_track_ml() {
        // 16-QCI in the waterfall region (PSNR 14 dB).
        let ctx = QciContext::new(16).unwrap();
        let n0 = 10f64.powf(-1.4);
        let mut rng = block_rng(15, 0);
        let n = 20_000;
        let tx: Vec<PlanePoint> =
            (0..n).map(|_| ctx.qci().points()[rng.random_range(0..16)]).collect();
        let rx = transmit(&tx, n0, &mut rng).unwrap();
        let mut lcd = LlrFrame::new();
        let mut ml = LlrFrame::new();
        let mut agree = 0;
        for y in rx {
            lcd.clear();
            ml.clear();
            llr_qci_lcd(y, &ctx, n0, None, &mut lcd).unwrap();
            llr_exact_2d(y, ctx.qci(), n0, &mut ml).unwrap();
            if lcd.values.iter().zip(&ml.values).all(|(a, b)| (*a >= 0.0) == (*b >= 0.0)) {
                agree += 1;
            }
        }
        assert!(agree as f64 / n as f64 > 0.95, "{agree}/{n}");
    }

    #[test]
    fn compensation_limits() {
        let ctx = QciContext::new(16).unwrap();
        let c = estimate_affine_compensation(&ctx, 1e-30, 10_000, &mut block_rng(1, 0)).unwrap();
        assert!((c.alpha - 1.0).abs() < 1e-12);
        assert!(c.beta.norm() < 1e-12);
        let c = estimate_affine_compensation(&ctx, 0.05, 20_000, &mut block_rng(1, 0)).unwrap();
        assert!(c.alpha > 1.01, "alpha {}", c.alpha);
        let again = estimate_affine_compensation(&ctx, 0.05, 20_000, &mut block_rng(1, 0)).unwrap();
        assert_eq!(c, again);
        assert!(estimate_affine_compensation(&ctx, 0.05, 100, &mut block_rng(1, 0)).is_err());
        assert!(estimate_affine_compensation(&ctx, 0.0, 20_000, &mut block_rng(1, 0)).is_err());
    }

    #[test]
    fn demapper_validates_pairing() {
        let qam = Modulation::Qam(QamContext::normalized(16).unwrap());
        assert!(Demapper::new(DemapperKind::QciLcd, qam.clone()).is_err());
        assert!(Demapper::new(DemapperKind::QamDecomposed, qam).is_ok());
        let qci = Modulation::Qci(QciContext::new(16).unwrap());
        assert!(Demapper::new(DemapperKind::QamDecomposed, qci.clone()).is_err());
        assert!(Demapper::new(DemapperKind::QciRemapped2d, qci).is_ok());
        for k in DemapperKind::ALL {
            assert_eq!(k.as_str().parse::<DemapperKind>().unwrap(), k);
        }
        assert!("demaper".parse::<DemapperKind>().is_err());
    }

    proptest! {
        #[test]
        fn pam2_llr_increasing(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let pam = Constellation::pam(2, true).unwrap();
            let la = one(|f| llr_pam(a, &pam, 1.0, f)).values[0];
            let lb = one(|f| llr_pam(b, &pam, 1.0, f)).values[0];
            prop_assert_eq!(la < lb, a < b);
        }

        #[test]
        fn normalized_decomposition_exact(u in -1.5f64..1.5, v in -1.5f64..1.5, lg in -2.0f64..0.5) {
            let ctx = QamContext::normalized(64).unwrap();
            let n0 = 10f64.powf(lg);
            let y = PlanePoint::new(u, v);
            let a = one(|f| llr_qam_decomposed(y, &ctx, n0, f));
            let b = one(|f| llr_exact_2d(y, ctx.qam(), n0, f));
            for (x, z) in a.values.iter().zip(&b.values) {
                prop_assert!((x - z).abs() < 1e-9);
            }
        }
    }
}
