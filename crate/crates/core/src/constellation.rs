//! PAM, QAM and QCI constellations with Gray labelling.
//!
//! Canonical coordinates: PAM levels are uniform on `[-1, 1]` and QAM is the
//! Cartesian product of two PAMs on the square `[-1, 1]²`, so the radial map
//! applies literally and QCI points lie in the disc of radius `√2`. Peak
//! normalisation to `max |x|² = 1` is a separate step done before the channel.
//!
//! Labels are stored as integers; bit `i` of an `m`-bit label is the `i`-th
//! character of its binary string (most significant first).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{forward_unchecked, PlanePoint};

/// Relative tolerance on the minimum distance when collecting nearest neighbours.
pub const GRAY_NEIGHBOR_RTOL: f64 = 1e-9;

const SUPPORTED_PAM: [usize; 6] = [2, 4, 8, 16, 32, 64];
const SUPPORTED_QAM: [usize; 5] = [16, 64, 256, 1024, 4096];

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<PlanePoint>,
    labels: Vec<u32>,
    bits: u32,
    dim: u8,
    scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerStats {
    pub peak_power: f64,
    pub avg_power: f64,
    pub papr: f64,
}

impl PowerStats {
    pub fn papr_db(&self) -> f64 {
        10.0 * self.papr.log10()
    }
}

/// Result of [`Constellation::gray_check`]: every nearest-neighbour pair whose
/// labels do not differ in exactly one bit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrayReport {
    pub violations: Vec<(usize, usize)>,
}

impl GrayReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn gray(i: usize) -> u32 {
    (i ^ (i >> 1)) as u32
}

impl Constellation {
    /// Builds and validates a constellation from points and integer labels.
    pub fn new(
        name: impl Into<String>,
        points: Vec<PlanePoint>,
        labels: Vec<u32>,
        dim: u8,
    ) -> Result<Self> {
        let order = points.len();
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::Constellation(format!(
                "cardinality not a power of two: {order}"
            )));
        }
        if labels.len() != order {
            return Err(Error::Constellation(format!(
                "{} labels for {order} points",
                labels.len()
            )));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::Constellation(format!("unsupported dimension {dim}")));
        }
        let bits = order.trailing_zeros();
        let mut seen = vec![false; order];
        for &l in &labels {
            if l as usize >= order {
                return Err(Error::Constellation(format!(
                    "label {l} does not fit in {bits} bits"
                )));
            }
            if std::mem::replace(&mut seen[l as usize], true) {
                return Err(Error::Constellation(format!(
                    "duplicate label {}",
                    label_string(l, bits)
                )));
            }
        }
        for p in &points {
            p.check_finite()?;
            if dim == 1 && p.v != 0.0 {
                return Err(Error::Constellation(
                    "1D constellation with nonzero second coordinate".into(),
                ));
            }
        }
        let mut sorted: Vec<(u64, u64)> = points
            .iter()
            .map(|p| ((p.u + 0.0).to_bits(), (p.v + 0.0).to_bits()))
            .collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Constellation("duplicate points".into()));
        }
        Ok(Constellation {
            name: name.into(),
            points,
            labels,
            bits,
            dim,
            scale: 1.0,
        })
    }

    /// Uniform `levels`-PAM on `[-1, 1]`, listed in ascending order.
    ///
    /// With `gray` set the labels follow the binary-reflected Gray code counted
    /// from the top level down, so `+1` always carries the all-zero label and a
    /// positive sample favours bit value 0. Without it the labels are the plain
    /// binary count in the same order.
    pub fn pam(levels: usize, gray_labels: bool) -> Result<Self> {
        if !SUPPORTED_PAM.contains(&levels) {
            return Err(Error::Constellation(format!(
                "unsupported PAM size {levels} (expected one of {SUPPORTED_PAM:?})"
            )));
        }
        let step = 2.0 / (levels - 1) as f64;
        let points = (0..levels)
            .map(|j| PlanePoint::new(-1.0 + step * j as f64, 0.0))
            .collect();
        let labels = (0..levels)
            .map(|j| {
                let rank = levels - 1 - j;
                if gray_labels {
                    gray(rank)
                } else {
                    rank as u32
                }
            })
            .collect();
        Constellation::new(format!("pam{levels}"), points, labels, 1)
    }

    /// Square `order`-QAM on `[-1, 1]²`: the product of two Gray PAMs, I bits first.
    pub fn qam(order: usize) -> Result<Self> {
        let side = qam_side(order)?;
        let pam = Constellation::pam(side, true)?;
        let half = pam.bits;
        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for (pi, li) in pam.points.iter().zip(&pam.labels) {
            for (pq, lq) in pam.points.iter().zip(&pam.labels) {
                points.push(PlanePoint::new(pi.u, pq.u));
                labels.push((li << half) | lq);
            }
        }
        Constellation::new(format!("qam{order}"), points, labels, 2)
    }

    /// `order`-QCI: the pointwise radial image of [`Constellation::qam`], same labels.
    pub fn qci(order: usize) -> Result<Self> {
        let mut c = Constellation::qam(order)?;
        for p in &mut c.points {
            *p = forward_unchecked(*p);
        }
        c.name = format!("qci{order}");
        Ok(c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[PlanePoint] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits as usize
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    /// Cumulative factor applied to the construction coordinates by normalisation.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Value of bit `i` (0 = first label character) of point `k`.
    #[inline]
    pub fn label_bit(&self, k: usize, i: usize) -> u8 {
        ((self.labels[k] >> (self.bits as usize - 1 - i)) & 1) as u8
    }

    pub fn label_string(&self, k: usize) -> String {
        label_string(self.labels[k], self.bits)
    }

    /// Index of the point carrying `label`.
    pub fn index_of_label(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn power_stats(&self) -> PowerStats {
        let mut peak: f64 = 0.0;
        let mut sum = 0.0;
        for p in &self.points {
            let e = p.norm_sqr();
            peak = peak.max(e);
            sum += e;
        }
        let avg = sum / self.order() as f64;
        PowerStats {
            peak_power: peak,
            avg_power: avg,
            papr: peak / avg,
        }
    }

    /// Uniformly rescales so that `max |x|² = 1`.
    pub fn normalize_peak(&self) -> Result<Self> {
        let peak = self.power_stats().peak_power;
        if !(peak > 0.0) {
            return Err(Error::Constellation(
                "cannot normalise an all-zero constellation".into(),
            ));
        }
        if (peak - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(self.clone());
        }
        Ok(self.scaled(1.0 / peak.sqrt()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut c = self.clone();
        for p in &mut c.points {
            *p = s * *p;
        }
        c.scale *= s;
        c
    }

    /// Checks the nearest-neighbour Gray condition for every point.
    pub fn gray_check(&self) -> GrayReport {
        let mut violations = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let dmin = self
                .points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.dist_sqr(q).sqrt())
                .fold(f64::INFINITY, f64::min);
            let limit = dmin * (1.0 + GRAY_NEIGHBOR_RTOL);
            for (j, q) in self.points.iter().enumerate() {
                if j != i
                    && p.dist_sqr(q).sqrt() <= limit
                    && (self.labels[i] ^ self.labels[j]).count_ones() != 1
                {
                    violations.push((i.min(j), i.max(j)));
                }
            }
        }
        violations.sort_unstable();
        violations.dedup();
        GrayReport { violations }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# qci-constellation v1, M={}, dim={}\nindex,I,Q,label_bits\n",
            self.order(),
            self.dim
        );
        for (k, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "{k},{:?},{:?},{}", p.u, p.v, self.label_string(k));
        }
        out
    }

    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut dim = None;
        let mut rows: Vec<(usize, PlanePoint, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split(',') {
                    if let Some(d) = field.trim().strip_prefix("dim=") {
                        dim = Some(d.trim().parse::<u8>().map_err(|_| {
                            Error::Constellation(format!("bad dim in header: {d}"))
                        })?);
                    }
                }
                continue;
            }
            if line.starts_with("index") {
                continue;
            }
            let malformed =
                |what: &str| Error::Constellation(format!("line {}: {what}: {line}", lineno + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(malformed("expected 4 fields"));
            }
            let index = fields[0].parse().map_err(|_| malformed("bad index"))?;
            let u = fields[1].parse().map_err(|_| malformed("bad I value"))?;
            let v = fields[2].parse().map_err(|_| malformed("bad Q value"))?;
            let bits = fields[3];
            if bits.is_empty() || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(malformed("label must be a bit string"));
            }
            rows.push((index, PlanePoint::new(u, v), bits.to_string()));
        }
        let order = rows.len();
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::Constellation(format!(
                "cardinality not a power of two: {order}"
            )));
        }
        let bits = order.trailing_zeros() as usize;
        let mut seen = HashMap::new();
        for (index, _, label) in &rows {
            if label.len() != bits {
                return Err(Error::Constellation(format!(
                    "label {label} has {} bits, expected {bits}",
                    label.len()
                )));
            }
            if seen.insert(label.clone(), *index).is_some() {
                return Err(Error::Constellation(format!("duplicate label {label}")));
            }
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(k, r)| r.0 != k) {
            return Err(Error::Constellation(format!(
                "indices must be 0..{} without gaps",
                order - 1
            )));
        }
        let dim = dim.unwrap_or(if rows.iter().all(|r| r.1.v == 0.0) { 1 } else { 2 });
        let labels = rows
            .iter()
            .map(|r| u32::from_str_radix(&r.2, 2).expect("validated bit string"))
            .collect();
        let points = rows.into_iter().map(|r| r.1).collect();
        Constellation::new(name, points, labels, dim)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| format!("file:{}", s.to_string_lossy()))
            .unwrap_or_else(|| "file".into());
        Constellation::from_csv(name, &text)
    }
}

pub(crate) fn qam_side(order: usize) -> Result<usize> {
    if !SUPPORTED_QAM.contains(&order) {
        return Err(Error::Constellation(format!(
            "unsupported square QAM order {order} (expected one of {SUPPORTED_QAM:?})"
        )));
    }
    Ok(1usize << (order.trailing_zeros() / 2))
}

fn label_string(label: u32, bits: u32) -> String {
    format!("{:0width$b}", label, width = bits as usize)
}
