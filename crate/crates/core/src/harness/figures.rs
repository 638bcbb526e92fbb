//! `make-figures`: CSV data for each result figure plus a matplotlib script.
//!
//! Files written to the output directory:
//!
//! - `curves_m{16,64,256}.csv` — GMI and coded BER versus PSNR for QAM (exact),
//!   QCI exact, QCI-LCD and QCI-LCD with affine compensation.
//! - `scatter_qci16.csv` — remapped received samples and berry centres.
//! - `berry_corner.csv` — corner-point clouds: remapped QCI versus QAM + AWGN.
//! - `iq_decomposition.csv` — GMI of LCD versus full 2D LLRs on the remapped signal.
//! - `plot_figures.py` — renders the above with matplotlib.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{Family, Mode, SimConfig, Sweep};
use super::run;
use crate::channel::add_noise;
use crate::demapper::{DemapperKind, QciContext};
use crate::error::{Error, Result};
use crate::metrics::{self, SweepRecord};
use crate::rng::{block_rng, derive_seed};
use crate::PlanePoint;

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    /// Coarse grids and small budgets; minutes instead of hours.
    pub quick: bool,
    pub seed: u64,
    pub workers: usize,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions { quick: false, seed: 1, workers: 0 }
    }
}

const SCATTER_PSNR: f64 = 12.0;

/// PSNR interval in dB.
type Range = (f64, f64);

/// (order, GMI sweep, coded-BER sweep).
const RANGES: [(usize, Range, Range); 3] =
    [(16, (6.0, 16.0), (11.0, 15.0)), (64, (12.0, 22.0), (16.0, 21.0)), (256, (18.0, 28.0), (22.0, 27.0))];

const CURVES: [(Family, DemapperKind); 4] = [
    (Family::Qam, DemapperKind::QamDecomposed),
    (Family::Qci, DemapperKind::Exact2d),
    (Family::Qci, DemapperKind::QciLcd),
    (Family::Qci, DemapperKind::QciLcdCompensated),
];

fn config(opts: &FigureOptions, family: Family, order: usize, kind: DemapperKind, mode: Mode, range: (f64, f64)) -> Result<SimConfig> {
    let step = if opts.quick { 1.0 } else { 0.25 };
    Ok(SimConfig {
        family,
        order,
        demapper: kind,
        sweep: Sweep::new(range.0, range.1, step)?,
        mode,
        code_file: None,
        samples: if opts.quick { 100_000 } else { 1_000_000 },
        target_errors: if opts.quick { 10 } else { 50 },
        max_trials: if opts.quick { 200 } else { 10_000 },
        max_iters: 50,
        compensation_samples: 100_000,
        seed: opts.seed,
        workers: opts.workers,
        output: None,
    })
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, std::io::BufWriter<std::fs::File>)> {
    let path = dir.join(name);
    let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, std::io::BufWriter::new(f)))
}

fn write_records(dir: &Path, name: &str, records: &[SweepRecord]) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    metrics::write_records(&mut w, records)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes every figure's data into `dir` (created if missing); returns the paths.
pub fn make_figures(dir: &Path, opts: &FigureOptions) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    for (order, gmi_range, ber_range) in RANGES {
        let mut records = Vec::new();
        for (family, kind) in &CURVES {
            records.extend(run(&config(opts, family.clone(), order, *kind, Mode::Gmi, gmi_range)?)?);
            records.extend(run(&config(opts, family.clone(), order, *kind, Mode::CodedBer, ber_range)?)?);
        }
        written.push(write_records(dir, &format!("curves_m{order}.csv"), &records)?);
    }

    let mut iq = Vec::new();
    for (order, gmi_range, _) in RANGES {
        for kind in [DemapperKind::QciLcd, DemapperKind::QciRemapped2d] {
            iq.extend(run(&config(opts, Family::Qci, order, kind, Mode::Gmi, gmi_range)?)?);
        }
    }
    written.push(write_records(dir, "iq_decomposition.csv", &iq)?);

    let ctx = QciContext::new(16)?;
    let n0 = 10f64.powf(-SCATTER_PSNR / 10.0);
    let samples = if opts.quick { 4_000 } else { 20_000 };
    let (path, mut w) = create(dir, "scatter_qci16.csv")?;
    metrics::scatter_dump(&ctx, n0, samples, block_rng(derive_seed(opts.seed, 0x5c), 0), &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let (path, mut w) = create(dir, "berry_corner.csv")?;
    berry_corner(&ctx, n0, samples, opts.seed, &mut w).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let (path, mut w) = create(dir, "plot_figures.py")?;
    w.write_all(PLOT_SCRIPT.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Corner-point clouds in canonical QAM coordinates: `remapped` is f⁻¹ of the
/// noisy QCI corner, `qam_awgn` the QAM corner plus equivalent Gaussian noise.
/// Centroids follow as `center_*` rows.
fn berry_corner(ctx: &QciContext, n0: f64, samples: usize, seed: u64, w: &mut dyn Write) -> std::io::Result<()> {
    let qam = ctx.qam().qam();
    let k = (0..qam.order())
        .max_by(|&a, &b| {
            let (pa, pb) = (qam.points()[a], qam.points()[b]);
            (pa.u + pa.v).total_cmp(&(pb.u + pb.v))
        })
        .expect("non-empty constellation");
    let x = ctx.qci().points()[k];
    let x_qam = qam.points()[k];
    let sigma = (n0 / 2.0).sqrt();
    let sigma_c = (ctx.canonical_n0(n0) / 2.0).sqrt();
    let mut rng = block_rng(derive_seed(seed, 0xbe), 0);
    writeln!(w, "cloud,u,v")?;
    let (mut red, mut blue) = (PlanePoint::ORIGIN, PlanePoint::ORIGIN);
    for _ in 0..samples {
        let z = ctx.remap(add_noise(x, sigma, &mut rng));
        let q = add_noise(x_qam, sigma_c, &mut rng);
        red = red + z;
        blue = blue + q;
        writeln!(w, "remapped,{:?},{:?}", z.u, z.v)?;
        writeln!(w, "qam_awgn,{:?},{:?}", q.u, q.v)?;
    }
    let s = 1.0 / samples as f64;
    writeln!(w, "center_remapped,{:?},{:?}", s * red.u, s * red.v)?;
    writeln!(w, "center_qam_awgn,{:?},{:?}", s * blue.u, s * blue.v)?;
    writeln!(w, "qam_point,{:?},{:?}", x_qam.u, x_qam.v)?;
    w.flush()
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Render the CSVs written by `qci make-figures` (run from that directory)."""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def records(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def curves(rows, metric):
    out = defaultdict(list)
    for r in rows:
        if r["metric"] == metric:
            out[(r["constellation"], r["demapper"])].append((float(r["psnr_db"]), float(r["value"])))
    return out


for m in (16, 64, 256):
    rows = records(f"curves_m{m}.csv")
    fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4))
    for (c, d), pts in sorted(curves(rows, "ber").items()):
        pts = [p for p in pts if p[1] > 0]
        if pts:
            a.semilogy(*zip(*pts), marker="o", label=f"{c} {d}")
    a.set(xlabel="PSNR [dB]", ylabel="coded BER", title=f"M={m}")
    a.grid(True, which="both")
    a.legend()
    for (c, d), pts in sorted(curves(rows, "gmi").items()):
        b.plot(*zip(*pts), label=f"{c} {d}")
    b.set(xlabel="PSNR [dB]", ylabel="GMI [bit/symbol]", title=f"M={m}")
    b.grid(True)
    b.legend()
    fig.tight_layout()
    fig.savefig(f"curves_m{m}.png", dpi=150)

rows = records("iq_decomposition.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for (c, d), pts in sorted(curves(rows, "gmi").items()):
    ax.plot(*zip(*pts), linestyle="--" if d == "qci_remapped_2d" else "-", label=f"{c} {d}")
ax.set(xlabel="PSNR [dB]", ylabel="GMI [bit/symbol]")
ax.grid(True)
ax.legend()
fig.tight_layout()
fig.savefig("iq_decomposition.png", dpi=150)

rows = records("scatter_qci16.csv")
fig, ax = plt.subplots(figsize=(5, 5))
s = [r for r in rows if r["kind"] == "sample"]
ax.scatter([float(r["z_u"]) for r in s], [float(r["z_v"]) for r in s], s=1, alpha=0.3)
c = [r for r in rows if r["kind"] == "center"]
ax.scatter([float(r["x_qam_u"]) for r in c], [float(r["x_qam_v"]) for r in c], marker="o", color="b")
ax.scatter([float(r["z_u"]) for r in c], [float(r["z_v"]) for r in c], marker="s", color="r")
ax.set(aspect="equal", title="f^-1(y), 16-QCI")
fig.savefig("scatter_qci16.png", dpi=150)

rows = records("berry_corner.csv")
fig, ax = plt.subplots(figsize=(5, 5))
for cloud, color in (("remapped", "r"), ("qam_awgn", "b")):
    pts = [(float(r["u"]), float(r["v"])) for r in rows if r["cloud"] == cloud]
    ax.scatter(*zip(*pts), s=1, alpha=0.2, color=color, label=cloud)
for kind, marker, color in (("center_remapped", "s", "r"), ("center_qam_awgn", "o", "b")):
    r = next(r for r in rows if r["cloud"] == kind)
    ax.scatter([float(r["u"])], [float(r["v"])], marker=marker, color=color, edgecolor="k", s=80)
ax.set(aspect="equal", title="corner berry centres")
ax.legend()
fig.savefig("berry_corner.png", dpi=150)
print("wrote PNGs", file=sys.stderr)
"#;
