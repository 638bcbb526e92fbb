//! Experiment orchestration behind the `qci` CLI.

pub mod config;
pub mod figures;
pub mod link;

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::channel::{add_noise, ChannelSpec};
use crate::coding::ParityCheckCode;
use crate::constellation::Constellation;
use crate::demapper::{
    estimate_affine_compensation, Demapper, DemapperKind, LlrFrame, Modulation, QamContext,
    QciContext,
};
use crate::error::{Error, Result};
use crate::metrics::{self, gmi_estimate_unchecked, MetricKind, SweepRecord};
use crate::rng::{block_rng, derive_seed};

pub use config::{parse_config, Family, Mode, SimConfig, Sweep};
pub use figures::{make_figures, FigureOptions};
pub use link::{coded_ber, uncoded_ber, CodedLink, ErrorCounts};

const COMPENSATION_DOMAIN: u64 = 0xc0;
const INTERLEAVER_DOMAIN: u64 = 0x11;
const COMPLEXITY_SYMBOLS: usize = 1000;

/// Peak-normalised modulation for a constellation family.
pub fn build_modulation(family: &Family, order: usize) -> Result<Modulation> {
    Ok(match family {
        Family::Pam => Modulation::Generic(Constellation::pam(order, true)?.normalize_peak()?),
        Family::Qam => Modulation::Qam(QamContext::normalized(order)?),
        Family::Qci => Modulation::Qci(QciContext::new(order)?),
        Family::File(p) => Modulation::Generic(Constellation::load(p)?.normalize_peak()?),
    })
}

/// RNG seed for the grid point at `psnr_db`.
///
/// Keyed on the PSNR value rather than its grid index, so the same PSNR sees
/// the same noise in every sweep and for every demapper.
pub fn point_seed(seed: u64, psnr_db: f64) -> u64 {
    derive_seed(seed, (psnr_db * 1000.0).round() as i64 as u64)
}

/// Sets the demapper's affine compensation for noise power `n0` if it needs one.
pub fn prepare_demapper(demapper: &mut Demapper, n0: f64, samples: usize, seed: u64) -> Result<()> {
    if demapper.kind().needs_compensation() {
        let ctx = demapper.qci_context().expect("compensated demapper has a QCI context");
        let mut rng = block_rng(derive_seed(seed, COMPENSATION_DOMAIN), 0);
        let comp = estimate_affine_compensation(ctx, n0, samples, &mut rng)?;
        demapper.set_compensation(Some(comp));
    }
    Ok(())
}

/// Point-distance evaluations per symbol spent by `demapper`.
pub fn distance_evals_per_symbol(demapper: &Demapper, n0: f64, symbols: usize, seed: u64) -> Result<f64> {
    let tx = demapper.tx();
    let mut rng = block_rng(seed, 0);
    let sigma = (n0 / 2.0).sqrt();
    let mut frame = LlrFrame::new();
    for _ in 0..symbols {
        let x = tx.points()[rng.random_range(0..tx.order())];
        demapper.demap(add_noise(x, sigma, &mut rng), n0, &mut frame)?;
    }
    Ok(frame.distance_evals as f64 / symbols as f64)
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    let threads = if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} workers: {e}")))
}

/// Runs the configured experiment over the PSNR grid.
///
/// Records are also written as CSV to `config.output` when set; scatter mode
/// writes its sample dump there instead (one file per grid point when the
/// grid has several).
pub fn run(config: &SimConfig) -> Result<Vec<SweepRecord>> {
    let modulation = build_modulation(&config.family, config.order)?;
    let base = Demapper::new(config.demapper, modulation)?;
    let stats = base.tx().power_stats();
    let cons_id = config.constellation_id();
    let dem_id = config.demapper.as_str();
    let code = match (config.mode, &config.code_file) {
        (Mode::CodedBer, Some(p)) => Some(ParityCheckCode::load_alist(p)?),
        (Mode::CodedBer, None) => Some(ParityCheckCode::bundled()),
        _ => None,
    };
    let grid = config.sweep.points();
    if config.mode == Mode::Scatter && base.qci_context().is_none() {
        return Err(Error::Config("scatter mode needs a QCI constellation".into()));
    }
    let pool = thread_pool(config.workers)?;

    let mut records = Vec::new();
    for &psnr in &grid {
        let spec = ChannelSpec::from_psnr(psnr, &stats)?;
        let seed = point_seed(config.seed, psnr);
        let mut demapper = base.clone();
        prepare_demapper(&mut demapper, spec.n0, config.compensation_samples, seed)?;
        pool.install(|| -> Result<()> {
            match config.mode {
                Mode::Gmi => {
                    let g = gmi_estimate_unchecked(&demapper, spec.n0, config.samples, seed)?;
                    records.push(SweepRecord {
                        psnr_db: psnr,
                        metric: MetricKind::Gmi,
                        value: g.value,
                        stderr: g.stderr,
                        trials: g.samples,
                        errors_counted: 0,
                        seed: config.seed,
                        constellation: cons_id.clone(),
                        demapper: dem_id.to_string(),
                    });
                }
                Mode::UncodedBer => {
                    let c = uncoded_ber(&demapper, spec.n0, config.target_errors, config.max_trials, seed)?;
                    records.push(SweepRecord::error_rate(
                        MetricKind::Ber, psnr, c.bit_errors, c.bits, config.seed, &cons_id, dem_id,
                    ));
                }
                Mode::CodedBer => {
                    let code = code.as_ref().expect("loaded above");
                    let link = CodedLink::new(
                        code,
                        &demapper,
                        derive_seed(config.seed, INTERLEAVER_DOMAIN),
                        config.max_iters,
                    );
                    let c = coded_ber(&link, spec.n0, config.target_errors, config.max_trials, seed)?;
                    records.push(SweepRecord::error_rate(
                        MetricKind::Ber, psnr, c.bit_errors, c.bits, config.seed, &cons_id, dem_id,
                    ));
                    records.push(SweepRecord::error_rate(
                        MetricKind::Fer, psnr, c.frame_errors, c.frames, config.seed, &cons_id, dem_id,
                    ));
                }
                Mode::Complexity => {
                    let evals = distance_evals_per_symbol(&demapper, spec.n0, COMPLEXITY_SYMBOLS, seed)?;
                    records.push(SweepRecord {
                        psnr_db: psnr,
                        metric: MetricKind::DistanceEvals,
                        value: evals,
                        stderr: 0.0,
                        trials: COMPLEXITY_SYMBOLS as u64,
                        errors_counted: 0,
                        seed: config.seed,
                        constellation: cons_id.clone(),
                        demapper: dem_id.to_string(),
                    });
                }
                Mode::Scatter => {
                    let ctx = demapper.qci_context().expect("checked above");
                    let path = scatter_path(config.output.as_deref(), psnr, grid.len() > 1);
                    let mut sink = open_output(path.as_deref())?;
                    metrics::scatter_dump(ctx, spec.n0, config.samples, block_rng(seed, 0), &mut *sink)?;
                }
            }
            Ok(())
        })?;
    }

    if config.mode != Mode::Scatter {
        if let Some(path) = &config.output {
            write_csv(path, &records)?;
        }
    }
    Ok(records)
}

fn scatter_path(output: Option<&Path>, psnr: f64, per_point: bool) -> Option<std::path::PathBuf> {
    let out = output?;
    if !per_point {
        return Some(out.to_path_buf());
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Some(out.with_file_name(format!("{stem}_psnr{psnr}.csv")))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    metrics::write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii csv")
}

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    std::fs::write(path, records_csv(records)).map_err(|e| Error::io(path, e))
}

/// Convenience: a demapper of `kind` for `family`/`order`.
pub fn demapper_for(family: &Family, order: usize, kind: DemapperKind) -> Result<Demapper> {
    Demapper::new(kind, build_modulation(family, order)?)
}
