//! Link-level toolkit for QAM-isomorphic (QCI) constellations.
//!
//! QCI constellations are the image of a square QAM under the radial map that
//! sends concentric squares onto concentric circles. Because the map is
//! invertible, a receiver can pull noisy samples back onto the QAM grid and use
//! the cheap per-axis PAM demapper instead of a full 2D search.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: the square/disc radial map and its inverse.
//! * [`constellation`]: PAM/QAM/QCI construction, Gray checks, power statistics, CSV I/O.
//! * [`channel`]: PSNR/SNR/OBO accounting and the seeded AWGN channel.
//! * [`demapper`]: exact, max-log, decomposed, low-complexity and compensated LLR paths.
//! * [`coding`]: LDPC (alist I/O, GF(2) encoder, sum-product decoder) and the bit interleaver.
//! * [`metrics`]: GMI, BER/FER accumulation, horizontal gaps and scatter diagnostics.
//! * [`harness`]: config parsing and the reproducible sweep runner behind the CLI.

pub mod channel;
pub mod coding;
pub mod constellation;
pub mod demapper;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod rng;

pub use channel::ChannelSpec;
pub use constellation::{Constellation, PowerStats};
pub use demapper::{AffineCompensation, Demapper, DemapperKind, LlrFrame};
pub use error::{Error, Result};
pub use geometry::PlanePoint;
