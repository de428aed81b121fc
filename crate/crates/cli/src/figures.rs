//! Data behind the four comparison figures.
//!
//! | file          | columns                                             |
//! |---------------|-----------------------------------------------------|
//! | `fig1_x1.csv` | `t, sf_x1, of_x1, of_xhat1, twisting_x1`            |
//! | `fig2_x2.csv` | `t, sf_x2, of_x2, of_xhat2, twisting_x2`            |
//! | `fig3_z.csv`  | `t, sf_z, of_z, minus_rho`                          |
//! | `fig4_u.csv`  | `t, sf_u, of_u, twisting_u`                         |

use std::path::{Path, PathBuf};

use dic_core::simulator::Trajectory;
use serde::Serialize;

use crate::artifacts::{csv_bytes, summary_text, write_atomic, FORMAT_VERSION};
use crate::config::{bundled, RunConfig};
use crate::error::CliError;
use crate::run::{execute, RunOutcome, RunSummary};

pub const FIGURE_FILES: [&str; 4] = ["fig1_x1.csv", "fig2_x2.csv", "fig3_z.csv", "fig4_u.csv"];

pub struct Figures {
    pub sf: RunOutcome,
    pub of: RunOutcome,
    pub twisting: RunOutcome,
    pub stride: usize,
}

#[derive(Serialize)]
struct FiguresSummary<'a> {
    format_version: u32,
    files: [&'static str; 4],
    sf_pendulum: &'a RunSummary,
    of_pendulum: &'a RunSummary,
    twisting_pendulum: &'a RunSummary,
}

/// Runs the three bundled pendulum configurations concurrently.
pub fn run_bundled() -> Result<Figures, CliError> {
    let cfgs = [bundled::SF_PENDULUM, bundled::OF_PENDULUM, bundled::TWISTING_PENDULUM]
        .map(RunConfig::parse)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let stride = cfgs[0].csv_stride();
    if cfgs.iter().any(|c| c.sim != cfgs[0].sim || c.csv_stride() != stride) {
        return Err(CliError::Invalid {
            section: "sim",
            key: "",
            message: "bundled figure configs must share the time grid".into(),
        });
    }
    let mut outs = std::thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || execute(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let twisting = outs.pop().expect("three runs");
    let of = outs.pop().expect("three runs");
    let sf = outs.pop().expect("three runs");
    Ok(Figures {
        sf,
        of,
        twisting,
        stride,
    })
}

fn rows(t: &Trajectory, stride: usize) -> impl Iterator<Item = usize> {
    (0..t.len()).step_by(stride)
}

fn observer(t: &Trajectory, which: usize) -> &[f64] {
    let v = if which == 1 { &t.xhat1 } else { &t.xhat2 };
    v.as_deref().expect("output-feedback run records the observer")
}

impl Figures {
    /// The four datasets as `(file name, CSV bytes)`.
    pub fn datasets(&self) -> [(&'static str, Vec<u8>); 4] {
        let (sf, of, tw) = (&self.sf.trajectory, &self.of.trajectory, &self.twisting.trajectory);
        let (xh1, xh2) = (observer(of, 1), observer(of, 2));
        let fig1 = csv_bytes(
            &["t", "sf_x1", "of_x1", "of_xhat1", "twisting_x1"],
            rows(sf, self.stride).map(|k| (sf.t[k], sf.x1[k], of.x1[k], xh1[k], tw.x1[k])),
        );
        let fig2 = csv_bytes(
            &["t", "sf_x2", "of_x2", "of_xhat2", "twisting_x2"],
            rows(sf, self.stride).map(|k| (sf.t[k], sf.x2[k], of.x2[k], xh2[k], tw.x2[k])),
        );
        let fig3 = csv_bytes(
            &["t", "sf_z", "of_z", "minus_rho"],
            rows(sf, self.stride).map(|k| (sf.t[k], sf.z[k], of.z[k], -sf.rho[k])),
        );
        let fig4 = csv_bytes(
            &["t", "sf_u", "of_u", "twisting_u"],
            rows(sf, self.stride).map(|k| (sf.t[k], sf.u[k], of.u[k], tw.u[k])),
        );
        let [a, b, c, d] = FIGURE_FILES;
        [(a, fig1), (b, fig2), (c, fig3), (d, fig4)]
    }

    /// Writes the datasets plus `figures.summary.toml` into `outdir`.
    pub fn write(&self, outdir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        for (name, bytes) in self.datasets() {
            let p = outdir.join(name);
            write_atomic(&p, &bytes)?;
            written.push(p);
        }
        let summary = FiguresSummary {
            format_version: FORMAT_VERSION,
            files: FIGURE_FILES,
            sf_pendulum: &self.sf.summary,
            of_pendulum: &self.of.summary,
            twisting_pendulum: &self.twisting.summary,
        };
        let p = outdir.join("figures.summary.toml");
        write_atomic(&p, summary_text(&summary).as_bytes())?;
        written.push(p);
        Ok(written)
    }
}
