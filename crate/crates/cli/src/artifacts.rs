//! CSV and summary writers. Files are written to a temporary sibling and
//! renamed into place.

use std::io::Write;
use std::path::Path;

use dic_core::simulator::Trajectory;
use serde::Serialize;

use crate::error::CliError;

/// Version tag written into every summary.
pub const FORMAT_VERSION: u32 = 1;

pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "x1", "x2", "xhat1", "xhat2", "z", "u", "rho"];

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Serializes rows of optional numbers; `None` becomes an empty field.
pub fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.serialize(r).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

/// `t,x1,x2,xhat1,xhat2,z,u,rho`, every `stride`-th sample.
pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> Vec<u8> {
    let rows = (0..traj.len()).step_by(stride.max(1)).map(|k| {
        (
            traj.t[k],
            traj.x1[k],
            traj.x2[k],
            traj.xhat1.as_ref().map(|v| v[k]),
            traj.xhat2.as_ref().map(|v| v[k]),
            traj.z[k],
            traj.u[k],
            traj.rho[k],
        )
    });
    csv_bytes(&TRAJECTORY_HEADER, rows)
}

/// Key-value text in the config format.
pub fn summary_text<S: Serialize>(summary: &S) -> String {
    toml::to_string(summary).expect("summaries contain only tables and scalars")
}
