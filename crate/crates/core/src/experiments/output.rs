//! CSV writers. Floats use the shortest round-trip scientific notation and
//! every file is written to a temporary sibling and renamed into place.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use super::{ComparisonRow, ErrorTable, SweepPoint};
use crate::bounds::{BoundCurve, ConstantsReport};
use crate::perturbations::MomentTrace;
use crate::Result;

fn f(x: f64) -> String {
    format!("{x:e}")
}

/// Write `header` and `rows` to `path` atomically.
pub fn write_csv<I, R, S>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: Display,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_error_table(path: &Path, table: &ErrorTable) -> Result<()> {
    let mut rows = Vec::new();
    for k in 0..=table.k_max() {
        for n in 0..=table.slices() {
            rows.push(vec![
                k.to_string(),
                n.to_string(),
                f(table.mse[k][n]),
                f(table.stderr[k][n]),
                table.realizations.to_string(),
                f(table.raw_mse[k][n]),
            ]);
        }
    }
    write_csv(path, &["k", "n", "mse", "stderr", "R", "raw_mse"], rows)
}

pub fn write_ehat(path: &Path, table: &ErrorTable) -> Result<()> {
    let rows =
        (0..=table.k_max()).map(|k| vec![k.to_string(), f(table.ehat[k]), f(table.ehat_stderr[k])]);
    write_csv(path, &["k", "ehat", "stderr"], rows)
}

pub fn write_moments(path: &Path, traces: &[(String, MomentTrace)]) -> Result<()> {
    let rows = traces.iter().flat_map(|(label, t)| {
        (0..t.k.len()).map(move |i| {
            vec![
                label.clone(),
                t.k[i].to_string(),
                f(t.max_second_moment[i]),
                f(t.stderr[i]),
            ]
        })
    });
    write_csv(path, &["model", "k", "max_second_moment", "stderr"], rows)
}

pub fn write_sweep(path: &Path, sweeps: &[(String, Vec<SweepPoint>)]) -> Result<()> {
    let rows = sweeps.iter().flat_map(|(label, points)| {
        points
            .iter()
            .map(move |p| vec![label.clone(), f(p.eps), f(p.mean_k), f(p.stderr)])
    });
    write_csv(path, &["model", "eps", "mean_k", "stderr"], rows)
}

pub fn write_bounds(path: &Path, curves: &[BoundCurve], fingerprint: &str) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        c.points.iter().map(move |p| {
            vec![
                c.kind.name().to_string(),
                p.k.to_string(),
                p.n.map(|n| n.to_string()).unwrap_or_default(),
                p.value.to_string(),
                fingerprint.to_string(),
            ]
        })
    });
    write_csv(path, &["kind", "k", "n", "value", "fingerprint"], rows)
}

pub fn write_constants(path: &Path, report: &ConstantsReport) -> Result<()> {
    let rows = report
        .rows()
        .into_iter()
        .map(|(name, value, prov)| vec![name.to_string(), f(value), prov.to_string()]);
    write_csv(path, &["name", "value", "provenance"], rows)
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.k.to_string(),
            f(r.empirical),
            r.kind.name().to_string(),
            r.bound.to_string(),
            r.dominated
                .map(|d| u8::from(d).to_string())
                .unwrap_or_default(),
            f(r.stderr),
        ]
    });
    write_csv(
        path,
        &[
            "k",
            "empirical",
            "bound_kind",
            "bound_value",
            "dominated",
            "stderr",
        ],
        rows,
    )
}
