//! Run output: `convergence.csv`, `mesh_<iter>.txt`, `solution_<iter>.txt`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::mesh::{write_mesh, Mesh};
use crate::scalar::Cplx;
use crate::Error;

use super::run::{ConvergenceRow, Observer, Snapshot};

pub const CSV_HEADER: [&str; 10] =
    ["iter", "dofs", "elements", "h", "rel_l2_error", "eta", "eta_scaled", "efficiency", "rcond", "seconds"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
    };
    Error::Io { path: path.to_owned(), source }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn record(r: &ConvergenceRow) -> [String; 10] {
    [
        r.iter.to_string(),
        r.dofs.to_string(),
        r.elements.to_string(),
        real(r.h),
        real(r.rel_l2_error),
        real(r.eta),
        real(r.eta_scaled),
        real(r.efficiency),
        real(r.rcond),
        real(r.seconds),
    ]
}

/// `convergence.csv` written row by row and flushed after each row.
pub struct CsvStream {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvStream {
    pub fn create(path: &Path) -> Result<Self, Error> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
        writer.flush().map_err(io_err(path))?;
        Ok(Self { path: path.to_owned(), writer })
    }

    pub fn push(&mut self, row: &ConvergenceRow) -> Result<(), Error> {
        self.writer.write_record(record(row)).map_err(|e| csv_err(&self.path, e))?;
        self.writer.flush().map_err(io_err(&self.path))
    }
}

pub fn read_convergence_csv(path: &Path) -> Result<Vec<ConvergenceRow>, Error> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse { line: 1, message: format!("unexpected header in {}", path.display()) });
    }
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = n + 2;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse { line, message: "missing field".into() });
        let int = |i: usize| -> Result<usize, Error> {
            field(i)?.parse().map_err(|_| Error::Parse { line, message: format!("bad integer in column {}", CSV_HEADER[i]) })
        };
        let float = |i: usize| -> Result<f64, Error> {
            field(i)?.parse().map_err(|_| Error::Parse { line, message: format!("bad number in column {}", CSV_HEADER[i]) })
        };
        rows.push(ConvergenceRow {
            iter: int(0)?,
            dofs: int(1)?,
            elements: int(2)?,
            h: float(3)?,
            rel_l2_error: float(4)?,
            eta: float(5)?,
            eta_scaled: float(6)?,
            efficiency: float(7)?,
            rcond: float(8)?,
            seconds: float(9)?,
        });
    }
    Ok(rows)
}

/// One line per coefficient: element, direction, real part, imaginary part.
pub fn write_solution<W: Write>(p: usize, coeffs: &[Cplx<f64>], mut w: W) -> std::io::Result<()> {
    for (i, c) in coeffs.iter().enumerate() {
        writeln!(w, "{} {} {} {}", i / p, i % p, real(c.re), real(c.im))?;
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Error> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Writes every iteration of a run into a directory as it completes.
pub struct DirectoryExporter {
    dir: PathBuf,
    csv: CsvStream,
}

impl DirectoryExporter {
    pub fn create(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv = CsvStream::create(&dir.join("convergence.csv"))?;
        Ok(Self { dir: dir.to_owned(), csv })
    }

    fn write(&mut self, row: &ConvergenceRow, mesh: &Mesh<f64>, p: usize, coeffs: &[Cplx<f64>]) -> Result<(), Error> {
        write_file(&self.dir.join(format!("mesh_{}.txt", row.iter)), |w| write_mesh(mesh, w))?;
        write_file(&self.dir.join(format!("solution_{}.txt", row.iter)), |w| write_solution(p, coeffs, w))?;
        self.csv.push(row)
    }
}

impl Observer for DirectoryExporter {
    fn iteration(&mut self, s: &Snapshot<'_>) -> Result<(), Error> {
        self.write(s.row, s.mesh, s.p, s.coeffs)
    }
}

/// Mesh and coefficients of one iteration.
pub struct IterationData<'a> {
    pub mesh: &'a Mesh<f64>,
    pub p: usize,
    pub coeffs: &'a [Cplx<f64>],
}

/// Write a finished run; `snapshots[i]` belongs to `rows[i]`.
pub fn export_run(rows: &[ConvergenceRow], snapshots: &[IterationData<'_>], dir: &Path) -> Result<(), Error> {
    if rows.len() != snapshots.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), found: snapshots.len() });
    }
    let mut out = DirectoryExporter::create(dir)?;
    for (row, s) in rows.iter().zip(snapshots) {
        out.write(row, s.mesh, s.p, s.coeffs)?;
    }
    Ok(())
}
