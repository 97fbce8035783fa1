//! Estimation inputs: outcome, exposure, candidate instruments, covariates.
//!
//! Instruments are stored as reals even when they are 0/1 genotype
//! indicators. Constant instrument columns are rejected rather than
//! dropped, since dropping one would silently change `K`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Mr2Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Candidate instruments `G` (n×K) and optional covariates `M` (n×p).
#[derive(Debug, Clone)]
pub struct Genotypes<T> {
    g: Matrix<T>,
    m: Option<Matrix<T>>,
    instrument_names: Vec<String>,
    covariate_names: Vec<String>,
}

impl<T: Real> Genotypes<T> {
    pub fn new(
        g: Matrix<T>,
        instrument_names: Vec<String>,
        m: Option<(Matrix<T>, Vec<String>)>,
    ) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() == 0 {
            return Err(Mr2Error::InvalidData(
                "at least one instrument is required".into(),
            ));
        }
        if n < 2 {
            return Err(Mr2Error::InvalidData(format!("need n >= 2 rows, got {n}")));
        }
        if instrument_names.len() != g.ncols() {
            return Err(Mr2Error::InvalidData(
                "instrument name count mismatch".into(),
            ));
        }
        check_finite(&g, &instrument_names)?;
        for (j, c) in g.columns().enumerate() {
            if c.iter().all(|&v| v == c[0]) {
                return Err(Mr2Error::DegenerateInstrument(instrument_names[j].clone()));
            }
        }
        let (m, covariate_names) = match m {
            Some((m, names)) => {
                if m.nrows() != n {
                    return Err(Mr2Error::InvalidData(format!(
                        "covariates have {} rows, instruments {n}",
                        m.nrows()
                    )));
                }
                if names.len() != m.ncols() {
                    return Err(Mr2Error::InvalidData(
                        "covariate name count mismatch".into(),
                    ));
                }
                check_finite(&m, &names)?;
                (Some(m), names)
            }
            None => (None, Vec::new()),
        };
        Ok(Self {
            g,
            m,
            instrument_names,
            covariate_names,
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// Number of candidate instruments `K`.
    pub fn k(&self) -> usize {
        self.g.ncols()
    }

    pub fn g(&self) -> &Matrix<T> {
        &self.g
    }

    pub fn m(&self) -> Option<&Matrix<T>> {
        self.m.as_ref()
    }

    pub fn instrument_names(&self) -> &[String] {
        &self.instrument_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Plug-in means `Ê(G_k)`, one per instrument.
    pub fn column_means(&self) -> Vec<T> {
        self.g.columns().map(crate::scalar::mean).collect()
    }

    /// True if every instrument entry is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.g
            .columns()
            .all(|c| c.iter().all(|&v| v == T::zero() || v == T::one()))
    }

    /// Errors unless every instrument column is 0/1.
    pub fn require_binary(&self) -> Result<()> {
        for (j, c) in self.g.columns().enumerate() {
            if let Some(i) = c.iter().position(|&v| v != T::zero() && v != T::one()) {
                return Err(Mr2Error::Unsupported(format!(
                    "instrument '{}' is not binary (row {} = {})",
                    self.instrument_names[j],
                    i + 1,
                    c[i]
                )));
            }
        }
        Ok(())
    }
}

/// The empirical sample `(Y, A, G_1..G_K[, M])`.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    y: Vec<T>,
    a: Vec<T>,
    genotypes: Genotypes<T>,
    outcome_name: String,
    exposure_name: String,
}

impl<T: Real> Dataset<T> {
    pub fn new(y: Vec<T>, a: Vec<T>, genotypes: Genotypes<T>) -> Result<Self> {
        Self::with_names(y, a, genotypes, "Y".into(), "A".into())
    }

    pub fn with_names(
        y: Vec<T>,
        a: Vec<T>,
        genotypes: Genotypes<T>,
        outcome_name: String,
        exposure_name: String,
    ) -> Result<Self> {
        let n = genotypes.n();
        if y.len() != n || a.len() != n {
            return Err(Mr2Error::InvalidData(format!(
                "length mismatch: y={}, a={}, g={n}",
                y.len(),
                a.len()
            )));
        }
        for (col, name) in [(&y, &outcome_name), (&a, &exposure_name)] {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Mr2Error::NonFinite {
                    row: i + 1,
                    column: name.clone(),
                });
            }
        }
        Ok(Self {
            y,
            a,
            genotypes,
            outcome_name,
            exposure_name,
        })
    }

    /// Shorthand for an uncovaried dataset from plain columns.
    pub fn from_columns(y: Vec<T>, a: Vec<T>, g_columns: Vec<Vec<T>>) -> Result<Self> {
        let names = (1..=g_columns.len()).map(|k| format!("G{k}")).collect();
        let g = Matrix::from_columns(g_columns)?;
        Self::new(y, a, Genotypes::new(g, names, None)?)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.genotypes.k()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn g(&self) -> &Matrix<T> {
        self.genotypes.g()
    }

    pub fn m(&self) -> Option<&Matrix<T>> {
        self.genotypes.m()
    }

    pub fn genotypes(&self) -> &Genotypes<T> {
        &self.genotypes
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn exposure_name(&self) -> &str {
        &self.exposure_name
    }

    pub fn column_means(&self) -> Vec<T> {
        self.genotypes.column_means()
    }

    /// Copy with `Y` and `A` replaced.
    pub fn with_outcome_exposure(&self, y: Vec<T>, a: Vec<T>) -> Result<Self> {
        Self::with_names(
            y,
            a,
            self.genotypes.clone(),
            self.outcome_name.clone(),
            self.exposure_name.clone(),
        )
    }

    /// Writes a header row followed by `Y, A, G..., M...`. Values use the
    /// shortest representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec![self.outcome_name.clone(), self.exposure_name.clone()];
        header.extend(self.genotypes.instrument_names.iter().cloned());
        header.extend(self.genotypes.covariate_names.iter().cloned());
        wr.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n() {
            let mut rec = vec![self.y[i].as_f64(), self.a[i].as_f64()];
            rec.extend(self.g().row(i).into_iter().map(Real::as_f64));
            if let Some(m) = self.m() {
                rec.extend(m.row(i).into_iter().map(Real::as_f64));
            }
            wr.write_record(rec.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Mr2Error::Csv(e.to_string()))
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|source| Mr2Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

fn check_finite<T: Real>(m: &Matrix<T>, names: &[String]) -> Result<()> {
    for (j, c) in m.columns().enumerate() {
        if let Some(i) = c.iter().position(|v| !v.is_finite()) {
            return Err(Mr2Error::NonFinite {
                row: i + 1,
                column: names[j].clone(),
            });
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Mr2Error {
    Mr2Error::Csv(e.to_string())
}

/// Column selection for CSV ingestion.
#[derive(Debug, Clone, Default)]
pub struct CsvColumns {
    pub outcome: String,
    pub exposure: String,
    pub instruments: Vec<String>,
    pub covariates: Vec<String>,
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl RawTable {
    fn read<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let header: Vec<String> = rd
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_owned)
            .collect();
        let rows = rd
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(csv_err)?;
        Ok(Self { header, rows })
    }

    fn column<T: Real>(&self, name: &str) -> Result<Vec<T>> {
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Mr2Error::MissingColumn(name.to_owned()))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let cell = rec.get(j).unwrap_or("");
                let bad = || Mr2Error::Parse {
                    row: i + 1,
                    column: name.to_owned(),
                    value: cell.to_owned(),
                };
                let v: f64 = cell.parse().map_err(|_| bad())?;
                if !v.is_finite() {
                    return Err(Mr2Error::NonFinite {
                        row: i + 1,
                        column: name.to_owned(),
                    });
                }
                T::from_f64(v).ok_or_else(bad)
            })
            .collect()
    }

    fn matrix<T: Real>(&self, names: &[String]) -> Result<Matrix<T>> {
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(cols)
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Mr2Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn genotypes_from_table<T: Real>(
    t: &RawTable,
    instruments: &[String],
    covariates: &[String],
) -> Result<Genotypes<T>> {
    if instruments.is_empty() {
        return Err(Mr2Error::Parameter("no instrument columns given".into()));
    }
    let g = t.matrix(instruments)?;
    let m = if covariates.is_empty() {
        None
    } else {
        Some((t.matrix(covariates)?, covariates.to_vec()))
    };
    Genotypes::new(g, instruments.to_vec(), m)
}

/// Reads and validates a dataset from CSV.
pub fn read_csv<T: Real, R: Read>(r: R, cols: &CsvColumns) -> Result<Dataset<T>> {
    let t = RawTable::read(r)?;
    let y = t.column(&cols.outcome)?;
    let a = t.column(&cols.exposure)?;
    let genotypes = genotypes_from_table(&t, &cols.instruments, &cols.covariates)?;
    Dataset::with_names(y, a, genotypes, cols.outcome.clone(), cols.exposure.clone())
}

pub fn load_csv<T: Real>(path: impl AsRef<Path>, cols: &CsvColumns) -> Result<Dataset<T>> {
    read_csv(open(path.as_ref())?, cols)
}

/// Reads only instrument (and covariate) columns, for instrument export.
pub fn load_genotypes_csv<T: Real>(
    path: impl AsRef<Path>,
    instruments: &[String],
    covariates: &[String],
) -> Result<Genotypes<T>> {
    let t = RawTable::read(open(path.as_ref())?)?;
    genotypes_from_table(&t, instruments, covariates)
}
