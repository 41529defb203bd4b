//! CSV serialization for spectral curves, basis matrices, and per-vertex
//! weight/reflectance tables.

use nalgebra::{Const, DMatrix, OMatrix};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::spectra::{wavelengths_nm, BandVector, SpectralBasis, SpectralCurve, N_BANDS};

use super::IoError;

/// `wavelength_nm,value` with 31 data rows, 400..700.
pub fn write_curve_csv(path: &Path, curve: &SpectralCurve<f64>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "wavelength_nm,value")?;
    for (k, nm) in wavelengths_nm().iter().enumerate() {
        writeln!(out, "{},{}", nm, curve.value(k))?;
    }
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<SpectralCurve<f64>, IoError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "wavelength_nm,value" {
        return Err(IoError::Malformed {
            path: path.display().to_string(),
            line: 1,
            what: "expected header `wavelength_nm,value`".into(),
        });
    }
    let mut samples = [0.0f64; N_BANDS];
    let expected = wavelengths_nm();
    let mut count = 0usize;
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if count >= N_BANDS {
            return Err(IoError::Malformed {
                path: path.display().to_string(),
                line: k + 2,
                what: "more than 31 data rows".into(),
            });
        }
        let (nm, value) = line.split_once(',').ok_or_else(|| IoError::Malformed {
            path: path.display().to_string(),
            line: k + 2,
            what: "expected `wavelength,value`".into(),
        })?;
        let nm: f64 = nm.trim().parse().map_err(|_| IoError::Malformed {
            path: path.display().to_string(),
            line: k + 2,
            what: "bad wavelength".into(),
        })?;
        if (nm - expected[count]).abs() > 1e-6 {
            return Err(IoError::Malformed {
                path: path.display().to_string(),
                line: k + 2,
                what: format!("wavelength {nm} out of order; expected {}", expected[count]),
            });
        }
        samples[count] = value.trim().parse().map_err(|_| IoError::Malformed {
            path: path.display().to_string(),
            line: k + 2,
            what: "bad value".into(),
        })?;
        count += 1;
    }
    if count != N_BANDS {
        return Err(IoError::Malformed {
            path: path.display().to_string(),
            line: count + 1,
            what: format!("expected 31 data rows, got {count}"),
        });
    }
    SpectralCurve::new(&samples).map_err(IoError::from)
}

/// Plain comma-separated matrix, one row per line.
pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols()).map(|c| matrix[(r, c)].to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, IoError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse()).collect();
        let row = row.map_err(|_| IoError::Malformed {
            path: path.display().to_string(),
            line: lineno + 1,
            what: "bad number".into(),
        })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(IoError::Malformed {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    what: "ragged rows".into(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Malformed {
            path: path.display().to_string(),
            line: 0,
            what: "empty matrix".into(),
        });
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |r, c| rows[r][c]))
}

#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSidecar {
    pub n_b: usize,
    pub dataset_hash: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

/// SHA-256 over the dataset's band values in order, hex-encoded.
pub fn dataset_hash(dataset: &[SpectralCurve<f64>]) -> String {
    let mut hasher = Sha256::new();
    for curve in dataset {
        for v in curve.samples().iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Basis matrix as a 31 x n_b CSV plus a one-line JSON sidecar.
pub fn write_basis_csv(
    path: &Path,
    basis: &SpectralBasis<f64>,
    dataset_hash: &str,
) -> Result<(), IoError> {
    let n_b = basis.n_b();
    let matrix = DMatrix::from_fn(N_BANDS, n_b, |r, c| basis.matrix()[(r, c)]);
    write_matrix_csv(path, &matrix)?;
    let sidecar = BasisSidecar {
        n_b,
        dataset_hash: dataset_hash.to_string(),
    };
    let json = serde_json::to_string(&sidecar)?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_basis_csv(path: &Path) -> Result<(SpectralBasis<f64>, BasisSidecar), IoError> {
    let matrix = read_matrix_csv(path)?;
    if matrix.nrows() != N_BANDS {
        return Err(IoError::Malformed {
            path: path.display().to_string(),
            line: 0,
            what: format!("basis must have 31 rows, got {}", matrix.nrows()),
        });
    }
    let sidecar: BasisSidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if sidecar.n_b != matrix.ncols() {
        return Err(IoError::Malformed {
            path: path.display().to_string(),
            line: 0,
            what: "sidecar n_b disagrees with matrix".into(),
        });
    }
    let fixed = OMatrix::<f64, Const<N_BANDS>, nalgebra::Dyn>::from_fn(
        matrix.ncols(),
        |r, c| matrix[(r, c)],
    );
    let basis = SpectralBasis::from_matrix(fixed, BandVector::zeros())?;
    Ok((basis, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn curve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let curve = SpectralCurve::from_fn(|nm| 0.2 + 0.5 * ((nm - 400.0) / 300.0)).unwrap();
        write_curve_csv(&path, &curve).unwrap();
        let back = read_curve_csv(&path).unwrap();
        for k in 0..N_BANDS {
            assert_relative_eq!(back.value(k), curve.value(k));
        }
    }

    #[test]
    fn curve_rejects_wrong_band_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.csv");
        std::fs::write(&path, "wavelength_nm,value\n400,0.5\n410,0.5\n").unwrap();
        assert!(matches!(read_curve_csv(&path), Err(IoError::Malformed { .. })));
    }

    #[test]
    fn basis_round_trip_checks_orthonormality() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.csv");
        let dataset: Vec<SpectralCurve<f64>> = (0..10)
            .map(|i| {
                SpectralCurve::from_fn(|nm| {
                    0.5 + 0.3 * ((nm - 400.0) / 60.0 + i as f64 * 0.7).sin()
                })
                .unwrap()
            })
            .collect();
        let basis = SpectralBasis::build(&dataset, 4).unwrap();
        let hash = dataset_hash(&dataset);
        write_basis_csv(&path, &basis, &hash).unwrap();
        let (back, sidecar) = read_basis_csv(&path).unwrap();
        assert_eq!(sidecar.n_b, 4);
        assert_eq!(sidecar.dataset_hash, hash);
        assert!(back.orthonormality_error() < 1e-10);
        let diff = (back.matrix() - basis.matrix()).abs().max();
        assert!(diff < 1e-12);
    }
}
