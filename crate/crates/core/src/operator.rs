//! Symmetric linear operators accessed only through matrix-vector products.
//!
//! Every algorithm downstream touches an operator through [`SymmetricOperator::apply`],
//! so dense, sparse and diagonal backends are interchangeable. Matrix Market
//! coordinate files are read into [`CsrOperator`] with both triangles stored.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lanczos::{lanczos, LanczosOptions};
use crate::slq::sample_unit_sphere;
use crate::tridiag_eig::eig_first_row;

/// An `n x n` real symmetric operator.
///
/// Implementations must be deterministic and immutable: the same input yields
/// bitwise-identical output, and concurrent calls are allowed.
pub trait SymmetricOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `A v` into `out`. Both slices have length `dim()`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; n];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// The full spectrum, ascending, when it is known without computation.
    fn known_spectrum(&self) -> Option<Vec<f64>> {
        None
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }

    fn known_spectrum(&self) -> Option<Vec<f64>> {
        (**self).known_spectrum()
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }

    fn known_spectrum(&self) -> Option<Vec<f64>> {
        (**self).known_spectrum()
    }
}

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    n: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("dense operator"));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        let scale = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (upper, lower) = (data[i * n + j], data[j * n + i]);
                if (upper - lower).abs() > 1e-12 * scale {
                    return Err(Error::Asymmetric {
                        row: i + 1,
                        col: j + 1,
                        value: upper,
                        mirror: lower,
                        line: None,
                    });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..n * n).map(|idx| f(idx / n, idx % n)).collect();
        Self::new(n, data)
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (row, o) in self.data.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
    }
}

/// Compressed sparse row storage of a symmetric matrix, both triangles present.
#[derive(Debug, Clone)]
pub struct CsrOperator {
    n: usize,
    offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl CsrOperator {
    /// Validates the structure (sorted, in-range columns) and symmetry to `1e-12` relative.
    pub fn new(
        n: usize,
        offsets: Vec<usize>,
        columns: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("sparse operator"));
        }
        if offsets.len() != n + 1 || offsets[0] != 0 {
            return Err(Error::InvalidStructure(format!(
                "expected {} row offsets starting at 0",
                n + 1
            )));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidStructure("row offsets decrease".into()));
        }
        let nnz = offsets[n];
        if columns.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidStructure(format!(
                "offsets declare {nnz} entries but found {} columns and {} values",
                columns.len(),
                values.len()
            )));
        }
        for row in 0..n {
            let cols = &columns[offsets[row]..offsets[row + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "column indices in row {} are not strictly increasing",
                    row + 1
                )));
            }
            if cols.last().is_some_and(|&c| c >= n) {
                return Err(Error::InvalidStructure(format!(
                    "column index out of range in row {}",
                    row + 1
                )));
            }
        }
        let op = Self {
            n,
            offsets,
            columns,
            values,
        };
        op.check_symmetry(|_, _| None)?;
        Ok(op)
    }

    /// Builds from `(row, col, value)` triplets with 0-based indices, summing duplicates.
    /// Every off-diagonal entry must be supplied in both triangles.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let (offsets, columns, values) = compress(n, triplets.iter().copied())?;
        Self::new(n, offsets, columns, values)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.offsets[row]..self.offsets[row + 1];
        match self.columns[range.clone()].binary_search(&col) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries as `(row, col, value)`, 0-based.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |row| {
            (self.offsets[row]..self.offsets[row + 1])
                .map(move |idx| (row, self.columns[idx], self.values[idx]))
        })
    }

    fn check_symmetry(&self, line_of: impl Fn(usize, usize) -> Option<usize>) -> Result<()> {
        for (row, col, value) in self.entries() {
            if col <= row {
                continue;
            }
            let mirror = self.get(col, row);
            if (value - mirror).abs() > 1e-12 * value.abs().max(mirror.abs()) {
                return Err(Error::Asymmetric {
                    row: row + 1,
                    col: col + 1,
                    value,
                    mirror,
                    line: line_of(row, col),
                });
            }
        }
        // entries present only in the lower triangle
        for (row, col, value) in self.entries() {
            if col < row && self.get(col, row) == 0.0 && value != 0.0 {
                return Err(Error::Asymmetric {
                    row: row + 1,
                    col: col + 1,
                    value,
                    mirror: 0.0,
                    line: line_of(row, col),
                });
            }
        }
        Ok(())
    }
}

fn compress(
    n: usize,
    triplets: impl Iterator<Item = (usize, usize, f64)>,
) -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (row, col, value) in triplets {
        if row >= n || col >= n {
            return Err(Error::InvalidStructure(format!(
                "entry ({}, {}) outside a {n}x{n} matrix",
                row + 1,
                col + 1
            )));
        }
        rows[row].push((col, value));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut columns = Vec::new();
    let mut values = Vec::new();
    offsets.push(0);
    for mut row in rows {
        row.sort_by_key(|&(c, _)| c);
        for (col, value) in row {
            if columns.len() > *offsets.last().unwrap() && columns.last() == Some(&col) {
                *values.last_mut().unwrap() += value;
            } else {
                columns.push(col);
                values.push(value);
            }
        }
        offsets.push(columns.len());
    }
    Ok((offsets, columns, values))
}

impl SymmetricOperator for CsrOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (row, o) in out.iter_mut().enumerate() {
            let range = self.offsets[row]..self.offsets[row + 1];
            *o = self.columns[range.clone()]
                .iter()
                .zip(&self.values[range])
                .map(|(&c, a)| a * v[c])
                .sum();
        }
    }
}

/// Diagonal operator `diag(λ_1, …, λ_n)`; its spectrum is known exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    diagonal: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::Empty("diagonal"));
        }
        if let Some(bad) = diagonal.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite eigenvalue {bad}"
            )));
        }
        Ok(Self { diagonal })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn eigenvalues_sorted(&self) -> Vec<f64> {
        let mut eigs = self.diagonal.clone();
        eigs.sort_by(f64::total_cmp);
        eigs
    }
}

impl SymmetricOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for ((o, d), x) in out.iter_mut().zip(&self.diagonal).zip(v) {
            *o = d * x;
        }
    }

    fn known_spectrum(&self) -> Option<Vec<f64>> {
        Some(self.eigenvalues_sorted())
    }
}

/// `diag(A, y)`: the operator with one extra eigenvalue appended.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedOperator<'a, O: ?Sized> {
    inner: &'a O,
    extra: f64,
}

impl<'a, O: SymmetricOperator + ?Sized> AugmentedOperator<'a, O> {
    pub fn new(inner: &'a O, extra: f64) -> Self {
        Self { inner, extra }
    }
}

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for AugmentedOperator<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.inner.dim();
        self.inner.apply_into(&v[..n], &mut out[..n]);
        out[n] = self.extra * v[n];
    }

    fn known_spectrum(&self) -> Option<Vec<f64>> {
        let mut eigs = self.inner.known_spectrum()?;
        eigs.push(self.extra);
        eigs.sort_by(f64::total_cmp);
        Some(eigs)
    }
}

/// Materializes the operator column by column (`n` matvecs). Row-major output.
pub fn to_dense<O: SymmetricOperator + ?Sized>(op: &O) -> Vec<f64> {
    let n = op.dim();
    let mut dense = vec![0.0; n * n];
    let mut unit = vec![0.0; n];
    let mut column = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        op.apply_into(&unit, &mut column);
        unit[j] = 0.0;
        for i in 0..n {
            dense[i * n + j] = column[i];
        }
    }
    dense
}

/// All eigenvalues, ascending: read off directly when known, otherwise from a
/// dense symmetric eigendecomposition of the materialized operator.
pub fn full_spectrum<O: SymmetricOperator + ?Sized>(op: &O) -> Vec<f64> {
    if let Some(eigs) = op.known_spectrum() {
        return eigs;
    }
    let n = op.dim();
    let dense = nalgebra::DMatrix::from_row_slice(n, n, &to_dense(op));
    let mut eigs: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Extreme eigenvalue estimates. `certified` is set only when the values are
/// exact (known spectrum, or a Krylov space that filled the whole space).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SpectralInterval {
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
}

impl SpectralInterval {
    pub fn width(&self) -> f64 {
        (self.upper - self.lower).abs()
    }

    /// Widens both ends by `relative * width`.
    pub fn widened(&self, relative: f64) -> Self {
        let margin = relative * self.width();
        Self {
            lower: self.lower - margin,
            upper: self.upper + margin,
            certified: self.certified,
        }
    }
}

pub const SPECTRAL_INTERVAL_STEPS: usize = 50;
const SPECTRAL_INTERVAL_SEED: u64 = 0x0005_eed0_f1a2_ce05;

/// Extreme Ritz values of a dedicated `min(50, n)`-step Lanczos run with
/// reorthogonalization; exact values when the spectrum is known.
pub fn spectral_interval<O: SymmetricOperator + ?Sized>(op: &O) -> Result<SpectralInterval> {
    if let Some(eigs) = op.known_spectrum() {
        return Ok(SpectralInterval {
            lower: eigs[0],
            upper: eigs[eigs.len() - 1],
            certified: true,
        });
    }
    let n = op.dim();
    let steps = SPECTRAL_INTERVAL_STEPS.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(SPECTRAL_INTERVAL_SEED);
    let start = sample_unit_sphere(n, &mut rng);
    let tri = lanczos(
        op,
        &start,
        &LanczosOptions::new(steps).reorthogonalize(true),
    )?;
    let ritz = eig_first_row(&tri)?;
    let nodes = ritz.eigenvalues();
    Ok(SpectralInterval {
        lower: nodes[0],
        upper: nodes[nodes.len() - 1],
        certified: tri.steps() == n,
    })
}

/// Reads a Matrix Market coordinate file (`real`, `integer` or `pattern`;
/// `symmetric` or `general`) into full CSR storage.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrOperator> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_matrix_market(BufReader::new(file)).map_err(|err| match err {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

pub fn read_matrix_market(reader: impl BufRead) -> Result<CsrOperator> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let io_err = |source| Error::Io {
        path: Default::default(),
        source,
    };

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header.map_err(io_err)?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(
            1,
            format!("not a Matrix Market header: {header:?}"),
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format {:?}", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field {other:?}"))),
    };
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut line_numbers: Vec<((usize, usize), usize)> = Vec::new();
    for (line_no, line) in lines {
        let line = line.map_err(io_err)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((rows, cols, _)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(
                    line_no,
                    "expected size line 'rows cols entries'".into(),
                ));
            }
            let parsed: Vec<usize> = fields
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(line_no, format!("bad size line: {e}")))?;
            if parsed[0] != parsed[1] {
                return Err(Error::NotSquare {
                    rows: parsed[0],
                    cols: parsed[1],
                });
            }
            if parsed[0] == 0 {
                return Err(parse_err(line_no, "matrix has zero rows".into()));
            }
            size = Some((parsed[0], parsed[1], parsed[2]));
            continue;
        };
        let expected = if field == Field::Pattern { 2 } else { 3 };
        if fields.len() != expected {
            return Err(parse_err(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let index = |s: &str, bound: usize| -> Result<usize> {
            let i: usize = s
                .parse()
                .map_err(|e| parse_err(line_no, format!("bad index {s:?}: {e}")))?;
            if i == 0 || i > bound {
                return Err(parse_err(
                    line_no,
                    format!("index {i} out of range 1..={bound}"),
                ));
            }
            Ok(i - 1)
        };
        let row = index(fields[0], rows)?;
        let col = index(fields[1], cols)?;
        let value = if field == Field::Pattern {
            1.0
        } else {
            let v: f64 = fields[2]
                .parse()
                .map_err(|e| parse_err(line_no, format!("bad value {:?}: {e}", fields[2])))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value {v}")));
            }
            v
        };
        triplets.push((row, col, value));
        line_numbers.push(((row, col), line_no));
        if symmetric && row != col {
            triplets.push((col, row, value));
        }
    }
    let Some((n, _, declared)) = size else {
        return Err(parse_err(1, "missing size line".into()));
    };
    if line_numbers.len() != declared {
        return Err(parse_err(
            line_numbers.last().map_or(1, |&(_, l)| l),
            format!("declared {declared} entries, found {}", line_numbers.len()),
        ));
    }
    let (offsets, columns, values) = compress(n, triplets.into_iter())?;
    let op = CsrOperator {
        n,
        offsets,
        columns,
        values,
    };
    line_numbers.sort_unstable();
    op.check_symmetry(|row, col| {
        [(row, col), (col, row)].iter().find_map(|key| {
            line_numbers
                .binary_search_by(|probe| probe.0.cmp(key))
                .ok()
                .map(|pos| line_numbers[pos].1)
        })
    })?;
    Ok(op)
}

/// Writes the lower triangle as a `real symmetric` coordinate file. Values use
/// shortest round-trip formatting, so reading back reproduces them exactly.
pub fn write_matrix_market(op: &CsrOperator, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    let lower: Vec<_> = op.entries().filter(|&(r, c, _)| c <= r).collect();
    writeln!(out, "{} {} {}", op.n, op.n, lower.len())?;
    for (row, col, value) in lower {
        writeln!(out, "{} {} {}", row + 1, col + 1, value)?;
    }
    Ok(())
}

impl From<&DiagonalOperator> for CsrOperator {
    fn from(diag: &DiagonalOperator) -> Self {
        let n = diag.dim();
        Self {
            n,
            offsets: (0..=n).collect(),
            columns: (0..n).collect(),
            values: diag.diagonal.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_symmetric(n: usize, density: f64, rng: &mut impl Rng) -> Vec<f64> {
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                if i == j || rng.random::<f64>() < density {
                    let v = rng.random::<f64>() * 2.0 - 1.0;
                    dense[i * n + j] = v;
                    dense[j * n + i] = v;
                }
            }
        }
        dense
    }

    fn csr_from_dense(n: usize, dense: &[f64]) -> CsrOperator {
        let triplets: Vec<_> = (0..n * n)
            .filter(|&idx| dense[idx] != 0.0)
            .map(|idx| (idx / n, idx % n, dense[idx]))
            .collect();
        CsrOperator::from_triplets(n, &triplets).unwrap()
    }

    #[test]
    fn diagonal_apply_scales_entrywise() {
        let op = DiagonalOperator::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(op.apply(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dense = random_symmetric(6, 0.5, &mut rng);
        let ops: Vec<Box<dyn SymmetricOperator>> = vec![
            Box::new(DenseOperator::new(6, dense.clone()).unwrap()),
            Box::new(csr_from_dense(6, &dense)),
            Box::new(DiagonalOperator::new(vec![1.0; 6]).unwrap()),
        ];
        for op in ops {
            assert_eq!(op.apply(&[0.0; 6]).unwrap(), vec![0.0; 6]);
        }
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let op = DiagonalOperator::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            op.apply(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn csr_first_column_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dense = random_symmetric(5, 0.4, &mut rng);
        let csr = csr_from_dense(5, &dense);
        let col = csr.apply(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let expected: Vec<f64> = (0..5).map(|i| dense[i * 5]).collect();
        assert_eq!(col, expected);
        assert_eq!(to_dense(&csr), dense);
    }

    #[test]
    fn backends_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let diag: Vec<f64> = (0..9).map(|_| rng.random::<f64>() - 0.5).collect();
        let dense = DenseOperator::from_fn(9, |i, j| if i == j { diag[i] } else { 0.0 }).unwrap();
        let csr = CsrOperator::from(&DiagonalOperator::new(diag.clone()).unwrap());
        let diag_op = DiagonalOperator::new(diag).unwrap();
        for _ in 0..20 {
            let v: Vec<f64> = (0..9).map(|_| rng.random::<f64>() - 0.5).collect();
            let a = dense.apply(&v).unwrap();
            let b = csr.apply(&v).unwrap();
            let c = diag_op.apply(&v).unwrap();
            for i in 0..9 {
                assert!((a[i] - b[i]).abs() <= 1e-14);
                assert!((a[i] - c[i]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn symmetry_of_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let dense = random_symmetric(n, 0.3, &mut rng);
        let frob = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ops: Vec<Box<dyn SymmetricOperator>> = vec![
            Box::new(DenseOperator::new(n, dense.clone()).unwrap()),
            Box::new(csr_from_dense(n, &dense)),
            Box::new(
                DiagonalOperator::new(dense.iter().step_by(n + 1).copied().collect()).unwrap(),
            ),
        ];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for op in &ops {
            for _ in 0..100 {
                let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                let lhs = dot(&u, &op.apply(&v).unwrap());
                let rhs = dot(&op.apply(&u).unwrap(), &v);
                let scale = dot(&u, &u).sqrt() * dot(&v, &v).sqrt() * frob;
                assert!((lhs - rhs).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn dense_rejects_asymmetry() {
        assert!(matches!(
            DenseOperator::new(2, vec![1.0, 2.0, 3.0, 1.0]),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn csr_rejects_bad_structure() {
        assert!(CsrOperator::new(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrOperator::new(2, vec![0, 1, 1], vec![0], vec![1.0]).is_ok());
        assert!(matches!(
            CsrOperator::new(2, vec![0, 1, 1], vec![1], vec![1.0]),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn matrix_market_diagonal() {
        let text =
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 1\n2 2 2\n";
        let op = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(op.apply(&[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn matrix_market_symmetric_lower_triangle_is_mirrored() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 1.0\n";
        let op = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(op.apply(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(op.apply(&[0.0, 1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn matrix_market_pattern_and_general() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n3 3 4\n1 2\n2 1\n2 3\n3 2\n";
        let op = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(op.apply(&[0.0, 1.0, 0.0]).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn matrix_market_errors_carry_line_numbers() {
        let asym = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 1.5\n";
        match read_matrix_market(asym.as_bytes()) {
            Err(Error::Asymmetric { line: Some(3), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 x 1.0\n";
        assert!(matches!(
            read_matrix_market(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let rect = "%%MatrixMarket matrix coordinate real general\n2 3 0\n";
        assert!(matches!(
            read_matrix_market(rect.as_bytes()),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        let header = "%%MatrixMarket matrix array real general\n";
        assert!(matches!(
            read_matrix_market(header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n";
        assert!(matches!(
            read_matrix_market(short.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_matrix_market("/nonexistent/m.mtx").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/m.mtx"));
        assert!(err.is_usage());
    }

    #[test]
    fn matrix_market_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dense = random_symmetric(10, 0.5, &mut rng);
        let csr = csr_from_dense(10, &dense);
        let mut buf = Vec::new();
        write_matrix_market(&csr, &mut buf).unwrap();
        let back = read_matrix_market(buf.as_slice()).unwrap();
        for _ in 0..10 {
            let v: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
            let a = csr.apply(&v).unwrap();
            let b = back.apply(&v).unwrap();
            for i in 0..10 {
                assert!((a[i] - b[i]).abs() <= 1e-15 * a[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn spectral_interval_exact_for_diagonal() {
        let op = DiagonalOperator::new(vec![0.0, -1.0, 1.0]).unwrap();
        let iv = spectral_interval(&op).unwrap();
        assert_eq!((iv.lower, iv.upper, iv.certified), (-1.0, 1.0, true));
    }

    #[test]
    fn spectral_interval_ritz_estimate() {
        let n = 5000;
        let eigs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let triplets: Vec<_> = eigs.iter().enumerate().map(|(i, &e)| (i, i, e)).collect();
        let op = CsrOperator::from_triplets(n, &triplets).unwrap();
        let iv = spectral_interval(&op).unwrap();
        assert!(!iv.certified);
        assert!(iv.lower.abs() < 1e-3, "{iv:?}");
        assert!((iv.upper - 1.0).abs() < 1e-3, "{iv:?}");
    }

    #[test]
    fn spectral_interval_one_by_one() {
        let op = DenseOperator::new(1, vec![3.5]).unwrap();
        let iv = spectral_interval(&op).unwrap();
        assert_eq!((iv.lower, iv.upper, iv.certified), (3.5, 3.5, true));
    }

    #[test]
    fn full_spectrum_of_dense_matches_diagonal() {
        let op = DenseOperator::from_fn(4, |i, j| {
            if i == j {
                [3.0, -1.0, 2.0, 0.5][i]
            } else {
                0.0
            }
        })
        .unwrap();
        let eigs = full_spectrum(&op);
        for (a, b) in eigs.iter().zip([-1.0, 0.5, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn augmented_operator_appends_eigenvalue() {
        let op = DiagonalOperator::new(vec![1.0, 2.0]).unwrap();
        let aug = AugmentedOperator::new(&op, -3.0);
        assert_eq!(aug.dim(), 3);
        assert_eq!(aug.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 2.0, -3.0]);
        assert_eq!(aug.known_spectrum().unwrap(), vec![-3.0, 1.0, 2.0]);
    }
}
