//! On-disk formats: Matrix Market and dense text matrices, edge-list graphs,
//! spectra, moment vectors, density estimates and plot CSVs.
//!
//! Readers report failures as [`CliError::Input`]; everything here is pure
//! parsing and serialization with no numerical policy of its own.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kpm_core::cheb::ChebyshevSeries;
use kpm_core::{
    DensityEstimate, DensityForm, DiscreteSpectrum, GraphAccess, MomentVector, Provenance, SymmetricMatrix,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Form tag written into every density file: `q = w · Σ a_k T̄_k`.
pub const DENSITY_FORM_TAG: &str = "w-times-normalized-chebyshev";

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_f64(path: &Path, line: usize, token: &str) -> CliResult<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::input(path, format!("line {line}: expected a finite number, got {token:?}"))),
    }
}

fn parse_index(path: &Path, line: usize, token: &str, n: usize) -> CliResult<usize> {
    match token.parse::<usize>() {
        Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
        _ => Err(CliError::input(path, format!("line {line}: index {token:?} outside 1..={n}"))),
    }
}

// ---------------------------------------------------------------------------
// Matrices

/// Read a symmetric matrix: Matrix Market if the file starts with the
/// `%%MatrixMarket` banner, otherwise whitespace-separated dense rows.
pub fn read_matrix(path: &Path) -> CliResult<SymmetricMatrix> {
    let text = read_text(path)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(path, &text)
    } else {
        parse_dense(path, &text)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

/// Symmetric coordinate Matrix Market (`real`, `integer` or `pattern`).
/// Entries may sit in either triangle; a pair `(i, j)` and `(j, i)` is
/// rejected since the format stores each off-diagonal entry once.
pub fn parse_matrix_market(path: &Path, text: &str) -> CliResult<SymmetricMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| CliError::input(path, "empty file"))?;
    let header: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if header.len() != 5 || header[0] != "%%matrixmarket" || header[1] != "matrix" {
        return Err(CliError::input(path, format!("malformed banner {banner:?}")));
    }
    if header[2] != "coordinate" {
        return Err(CliError::input(path, format!("unsupported layout {:?}; only coordinate is read", header[2])));
    }
    let field = match header[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(CliError::input(path, format!("unsupported field {other:?}; only real symmetric data"))),
    };
    if header[4] != "symmetric" {
        return Err(CliError::input(path, format!("unsupported symmetry {:?}; expected symmetric", header[4])));
    }

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| CliError::input(path, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let parse_dim = |t: &str| {
        t.parse::<usize>().map_err(|_| CliError::input(path, format!("line {size_line}: bad size {t:?}")))
    };
    if dims.len() != 3 {
        return Err(CliError::input(path, format!("line {size_line}: expected 'rows cols entries'")));
    }
    let (rows, cols, entries) = (parse_dim(dims[0])?, parse_dim(dims[1])?, parse_dim(dims[2])?);
    if rows != cols || rows == 0 {
        return Err(CliError::input(path, format!("symmetric matrix must be square and non-empty, got {rows}x{cols}")));
    }

    let mut seen = std::collections::HashSet::with_capacity(entries);
    let mut triplets = Vec::with_capacity(entries);
    for (line, entry) in body {
        let tokens: Vec<&str> = entry.split_whitespace().collect();
        let expected = if field == Field::Pattern { 2 } else { 3 };
        if tokens.len() != expected {
            return Err(CliError::input(path, format!("line {line}: expected {expected} fields, got {}", tokens.len())));
        }
        let i = parse_index(path, line, tokens[0], rows)?;
        let j = parse_index(path, line, tokens[1], rows)?;
        let v = if field == Field::Pattern { 1.0 } else { parse_f64(path, line, tokens[2])? };
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if !seen.insert((i, j)) {
            return Err(CliError::input(path, format!("line {line}: entry ({}, {}) given twice", i + 1, j + 1)));
        }
        triplets.push((i, j, v));
    }
    if triplets.len() != entries {
        return Err(CliError::input(path, format!("size line promises {entries} entries, found {}", triplets.len())));
    }
    SymmetricMatrix::sparse_from_triplets(rows, &triplets).map_err(|e| CliError::input(path, e))
}

/// Dense matrix, one row per line. Blank lines and `#` comments are skipped.
pub fn parse_dense(path: &Path, text: &str) -> CliResult<SymmetricMatrix> {
    let mut data = Vec::new();
    let mut n = None;
    let mut rows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = data.len();
        for token in line.split_whitespace() {
            data.push(parse_f64(path, idx + 1, token)?);
        }
        let width = data.len() - before;
        match n {
            None => n = Some(width),
            Some(w) if w != width => {
                return Err(CliError::input(path, format!("line {}: row has {width} entries, expected {w}", idx + 1)))
            }
            _ => {}
        }
        rows += 1;
    }
    let n = n.ok_or_else(|| CliError::input(path, "no matrix rows"))?;
    if rows != n {
        return Err(CliError::input(path, format!("matrix is {rows}x{n}, not square")));
    }
    SymmetricMatrix::dense_from_full(n, &data).map_err(|e| CliError::input(path, e))
}

/// Write the lower triangle as symmetric coordinate Matrix Market.
pub fn write_matrix_market(path: &Path, matrix: &SymmetricMatrix) -> CliResult<()> {
    let entries = matrix.lower_entries();
    let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", matrix.n(), matrix.n(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
    }
    write_text(path, &out)
}

// ---------------------------------------------------------------------------
// Graphs

/// Edge list: first line `n m`, then `m` lines `u v`, 1-indexed. Duplicate
/// edges collapse at load; the edge count must match the lines present.
pub fn read_graph(path: &Path) -> CliResult<GraphAccess> {
    let text = read_text(path)?;
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| CliError::input(path, "empty graph file"))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| CliError::input(path, format!("line {hl}: bad header token {t:?}"))))
        .collect::<CliResult<_>>()?;
    let [n, m] = head[..] else {
        return Err(CliError::input(path, format!("line {hl}: header must be 'n m'")));
    };
    let mut edges = Vec::with_capacity(m);
    for (line, entry) in lines {
        let tokens: Vec<&str> = entry.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(CliError::input(path, format!("line {line}: expected 'u v'")));
        }
        edges.push((parse_index(path, line, tokens[0], n)?, parse_index(path, line, tokens[1], n)?));
    }
    if edges.len() != m {
        return Err(CliError::input(path, format!("header promises {m} edges, found {}", edges.len())));
    }
    GraphAccess::from_edges(n, &edges).map_err(|e| CliError::input(path, e))
}

pub fn format_graph(graph: &GraphAccess) -> String {
    let mut out = String::with_capacity(16 * graph.edge_count() + 16);
    let _ = writeln!(out, "{} {}", graph.n(), graph.edge_count());
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{} {}", u + 1, v + 1);
    }
    out
}

pub fn write_graph(path: &Path, graph: &GraphAccess) -> CliResult<()> {
    write_text(path, &format_graph(graph))
}

// ---------------------------------------------------------------------------
// Spectra

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumFile {
    n: usize,
    values: Vec<f64>,
}

/// Spectrum as JSON `{n, values}` (when the content is a JSON object) or as
/// one eigenvalue per line.
pub fn read_spectrum(path: &Path) -> CliResult<DiscreteSpectrum> {
    let text = read_text(path)?;
    let values = if text.trim_start().starts_with('{') {
        let file: SpectrumFile = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
        if file.n != file.values.len() {
            return Err(CliError::input(path, format!("n = {} but {} values", file.n, file.values.len())));
        }
        file.values
    } else {
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if !line.is_empty() && !line.starts_with('#') {
                values.push(parse_f64(path, idx + 1, line)?);
            }
        }
        values
    };
    DiscreteSpectrum::new(values).map_err(|e| CliError::input(path, e))
}

/// Write `{n, values}` JSON for `.json` paths, one value per line otherwise.
pub fn write_spectrum(path: &Path, spectrum: &DiscreteSpectrum) -> CliResult<()> {
    if is_json(path) {
        return write_json(path, &SpectrumFile { n: spectrum.len(), values: spectrum.values().to_vec() });
    }
    let mut out = String::with_capacity(24 * spectrum.len());
    for v in spectrum.values() {
        let _ = writeln!(out, "{v:e}");
    }
    write_text(path, &out)
}

// ---------------------------------------------------------------------------
// Moments

#[derive(Debug, Serialize, Deserialize)]
struct MomentFile {
    #[serde(rename = "N")]
    degree: usize,
    ell: usize,
    seed: u64,
    provenance: String,
    values: Vec<f64>,
}

pub fn write_moments(path: &Path, moments: &MomentVector) -> CliResult<()> {
    write_json(
        path,
        &MomentFile {
            degree: moments.degree(),
            ell: moments.ell(),
            seed: moments.seed(),
            provenance: moments.provenance().as_str().to_owned(),
            values: moments.values().to_vec(),
        },
    )
}

pub fn read_moments(path: &Path) -> CliResult<MomentVector> {
    let file: MomentFile = read_json(path)?;
    let provenance = Provenance::parse(&file.provenance)
        .ok_or_else(|| CliError::input(path, format!("unknown provenance {:?}", file.provenance)))?;
    MomentVector::new(file.degree, file.values, provenance, file.ell, file.seed).map_err(|e| CliError::input(path, e))
}

// ---------------------------------------------------------------------------
// Densities

/// Everything needed to rerun or interpret a density, minus timings so
/// that reruns are byte-identical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityMetadata {
    /// `idealized` or `shifted-rescaled`.
    pub kind: String,
    pub method: String,
    /// Matrix dimension or vertex count.
    pub n: usize,
    pub ell: usize,
    pub seed: u64,
    pub eps_mv: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_matvec: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    /// Factor the input was multiplied by before estimation (1 if unscaled).
    pub scale_factor: f64,
    /// Density reflected `x ↦ −x` to describe the normalized Laplacian.
    pub laplacian_reflected: bool,
    /// Add this to the density's argument for Laplacian coordinates.
    pub affine_shift: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DensityFile {
    #[serde(rename = "N")]
    degree: usize,
    coefficients: Vec<f64>,
    form: String,
    metadata: DensityMetadata,
}

pub fn density_json(q: &DensityEstimate, metadata: &DensityMetadata) -> CliResult<String> {
    let file = DensityFile {
        degree: q.degree(),
        coefficients: q.coeffs().to_vec(),
        form: DENSITY_FORM_TAG.to_owned(),
        metadata: DensityMetadata {
            kind: q.form().as_str().to_owned(),
            laplacian_reflected: q.is_reflected(),
            affine_shift: if q.is_reflected() { 1.0 } else { 0.0 },
            ..metadata.clone()
        },
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_density(path: &Path, q: &DensityEstimate, metadata: &DensityMetadata) -> CliResult<()> {
    write_text(path, &density_json(q, metadata)?)
}

pub fn read_density(path: &Path) -> CliResult<(DensityEstimate, DensityMetadata)> {
    let file: DensityFile = read_json(path)?;
    if file.form != DENSITY_FORM_TAG {
        return Err(CliError::input(path, format!("unknown density form {:?}", file.form)));
    }
    if file.coefficients.len() != file.degree + 1 {
        return Err(CliError::input(
            path,
            format!("N = {} needs {} coefficients, found {}", file.degree, file.degree + 1, file.coefficients.len()),
        ));
    }
    let form = DensityForm::parse(&file.metadata.kind)
        .ok_or_else(|| CliError::input(path, format!("unknown density kind {:?}", file.metadata.kind)))?;
    let series = ChebyshevSeries::new(file.coefficients).map_err(|e| CliError::input(path, e))?;
    let q = DensityEstimate::from_parts(series, form, file.metadata.laplacian_reflected)
        .map_err(|e| CliError::input(path, e))?;
    Ok((q, file.metadata))
}

// ---------------------------------------------------------------------------
// Tables

/// Minimal CSV writer: a header row and rows of pre-formatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `x,q` plot data.
pub fn write_plot_csv(path: &Path, points: &[(f64, f64)]) -> CliResult<()> {
    write_text(path, &csv(&["x", "q"], points.iter().map(|(x, q)| vec![format!("{x:e}"), format!("{q:e}")])))
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    write_text(path, &csv(header, rows))
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_json(path, value)
}

pub fn write_text_file(path: &Path, text: &str) -> CliResult<()> {
    write_text(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_market_pattern_and_triangles() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 2\n2 1\n2 3\n";
        let m = parse_matrix_market(Path::new("t.mtx"), text).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(2, 1), 1.0);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn matrix_market_rejects_general_and_mirrored_pairs() {
        let p = Path::new("t.mtx");
        assert!(parse_matrix_market(p, "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n").is_err());
        assert!(parse_matrix_market(p, "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 2 1\n2 1 1\n").is_err());
        assert!(parse_matrix_market(p, "%%MatrixMarket matrix array real symmetric\n1 1\n1\n").is_err());
    }

    #[test]
    fn dense_rejects_ragged_and_asymmetric() {
        let p = Path::new("t.txt");
        assert!(parse_dense(p, "1 2\n3\n").is_err());
        assert!(parse_dense(p, "0 1\n2 0\n").is_err());
        assert_eq!(parse_dense(p, "# c\n0 0.5\n0.5 0\n").unwrap().get(1, 0), 0.5);
    }
}
