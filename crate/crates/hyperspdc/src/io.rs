//! Plot-ready CSV export and import: matrices with axis headers, column
//! tables, poling patterns, projection sets, and density matrices.
//!
//! Lines starting with `#` are metadata comments and are skipped on read.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::crystal::PolingPattern;
use crate::error::{Error, Result};
use crate::tomo::{DensityMatrix, ProjectionSet, Setting};

fn parse_f64(field: &str, context: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number {field:?} in {context}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Writes a real matrix with axis headers: the first data row holds the
/// column coordinates, each following row starts with its row coordinate.
pub fn write_matrix_csv(
    path: &Path,
    comments: &[String],
    row_axis: &[f64],
    col_axis: &[f64],
    matrix: &DMatrix<f64>,
) -> Result<()> {
    if matrix.nrows() != row_axis.len() || matrix.ncols() != col_axis.len() {
        return Err(Error::Shape("matrix does not match its axes".into()));
    }
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("axis");
    for v in col_axis {
        write!(out, ",{v:e}").unwrap();
    }
    out.push('\n');
    for (r, rv) in row_axis.iter().enumerate() {
        write!(out, "{rv:e}").unwrap();
        for c in 0..col_axis.len() {
            write!(out, ",{:e}", matrix[(r, c)]).unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = data_lines(&text);
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let col_axis: Vec<f64> = header
        .split(',')
        .skip(1)
        .map(|f| parse_f64(f, "column header"))
        .collect::<Result<_>>()?;
    let mut row_axis = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let mut fields = line.split(',');
        let rv = fields
            .next()
            .ok_or_else(|| Error::Parse("empty row".into()))?;
        row_axis.push(parse_f64(rv, "row coordinate")?);
        let row: Vec<f64> = fields
            .map(|f| parse_f64(f, "matrix entry"))
            .collect::<Result<_>>()?;
        if row.len() != col_axis.len() {
            return Err(Error::Parse(format!(
                "row {} has {} entries, expected {}",
                row_axis.len(),
                row.len(),
                col_axis.len()
            )));
        }
        values.extend(row);
    }
    if row_axis.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    let matrix = DMatrix::from_row_slice(row_axis.len(), col_axis.len(), &values);
    Ok((row_axis, col_axis, matrix))
}

/// Writes named columns of equal length.
pub fn write_columns_csv(
    path: &Path,
    comments: &[String],
    headers: &[&str],
    columns: &[&[f64]],
) -> Result<()> {
    if headers.len() != columns.len() || columns.is_empty() {
        return Err(Error::Shape("headers and columns must match".into()));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Shape("columns must have equal length".into()));
    }
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    writeln!(out, "{}", headers.join(",")).unwrap();
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| format!("{:e}", c[i])).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a column table written by [`write_columns_csv`].
pub fn read_columns_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = data_lines(&text);
    let headers: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row with {} fields, expected {}",
                fields.len(),
                headers.len()
            )));
        }
        for (col, f) in columns.iter_mut().zip(&fields) {
            col.push(parse_f64(f, "column entry")?);
        }
    }
    Ok((headers, columns))
}

/// Writes a poling pattern as (boundary_mm, sign) rows; the sign on each
/// row applies to the domain starting at that boundary, and the final row
/// carries the crystal end with sign 0.
pub fn write_poling_csv(path: &Path, pattern: &PolingPattern) -> Result<()> {
    let mut out = String::from("boundary_mm,sign\n");
    for (i, &b) in pattern.boundaries.iter().enumerate() {
        let sign = if i < pattern.signs.len() {
            pattern.signs[i] as i32
        } else {
            0
        };
        writeln!(out, "{b:e},{sign}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a poling pattern written by [`write_poling_csv`].
pub fn read_poling_csv(path: &Path) -> Result<PolingPattern> {
    let text = std::fs::read_to_string(path)?;
    let mut boundaries = Vec::new();
    let mut signs = Vec::new();
    for line in data_lines(&text).skip(1) {
        let (b, s) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad poling row {line:?}")))?;
        boundaries.push(parse_f64(b, "boundary")?);
        signs.push(parse_f64(s, "sign")? as i8);
    }
    if signs.last() == Some(&0) {
        signs.pop();
    }
    let pattern = PolingPattern { boundaries, signs };
    pattern.validate()?;
    Ok(pattern)
}

/// Writes a projection set as (setting_a, setting_b, counts) rows.
pub fn write_projection_csv(path: &Path, set: &ProjectionSet) -> Result<()> {
    let mut out = String::from("setting_a,setting_b,counts\n");
    for ((a, b), n) in set.settings.iter().zip(&set.counts) {
        writeln!(out, "{},{},{n}", a.as_str(), b.as_str()).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a projection set written by [`write_projection_csv`].
pub fn read_projection_csv(path: &Path) -> Result<ProjectionSet> {
    let text = std::fs::read_to_string(path)?;
    let mut settings = Vec::new();
    let mut counts = Vec::new();
    for line in data_lines(&text).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad projection row {line:?}")));
        }
        settings.push((Setting::parse(fields[0])?, Setting::parse(fields[1])?));
        counts.push(parse_f64(fields[2], "counts")?);
    }
    let set = ProjectionSet { settings, counts };
    set.validate()?;
    Ok(set)
}

/// Writes a density matrix as a 4×4 real block followed by a 4×4
/// imaginary block.
pub fn write_density_matrix_csv(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let m = rho.matrix();
    let mut out = String::from("# basis: HH, HV, VH, VV\n# real part\n");
    let block = |out: &mut String, f: &dyn Fn(&Complex64) -> f64| {
        for r in 0..4 {
            let row: Vec<String> = (0..4).map(|c| format!("{:e}", f(&m[(r, c)]))).collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
    };
    block(&mut out, &|v| v.re);
    out.push_str("# imaginary part\n");
    block(&mut out, &|v| v.im);
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a density matrix written by [`write_density_matrix_csv`].
pub fn read_density_matrix_csv(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = data_lines(&text)
        .map(|line| {
            line.split(',')
                .map(|f| parse_f64(f, "density matrix entry"))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    if rows.len() != 8 || rows.iter().any(|r| r.len() != 4) {
        return Err(Error::Parse(
            "expected 4 real rows followed by 4 imaginary rows".into(),
        ));
    }
    let mut m = Matrix4::<Complex64>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            m[(r, c)] = Complex64::new(rows[r][c], rows[r + 4][c]);
        }
    }
    DensityMatrix::new(m)
}
