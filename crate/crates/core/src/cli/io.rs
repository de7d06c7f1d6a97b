//! Data, schema and matrix files.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;

use crate::copula::{MixedDataset, VariableKind};
use crate::error::{Error, Result};

/// One schema line: `name,kind[,level1|level2|...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: VariableKind,
    /// Ordered labels; a discrete cell stores the index of its label.
    pub levels: Option<Vec<String>>,
}

impl ColumnSchema {
    fn level_index(&self, cell: &str) -> Option<usize> {
        self.levels.as_ref()?.iter().position(|l| l == cell)
    }
}

pub fn parse_schema(text: &str, source: &str) -> Result<Vec<ColumnSchema>> {
    let mut cols: Vec<ColumnSchema> = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: format!("{source}:{}", lineno + 1),
            message,
        };
        let mut parts = line.splitn(3, ',');
        let name = parts.next().unwrap_or("").trim().to_string();
        let kind: VariableKind = parts
            .next()
            .ok_or_else(|| err("expected `name,kind[,levels]`".into()))?
            .parse()
            .map_err(|e: Error| err(e.to_string()))?;
        let levels: Option<Vec<String>> = parts
            .next()
            .map(|l| l.split('|').map(|s| s.trim().to_string()).collect());
        if name.is_empty() || !seen.insert(name.clone()) {
            return Err(err(format!("column name `{name}` is empty or repeated")));
        }
        match (kind, &levels) {
            (VariableKind::Continuous, Some(_)) => return Err(err(format!("continuous column `{name}` takes no levels"))),
            (VariableKind::Ordinal, None) | (VariableKind::Binary, None) => {
                return Err(err(format!("{} column `{name}` needs a level list", kind.as_str())))
            }
            (VariableKind::Binary, Some(l)) if l.len() != 2 => {
                return Err(err(format!("binary column `{name}` needs exactly two levels")))
            }
            (_, Some(l)) if l.len() < 2 || l.iter().collect::<HashSet<_>>().len() != l.len() => {
                return Err(err(format!("column `{name}` needs at least two distinct levels")))
            }
            _ => {}
        }
        cols.push(ColumnSchema { name, kind, levels });
    }
    if cols.len() < 2 {
        return Err(Error::Parse {
            path: source.to_string(),
            message: "schema needs at least two columns".into(),
        });
    }
    Ok(cols)
}

pub fn format_schema(schema: &[ColumnSchema]) -> String {
    schema
        .iter()
        .map(|c| match &c.levels {
            Some(l) => format!("{},{},{}\n", c.name, c.kind.as_str(), l.join("|")),
            None => format!("{},{}\n", c.name, c.kind.as_str()),
        })
        .collect()
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Reads a data CSV against its schema. Header names may come in any order;
/// the dataset follows schema order.
pub fn ingest_csv(data_path: &Path, schema_path: &Path) -> Result<(MixedDataset, Vec<ColumnSchema>)> {
    let schema_text = std::fs::read_to_string(schema_path)?;
    let schema = parse_schema(&schema_text, &schema_path.display().to_string())?;
    let data = read_csv(data_path, &schema)?;
    Ok((data, schema))
}

pub fn read_csv(data_path: &Path, schema: &[ColumnSchema]) -> Result<MixedDataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(data_path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut slot = vec![None; schema.len()];
    for (h, name) in header.iter().enumerate() {
        let j = schema
            .iter()
            .position(|c| &c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        slot[j] = Some(h);
    }
    let slot: Vec<usize> = slot
        .into_iter()
        .zip(schema)
        .map(|(s, c)| {
            s.ok_or_else(|| Error::Parse {
                path: data_path.display().to_string(),
                message: format!("schema column `{}` missing from header", c.name),
            })
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::new();
    let mut missing = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record?;
        for (j, col) in schema.iter().enumerate() {
            let cell = record.get(slot[j]).unwrap_or("");
            let bad = |message: String| Error::Cell {
                row: n,
                col: j,
                name: col.name.clone(),
                message,
            };
            if is_missing(cell) {
                values.push(0.0);
                missing.push(true);
                continue;
            }
            let v = match (col.kind, &col.levels) {
                (_, Some(_)) => col
                    .level_index(cell)
                    .ok_or_else(|| bad(format!("level `{cell}` is not in the schema")))? as f64,
                (VariableKind::Count, None) => {
                    let c: u64 = cell.parse().map_err(|_| bad(format!("`{cell}` is not a nonnegative count")))?;
                    c as f64
                }
                _ => {
                    let v: f64 = cell.parse().map_err(|_| bad(format!("`{cell}` is not a number")))?;
                    if !v.is_finite() {
                        return Err(bad(format!("`{cell}` is not finite")));
                    }
                    v
                }
            };
            values.push(v);
            missing.push(false);
        }
        n += 1;
    }
    let p = schema.len();
    for (j, col) in schema.iter().enumerate() {
        if (0..n).all(|r| missing[r * p + j]) {
            return Err(Error::Parse {
                path: data_path.display().to_string(),
                message: format!("column `{}` has no observed values", col.name),
            });
        }
    }
    MixedDataset::with_names(
        DMatrix::from_row_slice(n, p, &values),
        schema.iter().map(|c| c.kind).collect(),
        DMatrix::from_row_slice(n, p, &missing),
        schema.iter().map(|c| c.name.clone()).collect(),
    )
}

/// Writes `data` so that [`read_csv`] returns it unchanged: discrete cells
/// as their schema labels, continuous ones in shortest round-trip form.
pub fn export_csv(data: &MixedDataset, schema: &[ColumnSchema], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(schema.iter().map(|c| c.name.as_str()))?;
    for r in 0..data.n() {
        let row: Vec<String> = schema
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if data.is_missing(r, j) {
                    return "NA".to_string();
                }
                let v = data.value(r, j);
                match &c.levels {
                    Some(l) => l[v as usize].clone(),
                    None if c.kind == VariableKind::Count => format!("{}", v as u64),
                    None => format!("{v:?}"),
                }
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Schema describing `data` with levels `0..L` for ordinal and binary columns.
pub fn schema_for(data: &MixedDataset, ordinal_levels: usize) -> Vec<ColumnSchema> {
    (0..data.p())
        .map(|j| {
            let kind = data.kinds()[j];
            let count = match kind {
                VariableKind::Ordinal => Some(ordinal_levels),
                VariableKind::Binary => Some(2),
                _ => None,
            };
            ColumnSchema {
                name: data.names()[j].clone(),
                kind,
                levels: count.map(|l| (0..l).map(|v| v.to_string()).collect()),
            }
        })
        .collect()
}

/// `%g`-style formatting with 6 significant digits.
pub fn fmt_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mant.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Square matrix with a header of column names.
pub fn write_matrix_csv(m: &DMatrix<f64>, names: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| fmt_g(m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<(DMatrix<f64>, Vec<String>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut vals = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        for cell in rec?.iter() {
            vals.push(cell.parse::<f64>().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                message: format!("`{cell}` is not a number"),
            })?);
        }
        rows += 1;
    }
    if rows != names.len() || vals.len() != rows * rows {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!("expected a square {0}x{0} matrix", names.len()),
        });
    }
    Ok((DMatrix::from_row_slice(rows, rows, &vals), names))
}
