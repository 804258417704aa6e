//! CSV input and output. Every output starts with a provenance comment line;
//! readers skip lines starting with `#`.

use std::path::Path;

use crate::config::Settings;
use crate::error::CliError;

pub fn provenance(settings: &Settings, seed: Option<u64>) -> Result<String, CliError> {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    Ok(format!(
        "# wcop {} command={} seed={seed} config={}",
        env!("CARGO_PKG_VERSION"),
        settings.command,
        settings.hash()?
    ))
}

/// Shortest decimal that reads back to the same float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Reads the named numeric columns of a headed CSV file.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers.iter().position(|h| h == *n).ok_or_else(|| {
                CliError::Usage(format!(
                    "{} has no `{n}` column (columns: {}); expected {}",
                    path.display(),
                    headers.iter().collect::<Vec<_>>().join(", "),
                    names.join(",")
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let x: f64 = field.parse().map_err(|_| {
                CliError::Usage(format!("{}, line {line}: `{}` is not a number", path.display(), field))
            })?;
            if !x.is_finite() {
                return Err(CliError::Usage(format!("{}, line {line}: non-finite value `{field}`", path.display())));
            }
            cols[c].push(x);
        }
    }
    Ok(cols)
}

/// Renders a CSV table under a provenance line.
pub fn csv_text(provenance: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(format!("{provenance}\n{}", String::from_utf8_lossy(&body)))
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
