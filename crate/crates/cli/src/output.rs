//! Writers for CSV, JSON and digit-word files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::CliError;

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Header comment carried by randomized outputs.
pub fn seed_line(w: &mut dyn Write, seed: Option<u64>) -> io::Result<()> {
    match seed {
        Some(s) => writeln!(w, "# seed={s}"),
        None => Ok(()),
    }
}

pub fn write_csv<I>(path: Option<&Path>, seed: Option<u64>, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator,
    I::Item: IntoIterator,
    <I::Item as IntoIterator>::Item: AsRef<[u8]>,
{
    let mut w = open(path)?;
    seed_line(&mut w, seed)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut w = open(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// One digit word per line.
pub fn write_words<'a, I>(path: &Path, seed: u64, words: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = &'a digitrange::DigitWord>,
{
    let mut w = open(Some(path))?;
    seed_line(&mut w, Some(seed))?;
    for word in words {
        writeln!(w, "{word}")?;
    }
    w.flush()?;
    Ok(())
}

/// Empty for `None`, shortest round-trip decimal otherwise.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
