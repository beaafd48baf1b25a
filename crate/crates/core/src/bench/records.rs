//! Batch files: little-endian 16-byte `(key, row_id)` records, or CSV with
//! one `key,row_id` pair per line when the file name ends in `.csv`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::node::KeyValue;

const RECORD: usize = 16;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_records(path: &Path, pairs: &[KeyValue]) -> io::Result<()> {
    if is_csv(path) {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for kv in pairs {
            w.write_record([kv.key.to_string(), kv.row_id.to_string()])?;
        }
        return w.flush();
    }
    let mut w = BufWriter::new(File::create(path)?);
    for kv in pairs {
        w.write_all(&kv.key.to_le_bytes())?;
        w.write_all(&kv.row_id.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_records(path: &Path) -> io::Result<Vec<KeyValue>> {
    if is_csv(path) {
        return read_csv(path);
    }
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % RECORD != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: {} bytes is not a whole number of 16-byte records", path.display(), bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(RECORD)
        .map(|c| {
            let key = u64::from_le_bytes(c[..8].try_into().unwrap());
            let row = u64::from_le_bytes(c[8..].try_into().unwrap());
            KeyValue::new(key, row)
        })
        .collect())
}

fn read_csv(path: &Path) -> io::Result<Vec<KeyValue>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let bad = |line: u64, what: &str| io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line}: {what}", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| -> io::Result<u64> {
            rec.get(i).ok_or_else(|| bad(line, "expected `key,row_id`"))?.parse().map_err(|_| bad(line, "not an unsigned integer"))
        };
        // A leading header row is tolerated.
        if line == 1 && rec.get(0).is_some_and(|f| f.parse::<u64>().is_err()) {
            continue;
        }
        out.push(KeyValue::new(field(0)?, if rec.len() > 1 { field(1)? } else { 0 }));
    }
    Ok(out)
}
