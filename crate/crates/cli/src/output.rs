//! CSV and JSON artifact encoding. Floats are written as `{:.16e}`, which
//! round-trips every `f64`.

use std::path::Path;

use crate::error::CliError;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// In-memory CSV table, written in one piece once the experiment has finished.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub fn write_artifact(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&["1".into(), float(0.5)]);
        assert_eq!(String::from_utf8(t.into_bytes()).unwrap(), "a,b\n1,5.0000000000000000e-1\n");
    }
}
