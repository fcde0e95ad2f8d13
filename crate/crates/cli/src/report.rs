//! JSON and CSV artifacts. JSON carries `schema_version`; CSV files start with a
//! `#` line describing their columns, then the header row.

use std::path::Path;

use serde::Serialize;

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

pub struct Table {
    pub name: &'static str,
    pub schema: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, schema: &'static str, header: Vec<&'static str>) -> Self {
        Table {
            name,
            schema,
            header,
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> Result<Vec<u8>, Failure> {
        let mut out = format!("# {} v{SCHEMA_VERSION}: {}\n", self.name, self.schema).into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header).map_err(Failure::output)?;
        for r in &self.rows {
            w.write_record(r).map_err(Failure::output)?;
        }
        w.flush().map_err(Failure::output)?;
        drop(w);
        Ok(out)
    }
}

pub fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// Prints the JSON summary and, with an output directory, writes
/// `<command>.json` plus every table as `<name>.csv`.
pub fn emit<T: Serialize>(command: &str, summary: &T, tables: &[Table], out_dir: Option<&Path>) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(summary).map_err(Failure::output)? + "\n";
    print!("{json}");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(Failure::output)?;
        std::fs::write(dir.join(format!("{command}.json")), &json).map_err(Failure::output)?;
        for t in tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.render()?).map_err(Failure::output)?;
        }
    }
    Ok(())
}
