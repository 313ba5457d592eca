use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::adapter::{EventSource, RawRecord, RawValue, SourceItem, SourceSchema, TransportError};

/// CSV with a header row. Empty cells are absent fields; `#` starts a comment line.
pub struct CsvSource {
    reader: csv::Reader<Box<dyn Read + Send>>,
    schema: SourceSchema,
    row: csv::StringRecord,
}

impl CsvSource {
    pub fn open(path: &Path) -> Result<CsvSource, TransportError> {
        let file = File::open(path).map_err(|e| TransportError(format!("{}: {e}", path.display())))?;
        CsvSource::from_reader(file)
    }

    pub fn from_reader(input: impl Read + Send + 'static) -> Result<CsvSource, TransportError> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(Box::new(input) as Box<dyn Read + Send>);
        let header = reader.headers().map_err(|e| TransportError(format!("cannot read CSV header: {e}")))?;
        let names: Vec<&str> = header.iter().collect();
        let schema = SourceSchema::untyped(&names);
        Ok(CsvSource { reader, schema, row: csv::StringRecord::new() })
    }
}

impl EventSource for CsvSource {
    fn schema(&self) -> &SourceSchema {
        &self.schema
    }

    fn next_item(&mut self) -> Result<Option<SourceItem>, TransportError> {
        match self.reader.read_record(&mut self.row) {
            Ok(false) => Ok(None),
            Ok(true) => {
                let line = self.row.position().map_or(0, |p| p.line());
                let width = self.schema.fields.len();
                if self.row.len() != width {
                    return Ok(Some(SourceItem::Malformed(format!(
                        "line {line}: expected {width} columns, found {}",
                        self.row.len()
                    ))));
                }
                let values = self.row.iter().map(|c| (!c.is_empty()).then(|| RawValue::Text(c.to_string()))).collect();
                Ok(Some(SourceItem::Record(RawRecord { values })))
            }
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => Err(TransportError(e.to_string())),
            Err(e) => Ok(Some(SourceItem::Malformed(e.to_string()))),
        }
    }
}
