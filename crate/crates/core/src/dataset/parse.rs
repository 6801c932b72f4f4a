use std::io::Read;

use super::{Dataset, DatasetError, Label, Record};
use crate::features::{FeatureVector32, FEATURE_NAMES, N_FEATURES};

/// Which CSV column plays which role. Matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub subject: String,
    pub replication: String,
    pub label: String,
    /// Source column for each feature, in feature-vector order.
    pub features: Vec<String>,
}

impl Default for ColumnMapping {
    /// Layout of the public replicated-acoustic-features corpus:
    /// `ID`, `Recording`, `Status`, `MFCC0..12`, `Delta0..12`,
    /// `HNR05`, `HNR15`, `HNR25`, `HNR35`, `HNR38`, `GNE`.
    fn default() -> Self {
        let features = (0..13)
            .map(|i| format!("MFCC{i}"))
            .chain((0..13).map(|i| format!("Delta{i}")))
            .chain(["HNR05", "HNR15", "HNR25", "HNR35", "HNR38", "GNE"].map(String::from))
            .collect();
        Self {
            subject: "ID".into(),
            replication: "Recording".into(),
            label: "Status".into(),
            features,
        }
    }
}

impl ColumnMapping {
    /// Reads `role = column` lines on top of the default mapping. Roles are
    /// `subject`, `replication`, `label` and the canonical feature names
    /// (`mfcc0`..`gne`). Blank lines and `#` comments are skipped.
    pub fn from_config_text(text: &str) -> Result<Self, DatasetError> {
        let mut mapping = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DatasetError::InvalidMapping(format!("line {}: expected `role = column`", n + 1))
            })?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
            if value.is_empty() {
                return Err(DatasetError::InvalidMapping(format!(
                    "line {}: empty column name for `{key}`",
                    n + 1
                )));
            }
            match key.as_str() {
                "subject" => mapping.subject = value,
                "replication" => mapping.replication = value,
                "label" => mapping.label = value,
                other => match FEATURE_NAMES.iter().position(|f| *f == other) {
                    Some(i) => mapping.features[i] = value,
                    None => {
                        return Err(DatasetError::InvalidMapping(format!(
                            "line {}: unknown role `{other}`",
                            n + 1
                        )))
                    }
                },
            }
        }
        Ok(mapping)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Require exactly three replications per subject.
    pub strict: bool,
    /// Field delimiter; sniffed from the header line when `None`.
    pub delimiter: Option<u8>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            strict: true,
            delimiter: None,
        }
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
    delimiter: u8,
}

fn read_table<R: Read>(mut reader: R, delimiter: Option<u8>) -> Result<Table, DatasetError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| DatasetError::Csv(e.to_string()))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let delimiter = delimiter.unwrap_or_else(|| sniff_delimiter(text.lines().next().unwrap_or("")));
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DatasetError::Csv(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec));
    }
    Ok(Table {
        headers,
        rows,
        delimiter,
    })
}

fn sniff_delimiter(header: &str) -> u8 {
    b",;\t"
        .iter()
        .copied()
        .max_by_key(|d| header.bytes().filter(|b| b == d).count())
        .filter(|d| header.as_bytes().contains(d))
        .unwrap_or(b',')
}

impl Table {
    fn column(&self, name: &str) -> Result<usize, DatasetError> {
        self.headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| DatasetError::MissingColumn {
                column: name.to_string(),
                available: self.headers.join(", "),
            })
    }

    fn number(
        &self,
        line: usize,
        rec: &csv::StringRecord,
        col: usize,
    ) -> Result<f64, DatasetError> {
        let raw = rec.get(col).unwrap_or("");
        parse_number(raw, self.delimiter).ok_or_else(|| DatasetError::NonNumericValue {
            row: line,
            column: self.headers[col].clone(),
            value: raw.to_string(),
        })
    }

    fn feature_columns(&self, names: &[String]) -> Result<Vec<usize>, DatasetError> {
        names.iter().map(|n| self.column(n)).collect()
    }

    fn features(
        &self,
        line: usize,
        rec: &csv::StringRecord,
        cols: &[usize],
    ) -> Result<FeatureVector32, DatasetError> {
        let mut values = [0.0; N_FEATURES];
        for (v, &c) in values.iter_mut().zip(cols) {
            *v = self.number(line, rec, c)?;
        }
        Ok(FeatureVector32::new(values))
    }
}

/// Parses a finite real, accepting a decimal comma when the comma is not
/// the field delimiter.
fn parse_number(raw: &str, delimiter: u8) -> Option<f64> {
    let raw = raw.trim();
    let parsed = raw.parse::<f64>().ok().or_else(|| {
        (delimiter != b',' && raw.matches(',').count() == 1)
            .then(|| raw.replace(',', ".").parse::<f64>().ok())
            .flatten()
    });
    parsed.filter(|v| v.is_finite())
}

fn parse_label(raw: &str, line: usize) -> Result<Label, DatasetError> {
    let norm = raw.trim().to_ascii_lowercase();
    let label = match norm.as_str() {
        "1" | "1.0" | "pd" | "parkinson" | "parkinsons" | "true" => Some(Label::Parkinson),
        "0" | "0.0" | "healthy" | "control" | "hc" | "cont" | "false" => Some(Label::Healthy),
        _ => None,
    };
    label.ok_or_else(|| DatasetError::InvalidLabel {
        row: line,
        value: raw.to_string(),
    })
}

/// Reads a labelled corpus. Columns not named by `mapping` are ignored.
pub fn parse_dataset_csv<R: Read>(
    reader: R,
    mapping: &ColumnMapping,
    options: ParseOptions,
) -> Result<Dataset, DatasetError> {
    if mapping.features.len() != N_FEATURES {
        return Err(DatasetError::InvalidMapping(format!(
            "expected {N_FEATURES} feature columns, mapping names {}",
            mapping.features.len()
        )));
    }
    let table = read_table(reader, options.delimiter)?;
    let subject_col = table.column(&mapping.subject)?;
    let rep_col = table.column(&mapping.replication)?;
    let label_col = table.column(&mapping.label)?;
    let feature_cols = table.feature_columns(&mapping.features)?;
    if table.rows.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let mut records = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let line = *line;
        let rep = table.number(line, rec, rep_col)?;
        if rep.fract() != 0.0 || !(0.0..=255.0).contains(&rep) {
            return Err(DatasetError::NonNumericValue {
                row: line,
                column: table.headers[rep_col].clone(),
                value: rec.get(rep_col).unwrap_or("").to_string(),
            });
        }
        records.push(Record {
            subject_id: rec.get(subject_col).unwrap_or("").to_string(),
            replication_idx: rep as u8,
            label: parse_label(rec.get(label_col).unwrap_or(""), line)?,
            features: table.features(line, rec, &feature_cols)?,
        });
    }
    Dataset::new(records, options.strict)
}

/// Reads unlabelled feature rows; columns are found by canonical name
/// (`mfcc0`..`gne`) or, failing that, by the default corpus names.
pub fn parse_feature_csv<R: Read>(
    reader: R,
    delimiter: Option<u8>,
) -> Result<Vec<FeatureVector32>, DatasetError> {
    let table = read_table(reader, delimiter)?;
    let canonical: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let cols = table
        .feature_columns(&canonical)
        .or_else(|_| table.feature_columns(&ColumnMapping::default().features))?;
    table
        .rows
        .iter()
        .map(|(line, rec)| table.features(*line, rec, &cols))
        .collect()
}

/// Writes feature rows under the canonical 32-column header.
pub fn write_feature_csv<W: std::io::Write>(
    writer: W,
    rows: &[FeatureVector32],
) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| DatasetError::Csv(e.to_string());
    w.write_record(FEATURE_NAMES).map_err(err)?;
    for r in rows {
        w.write_record(r.as_array().iter().map(|v| v.to_string()))
            .map_err(err)?;
    }
    w.flush().map_err(|e| DatasetError::Csv(e.to_string()))
}

/// Writes labelled records in the default corpus layout, readable by
/// [`parse_dataset_csv`] with [`ColumnMapping::default`].
pub fn write_dataset_csv<W: std::io::Write>(writer: W, ds: &Dataset) -> Result<(), DatasetError> {
    let mapping = ColumnMapping::default();
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| DatasetError::Csv(e.to_string());
    let mut header = vec![mapping.subject, mapping.replication, mapping.label];
    header.extend(mapping.features);
    w.write_record(&header).map_err(err)?;
    for r in ds.records() {
        let mut fields = vec![
            r.subject_id.clone(),
            r.replication_idx.to_string(),
            r.label.as_u8().to_string(),
        ];
        fields.extend(r.features.as_array().iter().map(|v| v.to_string()));
        w.write_record(&fields).map_err(err)?;
    }
    w.flush().map_err(|e| DatasetError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut cols = vec![
            "ID".to_string(),
            "Recording".into(),
            "Status".into(),
            "Gender".into(),
        ];
        cols.extend(ColumnMapping::default().features);
        cols.push("Jitter_rel".into());
        cols.join(",")
    }

    fn row(id: &str, rep: u8, status: u8, base: f64) -> String {
        let mut cols = vec![
            id.to_string(),
            rep.to_string(),
            status.to_string(),
            "0".into(),
        ];
        cols.extend((0..32).map(|i| (base + i as f64 * 0.5).to_string()));
        cols.push("0.1".into());
        cols.join(",")
    }

    fn csv(rows: &[String]) -> String {
        std::iter::once(header())
            .chain(rows.iter().cloned())
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn six_rows() -> Vec<String> {
        (1..=3)
            .map(|r| row("CONT-01", r, 0, r as f64))
            .chain((1..=3).map(|r| row("PD-01", r, 1, 10.0 + r as f64)))
            .collect()
    }

    #[test]
    fn header_only_is_empty() {
        let err = parse_dataset_csv(
            header().as_bytes(),
            &ColumnMapping::default(),
            ParseOptions::default(),
        );
        assert_eq!(err, Err(DatasetError::EmptyDataset));
    }

    #[test]
    fn two_subjects_three_replications() {
        let ds = parse_dataset_csv(
            csv(&six_rows()).as_bytes(),
            &ColumnMapping::default(),
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.n_subjects(), 2);
        assert_eq!(ds.records()[3].label, Label::Parkinson);
        assert_eq!(ds.records()[4].replication_idx, 2);
        assert_eq!(ds.records()[0].features.as_array()[1], 1.5);
    }

    #[test]
    fn missing_replication_strict_and_lenient() {
        let mut rows = six_rows();
        rows.remove(5);
        let text = csv(&rows);
        let strict = parse_dataset_csv(
            text.as_bytes(),
            &ColumnMapping::default(),
            ParseOptions::default(),
        );
        assert!(
            matches!(strict, Err(DatasetError::ReplicationMismatch { ref subject, .. }) if subject == "PD-01")
        );
        let lenient = parse_dataset_csv(
            text.as_bytes(),
            &ColumnMapping::default(),
            ParseOptions {
                strict: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(lenient.n_subjects(), 1);
    }

    #[test]
    fn missing_column_is_named() {
        let text = csv(&six_rows()).replace("HNR38", "HNRXX");
        match parse_dataset_csv(
            text.as_bytes(),
            &ColumnMapping::default(),
            ParseOptions::default(),
        ) {
            Err(DatasetError::MissingColumn { column, .. }) => assert_eq!(column, "HNR38"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let mut rows = six_rows();
        rows[1] = rows[1].replacen("2.5", "abc", 1);
        match parse_dataset_csv(
            csv(&rows).as_bytes(),
            &ColumnMapping::default(),
            ParseOptions::default(),
        ) {
            Err(DatasetError::NonNumericValue { row, value, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(value, "abc");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semicolons_and_decimal_commas() {
        let text = csv(&six_rows()).replace(',', ";").replace('.', ",");
        let ds = parse_dataset_csv(
            text.as_bytes(),
            &ColumnMapping::default(),
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.records()[0].features.as_array()[1], 1.5);
    }

    #[test]
    fn custom_mapping_from_text() {
        let m =
            ColumnMapping::from_config_text("# comment\nsubject = name\ngne=GNE_ratio\n").unwrap();
        assert_eq!(m.subject, "name");
        assert_eq!(m.features[31], "GNE_ratio");
        assert!(ColumnMapping::from_config_text("nonsense = x").is_err());
        assert!(ColumnMapping::from_config_text("no equals sign").is_err());
    }

    #[test]
    fn feature_csv_roundtrip() {
        let rows: Vec<FeatureVector32> = (0..3)
            .map(|i| FeatureVector32::new(std::array::from_fn(|j| (i * 32 + j) as f64 / 7.0)))
            .collect();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows).unwrap();
        assert_eq!(parse_feature_csv(buf.as_slice(), None).unwrap(), rows);
    }
}
