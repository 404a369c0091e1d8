use std::path::Path;

use super::{Corpus, Document, TargetVector};
use crate::error::{Error, Result};
use crate::fsutil::{atomic_write, read_file};

const FIXED_COLUMNS: [&str; 4] = ["id", "text", "gender", "social_class"];

/// Reads a corpus CSV. Target columns named in `target_names` are required;
/// other extra columns are ignored. Empty or unparseable target cells become
/// missing values.
pub fn load_corpus(path: impl AsRef<Path>, target_names: &[String]) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    parse_corpus(&bytes, target_names).map_err(|e| match e {
        Error::Csv { message, .. } => Error::Csv {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_corpus(bytes: &[u8], target_names: &[String]) -> Result<Corpus> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<memory>".into(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let [id_col, text_col, gender_col, class_col] = [
        column(FIXED_COLUMNS[0])?,
        column(FIXED_COLUMNS[1])?,
        column(FIXED_COLUMNS[2])?,
        column(FIXED_COLUMNS[3])?,
    ];
    let target_cols = target_names
        .iter()
        .map(|n| column(n))
        .collect::<Result<Vec<_>>>()?;

    let mut documents = Vec::new();
    let mut targets = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let gender = match field(gender_col) {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => {
                return Err(Error::InvalidField {
                    field: "gender".into(),
                    value: other.into(),
                    row: row + 1,
                })
            }
        };
        let social_class = match field(class_col) {
            "" => None,
            s => Some(s.parse::<u32>().map_err(|_| Error::InvalidField {
                field: "social_class".into(),
                value: s.into(),
                row: row + 1,
            })?),
        };
        documents.push(Document {
            id: field(id_col).to_string(),
            text: field(text_col).to_string(),
            gender,
            social_class,
        });
        targets.push(TargetVector(
            target_cols.iter().map(|&c| parse_count(field(c))).collect(),
        ));
    }
    Corpus::new(documents, targets, target_names.to_vec())
}

/// Non-negative integer counts; anything else is treated as missing.
fn parse_count(s: &str) -> Option<u32> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u32>() {
        return Some(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) => Some(v as u32),
        _ => None,
    }
}

pub fn corpus_to_csv(corpus: &Corpus) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
    header.extend(corpus.target_names().iter().map(String::as_str));
    w.write_record(&header).expect("in-memory write");
    for (d, t) in corpus.documents().iter().zip(corpus.targets()) {
        let mut rec = vec![
            d.id.clone(),
            d.text.clone(),
            d.gender.map(|g| g.to_string()).unwrap_or_default(),
            d.social_class.map(|c| c.to_string()).unwrap_or_default(),
        ];
        rec.extend(t.0.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &corpus_to_csv(corpus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn loads_well_formed_rows() {
        let data = "id,text,gender,social_class,total,anxiety,depression\n\
                    a,hello world,0,2,3,1,0\n\
                    b,second,1,0,0,0,0\n\
                    c,third,1,1,7,2,5\n";
        let c = parse_corpus(data.as_bytes(), &names(&["total", "anxiety", "depression"])).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.targets().iter().all(|t| t.is_complete()));
        assert_eq!(c.targets()[2].0, vec![Some(7), Some(2), Some(5)]);
        assert_eq!(c.documents()[0].social_class, Some(2));
    }

    #[test]
    fn empty_target_is_missing() {
        let data = "id,text,gender,social_class,total\na,x,0,1,\nb,y,1,1,abc\n";
        let c = parse_corpus(data.as_bytes(), &names(&["total"])).unwrap();
        assert_eq!(c.targets()[0].0, vec![None]);
        assert_eq!(c.targets()[1].0, vec![None]);
    }

    #[test]
    fn missing_column_and_duplicate_id() {
        let data = "id,text,gender\na,x,0\n";
        assert!(matches!(
            parse_corpus(data.as_bytes(), &[]),
            Err(Error::MissingColumn(c)) if c == "social_class"
        ));
        let dup = "id,text,gender,social_class\nq,x,0,1\nq,y,1,1\n";
        assert!(matches!(
            parse_corpus(dup.as_bytes(), &[]),
            Err(Error::DuplicateId(id)) if id == "q"
        ));
    }

    #[test]
    fn bad_gender_is_a_data_error() {
        let data = "id,text,gender,social_class\na,x,2,1\n";
        assert!(matches!(
            parse_corpus(data.as_bytes(), &[]),
            Err(Error::InvalidField { field, .. }) if field == "gender"
        ));
    }
}
