//! Correlation of predicted scores against OCR-accuracy ground truth.
//!
//! LCC (Pearson) and SROCC (Spearman with average ranks for ties) are
//! computed per document over that document's photos, summarized as the
//! median across documents, and also pooled globally over all rows.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    FineReader,
    Tesseract,
    Omnipage,
    /// Arithmetic mean of the three engine accuracies; requires all three.
    Average,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::FineReader,
        Engine::Tesseract,
        Engine::Omnipage,
        Engine::Average,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::FineReader => "finereader",
            Engine::Tesseract => "tesseract",
            Engine::Omnipage => "omnipage",
            Engine::Average => "average",
        }
    }
}

/// One manifest row: an image, the document it photographs, and the OCR
/// accuracies measured on it.
#[derive(Debug, Clone)]
pub struct ManifestRow {
    pub image_path: String,
    pub doc_id: String,
    pub acc_finereader: Option<f64>,
    pub acc_tesseract: Option<f64>,
    pub acc_omnipage: Option<f64>,
}

impl ManifestRow {
    fn accuracy(&self, engine: Engine) -> Option<f64> {
        match engine {
            Engine::FineReader => self.acc_finereader,
            Engine::Tesseract => self.acc_tesseract,
            Engine::Omnipage => self.acc_omnipage,
            Engine::Average => match (self.acc_finereader, self.acc_tesseract, self.acc_omnipage) {
                (Some(a), Some(b), Some(c)) => Some((a + b + c) / 3.0),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    /// Parse the CSV manifest
    /// `image_path,doc_id,acc_finereader,acc_tesseract,acc_omnipage`;
    /// empty cells mean the accuracy is absent.
    pub fn from_reader<R: Read>(reader: R) -> Result<DatasetManifest> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        {
            let headers = csv.headers().map_err(|e| Error::Manifest {
                line: 1,
                message: format!("cannot read header: {e}"),
            })?;
            let expect = [
                "image_path",
                "doc_id",
                "acc_finereader",
                "acc_tesseract",
                "acc_omnipage",
            ];
            let got: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
            if got != expect {
                return Err(Error::Manifest {
                    line: 1,
                    message: format!("expected header {expect:?}, got {got:?}"),
                });
            }
        }
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::Manifest {
                line,
                message: e.to_string(),
            })?;
            if record.len() != 5 {
                return Err(Error::Manifest {
                    line,
                    message: format!("expected 5 fields, got {}", record.len()),
                });
            }
            let parse_acc = |field: &str, name: &str| -> Result<Option<f64>> {
                let field = field.trim();
                if field.is_empty() {
                    return Ok(None);
                }
                let v: f64 = field.parse().map_err(|_| Error::Manifest {
                    line,
                    message: format!("{name} is not a number: {field:?}"),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Manifest {
                        line,
                        message: format!("{name} {v} outside [0, 1]"),
                    });
                }
                Ok(Some(v))
            };
            rows.push(ManifestRow {
                image_path: record[0].trim().to_string(),
                doc_id: record[1].trim().to_string(),
                acc_finereader: parse_acc(&record[2], "acc_finereader")?,
                acc_tesseract: parse_acc(&record[3], "acc_tesseract")?,
                acc_omnipage: parse_acc(&record[4], "acc_omnipage")?,
            });
        }
        Ok(DatasetManifest { rows })
    }

    pub fn from_path(path: &Path) -> Result<DatasetManifest> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_reader(file)
    }
}

/// Sample Pearson correlation.
pub fn pearson_lcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input vector".into()));
    }
    // sqrt of the product (not product of sqrts) so that identical inputs
    // yield exactly 1.0: sxy == sxx == syy makes sqrt(sxx*syy) == sxy.
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Fractional ranks, 1-based; ties receive the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("NaN in rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman_srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_lcc(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Serialize)]
pub struct DocCorrelation {
    pub lcc: f64,
    pub srocc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub engine: Engine,
    pub per_doc: BTreeMap<String, DocCorrelation>,
    pub median_lcc: f64,
    pub median_srocc: f64,
    pub global_lcc: f64,
    pub global_srocc: f64,
    /// Documents whose correlation was undefined (constant scores or
    /// accuracies); excluded from the medians.
    pub excluded_docs: Vec<String>,
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Document-wise correlation protocol: LCC/SROCC per document, the medians
/// over documents, and the global correlation over all rows pooled.
pub fn evaluate(
    manifest: &DatasetManifest,
    scores: &BTreeMap<String, f64>,
    engine: Engine,
) -> Result<EvalReport> {
    // sort rows so results do not depend on manifest row order
    let mut rows: Vec<&ManifestRow> = manifest.rows.iter().collect();
    rows.sort_by(|a, b| (&a.doc_id, &a.image_path).cmp(&(&b.doc_id, &b.image_path)));

    let mut by_doc: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let mut pooled_scores = Vec::with_capacity(rows.len());
    let mut pooled_accs = Vec::with_capacity(rows.len());
    for row in &rows {
        let score = *scores.get(&row.image_path).ok_or_else(|| {
            Error::Contract(format!("no score for manifest image {:?}", row.image_path))
        })?;
        let acc = row.accuracy(engine).ok_or_else(|| {
            Error::Contract(format!(
                "image {:?} lacks the {} accuracy",
                row.image_path,
                engine.name()
            ))
        })?;
        by_doc.entry(&row.doc_id).or_default().push((score, acc));
        pooled_scores.push(score);
        pooled_accs.push(acc);
    }

    let mut per_doc = BTreeMap::new();
    let mut excluded_docs = Vec::new();
    let mut lccs = Vec::new();
    let mut sroccs = Vec::new();
    for (doc, pairs) in &by_doc {
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let a: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        match (pearson_lcc(&s, &a), spearman_srocc(&s, &a)) {
            (Ok(lcc), Ok(srocc)) => {
                lccs.push(lcc);
                sroccs.push(srocc);
                per_doc.insert(doc.to_string(), DocCorrelation { lcc, srocc });
            }
            _ => excluded_docs.push(doc.to_string()),
        }
    }
    if lccs.is_empty() {
        return Err(Error::UndefinedCorrelation(
            "no document has a defined correlation".into(),
        ));
    }
    Ok(EvalReport {
        engine,
        median_lcc: median(&mut lccs),
        median_srocc: median(&mut sroccs),
        global_lcc: pearson_lcc(&pooled_scores, &pooled_accs)?,
        global_srocc: spearman_srocc(&pooled_scores, &pooled_accs)?,
        per_doc,
        excluded_docs,
    })
}
