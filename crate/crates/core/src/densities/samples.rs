use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Source,
    Target,
}

impl DomainTag {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::Source => "source",
            DomainTag::Target => "target",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "source" => Some(DomainTag::Source),
            "target" => Some(DomainTag::Target),
            _ => None,
        }
    }
}

/// Points drawn from one domain, optionally labeled with Y in {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    dim: usize,
    /// Row-major n × dim.
    points: Vec<f64>,
    labels: Option<Vec<u8>>,
    domain: DomainTag,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<f64>, labels: Option<Vec<u8>>, domain: DomainTag) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("sample dimension must be positive".into()));
        }
        if points.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: points.len() % dim,
            });
        }
        let n = points.len() / dim;
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: y.len(),
                });
            }
            if let Some(bad) = y.iter().find(|v| **v > 1) {
                return Err(Error::InvalidParameter(format!("label {bad} is not in {{0, 1}}")));
            }
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample coordinates".into()));
        }
        Ok(Self {
            dim,
            points,
            labels,
            domain,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<u8>>, domain: DomainTag) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        Self::new(dim, rows.concat(), labels, domain)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn flat_points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[u8]> {
        self.labels.as_deref().ok_or(Error::MissingLabels)
    }

    pub fn column(&self, axis: usize) -> Vec<f64> {
        self.points().map(|p| p[axis]).collect()
    }

    pub fn without_labels(&self) -> Self {
        Self {
            labels: None,
            ..self.clone()
        }
    }

    pub fn with_domain(mut self, domain: DomainTag) -> Self {
        self.domain = domain;
        self
    }

    /// Applies `f` to every point, keeping labels and domain.
    pub fn map_points(&self, out_dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len() * out_dim);
        for p in self.points() {
            let z = f(p);
            if z.len() != out_dim {
                return Err(Error::DimensionMismatch {
                    expected: out_dim,
                    found: z.len(),
                });
            }
            out.extend(z);
        }
        Self::new(out_dim, out, self.labels.clone(), self.domain)
    }

    /// Reads the CSV sample format: a header naming `x0..x{d-1}`, optionally
    /// `y` and `domain`. Rows whose `domain` differs from `domain` are an
    /// error; use [`read_csv_by_domain`] for mixed files.
    pub fn read_csv<R: Read>(reader: R, domain: DomainTag) -> Result<Self> {
        let rows = parse_csv(reader)?;
        let dim = rows.dim;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (i, row) in rows.rows.into_iter().enumerate() {
            if let Some(tag) = row.domain {
                if tag != domain {
                    return Err(Error::Parse {
                        row: i + 2,
                        column: rows.domain_column.unwrap_or(0) + 1,
                        message: format!("expected domain {}, found {}", domain.as_str(), tag.as_str()),
                    });
                }
            }
            points.extend(row.x);
            if let Some(y) = row.y {
                labels.push(y);
            }
        }
        let labels = rows.has_labels.then_some(labels);
        Self::new(dim, points, labels, domain)
    }

    pub fn write_csv<W: Write>(&self, writer: W, include_domain: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        if self.labels.is_some() {
            header.push("y".into());
        }
        if include_domain {
            header.push("domain".into());
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self.point(i).iter().map(|v| format!("{v:?}")).collect();
            if let Some(y) = &self.labels {
                record.push(y[i].to_string());
            }
            if include_domain {
                record.push(self.domain.as_str().into());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Splits a CSV file with a `domain` column into source and target sets.
pub fn read_csv_by_domain<R: Read>(reader: R) -> Result<(SampleSet, SampleSet)> {
    let parsed = parse_csv(reader)?;
    if parsed.domain_column.is_none() {
        return Err(Error::Parse {
            row: 1,
            column: 0,
            message: "no domain column".into(),
        });
    }
    let mut parts: [(Vec<f64>, Vec<u8>); 2] = Default::default();
    for row in parsed.rows {
        let slot = &mut parts[usize::from(row.domain == Some(DomainTag::Target))];
        slot.0.extend(row.x);
        if let Some(y) = row.y {
            slot.1.push(y);
        }
    }
    let [(sx, sy), (tx, ty)] = parts;
    let source = SampleSet::new(parsed.dim, sx, parsed.has_labels.then_some(sy), DomainTag::Source)?;
    let target = SampleSet::new(parsed.dim, tx, parsed.has_labels.then_some(ty), DomainTag::Target)?;
    Ok((source, target))
}

struct ParsedRow {
    x: Vec<f64>,
    y: Option<u8>,
    domain: Option<DomainTag>,
}

struct ParsedCsv {
    dim: usize,
    has_labels: bool,
    domain_column: Option<usize>,
    rows: Vec<ParsedRow>,
}

fn parse_csv<R: Read>(reader: R) -> Result<ParsedCsv> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = r
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: 0,
            message: e.to_string(),
        })?
        .clone();
    let mut x_columns = Vec::new();
    let mut y_column = None;
    let mut domain_column = None;
    for (j, name) in header.iter().enumerate() {
        let bad = |message: String| Error::Parse {
            row: 1,
            column: j + 1,
            message,
        };
        match name {
            "y" if y_column.is_none() => y_column = Some(j),
            "domain" if domain_column.is_none() => domain_column = Some(j),
            _ => {
                let k: usize = name
                    .strip_prefix('x')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(format!("unexpected column {name:?}")))?;
                x_columns.push((k, j));
            }
        }
    }
    x_columns.sort();
    if x_columns.is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: 0,
            message: "no x columns".into(),
        });
    }
    for (expected, (k, j)) in x_columns.iter().enumerate() {
        if *k != expected {
            return Err(Error::Parse {
                row: 1,
                column: j + 1,
                message: format!("expected column x{expected}"),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row_number = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row: row_number,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: row_number,
                column: record.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let field_err = |j: usize, message: String| Error::Parse {
            row: row_number,
            column: j + 1,
            message,
        };
        let mut x = Vec::with_capacity(x_columns.len());
        for &(_, j) in &x_columns {
            let v: f64 = record[j]
                .parse()
                .map_err(|_| field_err(j, format!("{:?} is not a number", &record[j])))?;
            if !v.is_finite() {
                return Err(field_err(j, "value is not finite".into()));
            }
            x.push(v);
        }
        let y = match y_column {
            Some(j) => match &record[j] {
                "0" => Some(0),
                "1" => Some(1),
                other => return Err(field_err(j, format!("label {other:?} is not 0 or 1"))),
            },
            None => None,
        };
        let domain = match domain_column {
            Some(j) => Some(
                DomainTag::parse(&record[j])
                    .ok_or_else(|| field_err(j, format!("domain {:?} is not source or target", &record[j])))?,
            ),
            None => None,
        };
        rows.push(ParsedRow { x, y, domain });
    }
    Ok(ParsedCsv {
        dim: x_columns.len(),
        has_labels: y_column.is_some(),
        domain_column,
        rows,
    })
}
