//! CSV input for least squares: design-matrix columns, then the observation
//! column. A header row is allowed and detected by its first field not
//! parsing as a number.

use std::io::Read;

use gqa_core::ols::LeastSquaresProblem;
use gqa_core::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {column}: `{field}` is not a number")]
    NotANumber { row: usize, column: usize, field: String },
    #[error("need at least one design column and the observation column, found {0} column(s)")]
    TooFewColumns(usize),
    #[error("no data rows")]
    Empty,
}

pub fn read_problem<R: Read>(input: R) -> Result<LeastSquaresProblem, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut data: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(j, f)| f.parse::<f64>().map_err(|_| j))
            .collect();
        match parsed {
            Ok(row) => data.push(row),
            Err(_) if i == 0 => continue,
            Err(j) => {
                return Err(TableError::NotANumber {
                    row: i + 1,
                    column: j + 1,
                    field: record[j].to_string(),
                })
            }
        }
    }
    let width = data.first().ok_or(TableError::Empty)?.len();
    if width < 2 {
        return Err(TableError::TooFewColumns(width));
    }
    let design = Matrix::from_fn(data.len(), width - 1, |i, j| data[i][j]);
    let observations = data.iter().map(|r| r[width - 1]).collect();
    Ok(LeastSquaresProblem::new(design, observations).expect("one observation per row"))
}
