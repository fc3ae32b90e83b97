//! CSV formats: the `curve_id,time,value` dataset layout and grid-indexed
//! mean vectors / covariance matrices.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{validate_dataset, Curve, EvaluationGrid, SparseFunctionalDataset, SurfaceEstimate};

pub const DATASET_HEADER: [&str; 3] = ["curve_id", "time", "value"];

/// Reads a dataset. Rows must be sorted by `(curve_id, time)`; an unsorted
/// row within a curve or a curve id that goes backwards is rejected.
pub fn read_dataset<R: Read>(reader: R) -> Result<SparseFunctionalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != DATASET_HEADER {
        return Err(Error::Parse(format!(
            "expected header `{}`, found `{}`",
            DATASET_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut curves: Vec<Curve> = Vec::new();
    let mut current_id: Option<u64> = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2;
        let field = |k: usize| -> Result<&str> {
            record.get(k).ok_or_else(|| Error::Parse(format!("row {row}: missing column {k}")))
        };
        let id: u64 = field(0)?
            .parse()
            .map_err(|e| Error::Parse(format!("row {row}: bad curve_id: {e}")))?;
        let time: f64 = field(1)?
            .parse()
            .map_err(|e| Error::Parse(format!("row {row}: bad time: {e}")))?;
        let value: f64 = field(2)?
            .parse()
            .map_err(|e| Error::Parse(format!("row {row}: bad value: {e}")))?;

        match current_id {
            Some(prev) if id == prev => {
                let curve = curves.last_mut().expect("curve exists for current id");
                let last = *curve.times.last().expect("non-empty curve");
                if !(time > last) {
                    return Err(Error::Parse(format!(
                        "row {row}: times within curve {id} are not strictly increasing"
                    )));
                }
                curve.times.push(time);
                curve.values.push(value);
            }
            Some(prev) if id < prev => {
                return Err(Error::Parse(format!(
                    "row {row}: curve_id {id} after {prev}; rows must be sorted by curve_id"
                )));
            }
            _ => {
                current_id = Some(id);
                curves.push(Curve::new(vec![time], vec![value]));
            }
        }
    }

    let ds = SparseFunctionalDataset::new(curves);
    validate_dataset(&ds).into_result()?;
    Ok(ds)
}

pub fn write_dataset<W: Write>(ds: &SparseFunctionalDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(DATASET_HEADER)?;
    for (i, curve) in ds.curves().iter().enumerate() {
        for (t, y) in curve.times.iter().zip(&curve.values) {
            wtr.write_record(&[i.to_string(), t.to_string(), y.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// `time,mean` rows, one per grid point.
pub fn write_mean_csv<W: Write>(mean: &SurfaceEstimate, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["time", "mean"])?;
    for (t, v) in mean.grid.points().iter().zip(&mean.values) {
        wtr.write_record(&[t.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Header row holds the `M` grid points; each following row is one matrix
/// row (row-major).
pub fn write_matrix_csv<W: Write>(surface: &SurfaceEstimate, writer: W) -> Result<()> {
    if !surface.is_matrix() {
        return Err(Error::InvalidArgument("expected a matrix surface".into()));
    }
    let m = surface.size();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(surface.grid.points().iter().map(|t| t.to_string()))?;
    for row in surface.values.chunks(m) {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`]; returns the grid and the
/// row-major values.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<(EvaluationGrid, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| Error::Parse(format!("bad number in matrix CSV: {e}")))?);
    }
    let Some((header, body)) = rows.split_first() else {
        return Err(Error::Parse("empty matrix CSV".into()));
    };
    let grid = EvaluationGrid::from_points(header)?;
    let m = grid.len();
    if body.len() != m || body.iter().any(|r| r.len() != m) {
        return Err(Error::Parse(format!("matrix CSV must hold {m} rows of {m} values")));
    }
    Ok((grid, body.concat()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SurfaceKind;

    #[test]
    fn dataset_round_trip() {
        let ds = SparseFunctionalDataset::new(vec![
            Curve::new(vec![0.1, 0.4], vec![1.5, -2.0]),
            Curve::new(vec![0.0, 0.3, 1.0], vec![0.25, 1e-17, 3.0]),
        ]);
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("curve_id,time,value\n"));
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn rejects_unsorted_rows_within_curve() {
        let text = "curve_id,time,value\n0,0.5,1\n0,0.2,2\n";
        let err = read_dataset(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("not strictly increasing"), "{err}");
    }

    #[test]
    fn rejects_decreasing_curve_ids_and_bad_header() {
        let text = "curve_id,time,value\n1,0.1,1\n1,0.2,2\n0,0.1,1\n0,0.3,1\n";
        assert!(read_dataset(text.as_bytes()).is_err());
        assert!(read_dataset("id,t,y\n0,0.1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_single_observation_curve() {
        let text = "curve_id,time,value\n0,0.1,1\n0,0.2,2\n1,0.5,1\n";
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn matrix_round_trip() {
        let grid = EvaluationGrid::uniform(4).unwrap();
        let s = SurfaceEstimate::from_fn(&grid, SurfaceKind::Covariance, |s, t| s.min(t) + 0.1);
        let mut buf = Vec::new();
        write_matrix_csv(&s, &mut buf).unwrap();
        let (g, values) = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(g, grid);
        assert_eq!(values, s.values);
    }
}
