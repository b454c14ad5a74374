//! Snapshot files and CSV output.
//!
//! A snapshot (`.dwf`) is little-endian: the magic bytes `DWF1`, `u32`
//! dimension count, `u32` points per axis, `f64` half-width, `f64` time,
//! then every value as `f64` in row-major order (last axis fastest).

use std::io::{Read, Write};
use std::sync::Arc;

use crate::analysis::{DecayReport, TimeSeries};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Real;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"DWF1";

/// A field together with its time stamp.
#[derive(Clone, Debug)]
pub struct Snapshot<T: Real> {
    pub time: T,
    pub field: Field<T>,
}

pub fn write_snapshot<T: Real, W: Write>(mut w: W, field: &Field<T>, time: T) -> Result<()> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(24 + 8 * field.values().len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&(grid.n_dims() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_dim() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width().as_f64().to_le_bytes());
    buf.extend_from_slice(&time.as_f64().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const K: usize>(bytes: &[u8], at: &mut usize) -> Result<[u8; K]> {
    let end = *at + K;
    let chunk = bytes
        .get(*at..end)
        .ok_or_else(|| Error::Snapshot(format!("truncated at byte {}", *at)))?;
    *at = end;
    Ok(chunk.try_into().expect("length checked"))
}

/// Reads a snapshot, building a fresh grid from its header.
pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<Snapshot<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut at = 0;
    if &take::<4>(&bytes, &mut at)? != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let n_dims = u32::from_le_bytes(take(&bytes, &mut at)?) as usize;
    let points = u32::from_le_bytes(take(&bytes, &mut at)?) as usize;
    let half_width = f64::from_le_bytes(take(&bytes, &mut at)?);
    let time = f64::from_le_bytes(take(&bytes, &mut at)?);
    let grid = Grid::new(n_dims, points, T::lit(half_width))?;
    let count = grid.len();
    let expected = at + 8 * count;
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "expected {expected} bytes for {count} values, found {}",
            bytes.len()
        )));
    }
    let values = (0..count)
        .map(|_| take::<8>(&bytes, &mut at).map(|b| T::lit(f64::from_le_bytes(b))))
        .collect::<Result<Vec<T>>>()?;
    Ok(Snapshot {
        time: T::lit(time),
        field: Field::new(grid, values)?,
    })
}

/// Reads a snapshot onto an existing grid, which must match the header.
pub fn read_snapshot_on<T: Real, R: Read>(r: R, grid: &Arc<Grid<T>>) -> Result<Snapshot<T>> {
    let snap = read_snapshot::<T, R>(r)?;
    if !snap.field.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    let field = Field::new(grid.clone(), snap.field.into_values())?;
    Ok(Snapshot { time: snap.time, field })
}

/// `t,quantity,value` rows.
pub fn write_series_csv<T: Real, W: Write>(mut w: W, series: &TimeSeries<T>) -> Result<()> {
    writeln!(w, "t,quantity,value")?;
    for (t, q, v) in series.rows() {
        writeln!(w, "{},{},{:e}", t, q, v)?;
    }
    Ok(())
}

/// Parses the output of [`write_series_csv`].
pub fn read_series_csv(text: &str) -> Result<TimeSeries<f64>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("t,quantity,value") {
        return Err(Error::InvalidArgument("missing t,quantity,value header".into()));
    }
    let mut series = TimeSeries::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || Error::InvalidArgument(format!("malformed series row {}: {line}", i + 2));
        let mut parts = line.split(',');
        let t: f64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let q = parts.next().ok_or_else(bad)?.trim().to_string();
        let v: f64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        series.push(t, q, v);
    }
    Ok(series)
}

/// `quantity,slope,stderr,target,tolerance,verdict` rows.
pub fn write_report_csv<W: Write>(mut w: W, reports: &[DecayReport]) -> Result<()> {
    writeln!(w, "quantity,slope,stderr,target,tolerance,verdict")?;
    for r in reports {
        writeln!(
            w,
            "{},{:.6},{:.6e},{},{},{}",
            r.quantity,
            r.slope,
            r.stderr,
            r.target,
            r.tolerance,
            r.verdict()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn snapshot_header_layout() {
        let g = make_grid::<f64>(1, 16, 2.5).unwrap();
        let f = Field::from_fn(g, |x| x[0]).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 1.25).unwrap();
        assert_eq!(&buf[..4], b"DWF1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(buf[12..20].try_into().unwrap()), 2.5);
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), 1.25);
        assert_eq!(f64::from_le_bytes(buf[28..36].try_into().unwrap()), -2.5);
        assert_eq!(buf.len(), 28 + 8 * 16);
    }

    #[test]
    fn snapshot_round_trip_2d() {
        let g = make_grid::<f64>(2, 16, 3.0).unwrap();
        let f = Field::from_fn(g.clone(), |x| x[0] * 10.0 + x[1]).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 7.0).unwrap();
        let back = read_snapshot_on(&buf[..], &g).unwrap();
        assert_eq!(back.time, 7.0);
        assert_eq!(back.field.values(), f.values());
    }

    #[test]
    fn snapshot_rejects_corruption() {
        let g = make_grid::<f64>(1, 16, 1.0).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &Field::zeros(g), 0.0).unwrap();
        assert!(read_snapshot::<f64, _>(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_snapshot::<f64, _>(&bad[..]).is_err());
    }

    #[test]
    fn series_csv_round_trip() {
        let mut s = TimeSeries::new();
        s.push(0.0, "linf_a0_h0", 1.0);
        s.push(0.5, "linf_a0_h0", 0.25);
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,quantity,value\n"));
        let back = read_series_csv(&text).unwrap();
        assert_eq!(back.get("linf_a0_h0"), vec![(0.0, 1.0), (0.5, 0.25)]);
    }
}
