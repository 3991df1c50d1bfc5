//! CSV readers and writers for the command-line file formats.
//!
//! | file | header |
//! |------|--------|
//! | curve or bottom series | `index,value` |
//! | forecast / reconciled vector | `level,value`, levels `a_n .. a_2, b_1 .. b_n` |
//! | residual panel, history, covariance | one column per level label |
//! | bids | `side,price,volume` |
//! | step curve | `price,cum_volume` |
//! | price-class grid | `boundary` |
//! | equilibrium | `price,volume` |
//!
//! Numbers are written with 12 significant digits.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hierarchy::{bottom_dim, HierarchyVector};
use crate::market::{BidLadder, Equilibrium, PriceClassGrid, Side, StepCurve};

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped,
/// exponent notation outside `1e-4 <= |x| < 1e12`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Labels of the levels of `y` for bottom dimension `n`.
pub fn level_labels(n: usize) -> Vec<String> {
    (2..=n)
        .rev()
        .map(|i| format!("a{i}"))
        .chain((1..=n).map(|i| format!("b{i}")))
        .collect()
}

fn parse_f64(field: &str, what: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}: {what} '{field}' is not a number")))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_error)?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse(format!(
            "expected header '{}', got '{}'",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Rows of a two-column file as `(first, second)` strings.
fn pairs<R: Read>(r: R, header: &[&str; 2]) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(r);
    expect_header(&mut rdr, header)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            Ok((rec[0].to_string(), rec[1].to_string()))
        })
        .collect()
}

/// Reads an `index,value` file; indices must run `1, 2, ...`.
pub fn read_series<R: Read>(r: R) -> Result<Vec<f64>> {
    let rows = pairs(r, &["index", "value"])?;
    if rows.is_empty() {
        return Err(Error::Parse("series file has no rows".into()));
    }
    rows.iter()
        .enumerate()
        .map(|(i, (idx, v))| {
            if idx.trim().parse::<usize>().ok() != Some(i + 1) {
                return Err(Error::Parse(format!(
                    "row {}: expected index {}, got '{idx}'",
                    i + 1,
                    i + 1
                )));
            }
            parse_f64(v, "value", i + 1)
        })
        .collect()
}

pub fn write_series<W: Write>(w: W, values: &[f64]) -> Result<()> {
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![(i + 1).to_string(), fmt_num(*v)]);
    write_rows(w, &["index", "value"], rows)
}

/// Reads a `level,value` forecast vector in `y` order.
pub fn read_levels<R: Read>(r: R) -> Result<HierarchyVector> {
    let rows = pairs(r, &["level", "value"])?;
    let n = bottom_dim(rows.len()).map_err(|_| {
        Error::Parse(format!(
            "a forecast needs an odd number >= 3 of levels, got {}",
            rows.len()
        ))
    })?;
    let labels = level_labels(n);
    let mut values = Vec::with_capacity(rows.len());
    for (i, ((label, v), want)) in rows.iter().zip(&labels).enumerate() {
        if label != want {
            return Err(Error::Parse(format!(
                "row {}: expected level '{want}', got '{label}'",
                i + 1
            )));
        }
        values.push(parse_f64(v, "value", i + 1)?);
    }
    HierarchyVector::new(values)
}

pub fn write_levels<W: Write>(w: W, values: &[f64]) -> Result<()> {
    let n = bottom_dim(values.len())?;
    let rows = level_labels(n)
        .into_iter()
        .zip(values)
        .map(|(l, v)| vec![l, fmt_num(*v)]);
    write_rows(w, &["level", "value"], rows)
}

/// Reads a panel whose header is the level labels in `y` order.
pub fn read_panel<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rdr = reader(r);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(String::from)
        .collect();
    let n = bottom_dim(header.len()).map_err(|_| {
        Error::Parse(format!(
            "panel needs an odd number >= 3 of columns, got {}",
            header.len()
        ))
    })?;
    let labels = level_labels(n);
    if header != labels {
        return Err(Error::Parse(format!(
            "panel header must be '{}', got '{}'",
            labels.join(","),
            header.join(",")
        )));
    }
    let mut flat = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        for field in rec.iter() {
            flat.push(parse_f64(field, "value", i + 1)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse("panel has no rows".into()));
    }
    Ok(DMatrix::from_row_slice(rows, header.len(), &flat))
}

/// Writes a matrix with level labels as header.
pub fn write_panel<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let labels = level_labels(bottom_dim(m.ncols())?);
    let header: Vec<&str> = labels.iter().map(String::as_str).collect();
    let rows = m
        .row_iter()
        .map(|r| r.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>());
    write_rows(w, &header, rows)
}

/// Both sides of one auction.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionBids {
    pub supply: BidLadder,
    pub demand: BidLadder,
}

impl AuctionBids {
    pub fn side(&self, side: Side) -> &BidLadder {
        match side {
            Side::Supply => &self.supply,
            Side::Demand => &self.demand,
        }
    }
}

/// Reads a `side,price,volume` file; either side may be absent.
pub fn read_bids<R: Read>(r: R) -> Result<AuctionBids> {
    let mut rdr = reader(r);
    expect_header(&mut rdr, &["side", "price", "volume"])?;
    let (mut supply, mut demand) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let side: Side = rec[0]
            .parse()
            .map_err(|e: Error| Error::Parse(format!("row {}: {e}", i + 1)))?;
        let entry = (
            parse_f64(&rec[1], "price", i + 1)?,
            parse_f64(&rec[2], "volume", i + 1)?,
        );
        match side {
            Side::Supply => supply.push(entry),
            Side::Demand => demand.push(entry),
        }
    }
    Ok(AuctionBids {
        supply: BidLadder::new(Side::Supply, &supply)?,
        demand: BidLadder::new(Side::Demand, &demand)?,
    })
}

pub fn write_bids<W: Write>(w: W, bids: &AuctionBids) -> Result<()> {
    let rows = [&bids.supply, &bids.demand].into_iter().flat_map(|ladder| {
        ladder
            .entries()
            .into_iter()
            .map(move |(p, v)| vec![ladder.side().token().to_string(), fmt_price(p), fmt_num(v)])
    });
    write_rows(w, &["side", "price", "volume"], rows)
}

fn fmt_price(p: f64) -> String {
    format!("{p:.1}")
}

pub fn write_curve<W: Write>(w: W, curve: &StepCurve) -> Result<()> {
    let rows = curve
        .points()
        .into_iter()
        .map(|(p, v)| vec![fmt_price(p), fmt_num(v)]);
    write_rows(w, &["price", "cum_volume"], rows)
}

pub fn read_curve<R: Read>(r: R, side: Side) -> Result<StepCurve> {
    let rows = pairs(r, &["price", "cum_volume"])?;
    let points = rows
        .iter()
        .enumerate()
        .map(|(i, (p, v))| {
            Ok((
                parse_f64(p, "price", i + 1)?,
                parse_f64(v, "cum_volume", i + 1)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    StepCurve::from_points(side, &points)
}

pub fn write_grid<W: Write>(w: W, grid: &PriceClassGrid) -> Result<()> {
    let rows = grid.boundaries().into_iter().map(|b| vec![fmt_price(b)]);
    write_rows(w, &["boundary"], rows)
}

pub fn read_grid<R: Read>(r: R, side: Side) -> Result<PriceClassGrid> {
    let mut rdr = reader(r);
    expect_header(&mut rdr, &["boundary"])?;
    let bounds = rdr
        .records()
        .enumerate()
        .map(|(i, rec)| parse_f64(&rec.map_err(csv_error)?[0], "boundary", i + 1))
        .collect::<Result<Vec<_>>>()?;
    PriceClassGrid::from_boundaries(side, &bounds)
}

pub fn write_equilibrium<W: Write>(w: W, eq: &Equilibrium) -> Result<()> {
    write_rows(
        w,
        &["price", "volume"],
        std::iter::once(vec![fmt_num(eq.price), fmt_num(eq.volume)]),
    )
}

/// Writes a header and rows of already formatted fields.
pub fn write_rows<W: Write, I>(w: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(header).map_err(io)?;
    for row in rows {
        wtr.write_record(&row).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Io(e.to_string()))
}
