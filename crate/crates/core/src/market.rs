//! Auction bid ladders, aggregated step curves, price classes and the
//! supply/demand intersection.
//!
//! Prices live on a 0.1 EUR/MWh grid in `[-500, 3000]` and are stored as
//! integer ticks, so comparisons are exact. A supply curve is
//! `S(p) = sum of volumes bid at prices <= p` (right-continuous), a demand
//! curve `D(p) = sum of volumes bid at prices >= p` (left-continuous). Both
//! are stored with ascending prices.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hierarchy::BottomSeries;

pub const PRICE_MIN: f64 = -500.0;
pub const PRICE_MAX: f64 = 3000.0;
/// Price grid increment.
pub const PRICE_STEP: f64 = 0.1;
/// Distance from the grid tolerated before a price is rejected.
pub const SNAP_TOL: f64 = 1e-9;

const TICK_MIN: i32 = -5000;
const TICK_MAX: i32 = 30000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Supply,
    Demand,
}

impl Side {
    pub fn token(self) -> &'static str {
        match self {
            Side::Supply => "supply",
            Side::Demand => "demand",
        }
    }

    /// Prefix used in price-class labels (`S-500.0`, `D3000.0`).
    pub fn label_prefix(self) -> char {
        match self {
            Side::Supply => 'S',
            Side::Demand => 'D',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supply" => Ok(Side::Supply),
            "demand" => Ok(Side::Demand),
            other => Err(Error::Parse(format!("unknown side '{other}'"))),
        }
    }
}

/// Snaps a price to its grid tick.
pub fn price_to_tick(price: f64) -> Result<i32> {
    if !price.is_finite() {
        return Err(Error::InvalidPrice {
            price,
            reason: "not finite",
        });
    }
    let scaled = price / PRICE_STEP;
    let tick = scaled.round();
    if (price - tick * PRICE_STEP).abs() > SNAP_TOL {
        return Err(Error::InvalidPrice {
            price,
            reason: "not on the 0.1 grid",
        });
    }
    if tick < TICK_MIN as f64 || tick > TICK_MAX as f64 {
        return Err(Error::InvalidPrice {
            price,
            reason: "outside [-500, 3000]",
        });
    }
    Ok(tick as i32)
}

pub fn tick_to_price(tick: i32) -> f64 {
    tick as f64 / 10.0
}

/// Bids of one side for one auction; duplicate prices are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct BidLadder {
    side: Side,
    bids: BTreeMap<i32, f64>,
}

impl BidLadder {
    pub fn new(side: Side, entries: &[(f64, f64)]) -> Result<Self> {
        let mut bids = BTreeMap::new();
        for &(price, volume) in entries {
            let tick = price_to_tick(price)?;
            if !volume.is_finite() || volume < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "bid volume must be finite and >= 0, got {volume} at price {price}"
                )));
            }
            *bids.entry(tick).or_insert(0.0) += volume;
        }
        Ok(Self { side, bids })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// `(price, volume)` pairs in ascending price.
    pub fn entries(&self) -> Vec<(f64, f64)> {
        self.bids
            .iter()
            .map(|(&t, &v)| (tick_to_price(t), v))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.bids.values().sum()
    }
}

/// Cumulative volume by price, ascending in price for both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCurve {
    side: Side,
    ticks: Vec<i32>,
    cum: Vec<f64>,
}

impl StepCurve {
    /// Builds a curve from `(price, cumulative_volume)` points.
    pub fn from_points(side: Side, points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("step curve needs at least one point"));
        }
        let mut ticks = Vec::with_capacity(points.len());
        let mut cum = Vec::with_capacity(points.len());
        for &(price, volume) in points {
            let tick = price_to_tick(price)?;
            if !volume.is_finite() || volume < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "cumulative volume must be finite and >= 0, got {volume}"
                )));
            }
            if ticks.last().is_some_and(|&last| tick <= last) {
                return Err(Error::InvalidPrice {
                    price,
                    reason: "curve prices must be strictly increasing",
                });
            }
            if let Some(&prev) = cum.last() {
                let monotone = match side {
                    Side::Supply => volume >= prev,
                    Side::Demand => volume <= prev,
                };
                if !monotone {
                    return Err(Error::InvalidArgument(format!(
                        "{side} curve volumes must be {} in price",
                        if side == Side::Supply {
                            "nondecreasing"
                        } else {
                            "nonincreasing"
                        }
                    )));
                }
            }
            ticks.push(tick);
            cum.push(volume);
        }
        Ok(Self { side, ticks, cum })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.ticks
            .iter()
            .zip(&self.cum)
            .map(|(&t, &v)| (tick_to_price(t), v))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// Curve value at a tick.
    fn at_tick(&self, tick: i32) -> f64 {
        match self.side {
            Side::Supply => {
                let i = self.ticks.partition_point(|&t| t <= tick);
                if i == 0 {
                    0.0
                } else {
                    self.cum[i - 1]
                }
            }
            Side::Demand => {
                let i = self.ticks.partition_point(|&t| t < tick);
                self.cum.get(i).copied().unwrap_or(0.0)
            }
        }
    }

    /// Limit from the left of a tick.
    fn before_tick(&self, tick: i32) -> f64 {
        match self.side {
            Side::Supply => self.at_tick(tick - 1),
            Side::Demand => self.at_tick(tick),
        }
    }

    /// Limit from the right of a tick.
    fn after_tick(&self, tick: i32) -> f64 {
        match self.side {
            Side::Supply => self.at_tick(tick),
            Side::Demand => self.at_tick(tick + 1),
        }
    }

    /// Cumulative volume at any price (not restricted to the grid).
    pub fn value_at(&self, price: f64) -> f64 {
        let t = price * 10.0;
        let tick = match self.side {
            Side::Supply => t.floor(),
            Side::Demand => t.ceil(),
        };
        self.at_tick(tick.clamp(TICK_MIN as f64 - 1.0, TICK_MAX as f64 + 1.0) as i32)
    }

    fn volume_range(&self) -> (f64, f64) {
        let first = self.cum[0];
        let last = self.cum[self.cum.len() - 1];
        (first.min(last), first.max(last))
    }
}

/// Supply accumulates over ascending prices, demand over descending prices.
pub fn build_step_curve(bids: &BidLadder) -> Result<StepCurve> {
    if bids.is_empty() {
        return Err(Error::EmptyInput("bid ladder has no bids"));
    }
    let ticks: Vec<i32> = bids.bids.keys().copied().collect();
    let vols: Vec<f64> = bids.bids.values().copied().collect();
    let mut cum = vec![0.0; vols.len()];
    match bids.side {
        Side::Supply => {
            let mut acc = 0.0;
            for (c, v) in cum.iter_mut().zip(&vols) {
                acc += v;
                *c = acc;
            }
        }
        Side::Demand => {
            let mut acc = 0.0;
            for (c, v) in cum.iter_mut().zip(&vols).rev() {
                acc += v;
                *c = acc;
            }
        }
    }
    Ok(StepCurve {
        side: bids.side,
        ticks,
        cum,
    })
}

/// Class-delimiting prices for one side.
///
/// Supply boundaries `b_1 < ... < b_M` define classes `[-500, b_1]`,
/// `(b_1, b_2]`, ..., `(b_{M-1}, 3000]`. Demand classes are ordered by
/// descending price: with `d_1 > ... > d_M` they are `[d_1, 3000]`,
/// `[d_2, d_1)`, ..., `[-500, d_{M-1})`. Either way the cumulative sum of
/// the class volumes evaluates the step curve at [`PriceClassGrid::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct PriceClassGrid {
    side: Side,
    /// Ascending for supply, descending for demand.
    ticks: Vec<i32>,
}

impl PriceClassGrid {
    /// Grid from explicit boundaries (any order; duplicates collapse).
    pub fn from_boundaries(side: Side, boundaries: &[f64]) -> Result<Self> {
        let mut ticks = boundaries
            .iter()
            .map(|&p| price_to_tick(p))
            .collect::<Result<Vec<_>>>()?;
        ticks.sort_unstable();
        ticks.dedup();
        if side == Side::Demand {
            ticks.reverse();
        }
        if ticks.len() < 2 {
            return Err(Error::dim(
                "at least 2 distinct class boundaries",
                ticks.len(),
            ));
        }
        Ok(Self { side, ticks })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Boundaries in class order.
    pub fn boundaries(&self) -> Vec<f64> {
        self.ticks.iter().map(|&t| tick_to_price(t)).collect()
    }

    pub fn class_count(&self) -> usize {
        self.ticks.len()
    }

    /// Prices at which the cumulative class volumes equal the curve: the
    /// boundaries with the last one moved to the end of the price range.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = self.boundaries();
        let last = e.len() - 1;
        e[last] = match self.side {
            Side::Supply => PRICE_MAX,
            Side::Demand => PRICE_MIN,
        };
        e
    }

    /// Column labels such as `S-500.0` or `D3000.0`, one per class.
    pub fn labels(&self) -> Vec<String> {
        self.edges()
            .iter()
            .map(|p| format!("{}{p:.1}", self.side.label_prefix()))
            .collect()
    }

    fn class_of(&self, tick: i32) -> usize {
        let i = match self.side {
            Side::Supply => self.ticks.partition_point(|&b| b < tick),
            Side::Demand => self.ticks.partition_point(|&b| b > tick),
        };
        i.min(self.ticks.len() - 1)
    }
}

/// Inverts the curve at `m + 1` equidistant volumes between its smallest and
/// largest cumulative volume.
///
/// Supply boundaries are the smallest price whose cumulative volume reaches
/// each target; demand boundaries the largest such price. Coinciding
/// boundaries collapse, so the class count can be below `m + 1`.
pub fn make_price_classes(curve: &StepCurve, m: usize) -> Result<PriceClassGrid> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "price class count M must be >= 2, got {m}"
        )));
    }
    if curve.is_empty() {
        return Err(Error::EmptyInput("step curve has no points"));
    }
    let (v_min, v_max) = curve.volume_range();
    if v_min == v_max {
        return Err(Error::DegenerateCurve);
    }
    let mut ticks = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let target = if j == m {
            v_max
        } else {
            v_min + j as f64 * (v_max - v_min) / m as f64
        };
        let tick = match curve.side {
            Side::Supply => {
                let i = curve.cum.partition_point(|&v| v < target);
                curve.ticks[i.min(curve.len() - 1)]
            }
            Side::Demand => {
                let i = curve.cum.partition_point(|&v| v >= target);
                curve.ticks[i.saturating_sub(1)]
            }
        };
        if ticks.last() != Some(&tick) {
            ticks.push(tick);
        }
    }
    Ok(PriceClassGrid {
        side: curve.side,
        ticks,
    })
}

/// Sums bid volumes per price class; the result is the canonical bottom series.
pub fn bin_volumes(bids: &BidLadder, grid: &PriceClassGrid) -> Result<BottomSeries> {
    if bids.side != grid.side {
        return Err(Error::InvalidArgument(format!(
            "cannot bin {} bids with a {} grid",
            bids.side, grid.side
        )));
    }
    let mut b = vec![0.0; grid.class_count()];
    let ordered: Box<dyn Iterator<Item = (&i32, &f64)>> = match bids.side {
        Side::Supply => Box::new(bids.bids.iter()),
        Side::Demand => Box::new(bids.bids.iter().rev()),
    };
    for (&tick, &volume) in ordered {
        b[grid.class_of(tick)] += volume;
    }
    BottomSeries::new(b)
}

/// Market clearing point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub price: f64,
    pub volume: f64,
}

/// One piece of the price axis: a grid point or the open interval to the next breakpoint.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Point(i32),
    Open(i32, i32),
}

/// First price at which supply meets demand.
///
/// The price axis is split at every bid price into points and open
/// intervals, on which `E = S - D` is constant and nondecreasing from piece
/// to piece. The first piece with `E >= 0` locates the crossing:
///
/// * if `E = 0` there, the crossing is the run of zero pieces; the price is
///   the midpoint of the run and the volume the common value;
/// * otherwise a vertical segment crosses at a single price `q`, and the
///   volume is the midpoint of `[max(S(q-), D(q+)), min(S(q), D(q))]`.
///
/// Zero cleared volume or `E < 0` everywhere is [`Error::NoEquilibrium`].
pub fn intersect(supply: &StepCurve, demand: &StepCurve) -> Result<Equilibrium> {
    if supply.side != Side::Supply || demand.side != Side::Demand {
        return Err(Error::InvalidArgument(
            "intersect expects (supply, demand) curves".into(),
        ));
    }
    let mut breaks: Vec<i32> = supply.ticks.iter().chain(&demand.ticks).copied().collect();
    breaks.extend([TICK_MIN, TICK_MAX]);
    breaks.sort_unstable();
    breaks.dedup();
    let mut pieces = Vec::with_capacity(2 * breaks.len());
    for (i, &t) in breaks.iter().enumerate() {
        pieces.push(Piece::Point(t));
        if let Some(&next) = breaks.get(i + 1) {
            pieces.push(Piece::Open(t, next));
        }
    }
    let values = |p: Piece| match p {
        Piece::Point(t) => (supply.at_tick(t), demand.at_tick(t)),
        Piece::Open(lo, _) => (supply.after_tick(lo), demand.after_tick(lo)),
    };
    let first = pieces
        .iter()
        .position(|&p| {
            let (s, d) = values(p);
            s >= d
        })
        .ok_or(Error::NoEquilibrium)?;
    let (s, d) = values(pieces[first]);

    let eq = if s == d {
        let mut last = first;
        while let Some(&p) = pieces.get(last + 1) {
            let (s2, d2) = values(p);
            if s2 != d2 {
                break;
            }
            last += 1;
        }
        let lo = match pieces[first] {
            Piece::Point(t) | Piece::Open(t, _) => t,
        };
        let hi = match pieces[last] {
            Piece::Point(t) | Piece::Open(_, t) => t,
        };
        Equilibrium {
            price: (lo + hi) as f64 / 20.0,
            volume: s,
        }
    } else {
        let q = match pieces[first] {
            Piece::Point(t) | Piece::Open(t, _) => t,
        };
        let lo = supply.before_tick(q).max(demand.after_tick(q));
        let hi = supply.at_tick(q).min(demand.at_tick(q));
        Equilibrium {
            price: tick_to_price(q),
            volume: (lo + hi) / 2.0,
        }
    };
    if eq.volume <= 0.0 {
        return Err(Error::NoEquilibrium);
    }
    Ok(eq)
}
