//! Artifact serialization: PGM images (world input, map output), the
//! per-run CSV files, and the map CSV reader used by the render command.
//!
//! Float columns use the shortest round-trip decimal form, so writing a
//! map to CSV and reading it back reproduces every value bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::bhm::GlobalMapDb;
use crate::error::{Error, Result};
use crate::explorer::StepRecord;
use crate::geom::{Grid2, Point2};
use crate::reward::entropy;
use crate::sim::RobotPose;

/// Binary (P5) PGM with maxval 255; `pixels` are rows top-first.
pub fn pgm_bytes(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    debug_assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Parses P5 (binary) or P2 (ASCII) PGM bytes into rows-top-first pixels.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |message: String| Error::Format { what: "pgm image", message };
    // Header tokens may be separated by arbitrary whitespace and comments.
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    if magic != "P5" && magic != "P2" {
        return Err(bad(format!("unsupported magic {magic:?}")));
    }
    let width: usize =
        next_token(bytes)?.parse().map_err(|_| bad("bad width".into()))?;
    let height: usize =
        next_token(bytes)?.parse().map_err(|_| bad("bad height".into()))?;
    let maxval: usize =
        next_token(bytes)?.parse().map_err(|_| bad("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(bad(format!("unsupported maxval {maxval}")));
    }
    let n = width * height;
    if magic == "P5" {
        // Exactly one whitespace byte separates the header from raster data.
        let data_start = pos + 1;
        if bytes.len() < data_start + n {
            return Err(bad(format!(
                "raster holds {} bytes, expected {n}",
                bytes.len().saturating_sub(data_start)
            )));
        }
        Ok((width, height, bytes[data_start..data_start + n].to_vec()))
    } else {
        let mut pixels = Vec::with_capacity(n);
        for _ in 0..n {
            let v: usize = next_token(bytes)?.parse().map_err(|_| bad("bad pixel".into()))?;
            if v > maxval {
                return Err(bad(format!("pixel {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as u8);
        }
        Ok((width, height, pixels))
    }
}

/// Renders occupancy probabilities to PGM: p=0 maps to 255 (white, free),
/// p=1 to 0 (black, occupied), 0.5 to 128.
pub fn occupancy_pgm(grid: &Grid2, p: &[f64]) -> Vec<u8> {
    let pixels = layer_pixels(grid, p, |v| 255.0 * (1.0 - v));
    pgm_bytes(grid.nx, grid.ny, &pixels)
}

/// Renders the entropy of an occupancy layer to PGM, scaling 0..ln2 to
/// 0..255 (unknown space shows white).
pub fn entropy_pgm(grid: &Grid2, p: &[f64]) -> Vec<u8> {
    let pixels = layer_pixels(grid, p, |v| 255.0 * entropy(v) / std::f64::consts::LN_2);
    pgm_bytes(grid.nx, grid.ny, &pixels)
}

fn layer_pixels(grid: &Grid2, p: &[f64], shade: impl Fn(f64) -> f64) -> Vec<u8> {
    debug_assert_eq!(p.len(), grid.len());
    let mut pixels = Vec::with_capacity(p.len());
    for j in (0..grid.ny).rev() {
        for i in 0..grid.nx {
            pixels.push(shade(p[grid.index(i, j)]).round().clamp(0.0, 255.0) as u8);
        }
    }
    pixels
}

/// Cell probabilities as `x,y,p` rows in storage order.
pub fn map_csv(db: &GlobalMapDb) -> String {
    let grid = db.grid();
    let mut out = String::from("x,y,p\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let pt = grid.point(i, j);
            let _ = writeln!(out, "{},{},{}", pt.x, pt.y, db.probabilities()[grid.index(i, j)]);
        }
    }
    out
}

/// Reads a map CSV back, inferring the lattice from the row coordinates
/// (rows must be a complete grid in storage order, as written by
/// [`map_csv`]).
pub fn parse_map_csv(text: &str) -> Result<GlobalMapDb> {
    let bad = |message: String| Error::Format { what: "map csv", message };
    let mut lines = text.lines();
    match lines.next() {
        Some("x,y,p") => {}
        other => return Err(bad(format!("expected header x,y,p, got {other:?}"))),
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ps = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut field = |name: &str| -> Result<f64> {
            cols.next()
                .ok_or_else(|| bad(format!("row {}: missing {name}", idx + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad {name}", idx + 2)))
        };
        xs.push(field("x")?);
        ys.push(field("y")?);
        ps.push(field("p")?);
    }
    if xs.len() < 2 {
        return Err(bad("need at least two cells to infer the grid".into()));
    }
    // Column count = distance until x wraps back to the first value.
    let nx = (1..xs.len()).find(|&k| xs[k] == xs[0]).unwrap_or(xs.len());
    if xs.len() % nx != 0 {
        return Err(bad(format!("{} rows do not tile a width of {nx}", xs.len())));
    }
    let ny = xs.len() / nx;
    let resolution = if nx > 1 { xs[1] - xs[0] } else { ys[1] - ys[0] };
    // NaN coordinates must land here too, hence no plain `<= 0.0`.
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(bad(format!("non-increasing coordinates (resolution {resolution})")));
    }
    let grid = Grid2 { origin: Point2::new(xs[0], ys[0]), resolution, nx, ny };
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.index(i, j);
            let want = grid.point(i, j);
            if (xs[k] - want.x).abs() > 1e-9 || (ys[k] - want.y).abs() > 1e-9 {
                return Err(bad(format!(
                    "row {} at ({}, {}) is off the inferred lattice",
                    k + 2,
                    xs[k],
                    ys[k]
                )));
            }
        }
    }
    GlobalMapDb::from_cells(grid, ps)
}

/// Deterministic per-step metrics (no wall-clock columns; those live in
/// the separate timings CSV so byte-identical reruns stay byte-identical).
pub fn metrics_csv(records: &[StepRecord]) -> String {
    let mut out = String::from("step,x,y,theta,arc_length,dtheta,recovery,total_entropy,coverage\n");
    for r in records {
        let (len, dt) = match r.action {
            Some(a) => (a.arc_length, a.dtheta),
            None => (0.0, crate::explorer::RECOVERY_DTHETA),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            r.pose.x,
            r.pose.y,
            r.pose.theta,
            len,
            dt,
            u8::from(r.recovery),
            r.total_entropy,
            r.coverage
        );
    }
    out
}

/// Wall-clock timings per step, kept apart from the deterministic metrics.
pub fn timings_csv(records: &[StepRecord]) -> String {
    let mut out = String::from("step,planner_ms,map_ms\n");
    for r in records {
        let _ = writeln!(out, "{},{:.3},{:.3}", r.step, r.planner_ms, r.map_ms);
    }
    out
}

/// Executed path: the starting pose as step 0, then one post-action pose
/// per step.
pub fn trajectory_csv(start: RobotPose, records: &[StepRecord]) -> String {
    let mut out = String::from("step,x,y,theta\n");
    let _ = writeln!(out, "0,{},{},{}", start.x, start.y, start.theta);
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.step, r.pose.x, r.pose.y, r.pose.theta);
    }
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)?;
    Ok(())
}
