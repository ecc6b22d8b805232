//! Netpbm images and masks, flat vector CSV, and trace CSV.

use std::io::{BufRead, Read, Write};

use crate::error::{QrmError, Result};
use crate::field::ImageGrid;
use crate::flow::OuterLoopRecord;
use crate::operators::SamplingMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmFormat {
    /// `P2`
    Ascii,
    /// `P5`, big-endian samples when `maxval > 255`
    Binary,
}

/// Writes `img` mapped linearly from `[lo, hi]` onto `0..=maxval`, with
/// clamping.
pub fn write_pgm<W: Write>(
    mut w: W,
    img: &ImageGrid,
    lo: f64,
    hi: f64,
    maxval: u16,
    format: PgmFormat,
) -> Result<()> {
    if !(hi > lo) || maxval == 0 {
        return Err(QrmError::invalid(format!(
            "bad PGM range [{lo}, {hi}] or maxval {maxval}"
        )));
    }
    let (h, wd) = img.shape();
    let scale = maxval as f64 / (hi - lo);
    let q = |v: f64| ((v - lo) * scale).round().clamp(0.0, maxval as f64) as u16;
    match format {
        PgmFormat::Ascii => {
            writeln!(w, "P2\n{wd} {h}\n{maxval}")?;
            for i in 0..h {
                let row: Vec<String> = (0..wd).map(|j| q(img.get(i, j)).to_string()).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
        PgmFormat::Binary => {
            write!(w, "P5\n{wd} {h}\n{maxval}\n")?;
            let mut buf = Vec::with_capacity(h * wd * 2);
            for &v in img.as_slice() {
                let s = q(v);
                if maxval > 255 {
                    buf.extend_from_slice(&s.to_be_bytes());
                } else {
                    buf.push(s as u8);
                }
            }
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

struct Tokens<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.buf.len() && self.buf[self.pos] == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.buf.len() && !self.buf[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(QrmError::Parse("unexpected end of netpbm data".into()));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .map_err(|_| QrmError::Parse("non-ASCII netpbm token".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.next()?;
        t.parse()
            .map_err(|_| QrmError::Parse(format!("expected a number in netpbm data, got {t:?}")))
    }
}

/// Reads a `P2` or `P5` image, scaled to `[0, 1]` by `maxval`.
pub fn read_pgm<R: Read>(mut r: R) -> Result<ImageGrid> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut t = Tokens { buf: &buf, pos: 0 };
    let magic = t.next()?;
    let width = t.number()?;
    let height = t.number()?;
    let maxval = t.number()?;
    if maxval == 0 || maxval > 65535 {
        return Err(QrmError::Parse(format!("PGM maxval {maxval} out of range")));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    match magic {
        "P2" => {
            for _ in 0..n {
                data.push(t.number()? as f64 / maxval as f64);
            }
        }
        "P5" => {
            let start = t.pos + 1;
            let bytes = if maxval > 255 { 2 } else { 1 };
            let body = buf
                .get(start..start + n * bytes)
                .ok_or_else(|| QrmError::Parse("truncated P5 data".into()))?;
            for k in 0..n {
                let v = if bytes == 2 {
                    u16::from_be_bytes([body[2 * k], body[2 * k + 1]]) as usize
                } else {
                    body[k] as usize
                };
                data.push(v as f64 / maxval as f64);
            }
        }
        other => return Err(QrmError::Parse(format!("unsupported PGM magic {other:?}"))),
    }
    ImageGrid::new(height, width, data)
}

/// `P1` bitmap with `1` marking sampled frequencies, unshifted layout.
pub fn write_pbm<W: Write>(mut w: W, mask: &SamplingMask) -> Result<()> {
    writeln!(w, "P1\n{} {}", mask.width(), mask.height())?;
    for i in 0..mask.height() {
        let row: Vec<&str> = (0..mask.width())
            .map(|j| if mask.get(i, j) { "1" } else { "0" })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_pbm<R: Read>(mut r: R) -> Result<SamplingMask> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut t = Tokens { buf: &buf, pos: 0 };
    if t.next()? != "P1" {
        return Err(QrmError::Parse("expected a P1 bitmap".into()));
    }
    let width = t.number()?;
    let height = t.number()?;
    let mut data = Vec::with_capacity(width * height);
    // P1 allows bits without separators
    while data.len() < width * height {
        for c in t.next()?.bytes() {
            match c {
                b'0' => data.push(false),
                b'1' => data.push(true),
                _ => return Err(QrmError::Parse(format!("bad PBM bit {:?}", c as char))),
            }
        }
    }
    if data.len() != width * height {
        return Err(QrmError::Parse("PBM row overflow".into()));
    }
    SamplingMask::new(height, width, data)
}

/// One value per line, no header.
pub fn write_vector_csv<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_vector_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        out.push(
            s.parse()
                .map_err(|_| QrmError::Parse(format!("line {}: not a number: {s:?}", n + 1)))?,
        );
    }
    Ok(out)
}

pub const TRACE_HEADER: &str = "k,G,R,fidelity,u_norm,Au_minus_f_norm,rel_change,inner_iters";

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[OuterLoopRecord]) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.k, r.objective, r.r, r.fidelity, r.u_norm, r.au_minus_f_norm, r.rel_change, r.inner_iters
        )?;
    }
    Ok(())
}
