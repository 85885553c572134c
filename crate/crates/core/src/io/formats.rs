//! On-disk formats.
//!
//! Grid snapshot (`.bin`): `u64` width, `u64` height, `f64` hr, `f64` hs,
//! then `width * height` values row-major in `r`; all little-endian.
//!
//! Particle history (`.bin`): magic `BIROTPH1`, `u64` count, `f64` spacing,
//! then `nu`, `q`, `a0` (count values each), `u64` frames, and per frame
//! `u64` step, `f64` t, `r`, `s`, `u64` components, and per component
//! `u64` length followed by its `r` and `s`. Marker spacing follows the
//! frame count as one `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::{DiagnosticsRecord, CSV_COLUMNS};
use crate::elliptic::{Grid, GridField};
use crate::error::{Error, Result};
use crate::model::{BoundaryMarkers, ParticleSet, Polyline};
use crate::transport::Frame;

const HISTORY_MAGIC: &[u8; 8] = b"BIROTPH1";

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let run = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    run().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_csv(rows: &[DiagnosticsRecord]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let line: Vec<String> = r.as_row().iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CSV_COLUMNS.join(",") {
        return Err(Error::Parse {
            field: "header".into(),
            message: format!("unexpected diagnostics header {header:?}"),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    field: format!("row {}", k + 1),
                    message: e.to_string(),
                })?;
            let row: [f64; 16] = vals.try_into().map_err(|v: Vec<f64>| Error::Parse {
                field: format!("row {}", k + 1),
                message: format!("expected 16 columns, found {}", v.len()),
            })?;
            Ok(DiagnosticsRecord::from_row(&row))
        })
        .collect()
}

/// Header `r,s,value`, one node per line.
pub fn field_csv(f: &GridField) -> String {
    let g = f.grid;
    let mut out = String::with_capacity(g.len() * 72);
    out.push_str("r,s,value\n");
    for i in 0..g.width() {
        for j in 0..g.height() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(g.r(i)),
                fmt_f64(g.s(j)),
                fmt_f64(f.at(i, j))
            ));
        }
    }
    out
}

pub fn field_bin(f: &GridField) -> Vec<u8> {
    let g = f.grid;
    let mut out = Vec::with_capacity(32 + 8 * g.len());
    out.extend_from_slice(&(g.width() as u64).to_le_bytes());
    out.extend_from_slice(&(g.height() as u64).to_le_bytes());
    out.extend_from_slice(&g.hr.to_le_bytes());
    out.extend_from_slice(&g.hs.to_le_bytes());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Parse {
                field: "binary".into(),
                message: format!("truncated at byte {}", self.pos),
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn count(&mut self) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > self.bytes.len() {
            return Err(Error::Parse {
                field: "binary".into(),
                message: format!("implausible length {n}"),
            });
        }
        Ok(n)
    }

    fn vec(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Reads a snapshot written by [`field_bin`], given the grid extents.
pub fn parse_field_bin(bytes: &[u8], name: &str) -> Result<GridField> {
    let mut rd = Reader { bytes, pos: 0 };
    let (w, h) = (rd.count()?, rd.count()?);
    let (hr, hs) = (rd.f64()?, rd.f64()?);
    if w < 10 || h < 10 {
        return Err(Error::Parse {
            field: "dims".into(),
            message: format!("{w} x {h}"),
        });
    }
    let grid = Grid::new(hr * (w - 1) as f64, hs * (h - 1) as f64, w - 2, h - 2)?;
    let values = rd.vec(w * h)?;
    Ok(GridField {
        grid,
        name: name.to_string(),
        values,
    })
}

/// Marker polylines as `component,index,r,s`.
pub fn markers_csv(m: &BoundaryMarkers) -> String {
    let mut out = String::from("component,index,r,s\n");
    for (c, pl) in m.components.iter().enumerate() {
        for k in 0..pl.len() {
            out.push_str(&format!(
                "{c},{k},{},{}\n",
                fmt_f64(pl.r[k]),
                fmt_f64(pl.s[k])
            ));
        }
    }
    out
}

/// Particle tables plus recorded frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleHistory {
    pub base: ParticleSet,
    pub frames: Vec<Frame>,
}

impl ParticleHistory {
    /// The particle set of frame `k`.
    pub fn particles(&self, k: usize) -> ParticleSet {
        let mut p = self.base.clone();
        p.r.clone_from(&self.frames[k].r);
        p.s.clone_from(&self.frames[k].s);
        p
    }
}

pub fn history_bin(base: &ParticleSet, frames: &[Frame]) -> Vec<u8> {
    let mut out = Vec::new();
    let put = |out: &mut Vec<u8>, xs: &[f64]| {
        xs.iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes()))
    };
    out.extend_from_slice(HISTORY_MAGIC);
    out.extend_from_slice(&(base.len() as u64).to_le_bytes());
    out.extend_from_slice(&base.h.to_le_bytes());
    put(&mut out, &base.nu);
    put(&mut out, &base.q);
    put(&mut out, &base.a0);
    out.extend_from_slice(&(frames.len() as u64).to_le_bytes());
    let spacing = frames.first().map_or(base.h, |f| f.markers.spacing);
    out.extend_from_slice(&spacing.to_le_bytes());
    for f in frames {
        out.extend_from_slice(&(f.step as u64).to_le_bytes());
        out.extend_from_slice(&f.t.to_le_bytes());
        put(&mut out, &f.r);
        put(&mut out, &f.s);
        out.extend_from_slice(&(f.markers.components.len() as u64).to_le_bytes());
        for c in &f.markers.components {
            out.extend_from_slice(&(c.len() as u64).to_le_bytes());
            put(&mut out, &c.r);
            put(&mut out, &c.s);
        }
    }
    out
}

pub fn parse_history_bin(bytes: &[u8]) -> Result<ParticleHistory> {
    let mut rd = Reader { bytes, pos: 0 };
    if rd.take(8)? != HISTORY_MAGIC {
        return Err(Error::Parse {
            field: "magic".into(),
            message: "not a particle history file".into(),
        });
    }
    let n = rd.count()?;
    let h = rd.f64()?;
    let nu = rd.vec(n)?;
    let q = rd.vec(n)?;
    let a0 = rd.vec(n)?;
    let nframes = rd.count()?;
    let spacing = rd.f64()?;
    let mut frames = Vec::with_capacity(nframes);
    for _ in 0..nframes {
        let step = rd.u64()? as usize;
        let t = rd.f64()?;
        let r = rd.vec(n)?;
        let s = rd.vec(n)?;
        let nc = rd.count()?;
        let mut components = Vec::with_capacity(nc);
        for _ in 0..nc {
            let len = rd.count()?;
            components.push(Polyline {
                r: rd.vec(len)?,
                s: rd.vec(len)?,
            });
        }
        frames.push(Frame {
            step,
            t,
            r,
            s,
            markers: BoundaryMarkers {
                components,
                spacing,
            },
        });
    }
    let base = ParticleSet {
        r: frames.first().map_or_else(|| vec![0.0; n], |f| f.r.clone()),
        s: frames.first().map_or_else(|| vec![0.0; n], |f| f.s.clone()),
        nu,
        q,
        a0,
        h,
    };
    Ok(ParticleHistory { base, frames })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PatchSpec, QuadrantPoint, SymmetryConfig};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn f64_text_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn diagnostics_round_trip() {
        let rec = DiagnosticsRecord {
            t: 0.1,
            l: 1.0 / 3.0,
            pr: std::f64::consts::PI,
            ..DiagnosticsRecord::default()
        };
        let text = diagnostics_csv(&[rec, rec]);
        assert!(text.starts_with("t,R,S,L,Pr,Ps,mass,warea,xnorm,blowint,rate_r_fd,rate_r_rhs,rate_s_fd,rate_s_rhs,claim_ratio,bound_margin\n"));
        assert_eq!(parse_diagnostics_csv(&text).unwrap(), vec![rec, rec]);
    }

    #[test]
    fn field_bin_round_trip() {
        let g = Grid::new(2.0, 3.0, 9, 11).unwrap();
        let f = GridField::from_fn(g, "psi", |r, s| r * s.sin());
        let bytes = field_bin(&f);
        assert_eq!(bytes.len(), 32 + 8 * 11 * 13);
        let back = parse_field_bin(&bytes, "psi").unwrap();
        assert_eq!(back.values, f.values);
        assert!((back.grid.r_max - 2.0).abs() < 1e-14);
        assert!(field_csv(&f).lines().count() == 1 + 11 * 13);
        assert!(parse_field_bin(&bytes[..40], "psi").is_err());
    }

    #[test]
    fn history_round_trip() {
        let cfg = SymmetryConfig::new(1, 2).unwrap();
        let pts = [
            QuadrantPoint { r: 1.0, s: 2.0 },
            QuadrantPoint { r: 1.5, s: 0.5 },
        ];
        let base = ParticleSet::from_parts(&cfg, &pts, &[1.0, -2.0], &[0.01, 0.01], 0.1);
        let markers =
            BoundaryMarkers::from_patch(&PatchSpec::rectangle(1.0, 2.0, 1.0, 2.0, 1.0), 0.25);
        let frames = vec![
            Frame {
                step: 0,
                t: 0.0,
                r: base.r.clone(),
                s: base.s.clone(),
                markers: markers.clone(),
            },
            Frame {
                step: 3,
                t: 0.7,
                r: vec![1.1, 1.6],
                s: vec![2.1, 0.4],
                markers,
            },
        ];
        let h = parse_history_bin(&history_bin(&base, &frames)).unwrap();
        assert_eq!(h.base, base);
        assert_eq!(h.frames, frames);
        assert_eq!(h.particles(1).r, vec![1.1, 1.6]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert!(!dir.path().join("x.txt.tmp").exists());
        let bad = dir.path().join("missing").join("y.txt");
        assert!(matches!(write_atomic(&bad, b"z"), Err(Error::Io { .. })));
    }
}
