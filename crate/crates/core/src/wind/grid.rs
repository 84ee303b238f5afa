//! Gridded wind fields stored in a small binary format.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! | 0      | 8    | magic `QWNDGRID`                        |
//! | 8      | 4    | version (u32, currently 1)              |
//! | 12     | 16   | nx, ny, nz, nt (u32)                    |
//! | 28     | 32   | dx, dy, dz (m), dt (s) (f64)            |
//! | 60     | 32   | x0, y0, z0 (m), t0 (s) (f64)            |
//! | 92     | ...  | nt*nz*ny*nx*3 f32 values                |
//!
//! Values are ordered `[t][z][y][x][component]` with components (north,
//! east, down) in m/s. Axes x, y, z are north, east, down.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;

pub const GRID_MAGIC: &[u8; 8] = b"QWNDGRID";
pub const GRID_VERSION: u32 = 1;
pub const GRID_HEADER_LEN: usize = 92;

#[derive(Clone, Debug, PartialEq)]
pub struct GridWindField {
    /// (nx, ny, nz, nt)
    pub dims: [usize; 4],
    /// (dx, dy, dz, dt)
    pub spacing: [f64; 4],
    /// (x0, y0, z0, t0)
    pub origin: [f64; 4],
    /// Interleaved components, `[t][z][y][x][c]`.
    pub data: Vec<f32>,
}

impl GridWindField {
    pub fn new(dims: [usize; 4], spacing: [f64; 4], origin: [f64; 4], data: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::invalid("grid.dims", "all dimensions must be at least 1"));
        }
        if spacing.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("grid.spacing", "spacings must be positive"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("grid.origin", "must be finite"));
        }
        let expected = dims.iter().product::<usize>() * 3;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            data,
        })
    }

    /// Builds a grid by evaluating `f(position, t)` at every node.
    pub fn from_fn(
        dims: [usize; 4],
        spacing: [f64; 4],
        origin: [f64; 4],
        f: impl Fn(Vec3, f64) -> Vec3,
    ) -> Result<Self> {
        let [nx, ny, nz, nt] = dims;
        let mut data = Vec::with_capacity(dims.iter().product::<usize>() * 3);
        for it in 0..nt {
            for iz in 0..nz {
                for iy in 0..ny {
                    for ix in 0..nx {
                        let p = Vec3::new(
                            origin[0] + ix as f64 * spacing[0],
                            origin[1] + iy as f64 * spacing[1],
                            origin[2] + iz as f64 * spacing[2],
                        );
                        let w = f(p, origin[3] + it as f64 * spacing[3]);
                        data.extend([w.x as f32, w.y as f32, w.z as f32]);
                    }
                }
            }
        }
        Self::new(dims, spacing, origin, data)
    }

    fn index(&self, ix: usize, iy: usize, iz: usize, it: usize) -> usize {
        let [nx, ny, nz, _] = self.dims;
        (((it * nz + iz) * ny + iy) * nx + ix) * 3
    }

    /// Stored value at a node.
    pub fn node(&self, ix: usize, iy: usize, iz: usize, it: usize) -> Vec3 {
        let i = self.index(ix, iy, iz, it);
        Vec3::new(
            f64::from(self.data[i]),
            f64::from(self.data[i + 1]),
            f64::from(self.data[i + 2]),
        )
    }

    /// Quad-linear interpolation. Horizontal axes wrap with period `n * d`;
    /// vertical and time queries clamp to the grid.
    pub fn sample(&self, position: Vec3, t: f64) -> Vec3 {
        let coords = [position.x, position.y, position.z, t];
        let mut lo = [0usize; 4];
        let mut hi = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for axis in 0..4 {
            let n = self.dims[axis];
            let s = (coords[axis] - self.origin[axis]) / self.spacing[axis];
            if axis < 2 {
                let s = s.rem_euclid(n as f64);
                let i = (s.floor() as usize).min(n - 1);
                lo[axis] = i;
                hi[axis] = (i + 1) % n;
                frac[axis] = s - i as f64;
            } else {
                let s = s.clamp(0.0, (n - 1) as f64);
                let i = (s.floor() as usize).min(n.saturating_sub(2));
                lo[axis] = i;
                hi[axis] = (i + 1).min(n - 1);
                frac[axis] = s - i as f64;
            }
        }
        let mut acc = Vec3::ZERO;
        for corner in 0..16u32 {
            let mut weight = 1.0;
            let mut idx = [0usize; 4];
            for axis in 0..4 {
                if corner >> axis & 1 == 1 {
                    weight *= frac[axis];
                    idx[axis] = hi[axis];
                } else {
                    weight *= 1.0 - frac[axis];
                    idx[axis] = lo[axis];
                }
            }
            if weight != 0.0 {
                acc += self.node(idx[0], idx[1], idx[2], idx[3]) * weight;
            }
        }
        acc
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(GRID_HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(GRID_MAGIC);
        out.extend_from_slice(&GRID_VERSION.to_le_bytes());
        for n in self.dims {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for v in self.spacing.iter().chain(&self.origin) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8, "magic")?;
        if magic != GRID_MAGIC {
            return Err(r.error(0, "bad magic"));
        }
        let version = r.u32("version")?;
        if version != GRID_VERSION {
            return Err(Error::Version {
                what: "grid wind file",
                found: version,
                expected: GRID_VERSION,
            });
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            let at = r.pos;
            *d = r.u32("dims")? as usize;
            if *d == 0 {
                return Err(r.error(at, "zero dimension"));
            }
        }
        let mut spacing = [0.0; 4];
        for s in &mut spacing {
            let at = r.pos;
            *s = r.f64("spacing")?;
            if !(*s > 0.0 && s.is_finite()) {
                return Err(r.error(at, "spacing must be positive"));
            }
        }
        let mut origin = [0.0; 4];
        for o in &mut origin {
            *o = r.f64("origin")?;
        }
        let count = dims
            .iter()
            .try_fold(3usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| r.error(12, "dimensions overflow"))?;
        let payload = r.take(count.saturating_mul(4), "data")?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if r.pos != bytes.len() {
            return Err(r.error(r.pos, "trailing bytes after data"));
        }
        Self::new(dims, spacing, origin, data)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, offset: usize, reason: &str) -> Error {
        Error::Format {
            what: "grid wind file",
            offset: offset as u64,
            reason: reason.to_string(),
        }
    }

    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error(self.bytes.len(), &format!("truncated while reading {field}"))),
        }
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        let b = self.take(4, field)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, field: &str) -> Result<f64> {
        let b = self.take(8, field)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn load_grid_wind(path: &Path) -> Result<GridWindField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    GridWindField::from_bytes(&bytes)
}

pub fn save_grid_wind(field: &GridWindField, path: &Path) -> Result<()> {
    fs::write(path, field.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Converts `t,x,y,z,wn,we,wd` rows covering a regular grid into a field.
/// Every node must appear exactly once; row order is free.
pub fn grid_from_csv(path: &Path) -> Result<GridWindField> {
    let rows = crate::io::read_numeric_csv(path, &["t", "x", "y", "z", "wn", "we", "wd"])?;
    // Column order in the rows is t, x, y, z; grid axes are x, y, z, t.
    let columns = [1usize, 2, 3, 0];
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(4);
    for &col in &columns {
        let mut values: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        axes.push(values);
    }
    let mut spacing = [1.0; 4];
    let mut origin = [0.0; 4];
    let mut dims = [0usize; 4];
    for (a, values) in axes.iter().enumerate() {
        dims[a] = values.len();
        origin[a] = values[0];
        if values.len() > 1 {
            let d = (values[values.len() - 1] - values[0]) / (values.len() - 1) as f64;
            let uniform = values
                .iter()
                .enumerate()
                .all(|(i, v)| (v - (values[0] + i as f64 * d)).abs() <= 1e-9 * d.abs().max(1.0));
            if !uniform {
                return Err(Error::invalid("grid csv", format!("axis {a} is not uniformly spaced")));
            }
            spacing[a] = d;
        }
    }
    let lookup: Vec<BTreeMap<u64, usize>> = axes
        .iter()
        .map(|v| v.iter().enumerate().map(|(i, x)| (x.to_bits(), i)).collect())
        .collect();
    let total = dims.iter().product::<usize>();
    if rows.len() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            actual: rows.len(),
        });
    }
    let mut data = vec![f32::NAN; total * 3];
    let mut seen = vec![false; total];
    for row in &rows {
        let idx: Vec<usize> = columns
            .iter()
            .zip(&lookup)
            .map(|(&c, map)| map[&row[c].to_bits()])
            .collect();
        let node = ((idx[3] * dims[2] + idx[2]) * dims[1] + idx[1]) * dims[0] + idx[0];
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::invalid("grid csv", format!("duplicate node at row {row:?}")));
        }
        for c in 0..3 {
            data[node * 3 + c] = row[4 + c] as f32;
        }
    }
    GridWindField::new(dims, spacing, origin, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_field() -> GridWindField {
        GridWindField::from_fn([4, 3, 3, 2], [10.0, 5.0, 2.0, 1.0], [0.0, 0.0, -4.0, 0.0], |p, t| {
            Vec3::new(0.1 * p.x, 0.2 * p.y, 0.5 * p.z + t)
        })
        .unwrap()
    }

    #[test]
    fn nodes_are_exact() {
        let g = linear_field();
        assert_eq!(g.sample(Vec3::new(20.0, 5.0, -2.0), 1.0), g.node(2, 1, 1, 1));
        assert_eq!(g.node(2, 1, 1, 1), Vec3::new(2.0, 1.0, 0.0));
    }

    #[test]
    fn midpoint_averages() {
        let g = GridWindField::new(
            [1, 1, 2, 1],
            [1.0; 4],
            [0.0; 4],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0],
        )
        .unwrap();
        assert_eq!(g.sample(Vec3::new(0.0, 0.0, 0.5), 0.0), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn uniform_field_everywhere() {
        let g = GridWindField::from_fn([3, 3, 3, 3], [1.0; 4], [0.0; 4], |_, _| Vec3::new(1.5, -2.0, 0.25)).unwrap();
        for p in [Vec3::new(-7.3, 100.2, 0.4), Vec3::new(1.1, 1.9, 9.0)] {
            assert_eq!(g.sample(p, 0.7), Vec3::new(1.5, -2.0, 0.25));
        }
    }

    #[test]
    fn horizontal_wrap_and_vertical_clamp() {
        let g = linear_field();
        assert_eq!(g.sample(Vec3::new(40.0, 0.0, -4.0), 0.0), g.node(0, 0, 0, 0));
        assert_eq!(g.sample(Vec3::new(-10.0, 0.0, -4.0), 0.0), g.node(3, 0, 0, 0));
        assert_eq!(g.sample(Vec3::new(0.0, 0.0, -100.0), -3.0), g.node(0, 0, 0, 0));
        assert_eq!(g.sample(Vec3::new(0.0, 0.0, 100.0), 30.0), g.node(0, 0, 2, 1));
        // Between the last node and the wrapped first node.
        let mid = g.sample(Vec3::new(35.0, 0.0, -4.0), 0.0);
        let expected = (g.node(3, 0, 0, 0) + g.node(0, 0, 0, 0)) * 0.5;
        assert!((mid - expected).max_abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let g = linear_field();
        let bytes = g.to_bytes();
        assert_eq!(bytes.len(), GRID_HEADER_LEN + g.data.len() * 4);
        assert_eq!(GridWindField::from_bytes(&bytes).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let g = linear_field();
        let mut bytes = g.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(GridWindField::from_bytes(&bytes), Err(Error::Format { offset: 0, .. })));

        let bytes = g.to_bytes();
        let short = &bytes[..bytes.len() - 3];
        match GridWindField::from_bytes(short) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, short.len() as u64),
            other => panic!("{other:?}"),
        }

        let mut bytes = g.to_bytes();
        bytes.push(0);
        assert!(matches!(GridWindField::from_bytes(&bytes), Err(Error::Format { .. })));

        let mut bytes = g.to_bytes();
        bytes[8] = 9;
        assert!(matches!(GridWindField::from_bytes(&bytes), Err(Error::Version { found: 9, .. })));

        let mut bytes = g.to_bytes();
        bytes[28..36].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert!(matches!(GridWindField::from_bytes(&bytes), Err(Error::Format { offset: 28, .. })));
    }
}
