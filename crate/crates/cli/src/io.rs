//! Output files: CSV tables, JSON summaries, MD checkpoints and the
//! collision operator cache.
//!
//! Floating point values are written with the shortest representation that
//! parses back to the same bits, so checkpoints and caches round-trip
//! exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use kinetic_core::kinetic::CollisionOperator;
use kinetic_core::md::{Boundary, Configuration};
use kinetic_core::scaling::Scaling;
use kinetic_core::velocity::VelocityGrid;
use nalgebra::DMatrix;
use serde::Serialize;

pub const CHECKPOINT_HEADER: &str = "kinetic-cascade checkpoint v1";
pub const CACHE_HEADER: &str = "kinetic-cascade operator cache v1";

/// Writes a CSV file with a header row.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Snapshot of an MD run that can be resumed bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub scaling: Scaling,
    pub boundary: Boundary,
    pub config: Configuration,
    /// Thermostat stream seed and word position.
    pub seed: u64,
    pub word_pos: u128,
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        let s = &self.scaling;
        writeln!(w, "{CHECKPOINT_HEADER}")?;
        writeln!(w, "scaling {} {} {:e} {:e} {:e}", s.d, s.n, s.epsilon, s.alpha, s.gamma)?;
        match self.boundary {
            Boundary::Torus => writeln!(w, "boundary torus")?,
            Boundary::Walls { temperature: [a, b] } => writeln!(w, "boundary walls {a:e} {b:e}")?,
        }
        writeln!(w, "time {:e}", self.config.time)?;
        writeln!(w, "stream {} {}", self.seed, self.word_pos)?;
        writeln!(w, "particles {}", self.config.len())?;
        for (x, v) in self.config.positions.iter().zip(&self.config.velocities) {
            writeln!(w, "{:e} {:e} {:e} {:e}", x[0], x[1], v[0], v[1])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut lines = BufReader::new(f).lines();
        let mut next = |what: &str| -> Result<Vec<String>> {
            let l = lines.next().ok_or_else(|| anyhow!("checkpoint truncated before {what}"))??;
            Ok(l.split_whitespace().map(String::from).collect())
        };
        let header = next("header")?.join(" ");
        if header != CHECKPOINT_HEADER {
            bail!("not a checkpoint or unsupported version: {header:?}");
        }
        let t = next("scaling")?;
        expect_tag(&t, "scaling", 6)?;
        let scaling = Scaling {
            d: t[1].parse()?,
            n: t[2].parse()?,
            epsilon: t[3].parse()?,
            alpha: t[4].parse()?,
            gamma: t[5].parse()?,
        };
        let t = next("boundary")?;
        let boundary = match t.get(1).map(|s| s.as_str()) {
            Some("torus") => Boundary::Torus,
            Some("walls") => {
                expect_tag(&t, "boundary", 4)?;
                Boundary::Walls { temperature: [t[2].parse()?, t[3].parse()?] }
            }
            _ => bail!("bad boundary line {t:?}"),
        };
        let t = next("time")?;
        expect_tag(&t, "time", 2)?;
        let time: f64 = t[1].parse()?;
        let t = next("stream")?;
        expect_tag(&t, "stream", 3)?;
        let (seed, word_pos) = (t[1].parse()?, t[2].parse()?);
        let t = next("particles")?;
        expect_tag(&t, "particles", 2)?;
        let n: usize = t[1].parse()?;
        if n != scaling.n {
            bail!("checkpoint holds {n} particles but scaling has N = {}", scaling.n);
        }
        let mut positions = Vec::with_capacity(n);
        let mut velocities = Vec::with_capacity(n);
        for k in 0..n {
            let t = next("particle data")?;
            if t.len() != 4 {
                bail!("particle {k}: expected 4 values");
            }
            let v: Vec<f64> = t.iter().map(|s| s.parse()).collect::<std::result::Result<_, _>>()?;
            positions.push([v[0], v[1]]);
            velocities.push([v[2], v[3]]);
        }
        Ok(Self { scaling, boundary, config: Configuration { positions, velocities, time }, seed, word_pos })
    }
}

fn expect_tag(t: &[String], tag: &str, len: usize) -> Result<()> {
    if t.first().map(|s| s.as_str()) != Some(tag) || t.len() != len {
        bail!("expected {tag} line with {} fields, got {t:?}", len - 1);
    }
    Ok(())
}

/// Cache file name for a grid.
pub fn cache_path(dir: &Path, grid: &VelocityGrid) -> PathBuf {
    dir.join(format!("operator-d2-r{}-a{}-v{}.txt", grid.n_r(), grid.n_theta(), grid.v_max()))
}

pub fn write_operator(path: &Path, op: &CollisionOperator) -> Result<()> {
    let g = op.grid();
    let mut w = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{CACHE_HEADER}")?;
    writeln!(w, "key 2 {} {} {:e}", g.n_r(), g.n_theta(), g.v_max())?;
    writeln!(w, "modes {}", op.blocks().len())?;
    for b in op.blocks() {
        for i in 0..b.nrows() {
            let row: Vec<String> = (0..b.ncols()).map(|j| format!("{:e}", b[(i, j)])).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a cached operator; `Ok(None)` if the file is missing, an error if
/// it exists but belongs to another grid or version.
pub fn read_operator(path: &Path, grid: &VelocityGrid) -> Result<Option<CollisionOperator>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CACHE_HEADER) {
        bail!("{}: unsupported operator cache version", path.display());
    }
    let key = format!("key 2 {} {} {:e}", grid.n_r(), grid.n_theta(), grid.v_max());
    if lines.next() != Some(key.as_str()) {
        bail!("{}: cache key does not match the grid", path.display());
    }
    let modes: usize =
        lines.next().and_then(|l| l.strip_prefix("modes ")).ok_or_else(|| anyhow!("missing mode count"))?.parse()?;
    let n = grid.n_r();
    let mut blocks = Vec::with_capacity(modes);
    for _ in 0..modes {
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let l = lines.next().ok_or_else(|| anyhow!("operator cache truncated"))?;
            for s in l.split_whitespace() {
                data.push(s.parse::<f64>()?);
            }
        }
        if data.len() != n * n {
            bail!("operator cache block has {} entries, expected {}", data.len(), n * n);
        }
        blocks.push(DMatrix::from_row_slice(n, n, &data));
    }
    Ok(Some(CollisionOperator::from_blocks(grid.clone(), blocks)?))
}

/// Operator for `grid`, from `cache` if present; assembles and stores it
/// otherwise.
pub fn cached_operator(grid: &VelocityGrid, cache: Option<&Path>) -> Result<CollisionOperator> {
    if let Some(dir) = cache {
        let path = cache_path(dir, grid);
        if let Some(op) = read_operator(&path, grid)? {
            log::debug!("operator loaded from {}", path.display());
            return Ok(op);
        }
        let op = CollisionOperator::assemble(grid)?;
        fs::create_dir_all(dir)?;
        write_operator(&path, &op)?;
        log::info!("operator cached at {}", path.display());
        return Ok(op);
    }
    Ok(CollisionOperator::assemble(grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        let c = Checkpoint {
            scaling: Scaling { d: 2, n: 2, epsilon: 0.1, alpha: 5.0, gamma: 1.0 },
            boundary: Boundary::Walls { temperature: [1.0, 1.0 / 3.0] },
            config: Configuration {
                positions: vec![[0.1, 0.2], [std::f64::consts::PI / 4.0, 0.9]],
                velocities: vec![[-1e-300, 2.5], [1.0 / 7.0, -3.0]],
                time: 0.3,
            },
            seed: u64::MAX,
            word_pos: 12345678901234567890,
        };
        c.write(&path).unwrap();
        assert_eq!(Checkpoint::read(&path).unwrap(), c);
        fs::write(&path, "something else\n").unwrap();
        assert!(Checkpoint::read(&path).is_err());
    }

    #[test]
    fn operator_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = VelocityGrid::new(6, 8, 7.0).unwrap();
        let op = cached_operator(&grid, Some(dir.path())).unwrap();
        let again = read_operator(&cache_path(dir.path(), &grid), &grid).unwrap().unwrap();
        assert_eq!(op.blocks(), again.blocks());
        let other = VelocityGrid::new(6, 12, 7.0).unwrap();
        fs::copy(cache_path(dir.path(), &grid), cache_path(dir.path(), &other)).unwrap();
        assert!(read_operator(&cache_path(dir.path(), &other), &other).is_err());
    }

    #[test]
    fn csv_quotes_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b"], vec![vec!["1".to_string(), "x,\"y\"".to_string()]]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,\"x,\"\"y\"\"\"\n");
    }
}
