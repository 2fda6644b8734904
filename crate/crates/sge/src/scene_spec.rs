//! Textual scene descriptions used on the command line and in bench sets.
//!
//! | text | scene |
//! |------|-------|
//! | `plane:D` | constant disparity `D` |
//! | `step:L:R[:SPLIT]` | `L` left of column `SPLIT` (default: centre), `R` right of it |
//! | `ramp:BASE:PER_COL:PER_ROW` | `BASE + PER_COL * x + PER_ROW * y`, rounded |
//! | `sphere:BASE:HEIGHT[:RADIUS]` | centred bump on a `BASE` plane |
//! | `translating:L:R:DX` | step scene moving `DX` pixels per slide |
//!
//! Disparities are in pixels.

use std::fmt;
use std::str::FromStr;

use sge_core::simulator::{plane, ramp, sphere_cap, step, Motion};
use sge_core::Scene;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneSpec {
    Plane { disparity: f64 },
    Step { left: f64, right: f64, split: Option<usize> },
    Ramp { base: f64, per_col: f64, per_row: f64 },
    Sphere { base: f64, height: f64, radius: Option<f64> },
    Translating { left: f64, right: f64, dx: i32 },
}

impl SceneSpec {
    pub fn build(&self, dims: (usize, usize)) -> Result<Scene> {
        let (w, h) = dims;
        let disparity = match *self {
            SceneSpec::Plane { disparity } => plane(w, h, disparity),
            SceneSpec::Step { left, right, split } => step(w, h, left, right, split.unwrap_or(w / 2)),
            SceneSpec::Ramp { base, per_col, per_row } => ramp(w, h, base, per_col, per_row),
            SceneSpec::Sphere { base, height, radius } => {
                let r = radius.unwrap_or(w.min(h) as f64 / 3.0);
                sphere_cap(w, h, base, height, (w as f64 / 2.0, h as f64 / 2.0), r)
            }
            SceneSpec::Translating { left, right, .. } => step(w, h, left, right, w / 2),
        };
        let scene = Scene::with_uniform_albedo(disparity)?;
        Ok(match *self {
            SceneSpec::Translating { dx, .. } => scene.with_motion(Motion { dx_px: dx, dy_px: 0 }),
            _ => scene,
        })
    }
}

fn num<T: FromStr>(spec: &str, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Usage(format!("bad number `{tok}` in scene `{spec}`")))
}

impl FromStr for SceneSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let n = |i: usize| num::<f64>(s, parts[i]);
        Ok(match (parts[0], parts.len()) {
            ("plane", 2) => SceneSpec::Plane { disparity: n(1)? },
            ("step", 3 | 4) => SceneSpec::Step {
                left: n(1)?,
                right: n(2)?,
                split: parts.get(3).map(|t| num(s, t)).transpose()?,
            },
            ("ramp", 4) => SceneSpec::Ramp {
                base: n(1)?,
                per_col: n(2)?,
                per_row: n(3)?,
            },
            ("sphere", 3 | 4) => SceneSpec::Sphere {
                base: n(1)?,
                height: n(2)?,
                radius: parts.get(3).map(|t| num(s, t)).transpose()?,
            },
            ("translating", 4) => SceneSpec::Translating {
                left: n(1)?,
                right: n(2)?,
                dx: num(s, parts[3])?,
            },
            _ => {
                return Err(Error::Usage(format!(
                    "unknown scene `{s}`; expected plane:D, step:L:R[:SPLIT], ramp:BASE:PER_COL:PER_ROW, \
                     sphere:BASE:HEIGHT[:RADIUS] or translating:L:R:DX"
                )))
            }
        })
    }
}

impl fmt::Display for SceneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneSpec::Plane { disparity } => write!(f, "plane:{disparity}"),
            SceneSpec::Step { left, right, split } => {
                write!(f, "step:{left}:{right}")?;
                split.map_or(Ok(()), |s| write!(f, ":{s}"))
            }
            SceneSpec::Ramp { base, per_col, per_row } => write!(f, "ramp:{base}:{per_col}:{per_row}"),
            SceneSpec::Sphere { base, height, radius } => {
                write!(f, "sphere:{base}:{height}")?;
                radius.map_or(Ok(()), |r| write!(f, ":{r}"))
            }
            SceneSpec::Translating { left, right, dx } => write!(f, "translating:{left}:{right}:{dx}"),
        }
    }
}

/// Scenes timed by `sge bench`.
pub fn bench_scenes() -> Vec<SceneSpec> {
    vec![
        SceneSpec::Plane { disparity: 200.0 },
        SceneSpec::Step { left: 150.0, right: 250.0, split: None },
        SceneSpec::Ramp { base: 150.0, per_col: 0.05, per_row: 0.02 },
        SceneSpec::Sphere { base: 180.0, height: 60.0, radius: None },
    ]
}
