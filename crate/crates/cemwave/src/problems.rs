//! Potential and initial-data catalog for the experiment suite, plus a
//! seeded generator for the random high-contrast inclusion potential and a
//! loader for user-supplied piecewise-constant cell maps.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Piecewise-constant values on a uniform cell lattice over the unit square
/// (mapped to the domain by relative coordinates).
#[derive(Debug, Clone)]
pub struct CellGrid {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl CellGrid {
    pub fn value_at(&self, rel: [f64; 2]) -> f64 {
        let ix = ((rel[0] * self.nx as f64).floor() as isize).clamp(0, self.nx as isize - 1) as usize;
        let iy = ((rel[1] * self.ny as f64).floor() as isize).clamp(0, self.ny as isize - 1) as usize;
        self.values[iy * self.nx + ix]
    }
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// 0.5 (x-1)^2 on [0,2].
    Smooth1d,
    /// sin(x^2/d1) sin(pi x/d2), sign-indefinite.
    TwoScale1d { delta1: f64, delta2: f64 },
    /// (cos(2 pi x/d) + 1)(cos(2 pi y/d) + 1) with d = d2 on the diagonal
    /// quadrant pair {x,y <= 1/2} u {x,y >= 1/2} and d = d1 elsewhere.
    Checkerboard2d { delta1: f64, delta2: f64 },
    /// Random two-valued lattice: background 1, inclusions 1/upsilon.
    Inclusions2d {
        upsilon: f64,
        seed: u64,
        cells: (usize, usize),
        fraction: f64,
    },
    Constant { value: f64 },
    FromCells,
}

#[derive(Clone)]
pub struct Potential {
    pub kind: PotentialKind,
    pub vmin: f64,
    pub vmax: f64,
    /// Reporting scale: min of the fine scales when the kind has any.
    pub delta: Option<f64>,
    pub upsilon: Option<f64>,
    cells: Option<Arc<CellGrid>>,
    /// Domain box for relative cell coordinates.
    domain: ([f64; 2], [f64; 2]),
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("kind", &self.kind)
            .field("vmin", &self.vmin)
            .field("vmax", &self.vmax)
            .finish()
    }
}

/// Inclusion layout as a pure function of (seed, lattice, fraction): one
/// uniform draw per cell in row-major order.
pub fn inclusion_layout(seed: u64, nx: usize, ny: usize, fraction: f64, upsilon: f64) -> CellGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..nx * ny)
        .map(|_| {
            if rng.gen::<f64>() < fraction {
                1.0 / upsilon
            } else {
                1.0
            }
        })
        .collect();
    CellGrid { nx, ny, values }
}

pub fn make_potential(kind: PotentialKind) -> Result<Potential> {
    let unit2 = ([0.0, 0.0], [1.0, 1.0]);
    match &kind {
        PotentialKind::Smooth1d => Ok(Potential {
            kind,
            vmin: 0.0,
            vmax: 0.5,
            delta: None,
            upsilon: None,
            cells: None,
            domain: ([0.0, 0.0], [2.0, 0.0]),
        }),
        PotentialKind::TwoScale1d { delta1, delta2 } => {
            if *delta1 <= 0.0 || *delta2 <= 0.0 {
                return Err(Error::Problem("scales must be positive".into()));
            }
            Ok(Potential {
                delta: Some(delta1.min(*delta2)),
                kind,
                vmin: -1.0,
                vmax: 1.0,
                upsilon: None,
                cells: None,
                domain: ([0.0, 0.0], [2.0, 0.0]),
            })
        }
        PotentialKind::Checkerboard2d { delta1, delta2 } => {
            if *delta1 <= 0.0 || *delta2 <= 0.0 {
                return Err(Error::Problem("scales must be positive".into()));
            }
            Ok(Potential {
                delta: Some(delta1.min(*delta2)),
                kind,
                vmin: 0.0,
                vmax: 4.0,
                upsilon: None,
                cells: None,
                domain: unit2,
            })
        }
        PotentialKind::Inclusions2d {
            upsilon,
            seed,
            cells,
            fraction,
        } => {
            if *upsilon <= 1.0 {
                return Err(Error::Problem("contrast ratio must exceed 1".into()));
            }
            if cells.0 == 0 || cells.1 == 0 || !(0.0..=1.0).contains(fraction) {
                return Err(Error::Problem("bad inclusion lattice".into()));
            }
            let grid = inclusion_layout(*seed, cells.0, cells.1, *fraction, *upsilon);
            Ok(Potential {
                vmin: 1.0 / upsilon,
                vmax: 1.0,
                delta: Some(1.0 / cells.0.max(cells.1) as f64),
                upsilon: Some(*upsilon),
                kind,
                cells: Some(Arc::new(grid)),
                domain: unit2,
            })
        }
        PotentialKind::Constant { value } => Ok(Potential {
            vmin: *value,
            vmax: *value,
            kind,
            delta: None,
            upsilon: None,
            cells: None,
            domain: unit2,
        }),
        PotentialKind::FromCells => Err(Error::Problem(
            "use potential_from_cells for custom cell maps".into(),
        )),
    }
}

/// Wrap a loaded cell map as a potential on the given domain box.
pub fn potential_from_cells(cells: CellGrid, lo: [f64; 2], hi: [f64; 2]) -> Result<Potential> {
    if cells.values.len() != cells.nx * cells.ny {
        return Err(Error::Problem("cell map size mismatch".into()));
    }
    if cells.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Problem("cell map holds non-finite values".into()));
    }
    let vmin = cells.values.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = cells.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Potential {
        kind: PotentialKind::FromCells,
        vmin,
        vmax,
        delta: None,
        upsilon: None,
        cells: Some(Arc::new(cells)),
        domain: (lo, hi),
    })
}

/// Parse the plain-text cell map format: "nx ny" header, then nx*ny values
/// row-major (x fastest).
pub fn parse_cell_map(text: &str) -> Result<CellGrid> {
    let mut nums = text.split_whitespace();
    let nx: usize = nums
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Problem("cell map: missing nx".into()))?;
    let ny: usize = nums
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Problem("cell map: missing ny".into()))?;
    let values: Vec<f64> = nums
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Problem(format!("cell map: bad value '{t}'")))
        })
        .collect::<Result<_>>()?;
    if values.len() != nx * ny {
        return Err(Error::Problem(format!(
            "cell map: expected {} values, found {}",
            nx * ny,
            values.len()
        )));
    }
    Ok(CellGrid { nx, ny, values })
}

impl Potential {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match &self.kind {
            PotentialKind::Smooth1d => 0.5 * (x[0] - 1.0) * (x[0] - 1.0),
            PotentialKind::TwoScale1d { delta1, delta2 } => {
                (x[0] * x[0] / delta1).sin() * (PI * x[0] / delta2).sin()
            }
            PotentialKind::Checkerboard2d { delta1, delta2 } => {
                let diag = (x[0] <= 0.5 && x[1] <= 0.5) || (x[0] >= 0.5 && x[1] >= 0.5);
                let d = if diag { *delta2 } else { *delta1 };
                ((2.0 * PI * x[0] / d).cos() + 1.0) * ((2.0 * PI * x[1] / d).cos() + 1.0)
            }
            PotentialKind::Inclusions2d { .. } | PotentialKind::FromCells => {
                let (lo, hi) = self.domain;
                let rel = [
                    (x[0] - lo[0]) / (hi[0] - lo[0]),
                    if hi[1] > lo[1] {
                        (x[1] - lo[1]) / (hi[1] - lo[1])
                    } else {
                        0.0
                    },
                ];
                self.cells.as_ref().unwrap().value_at(rel)
            }
            PotentialKind::Constant { value } => *value,
        }
    }

    /// The lattice behind inclusion/custom kinds, for dumps and tests.
    pub fn cell_grid(&self) -> Option<&CellGrid> {
        self.cells.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// WKB packet on [0,2]: sqrt(r0) exp(i S0/eps) with gaussian amplitude
    /// r0 and a soft-absolute-value phase.
    Wkb1d,
    /// Gaussian packet on the unit square with an eps-scaled radial phase.
    Gaussian2d,
    Custom,
}

#[derive(Clone)]
pub struct InitialData {
    pub kind: InitialKind,
    pub eps: f64,
    custom: Option<Arc<dyn Fn([f64; 2]) -> Complex64 + Send + Sync>>,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialData")
            .field("kind", &self.kind)
            .field("eps", &self.eps)
            .finish()
    }
}

pub fn make_initial_data(kind: InitialKind, eps: f64) -> Result<InitialData> {
    if !(eps > 0.0) {
        return Err(Error::Problem("eps must be positive".into()));
    }
    if kind == InitialKind::Custom {
        return Err(Error::Problem(
            "use initial_data_from_fn for custom initial data".into(),
        ));
    }
    Ok(InitialData {
        kind,
        eps,
        custom: None,
    })
}

pub fn initial_data_from_fn<F>(eps: f64, f: F) -> InitialData
where
    F: Fn([f64; 2]) -> Complex64 + Send + Sync + 'static,
{
    InitialData {
        kind: InitialKind::Custom,
        eps,
        custom: Some(Arc::new(f)),
    }
}

impl InitialData {
    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        match self.kind {
            InitialKind::Wkb1d => {
                let s = x[0] - 1.0;
                let amp = (-50.0 * s * s).exp();
                let s0 = -0.2 * ((5.0 * s).exp() + (-5.0 * s).exp()).ln();
                amp * Complex64::new(0.0, s0 / self.eps).exp()
            }
            InitialKind::Gaussian2d => {
                let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
                let amp = (10.0 / PI).sqrt() * (-5.0 * dx * dx - 5.0 * dy * dy).exp();
                let phase = -(dx * dx + dy * dy) / self.eps;
                amp * Complex64::new(0.0, phase).exp()
            }
            InitialKind::Custom => (self.custom.as_ref().unwrap())(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_potential_values() {
        let v = make_potential(PotentialKind::Smooth1d).unwrap();
        assert!((v.eval([0.5, 0.0]) - 0.125).abs() < 1e-15);
        assert!(v.eval([1.0, 0.0]).abs() < 1e-15);
        assert!((v.eval([0.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn checkerboard_regions_and_values() {
        let v = make_potential(PotentialKind::Checkerboard2d {
            delta1: 0.125,
            delta2: 0.0625,
        })
        .unwrap();
        // (0.1, 0.1) sits in the diagonal region: factor cos(3.2 pi) + 1 twice
        let expect = ((3.2 * PI).cos() + 1.0) * ((3.2 * PI).cos() + 1.0);
        assert!((v.eval([0.1, 0.1]) - expect).abs() < 1e-12);
        // off-diagonal quadrant uses delta1
        let expect_off = ((2.0 * PI * 0.1 / 0.125).cos() + 1.0) * ((2.0 * PI * 0.9 / 0.125).cos() + 1.0);
        assert!((v.eval([0.1, 0.9]) - expect_off).abs() < 1e-12);
        for (x, y) in [(0.3, 0.4), (0.7, 0.9), (0.2, 0.8)] {
            let val = v.eval([x, y]);
            assert!((0.0..=4.0).contains(&val));
        }
    }

    #[test]
    fn twoscale_formula() {
        let v = make_potential(PotentialKind::TwoScale1d {
            delta1: 0.25,
            delta2: 0.1,
        })
        .unwrap();
        let x: f64 = 0.73;
        let expect = (x * x / 0.25).sin() * (PI * x / 0.1).sin();
        assert!((v.eval([x, 0.0]) - expect).abs() < 1e-15);
        assert!(v.delta.unwrap() == 0.1);
    }

    #[test]
    fn inclusions_two_values_and_determinism() {
        let mk = || {
            make_potential(PotentialKind::Inclusions2d {
                upsilon: 1000.0,
                seed: 7,
                cells: (20, 20),
                fraction: 0.25,
            })
            .unwrap()
        };
        let a = mk();
        let b = mk();
        let ga = a.cell_grid().unwrap();
        let gb = b.cell_grid().unwrap();
        assert_eq!(ga.values, gb.values);
        for v in &ga.values {
            assert!(*v == 1.0 || *v == 0.001);
        }
        let n_inc = ga.values.iter().filter(|&&v| v != 1.0).count();
        assert!(n_inc > 0 && n_inc < ga.values.len());
        // different seed, different layout
        let c = make_potential(PotentialKind::Inclusions2d {
            upsilon: 1000.0,
            seed: 8,
            cells: (20, 20),
            fraction: 0.25,
        })
        .unwrap();
        assert_ne!(c.cell_grid().unwrap().values, ga.values);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_potential(PotentialKind::TwoScale1d {
            delta1: 0.0,
            delta2: 0.1
        })
        .is_err());
        assert!(make_potential(PotentialKind::Inclusions2d {
            upsilon: 1.0,
            seed: 0,
            cells: (4, 4),
            fraction: 0.25
        })
        .is_err());
        assert!(make_initial_data(InitialKind::Wkb1d, 0.0).is_err());
    }

    #[test]
    fn cell_map_roundtrip() {
        let text = "2 3\n1 2\n3 4\n5 6\n";
        let g = parse_cell_map(text).unwrap();
        assert_eq!((g.nx, g.ny), (2, 3));
        assert_eq!(g.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let pot = potential_from_cells(g, [0.0, 0.0], [1.0, 1.0]).unwrap();
        assert_eq!(pot.eval([0.1, 0.1]), 1.0);
        assert_eq!(pot.eval([0.9, 0.1]), 2.0);
        assert_eq!(pot.eval([0.9, 0.9]), 6.0);
        assert!(parse_cell_map("2 2\n1 2 3").is_err());
    }

    #[test]
    fn wkb_initial_data_values() {
        let eps = 0.25;
        let u = make_initial_data(InitialKind::Wkb1d, eps).unwrap();
        let at1 = u.eval([1.0, 0.0]);
        assert!((at1.norm() - 1.0).abs() < 1e-14);
        let phase = -0.2 * (2.0_f64).ln() / eps;
        assert!((at1.arg() - phase).abs() < 1e-13);
        // modulus is eps-independent
        let u2 = make_initial_data(InitialKind::Wkb1d, eps / 2.0).unwrap();
        for x in [0.3, 0.9, 1.4] {
            assert!((u.eval([x, 0.0]).norm() - u2.eval([x, 0.0]).norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_initial_data_values() {
        let u = make_initial_data(InitialKind::Gaussian2d, 0.125).unwrap();
        let center = u.eval([0.5, 0.5]);
        assert!((center.re - (10.0 / PI).sqrt()).abs() < 1e-14);
        assert!(center.im.abs() < 1e-14);
        let off = u.eval([0.25, 0.75]);
        assert!(off.norm() < center.norm());
        assert!(off.im.abs() > 0.0);
    }
}
