//! Circle-valued map families, grid sampling, and topological charge
//! extraction.
//!
//! Phases are never stored globally: every computation works with wrapped
//! differences of unit vectors, so no branch cut is ever materialized. The
//! winding of a grid plaquette is the wrapped phase circulation around its
//! four edges divided by `2 pi`, an exact integer; it is reliable whenever
//! each per-edge jump stays below `pi`, which callers guarantee by sampling
//! finely enough away from singular centers.

use crate::currents::{AtomicDistribution, SignedAtom, SignedAtomList};
use crate::geom::{BBox, Domain, Membership, Point2};
use crate::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Exact prefactor between a unit winding and the mass it carries in the
/// distributional Jacobian of a circle-valued Sobolev map.
pub const DET_PREFACTOR: f64 = PI;

/// An isolated phase singularity with an integer degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub center: Point2,
    pub degree: i32,
}

/// Built-in unit-modulus map families plus opaque host-supplied phases.
#[derive(Clone)]
pub enum MapFamily {
    /// `exp(i sum_k d_k theta_k)` with polar angles around each center.
    MultiVortex(Vec<Vortex>),
    /// `exp(i (theta_p - theta_n))`: degree `+1` at `p`, `-1` at `n`.
    Dipole { p: Point2, n: Point2 },
    /// Arbitrary unit-vector field supplied by the host program.
    Custom(Arc<dyn Fn(Point2) -> [f64; 2] + Send + Sync>),
}

impl fmt::Debug for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapFamily::MultiVortex(v) => f.debug_tuple("MultiVortex").field(v).finish(),
            MapFamily::Dipole { p, n } => f
                .debug_struct("Dipole")
                .field("p", p)
                .field("n", n)
                .finish(),
            MapFamily::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl MapFamily {
    pub fn multi_vortex(vortices: Vec<Vortex>) -> Result<Self> {
        for i in 0..vortices.len() {
            for j in (i + 1)..vortices.len() {
                if vortices[i].center == vortices[j].center {
                    return Err(Error::InvalidArgument(format!(
                        "vortex centers {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(MapFamily::MultiVortex(vortices))
    }

    pub fn dipole(p: Point2, n: Point2) -> Result<Self> {
        if p == n {
            return Err(Error::InvalidArgument("dipole poles coincide".into()));
        }
        Ok(MapFamily::Dipole { p, n })
    }

    /// The constant map (a vortex family with no singularities).
    pub fn constant() -> Self {
        MapFamily::MultiVortex(Vec::new())
    }

    /// Centers where the phase is singular, with their degrees.
    pub fn singular_centers(&self) -> Vec<Vortex> {
        match self {
            MapFamily::MultiVortex(v) => v.iter().copied().filter(|v| v.degree != 0).collect(),
            MapFamily::Dipole { p, n } => vec![
                Vortex {
                    center: *p,
                    degree: 1,
                },
                Vortex {
                    center: *n,
                    degree: -1,
                },
            ],
            MapFamily::Custom(_) => Vec::new(),
        }
    }
}

/// Unit vector of the family at `p`; errors at singular centers.
pub fn eval_family(f: &MapFamily, p: Point2) -> Result<[f64; 2]> {
    match f {
        MapFamily::MultiVortex(vortices) => {
            let mut phase = 0.0;
            for v in vortices {
                if v.degree == 0 {
                    continue;
                }
                let dx = p.x - v.center.x;
                let dy = p.y - v.center.y;
                if dx == 0.0 && dy == 0.0 {
                    return Err(Error::SingularCenter(v.center.x, v.center.y));
                }
                phase += v.degree as f64 * dy.atan2(dx);
            }
            Ok([phase.cos(), phase.sin()])
        }
        MapFamily::Dipole { p: pp, n } => {
            for c in [pp, n] {
                if p == *c {
                    return Err(Error::SingularCenter(c.x, c.y));
                }
            }
            let phase = (p.y - pp.y).atan2(p.x - pp.x) - (p.y - n.y).atan2(p.x - n.x);
            Ok([phase.cos(), phase.sin()])
        }
        MapFamily::Custom(g) => {
            let v = g(p);
            let norm = v[0].hypot(v[1]);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::SingularCenter(p.x, p.y));
            }
            Ok([v[0] / norm, v[1] / norm])
        }
    }
}

/// Node lattice over a bounding box: `nx * ny` nodes spanning it inclusively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        self.bbox.width() / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.bbox.height() / (self.ny - 1) as f64
    }

    /// Cell size used in resolution contracts.
    pub fn h(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn node(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.bbox.xmin + self.dx() * i as f64,
            self.bbox.ymin + self.dy() * j as f64,
        )
    }
}

/// Grid-sampled unit field with a domain-membership mask.
#[derive(Debug, Clone)]
pub struct S1Field {
    pub spec: GridSpec,
    /// Row-major `(j * nx + i)` unit vectors; masked nodes hold `[0, 0]`.
    pub values: Vec<[f64; 2]>,
    pub mask: Vec<bool>,
}

impl S1Field {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.spec.nx + i
    }

    /// Same layout as the certificate grid: two header lines, then one
    /// `u1,u2` line per node (masked nodes emit `nan,nan`).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("nx,ny,xmin,xmax,ymin,ymax\n");
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            self.spec.nx,
            self.spec.ny,
            self.spec.bbox.xmin,
            self.spec.bbox.xmax,
            self.spec.bbox.ymin,
            self.spec.bbox.ymax
        ));
        for (v, m) in self.values.iter().zip(&self.mask) {
            if *m {
                out.push_str(&format!("{:.16e},{:.16e}\n", v[0], v[1]));
            } else {
                out.push_str("nan,nan\n");
            }
        }
        out
    }
}

/// Samples the family on the grid, masking nodes outside the domain
/// closure. Nodes colliding with a singular center are evaluated at a
/// deterministic `h/2` offset instead.
pub fn sample(f: &MapFamily, spec: GridSpec, d: &Domain) -> Result<S1Field> {
    if spec.nx < 8 || spec.ny < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid must be at least 8x8, got {}x{}",
            spec.nx, spec.ny
        )));
    }
    let h = spec.h();
    let centers = f.singular_centers();
    let collide = |p: Point2| centers.iter().any(|v| v.center.dist(p) < 1e-9 * h);

    let rows: Vec<Vec<([f64; 2], bool)>> = (0..spec.ny)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::with_capacity(spec.nx);
            for i in 0..spec.nx {
                let mut p = spec.node(i, j);
                if d.contains(p) == Membership::Exterior {
                    row.push(([0.0, 0.0], false));
                    continue;
                }
                if collide(p) {
                    let shifted = Point2::new(p.x + 0.5 * h, p.y);
                    p = if collide(shifted) {
                        Point2::new(p.x + 0.5 * h, p.y + 0.5 * h)
                    } else {
                        shifted
                    };
                }
                match eval_family(f, p) {
                    Ok(v) => row.push((v, true)),
                    Err(_) => row.push(([1.0, 0.0], true)),
                }
            }
            row
        })
        .collect();

    let mut values = Vec::with_capacity(spec.nx * spec.ny);
    let mut mask = Vec::with_capacity(spec.nx * spec.ny);
    for row in rows {
        for (v, m) in row {
            values.push(v);
            mask.push(m);
        }
    }
    Ok(S1Field { spec, values, mask })
}

/// Wrapped phase difference from `u` to `v`, in `(-pi, pi]`.
fn wrapped_phase_diff(u: [f64; 2], v: [f64; 2]) -> f64 {
    (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1])
}

/// One plaquette with nonzero winding (or an unreliable circulation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingCell {
    pub i: usize,
    pub j: usize,
    /// Plaquette center.
    pub center: Point2,
    pub winding: i32,
    /// False when some edge jump came within 0.1 of the wrapping threshold.
    pub reliable: bool,
}

/// Nonzero or flagged plaquettes of a sampled field.
#[derive(Debug, Clone)]
pub struct WindingChart {
    pub spec: GridSpec,
    pub cells: Vec<WindingCell>,
}

impl WindingChart {
    pub fn total_winding(&self) -> i64 {
        self.cells.iter().map(|c| c.winding as i64).sum()
    }

    pub fn unreliable_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.reliable).count()
    }

    /// Header line then `i,j,x,y,winding,reliable` per recorded cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y,winding,reliable\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{},{}\n",
                c.i, c.j, c.center.x, c.center.y, c.winding, c.reliable as u8
            ));
        }
        out
    }
}

/// Winding number of every fully in-mask plaquette: the wrapped phase
/// circulation around its four corners divided by `2 pi`.
pub fn winding_per_plaquette(field: &S1Field) -> WindingChart {
    let spec = field.spec;
    let rows: Vec<Vec<WindingCell>> = (0..spec.ny - 1)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::new();
            for i in 0..spec.nx - 1 {
                let corners = [
                    field.idx(i, j),
                    field.idx(i + 1, j),
                    field.idx(i + 1, j + 1),
                    field.idx(i, j + 1),
                ];
                if corners.iter().any(|&c| !field.mask[c]) {
                    continue;
                }
                let mut circulation = 0.0;
                let mut reliable = true;
                for e in 0..4 {
                    let d = wrapped_phase_diff(
                        field.values[corners[e]],
                        field.values[corners[(e + 1) % 4]],
                    );
                    if d.abs() > PI - 0.1 {
                        reliable = false;
                    }
                    circulation += d;
                }
                let w = (circulation / (2.0 * PI)).round() as i32;
                debug_assert!(
                    (circulation / (2.0 * PI) - w as f64).abs() < 1e-6,
                    "circulation must be an integer multiple of 2 pi"
                );
                if w != 0 || !reliable {
                    let center = Point2::new(
                        spec.bbox.xmin + spec.dx() * (i as f64 + 0.5),
                        spec.bbox.ymin + spec.dy() * (j as f64 + 0.5),
                    );
                    row.push(WindingCell {
                        i,
                        j,
                        center,
                        winding: w,
                        reliable,
                    });
                }
            }
            row
        })
        .collect();
    WindingChart {
        spec,
        cells: rows.into_iter().flatten().collect(),
    }
}

/// Degree of the family along the circle of radius `radius` around
/// `center`, from `n_samples` wrapped phase increments.
///
/// The circle must keep a distance of at least one sample arc
/// (`2 pi radius / n_samples`) from every singular center; the accumulated
/// circulation must land within 0.1 of an integer.
pub fn degree_on_circle(
    f: &MapFamily,
    center: Point2,
    radius: f64,
    n_samples: usize,
) -> Result<i32> {
    if n_samples < 8 || radius <= 0.0 {
        return Err(Error::InvalidArgument(
            "degree_on_circle needs radius > 0 and at least 8 samples".into(),
        ));
    }
    let margin = 2.0 * PI * radius / n_samples as f64;
    for v in f.singular_centers() {
        let gap = (v.center.dist(center) - radius).abs();
        if gap < margin {
            return Err(Error::InvalidArgument(format!(
                "circle passes within {gap:.3e} of a singular center (needs {margin:.3e})"
            )));
        }
    }
    let mut total = 0.0;
    let mut prev = eval_family(f, Point2::new(center.x + radius, center.y))?;
    for s in 1..=n_samples {
        let th = 2.0 * PI * s as f64 / n_samples as f64;
        let p = Point2::new(center.x + radius * th.cos(), center.y + radius * th.sin());
        let cur = eval_family(f, p)?;
        total += wrapped_phase_diff(prev, cur);
        prev = cur;
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() >= 0.1 {
        return Err(Error::ResolutionError {
            residual: (turns - rounded).abs(),
            n_samples,
        });
    }
    Ok(rounded as i32)
}

/// Converts a winding chart into an atomic distribution: each plaquette of
/// winding `w` contributes `|w|` unit atoms of its sign at the plaquette
/// center, paired by [`AtomicDistribution::from_signed_atoms`]. Multiply by
/// [`DET_PREFACTOR`] to recover Jacobian mass.
pub fn atoms_from_windings(chart: &WindingChart, d: Arc<Domain>) -> Result<AtomicDistribution> {
    let atoms: Vec<SignedAtom> = chart
        .cells
        .iter()
        .filter(|c| c.winding != 0)
        .map(|c| SignedAtom {
            location: c.center,
            multiplicity: c.winding,
        })
        .collect();
    AtomicDistribution::from_signed_atoms(&SignedAtomList(atoms), d)
}

/// Exact Jacobian atoms of a built-in family: the singular centers inside
/// the closure with their prescribed degrees. A dipole with both poles in
/// the closure stays a single pole pair.
pub fn analytic_jacobian_atoms(f: &MapFamily, d: Arc<Domain>) -> Result<AtomicDistribution> {
    match f {
        MapFamily::MultiVortex(vortices) => {
            let atoms: Vec<SignedAtom> = vortices
                .iter()
                .filter(|v| v.degree != 0 && d.contains(v.center) != Membership::Exterior)
                .map(|v| SignedAtom {
                    location: v.center,
                    multiplicity: v.degree,
                })
                .collect();
            AtomicDistribution::from_signed_atoms(&SignedAtomList(atoms), d)
        }
        MapFamily::Dipole { p, n } => {
            let p_in = d.contains(*p) != Membership::Exterior;
            let n_in = d.contains(*n) != Membership::Exterior;
            match (p_in, n_in) {
                (true, true) => {
                    AtomicDistribution::from_pairs(vec![crate::currents::PolePair::new(*p, *n)?], d)
                }
                (true, false) => AtomicDistribution::from_signed_atoms(
                    &SignedAtomList(vec![SignedAtom {
                        location: *p,
                        multiplicity: 1,
                    }]),
                    d,
                ),
                (false, true) => AtomicDistribution::from_signed_atoms(
                    &SignedAtomList(vec![SignedAtom {
                        location: *n,
                        multiplicity: -1,
                    }]),
                    d,
                ),
                (false, false) => Ok(AtomicDistribution::zero(d)),
            }
        }
        MapFamily::Custom(_) => Err(Error::UnsupportedFamily(
            "analytic atoms exist only for the built-in families",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_domain() -> Arc<Domain> {
        Arc::new(
            Domain::new(
                crate::geom::Polygon::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap(),
                vec![],
                None,
            )
            .unwrap(),
        )
    }

    fn unit_vortex() -> MapFamily {
        MapFamily::multi_vortex(vec![Vortex {
            center: Point2::new(0.0, 0.0),
            degree: 1,
        }])
        .unwrap()
    }

    fn grid(n: usize) -> GridSpec {
        GridSpec {
            bbox: BBox {
                xmin: -1.0,
                xmax: 1.0,
                ymin: -1.0,
                ymax: 1.0,
            },
            nx: n,
            ny: n,
        }
    }

    #[test]
    fn eval_vortex_values() {
        let f = unit_vortex();
        let v = eval_family(&f, Point2::new(1.0, 0.0)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        let v = eval_family(&f, Point2::new(0.0, 1.0)).unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        assert!(matches!(
            eval_family(&f, Point2::new(0.0, 0.0)),
            Err(Error::SingularCenter(_, _))
        ));
    }

    #[test]
    fn eval_dipole_far_field() {
        let f = MapFamily::dipole(Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0)).unwrap();
        let v = eval_family(&f, Point2::new(10.0, 0.0)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn sampled_field_is_unit_and_masked() {
        let d = Arc::new(Domain::ngon_disc(1.0, 360).unwrap());
        let field = sample(&unit_vortex(), grid(64), &d).unwrap();
        for (v, m) in field.values.iter().zip(&field.mask) {
            if *m {
                assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-12);
            }
        }
        // Box corners lie outside the disc.
        assert!(!field.mask[0]);
    }

    #[test]
    fn fully_masked_when_disjoint() {
        let d = square_domain();
        let far = GridSpec {
            bbox: BBox {
                xmin: 5.0,
                xmax: 6.0,
                ymin: 5.0,
                ymax: 6.0,
            },
            nx: 8,
            ny: 8,
        };
        let field = sample(&unit_vortex(), far, &d).unwrap();
        assert!(field.mask.iter().all(|m| !m));
    }

    #[test]
    fn single_vortex_winding() {
        let d = square_domain();
        let field = sample(&unit_vortex(), grid(64), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        let nonzero: Vec<_> = chart.cells.iter().filter(|c| c.winding != 0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].winding, 1);
        assert!(nonzero[0].center.dist(Point2::new(0.0, 0.0)) < 1.5 * field.spec.h());
    }

    #[test]
    fn degree_minus_two_cluster() {
        let d = square_domain();
        let f = MapFamily::multi_vortex(vec![Vortex {
            center: Point2::new(0.0, 0.0),
            degree: -2,
        }])
        .unwrap();
        let field = sample(&f, grid(128), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        assert_eq!(chart.total_winding(), -2);
        for c in chart.cells.iter().filter(|c| c.winding != 0) {
            assert!(c.center.dist(Point2::new(0.0, 0.0)) < 3.0 * field.spec.h());
        }
    }

    #[test]
    fn dipole_windings() {
        let d = square_domain();
        let p = Point2::new(-0.3, 0.0);
        let n = Point2::new(0.3, 0.0);
        let f = MapFamily::dipole(p, n).unwrap();
        let field = sample(&f, grid(128), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        let nonzero: Vec<_> = chart.cells.iter().filter(|c| c.winding != 0).collect();
        assert_eq!(nonzero.len(), 2);
        let h = field.spec.h();
        let plus = nonzero.iter().find(|c| c.winding == 1).unwrap();
        let minus = nonzero.iter().find(|c| c.winding == -1).unwrap();
        assert!(plus.center.dist(p) < 1.5 * h);
        assert!(minus.center.dist(n) < 1.5 * h);
        // Total degree over the full grid vanishes.
        assert_eq!(chart.total_winding(), 0);
    }

    #[test]
    fn degree_on_circle_cases() {
        let f = unit_vortex();
        assert_eq!(
            degree_on_circle(&f, Point2::new(0.0, 0.0), 0.5, 256).unwrap(),
            1
        );
        let dip = MapFamily::dipole(Point2::new(-0.2, 0.0), Point2::new(0.2, 0.0)).unwrap();
        assert_eq!(
            degree_on_circle(&dip, Point2::new(0.0, 0.0), 0.6, 256).unwrap(),
            0
        );
        assert_eq!(
            degree_on_circle(&dip, Point2::new(5.0, 0.0), 0.5, 256).unwrap(),
            0
        );
        // Circle through a singular center is refused.
        assert!(degree_on_circle(&f, Point2::new(0.5, 0.0), 0.5, 256).is_err());
    }

    #[test]
    fn gauge_invariance_of_windings() {
        let d = square_domain();
        let field = sample(&unit_vortex(), grid(64), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        // Multiply the whole field by a constant phase.
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let mut rotated = field.clone();
        for v in &mut rotated.values {
            *v = [v[0] * c - v[1] * s, v[0] * s + v[1] * c];
        }
        let chart2 = winding_per_plaquette(&rotated);
        assert_eq!(chart.cells, chart2.cells);
    }

    #[test]
    fn extracted_atoms_match_analytic() {
        let d = square_domain();
        let f = MapFamily::multi_vortex(vec![
            Vortex {
                center: Point2::new(-0.4, 0.2),
                degree: 1,
            },
            Vortex {
                center: Point2::new(0.5, -0.3),
                degree: -1,
            },
        ])
        .unwrap();
        let field = sample(&f, grid(128), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        let extracted = atoms_from_windings(&chart, d.clone()).unwrap();
        let analytic = analytic_jacobian_atoms(&f, d).unwrap();
        let ea = extracted.to_signed_atoms();
        let aa = analytic.to_signed_atoms();
        assert_eq!(ea.total_multiplicity(), aa.total_multiplicity());
        let h = field.spec.h();
        for a in &aa.0 {
            let hit =
                ea.0.iter()
                    .find(|e| e.location.dist(a.location) < 1.5 * h)
                    .unwrap();
            assert_eq!(hit.multiplicity, a.multiplicity);
        }
    }

    #[test]
    fn near_edge_singularity_flags_unreliable_plaquette() {
        // A vortex sitting just off a plaquette edge makes the two nodes of
        // that edge subtend almost pi, which must be flagged.
        let d = Arc::new(
            Domain::new(
                crate::geom::Polygon::rectangle(-1.0, -1.0, 8.0, 8.0).unwrap(),
                vec![],
                None,
            )
            .unwrap(),
        );
        let f = MapFamily::multi_vortex(vec![Vortex {
            center: Point2::new(3.5, 3.001),
            degree: 1,
        }])
        .unwrap();
        let spec = GridSpec {
            bbox: BBox { xmin: 0.0, xmax: 7.0, ymin: 0.0, ymax: 7.0 },
            nx: 8,
            ny: 8,
        };
        let field = sample(&f, spec, &d).unwrap();
        let chart = winding_per_plaquette(&field);
        assert!(chart.unreliable_count() > 0);
        assert_eq!(chart.total_winding(), 1);
    }

    #[test]
    fn node_collision_perturbs_deterministically() {
        // A vortex exactly on a grid node is evaluated at an h/2 offset;
        // values stay unit and repeated sampling is bitwise identical.
        let d = Arc::new(
            Domain::new(
                crate::geom::Polygon::rectangle(-1.0, -1.0, 8.0, 8.0).unwrap(),
                vec![],
                None,
            )
            .unwrap(),
        );
        let f = MapFamily::multi_vortex(vec![Vortex {
            center: Point2::new(3.0, 3.0),
            degree: 1,
        }])
        .unwrap();
        let spec = GridSpec {
            bbox: BBox { xmin: 0.0, xmax: 7.0, ymin: 0.0, ymax: 7.0 },
            nx: 8,
            ny: 8,
        };
        let a = sample(&f, spec, &d).unwrap();
        let b = sample(&f, spec, &d).unwrap();
        assert_eq!(a.values, b.values);
        for (v, m) in a.values.iter().zip(&a.mask) {
            if *m {
                assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(winding_per_plaquette(&a).total_winding(), 1);
    }

    #[test]
    fn empty_chart_gives_zero_distribution() {
        let d = square_domain();
        let field = sample(&MapFamily::constant(), grid(32), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        assert!(chart.cells.is_empty());
        let t = atoms_from_windings(&chart, d).unwrap();
        assert!(t.is_zero());
    }

    #[test]
    fn analytic_atoms_examples() {
        let d = square_domain();
        let t = analytic_jacobian_atoms(&unit_vortex(), d.clone()).unwrap();
        let atoms = t.to_signed_atoms();
        assert_eq!(atoms.0.len(), 1);
        assert_eq!(atoms.0[0].multiplicity, 1);
        assert_eq!(atoms.0[0].location, Point2::new(0.0, 0.0));

        let dip = MapFamily::dipole(Point2::new(-0.2, 0.1), Point2::new(0.3, 0.0)).unwrap();
        let t = analytic_jacobian_atoms(&dip, d.clone()).unwrap();
        assert_eq!(t.pairs().len(), 1);

        let two = MapFamily::multi_vortex(vec![
            Vortex {
                center: Point2::new(-0.2, 0.0),
                degree: 1,
            },
            Vortex {
                center: Point2::new(0.2, 0.0),
                degree: -1,
            },
        ])
        .unwrap();
        let t = analytic_jacobian_atoms(&two, d).unwrap();
        assert_eq!(t.to_signed_atoms().0.len(), 2);
        let custom = MapFamily::Custom(Arc::new(|_p| [1.0, 0.0]));
        assert!(analytic_jacobian_atoms(&custom, square_domain()).is_err());
    }

    #[test]
    fn circle_degree_equals_enclosed_windings() {
        let d = square_domain();
        let f = MapFamily::multi_vortex(vec![
            Vortex {
                center: Point2::new(-0.35, 0.1),
                degree: 2,
            },
            Vortex {
                center: Point2::new(0.4, -0.2),
                degree: -1,
            },
        ])
        .unwrap();
        let field = sample(&f, grid(256), &d).unwrap();
        let chart = winding_per_plaquette(&field);
        for (center, radius) in [
            (Point2::new(-0.35, 0.1), 0.3),
            (Point2::new(0.0, 0.0), 0.85),
            (Point2::new(0.4, -0.2), 0.25),
        ] {
            let deg = degree_on_circle(&f, center, radius, 512).unwrap();
            let enclosed: i64 = chart
                .cells
                .iter()
                .filter(|c| c.center.dist(center) < radius)
                .map(|c| c.winding as i64)
                .sum();
            assert_eq!(deg as i64, enclosed, "circle at {center:?} r={radius}");
        }
    }
}
