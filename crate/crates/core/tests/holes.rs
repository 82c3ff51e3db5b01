//! The whole pipeline on a domain with a hole: an annulus built from a
//! 360-gon outer loop and a 180-gon hole. Both boundary components act as
//! free sinks, segments crossing the hole are rejected, and the dual
//! certificate must vanish on the hole loop as well.

use flatconn::area::{dirichlet_area, relaxed_area_upper_bound};
use flatconn::dual::{build_certificate, verify_duality};
use flatconn::flatnorm::{solve_bruteforce, solve_matching, NormKind};
use flatconn::jacobian::{
    analytic_jacobian_atoms, atoms_from_windings, sample, winding_per_plaquette, GridSpec,
    MapFamily, Vortex,
};
use flatconn::selftest::sample_interior;
use flatconn::{AtomicDistribution, DistRoute, Domain, Point2, Polygon, SignedAtom, SignedAtomList};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn annulus() -> Arc<Domain> {
    let outer = Polygon::regular_ngon(Point2::new(0.0, 0.0), 1.0, 360).unwrap();
    let hole = Polygon::regular_ngon(Point2::new(0.0, 0.0), 0.4, 180).unwrap();
    Arc::new(Domain::new(outer, vec![hole], None).unwrap())
}

#[test]
fn hole_acts_as_boundary_sink() {
    let d = annulus();
    // Depth is the distance to the nearest of the two loops.
    let p = Point2::new(0.7, 0.0);
    let depth = d.dist_to_boundary(p).unwrap();
    assert!((depth - 0.3).abs() < 2e-3, "depth {depth}");

    // Opposite sides of the hole: the straight chord is blocked, both poles
    // escape, and the value is the sum of the four boundary distances.
    let t = AtomicDistribution::from_pairs(
        vec![flatconn::PolePair::new(Point2::new(0.7, 0.0), Point2::new(-0.7, 0.0)).unwrap()],
        d.clone(),
    )
    .unwrap();
    let dec = solve_matching(&t, NormKind::flat_alpha()).unwrap();
    assert!((dec.value - 1.2).abs() < 5e-3, "value {}", dec.value);
    assert_eq!(dec.s.len(), 2);
    assert!(dec.s.iter().all(|s| s.route == DistRoute::ViaBoundary));
}

#[test]
fn oracle_equivalence_and_duality_on_annulus() {
    let d = annulus();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..30 {
        let n = rng.gen_range(1..=6);
        let mut atoms = Vec::new();
        for i in 0..n {
            atoms.push(SignedAtom {
                location: sample_interior(&d, &mut rng),
                multiplicity: if (i + trial) % 2 == 0 { 1 } else { -1 },
            });
        }
        let t =
            AtomicDistribution::from_signed_atoms(&SignedAtomList(atoms), d.clone()).unwrap();
        let kind = if trial % 2 == 0 { NormKind::flat_alpha() } else { NormKind::flat() };
        let bf = solve_bruteforce(&t, kind).unwrap();
        let mt = solve_matching(&t, kind).unwrap();
        assert!(
            (bf.value - mt.value).abs() < 1e-9,
            "trial {trial}: {} vs {}",
            bf.value,
            mt.value
        );
        if kind.beta() == 2.0 {
            let cert = build_certificate(&t, &mt).unwrap();
            let report = verify_duality(&cert, &t, &mt, trial as u64);
            assert!(report.gap <= 1e-9, "trial {trial}: gap {}", report.gap);
            assert!(report.boundary_ok, "trial {trial}: hole loop value {}", report.boundary_max_abs);
            assert!(report.optimal(), "trial {trial}: {report:?}");
        }
    }
}

#[test]
fn winding_extraction_with_masked_hole() {
    let d = annulus();
    let f = MapFamily::multi_vortex(vec![Vortex {
        center: Point2::new(0.7, 0.0),
        degree: 1,
    }])
    .unwrap();
    let spec = GridSpec { bbox: d.bbox(), nx: 256, ny: 256 };
    let field = sample(&f, spec, &d).unwrap();
    let chart = winding_per_plaquette(&field);
    assert_eq!(chart.total_winding(), 1);
    let extracted = atoms_from_windings(&chart, d.clone()).unwrap();
    let analytic = analytic_jacobian_atoms(&f, d).unwrap();
    let ea = extracted.to_signed_atoms();
    let aa = analytic.to_signed_atoms();
    assert_eq!(ea.total_multiplicity(), aa.total_multiplicity());
    assert!(ea.0[0].location.dist(aa.0[0].location) < 2.0 * field.spec.h());
}

#[test]
fn quadrature_handles_hole() {
    let d = annulus();
    // Constant map: the integral is the ring area.
    let flat = dirichlet_area(&MapFamily::constant(), &d).unwrap();
    assert!((flat - d.area()).abs() < 1e-9, "{flat} vs {}", d.area());

    // Radial vortex centered in the hole: smooth over the ring, and the
    // closed form integrates sqrt(1 + 1/rho^2) between the radii.
    let f = MapFamily::multi_vortex(vec![Vortex {
        center: Point2::new(0.0, 0.0),
        degree: 1,
    }])
    .unwrap();
    let val = dirichlet_area(&f, &d).unwrap();
    let anti = |r: f64| r * (1.0 + r * r).sqrt() + r.asinh();
    let exact = std::f64::consts::PI * (anti(1.0) - anti(0.4));
    assert!((val - exact).abs() / exact < 1e-3, "{val} vs {exact}");

    // The singularity sits in the hole, so there is no singular mass.
    let report = relaxed_area_upper_bound(&f, &d).unwrap();
    assert_eq!(report.singular_term, 0.0);
}
