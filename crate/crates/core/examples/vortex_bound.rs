//! End-to-end demo: the radial vortex on the unit disc.
//!
//! Computes the optimal decomposition of its Jacobian atoms, the dual
//! certificate, and the relaxed-area upper bound, then punctures the
//! singularity away.
//!
//! Run with: `cargo run --example vortex_bound`

use flatconn::area::{punctured_upper_bound, relaxed_area_upper_bound};
use flatconn::dual::{build_certificate, verify_duality};
use flatconn::flatnorm::{solve_matching, NormKind};
use flatconn::jacobian::analytic_jacobian_atoms;
use flatconn::{Domain, MapFamily, Point2, Vortex};
use std::sync::Arc;

fn main() -> flatconn::Result<()> {
    let domain = Arc::new(Domain::disc(1.0)?);
    let vortex = MapFamily::multi_vortex(vec![Vortex {
        center: Point2::new(0.0, 0.0),
        degree: 1,
    }])?;

    let atoms = analytic_jacobian_atoms(&vortex, Arc::clone(&domain))?;
    let dec = solve_matching(&atoms, NormKind::flat_alpha())?;
    println!(
        "flat norm of the vortex atom: {:.6} ({} charge(s), {} segment(s))",
        dec.value,
        dec.r.0.len(),
        dec.s.len()
    );

    let cert = build_certificate(&atoms, &dec)?;
    let report = verify_duality(&cert, &atoms, &dec, 0);
    println!(
        "dual certificate: gap {:.2e}, optimal: {}",
        report.gap,
        report.optimal()
    );

    let bound = relaxed_area_upper_bound(&vortex, &domain)?;
    println!(
        "relaxed-area bound: {:.6} = {:.6} (graph area) + {:.6} (singular)",
        bound.upper_bound, bound.dirichlet_area, bound.singular_term
    );

    let punctured = punctured_upper_bound(&vortex, &domain, &[Point2::new(0.0, 0.0)])?;
    println!(
        "after puncturing the center: {:.6} (singular term {})",
        punctured.upper_bound, punctured.singular_term
    );
    Ok(())
}
