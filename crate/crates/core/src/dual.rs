//! Dual Lipschitz certificates for the `beta = 2` norm.
//!
//! Given an optimal decomposition, the certificate is a 2-Lipschitz function
//! vanishing on the boundary with `|phi| <= 1` whose pairing with the
//! distribution equals the primal value, proving optimality. It is realized
//! as a max of cones: a floor at `-1`, the wall `-2 d(., boundary)`, an
//! upward cone of height 1 at every unpaired positive charge, and one
//! translated cone per dipole whose offset is fixed by a monotone relaxation
//! on the dipole's negative poles. At the fixed point every dipole is an
//! active constraint: `phi(to) - phi(from) = 2 |to - from|`.

use crate::currents::{AtomicDistribution, PolePair};
use crate::flatnorm::Decomposition;
use crate::geom::{BBox, Domain, Membership, Point2};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use std::sync::Arc;

/// Convergence threshold for the pole-value relaxation.
const POLE_VALUE_TOL: f64 = 1e-12;

/// Absolute tolerance on the duality gap before a certificate is flagged.
pub const DUALITY_GAP_TOL: f64 = 1e-9;

/// Closed-form optimal dual test function for a solved instance.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    domain: Arc<Domain>,
    /// Interior unpaired positive charges (apexes of height-1 cones).
    pplus: Vec<Point2>,
    /// Interior unpaired negative charges.
    pminus: Vec<Point2>,
    /// Dipoles as (positive pole `x`, negative pole `y`).
    dipoles: Vec<PolePair>,
    /// Relaxed values at the negative pole of each dipole.
    pole_values: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// False when the post-hoc duality gap exceeds [`DUALITY_GAP_TOL`],
    /// indicating the decomposition was not optimal.
    pub optimal: bool,
}

impl DualCertificate {
    pub fn pplus(&self) -> &[Point2] {
        &self.pplus
    }

    pub fn pminus(&self) -> &[Point2] {
        &self.pminus
    }

    pub fn dipoles(&self) -> &[PolePair] {
        &self.dipoles
    }

    pub fn pole_values(&self) -> &[f64] {
        &self.pole_values
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// Certificate value at `p`; errors outside the closure.
    pub fn evaluate(&self, p: Point2) -> Result<f64> {
        if self.domain.contains(p) == Membership::Exterior {
            return Err(Error::ExteriorPoint(p.x, p.y));
        }
        Ok(self.evaluate_unchecked(p))
    }

    fn evaluate_unchecked(&self, p: Point2) -> f64 {
        let mut v = (-1.0f64).max(-2.0 * self.domain.dist_to_boundary(p).unwrap_or(0.0));
        for apex in &self.pplus {
            v = v.max(1.0 - 2.0 * p.dist(*apex));
        }
        for (k, dip) in self.dipoles.iter().enumerate() {
            v = v.max(self.pole_values[k] + 2.0 * dip.length() - 2.0 * dip.x.dist(p));
        }
        v.clamp(-1.0, 1.0)
    }

    /// Row-major samples over the domain bounding box; exterior nodes carry
    /// `NaN`.
    pub fn sample_on_grid(&self, nx: usize, ny: usize) -> Result<ScalarGrid> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid must be at least 2x2, got {nx}x{ny}"
            )));
        }
        let bbox = self.domain.bbox();
        let dx = bbox.width() / (nx - 1) as f64;
        let dy = bbox.height() / (ny - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = Point2::new(bbox.xmin + dx * i as f64, bbox.ymin + dy * j as f64);
                if self.domain.contains(p) == Membership::Exterior {
                    values.push(f64::NAN);
                } else {
                    values.push(self.evaluate_unchecked(p));
                }
            }
        }
        Ok(ScalarGrid {
            nx,
            ny,
            bbox,
            values,
        })
    }
}

/// Row-major scalar samples over a bounding box.
#[derive(Debug, Clone)]
pub struct ScalarGrid {
    pub nx: usize,
    pub ny: usize,
    pub bbox: BBox,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    /// Two header lines (names, then values), then one value per line in
    /// row-major order with `nan` marking exterior nodes.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("nx,ny,xmin,xmax,ymin,ymax\n");
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            self.nx, self.ny, self.bbox.xmin, self.bbox.xmax, self.bbox.ymin, self.bbox.ymax
        ));
        for v in &self.values {
            if v.is_nan() {
                out.push_str("nan\n");
            } else {
                out.push_str(&format!("{v:.16e}\n"));
            }
        }
        out
    }
}

/// Builds the certificate for `dec`, which must come from a `beta = 2`
/// solve. Pole values start from the floor/wall/cone envelope and are
/// relaxed monotonically until stable; stabilization is expected within one
/// sweep per dipole, and the relaxation is capped at two more.
pub fn build_certificate(t: &AtomicDistribution, dec: &Decomposition) -> Result<DualCertificate> {
    if (dec.kind.beta() - 2.0).abs() > 1e-12 {
        return Err(Error::CertificateUnavailable(dec.kind.beta()));
    }
    let domain = Arc::clone(t.domain());
    let mut pplus = Vec::new();
    let mut pminus = Vec::new();
    for a in &dec.r.0 {
        if domain.contains(a.location) == Membership::Interior {
            for _ in 0..a.multiplicity.unsigned_abs() {
                if a.multiplicity > 0 {
                    pplus.push(a.location);
                } else {
                    pminus.push(a.location);
                }
            }
        }
    }
    let dipoles: Vec<PolePair> = dec
        .s
        .iter()
        .map(|seg| PolePair::new(seg.to, seg.from).expect("dipole endpoints distinct"))
        .collect();

    // Initial envelope at each negative pole.
    let psi0 = |p: Point2| -> f64 {
        let mut v = (-1.0f64).max(-2.0 * domain.dist_to_boundary(p).unwrap_or(0.0));
        for apex in &pplus {
            v = v.max(1.0 - 2.0 * p.dist(*apex));
        }
        v
    };
    let mut pole_values: Vec<f64> = dipoles.iter().map(|d| psi0(d.y)).collect();

    let max_iter = dipoles.len() + 2;
    let mut iterations_used = 0;
    let mut converged = dipoles.is_empty();
    while iterations_used < max_iter {
        iterations_used += 1;
        let prev = pole_values.clone();
        let mut max_change = 0.0f64;
        for j in 0..dipoles.len() {
            let y = dipoles[j].y;
            let mut v = prev[j];
            for (k, dip) in dipoles.iter().enumerate() {
                v = v.max(prev[k] + 2.0 * dip.length() - 2.0 * dip.x.dist(y));
            }
            debug_assert!(v + 1e-15 >= prev[j], "pole values must be nondecreasing");
            max_change = max_change.max(v - prev[j]);
            pole_values[j] = v;
        }
        if max_change < POLE_VALUE_TOL {
            converged = true;
            break;
        }
    }

    let mut cert = DualCertificate {
        domain,
        pplus,
        pminus,
        dipoles,
        pole_values,
        iterations_used,
        converged,
        optimal: false,
    };
    let pairing = t.evaluate(|p| cert.evaluate_unchecked(p));
    cert.optimal =
        converged && (pairing - dec.value).abs() <= DUALITY_GAP_TOL * (1.0 + dec.value.abs());
    Ok(cert)
}

/// Feasibility and optimality findings for one certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    /// `|<T, phi> - primal value|`.
    pub gap: f64,
    pub lipschitz_ok: bool,
    /// Largest observed `|phi(p) - phi(q)| - 2 |p - q|`.
    pub max_lipschitz_excess: f64,
    pub pairs_checked: usize,
    pub range_ok: bool,
    pub max_abs_value: f64,
    pub boundary_ok: bool,
    pub boundary_max_abs: f64,
    /// Active-constraint checks: `phi = 1` on positive charges, `phi = -1`
    /// on negative charges, `phi(to) - phi(from) = 2 |to - from|` on dipoles.
    pub activity_ok: bool,
    pub max_activity_error: f64,
}

impl DualityReport {
    pub fn feasible(&self) -> bool {
        self.lipschitz_ok && self.range_ok && self.boundary_ok
    }

    pub fn optimal(&self) -> bool {
        self.feasible() && self.gap <= DUALITY_GAP_TOL && self.activity_ok
    }
}

/// Number of random point pairs checked for the Lipschitz bound.
pub const LIPSCHITZ_SAMPLE_PAIRS: usize = 10_000;

/// Verifies the certificate against its decomposition: duality gap,
/// 2-Lipschitz bound on random interior pairs, range, boundary values, and
/// constraint activity. All randomness is derived from `seed`.
pub fn verify_duality(
    cert: &DualCertificate,
    t: &AtomicDistribution,
    dec: &Decomposition,
    seed: u64,
) -> DualityReport {
    let domain = cert.domain.as_ref();
    let pairing = t.evaluate(|p| cert.evaluate_unchecked(p));
    let gap = (pairing - dec.value).abs();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_abs = 0.0f64;
    for _ in 0..LIPSCHITZ_SAMPLE_PAIRS {
        let p = sample_in_closure(domain, &mut rng);
        let q = sample_in_closure(domain, &mut rng);
        let fp = cert.evaluate_unchecked(p);
        let fq = cert.evaluate_unchecked(q);
        max_abs = max_abs.max(fp.abs()).max(fq.abs());
        max_excess = max_excess.max((fp - fq).abs() - 2.0 * p.dist(q));
    }
    let lipschitz_ok = max_excess <= 1e-9;
    let range_ok = max_abs <= 1.0 + 1e-12;

    let mut boundary_max = 0.0f64;
    for p in boundary_samples(domain, 1000) {
        boundary_max = boundary_max.max(cert.evaluate_unchecked(p).abs());
    }
    let boundary_ok = boundary_max <= 1e-6;

    let mut activity = 0.0f64;
    for apex in &cert.pplus {
        activity = activity.max((cert.evaluate_unchecked(*apex) - 1.0).abs());
    }
    for p in &cert.pminus {
        activity = activity.max((cert.evaluate_unchecked(*p) + 1.0).abs());
    }
    for dip in &cert.dipoles {
        let fx = cert.evaluate_unchecked(dip.x);
        let fy = cert.evaluate_unchecked(dip.y);
        activity = activity.max((fx - fy - 2.0 * dip.length()).abs());
    }
    let activity_ok = activity <= 1e-9;

    DualityReport {
        gap,
        lipschitz_ok,
        max_lipschitz_excess: max_excess,
        pairs_checked: LIPSCHITZ_SAMPLE_PAIRS,
        range_ok,
        max_abs_value: max_abs,
        boundary_ok,
        boundary_max_abs: boundary_max,
        activity_ok,
        max_activity_error: activity,
    }
}

pub(crate) fn sample_in_closure(d: &Domain, rng: &mut impl Rng) -> Point2 {
    let bbox = d.bbox();
    loop {
        let p = Point2::new(
            rng.gen_range(bbox.xmin..=bbox.xmax),
            rng.gen_range(bbox.ymin..=bbox.ymax),
        );
        if d.contains(p) != Membership::Exterior {
            return p;
        }
    }
}

/// Deterministic boundary sampling: every vertex plus enough equispaced
/// points per edge to reach at least `target` samples overall.
pub(crate) fn boundary_samples(d: &Domain, target: usize) -> Vec<Point2> {
    let edges = d.boundary_edges();
    let per_edge = (target / edges.len().max(1)).max(1);
    let mut out = Vec::with_capacity(edges.len() * (per_edge + 1));
    for &(a, b) in edges {
        for s in 0..=per_edge {
            let t = s as f64 / (per_edge + 1) as f64;
            out.push(Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
        }
    }
    out
}
