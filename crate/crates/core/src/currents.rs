//! Finite atomic distributions `T = sum_i (delta_{x_i} - delta_{y_i})`
//! represented as pole pairs over a domain, together with their canonical
//! forms.
//!
//! Two normal forms are used downstream:
//!
//! * **canonical** — every pair's straight-line length equals its effective
//!   transport distance (pairs that would be cheaper through the boundary
//!   are split at their boundary projections);
//! * **shadowed** — every pair joins one interior pole to its nearest
//!   boundary point, so each interior atom carries its own private boundary
//!   escape. Atoms on the boundary act as zero on test functions vanishing
//!   there, so both rewrites leave the distribution unchanged as a
//!   functional.

use crate::geom::{DistRoute, Domain, Membership, Point2};
use crate::{Error, Result};
use std::sync::Arc;

/// Positive pole `x` paired with negative pole `y` (`x != y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePair {
    pub x: Point2,
    pub y: Point2,
}

impl PolePair {
    pub fn new(x: Point2, y: Point2) -> Result<Self> {
        if x == y {
            return Err(Error::ZeroLengthSegment(x.x, x.y));
        }
        Ok(PolePair { x, y })
    }

    pub fn length(&self) -> f64 {
        self.x.dist(self.y)
    }
}

/// Dirac mass with a signed integer multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedAtom {
    pub location: Point2,
    pub multiplicity: i32,
}

/// A list of signed atoms; multiplicities are nonzero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignedAtomList(pub Vec<SignedAtom>);

impl SignedAtomList {
    pub fn new(atoms: Vec<SignedAtom>) -> Result<Self> {
        if atoms.iter().any(|a| a.multiplicity == 0) {
            return Err(Error::InvalidArgument(
                "signed atoms must have nonzero multiplicity".into(),
            ));
        }
        Ok(SignedAtomList(atoms))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expands multiplicities into unit atoms, preserving input order.
    pub fn unit_atoms(&self) -> Vec<(Point2, i32)> {
        let mut out = Vec::new();
        for a in &self.0 {
            let sign = a.multiplicity.signum();
            for _ in 0..a.multiplicity.abs() {
                out.push((a.location, sign));
            }
        }
        out
    }

    /// Merges atoms at identical locations, dropping exact cancellations.
    pub fn merged(&self) -> SignedAtomList {
        let mut acc: Vec<SignedAtom> = Vec::new();
        for a in &self.0 {
            if let Some(existing) = acc.iter_mut().find(|e| e.location == a.location) {
                existing.multiplicity += a.multiplicity;
            } else {
                acc.push(*a);
            }
        }
        acc.retain(|a| a.multiplicity != 0);
        SignedAtomList(acc)
    }

    pub fn total_multiplicity(&self) -> i64 {
        self.0.iter().map(|a| a.multiplicity as i64).sum()
    }
}

/// Finite signed sum of Dirac masses as pole pairs over a shared domain.
///
/// Immutable; rewrites return new values. The empty pair list is the zero
/// distribution.
#[derive(Debug, Clone)]
pub struct AtomicDistribution {
    pairs: Vec<PolePair>,
    domain: Arc<Domain>,
    canonical: bool,
    shadowed: bool,
}

impl AtomicDistribution {
    /// The zero distribution.
    pub fn zero(domain: Arc<Domain>) -> Self {
        AtomicDistribution {
            pairs: Vec::new(),
            domain,
            canonical: true,
            shadowed: true,
        }
    }

    /// Builds a distribution from explicit pairs, validating that every pole
    /// lies in the domain closure.
    pub fn from_pairs(pairs: Vec<PolePair>, domain: Arc<Domain>) -> Result<Self> {
        for p in &pairs {
            for pt in [p.x, p.y] {
                if domain.contains(pt) == Membership::Exterior {
                    return Err(Error::ExteriorPoint(pt.x, pt.y));
                }
            }
        }
        let empty = pairs.is_empty();
        Ok(AtomicDistribution {
            pairs,
            domain,
            canonical: empty,
            shadowed: empty,
        })
    }

    /// Rewrites a signed atom list as paired unit poles.
    ///
    /// Unit atoms of opposite sign are matched greedily by ascending mutual
    /// distance (ties broken by index); any surplus interior atoms pair with
    /// their nearest boundary point, and surplus boundary atoms vanish. The
    /// result is returned in shadowed form.
    pub fn from_signed_atoms(atoms: &SignedAtomList, domain: Arc<Domain>) -> Result<Self> {
        for a in &atoms.0 {
            if domain.contains(a.location) == Membership::Exterior {
                return Err(Error::ExteriorPoint(a.location.x, a.location.y));
            }
        }
        let units = atoms.unit_atoms();
        let pos: Vec<Point2> = units.iter().filter(|u| u.1 > 0).map(|u| u.0).collect();
        let neg: Vec<Point2> = units.iter().filter(|u| u.1 < 0).map(|u| u.0).collect();

        let mut edges = Vec::with_capacity(pos.len() * neg.len());
        for (i, p) in pos.iter().enumerate() {
            for (j, n) in neg.iter().enumerate() {
                edges.push((p.dist(*n), i, j));
            }
        }
        edges.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        let mut used_p = vec![false; pos.len()];
        let mut used_n = vec![false; neg.len()];
        let mut pairs = Vec::new();
        for (_, i, j) in edges {
            if used_p[i] || used_n[j] {
                continue;
            }
            used_p[i] = true;
            used_n[j] = true;
            if pos[i] != neg[j] {
                pairs.push(PolePair {
                    x: pos[i],
                    y: neg[j],
                });
            }
        }
        for (i, p) in pos.iter().enumerate() {
            if !used_p[i] && domain.contains(*p) == Membership::Interior {
                let shadow = domain.nearest_boundary_point(*p);
                pairs.push(PolePair { x: *p, y: shadow });
            }
        }
        for (j, n) in neg.iter().enumerate() {
            if !used_n[j] && domain.contains(*n) == Membership::Interior {
                let shadow = domain.nearest_boundary_point(*n);
                pairs.push(PolePair { x: shadow, y: *n });
            }
        }

        let raw = AtomicDistribution {
            pairs,
            domain,
            canonical: false,
            shadowed: false,
        };
        Ok(raw.shadowed_form())
    }

    pub fn pairs(&self) -> &[PolePair] {
        &self.pairs
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn is_shadowed(&self) -> bool {
        self.shadowed
    }

    fn membership(&self, p: Point2) -> Membership {
        self.domain.contains(p)
    }

    /// Canonical form: pairs whose boundary route is strictly cheaper are
    /// split at the two boundary projections, so that afterwards every
    /// pair's straight-line length equals its effective distance. Pairs with
    /// both poles on the boundary are dropped (they act as zero).
    pub fn canonical_form(&self) -> Self {
        let d = &self.domain;
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for pair in &self.pairs {
            let mx = self.membership(pair.x);
            let my = self.membership(pair.y);
            if mx == Membership::Boundary && my == Membership::Boundary {
                continue;
            }
            let (_, route) = d
                .effective_distance(pair.x, pair.y)
                .expect("poles validated in closure");
            match route {
                DistRoute::Direct => pairs.push(*pair),
                DistRoute::ViaBoundary => {
                    if mx == Membership::Interior {
                        let yhat = d.nearest_boundary_point(pair.x);
                        if pair.x != yhat {
                            pairs.push(PolePair { x: pair.x, y: yhat });
                        }
                    }
                    if my == Membership::Interior {
                        let xhat = d.nearest_boundary_point(pair.y);
                        if xhat != pair.y {
                            pairs.push(PolePair { x: xhat, y: pair.y });
                        }
                    }
                }
            }
        }
        AtomicDistribution {
            pairs,
            domain: Arc::clone(&self.domain),
            canonical: true,
            shadowed: false,
        }
    }

    /// Shadowed form: the interior atoms are collected (cancelling exact
    /// coincidences of opposite sign) and every surviving interior pole is
    /// paired with its own nearest boundary point. All pairs then have
    /// exactly one interior pole, at straight-line distance equal to its
    /// boundary distance.
    pub fn shadowed_form(&self) -> Self {
        let base = if self.canonical {
            self.clone()
        } else {
            self.canonical_form()
        };
        let d = &base.domain;

        let mut pos: Vec<Point2> = Vec::new();
        let mut neg: Vec<Point2> = Vec::new();
        for pair in &base.pairs {
            if base.membership(pair.x) == Membership::Interior {
                pos.push(pair.x);
            }
            if base.membership(pair.y) == Membership::Interior {
                neg.push(pair.y);
            }
        }
        // Cancel exact positive/negative coincidences.
        let mut keep_neg = vec![true; neg.len()];
        pos.retain(|p| {
            if let Some(j) = neg
                .iter()
                .enumerate()
                .position(|(j, n)| keep_neg[j] && n == p)
            {
                keep_neg[j] = false;
                false
            } else {
                true
            }
        });
        let neg: Vec<Point2> = neg
            .into_iter()
            .zip(keep_neg)
            .filter_map(|(n, keep)| keep.then_some(n))
            .collect();

        let mut pairs = Vec::with_capacity(pos.len() + neg.len());
        for p in pos {
            let shadow = d.nearest_boundary_point(p);
            if p != shadow {
                pairs.push(PolePair { x: p, y: shadow });
            }
        }
        for n in neg {
            let shadow = d.nearest_boundary_point(n);
            if n != shadow {
                pairs.push(PolePair { x: shadow, y: n });
            }
        }
        AtomicDistribution {
            pairs,
            domain: Arc::clone(&self.domain),
            canonical: true,
            shadowed: true,
        }
    }

    /// Pairing of the distribution against a test function:
    /// `sum_i (phi(x_i) - phi(y_i))`, as an exact finite sum.
    pub fn evaluate<F: Fn(Point2) -> f64>(&self, phi: F) -> f64 {
        self.pairs.iter().map(|p| phi(p.x) - phi(p.y)).sum()
    }

    /// The competitor that keeps every pair as a dipole segment:
    /// `beta * sum_i |x_i - y_i|`, computed on the canonical form. Any
    /// decomposition value is bounded by this.
    pub fn trivial_upper_bound(&self, beta: f64) -> f64 {
        let t = if self.canonical {
            self.clone()
        } else {
            self.canonical_form()
        };
        beta * t.pairs.iter().map(PolePair::length).sum::<f64>()
    }

    /// Restriction of the measure away from a finite puncture set: interior
    /// poles within `eps_match` of a puncture are removed, and orphaned
    /// partners are re-paired with their nearest boundary point.
    ///
    /// `eps_match` defaults to `1e-7 *` domain diameter.
    pub fn restrict(&self, punctures: &[Point2], eps_match: Option<f64>) -> Self {
        let eps = eps_match.unwrap_or(1e-7 * self.domain.diameter());
        let punctured = |p: Point2| {
            self.membership(p) == Membership::Interior && punctures.iter().any(|c| c.dist(p) <= eps)
        };
        let d = &self.domain;
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for pair in &self.pairs {
            match (punctured(pair.x), punctured(pair.y)) {
                (false, false) => pairs.push(*pair),
                (true, true) => {}
                (true, false) => {
                    if self.membership(pair.y) == Membership::Interior {
                        let shadow = d.nearest_boundary_point(pair.y);
                        if shadow != pair.y {
                            pairs.push(PolePair {
                                x: shadow,
                                y: pair.y,
                            });
                        }
                    }
                }
                (false, true) => {
                    if self.membership(pair.x) == Membership::Interior {
                        let shadow = d.nearest_boundary_point(pair.x);
                        if pair.x != shadow {
                            pairs.push(PolePair {
                                x: pair.x,
                                y: shadow,
                            });
                        }
                    }
                }
            }
        }
        AtomicDistribution {
            pairs,
            domain: Arc::clone(&self.domain),
            canonical: self.canonical,
            shadowed: self.shadowed,
        }
    }

    /// Collapses back to signed atoms: interior poles only, opposite signs
    /// at identical locations cancelled.
    pub fn to_signed_atoms(&self) -> SignedAtomList {
        let mut atoms = Vec::new();
        for pair in &self.pairs {
            if self.membership(pair.x) == Membership::Interior {
                atoms.push(SignedAtom {
                    location: pair.x,
                    multiplicity: 1,
                });
            }
            if self.membership(pair.y) == Membership::Interior {
                atoms.push(SignedAtom {
                    location: pair.y,
                    multiplicity: -1,
                });
            }
        }
        SignedAtomList(atoms).merged()
    }

    /// Interior unit poles split by sign: `(positives, negatives)`.
    pub fn interior_unit_poles(&self) -> (Vec<Point2>, Vec<Point2>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for pair in &self.pairs {
            if self.membership(pair.x) == Membership::Interior {
                pos.push(pair.x);
            }
            if self.membership(pair.y) == Membership::Interior {
                neg.push(pair.y);
            }
        }
        (pos, neg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Domain;

    fn disc() -> Arc<Domain> {
        Arc::new(Domain::ngon_disc(1.0, 720).unwrap())
    }

    fn atoms(list: &[(f64, f64, i32)]) -> SignedAtomList {
        SignedAtomList::new(
            list.iter()
                .map(|&(x, y, m)| SignedAtom {
                    location: Point2::new(x, y),
                    multiplicity: m,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_positive_atom_pairs_with_boundary() {
        let d = disc();
        let t = AtomicDistribution::from_signed_atoms(&atoms(&[(0.0, 0.0, 1)]), d.clone()).unwrap();
        assert_eq!(t.pairs().len(), 1);
        let pair = t.pairs()[0];
        assert_eq!(pair.x, Point2::new(0.0, 0.0));
        assert!(pair.y.dist(Point2::new(1.0, 0.0)) < 5e-3);
        assert!((pair.length() - d.dist_to_boundary(pair.x).unwrap()).abs() < 1e-12);
        assert!(t.is_shadowed());
    }

    #[test]
    fn empty_atoms_give_zero() {
        let t = AtomicDistribution::from_signed_atoms(&SignedAtomList::default(), disc()).unwrap();
        assert!(t.is_zero());
    }

    #[test]
    fn plus_minus_pair() {
        let d = disc();
        let a = Point2::new(-0.2, 0.1);
        let b = Point2::new(0.3, -0.1);
        let t = AtomicDistribution::from_signed_atoms(&atoms(&[(a.x, a.y, 1), (b.x, b.y, -1)]), d)
            .unwrap();
        // Shadowed form: each interior pole carries its own boundary escape.
        assert_eq!(t.pairs().len(), 2);
        let atoms_back = t.to_signed_atoms();
        let merged = atoms(&[(a.x, a.y, 1), (b.x, b.y, -1)]).merged();
        assert_eq!(atoms_back, merged);
    }

    #[test]
    fn shadowed_form_cases() {
        let d = disc();
        // A pair that already joins an interior pole to its nearest boundary
        // point is left as is.
        let x = Point2::new(0.3, 0.2);
        let shadow = d.nearest_boundary_point(x);
        let t = AtomicDistribution::from_pairs(vec![PolePair::new(x, shadow).unwrap()], d.clone())
            .unwrap();
        let s = t.shadowed_form();
        assert_eq!(s.pairs(), t.pairs());
        assert!(s.is_shadowed());

        // A both-interior pair splits into the two shadow pairs.
        let t = AtomicDistribution::from_pairs(
            vec![PolePair::new(Point2::new(-0.2, 0.0), Point2::new(0.2, 0.0)).unwrap()],
            d.clone(),
        )
        .unwrap();
        let s = t.shadowed_form();
        assert_eq!(s.pairs().len(), 2);
        for pair in s.pairs() {
            let interior = [pair.x, pair.y]
                .iter()
                .filter(|p| d.contains(**p) == Membership::Interior)
                .count();
            assert_eq!(interior, 1);
            let depth = [pair.x, pair.y]
                .iter()
                .find(|p| d.contains(**p) == Membership::Interior)
                .map(|p| d.dist_to_boundary(*p).unwrap())
                .unwrap();
            assert!((pair.length() - depth).abs() < 1e-9);
        }

        assert!(AtomicDistribution::zero(d).shadowed_form().is_zero());
    }

    #[test]
    fn canonical_form_splits_boundary_route() {
        let d = disc();
        let pair = PolePair::new(Point2::new(-0.9, 0.0), Point2::new(0.9, 0.0)).unwrap();
        let t = AtomicDistribution::from_pairs(vec![pair], d.clone()).unwrap();
        let c = t.canonical_form();
        assert_eq!(c.pairs().len(), 2);
        // (x, proj(x)) and (proj(y), y).
        let p0 = c.pairs()[0];
        let p1 = c.pairs()[1];
        assert_eq!(p0.x, pair.x);
        assert!(p0.y.dist(Point2::new(-1.0, 0.0)) < 5e-3);
        assert_eq!(p1.y, pair.y);
        assert!(p1.x.dist(Point2::new(1.0, 0.0)) < 5e-3);
        // Pair lengths now realize the effective distances.
        for p in c.pairs() {
            let (val, _) = d.effective_distance(p.x, p.y).unwrap();
            assert!((p.length() - val).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_form_keeps_direct_pairs() {
        let d = disc();
        let pair = PolePair::new(Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0)).unwrap();
        let t = AtomicDistribution::from_pairs(vec![pair], d).unwrap();
        let c = t.canonical_form();
        assert_eq!(c.pairs(), &[pair]);
        let z = AtomicDistribution::zero(disc());
        assert!(z.canonical_form().is_zero());
    }

    #[test]
    fn rewrites_preserve_action() {
        // Both rewrites leave the pairing with boundary-vanishing test
        // functions unchanged.
        let d = disc();
        let t = AtomicDistribution::from_pairs(
            vec![
                PolePair::new(Point2::new(-0.9, 0.0), Point2::new(0.9, 0.0)).unwrap(),
                PolePair::new(Point2::new(0.2, 0.3), Point2::new(-0.1, -0.4)).unwrap(),
            ],
            d.clone(),
        )
        .unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let cx = rng.gen_range(-0.8..0.8);
            let cy = rng.gen_range(-0.8..0.8);
            let s = rng.gen_range(0.5..2.0);
            let dd = d.clone();
            let phi = move |p: Point2| {
                let cone = 1.0 - s * p.dist(Point2::new(cx, cy));
                let band = (2.0 * dd.dist_to_boundary(p).unwrap_or(0.0)).min(1.0);
                cone.clamp(-band, band)
            };
            let v0 = t.evaluate(&phi);
            let v1 = t.canonical_form().evaluate(&phi);
            let v2 = t.shadowed_form().evaluate(&phi);
            assert!(
                (v0 - v1).abs() < 1e-9,
                "canonical changed action: {v0} vs {v1}"
            );
            assert!(
                (v0 - v2).abs() < 1e-9,
                "shadowed changed action: {v0} vs {v2}"
            );
        }
    }

    #[test]
    fn evaluate_basics() {
        let d = disc();
        let t = AtomicDistribution::from_pairs(
            vec![PolePair::new(Point2::new(-0.3, 0.0), Point2::new(0.4, 0.0)).unwrap()],
            d,
        )
        .unwrap();
        assert_eq!(t.evaluate(|_| 5.0), 0.0);
        let bump = |p: Point2| if p.x < 0.0 { 1.0 } else { 0.0 };
        assert_eq!(t.evaluate(bump), 1.0);
    }

    #[test]
    fn trivial_upper_bound_values() {
        let d = disc();
        let t = AtomicDistribution::from_pairs(
            vec![PolePair::new(Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0)).unwrap()],
            d.clone(),
        )
        .unwrap();
        assert!((t.trivial_upper_bound(2.0) - 0.4).abs() < 1e-12);
        assert_eq!(AtomicDistribution::zero(d).trivial_upper_bound(2.0), 0.0);
    }

    #[test]
    fn restrict_semantics() {
        let d = disc();
        let x = Point2::new(-0.2, 0.0);
        let y = Point2::new(0.2, 0.0);
        let t = AtomicDistribution::from_pairs(vec![PolePair::new(x, y).unwrap()], d).unwrap();

        // Puncturing the positive pole leaves the negative pole escaping to
        // the boundary.
        let r = t.restrict(&[x], None);
        assert_eq!(r.pairs().len(), 1);
        assert_eq!(r.pairs()[0].y, y);
        assert!(r.pairs()[0].x.dist(Point2::new(1.0, 0.0)) < 5e-3);

        // Empty puncture list is the identity.
        let id = t.restrict(&[], None);
        assert_eq!(id.pairs(), t.pairs());

        // Puncturing everything yields zero.
        let z = t.restrict(&[x, y], None);
        assert!(z.is_zero());

        // Idempotent for a fixed puncture set.
        let r2 = r.restrict(&[x], None);
        assert_eq!(r2.pairs(), r.pairs());
    }

    #[test]
    fn round_trip_multiset() {
        let d = disc();
        let input = atoms(&[(0.1, 0.2, 2), (-0.3, 0.0, -1), (0.4, -0.2, -1)]);
        let t = AtomicDistribution::from_signed_atoms(&input, d).unwrap();
        let back = t.to_signed_atoms();
        let mut expect = input.merged().0;
        let mut got = back.0;
        let key = |a: &SignedAtom| (a.location.x.to_bits(), a.location.y.to_bits());
        expect.sort_by_key(key);
        got.sort_by_key(key);
        assert_eq!(expect, got);
    }

    #[test]
    fn rejects_exterior_atoms() {
        let d = disc();
        let bad = atoms(&[(5.0, 5.0, 1)]);
        assert!(matches!(
            AtomicDistribution::from_signed_atoms(&bad, d),
            Err(Error::ExteriorPoint(_, _))
        ));
    }
}
