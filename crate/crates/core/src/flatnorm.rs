//! Primal solvers for the weighted flat norm of a finite atomic
//! distribution: `min |R| + beta * |S|` over decompositions `T = R + dS`
//! into point charges `R` and oriented dipole segments `S`, with boundary
//! atoms free.
//!
//! Two exact solvers are provided. [`solve_bruteforce`] enumerates every
//! partition of the shadowed index set into charges and dipoles together
//! with every injective dipole target map; it is the oracle and is guarded
//! to small instances. [`solve_matching`] reduces the same problem to
//! min-cost perfect matching on a bipartite graph over the interior unit
//! poles, where each pole also owns a private virtual partner priced at its
//! cheapest standalone resolution (point charge, or escape segment to its
//! nearest boundary point); the Hungarian method then yields the optimum in
//! cubic time.

use crate::currents::{AtomicDistribution, SignedAtom, SignedAtomList};
use crate::geom::{DistRoute, Domain, Membership, Point2, Segment};
use crate::{Error, Result};

/// Which member of the flat-norm family to compute: segment mass is weighted
/// by `beta` while an unmatched interior atom always costs 1. `beta = 2`
/// makes point charges commensurate with dipole segments; `beta = 1` is the
/// classical flat norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormKind {
    beta: f64,
}

impl NormKind {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "segment weight beta must be positive and finite, got {beta}"
            )));
        }
        Ok(NormKind { beta })
    }

    /// Classical flat norm (`beta = 1`).
    pub fn flat() -> Self {
        NormKind { beta: 1.0 }
    }

    /// Length-weighted norm with `beta = 2`, making a unit point charge
    /// comparable with a dipole of length 1/2.
    pub fn flat_alpha() -> Self {
        NormKind { beta: 2.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Oriented dipole segment of a decomposition; its boundary contributes
/// `+1` at `to` and `-1` at `from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleSegment {
    pub from: Point2,
    pub to: Point2,
    pub route: DistRoute,
}

impl DipoleSegment {
    pub fn length(&self) -> f64 {
        self.from.dist(self.to)
    }

    pub fn segment(&self) -> Segment {
        Segment::new(self.from, self.to).expect("dipole endpoints distinct")
    }
}

/// Partition of the shadowed index set into point charges and dipoles,
/// together with the injective dipole target map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchingAssignment {
    /// Indices kept as charges (their positive pole is charged if interior).
    pub point_charges: Vec<usize>,
    /// `(k, tau(k))`: index `k` connects its positive pole to the negative
    /// pole of index `tau(k)`.
    pub dipoles: Vec<(usize, usize)>,
    /// Route of each dipole, parallel to `dipoles`: `Direct` joins two
    /// interior poles, `ViaBoundary` is a boundary escape.
    pub routes: Vec<DistRoute>,
}

impl MatchingAssignment {
    /// Indices whose negative pole is not consumed by any dipole.
    pub fn unpaired_negatives(&self, n: usize) -> Vec<usize> {
        let mut consumed = vec![false; n];
        for &(_, j) in &self.dipoles {
            consumed[j] = true;
        }
        (0..n).filter(|j| !consumed[*j]).collect()
    }
}

/// Optimal decomposition `T = R + dS` with
/// `value = mass_r(R) + beta * mass_s(S)`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub r: SignedAtomList,
    pub s: Vec<DipoleSegment>,
    pub value: f64,
    pub kind: NormKind,
    pub assignment: MatchingAssignment,
}

/// Mass of a charge list inside the open domain: interior atoms count with
/// their absolute multiplicity, boundary atoms contribute nothing.
pub fn mass_r(r: &SignedAtomList, d: &Domain) -> f64 {
    r.0.iter()
        .filter(|a| d.contains(a.location) == Membership::Interior)
        .map(|a| a.multiplicity.unsigned_abs() as f64)
        .sum::<f64>()
        // An empty sum is IEEE -0.0; masses are reported as +0.
        .max(0.0)
}

/// Mass of a segment list inside the open domain.
pub fn mass_s(s: &[DipoleSegment], d: &Domain) -> f64 {
    s.iter()
        .map(|seg| match Segment::new(seg.from, seg.to) {
            Ok(segment) => d.segment_length_inside(&segment),
            Err(_) => 0.0,
        })
        .sum::<f64>()
        .max(0.0)
}

/// Precomputed costs of one shadowed instance.
struct Instance<'a> {
    t: &'a AtomicDistribution,
    domain: &'a Domain,
    beta: f64,
    /// Charge cost of the positive pole of each index (1 interior, 0 boundary).
    xq: Vec<f64>,
    /// Charge cost of the negative pole of each index.
    yq: Vec<f64>,
}

impl<'a> Instance<'a> {
    fn new(t: &'a AtomicDistribution, kind: NormKind) -> Self {
        let domain = t.domain().as_ref();
        let xq = t
            .pairs()
            .iter()
            .map(|p| (domain.contains(p.x) == Membership::Interior) as u8 as f64)
            .collect();
        let yq = t
            .pairs()
            .iter()
            .map(|p| (domain.contains(p.y) == Membership::Interior) as u8 as f64)
            .collect();
        Instance {
            t,
            domain,
            beta: kind.beta(),
            xq,
            yq,
        }
    }

    fn len(&self) -> usize {
        self.t.pairs().len()
    }

    /// Clipped mass of the segment joining the negative pole of `j` to the
    /// positive pole of `k`.
    fn seg_mass(&self, k: usize, j: usize) -> f64 {
        let x = self.t.pairs()[k].x;
        let y = self.t.pairs()[j].y;
        match Segment::new(y, x) {
            Ok(s) => self.domain.segment_length_inside(&s),
            Err(_) => 0.0,
        }
    }

    fn build_decomposition(&self, kind: NormKind, assignment: MatchingAssignment) -> Decomposition {
        let pairs = self.t.pairs();
        let mut r = Vec::new();
        for &k in &assignment.point_charges {
            if self.xq[k] > 0.0 {
                r.push(SignedAtom {
                    location: pairs[k].x,
                    multiplicity: 1,
                });
            }
        }
        for j in assignment.unpaired_negatives(self.len()) {
            if self.yq[j] > 0.0 {
                r.push(SignedAtom {
                    location: pairs[j].y,
                    multiplicity: -1,
                });
            }
        }
        let mut s = Vec::new();
        let mut routes = Vec::new();
        for (idx, &(k, j)) in assignment.dipoles.iter().enumerate() {
            let to = pairs[k].x;
            let from = pairs[j].y;
            if from == to {
                continue;
            }
            let route = assignment.routes.get(idx).copied().unwrap_or_else(|| {
                if self.xq[k] > 0.0 && self.yq[j] > 0.0 {
                    DistRoute::Direct
                } else {
                    DistRoute::ViaBoundary
                }
            });
            s.push(DipoleSegment { from, to, route });
            routes.push(route);
        }
        let r = SignedAtomList(r);
        let value = mass_r(&r, self.domain) + kind.beta() * mass_s(&s, self.domain);
        Decomposition {
            r,
            s,
            value,
            kind,
            assignment: MatchingAssignment {
                routes,
                ..assignment
            },
        }
    }
}

/// Hard cap on the index set accepted by [`solve_bruteforce`].
pub const BRUTEFORCE_MAX_ATOMS: usize = 8;

/// Exhaustive minimum over all charge/dipole partitions and injective
/// target maps. Exact oracle; refuses instances with more than
/// [`BRUTEFORCE_MAX_ATOMS`] interior atoms.
pub fn solve_bruteforce(t: &AtomicDistribution, kind: NormKind) -> Result<Decomposition> {
    let t = if t.is_shadowed() {
        t.clone()
    } else {
        t.shadowed_form()
    };
    let n = t.pairs().len();
    if n > BRUTEFORCE_MAX_ATOMS {
        return Err(Error::BruteForceGuard {
            atoms: n,
            max: BRUTEFORCE_MAX_ATOMS,
        });
    }
    let inst = Instance::new(&t, kind);
    let (best_mask, best_tau, _) = enumerate_minimum(&inst);

    let mut assignment = MatchingAssignment::default();
    for k in 0..n {
        if best_mask & (1 << k) == 0 {
            assignment.point_charges.push(k);
        }
    }
    let mut ti = 0;
    for k in 0..n {
        if best_mask & (1 << k) != 0 {
            let j = best_tau[ti];
            ti += 1;
            assignment.dipoles.push((k, j));
            let route = if inst.xq[k] > 0.0 && inst.yq[j] > 0.0 {
                DistRoute::Direct
            } else {
                DistRoute::ViaBoundary
            };
            assignment.routes.push(route);
        }
    }
    Ok(inst.build_decomposition(kind, assignment))
}

/// Enumerates every `(I_D, tau)` candidate in a fixed lexicographic order
/// (dipole subsets by ascending bitmask, targets in ascending index order)
/// and returns the first strict minimum.
fn enumerate_minimum(inst: &Instance) -> (u32, Vec<usize>, f64) {
    let n = inst.len();
    let beta = inst.beta;
    let base: f64 = inst.xq.iter().sum::<f64>() + inst.yq.iter().sum::<f64>();

    // Table of segment masses and a per-index relaxation bound for pruning.
    let seg: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..n).map(|j| inst.seg_mass(k, j)).collect())
        .collect();
    let min_delta: Vec<f64> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| beta * seg[k][j] - inst.yq[j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut best = base;
    let mut best_mask: u32 = 0;
    let mut best_tau: Vec<usize> = Vec::new();

    let mut members = Vec::with_capacity(n);
    let mut tau = vec![0usize; n];
    let mut used = vec![false; n];
    for mask in 1u32..(1 << n) {
        members.clear();
        let mut cost = base;
        for k in 0..n {
            if mask & (1 << k) != 0 {
                members.push(k);
                cost -= inst.xq[k];
            }
        }
        assign_rec(
            inst,
            &seg,
            &min_delta,
            &members,
            0,
            cost,
            &mut tau,
            &mut used,
            &mut best,
            &mut best_mask,
            &mut best_tau,
            mask,
        );
    }
    (best_mask, best_tau, best)
}

#[allow(clippy::too_many_arguments)]
fn assign_rec(
    inst: &Instance,
    seg: &[Vec<f64>],
    min_delta: &[f64],
    members: &[usize],
    pos: usize,
    cost: f64,
    tau: &mut [usize],
    used: &mut [bool],
    best: &mut f64,
    best_mask: &mut u32,
    best_tau: &mut Vec<usize>,
    mask: u32,
) {
    if pos == members.len() {
        if cost < *best {
            *best = cost;
            *best_mask = mask;
            *best_tau = tau[..members.len()].to_vec();
        }
        return;
    }
    // Relaxation bound: the remaining dipoles can improve the cost by at
    // most the sum of their unconstrained best deltas.
    let bound: f64 = members[pos..].iter().map(|&k| min_delta[k]).sum();
    if cost + bound >= *best {
        return;
    }
    let k = members[pos];
    let n = inst.len();
    for j in 0..n {
        if used[j] {
            continue;
        }
        used[j] = true;
        tau[pos] = j;
        let delta = inst.beta * seg[k][j] - inst.yq[j];
        assign_rec(
            inst,
            seg,
            min_delta,
            members,
            pos + 1,
            cost + delta,
            tau,
            used,
            best,
            best_mask,
            best_tau,
            mask,
        );
        used[j] = false;
    }
}

/// Exact solve through the assignment reduction.
///
/// Interior positive poles form one side of a bipartite graph and interior
/// negative poles the other. A real edge priced `beta * |p - n|` exists when
/// the straight segment stays in the closure (edges leaving the closure are
/// omitted: the boundary route is never longer, and the private virtual
/// partners already price it). Each pole's virtual partner costs
/// `min(1, beta * dist_to_boundary)`; ties resolve to the boundary escape.
pub fn solve_matching(t: &AtomicDistribution, kind: NormKind) -> Result<Decomposition> {
    let t = if t.is_shadowed() {
        t.clone()
    } else {
        t.shadowed_form()
    };
    let inst = Instance::new(&t, kind);
    let domain = t.domain().as_ref();
    let beta = kind.beta();
    let n = inst.len();

    // Interior poles with the index of their owning pair.
    let pos: Vec<usize> = (0..n).filter(|&k| inst.xq[k] > 0.0).collect();
    let neg: Vec<usize> = (0..n).filter(|&j| inst.yq[j] > 0.0).collect();
    let np = pos.len();
    let nn = neg.len();

    let escape_cost = |p: Point2| -> f64 {
        let depth = domain.dist_to_boundary(p).expect("interior pole");
        (beta * depth).min(1.0)
    };

    const BIG: f64 = 1e12;
    let m = np + nn;
    let mut cost = vec![vec![0.0f64; m]; m];
    for (i, &k) in pos.iter().enumerate() {
        let p = t.pairs()[k].x;
        for (j, &l) in neg.iter().enumerate() {
            let q = t.pairs()[l].y;
            let in_closure =
                p != q && domain.segment_in_closure(&Segment::new(p, q).expect("distinct poles"));
            if in_closure {
                cost[i][j] = beta * p.dist(q);
            } else {
                cost[i][j] = BIG;
                // An omitted edge is never better than resolving both poles
                // through their own escapes.
                debug_assert!(
                    p == q
                        || beta * p.dist(q) + 1e-9
                            >= escape_cost(p).min(1.0) + escape_cost(q).min(1.0)
                );
            }
        }
        for j in 0..np {
            cost[i][nn + j] = if i == j { escape_cost(p) } else { BIG };
        }
    }
    for (j, &l) in neg.iter().enumerate() {
        let q = t.pairs()[l].y;
        for (jj, slot) in cost[np + j].iter_mut().enumerate().take(nn) {
            *slot = if j == jj { escape_cost(q) } else { BIG };
        }
        // Virtual row against virtual columns is free.
    }

    let row_to_col = hungarian(&cost);

    let mut assignment = MatchingAssignment::default();
    let mut in_dipoles = vec![false; n];
    for (i, &k) in pos.iter().enumerate() {
        let col = row_to_col[i];
        if col < nn {
            let l = neg[col];
            assignment.dipoles.push((k, l));
            assignment.routes.push(DistRoute::Direct);
            in_dipoles[k] = true;
        } else {
            let p = t.pairs()[k].x;
            // 1e-12 slack so borderline charge/escape ties resolve stably
            // to the boundary segment.
            if beta * domain.dist_to_boundary(p).expect("interior pole") <= 1.0 + 1e-12 {
                // Boundary escape along the pole's own shadow pair.
                assignment.dipoles.push((k, k));
                assignment.routes.push(DistRoute::ViaBoundary);
                in_dipoles[k] = true;
            }
        }
    }
    for (j, &l) in neg.iter().enumerate() {
        let col = row_to_col[np + j];
        if col < nn {
            debug_assert_eq!(col, j, "virtual rows only reach their own pole");
            let q = t.pairs()[l].y;
            if beta * domain.dist_to_boundary(q).expect("interior pole") <= 1.0 + 1e-12 {
                assignment.dipoles.push((l, l));
                assignment.routes.push(DistRoute::ViaBoundary);
                in_dipoles[l] = true;
            }
        }
    }
    for (k, covered) in in_dipoles.iter().enumerate() {
        if !covered {
            assignment.point_charges.push(k);
        }
    }
    Ok(inst.build_decomposition(kind, assignment))
}

/// O(n^3) Hungarian method on a square cost matrix; returns the column
/// assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[j] = row (1-based) on column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![usize::MAX; n];
    for j in 1..=n {
        if matched[j] > 0 {
            assignment[matched[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Outcome of one structural check on a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    SkippedDegenerate,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::SkippedDegenerate => "skipped_degenerate",
        }
    }

    pub fn is_hard_failure(&self) -> bool {
        matches!(self, CheckStatus::Fail)
    }
}

/// Structural properties every minimizer of the `beta = 2` norm satisfies.
///
/// `charge_separation`: opposite unpaired interior charges are at least 1
/// apart and at depth at least 1/2. `segment_length_bounds`: every dipole
/// segment stays in the closure, with length at most `min(1, depth(to) +
/// depth(from))` and at most `1/2 + min(depth(to), depth(from))`. The three
/// intersection checks constrain how two dipole segments may meet; they are
/// skipped when the decomposition's interior points are coincident or three
/// collinear. `mass_identity`: the segment mass inside the domain equals the
/// plain sum of segment lengths. `decomposition_identity`: `R + dS` acts on
/// test functions exactly as the input distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    pub charge_separation: CheckStatus,
    pub segment_length_bounds: CheckStatus,
    pub single_point_crossings: CheckStatus,
    pub overlap_crossings: CheckStatus,
    pub segments_disjoint_in_domain: CheckStatus,
    pub mass_identity: CheckStatus,
    pub decomposition_identity: CheckStatus,
}

impl StructureReport {
    pub fn hard_failures(&self) -> usize {
        [
            self.charge_separation,
            self.segment_length_bounds,
            self.single_point_crossings,
            self.overlap_crossings,
            self.segments_disjoint_in_domain,
            self.mass_identity,
            self.decomposition_identity,
        ]
        .iter()
        .filter(|c| c.is_hard_failure())
        .count()
    }

    pub fn all_ok(&self) -> bool {
        self.hard_failures() == 0
    }
}

const STRUCTURE_TOL: f64 = 1e-9;

/// Verifies the minimizer structure of `dec` (requires `beta = 2`).
pub fn verify_structure(
    dec: &Decomposition,
    t: &AtomicDistribution,
    d: &Domain,
) -> Result<StructureReport> {
    if (dec.kind.beta() - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "structure checks are established only for beta = 2, got beta = {}",
            dec.kind.beta()
        )));
    }
    let tol = STRUCTURE_TOL;

    // (charges) pairwise separation and depth.
    let mut charge_sep = CheckStatus::Pass;
    let interior_charges: Vec<&SignedAtom> = dec
        .r
        .0
        .iter()
        .filter(|a| d.contains(a.location) == Membership::Interior)
        .collect();
    for a in &interior_charges {
        let depth = d.dist_to_boundary(a.location).unwrap_or(0.0);
        if depth < 0.5 - tol {
            charge_sep = CheckStatus::Fail;
        }
    }
    for a in &interior_charges {
        for b in &interior_charges {
            if a.multiplicity > 0 && b.multiplicity < 0 && a.location.dist(b.location) < 1.0 - tol {
                charge_sep = CheckStatus::Fail;
            }
        }
    }

    // (segments) containment and length bounds.
    let mut seg_bounds = CheckStatus::Pass;
    for seg in &dec.s {
        let segment = match Segment::new(seg.from, seg.to) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if !d.segment_in_closure(&segment) {
            seg_bounds = CheckStatus::Fail;
            continue;
        }
        let len = seg.length();
        let df = d.dist_to_boundary(seg.from).unwrap_or(0.0);
        let dt = d.dist_to_boundary(seg.to).unwrap_or(0.0);
        if len > 1.0f64.min(df + dt) + tol {
            seg_bounds = CheckStatus::Fail;
        }
        if len > 0.5 + df.min(dt) + tol {
            seg_bounds = CheckStatus::Fail;
        }
    }

    // Degeneracy of the decomposition's interior point configuration.
    let mut points: Vec<Point2> = Vec::new();
    for a in &interior_charges {
        points.push(a.location);
    }
    for seg in &dec.s {
        for p in [seg.from, seg.to] {
            if d.contains(p) == Membership::Interior {
                points.push(p);
            }
        }
    }
    let degenerate = has_degenerate_configuration(&points, d.diameter());

    let (mut single_pt, mut overlap, mut disjoint) = if degenerate {
        (
            CheckStatus::SkippedDegenerate,
            CheckStatus::SkippedDegenerate,
            CheckStatus::SkippedDegenerate,
        )
    } else {
        (CheckStatus::Pass, CheckStatus::Pass, CheckStatus::Pass)
    };
    if !degenerate {
        let tol_pt = tol * d.diameter().max(1.0);
        for i in 0..dec.s.len() {
            for j in (i + 1)..dec.s.len() {
                let s1 = &dec.s[i];
                let s2 = &dec.s[j];
                match closed_segment_intersection(s1, s2, tol_pt) {
                    SegMeet::None => {}
                    SegMeet::Point(r) => {
                        let shared_neg = r.dist(s1.from) <= tol_pt && r.dist(s2.from) <= tol_pt;
                        let shared_pos = r.dist(s1.to) <= tol_pt && r.dist(s2.to) <= tol_pt;
                        if !(shared_neg || shared_pos) {
                            single_pt = CheckStatus::Fail;
                        }
                        if d.contains(r) == Membership::Interior {
                            disjoint = CheckStatus::Fail;
                        }
                    }
                    SegMeet::Overlap(a, b) => {
                        let spans_1 = (a.dist(s1.from) <= tol_pt && b.dist(s2.to) <= tol_pt)
                            || (b.dist(s1.from) <= tol_pt && a.dist(s2.to) <= tol_pt);
                        let spans_2 = (a.dist(s2.from) <= tol_pt && b.dist(s1.to) <= tol_pt)
                            || (b.dist(s2.from) <= tol_pt && a.dist(s1.to) <= tol_pt);
                        if !(spans_1 || spans_2) {
                            overlap = CheckStatus::Fail;
                        }
                        let mid = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
                        if d.contains(mid) == Membership::Interior {
                            disjoint = CheckStatus::Fail;
                        }
                    }
                }
            }
        }
    }

    // (mass identity) clipped segment mass equals the plain length sum.
    let plain: f64 = dec.s.iter().map(DipoleSegment::length).sum();
    let mass = mass_s(&dec.s, d);
    let mass_identity = if (plain - mass).abs() <= tol.max(tol * plain) {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };

    // (identity) R + dS acts like t on boundary-vanishing test functions.
    let mut identity = CheckStatus::Pass;
    for trial in 0..20u32 {
        let phi = deterministic_test_function(d, trial);
        let lhs = t.evaluate(&phi);
        let mut rhs = 0.0;
        for a in &dec.r.0 {
            rhs += a.multiplicity as f64 * phi(a.location);
        }
        for seg in &dec.s {
            rhs += phi(seg.to) - phi(seg.from);
        }
        if (lhs - rhs).abs() > 1e-7 * (1.0 + lhs.abs()) {
            identity = CheckStatus::Fail;
        }
    }

    Ok(StructureReport {
        charge_separation: charge_sep,
        segment_length_bounds: seg_bounds,
        single_point_crossings: single_pt,
        overlap_crossings: overlap,
        segments_disjoint_in_domain: disjoint,
        mass_identity,
        decomposition_identity: identity,
    })
}

/// 2-Lipschitz test function vanishing on the boundary, varied by `trial`.
fn deterministic_test_function(d: &Domain, trial: u32) -> impl Fn(Point2) -> f64 + '_ {
    let bbox = d.bbox();
    let f = trial as f64;
    let cx = bbox.xmin + bbox.width() * (0.5 + 0.4 * (1.7 * f).sin());
    let cy = bbox.ymin + bbox.height() * (0.5 + 0.4 * (2.3 * f + 0.7).cos());
    let slope = 0.3 + 1.5 * (0.5 + 0.5 * (3.1 * f).sin());
    let center = Point2::new(cx, cy);
    move |p: Point2| {
        let band = (2.0 * d.dist_to_boundary(p).unwrap_or(0.0)).min(1.0);
        (1.0 - slope * p.dist(center)).clamp(-band, band)
    }
}

fn has_degenerate_configuration(points: &[Point2], diameter: f64) -> bool {
    let tol = 1e-9 * diameter.max(1.0);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].dist(points[j]) <= tol {
                return true;
            }
            for k in (j + 1)..points.len() {
                let area = (points[j].x - points[i].x) * (points[k].y - points[i].y)
                    - (points[k].x - points[i].x) * (points[j].y - points[i].y);
                if area.abs() <= tol * diameter.max(1.0) {
                    return true;
                }
            }
        }
    }
    false
}

enum SegMeet {
    None,
    Point(Point2),
    Overlap(Point2, Point2),
}

fn closed_segment_intersection(s1: &DipoleSegment, s2: &DipoleSegment, tol: f64) -> SegMeet {
    let a = s1.from;
    let b = s1.to;
    let c = s2.from;
    let e = s2.to;
    let d1 = (b.x - a.x, b.y - a.y);
    let d2 = (e.x - c.x, e.y - c.y);
    let w = (c.x - a.x, c.y - a.y);
    let denom = d1.0 * d2.1 - d1.1 * d2.0;
    let len1 = s1.length();
    let len2 = s2.length();
    let scale = (len1 * len2).max(f64::MIN_POSITIVE);
    if denom.abs() > 1e-12 * scale {
        let tpar = (w.0 * d2.1 - w.1 * d2.0) / denom;
        let upar = (w.0 * d1.1 - w.1 * d1.0) / denom;
        let et = tol / len1.max(f64::MIN_POSITIVE);
        let eu = tol / len2.max(f64::MIN_POSITIVE);
        if (-et..=1.0 + et).contains(&tpar) && (-eu..=1.0 + eu).contains(&upar) {
            let t = tpar.clamp(0.0, 1.0);
            return SegMeet::Point(Point2::new(a.x + d1.0 * t, a.y + d1.1 * t));
        }
        return SegMeet::None;
    }
    // Parallel. Collinear overlap?
    if (w.0 * d1.1 - w.1 * d1.0).abs() > tol * len1.max(f64::MIN_POSITIVE) {
        return SegMeet::None;
    }
    let len_sq = d1.0 * d1.0 + d1.1 * d1.1;
    let proj = |p: Point2| ((p.x - a.x) * d1.0 + (p.y - a.y) * d1.1) / len_sq;
    let (mut t0, mut t1) = (proj(c), proj(e));
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    let lo = t0.max(0.0);
    let hi = t1.min(1.0);
    let et = tol / len1.max(f64::MIN_POSITIVE);
    if lo > hi + et {
        return SegMeet::None;
    }
    if (hi - lo).abs() <= et {
        let t = 0.5 * (lo + hi);
        return SegMeet::Point(Point2::new(a.x + d1.0 * t, a.y + d1.1 * t));
    }
    SegMeet::Overlap(
        Point2::new(a.x + d1.0 * lo, a.y + d1.1 * lo),
        Point2::new(a.x + d1.0 * hi, a.y + d1.1 * hi),
    )
}
