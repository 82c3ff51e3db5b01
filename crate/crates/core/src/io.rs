//! File formats shared by the library and the command-line front end:
//! domain and map specifications, atom lists, and the machine-readable
//! outputs of each command.

use crate::currents::{AtomicDistribution, PolePair, SignedAtom, SignedAtomList};
use crate::dual::{DualCertificate, DualityReport};
use crate::flatnorm::{CheckStatus, Decomposition, StructureReport};
use crate::geom::{DistRoute, Domain, Point2, Polygon};
use crate::jacobian::{MapFamily, Vortex, WindingChart};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// `{ "outer": [[x,y],...], "holes": [[[x,y],...],...], "eps_geom": .. }`.
/// Loop orientation is normalized on load.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainSpec {
    pub outer: Vec<[f64; 2]>,
    #[serde(default)]
    pub holes: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_geom: Option<f64>,
}

impl DomainSpec {
    pub fn to_domain(&self) -> Result<Domain> {
        let outer = Polygon::new(self.outer.iter().map(|c| Point2::new(c[0], c[1])).collect())?;
        let holes = self
            .holes
            .iter()
            .map(|h| Polygon::new(h.iter().map(|c| Point2::new(c[0], c[1])).collect()))
            .collect::<Result<Vec<_>>>()?;
        Domain::new(outer, holes, self.eps_geom)
    }

    pub fn from_domain(d: &Domain) -> Self {
        let loop_coords = |p: &Polygon| p.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>();
        DomainSpec {
            outer: loop_coords(d.external_boundary()),
            holes: d.holes().iter().map(loop_coords).collect(),
            eps_geom: Some(d.eps_geom()),
        }
    }
}

/// `{ "family": "multi_vortex", "vortices": [...] }` or
/// `{ "family": "dipole", "p": [..], "n": [..] }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family")]
pub enum MapSpec {
    #[serde(rename = "multi_vortex")]
    MultiVortex { vortices: Vec<VortexSpec> },
    #[serde(rename = "dipole")]
    Dipole { p: [f64; 2], n: [f64; 2] },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VortexSpec {
    pub center: [f64; 2],
    pub degree: i32,
}

impl MapSpec {
    pub fn to_family(&self) -> Result<MapFamily> {
        match self {
            MapSpec::MultiVortex { vortices } => MapFamily::multi_vortex(
                vortices
                    .iter()
                    .map(|v| Vortex {
                        center: Point2::new(v.center[0], v.center[1]),
                        degree: v.degree,
                    })
                    .collect(),
            ),
            MapSpec::Dipole { p, n } => {
                MapFamily::dipole(Point2::new(p[0], p[1]), Point2::new(n[0], n[1]))
            }
        }
    }
}

/// Parses `x,y,multiplicity` lines; blank lines, `#` comments, and one
/// optional header line are ignored. Errors carry 1-based line numbers.
pub fn parse_atoms_csv(text: &str) -> Result<SignedAtomList> {
    let mut atoms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
            continue; // header
        }
        if fields.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "atoms csv line {}: expected 3 fields `x,y,multiplicity`, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_f = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!(
                    "atoms csv line {}: field `{name}` is not a number: {s:?}",
                    lineno + 1
                ))
            })
        };
        let x = parse_f(fields[0], "x")?;
        let y = parse_f(fields[1], "y")?;
        let m: i32 = fields[2].parse().map_err(|_| {
            Error::InvalidArgument(format!(
                "atoms csv line {}: field `multiplicity` is not an integer: {:?}",
                lineno + 1,
                fields[2]
            ))
        })?;
        if m == 0 {
            return Err(Error::InvalidArgument(format!(
                "atoms csv line {}: multiplicity must be nonzero",
                lineno + 1
            )));
        }
        atoms.push(SignedAtom {
            location: Point2::new(x, y),
            multiplicity: m,
        });
    }
    SignedAtomList::new(atoms)
}

pub fn atoms_to_csv(atoms: &SignedAtomList) -> String {
    let mut out = String::from("x,y,multiplicity\n");
    for a in &atoms.0 {
        out.push_str(&format!(
            "{:.16e},{:.16e},{}\n",
            a.location.x, a.location.y, a.multiplicity
        ));
    }
    out
}

/// `{ "pairs": [ {"x":[..], "y":[..]}, ... ] }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PairsSpec {
    pub pairs: Vec<PairSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PairSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl PairsSpec {
    pub fn to_distribution(&self, domain: Arc<Domain>) -> Result<AtomicDistribution> {
        let pairs = self
            .pairs
            .iter()
            .map(|p| PolePair::new(Point2::new(p.x[0], p.x[1]), Point2::new(p.y[0], p.y[1])))
            .collect::<Result<Vec<_>>>()?;
        AtomicDistribution::from_pairs(pairs, domain)
    }

    pub fn from_distribution(t: &AtomicDistribution) -> Self {
        PairsSpec {
            pairs: t
                .pairs()
                .iter()
                .map(|p| PairSpec {
                    x: [p.x.x, p.x.y],
                    y: [p.y.x, p.y.y],
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChargeOut {
    pub p: [f64; 2],
    pub sigma: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SegmentOut {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub route: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StructureReportOut {
    pub charge_separation: String,
    pub segment_length_bounds: String,
    pub single_point_crossings: String,
    pub overlap_crossings: String,
    pub segments_disjoint_in_domain: String,
    pub mass_identity: String,
    pub decomposition_identity: String,
}

impl From<&StructureReport> for StructureReportOut {
    fn from(r: &StructureReport) -> Self {
        let s = |c: CheckStatus| c.as_str().to_string();
        StructureReportOut {
            charge_separation: s(r.charge_separation),
            segment_length_bounds: s(r.segment_length_bounds),
            single_point_crossings: s(r.single_point_crossings),
            overlap_crossings: s(r.overlap_crossings),
            segments_disjoint_in_domain: s(r.segments_disjoint_in_domain),
            mass_identity: s(r.mass_identity),
            decomposition_identity: s(r.decomposition_identity),
        }
    }
}

/// `flatnorm` command output. `R` holds unit charges, `S` oriented segments
/// from the negative to the positive endpoint.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlatnormOutput {
    pub value: f64,
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: Vec<ChargeOut>,
    #[serde(rename = "S")]
    pub s: Vec<SegmentOut>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_report: Option<StructureReportOut>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FlatnormOutput {
    pub fn new(dec: &Decomposition, report: Option<&StructureReport>) -> Self {
        let mut r = Vec::new();
        for a in &dec.r.0 {
            let sigma = a.multiplicity.signum();
            for _ in 0..a.multiplicity.unsigned_abs() {
                r.push(ChargeOut {
                    p: [a.location.x, a.location.y],
                    sigma,
                });
            }
        }
        let s = dec
            .s
            .iter()
            .map(|seg| SegmentOut {
                a: [seg.from.x, seg.from.y],
                b: [seg.to.x, seg.to.y],
                route: match seg.route {
                    DistRoute::Direct => "direct".to_string(),
                    DistRoute::ViaBoundary => "via_boundary".to_string(),
                },
            })
            .collect();
        FlatnormOutput {
            value: dec.value,
            beta: dec.kind.beta(),
            r,
            s,
            structure_report: report.map(StructureReportOut::from),
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WindingOut {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub w: i32,
    pub reliable: bool,
}

/// `jacobian` command output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JacobianOutput {
    pub grid: [usize; 2],
    pub windings: Vec<WindingOut>,
    pub total_winding: i64,
    pub atoms: Vec<ChargeOut>,
    pub pairs: Vec<PairSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl JacobianOutput {
    pub fn new(chart: &WindingChart, atoms: &AtomicDistribution) -> Self {
        let windings = chart
            .cells
            .iter()
            .map(|c| WindingOut {
                i: c.i,
                j: c.j,
                x: c.center.x,
                y: c.center.y,
                w: c.winding,
                reliable: c.reliable,
            })
            .collect();
        let signed = atoms.to_signed_atoms();
        let mut warnings = Vec::new();
        let unreliable = chart.unreliable_count();
        if unreliable > 0 {
            warnings.push(format!(
                "{unreliable} plaquette(s) had edge phase jumps near the wrapping \
                 threshold; refine the grid"
            ));
        }
        JacobianOutput {
            grid: [chart.spec.nx, chart.spec.ny],
            windings,
            total_winding: chart.total_winding(),
            atoms: signed
                .0
                .iter()
                .map(|a| ChargeOut {
                    p: [a.location.x, a.location.y],
                    sigma: a.multiplicity,
                })
                .collect(),
            pairs: PairsSpec::from_distribution(atoms).pairs,
            warnings,
        }
    }
}

/// `dual` command output: primal/dual values and the feasibility findings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DualOutput {
    pub beta: f64,
    pub primal_value: f64,
    pub gap: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub lipschitz_ok: bool,
    pub max_lipschitz_excess: f64,
    pub pairs_checked: usize,
    pub range_ok: bool,
    pub max_abs_value: f64,
    pub boundary_ok: bool,
    pub boundary_max_abs: f64,
    pub activity_ok: bool,
    pub max_activity_error: f64,
    pub feasible: bool,
    pub optimal: bool,
}

impl DualOutput {
    pub fn new(cert: &DualCertificate, dec: &Decomposition, report: &DualityReport) -> Self {
        DualOutput {
            beta: dec.kind.beta(),
            primal_value: dec.value,
            gap: report.gap,
            iterations_used: cert.iterations_used,
            converged: cert.converged,
            lipschitz_ok: report.lipschitz_ok,
            max_lipschitz_excess: report.max_lipschitz_excess,
            pairs_checked: report.pairs_checked,
            range_ok: report.range_ok,
            max_abs_value: report.max_abs_value,
            boundary_ok: report.boundary_ok,
            boundary_max_abs: report.boundary_max_abs,
            activity_ok: report.activity_ok,
            max_activity_error: report.max_activity_error,
            feasible: report.feasible(),
            optimal: report.optimal(),
        }
    }
}

/// One row of the `envelope` sweep: the bound after puncturing the poles of
/// the longest `prefix_pairs` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeRow {
    pub prefix_pairs: usize,
    pub punctures: usize,
    pub flat_value: f64,
    pub singular_term: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeOutput {
    pub eps: f64,
    pub dirichlet_area: f64,
    pub punctures: Vec<[f64; 2]>,
    pub table: Vec<EnvelopeRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CriterionOut {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SelftestOutput {
    pub seed: u64,
    pub all_passed: bool,
    pub criteria: Vec<CriterionOut>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_spec_round_trip() {
        let spec = DomainSpec {
            outer: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]],
            holes: vec![vec![[0.5, 0.5], [1.0, 0.5], [1.0, 1.0], [0.5, 1.0]]],
            eps_geom: None,
        };
        let d = spec.to_domain().unwrap();
        assert_eq!(d.holes().len(), 1);
        // Hole loops are normalized clockwise on load.
        assert!(!d.holes()[0].is_ccw());
        let back = DomainSpec::from_domain(&d);
        let d2 = back.to_domain().unwrap();
        assert!((d.area() - d2.area()).abs() < 1e-12);
    }

    #[test]
    fn map_spec_parses_both_families() {
        let multi: MapSpec = serde_json::from_str(
            r#"{"family":"multi_vortex","vortices":[{"center":[0.0,0.0],"degree":1}]}"#,
        )
        .unwrap();
        assert!(matches!(
            multi.to_family().unwrap(),
            MapFamily::MultiVortex(_)
        ));
        let dip: MapSpec =
            serde_json::from_str(r#"{"family":"dipole","p":[-0.1,0.0],"n":[0.1,0.0]}"#).unwrap();
        assert!(matches!(dip.to_family().unwrap(), MapFamily::Dipole { .. }));
    }

    #[test]
    fn atoms_csv_round_trip_and_diagnostics() {
        let text = "x,y,multiplicity\n0.5,0.25,1\n-0.25,0.0,-2\n";
        let atoms = parse_atoms_csv(text).unwrap();
        assert_eq!(atoms.0.len(), 2);
        assert_eq!(atoms.0[1].multiplicity, -2);
        let again = parse_atoms_csv(&atoms_to_csv(&atoms)).unwrap();
        assert_eq!(atoms, again);

        let err = parse_atoms_csv("0.1,0.2\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_atoms_csv("0.1,abc,1\n").unwrap_err();
        assert!(err.to_string().contains('y'), "{err}");
        let err = parse_atoms_csv("0.0,0.0,0\n").unwrap_err();
        assert!(err.to_string().contains("nonzero"), "{err}");
    }

    #[test]
    fn flatnorm_output_expands_unit_charges() {
        use crate::flatnorm::{solve_matching, NormKind};
        let d = Arc::new(Domain::ngon_disc(2.0, 180).unwrap());
        let t = AtomicDistribution::from_pairs(
            vec![PolePair::new(Point2::new(-0.65, 0.0), Point2::new(0.65, 0.0)).unwrap()],
            d,
        )
        .unwrap();
        let dec = solve_matching(&t, NormKind::flat_alpha()).unwrap();
        let out = FlatnormOutput::new(&dec, None);
        assert_eq!(out.r.len(), 2);
        assert!(out.r.iter().all(|c| c.sigma.abs() == 1));
        let json = serde_json::to_string(&out).unwrap();
        let back: FlatnormOutput = serde_json::from_str(&json).unwrap();
        assert_eq!(out, back);
    }
}
