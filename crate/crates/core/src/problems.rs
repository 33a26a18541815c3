//! Benchmark problem factory: flow validation fields and the optimization
//! benchmarks, plus user-defined problems described by edge selections.
//!
//! Boundary conditions are applied as ordered assignments, so a later
//! statement overrides an earlier one on shared nodes (corner nodes belong
//! to two edges).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::PressureBC;
use crate::mesh::Mesh;
use crate::structure::StructuralBC;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Sp1,
    Sp2,
    Sp3,
    Arch,
    Bridge,
    ExtArch,
    Piston,
    Chamber,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::Sp1,
        ProblemKind::Sp2,
        ProblemKind::Sp3,
        ProblemKind::Arch,
        ProblemKind::Bridge,
        ProblemKind::ExtArch,
        ProblemKind::Piston,
        ProblemKind::Chamber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sp1 => "sp1",
            ProblemKind::Sp2 => "sp2",
            ProblemKind::Sp3 => "sp3",
            ProblemKind::Arch => "arch",
            ProblemKind::Bridge => "bridge",
            ProblemKind::ExtArch => "ext_arch",
            ProblemKind::Piston => "piston",
            ProblemKind::Chamber => "chamber",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ProblemKind::Sp1 => "flow validation, void square, Pin at the bottom, 0 at the top",
            ProblemKind::Sp2 => "flow validation with two solid strips",
            ProblemKind::Sp3 => "flow validation with three solid strips",
            ProblemKind::Arch => "internally pressurized arch, Pin on the bottom edge",
            ProblemKind::Bridge => "pressurized bridge, Pin on the top edge, roller sides",
            ProblemKind::ExtArch => "externally pressurized arch, supports inset from the corners",
            ProblemKind::Piston => "piston, Pin on the top edge, centre support",
            ProblemKind::Chamber => "pressure chamber with non-design solid and void regions",
        }
    }

    /// Whether this is one of the flow validation fields rather than an
    /// optimization benchmark.
    pub fn is_validation(self) -> bool {
        matches!(self, ProblemKind::Sp1 | ProblemKind::Sp2 | ProblemKind::Sp3)
    }

    /// Parameters of the published calls.
    pub fn defaults(self) -> Defaults {
        let d = |nelx, nely, volfrac, rmin, etaf, betaf, maxit| Defaults {
            nelx,
            nely,
            volfrac,
            penal: 3.0,
            rmin,
            etaf,
            betaf,
            lst: true,
            maxit,
        };
        match self {
            ProblemKind::Sp1 | ProblemKind::Sp2 | ProblemKind::Sp3 => d(200, 200, 0.3, 2.4, 0.2, 8.0, 1),
            ProblemKind::Arch => d(200, 100, 0.3, 2.4, 0.2, 8.0, 100),
            ProblemKind::Bridge => d(200, 100, 0.2, 2.5, 0.2, 10.0, 150),
            ProblemKind::ExtArch => d(200, 100, 0.2, 4.0, 0.15, 8.0, 100),
            ProblemKind::Piston => d(300, 100, 0.2, 2.4, 0.1, 8.0, 150),
            ProblemKind::Chamber => d(300, 200, 0.2, 6.0, 0.1, 10.0, 200),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        ProblemKind::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            let names: Vec<_> = ProblemKind::ALL.iter().map(|k| k.name()).collect();
            Error::invalid(format!("unknown problem '{s}', expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub nelx: usize,
    pub nely: usize,
    pub volfrac: f64,
    pub penal: f64,
    pub rmin: f64,
    pub etaf: f64,
    pub betaf: f64,
    pub lst: bool,
    pub maxit: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub mesh: Mesh,
    pub pressure_bc: PressureBC,
    pub structural_bc: StructuralBC,
    /// Non-design solid elements, ascending.
    pub nds: Vec<usize>,
    /// Non-design void elements, ascending.
    pub ndv: Vec<usize>,
    pub pin: f64,
}

impl ProblemSpec {
    /// Elements the optimizer controls, ascending.
    pub fn active(&self) -> Vec<usize> {
        let mut frozen = vec![false; self.mesh.nel];
        for &e in self.nds.iter().chain(&self.ndv) {
            frozen[e] = true;
        }
        (0..self.mesh.nel).filter(|&e| !frozen[e]).collect()
    }

    /// Density field with non-design solids at 1 and everything else 0;
    /// the frozen layout of the flow validation fields.
    pub fn frozen_field(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.mesh.nel];
        for &e in &self.nds {
            x[e] = 1.0;
        }
        x
    }

    pub fn validate(&self) -> Result<()> {
        let nel = self.mesh.nel;
        let mut seen = vec![0u8; nel];
        for &e in &self.nds {
            if e >= nel {
                return Err(Error::invalid(format!("solid element {e} outside the mesh")));
            }
            seen[e] |= 1;
        }
        for &e in &self.ndv {
            if e >= nel {
                return Err(Error::invalid(format!("void element {e} outside the mesh")));
            }
            if seen[e] & 1 != 0 {
                return Err(Error::invalid(format!("element {e} is both non-design solid and void")));
            }
        }
        self.pressure_bc.validate(self.mesh.nno)?;
        if self.structural_bc.fixed_udofs.iter().any(|&d| d >= self.mesh.ndof_u()) {
            return Err(Error::invalid("fixed displacement DOF outside the mesh"));
        }
        Ok(())
    }
}

/// Ordered nodal pressure assignments.
struct PressureMap(Vec<Option<f64>>);

impl PressureMap {
    fn new(nno: usize) -> Self {
        PressureMap(vec![None; nno])
    }

    fn set(&mut self, nodes: impl IntoIterator<Item = usize>, value: f64) {
        for n in nodes {
            self.0[n] = Some(value);
        }
    }

    fn into_bc(self, pin: f64) -> PressureBC {
        PressureBC::new(
            self.0.into_iter().enumerate().filter_map(|(n, v)| v.map(|v| (n, v))),
            pin,
        )
    }
}

fn both(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect()
}

fn xdofs(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().map(|&n| 2 * n).collect()
}

fn require_divisible(what: &str, value: usize, divisor: usize, problem: ProblemKind) -> Result<()> {
    if !value.is_multiple_of(divisor) {
        return Err(Error::invalid(format!(
            "{problem} needs {what} divisible by {divisor}, got {value}"
        )));
    }
    Ok(())
}

/// Elements of the 1-based inclusive block `rows x cols` of the element grid.
fn element_block(mesh: &Mesh, rows: (usize, usize), cols: (usize, usize)) -> Vec<usize> {
    let mut out = Vec::new();
    for c in cols.0..=cols.1 {
        for r in rows.0..=rows.1 {
            out.push(mesh.elem(r - 1, c - 1));
        }
    }
    out
}

fn element_nodes(mesh: &Mesh, elems: &[usize]) -> Vec<usize> {
    let mut nodes: Vec<usize> = elems.iter().flat_map(|&e| mesh.pdofs[e]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// Horizontal full-width strip of `width` element rows centred at height
/// fraction `frac` above the bottom edge.
fn strip(mesh: &Mesh, frac: f64, width: usize) -> Vec<usize> {
    let centre_from_top = mesh.nely as f64 * (1.0 - frac);
    let r0 = (centre_from_top - width as f64 / 2.0).round() as usize;
    let mut out = Vec::new();
    for c in 0..mesh.nelx {
        for r in r0..r0 + width {
            out.push(mesh.elem(r, c));
        }
    }
    out
}

pub fn make_problem(kind: ProblemKind, nelx: usize, nely: usize) -> Result<ProblemSpec> {
    let mesh = Mesh::new(nelx, nely)?;
    let pin = 1.0;
    let mut pressure = PressureMap::new(mesh.nno);
    let corners = [mesh.bnode[0], mesh.bnode[nelx]];
    let mut fixed: Vec<usize>;
    let mut nds = Vec::new();
    let mut ndv = Vec::new();

    match kind {
        ProblemKind::Sp1 | ProblemKind::Sp2 | ProblemKind::Sp3 => {
            pressure.set(mesh.bnode.iter().copied(), pin);
            pressure.set(mesh.tnode.iter().copied(), 0.0);
            fixed = both(&corners);
            let fracs: &[f64] = match kind {
                ProblemKind::Sp2 => &[1.0 / 3.0, 2.0 / 3.0],
                ProblemKind::Sp3 => &[0.25, 0.5, 0.75],
                _ => &[],
            };
            if !fracs.is_empty() {
                require_divisible("nely", nely, 20, kind)?;
                for &f in fracs {
                    nds.extend(strip(&mesh, f, nely / 20));
                }
            }
        }
        ProblemKind::Arch => {
            pressure.set(mesh.tnode.iter().chain(&mesh.lnode).chain(&mesh.rnode).copied(), 0.0);
            pressure.set(mesh.bnode.iter().copied(), pin);
            fixed = both(&corners);
        }
        ProblemKind::Bridge => {
            pressure.set(mesh.bnode.iter().copied(), 0.0);
            pressure.set(mesh.tnode.iter().copied(), pin);
            fixed = both(&corners);
            fixed.extend(xdofs(&mesh.lnode));
            fixed.extend(xdofs(&mesh.rnode));
        }
        ProblemKind::ExtArch => {
            require_divisible("nelx", nelx, 10, kind)?;
            let n10 = nelx / 10;
            if n10 == 0 || nelx < 2 * n10 + 2 {
                return Err(Error::invalid("ext_arch needs nelx of at least 10"));
            }
            let b = &mesh.bnode;
            pressure.set(
                mesh.tnode
                    .iter()
                    .chain(&mesh.lnode)
                    .chain(&mesh.rnode)
                    .chain(&b[..n10])
                    .chain(&b[nelx - n10..])
                    .copied(),
                pin,
            );
            pressure.set(b[n10..nelx - n10].iter().copied(), 0.0);
            fixed = both(&[b[n10], b[nelx - n10 - 1]]);
        }
        ProblemKind::Piston => {
            pressure.set(mesh.bnode.iter().copied(), 0.0);
            pressure.set(mesh.tnode.iter().copied(), pin);
            let mid = (nelx + 1).div_ceil(2) - 1;
            fixed = both(&[mesh.bnode[mid]]);
            fixed.extend(xdofs(&mesh.lnode));
            fixed.extend(xdofs(&mesh.rnode));
        }
        ProblemKind::Chamber => {
            require_divisible("nelx", nelx, 15, kind)?;
            require_divisible("nely", nely, 40, kind)?;
            let (x, y) = (nelx, nely);
            let sr1 = element_block(&mesh, (3 * y / 8, 17 * y / 40), (2 * x / 3, x));
            let sr2 = element_block(&mesh, (23 * y / 40, 5 * y / 8), (2 * x / 3, x));
            let vr1 = element_block(&mesh, (17 * y / 40, y), (7 * x / 15, 8 * x / 15));
            let vr2 = element_block(&mesh, (17 * y / 40, 23 * y / 40), (8 * x / 15, x));
            ndv = [vr1, vr2].concat();
            ndv.sort_unstable();
            ndv.dedup();
            // the void slices overlap the first and last row of the solid
            // bars; void wins there, as in the published update order
            nds = [sr1, sr2].concat();
            nds.retain(|e| ndv.binary_search(e).is_err());

            let s1fix = element_block(&mesh, (3 * y / 8, 17 * y / 40), (x, x));
            let s2fix = element_block(&mesh, (23 * y / 40, 25 * y / 40), (x, x));
            let fixx = element_nodes(&mesh, &[s1fix, s2fix].concat());
            fixed = both(&corners);
            fixed.extend(both(&fixx));

            pressure.set(mesh.tnode.iter().chain(&mesh.lnode).chain(&mesh.rnode).copied(), 0.0);
            let void_nodes = element_nodes(&mesh, &ndv);
            pressure.set(void_nodes.into_iter().chain(mesh.bnode.iter().copied()), pin);
        }
    }

    nds.sort_unstable();
    nds.dedup();
    let spec = ProblemSpec {
        name: kind.name().to_string(),
        pressure_bc: pressure.into_bc(pin),
        structural_bc: StructuralBC::new(fixed),
        nds,
        ndv,
        pin,
        mesh,
    };
    spec.validate()?;
    Ok(spec)
}

/// Boundary edge of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Top,
    Bottom,
    Left,
    Right,
}

/// A set of nodes on one edge: the whole edge, a coordinate range, or the
/// node nearest to one position. Positions are fractions of the edge
/// length, measured left to right on horizontal edges and bottom to top on
/// vertical ones.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSelection {
    pub edge: Edge,
    pub range: Option<(f64, f64)>,
    pub at: Option<f64>,
}

impl EdgeSelection {
    /// Parses `bottom`, `bottom[0:0.1]` or `bottom@0.5`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.find(['[', '@']) {
            Some(i) => (&s[..i], &s[i..]),
            None => (s, ""),
        };
        let edge = match name.trim().to_ascii_lowercase().as_str() {
            "top" => Edge::Top,
            "bottom" => Edge::Bottom,
            "left" => Edge::Left,
            "right" => Edge::Right,
            other => return Err(Error::invalid(format!("unknown edge '{other}'"))),
        };
        let frac = |t: &str| -> Result<f64> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad edge fraction '{t}' in '{s}'")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("edge fraction {v} outside [0, 1] in '{s}'")));
            }
            Ok(v)
        };
        let mut sel = EdgeSelection {
            edge,
            range: None,
            at: None,
        };
        if let Some(r) = rest.strip_prefix('@') {
            sel.at = Some(frac(r)?);
        } else if let Some(r) = rest.strip_prefix('[') {
            let inner = r
                .strip_suffix(']')
                .ok_or_else(|| Error::invalid(format!("unclosed range in '{s}'")))?;
            let (a, b) = inner
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("range needs 'a:b' in '{s}'")))?;
            let (a, b) = (frac(a)?, frac(b)?);
            if a > b {
                return Err(Error::invalid(format!("empty range in '{s}'")));
            }
            sel.range = Some((a, b));
        } else if !rest.is_empty() {
            return Err(Error::invalid(format!("cannot parse edge selection '{s}'")));
        }
        Ok(sel)
    }

    pub fn nodes(&self, mesh: &Mesh) -> Vec<usize> {
        // (node, position along the edge in [0, 1])
        let along: Vec<(usize, f64)> = match self.edge {
            Edge::Bottom => mesh
                .bnode
                .iter()
                .enumerate()
                .map(|(j, &n)| (n, j as f64 / mesh.nelx as f64))
                .collect(),
            Edge::Top => mesh
                .tnode
                .iter()
                .enumerate()
                .map(|(j, &n)| (n, j as f64 / mesh.nelx as f64))
                .collect(),
            Edge::Left => mesh
                .lnode
                .iter()
                .enumerate()
                .map(|(i, &n)| (n, 1.0 - i as f64 / mesh.nely as f64))
                .collect(),
            Edge::Right => mesh
                .rnode
                .iter()
                .enumerate()
                .map(|(i, &n)| (n, 1.0 - i as f64 / mesh.nely as f64))
                .collect(),
        };
        if let Some(t) = self.at {
            let best = along
                .iter()
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                .expect("edges are never empty");
            return vec![best.0];
        }
        let (a, b) = self.range.unwrap_or((0.0, 1.0));
        along
            .into_iter()
            .filter(|&(_, s)| s >= a - 1e-9 && s <= b + 1e-9)
            .map(|(n, _)| n)
            .collect()
    }
}

/// Problem assembled from edge selections.
///
/// * `pressure`: `sel=value` items separated by commas, applied in order;
///   `value` is a number or `pin`.
/// * `fix`: `sel:dirs` items with `dirs` one of `x`, `y`, `xy`.
/// * `solid` / `void`: rectangles `x0:x1,y0:y1` in domain fractions
///   (y measured from the bottom), separated by `;`. Elements whose centre
///   lies inside are frozen.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CustomProblem {
    pub pressure: String,
    pub fix: String,
    pub solid: String,
    pub void: String,
}

impl CustomProblem {
    pub fn build(&self, nelx: usize, nely: usize) -> Result<ProblemSpec> {
        let mesh = Mesh::new(nelx, nely)?;
        let pin = 1.0;
        let mut pressure = PressureMap::new(mesh.nno);
        for item in split_items(&self.pressure, ',') {
            let (sel, val) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("pressure item '{item}' needs 'edge=value'")))?;
            let v = match val.trim().to_ascii_lowercase().as_str() {
                "pin" => pin,
                t => t
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad pressure value '{val}'")))?,
            };
            pressure.set(EdgeSelection::parse(sel)?.nodes(&mesh), v);
        }
        let mut fixed = Vec::new();
        for item in split_items(&self.fix, ',') {
            let (sel, dirs) = item
                .rsplit_once(':')
                .filter(|(_, d)| matches!(d.trim(), "x" | "y" | "xy"))
                .ok_or_else(|| Error::invalid(format!("fix item '{item}' needs 'edge:x|y|xy'")))?;
            for n in EdgeSelection::parse(sel)?.nodes(&mesh) {
                if dirs.contains('x') {
                    fixed.push(2 * n);
                }
                if dirs.contains('y') {
                    fixed.push(2 * n + 1);
                }
            }
        }
        if fixed.is_empty() {
            return Err(Error::invalid("custom problem has no displacement supports"));
        }
        let nds = region_elements(&mesh, &self.solid)?;
        let ndv = region_elements(&mesh, &self.void)?;
        let spec = ProblemSpec {
            name: "custom".to_string(),
            pressure_bc: pressure.into_bc(pin),
            structural_bc: StructuralBC::new(fixed),
            nds,
            ndv,
            pin,
            mesh,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn split_items(s: &str, sep: char) -> impl Iterator<Item = &str> {
    s.split(sep).map(str::trim).filter(|t| !t.is_empty())
}

fn region_elements(mesh: &Mesh, spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for rect in split_items(spec, ';') {
        let parse_range = |t: &str| -> Result<(f64, f64)> {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("region '{rect}' needs 'x0:x1,y0:y1'")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad region bound in '{rect}'")))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad region bound in '{rect}'")))?;
            Ok((a, b))
        };
        let (xs, ys) = rect
            .split_once(',')
            .ok_or_else(|| Error::invalid(format!("region '{rect}' needs 'x0:x1,y0:y1'")))?;
        let (x0, x1) = parse_range(xs)?;
        let (y0, y1) = parse_range(ys)?;
        for e in 0..mesh.nel {
            let (r, c) = mesh.elem_position(e);
            let cx = (c as f64 + 0.5) / mesh.nelx as f64;
            let cy = (mesh.nely as f64 - r as f64 - 0.5) / mesh.nely as f64;
            if cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1 {
                out.push(e);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
