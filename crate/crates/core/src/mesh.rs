//! Cross-section discretizations: GLL line stacks for plates and quad9
//! meshes for solid sections, plus a plain-text mesh format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::materials::{Layup, Material};
use crate::quadrature;

/// Nodes closer than this (normalized units) count as duplicates.
pub const NODE_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    /// Spectral line element along `z` with `order + 1` GLL nodes.
    LineGll { order: usize },
    /// Nine-node Lagrange quadrilateral in the `(y, z)` plane.
    Quad9,
}

impl ElementKind {
    pub fn node_count(self) -> usize {
        match self {
            ElementKind::LineGll { order } => order + 1,
            ElementKind::Quad9 => 9,
        }
    }

    fn tag(self) -> String {
        match self {
            ElementKind::LineGll { order } => format!("gll{order}"),
            ElementKind::Quad9 => "quad9".into(),
        }
    }

    fn parse(tag: &str) -> Option<Self> {
        if tag == "quad9" {
            return Some(ElementKind::Quad9);
        }
        let order = tag.strip_prefix("gll")?.parse().ok()?;
        (order >= 1).then_some(ElementKind::LineGll { order })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    /// For quad9: corners counter-clockwise, then mid-sides (edge 0-1, 1-2, 2-3, 3-0), then centre.
    /// For line elements: ascending along the element.
    pub nodes: Vec<usize>,
    pub material: usize,
}

/// Cross-section mesh in normalized coordinates `(y, z) / a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionMesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub materials: Vec<Material>,
}

impl CrossSectionMesh {
    pub fn new(nodes: Vec<[f64; 2]>, elements: Vec<Element>, materials: Vec<Material>) -> Result<Self> {
        let mesh = Self { nodes, elements, materials };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn dof_count(&self) -> usize {
        3 * self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        for (e, el) in self.elements.iter().enumerate() {
            if el.nodes.len() != el.kind.node_count() {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has {} nodes, expected {}",
                    el.nodes.len(),
                    el.kind.node_count()
                )));
            }
            if let Some(&bad) = el.nodes.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(Error::InvalidMesh(format!("element {e} references missing node {bad}")));
            }
            if el.material >= self.materials.len() {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references missing material {}",
                    el.material
                )));
            }
        }
        if let Some((i, j)) = find_duplicate_node(&self.nodes) {
            return Err(Error::InvalidMesh(format!("nodes {i} and {j} coincide")));
        }
        Ok(())
    }

    /// Cross-section area (normalized), by the same quadrature assembly uses.
    /// Line meshes report their total length.
    pub fn area(&self) -> f64 {
        let (gx, gw) = quadrature::gauss(3);
        let mut total = 0.0;
        for el in &self.elements {
            match el.kind {
                ElementKind::Quad9 => {
                    let xy: Vec<[f64; 2]> = el.nodes.iter().map(|&n| self.nodes[n]).collect();
                    for (a, &xi) in gx.iter().enumerate() {
                        for (b, &eta) in gx.iter().enumerate() {
                            let (_, dn) = quad9_shape(xi, eta);
                            let jac = quad9_jacobian(&xy, &dn);
                            total += gw[a] * gw[b] * (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]);
                        }
                    }
                }
                ElementKind::LineGll { .. } => {
                    let first = self.nodes[el.nodes[0]][1];
                    let last = self.nodes[*el.nodes.last().unwrap()][1];
                    total += (last - first).abs();
                }
            }
        }
        total
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Serializes to the text mesh format. Floats use Rust's shortest
    /// round-trip representation so `from_text(to_text(m)) == m`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {} elements {}", self.nodes.len(), self.elements.len());
        for (i, [y, z]) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {y:?} {z:?}");
        }
        for (i, el) in self.elements.iter().enumerate() {
            let _ = write!(s, "{i} {}", el.kind.tag());
            for n in &el.nodes {
                let _ = write!(s, " {n}");
            }
            let _ = writeln!(s, " {}", el.material);
        }
        for (i, m) in self.materials.iter().enumerate() {
            let _ = write!(s, "mat {i} {:?}", m.density);
            for r in 0..6 {
                for c in r..6 {
                    let _ = write!(s, " {:?}", m.stiffness[r][c]);
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let err = |line: usize, message: String| Error::Parse { line, message };

        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "nodes" || h[2] != "elements" {
            return Err(err(hline, "expected `nodes N elements E`".into()));
        }
        let n_nodes: usize = h[1].parse().map_err(|_| err(hline, format!("bad node count `{}`", h[1])))?;
        let n_elems: usize = h[3].parse().map_err(|_| err(hline, format!("bad element count `{}`", h[3])))?;

        let mut nodes = Vec::with_capacity(n_nodes);
        for expected in 0..n_nodes {
            let (ln, l) = lines.next().ok_or_else(|| err(hline, "unexpected end of file in node block".into()))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, "expected `id y z`".into()));
            }
            check_id(f[0], expected, ln)?;
            let y = parse_f64(f[1], ln)?;
            let z = parse_f64(f[2], ln)?;
            nodes.push([y, z]);
        }

        let mut elements = Vec::with_capacity(n_elems);
        let mut element_lines = Vec::with_capacity(n_elems);
        for expected in 0..n_elems {
            let (ln, l) = lines.next().ok_or_else(|| err(hline, "unexpected end of file in element block".into()))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() < 3 {
                return Err(err(ln, "expected `id kind n1 ... mat`".into()));
            }
            check_id(f[0], expected, ln)?;
            let kind = ElementKind::parse(f[1]).ok_or_else(|| err(ln, format!("unknown element kind `{}`", f[1])))?;
            let count = kind.node_count();
            if f.len() != count + 3 {
                return Err(err(ln, format!("{} element needs {count} node indices and a material", f[1])));
            }
            let mut conn = Vec::with_capacity(count);
            for tok in &f[2..2 + count] {
                let n: usize = tok.parse().map_err(|_| err(ln, format!("bad node index `{tok}`")))?;
                if n >= n_nodes {
                    return Err(err(ln, format!("node index {n} out of range (mesh has {n_nodes} nodes)")));
                }
                conn.push(n);
            }
            let material: usize =
                f[2 + count].parse().map_err(|_| err(ln, format!("bad material index `{}`", f[2 + count])))?;
            elements.push(Element { kind, nodes: conn, material });
            element_lines.push(ln);
        }

        let mut materials = Vec::new();
        for (ln, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 24 || f[0] != "mat" {
                return Err(err(ln, "expected `mat id rho c11 c12 ... c66` (21 stiffness entries)".into()));
            }
            check_id(f[1], materials.len(), ln)?;
            let rho = parse_f64(f[2], ln)?;
            let mut c = [[0.0; 6]; 6];
            let mut idx = 3;
            for r in 0..6 {
                for col in r..6 {
                    let v = parse_f64(f[idx], ln)?;
                    c[r][col] = v;
                    c[col][r] = v;
                    idx += 1;
                }
            }
            let m = Material::new(c, rho).map_err(|e| err(ln, e.to_string()))?;
            materials.push(m);
        }

        for (el, &ln) in elements.iter().zip(&element_lines) {
            if el.material >= materials.len() {
                return Err(err(ln, format!("material {} is not defined", el.material)));
            }
        }
        let mesh = Self { nodes, elements, materials };
        mesh.validate().map_err(|e| err(hline, e.to_string()))?;
        Ok(mesh)
    }
}

fn check_id(tok: &str, expected: usize, line: usize) -> Result<()> {
    match tok.parse::<usize>() {
        Ok(v) if v == expected => Ok(()),
        _ => Err(Error::Parse { line, message: format!("expected id {expected}, found `{tok}`") }),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line, message: format!("bad number `{tok}`") })
}

fn find_duplicate_node(nodes: &[[f64; 2]]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a][0].total_cmp(&nodes[b][0]).then(nodes[a][1].total_cmp(&nodes[b][1])));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if nodes[j][0] - nodes[i][0] > NODE_MERGE_TOL {
                break;
            }
            if (nodes[j][1] - nodes[i][1]).abs() <= NODE_MERGE_TOL {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// Stacks one GLL line element per ply through the thickness, bottom ply
/// first, centred on `z = 0`. Each ply gets its own rotated material.
pub fn build_plate_mesh(layup: &Layup, order: usize, a: f64) -> Result<CrossSectionMesh> {
    if order < 2 {
        return Err(Error::InvalidMesh(format!("GLL order must be at least 2, got {order}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidMesh(format!("characteristic length must be positive, got {a}")));
    }
    let (xi, _) = quadrature::gll(order);
    let total = layup.total_thickness() / a;
    let mut z0 = -0.5 * total;
    let mut nodes = vec![[0.0, z0]];
    let mut elements = Vec::with_capacity(layup.plies.len());
    let mut materials = Vec::with_capacity(layup.plies.len());
    for (p, ply) in layup.plies.iter().enumerate() {
        let t = ply.thickness / a;
        let first = nodes.len() - 1;
        for &x in &xi[1..] {
            nodes.push([0.0, z0 + 0.5 * (x + 1.0) * t]);
        }
        z0 += t;
        // Land exactly on the interface so symmetric stacks stay symmetric.
        let last = nodes.len() - 1;
        nodes[last][1] = z0;
        elements.push(Element {
            kind: ElementKind::LineGll { order },
            nodes: (first..=last).collect(),
            material: p,
        });
        materials.push(layup.materials[ply.material].rotated(ply.angle_deg));
    }
    let last = nodes.len() - 1;
    nodes[last][1] = 0.5 * total;
    CrossSectionMesh::new(nodes, elements, materials)
}

/// quad9 mesh of an annulus. Nodes sit at exact polar positions so the
/// mesh maps onto itself under rotation by `2π / n_circ`.
pub fn build_annulus_mesh(
    r_in: f64,
    r_out: f64,
    n_circ: usize,
    n_rad: usize,
    material: Material,
) -> Result<CrossSectionMesh> {
    if !(r_in > 0.0 && r_out > r_in && r_out.is_finite()) {
        return Err(Error::InvalidMesh(format!("need 0 < r_in < r_out, got {r_in}, {r_out}")));
    }
    if n_circ < 8 || n_circ % 2 != 0 {
        return Err(Error::InvalidMesh(format!("n_circ must be even and at least 8, got {n_circ}")));
    }
    if n_rad < 1 {
        return Err(Error::InvalidMesh("n_rad must be at least 1".into()));
    }
    let n_theta = 2 * n_circ;
    let n_r = 2 * n_rad + 1;
    let mut nodes = Vec::with_capacity(n_theta * n_r);
    for t in 0..n_theta {
        let theta = 2.0 * std::f64::consts::PI * t as f64 / n_theta as f64;
        let (s, c) = theta.sin_cos();
        for r in 0..n_r {
            let radius = r_in + (r_out - r_in) * r as f64 / (n_r - 1) as f64;
            nodes.push([radius * c, radius * s]);
        }
    }
    let id = |t: usize, r: usize| (t % n_theta) * n_r + r;
    let mut elements = Vec::with_capacity(n_circ * n_rad);
    for ec in 0..n_circ {
        for er in 0..n_rad {
            // Local xi runs outward in r, eta counter-clockwise in theta: positive Jacobian.
            let (t0, r0) = (2 * ec, 2 * er);
            let nodes_of = |a: usize, b: usize| id(t0 + b, r0 + a);
            elements.push(Element { kind: ElementKind::Quad9, nodes: quad9_connectivity(nodes_of), material: 0 });
        }
    }
    CrossSectionMesh::new(nodes, elements, vec![material])
}

/// Geometry of an L-shaped section with its outer corner at the origin:
/// a horizontal leg `[0, width] × [0, thickness]` joined to a vertical leg
/// `[0, thickness] × [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LShape {
    pub width: f64,
    pub height: f64,
    pub thickness: f64,
    /// Elements across the leg thickness.
    pub n_thick: usize,
    /// Elements along the horizontal leg beyond the corner block.
    pub n_width: usize,
    /// Elements along the vertical leg beyond the corner block.
    pub n_height: usize,
}

/// Structured quad9 mesh of an L-section (normalized coordinates).
pub fn build_lshape_mesh(shape: &LShape, material: Material) -> Result<CrossSectionMesh> {
    let LShape { width, height, thickness, n_thick, n_width, n_height } = *shape;
    if !(thickness > 0.0 && width > thickness && height > thickness) {
        return Err(Error::InvalidMesh("L-shape needs width, height > thickness > 0".into()));
    }
    if n_thick == 0 || n_width == 0 || n_height == 0 {
        return Err(Error::InvalidMesh("L-shape element counts must be positive".into()));
    }
    // Node lines at half-element spacing.
    let lines = |n0: usize, a: f64, n1: usize, b: f64| -> Vec<f64> {
        let mut v: Vec<f64> = (0..=2 * n0).map(|i| a * i as f64 / (2 * n0) as f64).collect();
        v.extend((1..=2 * n1).map(|i| a + (b - a) * i as f64 / (2 * n1) as f64));
        v
    };
    let ys = lines(n_thick, thickness, n_width, width);
    let zs = lines(n_thick, thickness, n_height, height);
    let (ny, nz) = (ys.len(), zs.len());
    let inside = |i: usize, j: usize| i <= 2 * n_thick || j <= 2 * n_thick;

    let mut index = vec![usize::MAX; ny * nz];
    let mut nodes = Vec::new();
    for j in 0..nz {
        for i in 0..ny {
            if inside(i, j) {
                index[j * ny + i] = nodes.len();
                nodes.push([ys[i], zs[j]]);
            }
        }
    }
    let mut elements = Vec::new();
    for ej in 0..(nz - 1) / 2 {
        for ei in 0..(ny - 1) / 2 {
            if ei >= n_thick && ej >= n_thick {
                continue;
            }
            let nodes_of = |a: usize, b: usize| index[(2 * ej + b) * ny + 2 * ei + a];
            elements.push(Element { kind: ElementKind::Quad9, nodes: quad9_connectivity(nodes_of), material: 0 });
        }
    }
    CrossSectionMesh::new(nodes, elements, vec![material])
}

/// Local (a, b) ∈ {0,1,2}² lattice position of each quad9 node.
pub(crate) const QUAD9_LATTICE: [(usize, usize); 9] =
    [(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (2, 1), (1, 2), (0, 1), (1, 1)];

fn quad9_connectivity(node_at: impl Fn(usize, usize) -> usize) -> Vec<usize> {
    QUAD9_LATTICE.iter().map(|&(a, b)| node_at(a, b)).collect()
}

/// Biquadratic shape functions and their (ξ, η) derivatives.
pub(crate) fn quad9_shape(xi: f64, eta: f64) -> ([f64; 9], [[f64; 2]; 9]) {
    let l = |t: f64| [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)];
    let dl = |t: f64| [t - 0.5, -2.0 * t, t + 0.5];
    let (lx, ly, dlx, dly) = (l(xi), l(eta), dl(xi), dl(eta));
    let mut n = [0.0; 9];
    let mut dn = [[0.0; 2]; 9];
    for (k, &(a, b)) in QUAD9_LATTICE.iter().enumerate() {
        n[k] = lx[a] * ly[b];
        dn[k] = [dlx[a] * ly[b], lx[a] * dly[b]];
    }
    (n, dn)
}

/// `J[i][j] = d x_j / d ξ_i` with x = (y, z), ξ = (ξ, η).
pub(crate) fn quad9_jacobian(xy: &[[f64; 2]], dn: &[[f64; 2]; 9]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for (k, p) in xy.iter().enumerate() {
        for i in 0..2 {
            j[i][0] += dn[k][i] * p[0];
            j[i][1] += dn[k][i] * p[1];
        }
    }
    j
}
