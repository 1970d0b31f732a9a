//! P1 triangulations of disks and rectangles with the boundary data needed
//! for trace and boundary-flux integrals.
//!
//! Disk meshes start from a six-triangle fan around the origin and refine
//! 1:4, projecting new boundary vertices onto the circle; the triangulated
//! domain at level `k` is the inscribed regular `6 * 2^k`-gon. Rectangle
//! meshes are structured, one diagonal per cell. Meshes are immutable after
//! construction and safe to share across threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Analytic domain a mesh approximates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainTag {
    Disk { r: f64 },
    Rect { a: f64, b: f64 },
    /// Geometry read back from a dump; no analytic domain attached.
    Imported,
}

/// One boundary edge, oriented as it appears in its (counter-clockwise)
/// owning triangle, with the outward unit normal.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub normal: [f64; 2],
    pub length: f64,
    /// Index of the unique triangle containing this edge.
    pub triangle: usize,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {0} has non-positive area {1}")]
    NonPositiveArea(usize, f64),
    #[error("boundary vertex {0} has {1} incident boundary edges (expected 2)")]
    OpenBoundary(usize, usize),
    #[error("Euler relation violated: V={v} E={e} T={t}, V-E+T={chi}")]
    EulerMismatch { v: usize, e: usize, t: usize, chi: i64 },
    #[error("boundary edge {0} normal is not outward unit")]
    BadNormal(usize),
    #[error("boundary vertex {0} at distance {1} from circle radius {2}")]
    BoundaryRadius(usize, f64, f64),
    #[error("mesh dump parse error: {0}")]
    Parse(String),
    #[error("invalid mesh input: {0}")]
    Invalid(&'static str),
}

/// Immutable triangulation with precomputed per-triangle geometry and
/// lumped vertex masses (row sums of the P1 mass matrix).
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_vertices: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub domain: DomainTag,
    /// Per-triangle area (positive).
    pub areas: Vec<f64>,
    /// Per-triangle P1 shape-function gradients, one 2-vector per local vertex.
    pub shape_grads: Vec<[[f64; 2]; 3]>,
    /// Lumped vertex mass: sum of adjacent triangle areas / 3.
    pub lumped_mass: Vec<f64>,
    /// Mesh size: longest edge.
    pub h: f64,
    pub total_area: f64,
    /// Boundary membership mask, indexed by vertex.
    pub is_boundary: Vec<bool>,
}

impl Mesh {
    /// Builds a mesh from raw vertices and triangles, deriving boundary
    /// structure, normals, masses and per-triangle geometry.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        domain: DomainTag,
    ) -> Result<Self, MeshError> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(MeshError::Invalid("empty vertex or triangle list"));
        }
        let nv = vertices.len();
        for (ti, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nv) {
                return Err(MeshError::Invalid("triangle references missing vertex"));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::NonPositiveArea(ti, 0.0));
            }
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut shape_grads = Vec::with_capacity(triangles.len());
        let mut h = 0.0f64;
        for (ti, t) in triangles.iter().enumerate() {
            let [p0, p1, p2] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            if det <= 0.0 {
                return Err(MeshError::NonPositiveArea(ti, det / 2.0));
            }
            let area = det / 2.0;
            areas.push(area);
            // grad phi_i = rot90(p_k - p_j) / (2A) for (i, j, k) cyclic.
            let g = |pj: [f64; 2], pk: [f64; 2]| [(pj[1] - pk[1]) / det, (pk[0] - pj[0]) / det];
            shape_grads.push([g(p1, p2), g(p2, p0), g(p0, p1)]);
            for (a, b) in [(p0, p1), (p1, p2), (p2, p0)] {
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }

        // Count undirected edges; edges in exactly one triangle are boundary.
        let mut edge_use: BTreeMap<(usize, usize), (usize, usize, usize, usize)> = BTreeMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edge_use.entry(key).or_insert((0, a, b, ti));
                entry.0 += 1;
            }
        }
        let n_edges = edge_use.len();

        let mut boundary_edges = Vec::new();
        for (&_key, &(count, a, b, ti)) in &edge_use {
            if count == 1 {
                let (pa, pb) = (vertices[a], vertices[b]);
                let tx = pb[0] - pa[0];
                let ty = pb[1] - pa[1];
                let len = (tx * tx + ty * ty).sqrt();
                // Interior lies to the left of a->b in a CCW triangle.
                let normal = [ty / len, -tx / len];
                boundary_edges.push(BoundaryEdge { a, b, normal, length: len, triangle: ti });
            } else if count > 2 {
                return Err(MeshError::Invalid("edge shared by more than two triangles"));
            }
        }

        let mut is_boundary = vec![false; nv];
        for e in &boundary_edges {
            is_boundary[e.a] = true;
            is_boundary[e.b] = true;
        }
        let boundary_vertices: Vec<usize> =
            (0..nv).filter(|&v| is_boundary[v]).collect();

        let mut lumped_mass = vec![0.0; nv];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                lumped_mass[v] += areas[ti] / 3.0;
            }
        }
        let total_area = areas.iter().sum();

        let mesh = Mesh {
            vertices,
            triangles,
            boundary_vertices,
            boundary_edges,
            domain,
            areas,
            shape_grads,
            lumped_mass,
            h,
            total_area,
            is_boundary,
        };
        let _ = n_edges;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    fn n_edges(&self) -> usize {
        let mut edges = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        edges.len()
    }

    /// Constant gradient of the P1 interpolant of `values` on triangle `ti`.
    pub fn grad_on(&self, ti: usize, values: &[f64]) -> [f64; 2] {
        let t = self.triangles[ti];
        let g = self.shape_grads[ti];
        let mut out = [0.0, 0.0];
        for k in 0..3 {
            out[0] += values[t[k]] * g[k][0];
            out[1] += values[t[k]] * g[k][1];
        }
        out
    }

    pub fn centroid_of(&self, ti: usize) -> [f64; 2] {
        let t = self.triangles[ti];
        let mut c = [0.0, 0.0];
        for &v in &t {
            c[0] += self.vertices[v][0] / 3.0;
            c[1] += self.vertices[v][1] / 3.0;
        }
        c
    }

    /// Interior vertices adjacent (by a mesh edge) to the boundary.
    pub fn first_interior_ring(&self) -> Vec<usize> {
        let mut ring = vec![false; self.n_vertices()];
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if self.is_boundary[a] && !self.is_boundary[b] {
                    ring[b] = true;
                }
                if self.is_boundary[b] && !self.is_boundary[a] {
                    ring[a] = true;
                }
            }
        }
        (0..self.n_vertices()).filter(|&v| ring[v]).collect()
    }

    /// Distance from `x` to the polygonal boundary (minimum over boundary
    /// edge segments).
    pub fn boundary_distance(&self, x: [f64; 2]) -> f64 {
        let mut d = f64::INFINITY;
        for e in &self.boundary_edges {
            let (pa, pb) = (self.vertices[e.a], self.vertices[e.b]);
            let ex = pb[0] - pa[0];
            let ey = pb[1] - pa[1];
            let len2 = ex * ex + ey * ey;
            let t = (((x[0] - pa[0]) * ex + (x[1] - pa[1]) * ey) / len2).clamp(0.0, 1.0);
            let px = pa[0] + t * ex;
            let py = pa[1] + t * ey;
            d = d.min(((x[0] - px).powi(2) + (x[1] - py).powi(2)).sqrt());
        }
        d
    }

    /// Checks every structural invariant: positive areas, closed boundary
    /// loops, unit outward normals, the Euler relation for a simply
    /// connected mesh, and (for disks) boundary vertices on the circle.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (ti, &a) in self.areas.iter().enumerate() {
            if !(a > 0.0) {
                return Err(MeshError::NonPositiveArea(ti, a));
            }
        }

        // Every boundary vertex must sit in exactly two boundary edges.
        let mut degree = vec![0usize; self.n_vertices()];
        for e in &self.boundary_edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        for &v in &self.boundary_vertices {
            if degree[v] != 2 {
                return Err(MeshError::OpenBoundary(v, degree[v]));
            }
        }

        let centroid = {
            let mut c = [0.0, 0.0];
            for v in &self.vertices {
                c[0] += v[0];
                c[1] += v[1];
            }
            [c[0] / self.n_vertices() as f64, c[1] / self.n_vertices() as f64]
        };
        for (ei, e) in self.boundary_edges.iter().enumerate() {
            let n2 = e.normal[0] * e.normal[0] + e.normal[1] * e.normal[1];
            if (n2.sqrt() - 1.0).abs() > 1e-12 {
                return Err(MeshError::BadNormal(ei));
            }
            let mid = [
                (self.vertices[e.a][0] + self.vertices[e.b][0]) / 2.0,
                (self.vertices[e.a][1] + self.vertices[e.b][1]) / 2.0,
            ];
            let outward =
                e.normal[0] * (mid[0] - centroid[0]) + e.normal[1] * (mid[1] - centroid[1]);
            if outward <= 0.0 {
                return Err(MeshError::BadNormal(ei));
            }
        }

        let (v, e, t) = (self.n_vertices(), self.n_edges(), self.n_triangles());
        let chi = v as i64 - e as i64 + t as i64;
        if chi != 1 {
            return Err(MeshError::EulerMismatch { v, e, t, chi });
        }

        if let DomainTag::Disk { r } = self.domain {
            let tol = self.h * self.h;
            for &bv in &self.boundary_vertices {
                let p = self.vertices[bv];
                let dist = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if (dist - r).abs() > tol {
                    return Err(MeshError::BoundaryRadius(bv, dist, r));
                }
            }
        }
        Ok(())
    }

    /// ASCII dump: "V T B" header, vertex lines, triangle lines, boundary
    /// edge lines. 17 significant digits, so the round trip is bit exact.
    pub fn write_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {}",
            self.n_vertices(),
            self.n_triangles(),
            self.boundary_edges.len()
        );
        for v in &self.vertices {
            let _ = writeln!(out, "{:.16e} {:.16e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(
                out,
                "{} {} {:.16e} {:.16e} {:.16e}",
                e.a, e.b, e.normal[0], e.normal[1], e.length
            );
        }
        out
    }

    /// Parses a mesh dump produced by [`Mesh::write_ascii`]. The domain tag
    /// is not stored in the format, so the result is tagged `Imported`.
    pub fn read_ascii(text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MeshError::Parse("empty dump".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| MeshError::Parse(format!("bad header: {header}"))))
            .collect::<Result<_, _>>()?;
        if counts.len() != 3 {
            return Err(MeshError::Parse("header must be 'V T B'".into()));
        }
        let (nv, nt, nb) = (counts[0], counts[1], counts[2]);

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| MeshError::Parse("missing vertex line".into()))?;
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| MeshError::Parse(format!("bad vertex: {line}"))))
                .collect::<Result<_, _>>()?;
            if xs.len() != 2 {
                return Err(MeshError::Parse(format!("bad vertex: {line}")));
            }
            vertices.push([xs[0], xs[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = lines.next().ok_or_else(|| MeshError::Parse("missing triangle line".into()))?;
            let ks: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| MeshError::Parse(format!("bad triangle: {line}"))))
                .collect::<Result<_, _>>()?;
            if ks.len() != 3 {
                return Err(MeshError::Parse(format!("bad triangle: {line}")));
            }
            triangles.push([ks[0], ks[1], ks[2]]);
        }
        // Boundary lines are derived data; parse to honor the format, then
        // rebuild and cross-check against the recomputed values.
        let mut dumped_edges = Vec::with_capacity(nb);
        for _ in 0..nb {
            let line = lines.next().ok_or_else(|| MeshError::Parse("missing boundary line".into()))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(MeshError::Parse(format!("bad boundary edge: {line}")));
            }
            let a: usize =
                parts[0].parse().map_err(|_| MeshError::Parse(format!("bad boundary edge: {line}")))?;
            let b: usize =
                parts[1].parse().map_err(|_| MeshError::Parse(format!("bad boundary edge: {line}")))?;
            let nums: Vec<f64> = parts[2..]
                .iter()
                .map(|s| s.parse().map_err(|_| MeshError::Parse(format!("bad boundary edge: {line}"))))
                .collect::<Result<_, _>>()?;
            dumped_edges.push((a, b, nums[0], nums[1], nums[2]));
        }

        let mesh = Mesh::from_parts(vertices, triangles, DomainTag::Imported)?;
        if mesh.boundary_edges.len() != dumped_edges.len() {
            return Err(MeshError::Parse("boundary edge count mismatch".into()));
        }
        for (e, d) in mesh.boundary_edges.iter().zip(&dumped_edges) {
            let key = (e.a.min(e.b), e.a.max(e.b));
            let dkey = (d.0.min(d.1), d.0.max(d.1));
            if key != dkey || (e.length - d.4).abs() > 1e-12 * (1.0 + e.length) {
                return Err(MeshError::Parse("boundary edge data mismatch".into()));
            }
        }
        Ok(mesh)
    }
}

/// Mesh quality summary. Degenerate triangles (min angle below 1e-8 degrees)
/// are counted, not rejected.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    pub h: f64,
    pub total_area: f64,
    pub degenerate_triangles: usize,
}

/// Smallest angle, mesh size and total area of a mesh.
pub fn mesh_quality(mesh: &Mesh) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut degenerate = 0usize;
    for t in &mesh.triangles {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let mut tri_min = f64::INFINITY;
        for k in 0..3 {
            let a = p[k];
            let b = p[(k + 1) % 3];
            let c = p[(k + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let dot = u[0] * v[0] + u[1] * v[1];
            let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let angle = (dot / (nu * nv)).clamp(-1.0, 1.0).acos();
            tri_min = tri_min.min(angle);
        }
        if tri_min.to_degrees() < 1e-8 {
            degenerate += 1;
        }
        min_angle = min_angle.min(tri_min);
    }
    QualityReport {
        min_angle_deg: min_angle.to_degrees(),
        h: mesh.h,
        total_area: mesh.total_area,
        degenerate_triangles: degenerate,
    }
}

/// Six-triangle fan on the disk of radius `r`, refined 1:4 `refinement`
/// times with new boundary vertices projected onto the circle. Vertex 0 is
/// the center.
pub fn build_disk_mesh(r: f64, refinement: u32) -> Mesh {
    assert!(r > 0.0, "disk radius must be positive");
    let mut vertices = vec![[0.0, 0.0]];
    for k in 0..6 {
        let th = std::f64::consts::FRAC_PI_3 * k as f64;
        vertices.push([r * th.cos(), r * th.sin()]);
    }
    let mut triangles: Vec<[usize; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();

    for _ in 0..refinement {
        let (v2, t2) = refine_once(&vertices, &triangles, Some(r));
        vertices = v2;
        triangles = t2;
    }
    Mesh::from_parts(vertices, triangles, DomainTag::Disk { r })
        .expect("disk construction yields a valid mesh")
}

/// Structured triangulation of (0,a) x (0,b) with `2*nx*ny` triangles.
pub fn build_rect_mesh(a: f64, b: f64, nx: usize, ny: usize) -> Mesh {
    assert!(a > 0.0 && b > 0.0, "rectangle sides must be positive");
    assert!(nx >= 1 && ny >= 1, "need at least one cell per direction");
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([a * i as f64 / nx as f64, b * j as f64 / ny as f64]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            triangles.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    Mesh::from_parts(vertices, triangles, DomainTag::Rect { a, b })
        .expect("rectangle construction yields a valid mesh")
}

/// Uniform 1:4 refinement of an existing mesh, preserving its domain tag
/// (and re-projecting boundary midpoints for disks).
pub fn refine(mesh: &Mesh) -> Mesh {
    let project = match mesh.domain {
        DomainTag::Disk { r } => Some(r),
        _ => None,
    };
    let (v2, t2) = refine_once(&mesh.vertices, &mesh.triangles, project);
    Mesh::from_parts(v2, t2, mesh.domain).expect("refinement preserves validity")
}

fn refine_once(
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
    project_radius: Option<f64>,
) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    // Boundary edges (single occurrence) get their midpoint projected.
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }

    let mut new_vertices = vertices.to_vec();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, new_vertices: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let pa = vertices[a];
        let pb = vertices[b];
        let mut p = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
        if let Some(r) = project_radius {
            if edge_count[&key] == 1 {
                let d = (p[0] * p[0] + p[1] * p[1]).sqrt();
                p = [p[0] * r / d, p[1] * r / d];
            }
        }
        new_vertices.push(p);
        let idx = new_vertices.len() - 1;
        midpoint.insert(key, idx);
        idx
    };

    let mut new_triangles = Vec::with_capacity(4 * triangles.len());
    for t in triangles {
        let [i, j, k] = *t;
        let mij = mid(i, j, &mut new_vertices);
        let mjk = mid(j, k, &mut new_vertices);
        let mki = mid(k, i, &mut new_vertices);
        new_triangles.push([i, mij, mki]);
        new_triangles.push([mij, j, mjk]);
        new_triangles.push([mki, mjk, k]);
        new_triangles.push([mij, mjk, mki]);
    }
    (new_vertices, new_triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_base_fan_counts() {
        let m = build_disk_mesh(1.0, 0);
        assert_eq!(m.n_vertices(), 7);
        assert_eq!(m.n_triangles(), 6);
        assert_eq!(m.boundary_vertices.len(), 6);
        m.validate().unwrap();
    }

    #[test]
    fn disk_refinement_quadruples_triangles() {
        let m = build_disk_mesh(1.0, 1);
        assert_eq!(m.n_triangles(), 24);
        m.validate().unwrap();
        let m2 = build_disk_mesh(1.0, 2);
        assert_eq!(m2.n_triangles(), 96);
        assert_eq!(m2.n_vertices(), 61);
    }

    #[test]
    fn disk_boundary_on_circle() {
        let m = build_disk_mesh(2.0, 0);
        for &v in &m.boundary_vertices {
            let p = m.vertices[v];
            let d = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((d - 2.0).abs() < 1e-14);
        }
        for r in 0..4 {
            build_disk_mesh(2.0, r).validate().unwrap();
        }
    }

    #[test]
    fn rect_counts_and_area() {
        let m = build_rect_mesh(1.0, 1.0, 1, 1);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.n_vertices(), 4);
        m.validate().unwrap();

        let m = build_rect_mesh(1.0, 1.0, 2, 2);
        assert_eq!(m.n_triangles(), 8);

        let m = build_rect_mesh(2.0, 1.0, 2, 1);
        assert!((m.total_area - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rect_quality_exact_area() {
        let q = mesh_quality(&build_rect_mesh(1.0, 1.0, 4, 4));
        assert_eq!(q.total_area, 1.0);
        assert_eq!(q.degenerate_triangles, 0);
    }

    #[test]
    fn disk_area_converges_to_pi() {
        // Inscribed regular n-gon area: (n/2) r^2 sin(2 pi / n).
        let hexagon = 3.0 * (3.0f64).sqrt() / 2.0;
        let q0 = mesh_quality(&build_disk_mesh(1.0, 0));
        assert!((q0.total_area - hexagon).abs() < 1e-12);

        let q3 = mesh_quality(&build_disk_mesh(1.0, 3));
        let n = 48.0;
        let polygon = n / 2.0 * (2.0 * std::f64::consts::PI / n).sin();
        assert!((q3.total_area - polygon).abs() < 1e-12);
        assert!((q3.total_area - std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn disk_area_error_shrinks_by_factor_three() {
        let mut prev = f64::INFINITY;
        for k in 0..5 {
            let q = mesh_quality(&build_disk_mesh(1.0, k));
            let err = (std::f64::consts::PI - q.total_area).abs();
            if k > 0 {
                assert!(err * 3.0 <= prev, "level {k}: {err} vs {prev}");
            }
            prev = err;
        }
    }

    #[test]
    fn rect_refinement_preserves_area_exactly() {
        // Exact as geometry; the summed float total is allowed last-ulp slack.
        let m = build_rect_mesh(2.0, 1.0, 3, 2);
        let m2 = refine(&m);
        assert!((m.total_area - m2.total_area).abs() <= 8.0 * f64::EPSILON * m.total_area);
        m2.validate().unwrap();
    }

    #[test]
    fn disk_perimeter_matches_polygon_closed_form() {
        for k in 0..4u32 {
            let m = build_disk_mesh(1.5, k);
            let perim: f64 = m.boundary_edges.iter().map(|e| e.length).sum();
            let n = 6.0 * (2.0f64).powi(k as i32);
            let expected = 2.0 * n * 1.5 * (std::f64::consts::PI / n).sin();
            assert!(
                (perim - expected).abs() < 1e-12 * expected,
                "k={k}: {perim} vs {expected}"
            );
        }
    }

    #[test]
    fn ascii_round_trip_is_bit_exact() {
        let m = build_disk_mesh(1.0, 2);
        let dump = m.write_ascii();
        let m2 = Mesh::read_ascii(&dump).unwrap();
        assert_eq!(m.vertices.len(), m2.vertices.len());
        for (a, b) in m.vertices.iter().zip(&m2.vertices) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        assert_eq!(m.triangles, m2.triangles);
        let dump2 = m2.write_ascii();
        assert_eq!(dump, dump2);
    }

    #[test]
    fn lumped_masses_sum_to_area() {
        let m = build_disk_mesh(1.0, 2);
        let mass: f64 = m.lumped_mass.iter().sum();
        assert!((mass - m.total_area).abs() < 1e-13);
    }

    #[test]
    fn first_interior_ring_nonempty() {
        let m = build_disk_mesh(1.0, 1);
        let ring = m.first_interior_ring();
        assert!(!ring.is_empty());
        for v in ring {
            assert!(!m.is_boundary[v]);
        }
    }
}
