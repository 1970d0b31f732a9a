//! Nodal scalar fields and per-triangle flux fields on a shared mesh, with
//! their ASCII dump formats.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::mesh::{Mesh, MeshError};

/// Piecewise-linear nodal field. With `zero_trace` set, every boundary
/// vertex value is exactly zero.
#[derive(Debug, Clone)]
pub struct Field {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub zero_trace: bool,
}

impl Field {
    pub fn zeros(mesh: Arc<Mesh>, zero_trace: bool) -> Self {
        let n = mesh.n_vertices();
        Field { mesh, values: vec![0.0; n], zero_trace }
    }

    /// Wraps nodal values; enforces exact zeros on the boundary when
    /// `zero_trace` is requested.
    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>, zero_trace: bool) -> Self {
        assert_eq!(values.len(), mesh.n_vertices(), "one value per vertex");
        let mut values = values;
        if zero_trace {
            for &v in &mesh.boundary_vertices {
                values[v] = 0.0;
            }
        }
        Field { mesh, values, zero_trace }
    }

    /// Samples a function of position at the vertices.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> f64, zero_trace: bool) -> Self {
        let values: Vec<f64> = mesh.vertices.iter().map(|&x| f(x)).collect();
        Self::from_values(mesh, values, zero_trace)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            zero_trace: self.zero_trace,
        }
    }

    /// ASCII dump: vertex count, then one nodal value per line
    /// (17 significant digits; bit-exact round trip).
    pub fn write_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.values.len());
        for v in &self.values {
            let _ = writeln!(out, "{:.16e}", v);
        }
        out
    }

    /// Parses a field dump against a mesh. The zero-trace flag is inferred
    /// from the boundary values.
    pub fn read_ascii(mesh: Arc<Mesh>, text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| MeshError::Parse("empty field dump".into()))?
            .trim()
            .parse()
            .map_err(|_| MeshError::Parse("bad field count".into()))?;
        if n != mesh.n_vertices() {
            return Err(MeshError::Parse(format!(
                "field has {n} values but mesh has {} vertices",
                mesh.n_vertices()
            )));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let line =
                lines.next().ok_or_else(|| MeshError::Parse("missing field value".into()))?;
            values.push(
                line.trim()
                    .parse()
                    .map_err(|_| MeshError::Parse(format!("bad field value: {line}")))?,
            );
        }
        let zero_trace = mesh.boundary_vertices.iter().all(|&v| values[v] == 0.0);
        Ok(Field { mesh, values, zero_trace })
    }
}

/// Per-triangle constant vector field (the discrete flux).
#[derive(Debug, Clone)]
pub struct FluxField {
    pub mesh: Arc<Mesh>,
    pub vectors: Vec<[f64; 2]>,
}

impl FluxField {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_triangles();
        FluxField { mesh, vectors: vec![[0.0, 0.0]; n] }
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let vectors: Vec<[f64; 2]> =
            (0..mesh.n_triangles()).map(|t| f(mesh.centroid_of(t))).collect();
        FluxField { mesh, vectors }
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().fold(0.0f64, |m, z| m.max((z[0] * z[0] + z[1] * z[1]).sqrt()))
    }

    /// Fraction of the total area carried by triangles with |z| above `cap`.
    pub fn area_fraction_above(&self, cap: f64) -> f64 {
        let mut over = 0.0;
        for (t, z) in self.vectors.iter().enumerate() {
            if (z[0] * z[0] + z[1] * z[1]).sqrt() > cap {
                over += self.mesh.areas[t];
            }
        }
        over / self.mesh.total_area
    }

    /// ASCII dump: triangle count, then one "zx zy" line per triangle.
    pub fn write_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.vectors.len());
        for z in &self.vectors {
            let _ = writeln!(out, "{:.16e} {:.16e}", z[0], z[1]);
        }
        out
    }

    pub fn read_ascii(mesh: Arc<Mesh>, text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| MeshError::Parse("empty flux dump".into()))?
            .trim()
            .parse()
            .map_err(|_| MeshError::Parse("bad flux count".into()))?;
        if n != mesh.n_triangles() {
            return Err(MeshError::Parse(format!(
                "flux has {n} vectors but mesh has {} triangles",
                mesh.n_triangles()
            )));
        }
        let mut vectors = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| MeshError::Parse("missing flux line".into()))?;
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| MeshError::Parse(format!("bad flux line: {line}"))))
                .collect::<Result<_, _>>()?;
            if xs.len() != 2 {
                return Err(MeshError::Parse(format!("bad flux line: {line}")));
            }
            vectors.push([xs[0], xs[1]]);
        }
        Ok(FluxField { mesh, vectors })
    }
}
