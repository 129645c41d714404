//! Subdivided icosahedral spheres.
//!
//! Level 0 is the regular icosahedron with vertices on the `±z` poles. Each
//! further level splits every triangle 4-to-1 at its edge midpoints and pushes
//! the new vertices back onto the unit sphere.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Default guard on the subdivision level; level 10 already holds ~10.5M vertices.
pub const DEFAULT_MAX_LEVEL: u32 = 10;

/// Tolerance for treating a direction as lying on a face boundary.
pub const BOUNDARY_EPS: f64 = 1e-12;

const UNIT_TOLERANCE: f64 = 1e-9;

/// Chunk length for order-stable parallel reductions.
const REDUCE_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct Icosphere {
    level: u32,
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    /// Sorted `(min, max)` vertex pairs.
    edges: Vec<[u32; 2]>,
    adjacency_offsets: Vec<u32>,
    adjacency: Vec<u32>,
}

/// Builds the icosphere at `level`, refusing levels above [`DEFAULT_MAX_LEVEL`].
pub fn build_icosphere(level: u32) -> Result<Icosphere> {
    build_icosphere_with_limit(level, DEFAULT_MAX_LEVEL)
}

pub fn build_icosphere_with_limit(level: u32, limit: u32) -> Result<Icosphere> {
    if level > limit {
        return Err(Error::LevelTooHigh { level, limit });
    }
    let (mut vertices, mut faces) = base_icosahedron();
    let mut edges = collect_edges(&faces);
    for _ in 0..level {
        subdivide(&mut vertices, &mut faces, &mut edges);
    }
    let (adjacency_offsets, adjacency) = build_adjacency(vertices.len(), &edges);
    Ok(Icosphere {
        level,
        vertices,
        faces,
        edges,
        adjacency_offsets,
        adjacency,
    })
}

fn base_icosahedron() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let ring_lat = 0.5f64.atan();
    let (sin_lat, cos_lat) = ring_lat.sin_cos();
    let mut vertices = Vec::with_capacity(12);
    vertices.push(Vec3::new(0.0, 0.0, 1.0));
    for k in 0..5 {
        let lon = 2.0 * PI * k as f64 / 5.0;
        vertices.push(Vec3::new(cos_lat * lon.cos(), cos_lat * lon.sin(), sin_lat));
    }
    for k in 0..5 {
        let lon = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        vertices.push(Vec3::new(
            cos_lat * lon.cos(),
            cos_lat * lon.sin(),
            -sin_lat,
        ));
    }
    vertices.push(Vec3::new(0.0, 0.0, -1.0));

    let upper = |k: u32| 1 + k % 5;
    let lower = |k: u32| 6 + k % 5;
    let mut faces = Vec::with_capacity(20);
    for k in 0..5 {
        faces.push([0, upper(k), upper(k + 1)]);
    }
    for k in 0..5 {
        faces.push([upper(k), lower(k), upper(k + 1)]);
        faces.push([upper(k + 1), lower(k), lower(k + 1)]);
    }
    for k in 0..5 {
        faces.push([lower(k), 11, lower(k + 1)]);
    }
    (vertices, faces)
}

fn edge_key(a: u32, b: u32) -> [u32; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn collect_edges(faces: &[[u32; 3]]) -> Vec<[u32; 2]> {
    let mut edges: Vec<[u32; 2]> = faces
        .iter()
        .flat_map(|&[a, b, c]| [edge_key(a, b), edge_key(b, c), edge_key(c, a)])
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn subdivide(vertices: &mut Vec<Vec3>, faces: &mut Vec<[u32; 3]>, edges: &mut Vec<[u32; 2]>) {
    let base = vertices.len() as u32;
    let old_edges = std::mem::take(edges);

    // Midpoint of the k-th sorted edge becomes vertex `base + k`.
    vertices.reserve(old_edges.len());
    for &[a, b] in &old_edges {
        let mid = (vertices[a as usize] + vertices[b as usize]).normalize();
        vertices.push(mid);
    }

    let midpoint = |a: u32, b: u32| -> u32 {
        let key = edge_key(a, b);
        let k = old_edges
            .binary_search(&key)
            .expect("face edge missing from edge list");
        base + k as u32
    };

    let mut new_faces = Vec::with_capacity(faces.len() * 4);
    let mut new_edges = Vec::with_capacity(old_edges.len() * 2 + faces.len() * 3);
    for (k, &[a, b]) in old_edges.iter().enumerate() {
        let m = base + k as u32;
        new_edges.push([a, m]);
        new_edges.push([b, m]);
    }
    for &[a, b, c] in faces.iter() {
        let ab = midpoint(a, b);
        let bc = midpoint(b, c);
        let ca = midpoint(c, a);
        new_faces.push([a, ab, ca]);
        new_faces.push([ab, b, bc]);
        new_faces.push([ca, bc, c]);
        new_faces.push([ab, bc, ca]);
        new_edges.push(edge_key(ab, bc));
        new_edges.push(edge_key(bc, ca));
        new_edges.push(edge_key(ca, ab));
    }
    new_edges.sort_unstable();
    *faces = new_faces;
    *edges = new_edges;
}

fn build_adjacency(vertex_count: usize, edges: &[[u32; 2]]) -> (Vec<u32>, Vec<u32>) {
    let mut degree = vec![0u32; vertex_count];
    for &[a, b] in edges {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let mut offsets = Vec::with_capacity(vertex_count + 1);
    let mut acc = 0u32;
    offsets.push(0);
    for d in &degree {
        acc += d;
        offsets.push(acc);
    }
    let mut cursor: Vec<u32> = offsets[..vertex_count].to_vec();
    let mut neighbors = vec![0u32; acc as usize];
    // Edges are sorted, so each vertex's list comes out ordered as well.
    for &[a, b] in edges {
        neighbors[cursor[a as usize] as usize] = b;
        cursor[a as usize] += 1;
    }
    for &[a, b] in edges {
        neighbors[cursor[b as usize] as usize] = a;
        cursor[b as usize] += 1;
    }
    for v in 0..vertex_count {
        neighbors[offsets[v] as usize..offsets[v + 1] as usize].sort_unstable();
    }
    (offsets, neighbors)
}

/// Angle between two unit vectors, accurate for tiny and near-antipodal angles.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Sums per-item values in fixed-size chunks so the result does not depend on
/// how rayon schedules the work.
pub(crate) fn stable_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(REDUCE_CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * REDUCE_CHUNK;
            let end = (start + REDUCE_CHUNK).min(len);
            (start..end).map(&f).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

impl Icosphere {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of vertex `v`, sorted by index.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        let lo = self.adjacency_offsets[v] as usize;
        let hi = self.adjacency_offsets[v + 1] as usize;
        &self.adjacency[lo..hi]
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Mean over vertices of the mean angle to adjacent vertices, in radians.
    pub fn vertex_resolution(&self) -> f64 {
        let total = stable_sum(self.vertices.len(), |v| {
            let here = &self.vertices[v];
            let ns = self.neighbors(v);
            let s: f64 = ns
                .iter()
                .map(|&n| angle_between(here, &self.vertices[n as usize]))
                .sum();
            s / ns.len() as f64
        });
        total / self.vertices.len() as f64
    }

    /// Area of the inscribed triangle mesh divided by the unit sphere's area.
    pub fn surface_area_ratio(&self) -> f64 {
        let area = stable_sum(self.faces.len(), |f| {
            let [a, b, c] = self.face_vertices(f);
            0.5 * (b - a).cross(&(c - a)).norm()
        });
        area / (4.0 * PI)
    }

    pub fn face_barycenter(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c).normalize()
    }

    pub fn face_barycenters(&self) -> Vec<Vec3> {
        (0..self.faces.len())
            .map(|f| self.face_barycenter(f))
            .collect()
    }

    /// Index of the spherical triangle containing `direction`.
    ///
    /// Directions within [`BOUNDARY_EPS`] of a shared edge or vertex go to the
    /// lowest-index face among the candidates.
    pub fn owning_face(&self, direction: &Vec3) -> Result<usize> {
        check_unit(direction)?;
        let mut best = None;
        for f in 0..self.faces.len() {
            let m = containment_margin(&self.face_vertices(f), direction);
            if m >= -BOUNDARY_EPS {
                return Ok(f);
            }
            if best.map_or(true, |(_, bm)| m > bm) {
                best = Some((f, m));
            }
        }
        Ok(best.map(|(f, _)| f).unwrap_or(0))
    }

    pub fn locator(&self) -> FaceLocator {
        FaceLocator::new(self)
    }
}

/// Vertex resolution at `level`, extended to `level = -1` as twice the level-0 value.
pub fn vertex_resolution_at(level: i32) -> Result<f64> {
    match level {
        -1 => Ok(2.0 * vertex_resolution_at(0)?),
        l if l < -1 => Err(Error::invalid(format!(
            "vertex resolution is defined for levels >= -1, got {l}"
        ))),
        l => Ok(build_icosphere(l as u32)?.vertex_resolution()),
    }
}

pub(crate) fn check_unit(direction: &Vec3) -> Result<()> {
    let norm = direction.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitDirection { norm });
    }
    Ok(())
}

/// Smallest signed sine-distance from `p` to the three great circles bounding
/// the face; non-negative means inside.
fn containment_margin(tri: &[Vec3; 3], p: &Vec3) -> f64 {
    let [a, b, c] = tri;
    let m_ab = a.cross(b).normalize().dot(p);
    let m_bc = b.cross(c).normalize().dot(p);
    let m_ca = c.cross(a).normalize().dot(p);
    m_ab.min(m_bc).min(m_ca)
}

/// Precomputed face data for repeated ownership queries.
#[derive(Debug, Clone)]
pub struct FaceLocator {
    barycenters: Vec<Vec3>,
    /// Unit normals of the three bounding great circles, pointing inward.
    edge_normals: Vec<[Vec3; 3]>,
}

impl FaceLocator {
    pub fn new(sphere: &Icosphere) -> Self {
        let barycenters = sphere.face_barycenters();
        let edge_normals = (0..sphere.face_count())
            .map(|f| {
                let [a, b, c] = sphere.face_vertices(f);
                [
                    a.cross(&b).normalize(),
                    b.cross(&c).normalize(),
                    c.cross(&a).normalize(),
                ]
            })
            .collect();
        FaceLocator {
            barycenters,
            edge_normals,
        }
    }

    pub fn face_count(&self) -> usize {
        self.barycenters.len()
    }

    pub fn barycenter(&self, face: usize) -> &Vec3 {
        &self.barycenters[face]
    }

    pub fn margin(&self, face: usize, p: &Vec3) -> f64 {
        let [n0, n1, n2] = &self.edge_normals[face];
        n0.dot(p).min(n1.dot(p)).min(n2.dot(p))
    }

    pub fn owning_face(&self, direction: &Vec3) -> Result<usize> {
        check_unit(direction)?;
        Ok(self.owner_unchecked(direction))
    }

    /// Ownership query without the unit-norm check.
    pub(crate) fn owner_unchecked(&self, p: &Vec3) -> usize {
        // Nearest barycenter first: a strict interior hit is unambiguous.
        let mut top = 0;
        let mut top_dot = f64::NEG_INFINITY;
        for (f, b) in self.barycenters.iter().enumerate() {
            let d = b.dot(p);
            if d > top_dot {
                top_dot = d;
                top = f;
            }
        }
        if self.margin(top, p) > BOUNDARY_EPS {
            return top;
        }
        let mut fallback = (top, f64::NEG_INFINITY);
        for f in 0..self.barycenters.len() {
            let m = self.margin(f, p);
            if m >= -BOUNDARY_EPS {
                return f;
            }
            if m > fallback.1 {
                fallback = (f, m);
            }
        }
        fallback.0
    }
}
