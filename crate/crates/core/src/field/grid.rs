use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// A boundary quadrature point: a boundary node with its outward unit
/// normal and arc-length weight. Rectangle corners appear once per
/// incident edge, each time with that edge's normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    pub node: usize,
    pub normal: [f64; 2],
    pub weight: f64,
}

/// Tensor-product grid over an interval, a rectangle, or a disc embedded
/// in its bounding square. Node `(i, j)` has index `i + nx * j`.
#[derive(Debug, Clone)]
pub struct Grid {
    kind: DomainKind,
    dim: usize,
    n: [usize; 2],
    h: [f64; 2],
    origin: [f64; 2],
    extents: [f64; 2],
    kinds: Vec<NodeKind>,
    weights: Vec<f64>,
    facets: Vec<BoundaryFacet>,
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

impl Grid {
    /// Uniform grid on `(0, length)` with `n` nodes.
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        if n < 2 || !(length > 0.0) {
            return Err(Error::DegenerateGrid(format!("interval n={n} length={length}")));
        }
        let h = length / (n - 1) as f64;
        let mut kinds = vec![NodeKind::Interior; n];
        kinds[0] = NodeKind::Boundary;
        kinds[n - 1] = NodeKind::Boundary;
        let facets = vec![
            BoundaryFacet { node: 0, normal: [-1.0, 0.0], weight: 1.0 },
            BoundaryFacet { node: n - 1, normal: [1.0, 0.0], weight: 1.0 },
        ];
        Ok(Grid {
            kind: DomainKind::Interval,
            dim: 1,
            n: [n, 1],
            h: [h, 1.0],
            origin: [0.0, 0.0],
            extents: [length, 0.0],
            kinds,
            weights: trapezoid_weights(n, h),
            facets,
        })
    }

    /// Uniform grid on `(0, lx) x (0, ly)`.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::DegenerateGrid(format!("rectangle {nx}x{ny} extents {lx}x{ly}")));
        }
        let hx = lx / (nx - 1) as f64;
        let hy = ly / (ny - 1) as f64;
        let mut kinds = vec![NodeKind::Interior; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    kinds[i + nx * j] = NodeKind::Boundary;
                }
            }
        }
        let wx = trapezoid_weights(nx, hx);
        let wy = trapezoid_weights(ny, hy);
        let mut weights = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                weights[i + nx * j] = wx[i] * wy[j];
            }
        }
        let mut facets = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            facets.push(BoundaryFacet { node: i, normal: [0.0, -1.0], weight: wx[i] });
        }
        for i in 0..nx {
            facets.push(BoundaryFacet { node: i + nx * (ny - 1), normal: [0.0, 1.0], weight: wx[i] });
        }
        for j in 0..ny {
            facets.push(BoundaryFacet { node: nx * j, normal: [-1.0, 0.0], weight: wy[j] });
        }
        for j in 0..ny {
            facets.push(BoundaryFacet { node: nx - 1 + nx * j, normal: [1.0, 0.0], weight: wy[j] });
        }
        Ok(Grid {
            kind: DomainKind::Rectangle,
            dim: 2,
            n: [nx, ny],
            h: [hx, hy],
            origin: [0.0, 0.0],
            extents: [lx, ly],
            kinds,
            weights,
            facets,
        })
    }

    /// Disc of the given radius centred at the origin, on an `n x n` grid
    /// covering `[-radius, radius]^2`. Inside nodes with an outside face
    /// neighbour are boundary nodes; quadrature weights come from cut-cell
    /// areas shared among each cell's non-exterior corners.
    pub fn disc(radius: f64, n: usize) -> Result<Self> {
        if n < 5 || !(radius > 0.0) {
            return Err(Error::DegenerateGrid(format!("disc n={n} radius={radius}")));
        }
        let h = 2.0 * radius / (n - 1) as f64;
        let origin = [-radius, -radius];
        let coord = |i: usize| origin[0] + i as f64 * h;
        let inside = |i: usize, j: usize| {
            let (x, y) = (coord(i), coord(j));
            x * x + y * y <= radius * radius * (1.0 + 1e-12)
        };
        let mut kinds = vec![NodeKind::Exterior; n * n];
        for j in 0..n {
            for i in 0..n {
                if !inside(i, j) {
                    continue;
                }
                let on_box = i == 0 || j == 0 || i == n - 1 || j == n - 1;
                let open = on_box
                    || !inside(i - 1, j)
                    || !inside(i + 1, j)
                    || !inside(i, j - 1)
                    || !inside(i, j + 1);
                kinds[i + n * j] = if open { NodeKind::Boundary } else { NodeKind::Interior };
            }
        }

        // cut-cell weights from an 8x8 midpoint subsampling of each cell
        const SUB: usize = 8;
        let mut weights = vec![0.0; n * n];
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let corners = [i + n * j, i + 1 + n * j, i + n * (j + 1), i + 1 + n * (j + 1)];
                let live: Vec<usize> =
                    corners.iter().copied().filter(|&c| kinds[c] != NodeKind::Exterior).collect();
                if live.is_empty() {
                    continue;
                }
                let mut hits = 0usize;
                for b in 0..SUB {
                    for a in 0..SUB {
                        let x = coord(i) + (a as f64 + 0.5) * h / SUB as f64;
                        let y = coord(j) + (b as f64 + 0.5) * h / SUB as f64;
                        if x * x + y * y <= radius * radius {
                            hits += 1;
                        }
                    }
                }
                let area = h * h * hits as f64 / (SUB * SUB) as f64;
                let share = area / live.len() as f64;
                for c in live {
                    weights[c] += share;
                }
            }
        }

        let mut ring: Vec<(f64, usize, [f64; 2])> = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if kinds[i + n * j] == NodeKind::Boundary {
                    let (x, y) = (coord(i), coord(j));
                    let r = (x * x + y * y).sqrt();
                    let normal = if r > 0.0 { [x / r, y / r] } else { [1.0, 0.0] };
                    ring.push((y.atan2(x), i + n * j, normal));
                }
            }
        }
        ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let m = ring.len();
        let tau = std::f64::consts::TAU;
        let facets = (0..m)
            .map(|k| {
                let prev = ring[(k + m - 1) % m].0;
                let next = ring[(k + 1) % m].0;
                let mut span = next - prev;
                if span <= 0.0 {
                    span += tau;
                }
                if m == 1 {
                    span = 2.0 * tau;
                }
                BoundaryFacet { node: ring[k].1, normal: ring[k].2, weight: 0.5 * radius * span }
            })
            .collect();

        Ok(Grid {
            kind: DomainKind::Disc,
            dim: 2,
            n: [n, n],
            h: [h, h],
            origin,
            extents: [2.0 * radius, 2.0 * radius],
            kinds,
            weights,
            facets,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis (the second entry is 1 in 1D).
    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    /// Mesh width per axis.
    pub fn h(&self) -> [f64; 2] {
        self.h
    }

    pub fn extents(&self) -> [f64; 2] {
        self.extents
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn node_kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.kinds[idx] != NodeKind::Exterior
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n[0], idx / self.n[0])
    }

    /// Physical coordinates of a node (`y = 0` in 1D).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        let y = if self.dim == 2 { self.origin[1] + j as f64 * self.h[1] } else { 0.0 };
        [self.origin[0] + i as f64 * self.h[0], y]
    }

    /// Centre of the domain (used by radial catalog profiles).
    pub fn center(&self) -> [f64; 2] {
        match self.kind {
            DomainKind::Interval => [0.5 * self.extents[0], 0.0],
            DomainKind::Rectangle => [0.5 * self.extents[0], 0.5 * self.extents[1]],
            DomainKind::Disc => [0.0, 0.0],
        }
    }

    /// Quadrature weight of each node (zero on exterior nodes).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    /// Indices of boundary nodes, each listed once, in index order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.kinds[k] == NodeKind::Boundary).collect()
    }

    /// Diameter of the domain.
    pub fn diameter(&self) -> f64 {
        match self.kind {
            DomainKind::Interval => self.extents[0],
            DomainKind::Rectangle => self.extents[0].hypot(self.extents[1]),
            DomainKind::Disc => self.extents[0],
        }
    }

    /// Distance from a node to the boundary of the continuous domain.
    pub fn dist_to_boundary(&self, idx: usize) -> f64 {
        let [x, y] = self.coords(idx);
        match self.kind {
            DomainKind::Interval => x.min(self.extents[0] - x),
            DomainKind::Rectangle => x.min(self.extents[0] - x).min(y).min(self.extents[1] - y),
            DomainKind::Disc => 0.5 * self.extents[0] - x.hypot(y),
        }
    }

    /// Node reached from `idx` by the lattice offset `(di, dj)`, if it is on the grid.
    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni >= self.n[0] as isize || nj >= self.n[1] as isize {
            return None;
        }
        Some(self.index(ni as usize, nj as usize))
    }

    /// Error unless every axis carries at least four nodes.
    pub fn require_stencil_width(&self) -> Result<()> {
        for d in 0..self.dim {
            if self.n[d] < 4 {
                return Err(Error::DegenerateGrid(format!("n={} < 4 along axis {d}", self.n[d])));
            }
        }
        Ok(())
    }

    /// Total measure of the domain as seen by the quadrature.
    pub fn measure(&self) -> f64 {
        crate::field::pairwise_sum(&self.weights)
    }
}
