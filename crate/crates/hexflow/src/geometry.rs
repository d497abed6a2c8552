//! Discrete spatial and velocity domains.
//!
//! Space is a periodic hexagonal lattice: unit horizontal pitch (one *jump*),
//! rows `sqrt(3)/2` jumps apart, odd rows shifted right by half a jump. With
//! that packing every node has six neighbours at distance exactly one jump,
//! which keeps spatial finite-difference stencils isotropic to second order.
//!
//! Velocity space is a polar grid: `n_dirs` equidistant directions starting
//! at angle zero crossed with `n_speeds` strictly positive speeds, giving
//! `M = n_dirs * n_speeds` channels enumerated speed-major.

use crate::error::{Error, Result};

/// Row pitch of the hexagonal packing, in jumps.
pub const ROW_PITCH: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2

/// Unit vectors of the three lattice axes: east, north-east, north-west.
/// Neighbour slots `2a` and `2a + 1` point along `+AXES[a]` and `-AXES[a]`.
pub const AXES: [[f64; 2]; 3] = [
    [1.0, 0.0],
    [0.5, ROW_PITCH],
    [-0.5, ROW_PITCH],
];

/// Periodic hexagonal lattice of nodes.
///
/// Nodes are indexed row-major from the origin; all iteration orders in the
/// crate follow this indexing so runs are reproducible. The neighbour table
/// is symmetric by construction: the down-links of a node are defined as the
/// transposes of the up-links below it, so `b in neighbors(a)` implies
/// `a in neighbors(b)` even across the periodic seam.
#[derive(Debug, Clone)]
pub struct SpatialLattice {
    width: usize,
    height: usize,
    positions: Vec<[f64; 2]>,
    neighbors: Vec<[usize; 6]>,
}

impl SpatialLattice {
    /// Build a `width x height` periodic hexagonal lattice.
    pub fn hexagonal(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("lattice dimensions must be at least 1"));
        }
        let n = width * height;
        let mut positions = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(n);
        for row in 0..height {
            let parity = row % 2;
            for col in 0..width {
                positions.push([col as f64 + 0.5 * parity as f64, row as f64 * ROW_PITCH]);
            }
        }
        let wrap = |v: i64, m: usize| -> usize { v.rem_euclid(m as i64) as usize };
        let idx = |col: usize, row: usize| row * width + col;
        // Up-links follow the odd-r offset convention; down-links are their
        // transposes so the relation stays symmetric at odd-height seams.
        let ne = |col: usize, row: usize| {
            idx(wrap(col as i64 + (row % 2) as i64, width), wrap(row as i64 + 1, height))
        };
        let nw = |col: usize, row: usize| {
            idx(wrap(col as i64 - 1 + (row % 2) as i64, width), wrap(row as i64 + 1, height))
        };
        let sw = |col: usize, row: usize| {
            let below = wrap(row as i64 - 1, height);
            idx(wrap(col as i64 - (below % 2) as i64, width), below)
        };
        let se = |col: usize, row: usize| {
            let below = wrap(row as i64 - 1, height);
            idx(wrap(col as i64 + 1 - (below % 2) as i64, width), below)
        };
        for row in 0..height {
            for col in 0..width {
                neighbors.push([
                    idx(wrap(col as i64 + 1, width), row), // east
                    idx(wrap(col as i64 - 1, width), row), // west
                    ne(col, row),
                    sw(col, row),
                    nw(col, row),
                    se(col, row),
                ]);
            }
        }
        Ok(Self {
            width,
            height,
            positions,
            neighbors,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    /// Horizontal neighbour distance, in jumps. All six neighbour distances
    /// equal this spacing.
    pub fn spacing(&self) -> f64 {
        1.0
    }

    /// Node index from (column, row).
    pub fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col < self.width && row < self.height);
        row * self.width + col
    }

    /// (column, row) of a node index.
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.width, node / self.width)
    }

    /// Continuous position of a node, in jumps.
    pub fn position(&self, node: usize) -> [f64; 2] {
        self.positions[node]
    }

    /// The six neighbour indices of a node, ordered
    /// [east, west, north-east, south-west, north-west, south-east].
    pub fn neighbors(&self, node: usize) -> &[usize; 6] {
        &self.neighbors[node]
    }

    /// Extent of the periodic domain in jumps: `(width, height * sqrt(3)/2)`.
    pub fn extent(&self) -> [f64; 2] {
        [self.width as f64, self.height as f64 * ROW_PITCH]
    }

    /// Wrap a continuous position into the fundamental domain.
    pub fn wrap_position(&self, pos: [f64; 2]) -> [f64; 2] {
        let [ex, ey] = self.extent();
        [pos[0].rem_euclid(ex), pos[1].rem_euclid(ey)]
    }

    /// Minimum-image displacement from `from` to `to` on the torus.
    pub fn periodic_delta(&self, from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
        let [ex, ey] = self.extent();
        let mut dx = (to[0] - from[0]).rem_euclid(ex);
        let mut dy = (to[1] - from[1]).rem_euclid(ey);
        if dx > ex / 2.0 {
            dx -= ex;
        }
        if dy > ey / 2.0 {
            dy -= ey;
        }
        [dx, dy]
    }

    /// Index of the node nearest to a continuous position (periodic metric).
    /// Ties break toward the lowest node index.
    pub fn nearest_node(&self, pos: [f64; 2]) -> usize {
        let p = self.wrap_position(pos);
        let row_guess = (p[1] / ROW_PITCH).round() as i64;
        let mut best = 0usize;
        let mut best_d2 = f64::INFINITY;
        // Two candidate rows bracket the position; within each row two
        // candidate columns bracket it. Checking a 3x3 candidate block keeps
        // the parity offset and the periodic seam both correct.
        for dr in -1..=1 {
            let row = (row_guess + dr).rem_euclid(self.height as i64) as usize;
            let off = 0.5 * (row % 2) as f64;
            let col_guess = (p[0] - off).round() as i64;
            for dc in -1..=1 {
                let col = (col_guess + dc).rem_euclid(self.width as i64) as usize;
                let node = self.index(col, row);
                let d = self.periodic_delta(self.positions[node], p);
                let d2 = d[0] * d[0] + d[1] * d[1];
                if d2 < best_d2 - 1e-12 || (d2 < best_d2 + 1e-12 && node < best) {
                    best = node;
                    best_d2 = d2.min(best_d2);
                }
            }
        }
        best
    }
}

/// One velocity hypothesis: a (speed, direction) pair with its Cartesian
/// components cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub speed: f64,
    pub direction: f64,
    pub vx: f64,
    pub vy: f64,
}

/// Polar discretization of velocity space.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n_dirs: usize,
    n_speeds: usize,
    dtheta: f64,
    dr: f64,
    s_min: f64,
    channels: Vec<Channel>,
    volume: f64,
}

impl VelocityGrid {
    /// Build a polar velocity grid.
    ///
    /// Directions are equidistant starting at angle zero and must tile the
    /// full circle: `dtheta * n_dirs = 2 pi` within 1e-9. Speeds are
    /// `s_min, s_min + dr, ...`, all strictly positive. Channels are
    /// enumerated speed-major: `index = speed_index * n_dirs + dir_index`.
    pub fn polar(n_dirs: usize, n_speeds: usize, dtheta: f64, dr: f64, s_min: f64) -> Result<Self> {
        if n_dirs == 0 || n_speeds == 0 {
            return Err(Error::invalid("velocity grid needs at least one channel"));
        }
        if (dtheta * n_dirs as f64 - std::f64::consts::TAU).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "direction step {dtheta} rad times {n_dirs} directions does not cover the circle"
            )));
        }
        if dr <= 0.0 || s_min <= 0.0 {
            return Err(Error::invalid("speed step and slowest speed must be positive"));
        }
        let mut channels = Vec::with_capacity(n_dirs * n_speeds);
        for k in 0..n_speeds {
            let speed = s_min + k as f64 * dr;
            for d in 0..n_dirs {
                let direction = d as f64 * dtheta;
                channels.push(Channel {
                    speed,
                    direction,
                    vx: speed * direction.cos(),
                    vy: speed * direction.sin(),
                });
            }
        }
        let s_max = s_min + (n_speeds - 1) as f64 * dr;
        let inner = (s_min - dr / 2.0).max(0.0);
        let outer = s_max + dr / 2.0;
        let volume = std::f64::consts::PI * (outer * outer - inner * inner);
        Ok(Self {
            n_dirs,
            n_speeds,
            dtheta,
            dr,
            s_min,
            channels,
            volume,
        })
    }

    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    pub fn n_speeds(&self) -> usize {
        self.n_speeds
    }

    /// Total channel count `M`.
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_min + (self.n_speeds - 1) as f64 * self.dr
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, index: usize) -> Channel {
        self.channels[index]
    }

    /// Channel index from (speed index, direction index).
    pub fn channel_index(&self, speed_idx: usize, dir_idx: usize) -> usize {
        debug_assert!(speed_idx < self.n_speeds && dir_idx < self.n_dirs);
        speed_idx * self.n_dirs + dir_idx
    }

    /// (speed index, direction index) of a channel.
    pub fn channel_coords(&self, index: usize) -> (usize, usize) {
        (index / self.n_dirs, index % self.n_dirs)
    }

    /// Area of covered velocity space `|V|`, in jumps^2/s^2: the annulus
    /// between `s_min - dr/2` and `s_max + dr/2`. This equals the sum of the
    /// polar cell areas `s * dr * dtheta`, which is what makes the mean-flux
    /// normalization term of the forward equation mass-neutral.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Polar cell area `s * dr * dtheta` of one channel.
    pub fn cell_area(&self, index: usize) -> f64 {
        self.channels[index].speed * self.dr * self.dtheta
    }
}

/// Convenience constructor mirroring the named operation.
pub fn build_hex_lattice(width: usize, height: usize) -> Result<SpatialLattice> {
    SpatialLattice::hexagonal(width, height)
}

/// Convenience constructor mirroring the named operation.
pub fn build_velocity_grid(
    n_dirs: usize,
    n_speeds: usize,
    dtheta: f64,
    dr: f64,
    s_min: f64,
) -> Result<VelocityGrid> {
    VelocityGrid::polar(n_dirs, n_speeds, dtheta, dr, s_min)
}
