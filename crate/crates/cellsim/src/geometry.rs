//! Network geometry: hexagonal macro grid, sectors, remote radio units,
//! femto access points and user drops.
//!
//! All layout objects are immutable after construction; construction is
//! single-threaded per drop and all randomness comes from the caller's RNG.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Angle of `other` as seen from `self`, in degrees in (-180, 180].
    pub fn bearing_deg(&self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

/// Convex polygon region (vertices in counter-clockwise order).
#[derive(Debug, Clone)]
pub struct Region {
    vertices: Vec<Point>,
}

impl Region {
    /// Hexagon centered at `center` with the given circumradius.
    /// Vertices point at 30 + 60k degrees, so edge midpoints face the six
    /// lattice neighbors of a triangular grid with horizontal rows.
    pub fn hexagon(center: Point, circumradius: f64) -> Self {
        let vertices = (0..6)
            .map(|k| {
                let phi = (30.0 + 60.0 * k as f64).to_radians();
                Point::new(
                    center.x + circumradius * phi.cos(),
                    center.y + circumradius * phi.sin(),
                )
            })
            .collect();
        Region { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn contains(&self, p: Point) -> bool {
        // Convex polygon, CCW orientation: point must be left of every edge.
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if cross < 0.0 {
                return false;
            }
        }
        true
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        acc.abs() / 2.0
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Point {
        let (lo, hi) = self.bounding_box();
        loop {
            let p = Point::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
            );
            if self.contains(p) {
                return p;
            }
        }
    }
}

/// Identifier of a sector cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub usize);

/// Identifier of a femto access point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FemtoId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxPointKind {
    MacroCollocated,
    Rru,
    Femto,
}

/// One physical transmission point (collocated macro array, RRU or femto).
#[derive(Debug, Clone)]
pub struct TransmissionPoint {
    pub position: Point,
    pub n_antennas: usize,
    pub kind: TxPointKind,
    pub tx_power_w: f64,
}

/// A 120-degree sector served by one site.
#[derive(Debug, Clone)]
pub struct Cell {
    pub id: CellId,
    pub parent_site: usize,
    pub sector_orientation_deg: f64,
    pub tx_points: Vec<TransmissionPoint>,
}

impl Cell {
    /// Total transmit power over all of the cell's transmission points.
    pub fn total_power_w(&self) -> f64 {
        self.tx_points.iter().map(|tp| tp.tx_power_w).sum()
    }

    pub fn total_antennas(&self) -> usize {
        self.tx_points.iter().map(|tp| tp.n_antennas).sum()
    }
}

#[derive(Debug, Clone)]
pub struct FemtoAp {
    pub id: FemtoId,
    pub position: Point,
    pub n_antennas: usize,
    pub tx_power_w: f64,
}

/// Immutable network layout: sites, sector cells, RRUs and femto APs.
#[derive(Debug, Clone)]
pub struct NetworkLayout {
    pub sites: Vec<Point>,
    pub cells: Vec<Cell>,
    pub rrus_per_cell: usize,
    pub femtos: Vec<FemtoAp>,
    pub region: Region,
    pub inter_site_distance: f64,
}

impl NetworkLayout {
    /// Cell radius, defined as the circumradius of a site's hexagonal footprint.
    pub fn cell_radius(&self) -> f64 {
        self.inter_site_distance / 3f64.sqrt()
    }

    /// Hexagonal footprint of one site (covers its three sectors).
    pub fn site_hexagon(&self, site: usize) -> Region {
        Region::hexagon(self.sites[site], self.cell_radius())
    }

    /// Footprint of the innermost site; experiments measure these three cells.
    pub fn center_site_region(&self) -> Region {
        self.site_hexagon(0)
    }

    /// True if `p` lies in the angular sector and hexagonal footprint of `cell`.
    pub fn sector_contains(&self, cell: &Cell, p: Point) -> bool {
        let site = self.sites[cell.parent_site];
        if !self.site_hexagon(cell.parent_site).contains(p) {
            return false;
        }
        if site.distance(p) == 0.0 {
            // The site position itself belongs to sector 0 by convention.
            return cell.sector_orientation_deg == 0.0;
        }
        let bearing = site.bearing_deg(p);
        angle_offset_deg(bearing, cell.sector_orientation_deg).abs() <= 60.0
    }
}

/// Absolute angular offset between two bearings, wrapped to [-180, 180].
pub fn angle_offset_deg(bearing_deg: f64, reference_deg: f64) -> f64 {
    let mut d = bearing_deg - reference_deg;
    while d > 180.0 {
        d -= 360.0;
    }
    while d < -180.0 {
        d += 360.0;
    }
    d
}

/// Parameters for [`build_hex_grid`].
#[derive(Debug, Clone)]
pub struct GridParams {
    pub rings: usize,
    pub isd_m: f64,
    /// Fraction of the cell radius at which RRUs are placed.
    pub rru_fraction: f64,
    /// 0 (centralized) or 2 RRUs per sector cell.
    pub rrus_per_cell: usize,
    /// Total transmit antennas per cell, split between the collocated array
    /// and the RRUs.
    pub antennas_per_cell: usize,
    pub rru_antennas: usize,
    /// Total radiated power per cell; split across transmission points in
    /// proportion to their antenna counts.
    pub cell_power_w: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            rings: 0,
            isd_m: 500.0,
            rru_fraction: 2.0 / 3.0,
            rrus_per_cell: 0,
            antennas_per_cell: 1,
            rru_antennas: 2,
            cell_power_w: dbm_to_watt(46.0),
        }
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Number of sites in a hexagonal grid with the given number of rings.
pub fn hex_site_count(rings: usize) -> usize {
    1 + 3 * rings * (rings + 1)
}

/// Angular offsets of the RRUs from the sector bisector, in degrees.
const RRU_AZIMUTH_OFFSETS_DEG: [f64; 2] = [-36.0, 36.0];

/// Builds the sectorized hexagonal macro grid.
///
/// Each site serves three 120-degree sectors oriented at 0/120/240 degrees.
/// With `rrus_per_cell = 2`, each sector additionally gets two RRUs on the
/// sector bisector +/- 36 degrees at `rru_fraction` of the cell radius, and
/// the cell power budget is split across transmission points in proportion
/// to their antenna counts.
pub fn build_hex_grid(params: &GridParams) -> Result<NetworkLayout> {
    if params.isd_m <= 0.0 {
        return Err(Error::invalid("inter-site distance must be positive"));
    }
    if params.cell_power_w <= 0.0 {
        return Err(Error::invalid("cell power must be positive"));
    }
    if !(params.rru_fraction > 0.0 && params.rru_fraction < 1.0) {
        return Err(Error::invalid("rru_fraction must lie in (0, 1)"));
    }
    if params.antennas_per_cell == 0 {
        return Err(Error::invalid("antennas_per_cell must be at least 1"));
    }
    if params.rrus_per_cell != 0 && params.rrus_per_cell != 2 {
        return Err(Error::invalid("rrus_per_cell must be 0 or 2"));
    }
    let rru_total = params.rrus_per_cell * params.rru_antennas;
    if params.rrus_per_cell > 0 {
        if params.rru_antennas == 0 {
            return Err(Error::invalid("rru_antennas must be at least 1"));
        }
        if rru_total >= params.antennas_per_cell {
            return Err(Error::invalid(
                "RRU antennas must leave at least one collocated antenna",
            ));
        }
    }

    let sites = hex_sites(params.rings, params.isd_m);
    let cell_radius = params.isd_m / 3f64.sqrt();
    let rru_distance = params.rru_fraction * cell_radius;
    let collocated = params.antennas_per_cell - rru_total;
    let power_per_antenna = params.cell_power_w / params.antennas_per_cell as f64;

    let mut cells = Vec::with_capacity(sites.len() * 3);
    for (s, &site) in sites.iter().enumerate() {
        for sector in 0..3 {
            let orientation = 120.0 * sector as f64;
            let mut tx_points = vec![TransmissionPoint {
                position: site,
                n_antennas: collocated,
                kind: TxPointKind::MacroCollocated,
                tx_power_w: power_per_antenna * collocated as f64,
            }];
            for k in 0..params.rrus_per_cell {
                let az = (orientation + RRU_AZIMUTH_OFFSETS_DEG[k]).to_radians();
                tx_points.push(TransmissionPoint {
                    position: Point::new(
                        site.x + rru_distance * az.cos(),
                        site.y + rru_distance * az.sin(),
                    ),
                    n_antennas: params.rru_antennas,
                    kind: TxPointKind::Rru,
                    tx_power_w: power_per_antenna * params.rru_antennas as f64,
                });
            }
            cells.push(Cell {
                id: CellId(3 * s + sector),
                parent_site: s,
                sector_orientation_deg: orientation,
                tx_points,
            });
        }
    }

    let region = Region::hexagon(
        Point::new(0.0, 0.0),
        (params.rings as f64 + 1.0) * params.isd_m,
    );

    Ok(NetworkLayout {
        sites,
        cells,
        rrus_per_cell: params.rrus_per_cell,
        femtos: Vec::new(),
        region,
        inter_site_distance: params.isd_m,
    })
}

/// Site positions ring by ring; within a ring the walk starts at the +x
/// neighbor and proceeds counter-clockwise, so ordering is deterministic.
fn hex_sites(rings: usize, isd: f64) -> Vec<Point> {
    let mut sites = vec![Point::new(0.0, 0.0)];
    let dirs: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let phi = (60.0 * k as f64).to_radians();
            (isd * phi.cos(), isd * phi.sin())
        })
        .collect();
    for r in 1..=rings {
        // Start at r steps along direction 0, then walk each of the six edges.
        let mut x = dirs[0].0 * r as f64;
        let mut y = dirs[0].1 * r as f64;
        for edge in 0..6 {
            let step = dirs[(edge + 2) % 6];
            for _ in 0..r {
                sites.push(Point::new(x, y));
                x += step.0;
                y += step.1;
            }
        }
    }
    sites
}

/// Static per-user parameters shared by a drop.
#[derive(Debug, Clone, Copy)]
pub struct UserProfile {
    pub velocity_kmh: f64,
    pub n_rx_antennas: usize,
}

impl Default for UserProfile {
    fn default() -> Self {
        UserProfile {
            velocity_kmh: 3.0,
            n_rx_antennas: 1,
        }
    }
}

/// Serving point a user is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    Cell(CellId),
    Femto(FemtoId),
}

#[derive(Debug, Clone)]
pub struct User {
    pub id: usize,
    pub position: Point,
    pub velocity_kmh: f64,
    pub n_rx_antennas: usize,
    pub attachment: Option<Attachment>,
}

#[derive(Debug, Clone)]
pub struct UserDrop {
    pub users: Vec<User>,
}

impl UserProfile {
    fn validate(&self) -> Result<()> {
        if self.velocity_kmh < 0.0 {
            return Err(Error::invalid("velocity must be non-negative"));
        }
        if self.n_rx_antennas == 0 {
            return Err(Error::invalid("users need at least one receive antenna"));
        }
        Ok(())
    }
}

impl UserDrop {
    fn from_points(points: Vec<Point>, profile: &UserProfile) -> Self {
        UserDrop {
            users: points
                .into_iter()
                .enumerate()
                .map(|(id, position)| User {
                    id,
                    position,
                    velocity_kmh: profile.velocity_kmh,
                    n_rx_antennas: profile.n_rx_antennas,
                    attachment: None,
                })
                .collect(),
        }
    }
}

/// Drops `count` users uniformly over the center site's footprint.
pub fn drop_users_uniform(
    layout: &NetworkLayout,
    count: usize,
    profile: &UserProfile,
    rng: &mut impl Rng,
) -> Result<UserDrop> {
    if count == 0 {
        return Err(Error::invalid("user count must be at least 1"));
    }
    profile.validate()?;
    let region = layout.center_site_region();
    let points = (0..count).map(|_| region.sample_uniform(rng)).collect();
    Ok(UserDrop::from_points(points, profile))
}

/// Drops `count` users uniformly inside one sector cell's footprint and
/// attaches them to that cell.
pub fn drop_users_in_sector(
    layout: &NetworkLayout,
    cell: CellId,
    count: usize,
    profile: &UserProfile,
    rng: &mut impl Rng,
) -> Result<UserDrop> {
    if count == 0 {
        return Err(Error::invalid("user count must be at least 1"));
    }
    profile.validate()?;
    let cell_ref = layout
        .cells
        .get(cell.0)
        .ok_or_else(|| Error::invalid(format!("no such cell {}", cell.0)))?;
    let hex = layout.site_hexagon(cell_ref.parent_site);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let p = hex.sample_uniform(rng);
        if layout.sector_contains(cell_ref, p) {
            points.push(p);
        }
    }
    let mut drop = UserDrop::from_points(points, profile);
    for u in &mut drop.users {
        u.attachment = Some(Attachment::Cell(cell));
    }
    Ok(drop)
}

/// Homogeneous Poisson point process on `region` with the given density.
pub fn drop_poisson(region: &Region, density_per_m2: f64, rng: &mut impl Rng) -> Result<Vec<Point>> {
    if density_per_m2 < 0.0 {
        return Err(Error::invalid("Poisson density must be non-negative"));
    }
    let mean = density_per_m2 * region.area();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let n = Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    Ok((0..n).map(|_| region.sample_uniform(rng)).collect())
}

/// Matern-style cluster drop: fixed-count parent centers uniform on the
/// region, children uniform in a disc around their parent. Children falling
/// outside the region are resampled within the disc, so the total user count
/// is exactly `n_clusters * users_per_cluster`.
pub fn drop_user_clusters(
    region: &Region,
    n_clusters: usize,
    users_per_cluster: usize,
    cluster_radius_m: f64,
    profile: &UserProfile,
    rng: &mut impl Rng,
) -> Result<(UserDrop, Vec<Point>)> {
    if n_clusters == 0 || users_per_cluster == 0 {
        return Err(Error::invalid("cluster counts must be at least 1"));
    }
    if cluster_radius_m <= 0.0 {
        return Err(Error::invalid("cluster radius must be positive"));
    }
    profile.validate()?;
    let centers: Vec<Point> = (0..n_clusters).map(|_| region.sample_uniform(rng)).collect();
    let mut points = Vec::with_capacity(n_clusters * users_per_cluster);
    for &center in &centers {
        for _ in 0..users_per_cluster {
            let mut child = center;
            for _ in 0..1_000_000 {
                let r = cluster_radius_m * rng.random::<f64>().sqrt();
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let candidate = Point::new(center.x + r * phi.cos(), center.y + r * phi.sin());
                if region.contains(candidate) {
                    child = candidate;
                    break;
                }
            }
            points.push(child);
        }
    }
    Ok((UserDrop::from_points(points, profile), centers))
}

/// Places femto APs on the first `n_femto` cluster centers, in index order.
pub fn place_femtos_at_centers(
    layout: &NetworkLayout,
    centers: &[Point],
    n_femto: usize,
    femto_power_w: f64,
) -> Result<NetworkLayout> {
    if n_femto > centers.len() {
        return Err(Error::invalid(format!(
            "cannot place {n_femto} femtos on {} centers",
            centers.len()
        )));
    }
    let mut out = layout.clone();
    out.femtos = centers[..n_femto]
        .iter()
        .enumerate()
        .map(|(i, &position)| FemtoAp {
            id: FemtoId(i),
            position,
            n_antennas: 1,
            tx_power_w: femto_power_w,
        })
        .collect();
    Ok(out)
}

/// Candidate serving point in a fixed deterministic order: all cells by id,
/// then all femtos by id. Ties in received power resolve to the earliest
/// entry, i.e. the lowest id of the earliest kind.
#[derive(Debug, Clone)]
pub struct ReceivedPowerMap {
    pub points: Vec<Attachment>,
    /// `power_dbm[user][point]`, average received power without fast fading.
    pub power_dbm: Vec<Vec<f64>>,
}

/// Attaches every user to the strongest serving point by average received
/// power (pathloss + shadowing, no fast fading).
pub fn attach_users(drop: &UserDrop, powers: &ReceivedPowerMap) -> UserDrop {
    let mut out = drop.clone();
    for user in &mut out.users {
        let row = &powers.power_dbm[user.id];
        debug_assert_eq!(row.len(), powers.points.len());
        let mut best = 0usize;
        for (i, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = i;
            }
        }
        user.attachment = Some(powers.points[best]);
    }
    out
}
