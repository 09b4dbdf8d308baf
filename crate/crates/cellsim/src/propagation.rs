//! Link quality models: distance-dependent pathloss, log-normal shadowing,
//! sector antenna pattern, temporally correlated small-scale fading and the
//! wideband SNR of a link.
//!
//! Everything here is a pure function over immutable inputs plus an explicit
//! RNG, so links and drops can be evaluated in parallel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{
    watt_to_dbm, Attachment, NetworkLayout, Point, ReceivedPowerMap, TxPointKind, UserDrop,
};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Macro,
    Femto,
}

/// Propagation constants. The macro model is the standard 2 GHz
/// `128.1 + 37.6 log10(d_km)` urban formula; femto links add a fixed wall
/// loss to represent indoor deployment. All values are config-overridable.
#[derive(Debug, Clone)]
pub struct PropagationParams {
    pub macro_shadowing_std_db: f64,
    pub femto_shadowing_std_db: f64,
    pub wall_loss_db: f64,
    pub carrier_hz: f64,
    pub tti_s: f64,
    /// 3 dB beamwidth of the sector antenna pattern, degrees.
    pub pattern_beamwidth_deg: f64,
    /// Front-to-back attenuation cap of the pattern, dB.
    pub pattern_max_attenuation_db: f64,
    /// Distances below this floor are treated as being at the floor.
    pub min_distance_m: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            macro_shadowing_std_db: 8.0,
            femto_shadowing_std_db: 4.0,
            wall_loss_db: 10.0,
            carrier_hz: 2.1e9,
            tti_s: 1e-3,
            pattern_beamwidth_deg: 70.0,
            pattern_max_attenuation_db: 20.0,
            min_distance_m: 10.0,
        }
    }
}

impl PropagationParams {
    pub fn shadowing_std_db(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Macro => self.macro_shadowing_std_db,
            LinkKind::Femto => self.femto_shadowing_std_db,
        }
    }
}

/// Distance-dependent pathloss in dB, floored at `min_distance_m`.
pub fn pathloss_db(distance_m: f64, kind: LinkKind, params: &PropagationParams) -> Result<f64> {
    if distance_m <= 0.0 {
        return Err(Error::invalid("pathloss distance must be positive"));
    }
    let d_km = distance_m.max(params.min_distance_m) / 1000.0;
    Ok(match kind {
        LinkKind::Macro => 128.1 + 37.6 * d_km.log10(),
        LinkKind::Femto => 127.0 + 30.0 * d_km.log10() + params.wall_loss_db,
    })
}

/// Parabolic sector antenna gain relative to boresight, in dB (non-positive).
pub fn sector_gain_db(offset_deg: f64, params: &PropagationParams) -> f64 {
    let a = 12.0 * (offset_deg / params.pattern_beamwidth_deg).powi(2);
    -a.min(params.pattern_max_attenuation_db)
}

/// One zero-mean log-normal shadowing sample in dB.
pub fn shadowing_sample(std_db: f64, rng: &mut impl Rng) -> f64 {
    if std_db == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std_db).unwrap().sample(rng)
}

/// Clarke/Jakes temporal correlation of the channel between consecutive TTIs:
/// `rho = J0(2 pi f_d T)` clipped to [0, 1], with Doppler `f_d` from the user
/// velocity.
pub fn doppler_correlation(velocity_kmh: f64, carrier_hz: f64, tti_s: f64) -> f64 {
    let doppler_hz = velocity_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT;
    let x = std::f64::consts::TAU * doppler_hz * tti_s;
    libm::j0(x).clamp(0.0, 1.0)
}

/// Per-TTI, per-resource-block channel matrices for one link.
///
/// Entries evolve as a first-order autoregressive complex Gaussian process
/// across TTIs with per-entry stationary power 1; resource blocks, antennas
/// and links are mutually independent. An optional receive correlation
/// coefficient colors the rows.
#[derive(Debug, Clone)]
pub struct FadingTrace {
    n_tti: usize,
    n_rb: usize,
    pub rho: f64,
    matrices: Vec<DMatrix<Complex64>>,
}

impl FadingTrace {
    pub fn n_tti(&self) -> usize {
        self.n_tti
    }

    pub fn n_rb(&self) -> usize {
        self.n_rb
    }

    pub fn at(&self, tti: usize, rb: usize) -> &DMatrix<Complex64> {
        &self.matrices[tti * self.n_rb + rb]
    }
}

/// Dimensions and correlation structure for [`generate_fading_with`].
#[derive(Debug, Clone, Copy)]
pub struct FadingSpec {
    pub n_tti: usize,
    pub n_rb: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    pub rho: f64,
    /// Receive antenna correlation coefficient (exponential model), 0 = i.i.d.
    pub rx_correlation: f64,
}

pub fn generate_fading(
    n_tti: usize,
    n_rb: usize,
    n_rx: usize,
    n_tx: usize,
    rho: f64,
    rng: &mut impl Rng,
) -> Result<FadingTrace> {
    generate_fading_with(
        FadingSpec {
            n_tti,
            n_rb,
            n_rx,
            n_tx,
            rho,
            rx_correlation: 0.0,
        },
        rng,
    )
}

pub fn generate_fading_with(spec: FadingSpec, rng: &mut impl Rng) -> Result<FadingTrace> {
    if spec.n_tti == 0 || spec.n_rb == 0 || spec.n_rx == 0 || spec.n_tx == 0 {
        return Err(Error::invalid("fading dimensions must be at least 1"));
    }
    if !(0.0..=1.0).contains(&spec.rho) {
        return Err(Error::invalid("temporal correlation must lie in [0, 1]"));
    }
    if !(0.0..1.0).contains(&spec.rx_correlation) {
        return Err(Error::invalid("receive correlation must lie in [0, 1)"));
    }
    let innovation = (1.0 - spec.rho * spec.rho).sqrt();
    let coloring = rx_coloring(spec.n_rx, spec.rx_correlation);

    let mut state: Vec<DMatrix<Complex64>> = (0..spec.n_rb)
        .map(|_| complex_gaussian_matrix(spec.n_rx, spec.n_tx, rng))
        .collect();
    let mut matrices = Vec::with_capacity(spec.n_tti * spec.n_rb);
    for t in 0..spec.n_tti {
        for rb in 0..spec.n_rb {
            if t > 0 {
                let w = complex_gaussian_matrix(spec.n_rx, spec.n_tx, rng);
                let prev = &state[rb];
                state[rb] = prev * Complex64::new(spec.rho, 0.0)
                    + w * Complex64::new(innovation, 0.0);
            }
            let colored = match &coloring {
                Some(c) => c * &state[rb],
                None => state[rb].clone(),
            };
            matrices.push(colored);
        }
    }
    Ok(FadingTrace {
        n_tti: spec.n_tti,
        n_rb: spec.n_rb,
        rho: spec.rho,
        matrices,
    })
}

/// Square root of the exponential receive correlation matrix, or `None` for
/// the i.i.d. case.
fn rx_coloring(n_rx: usize, corr: f64) -> Option<DMatrix<Complex64>> {
    if corr == 0.0 || n_rx == 1 {
        return None;
    }
    let r = DMatrix::from_fn(n_rx, n_rx, |i, j| {
        Complex64::new(corr.powi((i as i32 - j as i32).abs()), 0.0)
    });
    // Symmetric PSD square root via eigendecomposition of the real part.
    let real = nalgebra::DMatrix::<f64>::from_fn(n_rx, n_rx, |i, j| r[(i, j)].re);
    let eig = nalgebra::SymmetricEigen::new(real);
    let mut sqrt = nalgebra::DMatrix::<f64>::zeros(n_rx, n_rx);
    for k in 0..n_rx {
        let lambda = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..n_rx {
            for j in 0..n_rx {
                sqrt[(i, j)] += lambda * v[i] * v[j];
            }
        }
    }
    Some(DMatrix::from_fn(n_rx, n_rx, |i, j| {
        Complex64::new(sqrt[(i, j)], 0.0)
    }))
}

/// Unit-power complex Gaussian matrix (variance 1/2 per real dimension).
pub fn complex_gaussian_matrix(
    n_rows: usize,
    n_cols: usize,
    rng: &mut impl Rng,
) -> DMatrix<Complex64> {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    DMatrix::from_fn(n_rows, n_cols, |_, _| {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    })
}

/// Linear wideband SNR from transmit power, total losses and noise power.
pub fn wideband_snr(tx_power_w: f64, total_loss_db: f64, noise_power_w: f64) -> f64 {
    tx_power_w * 10f64.powf(-total_loss_db / 10.0) / noise_power_w
}

/// Average link state of one (user, transmission point) pair.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub user: usize,
    pub tx_point: usize,
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    /// Sector antenna gain (non-positive; 0 for omnidirectional points).
    pub antenna_gain_db: f64,
    pub tx_power_w: f64,
    pub wideband_snr: f64,
}

impl LinkState {
    pub fn total_loss_db(&self) -> f64 {
        self.pathloss_db + self.shadowing_db - self.antenna_gain_db
    }

    /// Received power in dBm implied by the stored losses.
    pub fn received_power_dbm(&self) -> f64 {
        watt_to_dbm(self.tx_power_w) - self.total_loss_db()
    }

    /// Checks the internal SNR against the stored losses and the given noise.
    pub fn snr_consistent(&self, noise_power_w: f64, tol: f64) -> bool {
        let recomputed = wideband_snr(self.tx_power_w, self.total_loss_db(), noise_power_w);
        (recomputed - self.wideband_snr).abs() <= tol * recomputed.abs().max(1e-300)
    }
}

/// Per-user shadowing field: one draw per physical transmission-point
/// position, so collocated sector antennas of one site share the same
/// shadowing (identical propagation path) while spatially distinct points
/// fade independently.
pub struct ShadowField {
    entries: Vec<(Point, f64)>,
}

impl ShadowField {
    pub fn new() -> Self {
        ShadowField {
            entries: Vec::new(),
        }
    }

    pub fn sample(&mut self, position: Point, std_db: f64, rng: &mut impl Rng) -> f64 {
        for (p, s) in &self.entries {
            if *p == position {
                return *s;
            }
        }
        let s = shadowing_sample(std_db, rng);
        self.entries.push((position, s));
        s
    }
}

impl Default for ShadowField {
    fn default() -> Self {
        Self::new()
    }
}

/// Average received power per (user, serving point) over a layout, including
/// pathloss, per-path shadowing and the sector pattern. The point order is
/// all cells by id, then all femtos by id, matching the attachment tie rule.
pub fn received_power_map(
    layout: &NetworkLayout,
    drop: &UserDrop,
    params: &PropagationParams,
    rng: &mut impl Rng,
) -> ReceivedPowerMap {
    let mut points = Vec::with_capacity(layout.cells.len() + layout.femtos.len());
    for cell in &layout.cells {
        points.push(Attachment::Cell(cell.id));
    }
    for femto in &layout.femtos {
        points.push(Attachment::Femto(femto.id));
    }

    let mut power_dbm = Vec::with_capacity(drop.users.len());
    for user in &drop.users {
        let mut shadows = ShadowField::new();
        let mut row = Vec::with_capacity(points.len());
        for point in &points {
            let p = match point {
                Attachment::Cell(id) => {
                    let cell = &layout.cells[id.0];
                    // Total average power over the cell's transmission points.
                    let mut linear = 0.0;
                    for tp in &cell.tx_points {
                        let pl = pathloss_db(
                            tp.position.distance(user.position).max(1e-3),
                            LinkKind::Macro,
                            params,
                        )
                        .expect("positive distance");
                        let gain = match tp.kind {
                            TxPointKind::MacroCollocated => {
                                let bearing = tp.position.bearing_deg(user.position);
                                sector_gain_db(
                                    crate::geometry::angle_offset_deg(
                                        bearing,
                                        cell.sector_orientation_deg,
                                    ),
                                    params,
                                )
                            }
                            _ => 0.0,
                        };
                        let shadow =
                            shadows.sample(tp.position, params.macro_shadowing_std_db, rng);
                        linear += tp.tx_power_w * 10f64.powf((gain - pl - shadow) / 10.0);
                    }
                    watt_to_dbm(linear)
                }
                Attachment::Femto(id) => {
                    let femto = &layout.femtos[id.0];
                    let pl = pathloss_db(
                        femto.position.distance(user.position).max(1e-3),
                        LinkKind::Femto,
                        params,
                    )
                    .expect("positive distance");
                    let shadow =
                        shadows.sample(femto.position, params.femto_shadowing_std_db, rng);
                    watt_to_dbm(femto.tx_power_w) - pl - shadow
                }
            };
            row.push(p);
        }
        power_dbm.push(row);
    }
    ReceivedPowerMap { points, power_dbm }
}


#[cfg(test)]
mod attachment_tests {
    use super::*;
    use crate::geometry::{
        attach_users, build_hex_grid, drop_users_uniform, place_femtos_at_centers, Attachment,
        CellId, FemtoId, GridParams, UserProfile,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_macro_cell_attracts_everyone() {
        let layout = build_hex_grid(&GridParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let drop = drop_users_uniform(&layout, 20, &UserProfile::default(), &mut rng).unwrap();
        let powers = received_power_map(&layout, &drop, &PropagationParams::default(), &mut rng);
        let attached = attach_users(&drop, &powers);
        for user in &attached.users {
            assert!(matches!(user.attachment, Some(Attachment::Cell(_))));
        }
    }

    /// Derived received-power comparison: a user collocated with an
    /// open-access femto AP attaches to it. At the distance floor the femto
    /// link budget is 20 dBm - 77 dB = -57 dBm, while the macro link from
    /// hundreds of meters away is tens of dB weaker.
    #[test]
    fn collocated_femto_wins_attachment() {
        let layout = build_hex_grid(&GridParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let mut drop = drop_users_uniform(&layout, 1, &UserProfile::default(), &mut rng).unwrap();
        // Place the user (and its femto) near the cell edge: the macro link
        // budget is 46 dBm - 107 dB ~ -61 dBm there, the collocated femto
        // 20 dBm - (127 - 60 + 10) dB = -57 dBm. Shadowing is zeroed so the
        // comparison is the deterministic link-budget one.
        let position = crate::geometry::Point::new(270.0, 20.0);
        drop.users[0].position = position;
        let layout = place_femtos_at_centers(
            &layout,
            &[position],
            1,
            crate::geometry::dbm_to_watt(20.0),
        )
        .unwrap();
        let params = PropagationParams {
            macro_shadowing_std_db: 0.0,
            femto_shadowing_std_db: 0.0,
            ..PropagationParams::default()
        };
        let powers = received_power_map(&layout, &drop, &params, &mut rng);
        let attached = attach_users(&drop, &powers);
        assert_eq!(attached.users[0].attachment, Some(Attachment::Femto(FemtoId(0))));
        // Sanity: the macro link would have been chosen without the femto.
        let cell_power = powers.power_dbm[0][0..layout.cells.len()]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let femto_power = powers.power_dbm[0][layout.cells.len()];
        assert!(femto_power > cell_power);
        let _ = CellId(0);
    }
}
