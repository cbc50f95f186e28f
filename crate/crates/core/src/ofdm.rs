//! MU-MIMO-OFDM downlink model: tone plans, Rayleigh multi-tap channels,
//! the unitary frequency/time mapping, per-tone least-squares precoding,
//! and a binary container for replaying channels and symbol grids.
//!
//! Tone indices are 0-based and unshifted: tone 0 is the DC bin, tone `w`
//! has normalized frequency `w/W`.

use std::io::{Read, Write};
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, CMatrix};
use crate::rng::{complex_normal_matrix, stream_rng, Stream};
use crate::scalar::{count, Real, C};
use crate::solvers::LinearSystem;

/// How the used-tone set is chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanProfile {
    /// LTE 20 MHz style: 1200 of 2048 tones, scaled proportionally for
    /// other `W`, split evenly around a nulled DC bin.
    Lte20,
    /// `n` tones split around a nulled DC bin (the extra one on the
    /// positive side when `n` is odd).
    Centered(usize),
    Custom(Vec<usize>),
}

/// Partition of `W` tones into used (`Ω`) and unused (`Ωᶜ`) sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TonePlan {
    w: usize,
    used: Vec<usize>,
    unused: Vec<usize>,
}

impl TonePlan {
    pub fn new(w: usize, profile: &PlanProfile) -> Result<Self> {
        if w < 2 {
            return Err(Error::Config(format!("need at least 2 tones, got {w}")));
        }
        let used = match profile {
            PlanProfile::Lte20 => centered(w, 2 * (600 * w / 2048))?,
            PlanProfile::Centered(n) => centered(w, *n)?,
            PlanProfile::Custom(set) => {
                if let Some(bad) = set.iter().find(|&&t| t >= w) {
                    return Err(Error::Config(format!("tone {bad} outside 0..{w}")));
                }
                let mut s = set.clone();
                s.sort_unstable();
                s.dedup();
                s
            }
        };
        if used.is_empty() {
            return Err(Error::Config("tone plan has no used tones".into()));
        }
        let mut mask = vec![false; w];
        used.iter().for_each(|&t| mask[t] = true);
        let unused = (0..w).filter(|&t| !mask[t]).collect();
        Ok(Self { w, used, unused })
    }

    pub fn num_tones(&self) -> usize {
        self.w
    }

    pub fn used(&self) -> &[usize] {
        &self.used
    }

    pub fn unused(&self) -> &[usize] {
        &self.unused
    }

    pub fn is_used(&self, tone: usize) -> bool {
        self.used.binary_search(&tone).is_ok()
    }
}

fn centered(w: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > w - 1 {
        return Err(Error::Config(format!(
            "{n} used tones do not fit around DC in {w} tones"
        )));
    }
    let pos = n.div_ceil(2);
    let neg = n / 2;
    Ok((1..=pos).chain(w - neg..w).collect())
}

/// Builds a tone plan; see [`PlanProfile`].
pub fn make_tone_plan(w: usize, profile: &PlanProfile) -> Result<TonePlan> {
    TonePlan::new(w, profile)
}

/// Shape and statistics of a Rayleigh channel draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDims {
    /// BS antennas.
    pub b: usize,
    /// Single-antenna users.
    pub u: usize,
    pub w: usize,
    pub taps: usize,
    /// Draw taps with unit variance instead of `1/L`.
    pub unit_tap_variance: bool,
}

impl ChannelDims {
    pub fn new(b: usize, u: usize, w: usize, taps: usize) -> Self {
        Self {
            b,
            u,
            w,
            taps,
            unit_tap_variance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u == 0 || self.b == 0 || self.w == 0 || self.taps == 0 {
            return Err(Error::Config("channel dimensions must be positive".into()));
        }
        if self.u >= self.b {
            return Err(Error::Config(format!(
                "need fewer users than antennas, got U={} B={}",
                self.u, self.b
            )));
        }
        if self.taps > self.w {
            return Err(Error::Config(format!(
                "{} taps exceed {} tones",
                self.taps, self.w
            )));
        }
        Ok(())
    }

    fn tap_variance(&self) -> f64 {
        if self.unit_tap_variance {
            1.0
        } else {
            1.0 / self.taps as f64
        }
    }
}

/// Time-domain taps `H_t` (U×B) and their per-tone frequency response
/// `H_w = Σ_t H_t·exp(−2πi·w·t/W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<T> {
    w: usize,
    taps: Vec<CMatrix<T>>,
    freq: Vec<CMatrix<T>>,
}

impl<T: Real> ChannelRealization<T> {
    /// Builds the frequency response of `taps` over `w` tones.
    pub fn from_taps(taps: Vec<CMatrix<T>>, w: usize) -> Result<Self> {
        let first = taps
            .first()
            .ok_or_else(|| Error::Config("channel needs at least one tap".into()))?;
        let (u, b) = (first.rows(), first.cols());
        if taps.iter().any(|t| t.rows() != u || t.cols() != b) {
            return Err(Error::Dimension("taps differ in shape".into()));
        }
        if taps.len() > w {
            return Err(Error::Config(format!("{} taps exceed {w} tones", taps.len())));
        }
        let freq = (0..w).map(|tone| tone_response(&taps, tone, w)).collect();
        Ok(Self { w, taps, freq })
    }

    pub fn users(&self) -> usize {
        self.taps[0].rows()
    }

    pub fn antennas(&self) -> usize {
        self.taps[0].cols()
    }

    pub fn num_tones(&self) -> usize {
        self.w
    }

    pub fn taps(&self) -> &[CMatrix<T>] {
        &self.taps
    }

    /// `H_w` for tone `w` (0-based).
    pub fn response(&self, tone: usize) -> &CMatrix<T> {
        &self.freq[tone]
    }

    pub fn responses(&self) -> &[CMatrix<T>] {
        &self.freq
    }

    /// Largest entry-wise deviation between the stored response and a fresh
    /// evaluation of the tap sum.
    pub fn consistency_error(&self) -> T {
        self.freq
            .iter()
            .enumerate()
            .map(|(tone, h)| {
                let fresh = tone_response(&self.taps, tone, self.w);
                h.as_slice()
                    .iter()
                    .zip(fresh.as_slice())
                    .map(|(a, b)| (a - b).norm())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max)
    }

    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let (u, b) = (self.users(), self.antennas());
        let data = self.taps.iter().flat_map(|t| t.as_slice().iter().copied());
        Container::write(out, ContainerKind::ChannelTaps, self.w, &[self.taps.len(), u, b], data)
    }

    pub fn read_from(input: impl Read) -> Result<Self> {
        let c = Container::<T>::read(input, ContainerKind::ChannelTaps)?;
        let [l, u, b] = c.dims[..] else {
            return Err(Error::Format(format!("channel container has rank {}", c.dims.len())));
        };
        let taps = c
            .data
            .chunks_exact(u * b)
            .map(|chunk| CMatrix::from_row_major(u, b, chunk.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        debug_assert_eq!(taps.len(), l);
        Self::from_taps(taps, c.tones)
    }
}

fn tone_response<T: Real>(taps: &[CMatrix<T>], tone: usize, w: usize) -> CMatrix<T> {
    let mut h = taps[0].clone();
    for (t, tap) in taps.iter().enumerate().skip(1) {
        let phase = -T::TAU() * count::<T>((tone * t) % w) / count::<T>(w);
        let rot = C::from_polar(T::one(), phase);
        for (hv, tv) in h.as_mut_slice().iter_mut().zip(tap.as_slice()) {
            *hv += tv * rot;
        }
    }
    h
}

/// Draws `L` i.i.d. `CN(0, 1/L)` tap matrices (unit variance with
/// `unit_tap_variance`) from `rng`.
pub fn gen_channel_with<T: Real, R: Rng + ?Sized>(
    dims: &ChannelDims,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    dims.validate()?;
    let var = dims.tap_variance();
    let taps = (0..dims.taps)
        .map(|_| complex_normal_matrix(rng, dims.u, dims.b, var))
        .collect();
    ChannelRealization::from_taps(taps, dims.w)
}

/// Channel draw from the [`Stream::Channel`] stream of `(seed, trial 0)`.
pub fn gen_channel<T: Real>(dims: &ChannelDims, seed: u64) -> Result<ChannelRealization<T>> {
    gen_channel_with(dims, &mut stream_rng(seed, 0, Stream::Channel))
}

/// Square QAM alphabets with unit average symbol energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constellation {
    Qpsk,
    Qam16,
}

impl Constellation {
    /// Per-dimension amplitude levels.
    fn levels(self) -> Vec<f64> {
        match self {
            Constellation::Qpsk => vec![-1.0, 1.0],
            Constellation::Qam16 => vec![-3.0, -1.0, 1.0, 3.0],
        }
    }

    fn scale(self) -> f64 {
        match self {
            Constellation::Qpsk => 2f64.sqrt(),
            Constellation::Qam16 => 10f64.sqrt(),
        }
    }

    pub fn points<T: Real>(self) -> Vec<C<T>> {
        let lv = self.levels();
        let s = self.scale();
        lv.iter()
            .flat_map(|&re| lv.iter().map(move |&im| C::new(T::lit(re / s), T::lit(im / s))))
            .collect()
    }

    pub fn sample<T: Real, R: Rng + ?Sized>(self, rng: &mut R) -> C<T> {
        let lv = self.levels();
        let s = self.scale();
        let re = lv[rng.random_range(0..lv.len())];
        let im = lv[rng.random_range(0..lv.len())];
        C::new(T::lit(re / s), T::lit(im / s))
    }

    pub fn contains<T: Real>(self, v: C<T>, tol: T) -> bool {
        self.points::<T>().iter().any(|p| (p - v).norm() <= tol)
    }
}

/// Per-user symbols `S` (U×W): constellation points on used tones, zero
/// columns on unused tones.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid<T> {
    s: CMatrix<T>,
}

impl<T: Real> SymbolGrid<T> {
    /// Validates `s` against the plan and the alphabet.
    pub fn new(s: CMatrix<T>, plan: &TonePlan, constellation: Constellation) -> Result<Self> {
        if s.cols() != plan.num_tones() {
            return Err(Error::Dimension(format!(
                "symbol grid has {} tones, plan has {}",
                s.cols(),
                plan.num_tones()
            )));
        }
        let tol = T::lit(1e-9);
        for r in 0..s.rows() {
            for &t in plan.used() {
                if !constellation.contains(s[(r, t)], tol) {
                    return Err(Error::domain(format!("entry ({r}, {t}) is not a constellation point")));
                }
            }
            for &t in plan.unused() {
                if !s[(r, t)].is_zero() {
                    return Err(Error::domain(format!("unused tone {t} carries a symbol")));
                }
            }
        }
        Ok(Self { s })
    }

    pub fn random<R: Rng + ?Sized>(
        users: usize,
        plan: &TonePlan,
        constellation: Constellation,
        rng: &mut R,
    ) -> Self {
        let mut s = CMatrix::zeros(users, plan.num_tones());
        for r in 0..users {
            for &t in plan.used() {
                s[(r, t)] = constellation.sample(rng);
            }
        }
        Self { s }
    }

    pub fn users(&self) -> usize {
        self.s.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.s
    }

    /// `s_w`.
    pub fn tone(&self, tone: usize) -> Vec<C<T>> {
        self.s.column(tone)
    }

    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let dims = [self.s.rows(), self.s.cols()];
        Container::write(out, ContainerKind::SymbolGrid, self.s.cols(), &dims, self.s.as_slice().iter().copied())
    }

    /// Reads a grid and validates it against `plan`.
    pub fn read_from(input: impl Read, plan: &TonePlan, constellation: Constellation) -> Result<Self> {
        let c = Container::<T>::read(input, ContainerKind::SymbolGrid)?;
        let [u, w] = c.dims[..] else {
            return Err(Error::Format(format!("symbol container has rank {}", c.dims.len())));
        };
        Self::new(CMatrix::from_row_major(u, w, c.data)?, plan, constellation)
    }
}

/// Frequency-domain transmit grid `X` (B×W); column `w` is `x_w`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqDomainGrid<T> {
    x: CMatrix<T>,
}

impl<T: Real> FreqDomainGrid<T> {
    pub fn zeros(antennas: usize, tones: usize) -> Self {
        Self {
            x: CMatrix::zeros(antennas, tones),
        }
    }

    pub fn from_matrix(x: CMatrix<T>) -> Self {
        Self { x }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.x
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix<T> {
        &mut self.x
    }

    pub fn antennas(&self) -> usize {
        self.x.rows()
    }

    pub fn num_tones(&self) -> usize {
        self.x.cols()
    }

    /// `x_w`.
    pub fn tone(&self, tone: usize) -> Vec<C<T>> {
        self.x.column(tone)
    }

    pub fn set_tone(&mut self, tone: usize, values: &[C<T>]) {
        self.x.set_column(tone, values);
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.x.frobenius_norm_sq()
    }

    /// Energy on the unused tones of `plan`.
    pub fn oob_energy(&self, plan: &TonePlan) -> T {
        plan.unused()
            .iter()
            .map(|&t| (0..self.antennas()).map(|b| self.x[(b, t)].norm_sqr()).sum::<T>())
            .sum()
    }
}

/// Time-domain transmit grid `T` (W×B). Stored antenna-major so each
/// antenna signal `t_b` is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDomainGrid<T> {
    // row b = t_b
    by_antenna: CMatrix<T>,
}

impl<T: Real> TimeDomainGrid<T> {
    pub fn zeros(samples: usize, antennas: usize) -> Self {
        Self {
            by_antenna: CMatrix::zeros(antennas, samples),
        }
    }

    /// From the W×B matrix `T`.
    pub fn from_matrix(t: &CMatrix<T>) -> Self {
        Self {
            by_antenna: t.transpose(),
        }
    }

    /// From per-antenna signals (B rows of W samples).
    pub fn from_antenna_rows(rows: CMatrix<T>) -> Self {
        Self { by_antenna: rows }
    }

    /// The W×B matrix `T`.
    pub fn to_matrix(&self) -> CMatrix<T> {
        self.by_antenna.transpose()
    }

    pub fn antennas(&self) -> usize {
        self.by_antenna.rows()
    }

    pub fn num_samples(&self) -> usize {
        self.by_antenna.cols()
    }

    /// `t_b`.
    pub fn antenna(&self, b: usize) -> &[C<T>] {
        self.by_antenna.row(b)
    }

    pub fn antenna_mut(&mut self, b: usize) -> &mut [C<T>] {
        self.by_antenna.row_mut(b)
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.by_antenna.frobenius_norm_sq()
    }

    pub(crate) fn rows(&self) -> &CMatrix<T> {
        &self.by_antenna
    }

    pub(crate) fn rows_mut(&mut self) -> &mut CMatrix<T> {
        &mut self.by_antenna
    }
}

/// Unitary DFT pair for one OFDM symbol length, planned once.
#[derive(Clone)]
pub struct OfdmTransform<T: Real> {
    w: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> OfdmTransform<T> {
    pub fn new(w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            w,
            forward: planner.plan_fft_forward(w),
            inverse: planner.plan_fft_inverse(w),
            scale: T::one() / count::<T>(w).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.w
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0
    }

    fn apply_rows(&self, rows: &mut CMatrix<T>, fft: &Arc<dyn Fft<T>>) {
        assert_eq!(rows.cols(), self.w, "transform length");
        if rows.rows() == 0 {
            return;
        }
        fft.process(rows.as_mut_slice());
        let s = self.scale;
        rows.as_mut_slice().iter_mut().for_each(|v| *v = v.scale(s));
    }

    /// `T = Fᴴ·Xᵀ`.
    pub fn freq_to_time(&self, x: &FreqDomainGrid<T>) -> TimeDomainGrid<T> {
        let mut rows = x.x.clone();
        self.apply_rows(&mut rows, &self.inverse);
        TimeDomainGrid { by_antenna: rows }
    }

    /// `x_w = [(F·T)ᵀ]_w`.
    pub fn time_to_freq(&self, t: &TimeDomainGrid<T>) -> FreqDomainGrid<T> {
        let mut rows = t.by_antenna.clone();
        self.apply_rows(&mut rows, &self.forward);
        FreqDomainGrid { x: rows }
    }

    pub(crate) fn freq_to_time_in_place(&self, rows: &mut CMatrix<T>) {
        self.apply_rows(rows, &self.inverse);
    }

    pub(crate) fn time_to_freq_in_place(&self, rows: &mut CMatrix<T>) {
        self.apply_rows(rows, &self.forward);
    }
}

/// Unitary inverse DFT per antenna: `T = Fᴴ·Xᵀ`.
pub fn freq_to_time<T: Real>(x: &FreqDomainGrid<T>) -> TimeDomainGrid<T> {
    OfdmTransform::new(x.num_tones()).freq_to_time(x)
}

/// Unitary DFT per antenna; exact inverse of [`freq_to_time`].
pub fn time_to_freq<T: Real>(t: &TimeDomainGrid<T>) -> FreqDomainGrid<T> {
    OfdmTransform::new(t.num_samples()).time_to_freq(t)
}

/// Per-tone precoding constraints `H_w·x_w = s_w` on used tones, each with
/// a cached factorization of `H_w·H_wᴴ`.
#[derive(Clone, Debug)]
pub struct ToneConstraints<T> {
    plan: TonePlan,
    antennas: usize,
    // indexed like plan.used()
    systems: Vec<LinearSystem<T>>,
}

impl<T: Real> ToneConstraints<T> {
    pub fn new(s: &SymbolGrid<T>, chan: &ChannelRealization<T>, plan: &TonePlan) -> Result<Self> {
        if chan.num_tones() != plan.num_tones() || s.matrix().cols() != plan.num_tones() {
            return Err(Error::Dimension(format!(
                "channel has {} tones, symbols {}, plan {}",
                chan.num_tones(),
                s.matrix().cols(),
                plan.num_tones()
            )));
        }
        if s.users() != chan.users() {
            return Err(Error::Dimension(format!(
                "{} symbol rows for {} users",
                s.users(),
                chan.users()
            )));
        }
        let systems = plan
            .used()
            .iter()
            .map(|&tone| {
                LinearSystem::new(chan.response(tone).clone(), s.tone(tone)).map_err(|e| match e {
                    Error::IllConditioned { cond, .. } => Error::SingularTone { tone, cond },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            plan: plan.clone(),
            antennas: chan.antennas(),
            systems,
        })
    }

    pub fn plan(&self) -> &TonePlan {
        &self.plan
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Projects every used-tone column onto its constraint set and zeroes
    /// the unused-tone columns, in place.
    pub fn project(&self, x: &mut FreqDomainGrid<T>) {
        let b = self.antennas;
        let mut col = vec![C::zero(); b];
        let mut scratch = Vec::new();
        for (sys, &tone) in self.systems.iter().zip(self.plan.used()) {
            for (r, v) in col.iter_mut().enumerate() {
                *v = x.x[(r, tone)];
            }
            sys.project_in_place(&mut col, &mut scratch);
            x.x.set_column(tone, &col);
        }
        for &tone in self.plan.unused() {
            for r in 0..b {
                x.x[(r, tone)] = C::zero();
            }
        }
    }

    /// Largest `‖H_w·x_w − s_w‖₂ / ‖s_w‖₂` over used tones.
    pub fn max_evm_residual(&self, x: &FreqDomainGrid<T>) -> T {
        self.systems
            .iter()
            .zip(self.plan.used())
            .map(|(sys, &tone)| sys.relative_residual(&x.tone(tone)))
            .fold(T::zero(), T::max)
    }

    /// RMS magnitude of the symbol entries on used tones.
    pub fn symbol_rms(&self) -> T {
        let (energy, n_entries) = self.systems.iter().fold((T::zero(), 0usize), |(e, n), sys| {
            (e + norm_sq(sys.y()), n + sys.m())
        });
        if n_entries == 0 {
            return T::zero();
        }
        (energy / count::<T>(n_entries)).sqrt()
    }

    /// Minimum-power grid satisfying all constraints.
    pub fn ls_solution(&self) -> FreqDomainGrid<T> {
        let mut x = FreqDomainGrid::zeros(self.antennas, self.plan.num_tones());
        self.project(&mut x);
        x
    }
}

/// Least-squares precoding `x_w = H_wᴴ(H_w·H_wᴴ)⁻¹·s_w` on used tones,
/// `x_w = 0` on unused tones.
pub fn ls_precode<T: Real>(
    s: &SymbolGrid<T>,
    chan: &ChannelRealization<T>,
    plan: &TonePlan,
) -> Result<FreqDomainGrid<T>> {
    Ok(ToneConstraints::new(s, chan, plan)?.ls_solution())
}

/// Scales `X` to unit Frobenius norm; returns the grid and its prior power
/// `‖X‖_F²`.
pub fn normalize_power<T: Real>(x: &FreqDomainGrid<T>) -> Result<(FreqDomainGrid<T>, T)> {
    let power = x.frobenius_norm_sq();
    if power.is_zero() {
        return Err(Error::domain("cannot normalize an all-zero grid"));
    }
    let mut out = x.clone();
    out.x.scale(T::one() / power.sqrt());
    Ok((out, power))
}

const MAGIC: &[u8; 4] = b"PQCX";
const CONTAINER_VERSION: u32 = 1;

/// Payload tag of the binary container.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum ContainerKind {
    /// `[L, U, B]` tap array; `tones` holds `W`.
    ChannelTaps = 1,
    /// `[U, W]` symbol matrix.
    SymbolGrid = 2,
}

/// Binary layout, all little-endian:
///
/// ```text
/// "PQCX" | u32 version | u32 kind | u64 tones | u32 rank | rank × u64 dims
///        | prod(dims) × (f64 re, f64 im)   row-major
/// ```
struct Container<T> {
    tones: usize,
    dims: Vec<usize>,
    data: Vec<C<T>>,
}

impl<T: Real> Container<T> {
    fn write(
        mut out: impl Write,
        kind: ContainerKind,
        tones: usize,
        dims: &[usize],
        data: impl Iterator<Item = C<T>>,
    ) -> Result<()> {
        let io = |e| Error::io("<container>", e);
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        buf.extend_from_slice(&(kind as u32).to_le_bytes());
        buf.extend_from_slice(&(tones as u64).to_le_bytes());
        buf.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            buf.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        let mut written = 0usize;
        for v in data {
            buf.extend_from_slice(&v.re.as_f64().to_le_bytes());
            buf.extend_from_slice(&v.im.as_f64().to_le_bytes());
            written += 1;
        }
        if written != dims.iter().product::<usize>() {
            return Err(Error::Format(format!("{written} values for shape {dims:?}")));
        }
        out.write_all(&buf).map_err(io)
    }

    fn read(mut input: impl Read, expected: ContainerKind) -> Result<Self> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io("<container>", e))?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != CONTAINER_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let kind = cur.u32()?;
        if kind != expected as u32 {
            return Err(Error::Format(format!("container kind {kind}, expected {}", expected as u32)));
        }
        let tones = cur.u64()? as usize;
        let rank = cur.u32()? as usize;
        let dims = (0..rank).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let len = dims.iter().product::<usize>();
        let data = (0..len)
            .map(|_| Ok(C::new(T::lit(cur.f64()?), T::lit(cur.f64()?))))
            .collect::<Result<Vec<_>>>()?;
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(Self { tones, dims, data })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("truncated container".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
