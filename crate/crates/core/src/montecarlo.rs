//! Generative simulation: deployment, the hierarchical association tree,
//! SIR sampling with Rayleigh fading, backhaul splitting, power-law requests
//! and the resulting delivery rates.
//!
//! Every realization draws from its own stream forked from the master seed,
//! and per-realization results are aggregated as integer counts, so estimates
//! do not depend on the number of worker threads.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::params::{NetworkParams, ParamError, Tier, Topology, Variant};
use crate::pointprocess::{
    nearest, poisson_count, sample_cox_users, sample_mcp, sample_php, sample_ppp, uniform_in_disk,
    GridIndex, Point, PointProcessError, PointSet, Role, Window,
};
use crate::rng::RandomStream;

/// Smallest run accepted by [`estimate_avg_rates`].
pub const MIN_REALIZATIONS: usize = 100;

/// Normal quantile of the two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    NoCentralRouter,
    NoMacroStation,
    NoSmallStation,
    NoHotspot,
    NoTypicalSmallCellUser,
    NoInterferer,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rejection::NoCentralRouter => "no central router in the window",
            Rejection::NoMacroStation => "no macro station in the window",
            Rejection::NoSmallStation => "no small-cell station in the window",
            Rejection::NoHotspot => "no hot-spot in the window",
            Rejection::NoTypicalSmallCellUser => "no position is served by a small cell",
            Rejection::NoInterferer => "no interferer in the window",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    PointProcess(#[from] PointProcessError),
    #[error("realization rejected: {0}")]
    Rejected(Rejection),
    #[error("{rejected} of {realizations} realizations rejected, above the 1% limit (last: {last})")]
    TooManyRejections {
        rejected: usize,
        realizations: usize,
        last: Rejection,
    },
    #[error("at least {MIN_REALIZATIONS} realizations are required (got {0})")]
    TooFewRealizations(usize),
    #[error("mean backhaul load of the {0} tier is zero")]
    ZeroLoad(Tier),
    #[error("association tree needs a non-empty router set")]
    EmptyTree,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl From<Rejection> for SimError {
    fn from(r: Rejection) -> Self {
        SimError::Rejected(r)
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

/// How the expectation in the backhaul split is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackhaulMode {
    /// Average of `N_mc * N_mu` (resp. `N_sc * N_su`) over every station of
    /// every realization of the run.
    Ensemble,
    /// The same average restricted to the realization at hand.
    PerRealization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Window half-extent in meters; `None` picks the edge-effect guard.
    pub half_extent: Option<f64>,
    pub toroidal: bool,
    pub backhaul: BackhaulMode,
    /// With the small-cell tier disabled no SBS (and no SU) is deployed.
    pub sbs_tier_enabled: bool,
    /// Worker cap; `None` reads `HETNET_THREADS`, then uses every core.
    pub threads: Option<usize>,
    /// Uniform positions tried when placing the coverage-aided typical SU.
    pub placement_tries: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            half_extent: None,
            toroidal: true,
            backhaul: BackhaulMode::Ensemble,
            sbs_tier_enabled: true,
            threads: None,
            placement_tries: 10_000,
        }
    }
}

impl SimOptions {
    pub fn window(&self, p: &NetworkParams, t: Topology) -> Result<Window> {
        let mut min_density = p.lambda_cr.min(p.lambda_mc);
        if self.sbs_tier_enabled {
            min_density = min_density.min(p.derived(t).lambda_sc);
            if t == Topology::CapacityAided {
                min_density = min_density.min(p.lambda_sc_prime);
            }
        }
        let guard = Window::guard_extent(p.r_c, min_density);
        match self.half_extent {
            Some(l) => Ok(Window::guarded(l, self.toroidal, p.r_c, min_density)?),
            None => Ok(Window::new((guard / 100.0).ceil() * 100.0, self.toroidal)?),
        }
    }

    pub fn worker_count(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var("HETNET_THREADS")
                    .ok()
                    .and_then(|v| v.trim().parse().ok())
            })
            .filter(|&n| n > 0)
            .unwrap_or_else(rayon::current_num_threads)
    }

    fn install<R: Send>(&self, job: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.worker_count())
            .build()
            .map_err(|e| SimError::ThreadPool(e.to_string()))?;
        Ok(pool.install(job))
    }
}

/// One realization of the deployment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub window: Window,
    pub cr: PointSet,
    pub mbs: PointSet,
    pub sbs: PointSet,
    /// Cluster centres of the capacity-aided layout.
    pub hotspots: Option<PointSet>,
    pub mus: PointSet,
    pub sus: PointSet,
    /// Backhaul capacity of every CR, exponential with mean `mu`.
    pub cr_capacity: Vec<f64>,
    /// Unit-mean draws behind `cr_capacity`.
    pub capacity_draws: Vec<f64>,
    /// Stream for everything drawn after deployment (fading, placement).
    pub stream: RandomStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layers {
    Full,
    /// Stations only: no CRs, users or capacities.
    Radio,
}

// Substream indices of one realization attempt.
const S_CR: u64 = 0;
const S_MBS: u64 = 1;
const S_SBS: u64 = 2;
const S_USERS: u64 = 3;
const S_CAPACITY: u64 = 4;
const S_AFTER: u64 = 5;

/// Samples every point set of one realization from `stream`.
///
/// Returns [`SimError::Rejected`] when a tier needed downstream is empty;
/// callers redraw with a fresh substream.
pub fn generate_scenario(
    p: &NetworkParams,
    t: Topology,
    opts: &SimOptions,
    stream: &RandomStream,
) -> Result<Scenario> {
    let window = opts.window(p, t)?;
    generate(p, t, opts, window, stream, Layers::Full)
}

fn generate(
    p: &NetworkParams,
    t: Topology,
    opts: &SimOptions,
    window: Window,
    stream: &RandomStream,
    layers: Layers,
) -> Result<Scenario> {
    let full = layers == Layers::Full;
    let cr = if full {
        sample_ppp(p.lambda_cr, &window, Role::Cr, &mut stream.fork(S_CR))?
    } else {
        PointSet::empty(Role::Cr)
    };
    if full && cr.is_empty() {
        return Err(Rejection::NoCentralRouter.into());
    }
    let mbs = sample_ppp(p.lambda_mc, &window, Role::Mbs, &mut stream.fork(S_MBS))?;
    if mbs.is_empty() {
        return Err(Rejection::NoMacroStation.into());
    }
    let mut sbs_rng = stream.fork(S_SBS);
    let (sbs, hotspots) = match (opts.sbs_tier_enabled, t) {
        (false, _) => (PointSet::empty(Role::Sbs), None),
        (true, Topology::CoverageAided) => {
            (sample_php(&mbs, p.lambda_sc_prime, p.r_c, &window, &mut sbs_rng)?, None)
        }
        (true, Topology::CapacityAided) => {
            let (parents, daughters) = sample_mcp(p.lambda_sc_prime, p.c_bar, p.r_c, &window, &mut sbs_rng)?;
            if parents.is_empty() {
                return Err(Rejection::NoHotspot.into());
            }
            (daughters, Some(parents))
        }
    };
    if opts.sbs_tier_enabled && sbs.is_empty() {
        return Err(Rejection::NoSmallStation.into());
    }
    let (mus, sus) = if full {
        sample_users(p, t, &window, &mbs, &sbs, hotspots.as_ref(), &mut stream.fork(S_USERS))?
    } else {
        (PointSet::empty(Role::Mu), PointSet::empty(Role::Su))
    };
    let capacity_draws: Vec<f64> = if full {
        let mut rng = stream.fork(S_CAPACITY);
        (0..cr.len()).map(|_| rng.unit_exponential()).collect()
    } else {
        Vec::new()
    };
    let cr_capacity = capacity_draws.iter().map(|e| p.mu * e).collect();
    Ok(Scenario {
        topology: t,
        window,
        cr,
        mbs,
        sbs,
        hotspots,
        mus,
        sus,
        cr_capacity,
        capacity_draws,
        stream: stream.fork(S_AFTER),
    })
}

fn sample_users(
    p: &NetworkParams,
    t: Topology,
    window: &Window,
    mbs: &PointSet,
    sbs: &PointSet,
    hotspots: Option<&PointSet>,
    rng: &mut RandomStream,
) -> Result<(PointSet, PointSet)> {
    match (t, hotspots) {
        (Topology::CapacityAided, Some(parents)) => {
            let (sus, mus) = sample_cox_users(parents, p.c_bar, p.r_c, p.macro_user_density(), window, rng)?;
            Ok((mus, sus))
        }
        (Topology::CapacityAided, None) => {
            let mus = sample_ppp(p.macro_user_density(), window, Role::Mu, rng)?;
            Ok((mus, PointSet::empty(Role::Su)))
        }
        (Topology::CoverageAided, _) => {
            // One homogeneous user process, split by the tier of the nearest
            // station over both tiers.
            let users = sample_ppp(p.lambda_ut, window, Role::Mu, rng)?;
            let macro_index = GridIndex::new(mbs, *window, p.r_c);
            let small_index = GridIndex::new(sbs, *window, p.r_c);
            let mut mus = Vec::new();
            let mut sus = Vec::new();
            for q in users.points {
                let dm = macro_index.nearest(q).map_or(f64::INFINITY, |(_, d)| d);
                let ds = small_index.nearest(q).map_or(f64::INFINITY, |(_, d)| d);
                if ds < dm {
                    sus.push(q);
                } else {
                    mus.push(q);
                }
            }
            Ok((PointSet::new(Role::Mu, mus), PointSet::new(Role::Su, sus)))
        }
    }
}

/// Two-level nearest-neighbour association: BS to CR, user to BS of its tier.
#[derive(Debug, Clone, PartialEq)]
pub struct HierTree {
    pub cr_of_mbs: Vec<usize>,
    pub cr_of_sbs: Vec<usize>,
    pub mbs_of_mu: Vec<usize>,
    pub sbs_of_su: Vec<usize>,
    pub mbs_by_cr: Vec<Vec<usize>>,
    pub sbs_by_cr: Vec<Vec<usize>>,
    pub mu_by_mbs: Vec<Vec<usize>>,
    pub su_by_sbs: Vec<Vec<usize>>,
    /// Distance of every MBS to its CR.
    pub r_mc: Vec<f64>,
    pub r_sc: Vec<f64>,
    /// Distance of every MU to its MBS.
    pub r_mu: Vec<f64>,
    pub r_su: Vec<f64>,
}

fn associate(
    members: &PointSet,
    heads: &PointSet,
    window: Window,
    cell: f64,
) -> (Vec<usize>, Vec<Vec<usize>>, Vec<f64>) {
    let index = GridIndex::new(heads, window, cell);
    let mut head_of = Vec::with_capacity(members.len());
    let mut by_head = vec![Vec::new(); heads.len()];
    let mut dist = Vec::with_capacity(members.len());
    if heads.is_empty() {
        return (head_of, by_head, dist);
    }
    for (i, &q) in members.points.iter().enumerate() {
        let (h, d) = index.nearest(q).expect("heads are non-empty");
        head_of.push(h);
        by_head[h].push(i);
        dist.push(d);
    }
    (head_of, by_head, dist)
}

pub fn build_tree(s: &Scenario) -> Result<HierTree> {
    if s.cr.is_empty() {
        return Err(SimError::EmptyTree);
    }
    let cell = s.window.side() / 64.0;
    let (cr_of_mbs, mbs_by_cr, r_mc) = associate(&s.mbs, &s.cr, s.window, cell);
    let (cr_of_sbs, sbs_by_cr, r_sc) = associate(&s.sbs, &s.cr, s.window, cell);
    let (mbs_of_mu, mu_by_mbs, r_mu) = associate(&s.mus, &s.mbs, s.window, cell);
    let (sbs_of_su, su_by_sbs, r_su) = associate(&s.sus, &s.sbs, s.window, cell);
    Ok(HierTree {
        cr_of_mbs,
        cr_of_sbs,
        mbs_of_mu,
        sbs_of_su,
        mbs_by_cr,
        sbs_by_cr,
        mu_by_mbs,
        su_by_sbs,
        r_mc,
        r_sc,
        r_mu,
        r_su,
    })
}

impl HierTree {
    /// MBSs wired to CR `cr`.
    pub fn n_mc(&self, cr: usize) -> usize {
        self.mbs_by_cr[cr].len()
    }

    pub fn n_sc(&self, cr: usize) -> usize {
        self.sbs_by_cr[cr].len()
    }

    /// MUs served by MBS `b`.
    pub fn n_mu(&self, b: usize) -> usize {
        self.mu_by_mbs[b].len()
    }

    pub fn n_su(&self, b: usize) -> usize {
        self.su_by_sbs[b].len()
    }

    /// Per-station load products summed over the tree.
    pub fn load(&self) -> TreeLoad {
        let macro_sum = (0..self.cr_of_mbs.len())
            .map(|b| (self.n_mc(self.cr_of_mbs[b]) * self.n_mu(b)) as u64)
            .sum();
        let small_sum = (0..self.cr_of_sbs.len())
            .map(|b| (self.n_sc(self.cr_of_sbs[b]) * self.n_su(b)) as u64)
            .sum();
        TreeLoad {
            macro_sum,
            macro_stations: self.cr_of_mbs.len() as u64,
            small_sum,
            small_stations: self.cr_of_sbs.len() as u64,
        }
    }
}

/// Integer sums behind `E[N_mc N_mu]` and `E[N_sc N_su]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeLoad {
    pub macro_sum: u64,
    pub macro_stations: u64,
    pub small_sum: u64,
    pub small_stations: u64,
}

impl std::ops::Add for TreeLoad {
    type Output = TreeLoad;
    fn add(self, o: TreeLoad) -> TreeLoad {
        TreeLoad {
            macro_sum: self.macro_sum + o.macro_sum,
            macro_stations: self.macro_stations + o.macro_stations,
            small_sum: self.small_sum + o.small_sum,
            small_stations: self.small_stations + o.small_stations,
        }
    }
}

impl TreeLoad {
    /// Mean of `N_mc N_mu` over MBSs.
    pub fn macro_mean(&self) -> f64 {
        self.macro_sum as f64 / self.macro_stations as f64
    }

    pub fn small_mean(&self) -> f64 {
        self.small_sum as f64 / self.small_stations as f64
    }
}

pub fn ensemble_load<'a>(trees: impl IntoIterator<Item = &'a HierTree>) -> TreeLoad {
    trees.into_iter().map(HierTree::load).fold(TreeLoad::default(), |a, b| a + b)
}

/// Backhaul rate of each tier at the serving CR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackhaulRates {
    pub mu: f64,
    pub su: f64,
}

/// `R'_mu = gamma C / E[N_mc N_mu]` and `R'_su = (1 - gamma) C / E[N_sc N_su]`
/// with `C` the capacity of the CR serving each tier.
pub fn backhaul_rates(
    capacity_mu: f64,
    capacity_su: f64,
    load: &TreeLoad,
    p: &NetworkParams,
) -> Result<BackhaulRates> {
    let (em, es) = (load.macro_mean(), load.small_mean());
    if !(em > 0.0) {
        return Err(SimError::ZeroLoad(Tier::Mu));
    }
    if !(es > 0.0) {
        return Err(SimError::ZeroLoad(Tier::Su));
    }
    Ok(BackhaulRates {
        mu: p.gamma * capacity_mu / em,
        su: (1.0 - p.gamma) * capacity_su / es,
    })
}

/// Requested chunk index `f = (1 - u)^(-1/(eta - 1))` of the power-law
/// popularity on `[1, inf)`.
pub fn sample_request(eta: f64, rng: &mut RandomStream) -> f64 {
    request_from_uniform(eta, rng.uniform())
}

/// Inverse popularity CDF at `u` in `[0, 1)`.
pub fn request_from_uniform(eta: f64, u: f64) -> f64 {
    (1.0 - u).powf(-1.0 / (eta - 1.0))
}

/// The cache holds the `F_sc` most popular chunks.
pub fn cache_hit(f: f64, f_sc: f64) -> bool {
    f <= 1.0 + f_sc
}

/// Delivered rate of one request: `tau` or 0.
pub fn delivery_sample(
    p: &NetworkParams,
    tier: Tier,
    variant: Variant,
    sir: f64,
    backhaul: f64,
    hit: bool,
) -> f64 {
    match tier {
        Tier::Mu => {
            if sir.ln_1p() > p.tau_mc && backhaul > p.tau_mc {
                p.tau_mc
            } else {
                0.0
            }
        }
        Tier::Su => {
            let cached = variant == Variant::WithCache && hit;
            if sir.ln_1p() > p.tau_sc && (backhaul > p.tau_sc || cached) {
                p.tau_sc
            } else {
                0.0
            }
        }
    }
}

/// The measurement user of one tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalUser {
    pub tier: Tier,
    pub position: Point,
    pub serving: usize,
    pub distance: f64,
}

/// Places the typical user: the MU at the origin served by its nearest MBS;
/// the capacity-aided SU uniformly in a uniformly chosen hot-spot; the
/// coverage-aided SU uniformly outside every exclusion ball, conditioned on
/// its nearest station being an SBS.
pub fn typical_user(
    s: &Scenario,
    p: &NetworkParams,
    tier: Tier,
    tries: usize,
    rng: &mut RandomStream,
) -> Result<TypicalUser> {
    match tier {
        Tier::Mu => {
            let (serving, distance) =
                nearest(Point::ORIGIN, &s.mbs, &s.window).map_err(|_| Rejection::NoMacroStation)?;
            Ok(TypicalUser {
                tier,
                position: Point::ORIGIN,
                serving,
                distance,
            })
        }
        Tier::Su => {
            if s.sbs.is_empty() {
                return Err(Rejection::NoSmallStation.into());
            }
            match &s.hotspots {
                Some(parents) => {
                    if parents.is_empty() {
                        return Err(Rejection::NoHotspot.into());
                    }
                    let centre = parents.points[rng.index_below(parents.len())];
                    let q = s
                        .window
                        .place(uniform_in_disk(centre, p.r_c, rng))
                        .ok_or(Rejection::NoTypicalSmallCellUser)?;
                    let (serving, distance) = nearest(q, &s.sbs, &s.window)?;
                    Ok(TypicalUser {
                        tier,
                        position: q,
                        serving,
                        distance,
                    })
                }
                None => {
                    for _ in 0..tries {
                        let q = s.window.uniform_point(rng);
                        let (_, dm) = nearest(q, &s.mbs, &s.window)?;
                        if dm < p.r_c {
                            continue;
                        }
                        let (serving, distance) = nearest(q, &s.sbs, &s.window)?;
                        if distance < dm {
                            return Ok(TypicalUser {
                                tier,
                                position: q,
                                serving,
                                distance,
                            });
                        }
                    }
                    Err(Rejection::NoTypicalSmallCellUser.into())
                }
            }
        }
    }
}

fn path_gain(d2: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        1.0 / (d2 * d2)
    } else {
        d2.powf(-0.5 * alpha)
    }
}

/// Faded power received at `at` from every point of `set` except `skip`.
/// Returns the sum and the number of contributing points.
fn faded_sum(
    set: &[Point],
    at: Point,
    skip: Option<usize>,
    power: f64,
    alpha: f64,
    window: &Window,
    rng: &mut RandomStream,
) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for (i, &x) in set.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let h = rng.unit_exponential();
        sum += power * h * path_gain(window.distance_sq(at, x), alpha);
        n += 1;
    }
    (sum, n)
}

/// One SIR draw at the typical user with fresh fading on every link. The MU
/// hears every other MBS and every SBS; the SU every other SBS and every MBS.
pub fn sir_sample(
    s: &Scenario,
    p: &NetworkParams,
    user: &TypicalUser,
    rng: &mut RandomStream,
) -> Result<f64> {
    let (own, other, p_own, p_other) = match user.tier {
        Tier::Mu => (&s.mbs, &s.sbs, p.p_mc, p.p_sc),
        Tier::Su => (&s.sbs, &s.mbs, p.p_sc, p.p_mc),
    };
    let signal = p_own * rng.unit_exponential() * path_gain(user.distance * user.distance, p.alpha);
    let (i_same, n_same) = faded_sum(&own.points, user.position, Some(user.serving), p_own, p.alpha, &s.window, rng);
    let (i_cross, n_cross) = faded_sum(&other.points, user.position, None, p_other, p.alpha, &s.window, rng);
    if n_same + n_cross == 0 {
        return Err(Rejection::NoInterferer.into());
    }
    Ok(signal / (i_same + i_cross))
}

/// Everything one realization contributes to the rate estimates. Capacity
/// and request are kept as unit draws so that the rate split, cache size,
/// popularity, mean capacity and thresholds can be changed afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationOutcome {
    pub mu_sir: f64,
    pub su_sir: f64,
    /// Unit-mean capacity draw of the CR serving the typical MU's station.
    pub mu_capacity: f64,
    pub su_capacity: f64,
    /// Uniform behind the typical SU's request.
    pub request_u: f64,
    pub load: TreeLoad,
    /// Redraws needed before this realization was accepted.
    pub rejected: u32,
    pub last_rejection: Option<Rejection>,
}

const MAX_ATTEMPTS: u64 = 64;

// Substreams of the post-deployment stream.
const A_MU: u64 = 0;
const A_SU_PLACE: u64 = 1;
const A_SU: u64 = 2;
const A_REQUEST: u64 = 3;

fn realize(
    p: &NetworkParams,
    t: Topology,
    opts: &SimOptions,
    window: Window,
    stream: &RandomStream,
) -> Result<RealizationOutcome> {
    let mut rejected = 0;
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        match realize_once(p, t, opts, window, &stream.fork(attempt)) {
            Ok(mut o) => {
                o.rejected = rejected;
                o.last_rejection = last;
                return Ok(o);
            }
            Err(SimError::Rejected(r)) => {
                rejected += 1;
                last = Some(r);
            }
            Err(e) => return Err(e),
        }
    }
    Err(SimError::Rejected(last.expect("at least one attempt")))
}

fn realize_once(
    p: &NetworkParams,
    t: Topology,
    opts: &SimOptions,
    window: Window,
    stream: &RandomStream,
) -> Result<RealizationOutcome> {
    let s = generate(p, t, opts, window, stream, Layers::Full)?;
    let tree = build_tree(&s)?;
    let mu = typical_user(&s, p, Tier::Mu, opts.placement_tries, &mut s.stream.fork(A_MU))?;
    let mu_sir = sir_sample(&s, p, &mu, &mut s.stream.fork(A_MU))?;
    let mu_capacity = s.capacity_draws[tree.cr_of_mbs[mu.serving]];
    let (su_sir, su_capacity) = if opts.sbs_tier_enabled {
        let su = typical_user(&s, p, Tier::Su, opts.placement_tries, &mut s.stream.fork(A_SU_PLACE))?;
        let sir = sir_sample(&s, p, &su, &mut s.stream.fork(A_SU))?;
        (sir, s.capacity_draws[tree.cr_of_sbs[su.serving]])
    } else {
        (0.0, 0.0)
    };
    let request_u = s.stream.fork(A_REQUEST).uniform();
    Ok(RealizationOutcome {
        mu_sir,
        su_sir,
        mu_capacity,
        su_capacity,
        request_u,
        load: tree.load(),
        rejected: 0,
        last_rejection: None,
    })
}

fn check_rejections(outcomes: &[RealizationOutcome]) -> Result<()> {
    let rejected: usize = outcomes.iter().map(|o| o.rejected as usize).sum();
    if rejected * 100 > outcomes.len() {
        let last = outcomes
            .iter()
            .rev()
            .find_map(|o| o.last_rejection)
            .expect("some realization was rejected");
        return Err(SimError::TooManyRejections {
            rejected,
            realizations: outcomes.len(),
            last,
        });
    }
    Ok(())
}

/// Simulates `n` realizations; realization `i` draws from `fork(i)` of the
/// master stream.
pub fn simulate_outcomes(
    p: &NetworkParams,
    t: Topology,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<RealizationOutcome>> {
    p.check(t)?;
    let window = opts.window(p, t)?;
    let master = RandomStream::new(seed);
    let outcomes = opts.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| realize(p, t, opts, window, &master.fork(i)))
            .collect::<Result<Vec<_>>>()
    })??;
    check_rejections(&outcomes)?;
    Ok(outcomes)
}

/// Mean delivery rate of one tier and variant over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub topology: Topology,
    pub tier: Tier,
    /// `None` for the macro tier, which has no cache.
    pub variant: Option<Variant>,
    pub mean: f64,
    pub ci_half_width: f64,
    pub n_samples: usize,
}

impl RateEstimate {
    /// Estimate from `hits` successes of a `{0, tau}` variable.
    pub fn from_count(
        topology: Topology,
        tier: Tier,
        variant: Option<Variant>,
        tau: f64,
        hits: usize,
        n: usize,
    ) -> Self {
        let frac = hits as f64 / n as f64;
        RateEstimate {
            topology,
            tier,
            variant,
            mean: tau * frac,
            ci_half_width: Z95 * tau * (frac * (1.0 - frac) / n as f64).sqrt(),
            n_samples: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvgRateEstimates {
    pub mu: RateEstimate,
    pub su: RateEstimate,
    pub su_no_cache: RateEstimate,
    /// Realizations redrawn during the run.
    pub rejected: usize,
    pub load: TreeLoad,
}

impl AvgRateEstimates {
    pub fn all(&self) -> [RateEstimate; 3] {
        [self.mu, self.su_no_cache, self.su]
    }
}

/// Per-realization delivered rates `(MU, SU, SU without cache)`.
pub fn delivery_samples(
    outcomes: &[RealizationOutcome],
    p: &NetworkParams,
    mode: BackhaulMode,
) -> Result<Vec<[f64; 3]>> {
    let total = outcomes.iter().fold(TreeLoad::default(), |a, o| a + o.load);
    outcomes
        .iter()
        .map(|o| {
            let load = match mode {
                BackhaulMode::Ensemble => &total,
                BackhaulMode::PerRealization => &o.load,
            };
            let rates = backhaul_rates(p.mu * o.mu_capacity, p.mu * o.su_capacity, load, p)?;
            let hit = cache_hit(request_from_uniform(p.eta, o.request_u), p.f_sc);
            Ok([
                delivery_sample(p, Tier::Mu, Variant::WithCache, o.mu_sir, rates.mu, hit),
                delivery_sample(p, Tier::Su, Variant::WithCache, o.su_sir, rates.su, hit),
                delivery_sample(p, Tier::Su, Variant::NoCache, o.su_sir, rates.su, hit),
            ])
        })
        .collect()
}

/// Rate estimates of a finished run.
pub fn rates_from_outcomes(
    outcomes: &[RealizationOutcome],
    p: &NetworkParams,
    t: Topology,
    mode: BackhaulMode,
) -> Result<AvgRateEstimates> {
    let samples = delivery_samples(outcomes, p, mode)?;
    let n = samples.len();
    let count = |k: usize| samples.iter().filter(|s| s[k] > 0.0).count();
    Ok(AvgRateEstimates {
        mu: RateEstimate::from_count(t, Tier::Mu, None, p.tau_mc, count(0), n),
        su: RateEstimate::from_count(t, Tier::Su, Some(Variant::WithCache), p.tau_sc, count(1), n),
        su_no_cache: RateEstimate::from_count(t, Tier::Su, Some(Variant::NoCache), p.tau_sc, count(2), n),
        rejected: outcomes.iter().map(|o| o.rejected as usize).sum(),
        load: outcomes.iter().fold(TreeLoad::default(), |a, o| a + o.load),
    })
}

/// Monte Carlo average delivery rates of the typical MU and SU.
pub fn estimate_avg_rates(
    p: &NetworkParams,
    t: Topology,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<AvgRateEstimates> {
    if n < MIN_REALIZATIONS {
        return Err(SimError::TooFewRealizations(n));
    }
    if !opts.sbs_tier_enabled {
        return Err(SimError::Rejected(Rejection::NoSmallStation));
    }
    let outcomes = simulate_outcomes(p, t, n, seed, opts)?;
    rates_from_outcomes(&outcomes, p, t, opts.backhaul)
}

/// Parameters that only enter after deployment and SIR sampling. Runs that
/// differ only in these share their realizations under a common seed.
pub const POST_DEPLOYMENT_PARAMS: &[&str] = &["gamma", "F_sc", "F", "eta", "mu", "tau_mc", "tau_sc", "tau"];

pub fn affects_deployment(name: &str) -> bool {
    !POST_DEPLOYMENT_PARAMS.contains(&name)
}

/// SIR of the typical user of `tier` over `n` realizations, deploying only
/// the radio stations.
pub fn sir_samples(
    p: &NetworkParams,
    t: Topology,
    tier: Tier,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<f64>> {
    p.check(t)?;
    let window = opts.window(p, t)?;
    let master = RandomStream::new(seed);
    let one = |stream: &RandomStream| -> Result<f64> {
        let s = generate(p, t, opts, window, stream, Layers::Radio)?;
        let place = if tier == Tier::Mu { A_MU } else { A_SU_PLACE };
        let fade = if tier == Tier::Mu { A_MU } else { A_SU };
        let user = typical_user(&s, p, tier, opts.placement_tries, &mut s.stream.fork(place))?;
        sir_sample(&s, p, &user, &mut s.stream.fork(fade))
    };
    let draws = opts.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let stream = master.fork(i);
                let mut rejected = 0u32;
                for attempt in 0..MAX_ATTEMPTS {
                    match one(&stream.fork(attempt)) {
                        Ok(v) => return Ok((v, rejected)),
                        Err(SimError::Rejected(_)) => rejected += 1,
                        Err(e) => return Err(e),
                    }
                }
                Err(SimError::Rejected(Rejection::NoInterferer))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let rejected: usize = draws.iter().map(|d| d.1 as usize).sum();
    if rejected * 100 > n {
        return Err(SimError::TooManyRejections {
            rejected,
            realizations: n,
            last: Rejection::NoInterferer,
        });
    }
    Ok(draws.into_iter().map(|d| d.0).collect())
}

/// Interference scenario of a Laplace transform, with the receiver at the
/// origin and the conditioning of the matching analytic expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplaceCase {
    /// MBS interferers beyond the serving distance `r`.
    MacroToMacro { r: f64 },
    /// PPP(`lambda_sc'`) SBSs with the exclusion ball of the serving MBS at
    /// distance `r` removed.
    SmallToMacroCoverage { r: f64 },
    /// PPP(`lambda_sc'`) SBS interferers beyond the serving distance `r`.
    SmallToSmallCoverage { r: f64 },
    /// MBS interferers outside the ball of radius `R_c` around the serving
    /// SBS at distance `r`.
    MacroToSmallCoverage { r: f64 },
    /// Every MBS.
    MacroToSmallCapacity,
    /// A Matérn cluster process seen from an arbitrary location.
    SmallToMacroCapacity,
    /// A Matérn cluster process plus the receiver's own cluster, whose
    /// centre is uniform within `R_c` of the receiver.
    SmallToSmallCapacity,
}

impl LaplaceCase {
    pub const fn name(&self) -> &'static str {
        match self {
            LaplaceCase::MacroToMacro { .. } => "L_mm",
            LaplaceCase::SmallToMacroCoverage { .. } => "L_sm_cov",
            LaplaceCase::SmallToSmallCoverage { .. } => "L_ss_cov",
            LaplaceCase::MacroToSmallCoverage { .. } => "L_ms_cov",
            LaplaceCase::MacroToSmallCapacity => "L_ms_cap",
            LaplaceCase::SmallToMacroCapacity => "L_sm_cap",
            LaplaceCase::SmallToSmallCapacity => "L_ss_cap",
        }
    }

    fn source(&self, p: &NetworkParams) -> (f64, f64) {
        match self {
            LaplaceCase::MacroToMacro { .. }
            | LaplaceCase::MacroToSmallCoverage { .. }
            | LaplaceCase::MacroToSmallCapacity => (p.lambda_mc, p.p_mc),
            LaplaceCase::SmallToMacroCoverage { .. } | LaplaceCase::SmallToSmallCoverage { .. } => {
                (p.lambda_sc_prime, p.p_sc)
            }
            LaplaceCase::SmallToMacroCapacity | LaplaceCase::SmallToSmallCapacity => {
                (p.lambda_sc_prime * p.c_bar, p.p_sc)
            }
        }
    }
}

/// Sample mean of `exp(-s I)` and its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub mean: f64,
    pub ci_half_width: f64,
    pub n_samples: usize,
    pub half_extent: f64,
}

/// Monte Carlo estimate of `E[exp(-s I)]` for one interference scenario.
///
/// The window is a plain square around the receiver, large enough that the
/// interference mass beyond it changes the transform by less than `2e-3`
/// in the exponent.
pub fn laplace_oracle(
    p: &NetworkParams,
    case: LaplaceCase,
    s: f64,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<LaplaceEstimate> {
    let (lambda, power) = case.source(p);
    let tail = (lambda * PI * s * power / 2e-3).sqrt();
    let half = tail.max(10.0 * p.r_c).max(2.0 * (PI * lambda).powf(-0.5));
    let window = Window::new(half, false)?;
    let master = RandomStream::new(seed);
    let one = |rng: &mut RandomStream| -> Result<f64> {
        let pts = interferers(p, case, &window, rng)?;
        let (sum, _) = faded_sum(&pts, Point::ORIGIN, None, power, p.alpha, &window, rng);
        Ok((-s * sum).exp())
    };
    let values = opts.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| one(&mut master.fork(i)))
            .collect::<Result<Vec<_>>>()
    })??;
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    Ok(LaplaceEstimate {
        mean,
        ci_half_width: Z95 * (var / n as f64).sqrt(),
        n_samples: n,
        half_extent: half,
    })
}

fn interferers(
    p: &NetworkParams,
    case: LaplaceCase,
    window: &Window,
    rng: &mut RandomStream,
) -> Result<Vec<Point>> {
    let outside = |set: PointSet, centre: Point, radius: f64| -> Vec<Point> {
        let r2 = radius * radius;
        set.points
            .into_iter()
            .filter(|q| window.distance_sq(*q, centre) >= r2)
            .collect()
    };
    let pts = match case {
        LaplaceCase::MacroToMacro { r } => {
            outside(sample_ppp(p.lambda_mc, window, Role::Mbs, rng)?, Point::ORIGIN, r)
        }
        LaplaceCase::SmallToSmallCoverage { r } => {
            outside(sample_ppp(p.lambda_sc_prime, window, Role::Sbs, rng)?, Point::ORIGIN, r)
        }
        LaplaceCase::SmallToMacroCoverage { r } => outside(
            sample_ppp(p.lambda_sc_prime, window, Role::Sbs, rng)?,
            Point::new(r, 0.0),
            p.r_c,
        ),
        LaplaceCase::MacroToSmallCoverage { r } => outside(
            sample_ppp(p.lambda_mc, window, Role::Mbs, rng)?,
            Point::new(r, 0.0),
            p.r_c,
        ),
        LaplaceCase::MacroToSmallCapacity => sample_ppp(p.lambda_mc, window, Role::Mbs, rng)?.points,
        LaplaceCase::SmallToMacroCapacity => {
            sample_mcp(p.lambda_sc_prime, p.c_bar, p.r_c, window, rng)?.1.points
        }
        LaplaceCase::SmallToSmallCapacity => {
            let mut pts = sample_mcp(p.lambda_sc_prime, p.c_bar, p.r_c, window, rng)?.1.points;
            let centre = uniform_in_disk(Point::ORIGIN, p.r_c, rng);
            for _ in 0..poisson_count(p.c_bar, rng)? {
                pts.push(uniform_in_disk(centre, p.r_c, rng));
            }
            pts
        }
    };
    Ok(pts)
}
