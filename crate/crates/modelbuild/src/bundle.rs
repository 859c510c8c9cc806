//! Ready-made demonstration models.
//!
//! Two base phase-type laws, an exponential-tilt step of `0.1`, and two
//! change-point chains are bundled here so that test suites, benchmarks, and
//! the command-line fixtures all construct the same models:
//!
//! * an iid model driven by the three-phase base law;
//! * a *contaminated* model: geometric change index, post-change law equal
//!   to the tilted base law with probability `1 − ε` and to the five-phase
//!   law with probability `ε`, drawn once at the change;
//! * a *mixed* model: five pre-change and three post-change regimes built
//!   from tilts of both base laws, with a dense environment chain.
//!
//! The tilt direction of the post-change shift law follows the requested
//! [`Side`], so that the shifted law is the natural alternative for the
//! detection problem on that side.

use numkernel::{Ctx, Real};
use phasetype::{mgf_kappa, laplace_exponent, tilt, PhaseTypeDist};

use crate::{
    build_changepoint_map, build_iid_map, BuildError, ChangeChainSpec, JumpLaw, MapModel,
    RegimeMap, Side,
};

// ---- base laws and parameters ----

const LAW3_ALPHA: [&str; 3] = ["0.28", "0.35", "0.37"];
const LAW3_T: [[&str; 3]; 3] = [
    ["-0.51", "0.12", "0.12"],
    ["0.21", "-0.46", "0.10"],
    ["0.28", "0.16", "-0.63"],
];

const LAW5_ALPHA: [&str; 5] = ["0.20", "0.25", "0.02", "0.18", "0.35"];
const LAW5_T: [[&str; 5]; 5] = [
    ["-1.45", "0.35", "0.34", "0.34", "0.05"],
    ["0.01", "-1.25", "0.34", "0.34", "0.23"],
    ["0.25", "0.29", "-0.70", "0.10", "0.02"],
    ["0.06", "0.25", "0.28", "-1.01", "0.16"],
    ["0.27", "0.12", "0.08", "0.21", "-0.87"],
];

/// Three-phase base law; the iid model and the shift alternatives use it.
pub fn law_three_phase(ctx: &Ctx) -> PhaseTypeDist {
    PhaseTypeDist::from_strs(
        ctx,
        &LAW3_ALPHA,
        &[&LAW3_T[0], &LAW3_T[1], &LAW3_T[2]],
    )
    .expect("bundled three-phase law is valid")
}

/// Five-phase base law; contaminant and mixed-model regimes derive from it.
pub fn law_five_phase(ctx: &Ctx) -> PhaseTypeDist {
    PhaseTypeDist::from_strs(
        ctx,
        &LAW5_ALPHA,
        &[&LAW5_T[0], &LAW5_T[1], &LAW5_T[2], &LAW5_T[3], &LAW5_T[4]],
    )
    .expect("bundled five-phase law is valid")
}

/// Exponential-tilt step shared by all bundled models; equals the drift.
pub fn tilt_parameter(ctx: &Ctx) -> Real {
    ctx.parse("0.1").expect("tilt parameter parses")
}

/// Cumulant of the three-phase law at the tilt parameter, oriented for
/// `side`; its absolute value is the bundled deterministic jump size.
pub fn jump_size(ctx: &Ctx, side: Side) -> Real {
    let base = law_three_phase(ctx);
    let th = tilt_parameter(ctx);
    match side {
        Side::SpectrallyNegative => laplace_exponent(&base, &th)
            .expect("tilt parameter within domain"),
        Side::SpectrallyPositive => mgf_kappa(&base, &th)
            .expect("tilt parameter within domain"),
    }
}

/// Post-change shift law: the three-phase law exponentially tilted toward
/// the detection side (downward for the spectrally negative orientation,
/// upward for the spectrally positive one).
pub fn shifted_law(ctx: &Ctx, side: Side) -> PhaseTypeDist {
    let base = law_three_phase(ctx);
    let th = tilt_parameter(ctx);
    let signed = match side {
        Side::SpectrallyNegative => -th.clone(),
        Side::SpectrallyPositive => th,
    };
    tilt(&base, &signed).expect("bundled tilt is in domain").tilted
}

// ---- contaminated model ----

/// Change chain with zero-modified geometric change index.
///
/// One pre state; two post states choosing (once, at the change) between
/// the shift law (probability `1 − eps`) and the contaminant (`eps`).  `mu`
/// is the probability of starting changed; `lam` the per-step change
/// probability.
pub fn contaminated_chain(
    ctx: &Ctx,
    eps: &Real,
    mu: &Real,
    lam: &Real,
) -> Result<ChangeChainSpec, BuildError> {
    let one = ctx.one();
    let keep = &one - eps;
    let k = numkernel::RealMatrix::from_rows(vec![vec![&one - lam]])?;
    let l = numkernel::RealMatrix::from_rows(vec![vec![lam * &keep, lam * eps]])?;
    let m = numkernel::RealMatrix::identity(2, ctx);
    let beta = numkernel::RealMatrix::from_rows(vec![vec![
        &one - mu,
        mu * &keep,
        mu * eps,
    ]])?;
    ChangeChainSpec::new(ctx, k, l, m, beta)
}

/// Regimes of the contaminated model: base law before the change, then the
/// side-oriented shift law or the five-phase contaminant.
pub fn contaminated_regimes(ctx: &Ctx, side: Side) -> Result<RegimeMap, BuildError> {
    RegimeMap::new(
        vec![law_three_phase(ctx)],
        vec![shifted_law(ctx, side), law_five_phase(ctx)],
    )
}

/// Assembled contaminated model with the bundled parameters
/// `mu = 0.1`, `lam = 0.2`, drift `0.1`, deterministic jumps.
pub fn contaminated_model(ctx: &Ctx, side: Side, eps: &Real) -> Result<MapModel, BuildError> {
    let mu = ctx.parse("0.1")?;
    let lam = ctx.parse("0.2")?;
    let chain = contaminated_chain(ctx, eps, &mu, &lam)?;
    let regimes = contaminated_regimes(ctx, side)?;
    build_changepoint_map(
        &chain,
        &regimes,
        &tilt_parameter(ctx),
        JumpLaw::Deterministic(jump_size(ctx, side)),
        side,
    )
}

// ---- mixed model ----

const MIX_BETA: [&str; 8] = [
    "0.344", "0.312", "0.064", "0.056", "0.024", "0.06", "0.04", "0.100",
];
const MIX_K: [[&str; 5]; 5] = [
    ["0.232", "0.128", "0.112", "0.144", "0.080"],
    ["0.080", "0.352", "0.112", "0.112", "0.056"],
    ["0.096", "0.200", "0.248", "0.144", "0.016"],
    ["0.048", "0.072", "0.064", "0.480", "0.056"],
    ["0.128", "0.120", "0.056", "0.024", "0.448"],
];
const MIX_L: [[&str; 3]; 5] = [
    ["0.304", "0.000", "0.000"],
    ["0.288", "0.000", "0.000"],
    ["0.000", "0.296", "0.000"],
    ["0.000", "0.280", "0.000"],
    ["0.000", "0.000", "0.224"],
];
const MIX_M: [[&str; 3]; 3] = [
    ["1.0", "0.0", "0.0"],
    ["0.0", "0.3", "0.7"],
    ["0.0", "0.5", "0.5"],
];

/// Dense five-pre / three-post change chain of the mixed model.
pub fn mixed_chain(ctx: &Ctx) -> Result<ChangeChainSpec, BuildError> {
    ChangeChainSpec::from_strs(
        ctx,
        &[&MIX_K[0], &MIX_K[1], &MIX_K[2], &MIX_K[3], &MIX_K[4]],
        &[&MIX_L[0], &MIX_L[1], &MIX_L[2], &MIX_L[3], &MIX_L[4]],
        &[&MIX_M[0], &MIX_M[1], &MIX_M[2]],
        &MIX_BETA,
    )
}

/// Regimes of the mixed model.
///
/// Pre-change states cycle through the three-phase base law and three fixed
/// tilts of the five-phase law (steps `−0.1`, `−0.2`, `+0.05`); post-change
/// states use the side-oriented shift law, the five-phase base law, and its
/// `−0.1` tilt.  The fixed tilts do not depend on `side`.
pub fn mixed_regimes(ctx: &Ctx, side: Side) -> Result<RegimeMap, BuildError> {
    let f_base = law_three_phase(ctx);
    let g_base = law_five_phase(ctx);
    let g_down1 = tilt(&g_base, &ctx.parse("-0.1")?)?.tilted;
    let g_down2 = tilt(&g_base, &ctx.parse("-0.2")?)?.tilted;
    let g_up = tilt(&g_base, &ctx.parse("0.05")?)?.tilted;
    RegimeMap::new(
        vec![f_base.clone(), g_down1.clone(), g_down2, g_up, f_base],
        vec![shifted_law(ctx, side), g_base, g_down1],
    )
}

/// Assembled mixed model with drift `0.1` and deterministic jumps.
pub fn mixed_model(ctx: &Ctx, side: Side) -> Result<MapModel, BuildError> {
    let chain = mixed_chain(ctx)?;
    let regimes = mixed_regimes(ctx, side)?;
    build_changepoint_map(
        &chain,
        &regimes,
        &tilt_parameter(ctx),
        JumpLaw::Deterministic(jump_size(ctx, side)),
        side,
    )
}

// ---- iid model and the full bundle ----

/// Iid model driven by the three-phase base law with drift `0.1` and
/// deterministic jumps sized by the side's cumulant.
pub fn iid_model(ctx: &Ctx, side: Side) -> Result<MapModel, BuildError> {
    build_iid_map(
        &law_three_phase(ctx),
        &tilt_parameter(ctx),
        JumpLaw::Deterministic(jump_size(ctx, side)),
        side,
    )
}

/// Every bundled model on both sides; the contaminated model uses
/// `eps = 0.1`.  Property suites iterate over this list.
pub fn all_models(ctx: &Ctx) -> Result<Vec<(&'static str, MapModel)>, BuildError> {
    let eps = ctx.parse("0.1")?;
    Ok(vec![
        ("iid-sn", iid_model(ctx, Side::SpectrallyNegative)?),
        ("iid-sp", iid_model(ctx, Side::SpectrallyPositive)?),
        (
            "contaminated-sn",
            contaminated_model(ctx, Side::SpectrallyNegative, &eps)?,
        ),
        (
            "contaminated-sp",
            contaminated_model(ctx, Side::SpectrallyPositive, &eps)?,
        ),
        ("mixed-sn", mixed_model(ctx, Side::SpectrallyNegative)?),
        ("mixed-sp", mixed_model(ctx, Side::SpectrallyPositive)?),
    ])
}
