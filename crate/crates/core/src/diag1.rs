//! Inductive diagonalization of real-symmetric idempotent functions along
//! `Δ₀ ⊂ Δ₁ ⊂ … ⊂ Δₙ`.
//!
//! Stage `k + 1` turns interval coordinate `j = n − k − 1` into a disc coordinate. With
//! `π` dropping `Im z_j`, the previous conjugator `v` gives `P̃(z) = v(πz)⁻¹·p(z)·v(πz)`
//! on the half domain `Im z_j ≥ 0`. A trivializing frame `V` of `P̃` yields
//! `U(z) = v(πz)·V(z)·V(πz)⁻¹`, which equals `v` on `Δ_k`, and the new conjugator is `U`
//! on the upper half and `conj(U(z̄))` on the lower half.
//!
//! `V` is obtained covariantly: `V(z) = v(πz)⁻¹·F(z)·v(0)·W̃`, where `F` is the transport
//! frame of `p` itself and `W̃` splits `P̃(0)`. Since `F(z)·p(0)·F(z)⁻¹ = p(z)`, this
//! conjugates `P̃(z)` to `diag(I_ℓ, 0)`, and it only needs `p` and `v` at the point and
//! its projection rather than along every transport path.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::{
    build_grid, idempotency_residual, point_key, real_symmetry_residual, sample, ConjClosedGrid,
    DomainDescriptor, GridLayout, GridMatrixFunction, MatrixField, Point, PointKey,
};
use crate::kato::{
    conjugation_residual, rank_trace_deviation, trivialize_with_cache, TransportCache,
    TransportConfig,
};
use crate::numc::{c, idempotent_split, CMatrix, LinalgError};

/// Seam drift above this indicates a pipeline defect rather than discretization error.
pub const DEFAULT_SEAM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagConfig {
    pub layout: GridLayout,
    pub transport: TransportConfig,
    pub seam_tolerance: f64,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            layout: GridLayout::nested(9, 16),
            transport: TransportConfig::default(),
            seam_tolerance: DEFAULT_SEAM_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub k: usize,
    pub rank: usize,
    /// `max ‖S⁻¹·p·S − diag(I_ℓ, 0)‖_F` on the stage grid.
    pub residual: f64,
    /// `max ‖U − v‖_F` on shared real-slice points; zero at the base stage.
    pub seam: f64,
    pub trace_deviation: f64,
    pub min_singular_value: f64,
    pub symmetry_residual: f64,
    /// Residual of the frame `V` against `P̃` on the half grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub stages: Vec<StageReport>,
    pub final_residual: f64,
    pub symmetry_residual: f64,
    pub min_singular_value: f64,
}

impl VerificationReport {
    /// Whether every stage residual is within `tol_resid`.
    pub fn within(&self, tol_resid: f64) -> bool {
        self.stages.iter().all(|s| s.residual <= tol_resid) && self.final_residual <= tol_resid
    }
}

/// How to evaluate a stage conjugator at an arbitrary point of its domain.
#[derive(Debug)]
enum Rule {
    Base {
        w: CMatrix,
    },
    Lifted {
        coord: usize,
        prev: Arc<Rule>,
        v_origin: CMatrix,
        w_tilde: CMatrix,
    },
}

/// Result of a stage: the conjugator on `Δ_k`'s grid and the ledger so far.
#[derive(Debug, Clone)]
pub struct StageState {
    pub k: usize,
    pub conjugator: GridMatrixFunction,
    pub rank: usize,
    pub ledger: Vec<StageReport>,
    rule: Arc<Rule>,
}

struct Ctx<'a, F: ?Sized> {
    p: &'a F,
    cfg: &'a TransportConfig,
    cache: &'a mut TransportCache,
}

fn project(z: &[Complex64], coord: usize) -> Point {
    let mut w = z.to_vec();
    w[coord] = c(w[coord].re, 0.0);
    w
}

fn conj_normalized(z: &[Complex64]) -> Point {
    z.iter().map(|x| c(x.re, -x.im + 0.0)).collect()
}

/// Upper-half representative of `z` for disc coordinate `coord`, and whether the
/// conjugator value must be conjugated. On `Im z_coord = 0` the sign of the first later
/// nonzero imaginary part decides, so that conjugate pairs always take opposite branches.
fn representative(z: &[Complex64], coord: usize) -> (Point, bool) {
    let lower = match z[coord].im {
        b if b > 0.0 => false,
        b if b < 0.0 => true,
        _ => z[coord + 1..]
            .iter()
            .find(|x| x.im != 0.0)
            .is_some_and(|x| x.im < 0.0),
    };
    if lower {
        (conj_normalized(z), true)
    } else {
        (z.to_vec(), false)
    }
}

fn dedupe(points: Vec<Point>) -> (Vec<Point>, Vec<usize>) {
    let mut seen: HashMap<PointKey, usize> = HashMap::new();
    let mut uniq = Vec::new();
    let map = points
        .into_iter()
        .map(|z| {
            *seen.entry(point_key(&z)).or_insert_with(|| {
                uniq.push(z);
                uniq.len() - 1
            })
        })
        .collect();
    (uniq, map)
}

fn singular_here(e: LinalgError, z: &[Complex64]) -> Error {
    match e {
        LinalgError::SingularMatrix { .. } => Error::SingularAtPoint {
            point: crate::funcrep::point_pairs(z),
        },
        other => other.into(),
    }
}

fn eval_rule<F: MatrixField + ?Sized>(
    rule: &Rule,
    points: &[Point],
    ctx: &mut Ctx<'_, F>,
) -> Result<Vec<CMatrix>> {
    match rule {
        Rule::Base { w } => Ok(ctx
            .cache
            .frames(ctx.p, points, ctx.cfg)?
            .iter()
            .map(|f| f * w)
            .collect()),
        Rule::Lifted {
            coord,
            prev,
            v_origin,
            w_tilde,
        } => {
            let (reps, flips): (Vec<Point>, Vec<bool>) =
                points.iter().map(|z| representative(z, *coord)).unzip();
            let (uniq, map) = dedupe(reps);
            let lifted = lift_values(prev, *coord, v_origin, w_tilde, &uniq, ctx)?;
            Ok(map
                .iter()
                .zip(flips)
                .map(|(&i, flip)| {
                    if flip {
                        lifted[i].u.conj()
                    } else {
                        lifted[i].u.clone()
                    }
                })
                .collect())
        }
    }
}

struct LiftedValue {
    u: CMatrix,
    frame: CMatrix,
    v_proj: CMatrix,
}

/// `U`, `V` and `v(πz)` at upper-half points.
fn lift_values<F: MatrixField + ?Sized>(
    prev: &Rule,
    coord: usize,
    v_origin: &CMatrix,
    w_tilde: &CMatrix,
    upper: &[Point],
    ctx: &mut Ctx<'_, F>,
) -> Result<Vec<LiftedValue>> {
    let (proj, pmap) = dedupe(upper.iter().map(|z| project(z, coord)).collect());
    let v_proj = eval_rule(prev, &proj, ctx)?;
    let f_upper = ctx.cache.frames(ctx.p, upper, ctx.cfg)?;
    let f_proj = ctx.cache.frames(ctx.p, &proj, ctx.cfg)?;
    let tail = v_origin * w_tilde;
    let frame_proj: Vec<(CMatrix, CMatrix)> = proj
        .par_iter()
        .zip(&v_proj)
        .zip(&f_proj)
        .map(|((w, v), f)| {
            let v_inv = v.inverse().map_err(|e| singular_here(e, w))?;
            let frame = &(&v_inv * f) * &tail;
            let frame_inv = frame.inverse().map_err(|e| singular_here(e, w))?;
            Ok((v_inv, frame_inv))
        })
        .collect::<Result<_>>()?;
    upper
        .par_iter()
        .zip(&f_upper)
        .zip(&pmap)
        .map(|((_, f), &j)| {
            let (v_inv, frame_proj_inv) = &frame_proj[j];
            let frame = &(v_inv * f) * &tail;
            let u = &(&v_proj[j] * &frame) * frame_proj_inv;
            Ok(LiftedValue {
                u,
                frame,
                v_proj: v_proj[j].clone(),
            })
        })
        .collect()
}

/// Base stage on `Δ₀ = [−1,1]ⁿ`: the transport frame of `p`, which is real there.
pub fn diagonalize_base_real<F: MatrixField + ?Sized>(
    p: &F,
    grid: &ConjClosedGrid,
    cfg: &TransportConfig,
) -> Result<StageState> {
    base_with_cache(p, grid, cfg, &mut TransportCache::default())
}

fn base_with_cache<F: MatrixField + ?Sized>(
    p: &F,
    grid: &ConjClosedGrid,
    cfg: &TransportConfig,
    cache: &mut TransportCache,
) -> Result<StageState> {
    if grid.domain().k != 0 {
        return Err(Error::GridMismatch(format!(
            "base stage needs a grid on Δ₀, got k = {}",
            grid.domain().k
        )));
    }
    let samples = sample(p, grid)?;
    let imag = samples.iter().map(CMatrix::max_abs_imag).fold(0.0, f64::max);
    if imag > cfg.tol.exact {
        return Err(Error::NotRealOnRealSlice { imag });
    }
    let tr = trivialize_with_cache(p, grid, cfg, cache)?;
    let origin = vec![c(0.0, 0.0); grid.domain().n];
    let w = tr.frames.values[grid.find(&origin).ok_or_else(|| {
        Error::GridMismatch("base grid does not contain the origin".into())
    })?]
    .clone();
    // transport at the origin is the identity, so the frame there is W itself
    let report = StageReport {
        k: 0,
        rank: tr.rank,
        residual: tr.residual,
        seam: 0.0,
        trace_deviation: tr.trace_deviation,
        min_singular_value: tr.frames.min_singular_value(),
        symmetry_residual: tr.frames.symmetry_residual(),
        transport_residual: None,
    };
    Ok(StageState {
        k: 0,
        conjugator: tr.frames,
        rank: tr.rank,
        ledger: vec![report],
        rule: Arc::new(Rule::Base { w }),
    })
}

/// One induction step from `Δ_k` to `Δ_{k+1}`.
pub fn lift_step<F: MatrixField + ?Sized>(
    p: &F,
    prev: &StageState,
    half_grid: &ConjClosedGrid,
    full_grid: &ConjClosedGrid,
    cfg: &DiagConfig,
) -> Result<StageState> {
    lift_with_cache(p, prev, half_grid, full_grid, cfg, &mut TransportCache::default())
}

fn lift_with_cache<F: MatrixField + ?Sized>(
    p: &F,
    prev: &StageState,
    half_grid: &ConjClosedGrid,
    full_grid: &ConjClosedGrid,
    cfg: &DiagConfig,
    cache: &mut TransportCache,
) -> Result<StageState> {
    let n = prev.conjugator.grid.domain().n;
    let k = prev.k + 1;
    if half_grid.domain() != DomainDescriptor::new(n, k, true)?
        || full_grid.domain() != DomainDescriptor::new(n, k, false)?
    {
        return Err(Error::GridMismatch(format!(
            "stage {k} needs grids on Δ{k}⁺ and Δ{k} with n = {n}"
        )));
    }
    let coord = n - k;
    let mut ctx = Ctx {
        p,
        cfg: &cfg.transport,
        cache,
    };
    let origin = vec![c(0.0, 0.0); n];
    let v_origin = eval_rule(&prev.rule, std::slice::from_ref(&origin), &mut ctx)?.remove(0);
    let p_tilde0 = v_origin.similarity(&p.eval(&origin)?)?;
    let split = idempotent_split(&p_tilde0, cfg.transport.tol.resid)?;
    if split.rank != prev.rank {
        return Err(Error::RankMismatch {
            expected: prev.rank,
            found: split.rank,
        });
    }
    let lifted = lift_values(
        &prev.rule,
        coord,
        &v_origin,
        &split.frame,
        half_grid.points(),
        &mut ctx,
    )?;

    let half_samples = sample(p, half_grid)?;
    let target = CMatrix::projector_block(split.frame.rows(), split.rank);
    let transport_residual = lifted
        .par_iter()
        .zip(&half_samples)
        .map(|(l, pz)| {
            let p_tilde = l.v_proj.similarity(pz)?;
            Ok::<f64, Error>(l.frame.similarity(&p_tilde)?.dist(&target))
        })
        .try_reduce(|| 0.0, |a: f64, b| Ok(a.max(b)))?;

    let mut seam: Option<f64> = None;
    for (z, l) in half_grid.points().iter().zip(&lifted) {
        if z[coord].im != 0.0 {
            continue;
        }
        if let Some(j) = prev.conjugator.grid.find(z) {
            let d = l.u.dist(&prev.conjugator.values[j]);
            seam = Some(seam.map_or(d, |s| s.max(d)));
        }
    }
    let seam = seam.ok_or_else(|| {
        Error::GridMismatch(format!("Δ{k}⁺ grid shares no real-slice points with Δ{}", k - 1))
    })?;
    if !(seam <= cfg.seam_tolerance) {
        return Err(Error::SeamDiscontinuity {
            residual: seam,
            tolerance: cfg.seam_tolerance,
        });
    }

    let u = GridMatrixFunction::new(
        half_grid.clone(),
        lifted.into_iter().map(|l| l.u).collect(),
    )?;
    let s = reflect_extend(&u, full_grid)?;
    let samples = sample(p, full_grid)?;
    let report = StageReport {
        k,
        rank: split.rank,
        residual: conjugation_residual(&s.values, &samples, split.rank)?,
        seam,
        trace_deviation: rank_trace_deviation(&samples, split.rank)?,
        min_singular_value: s.min_singular_value(),
        symmetry_residual: s.symmetry_residual(),
        transport_residual: Some(transport_residual),
    };
    let mut ledger = prev.ledger.clone();
    ledger.push(report);
    Ok(StageState {
        k,
        conjugator: s,
        rank: split.rank,
        ledger,
        rule: Arc::new(Rule::Lifted {
            coord,
            prev: prev.rule.clone(),
            v_origin,
            w_tilde: split.frame,
        }),
    })
}

/// Glues `u` on the half grid into `S` on the full grid: `S = u` on the upper half and
/// `S(z) = conj(u(z̄))` on the lower half, so paired points get exactly conjugate values.
pub fn reflect_extend(
    u: &GridMatrixFunction,
    full_grid: &ConjClosedGrid,
) -> Result<GridMatrixFunction> {
    let half = u.grid.domain();
    let full = full_grid.domain();
    if !half.half || full.half || half.n != full.n || half.k != full.k {
        return Err(Error::GridMismatch(format!(
            "cannot extend from {half:?} to {full:?}"
        )));
    }
    let coord = half.first_disc();
    let values = full_grid
        .points()
        .iter()
        .map(|z| {
            let (rep, flip) = representative(z, coord);
            let i = u.grid.find(&rep).ok_or_else(|| {
                Error::GridMismatch(format!(
                    "upper-half point {:?} missing from the half grid",
                    crate::funcrep::point_pairs(&rep)
                ))
            })?;
            Ok(if flip {
                u.values[i].conj()
            } else {
                u.values[i].clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GridMatrixFunction::new(full_grid.clone(), values)
}

/// Runs the base stage and all `n` lift steps on grids built from `cfg.layout`.
pub fn diagonalize_real_symmetric<F: MatrixField + ?Sized>(
    p: &F,
    n: usize,
    cfg: &DiagConfig,
) -> Result<(GridMatrixFunction, usize, VerificationReport)> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one coordinate".into()));
    }
    let (rows, cols) = p.dims();
    if rows != cols {
        return Err(Error::InvalidConfig(format!("{rows}×{cols} function is not square")));
    }
    cfg.transport.validate()?;
    let tol = cfg.transport.tol;
    let final_grid = build_grid(DomainDescriptor::polydisc(n), cfg.layout)?;
    let residual = real_symmetry_residual(p, &final_grid)?;
    if residual > tol.resid {
        return Err(Error::NotRealSymmetric { residual });
    }
    let defect = idempotency_residual(p, &final_grid)?;
    if defect > tol.resid {
        return Err(LinalgError::NotIdempotent { defect }.into());
    }

    let mut cache = TransportCache::default();
    let base_grid = build_grid(DomainDescriptor::new(n, 0, false)?, cfg.layout)?;
    let mut state = base_with_cache(p, &base_grid, &cfg.transport, &mut cache)
        .map_err(|e| e.at_stage(0))?;
    for k in 1..=n {
        let half = build_grid(DomainDescriptor::new(n, k, true)?, cfg.layout)?;
        let full = if k == n {
            final_grid.clone()
        } else {
            build_grid(DomainDescriptor::new(n, k, false)?, cfg.layout)?
        };
        state = lift_with_cache(p, &state, &half, &full, cfg, &mut cache)
            .map_err(|e| e.at_stage(k))?;
    }
    let last = state.ledger.last().expect("at least one stage").clone();
    let report = VerificationReport {
        stages: state.ledger,
        final_residual: last.residual,
        symmetry_residual: last.symmetry_residual,
        min_singular_value: last.min_singular_value,
    };
    Ok((state.conjugator, state.rank, report))
}

/// Recomputed checks for a stored conjugator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatorCheck {
    pub final_residual: f64,
    pub symmetry_residual: f64,
    pub min_singular_value: f64,
    pub trace_deviation: f64,
}

pub fn check_conjugator<F: MatrixField + ?Sized>(
    p: &F,
    s: &GridMatrixFunction,
    rank: usize,
) -> Result<ConjugatorCheck> {
    let samples = sample(p, &s.grid)?;
    Ok(ConjugatorCheck {
        final_residual: conjugation_residual(&s.values, &samples, rank)?,
        symmetry_residual: s.symmetry_residual(),
        min_singular_value: s.min_singular_value(),
        trace_deviation: rank_trace_deviation(&samples, rank)?,
    })
}
