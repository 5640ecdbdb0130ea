use rayon::prelude::*;

use super::haar::{k_rule, Method, VolumeEstimate};
use crate::error::{Error, Result};
use crate::matgroup::{NormSpec, RealMatrix};
use crate::numeric::{integrate, substream};
use crate::rootsys::{e_tau_cc, to_f64, xi_hat_cc, ChamberCoords, CompactKind, GroupSpec};

pub const DEFAULT_TOL: f64 = 1e-4;

fn setup(gs: &GroupSpec, norm: &NormSpec) -> Result<ChamberCoords> {
    gs.validate()?;
    norm.validate()?;
    if norm.dim() != gs.rep_dim() {
        return Err(Error::DimMismatch {
            expected: gs.rep_dim(),
            got: norm.dim(),
        });
    }
    let cc = ChamberCoords::new(gs)?;
    if !cc.exps.condition_g {
        return Err(Error::ConditionGRequired);
    }
    Ok(cc)
}

/// τ ↦ ξ̂(τ)/‖A E_τ B‖^m.
fn integrand<'a>(
    cc: &'a ChamberCoords,
    norm: &'a NormSpec,
    ab: Option<(&'a RealMatrix, &'a RealMatrix)>,
) -> impl Fn(&[f64]) -> f64 + 'a {
    let m = to_f64(&cc.exps.m);
    move |tau: &[f64]| {
        let e = e_tau_cc(cc, tau).expect("dimensions checked");
        let n = match ab {
            Some((a, b)) => norm.eval_slice((&(a * &e) * b).data()),
            None => norm.eval_slice(e.data()),
        };
        xi_hat_cc(cc, tau).expect("dimensions checked") / n.powf(m)
    }
}

/// Nested adaptive quadrature over the cube [0, M]^k.
fn cube_integral(f: &dyn Fn(&[f64]) -> f64, k: usize, m: f64, rel_tol: f64) -> f64 {
    fn rec(f: &dyn Fn(&[f64]) -> f64, x: &mut Vec<f64>, k: usize, m: f64, tol: f64) -> f64 {
        if x.len() == k {
            return f(x);
        }
        integrate(
            |s| {
                x.push(s);
                let v = rec(f, x, k, m, tol);
                x.pop();
                v
            },
            0.0,
            m,
            0.0,
            tol,
            400,
        )
        .value
    }
    rec(f, &mut Vec::with_capacity(k), k, m, rel_tol)
}

/// Truncation length M for the τ-integral from the tail bound
/// integrand ≤ K₀ e^{−κ Σ τ_i}, κ = m₂/m₁ − 1. The tolerance is relative to the sampled peak of the integrand.
fn truncation(cc: &ChamberCoords, f: &dyn Fn(&[f64]) -> f64, tol: f64) -> f64 {
    let k = cc.rank - 1;
    let kappa = to_f64(&(cc.exps.m2.expect("rank ≥ 2") / cc.exps.m1)) - 1.0;
    let span = 8.0 / kappa;
    let steps = 8usize;
    let mut k0 = 0.0f64;
    let mut peak = 0.0f64;
    let mut idx = vec![0usize; k];
    loop {
        let tau: Vec<f64> = idx
            .iter()
            .map(|&i| span * i as f64 / steps as f64)
            .collect();
        let v = f(&tau);
        peak = peak.max(v);
        k0 = k0.max(v * (kappa * tau.iter().sum::<f64>()).exp());
        let mut d = 0;
        while d < k && idx[d] == steps {
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
        idx[d] += 1;
    }
    let k0 = 2.0 * k0 / peak;
    let m = ((k as f64 * k0) / (kappa.powi(k as i32) * tol)).ln() / kappa;
    m.max(1.0)
}

fn tau_integral(cc: &ChamberCoords, f: &dyn Fn(&[f64]) -> f64, tol: f64) -> f64 {
    if cc.rank == 1 {
        return f(&[]);
    }
    let m = truncation(cc, f, tol);
    cube_integral(f, cc.rank - 1, m, tol * 1e-2)
}

/// D = ∫_{[0,∞)^{r−1}} ξ̂(τ)/‖E_τ‖^m dτ, so that the chamber volume is ~ D·T^m.
pub fn asymptotic_constant_d(gs: &GroupSpec, norm: &NormSpec, tol: f64) -> Result<f64> {
    let cc = setup(gs, norm)?;
    let f = integrand(&cc, norm, None);
    Ok(tau_integral(&cc, &f, tol))
}

/// C = ∫_K∫_K∫ ξ̂(τ)/‖Ψ(k₁)E_τΨ(k₂)‖^m dτ dk₁ dk₂, so that λ(H_T) ~ C·T^m.
pub fn asymptotic_constant_c(gs: &GroupSpec, norm: &NormSpec, tol: f64) -> Result<f64> {
    let n = gs.rep_dim();
    let id = RealMatrix::identity(n);
    let method = default_k_method(gs);
    Ok(asymptotic_constant_c_skew(gs, norm, &id, &id, method, tol)?.value)
}

/// Default K-integration for the constant C.
pub fn default_k_method(gs: &GroupSpec) -> Method {
    match gs.compact_kind() {
        CompactKind::So2 => Method::Quadrature { k_nodes: 128 },
        CompactKind::So2xSo2 => Method::Quadrature { k_nodes: 12 },
        _ => Method::MonteCarlo {
            samples: 4096,
            seed: 0,
        },
    }
}

/// C(g₁, g₂) with ‖g₁Ψ(k₁)E_τΨ(k₂)g₂‖ in the denominator; λ(H_T[g₁,g₂]) ~ C(g₁,g₂)·T^m.
pub fn asymptotic_constant_c_skew(
    gs: &GroupSpec,
    norm: &NormSpec,
    g1: &RealMatrix,
    g2: &RealMatrix,
    method: Method,
    tol: f64,
) -> Result<VolumeEstimate> {
    let cc = setup(gs, norm)?;
    if gs.compact_kind() == CompactKind::Unsupported {
        return Err(Error::UnsupportedCompactGroup(gs.name()));
    }
    let n = gs.rep_dim();
    for g in [g1, g2] {
        if g.dim() != n {
            return Err(Error::DimMismatch {
                expected: n,
                got: g.dim(),
            });
        }
    }
    let node = |p1: &[f64], p2: &[f64]| -> Result<f64> {
        let a = g1 * &gs.compact_element(p1)?;
        let b = &gs.compact_element(p2)? * g2;
        let f = integrand(&cc, norm, Some((&a, &b)));
        Ok(tau_integral(&cc, &f, tol))
    };
    match method {
        Method::Quadrature { k_nodes } => {
            let rule = k_rule(gs, k_nodes)?;
            let pairs: Vec<(usize, usize)> = (0..rule.len())
                .flat_map(|i| (0..rule.len()).map(move |j| (i, j)))
                .collect();
            let vals: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| Ok(rule[i].1 * rule[j].1 * node(&rule[i].0, &rule[j].0)?))
                .collect::<Result<_>>()?;
            Ok(VolumeEstimate {
                value: vals.iter().sum(),
                stderr: 0.0,
                method,
            })
        }
        Method::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidInput(
                    "Monte Carlo needs at least two samples".into(),
                ));
            }
            let vals: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let mut rng = substream(seed, s as u64);
                    let p1 = gs.sample_compact(&mut rng)?;
                    let p2 = gs.sample_compact(&mut rng)?;
                    node(&p1, &p2)
                })
                .collect::<Result<_>>()?;
            let nf = samples as f64;
            let mean = vals.iter().sum::<f64>() / nf;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            Ok(VolumeEstimate {
                value: mean,
                stderr: (var / nf).sqrt(),
                method,
            })
        }
    }
}
