use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ActionAngleChart, Coupling, HamiltonianModel};
use crate::error::MechanicsError;
use crate::series::{weighted_norm, Factor, MonomialKey, NormParams, TFSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalFormConfig {
    /// Highest power of `J` kept in each site Hamiltonian.
    pub site_degree: usize,
    /// Angles per axis of the FFT grid.
    pub grid: usize,
    /// Integrator substeps between grid angles.
    pub substeps: usize,
    /// Action step of the Taylor differences.
    pub fd_step: f64,
    pub max_l1: u32,
    /// Coupling coefficients below this (before mass scaling) are dropped.
    pub drop_tol: f64,
    /// Largest coefficient allowed beyond `3/8` of the grid.
    pub alias_tol: f64,
    /// Norm in which the coupling is reported.
    pub norm: NormParams,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        Self {
            site_degree: 4,
            grid: 128,
            substeps: 16,
            fd_step: 1e-3,
            max_l1: 8,
            drop_tol: 1e-12,
            alias_tol: 1e-9,
            norm: NormParams {
                beta: 0.5,
                rho: 1.0,
                sigma: 0.25,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    /// `xi0 . J + P_h + eps P~`, all mass-scaled.
    pub series: TFSeries,
    /// `P_h`: the site terms of degree `2..=site_degree` in `J`.
    pub site_part: TFSeries,
    /// `eps P~` without its constant.
    pub coupling: TFSeries,
    pub coupling_norm: f64,
    /// Model energy at `J = 0` minus the series there.
    pub energy_offset: f64,
    pub base_actions: Vec<f64>,
    pub base_energies: Vec<f64>,
    /// Frequencies reachable inside the chart, per site.
    pub frequency_box: Vec<(f64, f64)>,
    /// `max_i |omega(h_i) - xi0_i|`
    pub frequency_mismatch: f64,
    /// Largest tail coefficient met in the FFTs.
    pub aliasing_tail: f64,
    /// Sum of the mass-scaled coefficients cut by `max_l1`, a bound on the
    /// truncation error at real `(phi, J)` with `|J_i| <= 1`.
    pub truncation_error: f64,
}

/// Rewrites a one-dimensional model in the action-angle variables of
/// `chart`, centred on the tori with frequencies `xi0`.
///
/// With `y_i = m_i y~_i` every site contributes `m_i h(L_i)`. Expanding
/// around `L_i*`, where `h'(L_i*) = xi0_i`, gives `m_i xi0_i J_i` plus the
/// Taylor terms of `P_h`. Couplings are sampled along the orbits at
/// `L_i* + {-d, 0, d}`, differenced to second order in `J` and expanded in
/// the two angles by FFT.
pub fn to_normal_form(
    model: &HamiltonianModel,
    chart: &ActionAngleChart,
    xi0: &[f64],
    cfg: &NormalFormConfig,
) -> Result<NormalForm, MechanicsError> {
    if model.dim != 1 || chart.is_planar() {
        return Err(MechanicsError::Unsupported("normal forms are built for sites on a line".into()));
    }
    if model.potential != chart.potential {
        return Err(MechanicsError::Domain("chart was built for another potential".into()));
    }
    let n = model.sites();
    if xi0.len() != n {
        return Err(MechanicsError::Domain(format!("{} frequencies for {n} sites", xi0.len())));
    }
    if matches!(model.coupling, Coupling::Heliocentric) {
        return Err(MechanicsError::Unsupported("heliocentric couplings have no Taylor-Fourier form here".into()));
    }
    if cfg.grid < 8 || cfg.grid % 2 != 0 {
        return Err(MechanicsError::Domain(format!("FFT grid {}", cfg.grid)));
    }
    let m = &model.masses;
    let (a, b) = chart.domain.energy;
    let (wa, wb) = (chart.frequency(a, 0.0)?, chart.frequency(b, 0.0)?);
    let window = (wa.min(wb), wa.max(wb));

    let mut base_energies = Vec::with_capacity(n);
    let mut base_actions = Vec::with_capacity(n);
    let mut mismatch = 0.0f64;
    for &target in xi0 {
        if !(target >= window.0 && target <= window.1) {
            return Err(MechanicsError::Domain(format!(
                "frequency {target} outside the chart range [{}, {}]",
                window.0, window.1
            )));
        }
        let h = solve_frequency(chart, target, (a, wa), (b, wb))?;
        mismatch = mismatch.max((chart.frequency(h, 0.0)? - target).abs());
        base_energies.push(h);
        base_actions.push(chart.action(h, 0.0)?);
    }

    let mut site_part = TFSeries::zero(m.n_max());
    let mut fact = 1.0;
    for k in 2..=cfg.site_degree {
        fact *= k as f64;
        for (i, &l) in base_actions.iter().enumerate() {
            let site = i as u32 + 1;
            let c = m.weight(site) * chart.fitted_derivative(l, k)? / fact;
            site_part.add_term(MonomialKey::single(site, 0, k as u32), Complex64::new(c, 0.0));
        }
    }

    let mut offset: f64 = base_energies.iter().enumerate().map(|(i, h)| m.weight(i as u32 + 1) * h).sum();
    let mut coupling = TFSeries::zero(m.n_max());
    let mut tail = 0.0f64;
    let mut truncation = 0.0;
    let strength = match model.coupling {
        Coupling::CosDifference { strength } => strength,
        _ => 0.0,
    };
    if model.eps > 0.0 && strength != 0.0 && n > 1 {
        let d = cfg.fd_step;
        let orbits: Vec<Vec<Vec<f64>>> = base_actions
            .par_iter()
            .map(|&l| {
                [-d, 0.0, d]
                    .iter()
                    .map(|s| Ok(chart.orbit(l + s, cfg.grid, cfg.substeps)?.into_iter().map(|p| p.0).collect()))
                    .collect::<Result<Vec<_>, MechanicsError>>()
            })
            .collect::<Result<_, _>>()?;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let blocks: Vec<Block> = pairs
            .par_iter()
            .map(|&(i, j)| pair_block(&orbits[i], &orbits[j], i as u32 + 1, j as u32 + 1, strength, cfg))
            .collect::<Result<_, _>>()?;
        for (block, &(i, j)) in blocks.into_iter().zip(&pairs) {
            let scale = model.eps * m.weight(i as u32 + 1) * m.weight(j as u32 + 1);
            offset += scale * block.constant;
            tail = tail.max(block.tail);
            truncation += scale * block.dropped;
            for (key, c) in block.terms {
                coupling.add_term(key, c * scale);
            }
        }
    }
    let coupling_norm = weighted_norm(&coupling, m, &cfg.norm)?.value;
    let mut series = TFSeries::frequency_part(xi0, m);
    series += &site_part;
    series += &coupling;
    Ok(NormalForm {
        series,
        site_part,
        coupling,
        coupling_norm,
        energy_offset: offset,
        base_actions,
        base_energies,
        frequency_box: vec![window; n],
        frequency_mismatch: mismatch,
        aliasing_tail: tail,
        truncation_error: truncation,
    })
}

/// Energy in `[a, b]` whose frequency is `target`, by bisection.
fn solve_frequency(chart: &ActionAngleChart, target: f64, lo: (f64, f64), hi: (f64, f64)) -> Result<f64, MechanicsError> {
    let ((mut a, wa), (mut b, _)) = (lo, hi);
    let rising = hi.1 > wa;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let w = chart.frequency(mid, 0.0)?;
        if (w < target) == rising {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

struct Block {
    terms: Vec<(MonomialKey, Complex64)>,
    constant: f64,
    tail: f64,
    dropped: f64,
}

/// Taylor-Fourier terms of `s cos(x_i - x_j)` to second order in `(J_i, J_j)`.
fn pair_block(
    oi: &[Vec<f64>],
    oj: &[Vec<f64>],
    si: u32,
    sj: u32,
    strength: f64,
    cfg: &NormalFormConfig,
) -> Result<Block, MechanicsError> {
    let g = cfg.grid;
    let d = cfg.fd_step;
    let f = |a: usize, b: usize| -> Vec<f64> {
        let mut v = Vec::with_capacity(g * g);
        for p in 0..g {
            for q in 0..g {
                v.push(strength * (oi[a][p] - oj[b][q]).cos());
            }
        }
        v
    };
    let grids: Vec<Vec<Vec<f64>>> = (0..3).map(|a| (0..3).map(|b| f(a, b)).collect()).collect();
    let combine = |w: &[((usize, usize), f64)]| -> Vec<f64> {
        (0..g * g).map(|k| w.iter().map(|&((a, b), c)| c * grids[a][b][k]).sum()).collect()
    };
    let taylor: [((u32, u32), Vec<f64>); 6] = [
        ((0, 0), combine(&[((1, 1), 1.0)])),
        ((1, 0), combine(&[((2, 1), 0.5 / d), ((0, 1), -0.5 / d)])),
        ((0, 1), combine(&[((1, 2), 0.5 / d), ((1, 0), -0.5 / d)])),
        ((2, 0), combine(&[((2, 1), 0.5 / (d * d)), ((1, 1), -1.0 / (d * d)), ((0, 1), 0.5 / (d * d))])),
        ((0, 2), combine(&[((1, 2), 0.5 / (d * d)), ((1, 1), -1.0 / (d * d)), ((1, 0), 0.5 / (d * d))])),
        (
            (1, 1),
            combine(&[
                ((2, 2), 0.25 / (d * d)),
                ((2, 0), -0.25 / (d * d)),
                ((0, 2), -0.25 / (d * d)),
                ((0, 0), 0.25 / (d * d)),
            ]),
        ),
    ];
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(g);
    let cut = 3 * g / 8;
    let signed = |k: usize| if k <= g / 2 { k as i64 } else { k as i64 - g as i64 };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut tail = 0.0f64;
    let mut dropped = 0.0;
    for ((ai, aj), values) in taylor {
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        for row in buf.chunks_mut(g) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); g];
        for q in 0..g {
            for p in 0..g {
                col[p] = buf[p * g + q];
            }
            fft.process(&mut col);
            for p in 0..g {
                buf[p * g + q] = col[p];
            }
        }
        let norm = 1.0 / (g * g) as f64;
        for p in 0..g {
            for q in 0..g {
                let c = buf[p * g + q] * norm;
                let (k1, k2) = (signed(p), signed(q));
                if k1.unsigned_abs() as usize >= cut || k2.unsigned_abs() as usize >= cut {
                    tail = tail.max(c.norm());
                    continue;
                }
                if (k1.abs() + k2.abs()) as u32 > cfg.max_l1 || c.norm() <= cfg.drop_tol {
                    dropped += c.norm();
                    continue;
                }
                if (k1, k2, ai, aj) == (0, 0, 0, 0) {
                    constant = c.re;
                    continue;
                }
                let key = MonomialKey::new([Factor::new(si, k1 as i32, ai), Factor::new(sj, k2 as i32, aj)])?;
                terms.push((key, c));
            }
        }
    }
    if tail > cfg.alias_tol {
        return Err(MechanicsError::Aliasing { tail, tol: cfg.alias_tol });
    }
    Ok(Block {
        terms,
        constant,
        tail,
        dropped,
    })
}
