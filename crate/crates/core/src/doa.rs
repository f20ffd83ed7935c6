//! Direction cosines from recovered receive steering columns.
//!
//! Each uniform subarray contributes one Vandermonde generator
//! `z = exp(iπ·p·u)` with pitch `p`. A single generator only pins `u` modulo
//! `2/p`; the two coprime pitches of one axis leave exactly one consistent
//! branch inside `[−1, 1]`.

use std::f64::consts::PI;

use crate::geometry::{ArrayLayout, Axis, Direction, ReceiveArrayLayout, SubarrayId};
use crate::{CMatrix, Error, Result, C64};

/// Allowed excess of `u² + w²` over 1 before an estimate is flagged.
pub const DISK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorEstimate {
    /// Unit-modulus generator.
    pub z: C64,
    pub pitch: usize,
    /// Number of shift pairs used (subarray length minus one).
    pub weight: f64,
}

/// Least-squares shift ratio `⟨a[..L−1], a[1..]⟩ / ‖a[..L−1]‖²`, projected
/// onto the unit circle.
pub fn estimate_generator(a_sub: &[C64], pitch: usize) -> Result<GeneratorEstimate> {
    let l = a_sub.len();
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "generator estimation needs at least 2 samples, got {l}"
        )));
    }
    let (lead, lag) = (&a_sub[..l - 1], &a_sub[1..]);
    let den: f64 = lead.iter().map(|z| z.norm_sqr()).sum();
    let num: C64 = lead.iter().zip(lag).map(|(a, b)| a.conj() * b).sum();
    if den == 0.0 || num.norm() == 0.0 {
        return Err(Error::InvalidArgument("zero leading block".into()));
    }
    let z = num / den;
    Ok(GeneratorEstimate {
        z: z / z.norm(),
        pitch,
        weight: (l - 1) as f64,
    })
}

/// All `u ∈ [−1 − slack, 1 + slack]` with `exp(iπ·pitch·u) = exp(iψ)`.
fn branches(psi: f64, pitch: usize, slack: f64) -> Vec<f64> {
    let p = pitch as f64;
    let lo = ((-(1.0 + slack) * p * PI - psi) / (2.0 * PI)).floor() as i64;
    let hi = (((1.0 + slack) * p * PI - psi) / (2.0 * PI)).ceil() as i64;
    (lo..=hi)
        .map(|k| (psi + 2.0 * PI * k as f64) / (PI * p))
        .filter(|u| u.abs() <= 1.0 + slack)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoprimeResolution {
    /// Direction cosine in `[−1, 1]`.
    pub u: f64,
    /// `|u_a − u_b|` of the selected branch pair.
    pub mismatch: f64,
    /// Set when the mismatch exceeds `2/(Ma·Nb)`.
    pub flagged: bool,
}

/// Picks the branch pair of two coprime-pitch generators that agree best and
/// returns their weighted mean.
pub fn resolve_coprime(ga: &GeneratorEstimate, gb: &GeneratorEstimate) -> Result<CoprimeResolution> {
    let (ma, nb) = (ga.pitch, gb.pitch);
    if ma == 0 || nb == 0 {
        return Err(Error::InvalidArgument("pitch must be positive".into()));
    }
    let (mut x, mut y) = (ma, nb);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    if x != 1 {
        return Err(Error::InvalidArgument(format!("pitches {ma} and {nb} are not coprime")));
    }

    let spacing = 2.0 / (ma * nb) as f64;
    let slack = spacing / 2.0;
    let ua = branches(ga.z.arg(), ma, slack);
    let ub = branches(gb.z.arg(), nb, slack);
    let (wa, wb) = if ga.weight + gb.weight > 0.0 {
        (ga.weight, gb.weight)
    } else {
        (1.0, 1.0)
    };

    let mut best: Option<(f64, f64, f64)> = None;
    for &a in &ua {
        for &b in &ub {
            let u = (wa * a + wb * b) / (wa + wb);
            let mismatch = (a - b).abs();
            // branches past the endpoints only win if nothing in range fits
            let cost = mismatch + (u.abs() - 1.0).max(0.0);
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, u, mismatch));
            }
        }
    }
    let (_, u, mismatch) = best.expect("both branch sets are nonempty");
    Ok(CoprimeResolution {
        u: u.clamp(-1.0, 1.0),
        mismatch,
        flagged: mismatch > spacing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoaFlags {
    /// A coprime pair disagreed by more than the match tolerance, or an axis
    /// had only one usable subarray with pitch above 1.
    pub ambiguity: bool,
    /// `u² + w²` exceeded 1 by more than [`DISK_TOLERANCE`].
    pub outside_disk: bool,
}

impl DoaFlags {
    pub fn any(&self) -> bool {
        self.ambiguity || self.outside_disk
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoaEstimate {
    pub direction: Direction,
    pub u: f64,
    pub w: f64,
    pub array: usize,
    pub target: usize,
    pub flags: DoaFlags,
}

fn axis_cosine(column: &[C64], layout: &ReceiveArrayLayout, axis: Axis) -> Result<(f64, bool)> {
    let mut gens = Vec::with_capacity(2);
    for id in SubarrayId::ALL.into_iter().filter(|id| id.axis == axis) {
        let idx = layout.indices(id);
        if idx.len() < 2 {
            continue;
        }
        let sub: Vec<C64> = idx.iter().map(|&i| column[i]).collect();
        gens.push(estimate_generator(&sub, layout.pitch(id))?);
    }
    match gens.as_slice() {
        [a, b] => {
            let res = resolve_coprime(a, b)?;
            Ok((res.u, res.flagged))
        }
        [g] => {
            let cands = branches(g.z.arg(), g.pitch, 0.0);
            let u = cands
                .iter()
                .copied()
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            Ok((u, cands.len() > 1))
        }
        _ => Err(Error::InvalidArgument(format!(
            "no subarray with at least 2 elements on the {axis:?} axis"
        ))),
    }
}

/// One DOA per column of a recovered steering matrix.
pub fn doas_from_factors(a_hat: &CMatrix, layout: &ReceiveArrayLayout, array: usize) -> Result<Vec<DoaEstimate>> {
    if a_hat.nrows() != layout.len() {
        return Err(Error::ShapeMismatch(format!(
            "steering matrix has {} rows, layout has {} elements",
            a_hat.nrows(),
            layout.len()
        )));
    }
    (0..a_hat.ncols())
        .map(|target| {
            let column: Vec<C64> = a_hat.column(target).iter().copied().collect();
            let (mut u, amb_x) = axis_cosine(&column, layout, Axis::X)?;
            let (mut w, amb_y) = axis_cosine(&column, layout, Axis::Y)?;
            let rho2 = u * u + w * w;
            let outside_disk = rho2 > 1.0 + DISK_TOLERANCE;
            if rho2 > 1.0 {
                let rho = rho2.sqrt();
                u /= rho;
                w /= rho;
            }
            Ok(DoaEstimate {
                direction: Direction::from_cosines(u, w)?,
                u,
                w,
                array,
                target,
                flags: DoaFlags {
                    ambiguity: amb_x || amb_y,
                    outside_disk,
                },
            })
        })
        .collect()
}
