//! Alpha-theory certificates for polynomial-exponential systems.
//!
//! For `G = [P; u - exp(y)]` at `X = (y, u)`:
//! `beta = |DG^-1 G|`, `mu = max(1, |DG^-1 diag(C_i |P|, 1)|)` with
//! `C_i = sqrt(d_i) |X|_1^(d_i - 1)`, and
//! `gamma <= mu (D^(3/2) / (2 |X|_1) + sum max(1, e^(y_i) / 2))`.
//! A point is certified when `alpha = beta * gamma` is strictly below
//! `(13 - 3 sqrt 17) / 4`.
//!
//! Everything that feeds the comparison is rounded or padded upward; the
//! threshold is rounded down.

use rug::float::Round;
use rug::ops::{AddAssignRound, AssignRound, DivAssignRound, MulAssignRound, Pow, PowAssignRound};
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_up, norm2_up, spectral_norm_up, Lu};
use crate::numeric::{alpha_threshold, decimal_string, pad_up, parse_float};
use crate::polysys::{CompiledSystem, PolyExpSystem};

/// Digits used for the scalar fields of a certificate.
const SCALAR_DIGITS: usize = 24;

#[derive(Clone, Debug)]
pub struct AlphaParts {
    pub beta: Float,
    pub mu: Float,
    pub gamma: Float,
    pub alpha: Float,
    /// `|DG|_F |DG^-1|_F`
    pub condition: Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub system_id: String,
    pub system_label: String,
    /// Sample index of each height variable.
    pub points: Vec<usize>,
    pub heights: Vec<String>,
    pub u: Vec<String>,
    pub beta: Option<String>,
    pub mu: Option<String>,
    pub gamma_bound: Option<String>,
    pub alpha: Option<String>,
    pub threshold: String,
    pub certified: bool,
    pub precision: u32,
    pub degrees: Vec<u32>,
    pub bombieri_norm: String,
    pub clearing_factors: Vec<Vec<(usize, usize, u32)>>,
    pub reason: Option<String>,
}

impl Certificate {
    pub fn alpha_f64(&self) -> Option<f64> {
        self.alpha.as_ref().and_then(|a| a.parse().ok())
    }
}

/// Precomputed data for repeated alpha evaluations on one system.
#[derive(Clone, Debug)]
pub struct Certifier {
    compiled: CompiledSystem,
    degrees: Vec<u32>,
    norm_p: Float,
    threshold: Float,
    prec: u32,
    system_id: String,
    label: String,
    points: Vec<usize>,
    clearing: Vec<Vec<(usize, usize, u32)>>,
}

fn up(prec: u32) -> Float {
    Float::with_val(prec, 0)
}

impl Certifier {
    pub fn new(sys: &PolyExpSystem, prec: u32) -> Self {
        let mut norm_p = up(prec);
        norm_p.assign_round(&sys.bombieri_norm_sq(), Round::Up);
        norm_p.sqrt_round(Round::Up);
        Certifier {
            compiled: sys.compile(prec),
            degrees: sys.degrees.clone(),
            norm_p,
            threshold: alpha_threshold(prec),
            prec,
            system_id: sys.hash(),
            label: sys.label.clone(),
            points: sys.points.clone(),
            clearing: sys.clearing_factors.clone(),
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn threshold(&self) -> &Float {
        &self.threshold
    }

    pub fn compiled(&self) -> &CompiledSystem {
        &self.compiled
    }

    /// `(y, exp(y))`.
    pub fn point(&self, y: &[Float]) -> Vec<Float> {
        let p = self.prec;
        let mut xu: Vec<Float> = y.iter().map(|v| Float::with_val(p, v)).collect();
        xu.extend(y.iter().map(|v| Float::with_val(p, v.exp_ref())));
        xu
    }

    /// Alpha quantities at an arbitrary `X = (y, u)`.
    pub fn parts_at(&self, xu: &[Float]) -> Result<AlphaParts> {
        let p = self.prec;
        let m = self.compiled.m();
        if xu.len() != 2 * m {
            return Err(Error::DimensionMismatch { expected: 2 * m, got: xu.len() });
        }
        let (g, dg) = self.compiled.eval(xu);
        let lu = Lu::new(&dg, p)?;
        let inv = lu.inverse();
        let mut condition = frobenius_up(&dg, p);
        condition *= frobenius_up(&inv, p);
        let limit = Float::with_val(p, Float::i_exp(1, (p / 2) as i32));
        if !condition.is_finite() || condition > limit {
            return Err(Error::SingularJacobian(format!("condition estimate {} exceeds 2^{}", condition.to_f64(), p / 2)));
        }
        // numerical error of the solve is about condition * 2^-p
        let slack = p / 2 - 8;
        let beta = pad_up(&norm2_up(&lu.solve(&g), p), slack);

        let mut nx1_up = norm2_up(xu, p);
        nx1_up.square_round(Round::Up);
        nx1_up += 1;
        nx1_up.sqrt_round(Round::Up);
        let mut nx1_down = Float::with_val(p, 1);
        for v in xu {
            nx1_down.add_assign_round(Float::with_val_round(p, v.square_ref(), Round::Down).0, Round::Down);
        }
        nx1_down.sqrt_round(Round::Down);

        let mut scaled = inv;
        for (i, &d) in self.degrees.iter().enumerate() {
            let mut c = Float::with_val_round(p, d, Round::Up).0;
            c.sqrt_round(Round::Up);
            if d != 1 {
                let pw = if d == 0 {
                    Float::with_val_round(p, nx1_down.recip_ref(), Round::Up).0
                } else {
                    Float::with_val_round(p, (&nx1_up).pow(d - 1), Round::Up).0
                };
                c.mul_assign_round(&pw, Round::Up);
            }
            c.mul_assign_round(&self.norm_p, Round::Up);
            for row in scaled.iter_mut() {
                row[i] *= &c;
            }
        }
        let mut mu = pad_up(&spectral_norm_up(&scaled, p), slack);
        if mu < 1 {
            mu = Float::with_val(p, 1);
        }

        let dmax = self.degrees.iter().copied().max().unwrap_or(0);
        let mut first = Float::with_val_round(p, dmax, Round::Up).0;
        first.pow_assign_round(Float::with_val(p, 1.5), Round::Up);
        first.div_assign_round(&nx1_down, Round::Up);
        first.div_assign_round(2, Round::Up);
        let mut sum_a = up(p);
        for y in &xu[..m] {
            let mut e = Float::with_val_round(p, y.exp_ref(), Round::Up).0;
            e /= 2;
            sum_a.add_assign_round(if e > 1 { e } else { Float::with_val(p, 1) }, Round::Up);
        }
        first.add_assign_round(&sum_a, Round::Up);
        let mut gamma = Float::with_val(p, &mu);
        gamma.mul_assign_round(&first, Round::Up);
        let mut alpha = Float::with_val(p, &beta);
        alpha.mul_assign_round(&gamma, Round::Up);
        Ok(AlphaParts { beta, mu, gamma, alpha, condition })
    }

    /// Alpha quantities at `(y, exp(y))`.
    pub fn parts(&self, y: &[Float]) -> Result<AlphaParts> {
        self.parts_at(&self.point(y))
    }

    pub fn is_certified(&self, parts: &AlphaParts) -> bool {
        parts.alpha < self.threshold
    }

    pub fn certify(&self, y: &[Float]) -> Certificate {
        let p = self.prec;
        let digits = (p as f64 * std::f64::consts::LOG10_2).ceil() as usize + 5;
        let xu = self.point(y);
        let m = self.compiled.m();
        let mut cert = Certificate {
            system_id: self.system_id.clone(),
            system_label: self.label.clone(),
            points: self.points.clone(),
            heights: xu[..m].iter().map(|v| decimal_string(v, digits)).collect(),
            u: xu[m..].iter().map(|v| decimal_string(v, digits)).collect(),
            beta: None,
            mu: None,
            gamma_bound: None,
            alpha: None,
            threshold: decimal_string(&self.threshold, SCALAR_DIGITS),
            certified: false,
            precision: p,
            degrees: self.degrees.clone(),
            bombieri_norm: decimal_string(&self.norm_p, SCALAR_DIGITS),
            clearing_factors: self.clearing.clone(),
            reason: None,
        };
        match self.parts_at(&xu) {
            Ok(parts) => {
                let sci = |v: &Float| format!("{:e}", Float::with_val(80, v).to_f64());
                cert.beta = Some(sci(&parts.beta));
                cert.mu = Some(sci(&parts.mu));
                cert.gamma_bound = Some(sci(&parts.gamma));
                cert.alpha = Some(decimal_string(&parts.alpha, SCALAR_DIGITS));
                cert.certified = self.is_certified(&parts);
                if !cert.certified {
                    cert.reason = Some("alpha is not below the threshold".into());
                }
            }
            Err(e) => cert.reason = Some(e.to_string()),
        }
        cert
    }
}

pub fn beta(sys: &PolyExpSystem, xu: &[Float], prec: u32) -> Result<Float> {
    Ok(Certifier::new(sys, prec).parts_at(xu)?.beta)
}

pub fn mu(sys: &PolyExpSystem, xu: &[Float], prec: u32) -> Result<Float> {
    Ok(Certifier::new(sys, prec).parts_at(xu)?.mu)
}

pub fn gamma_bound(sys: &PolyExpSystem, xu: &[Float], prec: u32) -> Result<Float> {
    Ok(Certifier::new(sys, prec).parts_at(xu)?.gamma)
}

/// Certificate at `(y, exp(y))`; `y` is over the system's height variables.
pub fn certify(sys: &PolyExpSystem, y: &[Float], prec: u32) -> Certificate {
    Certifier::new(sys, prec).certify(y)
}

/// Recompute a certificate from its recorded heights.
pub fn reverify(sys: &PolyExpSystem, cert: &Certificate) -> Result<Certificate> {
    if sys.hash() != cert.system_id {
        return Err(Error::Domain("certificate belongs to a different system".into()));
    }
    let y = cert.heights.iter().map(|h| parse_float(h, cert.precision)).collect::<Result<Vec<_>>>()?;
    Ok(certify(sys, &y, cert.precision))
}

/// `k` Newton steps on `G` from `xu`; returns the final point and the
/// Euclidean length of each step.
pub fn newton_iterate(
    compiled: &CompiledSystem,
    xu: &[Float],
    k: usize,
) -> Result<(Vec<Float>, Vec<Float>)> {
    let p = compiled.prec();
    let mut x: Vec<Float> = xu.iter().map(|v| Float::with_val(p, v)).collect();
    let mut steps = Vec::with_capacity(k);
    for i in 0..k {
        let (g, dg) = compiled.eval(&x);
        let lu = Lu::new(&dg, p).map_err(|e| Error::SingularJacobian(format!("newton step {i}: {e}")))?;
        let dx = lu.solve(&g);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        steps.push(norm2_up(&dx, p));
    }
    Ok((x, steps))
}

/// Newton step lengths of an approximate zero obey
/// `|step_k| <= (1/2)^(2^k - 1) |step_0|`. Checks the first `count` steps,
/// ignoring those already below `floor`.
pub fn shows_quadratic_contraction(steps: &[Float], count: usize, floor: &Float) -> bool {
    if steps.len() <= count || steps[0].is_zero() {
        return steps.first().is_some_and(|s| s.is_zero());
    }
    (1..=count).all(|k| {
        if steps[k] <= *floor {
            return true;
        }
        let mut bound = Float::with_val(steps[0].prec(), &steps[0]);
        bound >>= (1u32 << k) - 1;
        steps[k] <= bound
    })
}
