use super::{ensure_square, max_abs, CMatrix, LogDet, C64};
use crate::{Error, Result};

/// Pfaffian of an antisymmetric matrix by pivoted Parlett–Reid elimination,
/// in the same overflow-safe form as determinants.
///
/// Inputs whose antisymmetry defect exceeds `1e-10` of their scale are
/// rejected; smaller defects are removed by antisymmetrizing.
pub fn pfaffian(a: &CMatrix) -> Result<LogDet> {
    let n = ensure_square(a)?;
    let scale = max_abs(a).max(1.0);
    let defect = max_abs(&(a + &a.t()));
    if defect > 1e-10 * scale {
        return Err(Error::Symmetry {
            what: "pfaffian input is not antisymmetric",
            magnitude: defect,
        });
    }
    if n % 2 == 1 {
        return Ok(LogDet::zero());
    }
    let mut m = (a - &a.t()) * C64::new(0.5, 0.0);
    let mut ln_abs = 0.0f64;
    let mut phase = C64::new(1.0, 0.0);
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let (kp, _) = (k + 1..n)
            .map(|r| (r, m[[r, k]].norm()))
            .fold((k + 1, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if kp != k + 1 {
            for c in 0..n {
                m.swap([k + 1, c], [kp, c]);
            }
            for r in 0..n {
                m.swap([r, k + 1], [r, kp]);
            }
            phase = -phase;
        }
        let pivot = m[[k, k + 1]];
        if pivot.norm() == 0.0 {
            return Ok(LogDet::zero());
        }
        ln_abs += pivot.norm().ln();
        phase *= pivot / pivot.norm();
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|c| m[[k, c]] / pivot).collect();
            let col: Vec<C64> = (k + 2..n).map(|r| m[[r, k + 1]]).collect();
            for (i, r) in (k + 2..n).enumerate() {
                for (j, c) in (k + 2..n).enumerate() {
                    m[[r, c]] += tau[i] * col[j] - col[i] * tau[j];
                }
            }
        }
    }
    Ok(LogDet { ln_abs, phase })
}
