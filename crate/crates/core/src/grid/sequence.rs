use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result, C64};

/// Sequence parameters of a cable type, per km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineType {
    pub id: String,
    /// Positive/negative-sequence resistance, Ω/km.
    pub r_pos: f64,
    /// Zero-sequence resistance, Ω/km.
    pub r_zero: f64,
    /// Positive/negative-sequence inductance, H/km.
    pub l_pos: f64,
    /// Zero-sequence inductance, H/km.
    pub l_zero: f64,
    /// Positive/negative-sequence shunt capacitance, F/km.
    pub c_pos: f64,
    /// Zero-sequence shunt capacitance, F/km.
    pub c_zero: f64,
}

impl LineType {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.r_pos, self.r_zero, self.l_pos, self.l_zero, self.c_pos, self.c_zero];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!(
                "line type {} has negative or non-finite parameters",
                self.id
            )));
        }
        Ok(())
    }
}

/// Phase-domain matrix of a balanced element from its zero and positive sequence values.
///
/// With `a = e^{j2π/3}` the Fortescue similarity gives equal self terms
/// `(z0 + 2 z1) / 3` and equal mutual terms `(z0 - z1) / 3`.
pub fn fortescue(zero: C64, pos: C64) -> CMatrix {
    let s = (zero + pos * 2.0) / 3.0;
    let m = (zero - pos) / 3.0;
    CMatrix::from_fn(3, 3, |i, j| if i == j { s } else { m })
}

/// Series impedance and total shunt admittance of a cable of `length_m` metres at `f` Hz.
pub fn sequence_to_phase(line: &LineType, length_m: f64, f: f64) -> Result<(CMatrix, CMatrix)> {
    if !(length_m > 0.0 && length_m.is_finite()) {
        return Err(Error::Validation(format!("line length must be positive, got {length_m}")));
    }
    if f < 0.0 {
        return Err(Error::Validation(format!("frequency must be nonnegative, got {f}")));
    }
    let km = length_m / 1000.0;
    let w = 2.0 * PI * f;
    let z_pos = C64::new(line.r_pos, w * line.l_pos) * km;
    let z_zero = C64::new(line.r_zero, w * line.l_zero) * km;
    let y_pos = C64::new(0.0, w * line.c_pos) * km;
    let y_zero = C64::new(0.0, w * line.c_zero) * km;
    Ok((fortescue(z_zero, z_pos), fortescue(y_zero, y_pos)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ug1() -> LineType {
        LineType {
            id: "UG1".into(),
            r_pos: 0.162,
            r_zero: 0.529,
            l_pos: 0.262e-3,
            l_zero: 1.185e-3,
            c_pos: 637e-9,
            c_zero: 388e-9,
        }
    }

    #[test]
    fn phase_matrix_has_sequence_eigenvalues() {
        let (z, _) = sequence_to_phase(&ug1(), 1000.0, 50.0).unwrap();
        // symmetric component transform back to sequence domain
        let a = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let f = CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                a * a,
                a,
                C64::new(1.0, 0.0),
                a,
                a * a,
            ],
        );
        let finv = f.clone().try_inverse().unwrap();
        let seq = &finv * &z * &f;
        assert!((seq[(0, 0)] - C64::new(0.529, 2.0 * PI * 50.0 * 1.185e-3)).norm() < 1e-12);
        assert!((seq[(1, 1)] - C64::new(0.162, 0.0823097275)).norm() < 1e-9);
        assert!(seq[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn balanced_sequences_give_diagonal() {
        let mut l = ug1();
        l.r_zero = l.r_pos;
        l.l_zero = l.l_pos;
        let (z, _) = sequence_to_phase(&l, 35.0, 250.0).unwrap();
        let zz = C64::new(0.162, 2.0 * PI * 250.0 * 0.262e-3) * 0.035;
        assert!((z.clone() - CMatrix::identity(3, 3) * zz).iter().all(|e| e.norm() < 1e-15));
    }

    #[test]
    fn dc_is_resistive_and_shunt_open() {
        let (z, y) = sequence_to_phase(&ug1(), 35.0, 0.0).unwrap();
        assert!(z.iter().all(|e| e.im == 0.0));
        assert!(y.iter().all(|e| e.norm() == 0.0));
        assert!(sequence_to_phase(&ug1(), 0.0, 50.0).is_err());
    }
}
