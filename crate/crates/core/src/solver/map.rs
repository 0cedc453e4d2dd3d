use crate::cider::PqReference;
use crate::linalg::{inf_norm, inf_norm_vec};
use crate::ltp::{HarmonicSet, Ordering, SpectralVector};
use crate::{CMatrix, CVector, Error, Result};

/// How a following resource derives its control reference from `Ŵ_ρ`.
#[derive(Debug, Clone)]
pub enum ReferenceMap {
    /// Constant-power reference over a (D, Q) spectrum.
    Pq(PqReference),
    /// Reference independent of the voltage (e.g. a Norton source).
    Fixed(SpectralVector),
}

/// Position of one follower inside the stacked resource-sorted vectors.
#[derive(Debug, Clone)]
pub struct FollowerSlot {
    pub name: String,
    pub rho_offset: usize,
    pub rho_width: usize,
    pub kappa_offset: usize,
    pub kappa_width: usize,
    pub reference: ReferenceMap,
}

/// `Φ(W) = B_RR Ŵ_κ,R(W) + d`.
#[derive(Debug, Clone)]
pub struct FixedPointMap {
    pub harmonics: HarmonicSet,
    pub b_rr: CMatrix,
    pub drive: CVector,
    pub slots: Vec<FollowerSlot>,
    pub flat_start: CVector,
}

impl FixedPointMap {
    /// Lays out followers contiguously and checks dimensions.
    pub fn new(
        harmonics: HarmonicSet,
        b_rr: CMatrix,
        drive: CVector,
        followers: Vec<(String, usize, usize, ReferenceMap)>,
        flat_start: CVector,
    ) -> Result<Self> {
        let nh = harmonics.len();
        let (mut ro, mut ko) = (0, 0);
        let mut slots = Vec::with_capacity(followers.len());
        for (name, rho_width, kappa_width, reference) in followers {
            match &reference {
                ReferenceMap::Pq(_) if rho_width != 2 || kappa_width != 2 => {
                    return Err(Error::Shape(format!("power reference of {name} needs D/Q channels")));
                }
                ReferenceMap::Fixed(w) if w.width() != kappa_width || !w.harmonics().same_as(&harmonics) => {
                    return Err(Error::Shape(format!("fixed reference of {name} has the wrong shape")));
                }
                _ => {}
            }
            slots.push(FollowerSlot {
                name,
                rho_offset: ro,
                rho_width,
                kappa_offset: ko,
                kappa_width,
                reference,
            });
            ro += rho_width * nh;
            ko += kappa_width * nh;
        }
        if b_rr.nrows() != ro || b_rr.ncols() != ko || drive.len() != ro || flat_start.len() != ro {
            return Err(Error::Shape(format!(
                "map expects B_RR {ro}x{ko}, got {}x{}; drive {}, start {}",
                b_rr.nrows(),
                b_rr.ncols(),
                drive.len(),
                flat_start.len()
            )));
        }
        Ok(Self {
            harmonics,
            b_rr,
            drive,
            slots,
            flat_start,
        })
    }

    pub fn dim(&self) -> usize {
        self.drive.len()
    }

    pub fn kappa_dim(&self) -> usize {
        self.b_rr.ncols()
    }

    fn slot_input(&self, s: &FollowerSlot, w: &CVector) -> Result<SpectralVector> {
        let n = s.rho_width * self.harmonics.len();
        SpectralVector::from_coeffs(
            self.harmonics,
            1,
            s.rho_width,
            Ordering::ResourceSorted,
            w.rows(s.rho_offset, n).into_owned(),
        )
    }

    /// Stacked references `Ŵ_κ,R(W)`.
    pub fn references(&self, w: &CVector) -> Result<CVector> {
        if w.len() != self.dim() {
            return Err(Error::Shape(format!("iterate has {} entries, map {}", w.len(), self.dim())));
        }
        let mut out = CVector::zeros(self.kappa_dim());
        for s in &self.slots {
            let r = match &s.reference {
                ReferenceMap::Pq(pq) => pq
                    .evaluate(&self.slot_input(s, w)?)
                    .map_err(|e| tag(e, &s.name))?,
                ReferenceMap::Fixed(v) => v.clone(),
            };
            out.rows_mut(s.kappa_offset, r.len()).copy_from(r.coeffs());
        }
        Ok(out)
    }

    pub fn eval(&self, w: &CVector) -> Result<CVector> {
        Ok(&self.b_rr * self.references(w)? + &self.drive)
    }

    /// Block-diagonal `∂Ŵ_κ,R/∂W`.
    pub fn reference_jacobian(&self, w: &CVector) -> Result<CMatrix> {
        let mut j = CMatrix::zeros(self.kappa_dim(), self.dim());
        for s in &self.slots {
            if let ReferenceMap::Pq(pq) = &s.reference {
                let b = pq.jacobian(&self.slot_input(s, w)?).map_err(|e| tag(e, &s.name))?;
                j.view_mut((s.kappa_offset, s.rho_offset), (b.nrows(), b.ncols())).copy_from(&b);
            }
        }
        Ok(j)
    }

    /// `∇Φ = B_RR ∂Ŵ_κ,R/∂W`.
    pub fn jacobian(&self, w: &CVector) -> Result<CMatrix> {
        Ok(&self.b_rr * self.reference_jacobian(w)?)
    }

    pub fn jacobian_norm(&self, w: &CVector) -> Result<f64> {
        self.jacobian(w).map(|j| inf_norm(&j))
    }

    /// `‖Φ(W) - W‖∞`.
    pub fn residual(&self, w: &CVector) -> Result<f64> {
        Ok(inf_norm_vec(&(self.eval(w)? - w)))
    }
}

fn tag(e: Error, name: &str) -> Error {
    match e {
        Error::DegenerateOperatingPoint(m) => Error::DegenerateOperatingPoint(format!("{name}: {m}")),
        other => other,
    }
}
