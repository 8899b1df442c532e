//! Quantum model of the driven three-mode system: interaction-picture
//! Hamiltonian plus Lindblad dissipators, in the lab frame or in a frame
//! displaced by the semiclassical amplitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, SystemParams};
use crate::error::{Error, Result};
use crate::hilbert::{FockOperator, Mode, ModeDims, QuantumState};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameChoice {
    Lab,
    Displaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Frame {
    Lab,
    Displaced {
        alpha0: Complex64,
        beta0: Complex64,
        zeta0: Complex64,
    },
}

impl Frame {
    pub fn shift(&self, mode: Mode) -> Complex64 {
        match *self {
            Frame::Lab => Complex64::new(0.0, 0.0),
            Frame::Displaced { alpha0, beta0, zeta0 } => match mode {
                Mode::A => alpha0,
                Mode::B => beta0,
                Mode::C => zeta0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollapseOp {
    pub name: &'static str,
    pub rate: f64,
    pub op: FockOperator,
}

/// Lab-frame lowering operators written in a model's frame.
#[derive(Debug, Clone)]
pub struct ModeOperators {
    pub a: FockOperator,
    pub b: FockOperator,
    pub c: FockOperator,
}

impl ModeOperators {
    fn new(dims: ModeDims, frame: &Frame) -> Self {
        let shifted = |m| FockOperator::destroy(dims, m).shift(frame.shift(m));
        Self {
            a: shifted(Mode::A),
            b: shifted(Mode::B),
            c: shifted(Mode::C),
        }
    }

    /// Phonon number `c†c`.
    pub fn phonon_number(&self) -> Result<FockOperator> {
        self.c.adjoint().mul(&self.c)
    }
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub dims: ModeDims,
    pub params: SystemParams,
    pub hamiltonian: FockOperator,
    pub collapse_ops: Vec<CollapseOp>,
    pub frame: Frame,
}

impl LindbladModel {
    /// Builds a model from explicit parts, checking hermiticity and rates.
    pub fn from_parts(
        dims: ModeDims,
        params: SystemParams,
        hamiltonian: FockOperator,
        collapse_ops: Vec<CollapseOp>,
        frame: Frame,
    ) -> Result<Self> {
        hamiltonian.ensure_hermitian("Hamiltonian")?;
        for c in &collapse_ops {
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::Usage(format!("collapse operator {} has rate {}", c.name, c.rate)));
            }
            if c.op.dims() != dims {
                return Err(Error::DimensionMismatch(format!("collapse operator {} dims", c.name)));
            }
        }
        if hamiltonian.dims() != dims {
            return Err(Error::DimensionMismatch("Hamiltonian dims".into()));
        }
        Ok(Self {
            dims,
            params,
            hamiltonian,
            collapse_ops,
            frame,
        })
    }

    pub fn mode_operators(&self) -> ModeOperators {
        ModeOperators::new(self.dims, &self.frame)
    }

    /// Representation in this model's frame of a lab-frame observable, given
    /// as an expression in the lab lowering operators.
    pub fn frame_observable<F>(&self, build: F) -> Result<FockOperator>
    where
        F: FnOnce(&ModeOperators) -> Result<FockOperator>,
    {
        build(&self.mode_operators())
    }

    /// Lab-frame phonon number `c†c` expressed in this frame.
    pub fn phonon_number(&self) -> Result<FockOperator> {
        match self.frame {
            Frame::Lab => Ok(FockOperator::number(self.dims, Mode::C)),
            Frame::Displaced { .. } => self.frame_observable(ModeOperators::phonon_number),
        }
    }

    /// Effective non-Hermitian Hamiltonian `H − (i/2) Σ rate·C†C`.
    pub fn effective_hamiltonian(&self) -> Result<FockOperator> {
        let mut heff = self.hamiltonian.clone();
        for c in &self.collapse_ops {
            let cdc = c.op.adjoint().mul(&c.op)?;
            heff = heff.add_scaled(&cdc, Complex64::new(0.0, -0.5 * c.rate))?;
        }
        Ok(heff)
    }

    /// Charge `n_a − n_c` of every basis state when the lab-frame model
    /// conserves it (it commutes with the Hamiltonian and each dissipator
    /// shifts it uniformly). `None` in the displaced frame.
    pub fn conserved_charge(&self) -> Option<Vec<i64>> {
        match self.frame {
            Frame::Lab => Some(
                (0..self.dims.total())
                    .map(|i| {
                        let [ia, _, ic] = self.dims.levels(i);
                        ia as i64 - ic as i64
                    })
                    .collect(),
            ),
            Frame::Displaced { .. } => None,
        }
    }

    /// Converts a state from this frame back to the lab frame's mechanical
    /// displacement, i.e. the amount by which Wigner coordinates must shift.
    pub fn mechanical_offset(&self) -> Complex64 {
        self.frame.shift(Mode::C)
    }

    /// `⟨O⟩` for a lab-frame observable evaluated on a state in this frame.
    pub fn expect_lab<F>(&self, state: &QuantumState, build: F) -> Result<Complex64>
    where
        F: FnOnce(&ModeOperators) -> Result<FockOperator>,
    {
        state.expect(&self.frame_observable(build)?)
    }
}

/// `iE(B† − B) + g₀(A B† C + A† B C†)` for arbitrary (possibly shifted) mode operators.
fn interaction_hamiltonian(ops: &ModeOperators, g0: f64, drive: f64) -> Result<FockOperator> {
    let bd = ops.b.adjoint();
    let ad = ops.a.adjoint();
    let cd = ops.c.adjoint();
    let drive_term = bd.sub(&ops.b)?.scale(I * drive);
    let abc = ops.a.mul(&bd)?.mul(&ops.c)?;
    let abc_dag = ad.mul(&ops.b)?.mul(&cd)?;
    drive_term.add(&abc.add(&abc_dag)?.scale(Complex64::new(g0, 0.0)))
}

pub fn build_model(p: &SystemParams, dims: ModeDims, choice: FrameChoice) -> Result<LindbladModel> {
    p.validate()?;
    let (gamma, nbar) = p.effective_bath();
    let frame = match choice {
        FrameChoice::Lab => Frame::Lab,
        FrameChoice::Displaced => {
            let lc = analytics::limit_cycle(p).map_err(|e| {
                Error::Usage(format!("displaced frame requires an above-threshold limit cycle: {e}"))
            })?;
            Frame::Displaced {
                alpha0: lc.alpha0,
                beta0: lc.beta0,
                zeta0: Complex64::new(lc.zeta0, 0.0),
            }
        }
    };

    let a = FockOperator::destroy(dims, Mode::A);
    let b = FockOperator::destroy(dims, Mode::B);
    let c = FockOperator::destroy(dims, Mode::C);
    let mut collapse_ops = vec![
        CollapseOp { name: "a", rate: p.kappa, op: a.clone() },
        CollapseOp { name: "b", rate: p.kappa, op: b.clone() },
        CollapseOp { name: "c", rate: gamma * (1.0 + nbar), op: c.clone() },
    ];
    if nbar > 0.0 {
        collapse_ops.push(CollapseOp {
            name: "c_dag",
            rate: gamma * nbar,
            op: c.adjoint(),
        });
    }

    let ops = ModeOperators::new(dims, &frame);
    let mut h = interaction_hamiltonian(&ops, p.g0, p.drive)?;

    if let Frame::Displaced { .. } = frame {
        // D[C + z] = D[C] − i[(i/2)(z*C − zC†), ·]: the shifted dissipators
        // contribute a Hamiltonian term linear in the fluctuations.
        let shifts = [
            (p.kappa, frame.shift(Mode::A), &a),
            (p.kappa, frame.shift(Mode::B), &b),
            (gamma * (1.0 + nbar), frame.shift(Mode::C), &c),
        ];
        for (rate, z, op) in shifts {
            let term = op.scale(z.conj()).sub(&op.adjoint().scale(z))?;
            h = h.add(&term.scale(I * 0.5 * rate))?;
        }
        if nbar > 0.0 {
            let z = frame.shift(Mode::C).conj();
            let cd = c.adjoint();
            let term = cd.scale(z.conj()).sub(&c.scale(z))?;
            h = h.add(&term.scale(I * 0.5 * gamma * nbar))?;
        }
        // Drop the c-number energy.
        let vac = dims.index(0, 0, 0);
        h = h.shift(-h.get(vac, vac));
    }

    LindbladModel::from_parts(dims, *p, h, collapse_ops, frame)
}
