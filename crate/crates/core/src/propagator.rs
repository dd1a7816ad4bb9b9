//! Propagators `V_{t,s} = Lambda_t Lambda_s^-` built from generalized inverses.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{certify, kernel_inclusion, MapCertificate};
use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::ginverse::{build_ginverse, moore_penrose, transversal_ginverse, GInverseParams};
use crate::linalg::{frobenius, real_part, same_column_space, svd, RealMatrix};
use crate::search::Uniqueness;
use crate::spectral::{spectral_decompose_transfer, spectral_ginverse, DEFAULT_COND_MAX, ZERO_EIGENVALUE_TOL};
use crate::tol::Tolerances;
use crate::transfer::TransferMatrix;

/// How `Lambda_s^-` is chosen at each time.
#[derive(Debug, Clone, PartialEq)]
pub enum InverseRule {
    MoorePenrose,
    /// `sum over nonzero lambda of lambda^-1 P_a`; needs a diagonalizable map.
    Spectral,
    /// Complement `Ker Lambda_s` in the codomain, preimages in `Im Lambda_s`.
    KernelComplement,
    /// Complement `Ker Lambda_s^* = (Im Lambda_s)^perp`, preimages in `Im Lambda_s`.
    DualKernelComplement,
    /// A fixed codomain complement (columns), used at every time.
    FixedComplement {
        complement: RealMatrix,
        domain_complement: Option<RealMatrix>,
    },
    /// A member of the trace-preserving family at parameter `theta`.
    TracePreserving(Vec<f64>),
}

impl InverseRule {
    pub fn label(&self) -> &'static str {
        match self {
            InverseRule::MoorePenrose => "moore-penrose",
            InverseRule::Spectral => "spectral",
            InverseRule::KernelComplement => "kernel-complement",
            InverseRule::DualKernelComplement => "dual-kernel-complement",
            InverseRule::FixedComplement { .. } => "fixed-complement",
            InverseRule::TracePreserving(_) => "trace-preserving",
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        match self {
            InverseRule::TracePreserving(theta) => theta.clone(),
            _ => Vec::new(),
        }
    }

    /// The generalized inverse of `ts` selected by this rule.
    pub fn inverse(&self, ts: &TransferMatrix, tol: &Tolerances) -> Result<RealMatrix> {
        let a = ts.matrix();
        let scale = frobenius(a).max(1.0);
        let g = match self {
            InverseRule::MoorePenrose => moore_penrose(a, tol.tol_rank),
            InverseRule::Spectral => {
                let s = spectral_decompose_transfer(ts, DEFAULT_COND_MAX)?;
                let g = spectral_ginverse(&s, ZERO_EIGENVALUE_TOL);
                real_part(&g, 1e-8 * frobenius(&g).max(1.0))?
            }
            InverseRule::KernelComplement => {
                let s = svd(a, tol.tol_rank);
                transversal_ginverse(a, &s.kernel(), Some(&s.image()), None, tol)?
            }
            InverseRule::DualKernelComplement => {
                let s = svd(a, tol.tol_rank);
                transversal_ginverse(a, &s.cokernel(), Some(&s.image()), None, tol)?
            }
            InverseRule::FixedComplement { complement, domain_complement } => {
                transversal_ginverse(a, complement, domain_complement.as_ref(), None, tol)?
            }
            InverseRule::TracePreserving(theta) => tp_inverse_family(ts, tol)?.instantiate(theta)?,
        };
        let residual = frobenius(&(a * &g * a - a)) / scale;
        if residual > tol.tol_identity {
            return Err(Error::NotGeneralizedInverse { residual });
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseChoice {
    pub rule: String,
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorReport {
    #[serde(with = "crate::io::serde_transfer")]
    pub v: TransferMatrix,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub inverse_choice: InverseChoice,
    pub certificate: MapCertificate,
    /// `|| V T_s - T_t ||_F`.
    pub propagation_residual: f64,
    pub image_match: bool,
    pub uniqueness: Uniqueness,
}

fn check_divisible(ts: &TransferMatrix, tt: &TransferMatrix, tol: &Tolerances) -> Result<()> {
    let k = kernel_inclusion(ts, tt, tol)?;
    if k.holds {
        Ok(())
    } else {
        Err(Error::NotDivisible { residual: k.residual })
    }
}

/// `V = T_t G_s` with its certificate.
pub fn propagate(
    tt: &TransferMatrix,
    ts: &TransferMatrix,
    gs: &RealMatrix,
    choice: InverseChoice,
    tol: &Tolerances,
) -> Result<PropagatorReport> {
    if gs.shape() != (ts.matrix().ncols(), ts.matrix().nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "inverse is {:?}, expected {}x{}",
            gs.shape(),
            ts.matrix().ncols(),
            ts.matrix().nrows()
        )));
    }
    check_divisible(ts, tt, tol)?;
    let a = ts.matrix();
    let residual = frobenius(&(a * gs * a - a)) / frobenius(a).max(1.0);
    if residual > tol.tol_identity {
        return Err(Error::NotGeneralizedInverse { residual });
    }
    let v = TransferMatrix::rectangular(ts.dim_out(), tt.dim_out(), tt.matrix() * gs)?;
    let propagation_residual = frobenius(&(v.matrix() * a - tt.matrix()));
    let image_match = image_condition_check(&v, tt, tol);
    let certificate = certify(&v, tol);
    Ok(PropagatorReport {
        v,
        s: None,
        t: None,
        inverse_choice: choice,
        certificate,
        propagation_residual,
        image_match,
        uniqueness: Uniqueness::NotSearched,
    })
}

/// Propagator of a family between two times under an inverse rule.
pub fn propagate_family<F: MapFamily + ?Sized>(
    family: &F,
    rule: &InverseRule,
    s: f64,
    t: f64,
    tol: &Tolerances,
) -> Result<PropagatorReport> {
    if t < s {
        return Err(Error::OrderingViolated(format!("need s <= t, got s = {s}, t = {t}")));
    }
    let ts = family.transfer_at(s)?;
    let tt = family.transfer_at(t)?;
    check_divisible(&ts, &tt, tol)?;
    let gs = rule.inverse(&ts, tol)?;
    let choice = InverseChoice {
        rule: rule.label().into(),
        parameters: rule.parameters(),
    };
    let mut report = propagate(&tt, &ts, &gs, choice, tol)?;
    report.s = Some(s);
    report.t = Some(t);
    Ok(report)
}

/// `Im V = Im T_t`.
pub fn image_condition_check(v: &TransferMatrix, tt: &TransferMatrix, tol: &Tolerances) -> bool {
    v.matrix().nrows() == tt.matrix().nrows() && same_column_space(v.matrix(), tt.matrix(), tol.tol_rank)
}

/// `|| V_{t,u} V_{u,s} - V_{t,s} ||_F` under one inverse rule.
pub fn composition_check<F: MapFamily + ?Sized>(
    family: &F,
    rule: &InverseRule,
    s: f64,
    u: f64,
    t: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !(s <= u && u <= t) {
        return Err(Error::OrderingViolated(format!("need s <= u <= t, got ({s}, {u}, {t})")));
    }
    let map = |a: f64, b: f64| -> Result<RealMatrix> {
        let ta = family.transfer_at(a)?;
        let tb = family.transfer_at(b)?;
        check_divisible(&ta, &tb, tol)?;
        Ok(tb.matrix() * rule.inverse(&ta, tol)?)
    };
    let vtu = map(u, t)?;
    let vus = map(s, u)?;
    let vts = map(s, t)?;
    Ok(frobenius(&(vtu * vus - vts)))
}

/// Matrices `base + sum_i theta_i directions[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFamily {
    pub dim_in: usize,
    pub dim_out: usize,
    pub base: RealMatrix,
    pub directions: Vec<RealMatrix>,
    pub labels: Vec<String>,
}

impl AffineFamily {
    pub fn new(dim_in: usize, dim_out: usize, base: RealMatrix, directions: Vec<RealMatrix>, labels: Vec<String>) -> Result<Self> {
        let shape = (dim_out * dim_out, dim_in * dim_in);
        if base.shape() != shape || directions.iter().any(|d| d.shape() != shape) {
            return Err(Error::DimensionMismatch(format!("affine family members must be {}x{}", shape.0, shape.1)));
        }
        if labels.len() != directions.len() {
            return Err(Error::DimensionMismatch("one label per direction".into()));
        }
        Ok(Self { dim_in, dim_out, base, directions, labels })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn matrix_at(&self, theta: &[f64]) -> Result<RealMatrix> {
        if theta.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "family has {} parameters, got {}",
                self.len(),
                theta.len()
            )));
        }
        Ok(self
            .directions
            .iter()
            .zip(theta)
            .fold(self.base.clone(), |acc, (d, &x)| acc + d * x))
    }

    pub fn at(&self, theta: &[f64]) -> Result<TransferMatrix> {
        TransferMatrix::rectangular(self.dim_in, self.dim_out, self.matrix_at(theta)?)
    }

    /// Left-multiplies every member by `m`.
    pub fn premultiply(&self, m: &RealMatrix, dim_out: usize) -> Result<Self> {
        Self::new(
            self.dim_in,
            dim_out,
            m * &self.base,
            self.directions.iter().map(|d| m * d).collect(),
            self.labels.clone(),
        )
    }

    /// Re-parameterizes by a reduced row-echelon basis of the direction span,
    /// so each parameter is one matrix entry of the member (its pivot entry)
    /// and the base has zeros there. Directions that vanish or are dependent
    /// disappear.
    pub fn pruned(&self, tol: f64) -> Self {
        let (rows, cols) = self.base.shape();
        let n = rows * cols;
        let mut m: Vec<Vec<f64>> = self
            .directions
            .iter()
            .map(|d| (0..n).map(|k| d[(k / cols, k % cols)]).collect())
            .collect();
        let scale = m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs())).max(1.0);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..n {
            if r == m.len() {
                break;
            }
            let (best, val) = (r..m.len())
                .map(|i| (i, m[i][c].abs()))
                .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if val <= tol * scale {
                continue;
            }
            m.swap(r, best);
            let p = m[r][c];
            for x in m[r].iter_mut() {
                *x /= p;
            }
            for i in 0..m.len() {
                if i != r && m[i][c] != 0.0 {
                    let f = m[i][c];
                    let pivot_row = m[r].clone();
                    for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                        *x -= f * y;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        m.truncate(r);
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                if x.abs() <= tol * scale {
                    *x = 0.0;
                }
            }
        }
        let directions: Vec<RealMatrix> = m
            .iter()
            .map(|row| RealMatrix::from_fn(rows, cols, |i, j| row[i * cols + j]))
            .collect();
        let mut base = self.base.clone();
        for (d, &p) in directions.iter().zip(&pivots) {
            let coeff = base[(p / cols, p % cols)];
            base -= d * coeff;
        }
        let labels = pivots.iter().map(|&p| format!("V[{},{}]", p / cols, p % cols)).collect();
        Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            base,
            directions,
            labels,
        }
    }
}

/// All trace-preserving generalized inverses `[[1, 0], [y, Gamma]]` of a
/// trace-preserving `T_s = [[1, 0], [x, Delta]]`: `Gamma` runs over the
/// SVD-block family of `Delta` and `y = -Gamma x + n` with `n` in `Ker Delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TPInverseFamily {
    pub dim: usize,
    /// `Delta^-` at the origin (Moore-Penrose).
    pub delta_pinv: RealMatrix,
    pub delta_rank: usize,
    /// Orthonormal basis of `Ker Delta` as columns.
    pub kernel_basis: RealMatrix,
    pub family: AffineFamily,
}

impl TPInverseFamily {
    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    pub fn instantiate(&self, theta: &[f64]) -> Result<RealMatrix> {
        self.family.matrix_at(theta)
    }
}

pub fn tp_inverse_family(ts: &TransferMatrix, tol: &Tolerances) -> Result<TPInverseFamily> {
    if !ts.is_square() {
        return Err(Error::DimensionMismatch("trace-preserving inverse family needs a square map".into()));
    }
    let residual = ts.trace_preservation_residual();
    if residual > tol.tol_identity {
        return Err(Error::NotTracePreserving { residual });
    }
    let (x, delta) = ts.affine_parts();
    let n = delta.nrows();
    let s = svd(&delta, tol.tol_rank);
    let kernel = s.kernel();

    let embed = |gamma: &RealMatrix, y: &DVector<f64>| {
        let mut g = RealMatrix::zeros(n + 1, n + 1);
        g.view_mut((1, 1), (n, n)).copy_from(gamma);
        g.view_mut((1, 0), (n, 1)).copy_from(y);
        g
    };

    let zeros = GInverseParams::zeros(&s);
    let gamma0 = build_ginverse(&s, &zeros)?;
    let mut base = embed(&gamma0, &(-(&gamma0 * &x)));
    base[(0, 0)] = 1.0;

    let mut directions = Vec::new();
    let mut labels = Vec::new();
    let blocks: [(&str, (usize, usize)); 3] = [("X", zeros.x.shape()), ("Y", zeros.y.shape()), ("Z", zeros.z.shape())];
    for (name, (br, bc)) in blocks {
        for i in 0..br {
            for j in 0..bc {
                let mut p = zeros.clone();
                let block = match name {
                    "X" => &mut p.x,
                    "Y" => &mut p.y,
                    _ => &mut p.z,
                };
                block[(i, j)] = 1.0;
                // The map from blocks to Gamma is affine; subtract the origin.
                let dgamma = build_ginverse(&s, &p)? - &gamma0;
                directions.push(embed(&dgamma, &(-(&dgamma * &x))));
                labels.push(format!("{name}[{i},{j}]"));
            }
        }
    }
    for k in 0..kernel.ncols() {
        directions.push(embed(&RealMatrix::zeros(n, n), &kernel.column(k).into_owned()));
        labels.push(format!("k[{k}]"));
    }
    Ok(TPInverseFamily {
        dim: ts.dim(),
        delta_pinv: gamma0,
        delta_rank: s.rank,
        kernel_basis: kernel,
        family: AffineFamily::new(ts.dim(), ts.dim(), base, directions, labels)?,
    })
}

/// `V(theta) = T_t G(theta)` pruned to independent directions.
pub fn propagator_family(tt: &TransferMatrix, ts: &TransferMatrix, fam: &TPInverseFamily, tol: &Tolerances) -> Result<AffineFamily> {
    check_divisible(ts, tt, tol)?;
    Ok(fam.family.premultiply(tt.matrix(), tt.dim_out())?.pruned(1e-10))
}
