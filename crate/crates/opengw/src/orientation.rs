//! Signs of oriented short exact sequences and fiber products of linear data.
//!
//! An orientation of `Q^n` is a sign relative to the standard basis. All
//! comparisons reduce to the sign of a determinant.

use std::ops::Mul;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::ring::{signum, Coefficient, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `(-1)^e`
    pub fn parity(e: i64) -> Sign {
        if e.rem_euclid(2) == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_i64(s: i64) -> Option<Sign> {
        match s {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn to_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn to_q(self) -> Q {
        Q::from_i64(self.to_i64())
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, o: Sign) -> Sign {
        if self == o {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        self * Sign::Minus
    }
}

/// `Q^dim` with orientation `sign` times the standard one. A 0-dimensional
/// space is a plus or minus point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedSpace {
    pub dim: usize,
    pub sign: Sign,
}

impl OrientedSpace {
    pub fn new(dim: usize, sign: Sign) -> Self {
        OrientedSpace { dim, sign }
    }
    pub fn standard(dim: usize) -> Self {
        OrientedSpace { dim, sign: Sign::Plus }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OrientationError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("sequence is not exact")]
    NotExact,
    #[error("splitting does not satisfy projection * splitting = identity")]
    NotSplit,
    #[error("combined map (v, w) -> dg(w) - df(v) is not surjective")]
    NotTransverse,
    #[error("candidate basis does not span the fiber product")]
    NotKernelBasis,
}

/// `0 -> sub --inclusion--> total --projection--> quotient -> 0`
#[derive(Clone, Debug)]
pub struct ShortExactSequence {
    pub sub: OrientedSpace,
    pub total: OrientedSpace,
    pub quotient: OrientedSpace,
    pub inclusion: Matrix<Q>,
    pub projection: Matrix<Q>,
}

fn det_sign(m: &Matrix<Q>) -> Option<Sign> {
    match signum(&m.det()) {
        1 => Some(Sign::Plus),
        -1 => Some(Sign::Minus),
        _ => None,
    }
}

/// The sign of an oriented short exact sequence: `Plus` iff an oriented
/// basis of `sub` followed by the split image of an oriented basis of
/// `quotient` is an oriented basis of `total`.
pub fn ses_sign(seq: &ShortExactSequence, splitting: &Matrix<Q>) -> Result<Sign, OrientationError> {
    let (a, n, b) = (seq.sub.dim, seq.total.dim, seq.quotient.dim);
    if a + b != n {
        return Err(OrientationError::Dimension(format!("{a} + {b} != {n}")));
    }
    let shape = |m: &Matrix<Q>, r, c, what: &str| {
        if m.rows != r || m.cols != c {
            Err(OrientationError::Dimension(format!(
                "{what} is {}x{}, expected {r}x{c}",
                m.rows, m.cols
            )))
        } else {
            Ok(())
        }
    };
    shape(&seq.inclusion, n, a, "inclusion")?;
    shape(&seq.projection, b, n, "projection")?;
    shape(splitting, n, b, "splitting")?;
    if !seq.projection.mul(&seq.inclusion).is_zero() {
        return Err(OrientationError::NotExact);
    }
    if seq.projection.mul(splitting) != Matrix::identity(b) {
        return Err(OrientationError::NotSplit);
    }
    let basis = seq.inclusion.hcat(splitting);
    let s = det_sign(&basis).ok_or(OrientationError::NotExact)?;
    Ok(s * seq.sub.sign * seq.quotient.sign * seq.total.sign)
}

/// Linear model of `M _f x_g Gamma` over `X`.
#[derive(Clone, Debug)]
pub struct LinearFiberProblem {
    pub m: OrientedSpace,
    pub gamma: OrientedSpace,
    pub x: OrientedSpace,
    /// `dim X x dim M`
    pub df: Matrix<Q>,
    /// `dim X x dim Gamma`
    pub dg: Matrix<Q>,
}

impl LinearFiberProblem {
    /// `(v, w) -> dg(w) - df(v)`
    pub fn combined_map(&self) -> Matrix<Q> {
        self.df.scale(&Q::from_i64(-1)).hcat(&self.dg)
    }

    pub fn check_shapes(&self) -> Result<(), OrientationError> {
        let x = self.x.dim;
        if self.df.rows != x || self.df.cols != self.m.dim {
            return Err(OrientationError::Dimension("df".into()));
        }
        if self.dg.rows != x || self.dg.cols != self.gamma.dim {
            return Err(OrientationError::Dimension("dg".into()));
        }
        Ok(())
    }

    pub fn is_transverse(&self) -> bool {
        self.check_shapes().is_ok() && self.combined_map().rank() == self.x.dim
    }

    pub fn fiber_dim(&self) -> Result<usize, OrientationError> {
        self.check_shapes()?;
        if !self.is_transverse() {
            return Err(OrientationError::NotTransverse);
        }
        Ok(self.m.dim + self.gamma.dim - self.x.dim)
    }

    /// Some basis of the fiber product, as columns in `Q^{dim M + dim Gamma}`.
    pub fn kernel_basis(&self) -> Result<Matrix<Q>, OrientationError> {
        self.fiber_dim()?;
        Ok(self.combined_map().kernel())
    }

    /// The kernel basis, with its first column negated if needed so that it
    /// is positively oriented. When the fiber is a point, the sign is
    /// returned separately.
    pub fn oriented_kernel_basis(&self) -> Result<(Matrix<Q>, Sign), OrientationError> {
        let mut k = self.kernel_basis()?;
        let s = fiber_orientation_sign(self, &k)?;
        if s == Sign::Minus && k.cols > 0 {
            for i in 0..k.rows {
                let v = -k[(i, 0)].clone();
                k[(i, 0)] = v;
            }
            return Ok((k, Sign::Plus));
        }
        Ok((k, s))
    }
}

/// Sign of `candidate` (columns spanning the fiber product) against the
/// fiber product orientation.
pub fn fiber_orientation_sign(
    prob: &LinearFiberProblem,
    candidate: &Matrix<Q>,
) -> Result<Sign, OrientationError> {
    let f = prob.fiber_dim()?;
    let n = prob.m.dim + prob.gamma.dim;
    if candidate.rows != n || candidate.cols != f {
        return Err(OrientationError::NotKernelBasis);
    }
    let d = prob.combined_map();
    if !d.mul(candidate).is_zero() || candidate.rank() != f {
        return Err(OrientationError::NotKernelBasis);
    }
    let splitting = d.right_inverse().ok_or(OrientationError::NotTransverse)?;
    let seq = ShortExactSequence {
        sub: OrientedSpace::standard(f),
        total: OrientedSpace::new(n, prob.m.sign * prob.gamma.sign),
        quotient: prob.x,
        inclusion: candidate.clone(),
        projection: d,
    };
    ses_sign(&seq, &splitting)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    /// `(dM) x Gamma`
    BoundaryM,
    /// `M x (dGamma)`
    BoundaryGamma,
}

/// Sign of a boundary face of `M _f x_g Gamma` relative to the fiber product
/// orientation of the face: `(-1)^{dim X + dim Gamma}` on `(dM) x Gamma` and
/// `(-1)^{dim X}` on `M x (dGamma)`.
pub fn boundary_sign_formula(dim_m: usize, dim_gamma: usize, dim_x: usize, face: Face) -> Sign {
    let _ = dim_m;
    match face {
        Face::BoundaryM => Sign::parity((dim_x + dim_gamma) as i64),
        Face::BoundaryGamma => Sign::parity(dim_x as i64),
    }
}

/// Sign of `(p, q) -> (sigma_M p, sigma_Gamma q)` on the fiber product,
/// given the signs of compatible diffeomorphisms of `M`, `Gamma` and `X`.
pub fn flip_sign(sgn_m: Sign, sgn_gamma: Sign, sgn_x: Sign) -> Sign {
    sgn_m * sgn_gamma * sgn_x
}

/// Sign of `(M x_X Gamma) x_Y C ~ M x_{X x Y} (Gamma x C)`; `codim_h` is
/// `dim Y - dim C`.
pub fn association_sign(dim_x: usize, codim_h: i64) -> Sign {
    Sign::parity(dim_x as i64 * codim_h)
}
