//! JSON documents for operators and kernels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Operator};
use crate::error::{Error, Result};
use crate::kernel::{self, Kernel, Provenance};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub dim: usize,
    pub weight: f64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub blocks: Vec<BlockJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraBlockJson {
    pub dim: usize,
    pub weight: f64,
}

/// Dense complex matrix split into real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperoperatorJson {
    pub algebra: Vec<AlgebraBlockJson>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Any of the accepted kernel encodings. Exactly one of `kraus`,
/// `superoperator`, `unitary` or `matrix` must be present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<OperatorJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superoperator: Option<SuperoperatorJson>,
    /// Full unitary on the ambient space, with the algebra given separately.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<OperatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<Vec<AlgebraBlockJson>>,
    /// Substochastic matrix on a commutative algebra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

fn split(m: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].re).collect()).collect();
    let im = (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].im).collect()).collect();
    (re, im)
}

fn join(re: &[Vec<f64>], im: &[Vec<f64>], rows: usize, cols: usize) -> Result<Matrix> {
    let bad = |what: &str| Error::ShapeMismatch(format!("{what} part is not {rows}x{cols}"));
    if re.len() != rows || re.iter().any(|r| r.len() != cols) {
        return Err(bad("real"));
    }
    // An empty imaginary part means a real matrix.
    let im_empty = im.is_empty();
    if !im_empty && (im.len() != rows || im.iter().any(|r| r.len() != cols)) {
        return Err(bad("imaginary"));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| Complex64::new(re[i][j], if im_empty { 0.0 } else { im[i][j] })))
}

fn algebra_of(blocks: &[AlgebraBlockJson]) -> Result<Algebra> {
    let bs: Vec<(usize, f64)> = blocks.iter().map(|b| (b.dim, b.weight)).collect();
    Algebra::new(&bs)
}

fn algebra_json(a: &Algebra) -> Vec<AlgebraBlockJson> {
    a.blocks().iter().map(|b| AlgebraBlockJson { dim: b.dim, weight: b.weight }).collect()
}

impl OperatorJson {
    pub fn from_operator(x: &Operator) -> Self {
        let blocks = x
            .blocks()
            .iter()
            .zip(x.algebra().blocks())
            .map(|(m, b)| {
                let (re, im) = split(m);
                BlockJson { dim: b.dim, weight: b.weight, re, im }
            })
            .collect();
        Self { blocks }
    }

    /// Builds the operator together with the algebra described by the document.
    pub fn to_operator(&self) -> Result<Operator> {
        let bs: Vec<(usize, f64)> = self.blocks.iter().map(|b| (b.dim, b.weight)).collect();
        let a = Algebra::new(&bs)?;
        self.to_operator_in(&a)
    }

    /// Builds the operator inside an existing algebra (shapes and weights must match).
    pub fn to_operator_in(&self, a: &Algebra) -> Result<Operator> {
        if self.blocks.len() != a.num_blocks() {
            return Err(Error::AlgebraMismatch);
        }
        let mut ms = Vec::with_capacity(self.blocks.len());
        for (bj, b) in self.blocks.iter().zip(a.blocks()) {
            if bj.dim != b.dim || bj.weight != b.weight {
                return Err(Error::AlgebraMismatch);
            }
            ms.push(join(&bj.re, &bj.im, b.dim, b.dim)?);
        }
        Operator::new(a, ms)
    }

    /// Ambient matrix from a single-block document (used for full unitaries).
    pub fn to_single_matrix(&self) -> Result<Matrix> {
        match self.blocks.as_slice() {
            [b] => join(&b.re, &b.im, b.dim, b.dim),
            _ => Err(Error::ShapeMismatch("expected a single dense block".into())),
        }
    }
}

pub fn operator_to_json(x: &Operator) -> String {
    serde_json::to_string(&OperatorJson::from_operator(x)).expect("operator serialization")
}

pub fn operator_from_json(s: &str) -> Result<Operator> {
    serde_json::from_str::<OperatorJson>(s)?.to_operator()
}

impl KernelJson {
    /// Superoperator encoding of any kernel (keeps Kraus terms when present).
    pub fn from_kernel(k: &Kernel) -> Self {
        if let Some(terms) = k.kraus_terms() {
            return Self {
                provenance: Some(k.provenance()),
                kraus: Some(terms.iter().map(OperatorJson::from_operator).collect()),
                ..Self::default()
            };
        }
        let (re, im) = split(k.superoperator());
        Self {
            provenance: Some(k.provenance()),
            superoperator: Some(SuperoperatorJson { algebra: algebra_json(k.algebra()), re, im }),
            ..Self::default()
        }
    }

    /// Builds and re-verifies the kernel.
    pub fn to_kernel(&self, tol: f64, dim_cap: usize) -> Result<Kernel> {
        let present =
            [self.kraus.is_some(), self.superoperator.is_some(), self.unitary.is_some(), self.matrix.is_some()];
        if present.iter().filter(|&&p| p).count() != 1 {
            return Err(Error::BadParameter(
                "kernel document needs exactly one of kraus, superoperator, unitary, matrix".into(),
            ));
        }
        let k = if let Some(terms) = &self.kraus {
            let first = terms.first().ok_or(Error::EmptyKraus)?.to_operator()?;
            let a = first.algebra().clone();
            kernel::check_dimension(&a, dim_cap)?;
            let ops = terms.iter().map(|t| t.to_operator_in(&a)).collect::<Result<Vec<_>>>()?;
            let mut k = kernel::kernel_from_kraus(&a, &ops, self.renormalize.unwrap_or(false))?;
            if let Some(p) = self.provenance {
                k = k.with_provenance(p);
            }
            k
        } else if let Some(s) = &self.superoperator {
            let a = algebra_of(&s.algebra)?;
            kernel::check_dimension(&a, dim_cap)?;
            let n = a.vec_dim();
            let m = join(&s.re, &s.im, n, n)?;
            Kernel::from_superoperator(&a, m, self.provenance.unwrap_or(Provenance::Custom))?
        } else if let Some(u) = &self.unitary {
            let blocks = self.algebra.as_ref().ok_or_else(|| Error::BadParameter("unitary kernel needs an algebra".into()))?;
            let a = algebra_of(blocks)?;
            kernel::check_dimension(&a, dim_cap)?;
            kernel::kernel_from_unitary(&a, &u.to_single_matrix()?, tol)?
        } else {
            let p = self.matrix.as_ref().expect("checked above");
            let n = p.len();
            let w = self.weights.clone().unwrap_or_else(|| vec![1.0; n]);
            let a = Algebra::diagonal(&w)?;
            kernel::check_dimension(&a, dim_cap)?;
            let pm = join(p, &[], n, n)?;
            kernel::kernel_from_stochastic(&a, &pm, tol)?
        };
        let report = kernel::verify_kernel(&k, tol);
        if !report.is_kernel(tol) {
            return Err(Error::NotAKernel(report.summary()));
        }
        Ok(k)
    }
}

pub fn kernel_from_json(s: &str, tol: f64, dim_cap: usize) -> Result<Kernel> {
    serde_json::from_str::<KernelJson>(s)?.to_kernel(tol, dim_cap)
}

pub fn kernel_to_json(k: &Kernel) -> String {
    serde_json::to_string(&KernelJson::from_kernel(k)).expect("kernel serialization")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::DEFAULT_DIM_CAP;

    #[test]
    fn operator_roundtrip_is_exact() {
        let a = Algebra::new(&[(2, 0.3), (1, 1.7)]).unwrap();
        let mut x = a.zero();
        x.block_mut(0)[(0, 1)] = Complex64::new(0.1, -1.0 / 3.0);
        x.block_mut(0)[(1, 1)] = Complex64::new(std::f64::consts::PI, 0.0);
        x.block_mut(1)[(0, 0)] = Complex64::new(-2.5e-17, 1e300);
        let back = operator_from_json(&operator_to_json(&x)).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn operator_document_shape() {
        let s = r#"{"blocks":[{"dim":2,"weight":1.0,"re":[[3,0],[0,-4]],"im":[[0,0],[0,0]]}]}"#;
        let x = operator_from_json(s).unwrap();
        assert_eq!(x.algebra().total_dim(), 2);
        assert_eq!(x.entry(0, 1, 1).re, -4.0);
        let bad = r#"{"blocks":[{"dim":2,"weight":1.0,"re":[[3,0]],"im":[]}]}"#;
        assert!(matches!(operator_from_json(bad), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn kernel_kraus_roundtrip() {
        let a = Algebra::full(2).unwrap();
        let u = Operator::from_matrix(&a, Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        let k = kernel::kernel_from_kraus(&a, &[u], false).unwrap();
        let back = kernel_from_json(&kernel_to_json(&k), 1e-9, DEFAULT_DIM_CAP).unwrap();
        assert!((back.superoperator() - k.superoperator()).max_abs() < 1e-15);
    }

    #[test]
    fn kernel_superoperator_reverified_on_load() {
        let a = Algebra::uniform_diagonal(2).unwrap();
        let s = Matrix::identity(2).scale_real(1.5);
        let k = Kernel::from_superoperator(&a, s, Provenance::Custom).unwrap();
        let doc = kernel_to_json(&k);
        assert!(matches!(kernel_from_json(&doc, 1e-9, DEFAULT_DIM_CAP), Err(Error::NotAKernel(_))));
    }

    #[test]
    fn kernel_stochastic_and_unitary_documents() {
        let s = r#"{"matrix":[[0.5,0.5],[0.5,0.5]]}"#;
        let k = kernel_from_json(s, 1e-9, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(k.provenance(), Provenance::Stochastic);
        let s = r#"{"algebra":[{"dim":1,"weight":1},{"dim":1,"weight":1}],
                    "unitary":{"blocks":[{"dim":2,"weight":1,"re":[[0,1],[1,0]],"im":[]}]}}"#;
        let k = kernel_from_json(s, 1e-9, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(k.provenance(), Provenance::Unitary);
        assert!(matches!(kernel_from_json("{}", 1e-9, DEFAULT_DIM_CAP), Err(Error::BadParameter(_))));
    }

    #[test]
    fn kernel_dimension_cap() {
        let a = Algebra::full(3).unwrap();
        let k = kernel::kernel_from_kraus(&a, &[a.identity()], false).unwrap();
        let doc = kernel_to_json(&k);
        assert!(matches!(kernel_from_json(&doc, 1e-9, 2), Err(Error::DimensionCap(_))));
    }
}
