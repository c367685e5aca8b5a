//! Deterministic vector fields driving the flow between jumps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::linalg;

/// A smooth autonomous vector field on ℝ^d.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Write F(x) into `out`.
    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Exact flow map `(x0, t) ↦ x(t)`, when one is known.
    fn closed_form(&self, _x0: &[f64], _t: f64) -> Option<Vec<f64>> {
        None
    }

    /// The matrix `M` when the field is `x ↦ M x`.
    fn linear_matrix(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

pub type SharedField = Arc<dyn VectorField>;

/// `x ↦ M x`.
#[derive(Debug, Clone)]
pub struct LinearField {
    m: DMatrix<f64>,
}

impl LinearField {
    pub fn new(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "linear field needs a square matrix");
        Self { m }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Scalar field `x ↦ a x`.
    pub fn scalar(a: f64) -> Self {
        Self::new(DMatrix::from_element(1, 1, a))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.m.nrows();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.m[(i, j)] * x[j];
            }
            out[i] = s;
        }
    }

    fn closed_form(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        let e = linalg::expm(&self.m, t);
        Some((e * DVector::from_column_slice(x0)).iter().copied().collect())
    }

    fn linear_matrix(&self) -> Option<&DMatrix<f64>> {
        Some(&self.m)
    }
}

/// The zero field on ℝ^d.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField(pub usize);

impl VectorField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    fn closed_form(&self, x0: &[f64], _t: f64) -> Option<Vec<f64>> {
        Some(x0.to_vec())
    }
}

/// Constant drift `x ↦ v`.
#[derive(Debug, Clone)]
pub struct ConstantField(pub Vec<f64>);

impl VectorField for ConstantField {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }

    fn closed_form(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        Some(x0.iter().zip(&self.0).map(|(x, v)| x + t * v).collect())
    }
}

type EvalFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type FlowFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;

/// Field given by a closure, with an optional registered exact flow.
pub struct FnField {
    dim: usize,
    f: Box<EvalFn>,
    flow: Option<Box<FlowFn>>,
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self { dim, f: Box::new(f), flow: None }
    }

    pub fn with_closed_form(mut self, flow: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.flow = Some(Box::new(flow));
        self
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    fn closed_form(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        self.flow.as_ref().map(|g| g(x0, t))
    }
}

/// `x ↦ c·F(x)`; the exact flow is the inner flow run for time `c·t`.
#[derive(Clone)]
pub struct ScaledField {
    inner: SharedField,
    factor: f64,
}

impl ScaledField {
    pub fn new(inner: SharedField, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl VectorField for ScaledField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.inner.eval(x, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }

    fn closed_form(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        self.inner.closed_form(x0, self.factor * t)
    }
}

/// Convex combination `Σ w_i F^{(i)}`.
pub struct MixtureField {
    fields: Vec<SharedField>,
    weights: Vec<f64>,
    linear: Option<DMatrix<f64>>,
}

impl MixtureField {
    pub fn new(fields: Vec<SharedField>, weights: Vec<f64>) -> Self {
        assert_eq!(fields.len(), weights.len());
        assert!(!fields.is_empty());
        let linear = fields.iter().map(|f| f.linear_matrix().cloned()).collect::<Option<Vec<_>>>().map(|ms| {
            ms.iter().zip(&weights).fold(DMatrix::zeros(ms[0].nrows(), ms[0].ncols()), |acc, (m, w)| acc + m * *w)
        });
        Self { fields, weights, linear }
    }
}

impl VectorField for MixtureField {
    fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; out.len()];
        out.iter_mut().for_each(|v| *v = 0.0);
        for (f, w) in self.fields.iter().zip(&self.weights) {
            f.eval(x, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += w * t;
            }
        }
    }

    fn closed_form(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        self.linear.as_ref().map(|m| (linalg::expm(m, t) * DVector::from_column_slice(x0)).iter().copied().collect())
    }

    fn linear_matrix(&self) -> Option<&DMatrix<f64>> {
        self.linear.as_ref()
    }
}

/// Competitive Lotka–Volterra field `x_i (r_i + Σ_j a_ij x_j)`.
#[derive(Debug, Clone)]
pub struct LotkaVolterra {
    pub growth: Vec<f64>,
    pub interaction: DMatrix<f64>,
}

impl LotkaVolterra {
    pub fn new(growth: Vec<f64>, interaction: DMatrix<f64>) -> Self {
        assert_eq!(growth.len(), interaction.nrows());
        Self { growth, interaction }
    }
}

impl VectorField for LotkaVolterra {
    fn dim(&self) -> usize {
        self.growth.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.growth.len();
        for i in 0..n {
            let mut s = self.growth[i];
            for j in 0..n {
                s += self.interaction[(i, j)] * x[j];
            }
            out[i] = x[i] * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_and_mixture_eval() {
        let base: SharedField = Arc::new(LinearField::scalar(2.0));
        let s = ScaledField::new(base.clone(), 0.5);
        let mut out = [0.0];
        s.eval(&[3.0], &mut out);
        assert_eq!(out[0], 3.0);
        let mix = MixtureField::new(vec![base, Arc::new(LinearField::scalar(-2.0))], vec![0.5, 0.5]);
        mix.eval(&[3.0], &mut out);
        assert_eq!(out[0], 0.0);
        assert_eq!(mix.linear_matrix().unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn lotka_volterra_axes_invariant() {
        let lv = LotkaVolterra::new(vec![1.0, 1.0], DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, -0.5, -1.0]));
        let mut out = [0.0; 2];
        lv.eval(&[0.0, 2.0], &mut out);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 2.0 * (1.0 - 2.0));
    }
}
