//! Exterior derivative, Lie brackets and derivatives, and affine changes of
//! coordinates.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::chart::{same_chart, Chart};
use crate::coeffs::{Rational, RationalFunction};
use crate::error::{Error, Result};
use crate::exterior::{interior, Form, Kind, MultiIndex, Multivector, Tensor};
use crate::linalg::Matrix;

/// `dω`. The derivative of a top-degree form is the (empty) zero form.
pub fn exterior_d(omega: &Form) -> Form {
    let chart = omega.chart();
    let mut terms = Vec::new();
    for (idx, f) in omega.terms() {
        for i in 0..chart.dim() {
            if idx.contains(i) {
                continue;
            }
            let df = f.partial(i);
            if df.is_zero() {
                continue;
            }
            let (s, k) = MultiIndex::merge(&MultiIndex::single(i), idx).expect("i not in idx");
            terms.push((k, if s < 0 { -df } else { df }));
        }
    }
    Form::from_terms(chart, omega.degree() + 1, terms)
}

/// `df` of a scalar function.
pub fn differential(chart: &Arc<Chart>, f: &RationalFunction) -> Form {
    exterior_d(&Form::scalar(chart, f.clone()))
}

/// `X(f) = Σ X^i ∂_i f`.
pub fn apply_vector(x: &Multivector, f: &RationalFunction) -> RationalFunction {
    assert_eq!(x.degree(), 1, "directional derivative needs a vector field");
    let mut acc = x.chart().zero();
    for (idx, c) in x.terms() {
        let d = f.partial(idx.get(0));
        if !d.is_zero() {
            acc = &acc + &(c * &d);
        }
    }
    acc
}

fn require_vector(x: &Multivector) -> Result<()> {
    if x.degree() != 1 {
        return Err(Error::DegreeMismatch(format!("expected a vector field, got degree {}", x.degree())));
    }
    Ok(())
}

/// `[X, Y]^j = X(Y^j) − Y(X^j)`.
pub fn lie_bracket(x: &Multivector, y: &Multivector) -> Result<Multivector> {
    same_chart(x.chart(), y.chart())?;
    require_vector(x)?;
    require_vector(y)?;
    let xs = x.components();
    let ys = y.components();
    let comps: Vec<RationalFunction> = (0..x.chart().dim()).map(|j| &apply_vector(x, &ys[j]) - &apply_vector(y, &xs[j])).collect();
    Ok(Multivector::from_components(x.chart(), &comps))
}

/// `L_X ω = i_X dω + d i_X ω`.
pub fn lie_derivative_form(x: &Multivector, omega: &Form) -> Result<Form> {
    same_chart(x.chart(), omega.chart())?;
    require_vector(x)?;
    if omega.degree() == 0 {
        return Ok(Form::scalar(omega.chart(), apply_vector(x, &omega.as_scalar())));
    }
    let a = if omega.degree() < omega.chart().dim() {
        interior(x, &exterior_d(omega))?
    } else {
        Form::zero(omega.chart(), omega.degree())
    };
    let b = exterior_d(&interior(x, omega)?);
    Ok(&a + &b)
}

/// `L_X P` through the frame formula, using `[X, ∂_j] = −Σ_i ∂_j X^i ∂_i`.
pub fn lie_derivative_mv(x: &Multivector, p: &Multivector) -> Result<Multivector> {
    same_chart(x.chart(), p.chart())?;
    require_vector(x)?;
    let chart = p.chart();
    let xs = x.components();
    let mut terms = Vec::new();
    for (idx, f) in p.terms() {
        let xf = apply_vector(x, f);
        if !xf.is_zero() {
            terms.push((idx.clone(), xf));
        }
        let slots = idx.to_vec();
        for (r, &j) in slots.iter().enumerate() {
            for (i, xi) in xs.iter().enumerate() {
                let dxi = xi.partial(j);
                if dxi.is_zero() {
                    continue;
                }
                let mut replaced = slots.clone();
                replaced[r] = i;
                if let Some((s, k)) = MultiIndex::sorted(&replaced) {
                    let c = f * &dxi;
                    terms.push((k, if s < 0 { c } else { -c }));
                }
            }
        }
    }
    Ok(Multivector::from_terms(chart, p.degree(), terms))
}

/// Invertible affine map `y = A x + b` between charts of equal dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    matrix: Matrix<Rational>,
    inverse: Matrix<Rational>,
    offset: Vec<Rational>,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<Rational>>, offset: Vec<Rational>) -> Result<Self> {
        let m = offset.len();
        if matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
            return Err(Error::DegreeMismatch("affine map must be square and match the offset".into()));
        }
        let matrix = Matrix::from_rows(matrix, Rational::zero());
        let inverse = matrix.inverse().ok_or(Error::SingularMap)?;
        Ok(AffineMap { matrix, inverse, offset })
    }

    pub fn identity(m: usize) -> Self {
        let id = Matrix::identity(m, Rational::zero());
        AffineMap { matrix: id.clone(), inverse: id, offset: vec![Rational::zero(); m] }
    }

    /// Replaces coordinate `k` by `Σ a_i x^i + c`, keeping the others.
    pub fn replace_coordinate(m: usize, k: usize, linear: &[Rational], constant: Rational) -> Result<Self> {
        let mut rows: Vec<Vec<Rational>> = (0..m).map(|i| (0..m).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect();
        rows[k] = linear.to_vec();
        let mut offset = vec![Rational::zero(); m];
        offset[k] = constant;
        AffineMap::new(rows, offset)
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &Matrix<Rational> {
        &self.matrix
    }

    pub fn offset(&self) -> &[Rational] {
        &self.offset
    }

    pub fn inverse(&self) -> AffineMap {
        let b = self.inverse.mul_vec(&self.offset).into_iter().map(|v| -v).collect();
        AffineMap { matrix: self.inverse.clone(), inverse: self.matrix.clone(), offset: b }
    }

    pub fn compose(&self, first: &AffineMap) -> AffineMap {
        let matrix = self.matrix.mul(&first.matrix);
        let inverse = first.inverse.mul(&self.inverse);
        let offset = self.matrix.mul_vec(&first.offset).iter().zip(&self.offset).map(|(a, b)| a + b).collect();
        AffineMap { matrix, inverse, offset }
    }

    /// Images of the old ring variables in the new ring: `x = A⁻¹(y − b)`,
    /// parameters unchanged.
    fn old_vars_in_new(&self, target: &Chart) -> Vec<RationalFunction> {
        let m = self.dim();
        let nv = target.nvars();
        let mut images = Vec::with_capacity(nv);
        for i in 0..m {
            let mut acc = RationalFunction::zero(nv);
            let mut constant = Rational::zero();
            for j in 0..m {
                let a = &self.inverse[(i, j)];
                if a.is_zero() {
                    continue;
                }
                acc = &acc + &RationalFunction::var(j, nv).scale(a);
                constant -= a * &self.offset[j];
            }
            images.push(&acc + &RationalFunction::constant(constant, nv));
        }
        for p in m..nv {
            images.push(RationalFunction::var(p, nv));
        }
        images
    }

    /// A function of the old coordinates expressed in the new ones.
    pub fn transform_function(&self, f: &RationalFunction, target: &Chart) -> RationalFunction {
        f.compose(&self.old_vars_in_new(target), target.nvars()).expect("affine substitution has no poles")
    }
}

fn minor(m: &Matrix<Rational>, rows: &MultiIndex, cols: &MultiIndex) -> Rational {
    let sub: Vec<Vec<Rational>> = rows.indices().map(|i| cols.indices().map(|j| m[(i, j)].clone()).collect()).collect();
    if sub.is_empty() {
        return Rational::one();
    }
    Matrix::from_rows(sub, Rational::zero()).determinant()
}

/// Expresses `obj` in the coordinates `y = T(x)` of `target`: multivectors
/// push forward along `T`, forms pull back along `T⁻¹`.
pub fn change_coordinates<K: Kind>(t: &AffineMap, obj: &Tensor<K>, target: &Arc<Chart>) -> Result<Tensor<K>> {
    let src = obj.chart();
    if src.dim() != t.dim() || target.dim() != t.dim() || src.params() != target.params() {
        return Err(Error::ChartMismatch);
    }
    let images = t.old_vars_in_new(target);
    let k = obj.degree();
    let all = MultiIndex::all(t.dim(), k);
    let mut terms = Vec::new();
    for (j, f) in obj.terms() {
        let g = f.compose(&images, target.nvars())?;
        for i in &all {
            let c = if K::CONTRAVARIANT { minor(&t.matrix, i, j) } else { minor(&t.inverse, j, i) };
            if !c.is_zero() {
                terms.push((i.clone(), g.scale(&c)));
            }
        }
    }
    Ok(Tensor::from_terms(target, k, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::int;
    use crate::exterior::pair;

    fn chart() -> Arc<Chart> {
        Chart::new(["x", "y", "z", "w"], []).unwrap()
    }

    fn idx(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    #[test]
    fn d_examples() {
        let c = chart();
        let x = c.coordinate(0);
        let xdy = Form::coordinate(&c, 1).scale(&x);
        assert_eq!(exterior_d(&xdy), Form::basis(&c, idx(&[0, 1])));
        assert!(exterior_d(&Form::basis(&c, idx(&[0, 1, 2]))).is_zero());
        let wdxyz = Form::basis(&c, idx(&[0, 1, 2])).scale(&c.coordinate(3));
        assert_eq!(exterior_d(&wdxyz), -Form::basis(&c, idx(&[0, 1, 2, 3])));
    }

    #[test]
    fn bracket_examples() {
        let c = chart();
        let x = c.coordinate(0);
        let dx = Multivector::coordinate(&c, 0);
        let dy = Multivector::coordinate(&c, 1);
        assert_eq!(lie_bracket(&dx, &dy.scale(&x)).unwrap(), dy);
        assert!(lie_bracket(&dx, &dy).unwrap().is_zero());
        assert_eq!(lie_bracket(&dx.scale(&x), &dy.scale(&x)).unwrap(), dy.scale(&x));
    }

    #[test]
    fn lie_form_examples() {
        let c = chart();
        let x = c.coordinate(0);
        let dx = Multivector::coordinate(&c, 0);
        assert_eq!(lie_derivative_form(&dx, &Form::coordinate(&c, 1).scale(&x)).unwrap(), Form::coordinate(&c, 1));
        assert!(lie_derivative_form(&Multivector::coordinate(&c, 2), &Form::basis(&c, idx(&[0, 1]))).unwrap().is_zero());
        assert_eq!(lie_derivative_form(&dx.scale(&x), &Form::coordinate(&c, 0)).unwrap(), Form::coordinate(&c, 0));
    }

    #[test]
    fn lie_mv_examples() {
        let c = chart();
        let dxyz = Multivector::basis(&c, idx(&[0, 1, 2]));
        assert!(lie_derivative_mv(&Multivector::coordinate(&c, 2), &dxyz).unwrap().is_zero());
        let p = dxyz.scale(&c.coordinate(3));
        assert_eq!(lie_derivative_mv(&Multivector::coordinate(&c, 3), &p).unwrap(), dxyz);
        let dyz = Multivector::basis(&c, idx(&[1, 2]));
        assert!(lie_derivative_mv(&Multivector::coordinate(&c, 0), &dyz).unwrap().is_zero());
        // Nonconstant field: L_{x Dy}(Dx^Dz) = -Dy^Dz.
        let x_dy = Multivector::coordinate(&c, 1).scale(&c.coordinate(0));
        assert_eq!(lie_derivative_mv(&x_dy, &Multivector::basis(&c, idx(&[0, 2]))).unwrap(), -dyz);
    }

    fn shear() -> (AffineMap, Arc<Chart>) {
        let t = AffineMap::replace_coordinate(4, 3, &[int(-1), int(0), int(0), int(1)], int(0)).unwrap();
        (t, Chart::new(["x", "y", "z", "u"], []).unwrap())
    }

    #[test]
    fn shear_pushes_forward_frame() {
        let c = chart();
        let (t, target) = shear();
        let p = Multivector::basis(&c, idx(&[0, 1, 2])).scale(&c.coordinate(3));
        let got = change_coordinates(&t, &p, &target).unwrap();
        let u_plus_x = &target.coordinate(3) + &target.coordinate(0);
        let frame = (&Multivector::coordinate(&target, 0) - &Multivector::coordinate(&target, 3))
            .wedge(&Multivector::basis(&target, idx(&[1, 2])))
            .unwrap();
        assert_eq!(got, frame.scale(&u_plus_x));
        let back = change_coordinates(&t.inverse(), &got, &c).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn shear_preserves_pairing() {
        let c = chart();
        let (t, target) = shear();
        let dw = Form::coordinate(&c, 3);
        let pw = Multivector::coordinate(&c, 3);
        let dw2 = change_coordinates(&t, &dw, &target).unwrap();
        assert_eq!(dw2, &Form::coordinate(&target, 3) + &Form::coordinate(&target, 0));
        let pw2 = change_coordinates(&t, &pw, &target).unwrap();
        assert!(pair(&dw2, &pw2).unwrap().is_one());
    }

    #[test]
    fn singular_map_rejected() {
        let z = Rational::zero();
        let o = Rational::one();
        let r = AffineMap::new(vec![vec![o.clone(), o.clone()], vec![o.clone(), o]], vec![z.clone(), z]);
        assert_eq!(r.unwrap_err(), Error::SingularMap);
    }
}
