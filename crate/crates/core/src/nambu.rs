//! Nambu-Poisson structures: bracket, sharp map, Hamiltonian fields, the
//! fundamental-identity decision procedure, decomposability and the
//! Dorfman/Leibniz brackets.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::calculus::{differential, exterior_d, lie_bracket, lie_derivative_form, lie_derivative_mv};
use crate::chart::{same_chart, Chart};
use crate::coeffs::{MultiPoly, RationalFunction};
use crate::error::{Error, Result};
use crate::exterior::{interior, interior_form, pair, Form, MultiIndex, Multivector};

/// Refutation of the fundamental identity: the residual
/// `{g, {f}} − Σ_k {f_1, …, {g, f_k}, …, f_n}` is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiWitness {
    pub g: Vec<RationalFunction>,
    pub f: Vec<RationalFunction>,
    pub residual: RationalFunction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiStatus {
    Verified,
    Refuted(FiWitness),
}

impl FiStatus {
    pub fn is_verified(&self) -> bool {
        matches!(self, FiStatus::Verified)
    }

    pub fn witness(&self) -> Option<&FiWitness> {
        match self {
            FiStatus::Verified => None,
            FiStatus::Refuted(w) => Some(w),
        }
    }
}

/// An `n`-vector field together with a cached fundamental-identity verdict.
#[derive(Clone, Debug)]
pub struct NambuStructure {
    tensor: Multivector,
    fi: OnceLock<FiStatus>,
}

impl PartialEq for NambuStructure {
    fn eq(&self, other: &Self) -> bool {
        self.tensor == other.tensor
    }
}

impl NambuStructure {
    /// Wraps an `n`-vector, `n ≥ 2`. The identity is not checked here; an order
    /// above the chart dimension forces the zero tensor.
    pub fn new(tensor: Multivector) -> Result<Self> {
        let n = tensor.degree();
        if n < 2 {
            return Err(Error::InvalidOrder { order: n, reason: "order must be at least 2".into() });
        }
        Ok(NambuStructure { tensor, fi: OnceLock::new() })
    }

    pub fn order(&self) -> usize {
        self.tensor.degree()
    }

    pub fn tensor(&self) -> &Multivector {
        &self.tensor
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.tensor.chart()
    }

    /// Cached verdict, `None` while unverified.
    pub fn fi_status(&self) -> Option<&FiStatus> {
        self.fi.get()
    }

    /// `{f_1, …, f_n} = Π(df_1, …, df_n)`.
    pub fn bracket(&self, fs: &[RationalFunction]) -> Result<RationalFunction> {
        if fs.len() != self.order() {
            return Err(Error::DegreeMismatch(format!("bracket of order {} takes {} functions, got {}", self.order(), self.order(), fs.len())));
        }
        pair(&differentials(self.chart(), fs)?, &self.tensor)
    }

    /// `Π♯η`, contracting `η` into the first `n − 1` slots.
    pub fn sharp(&self, eta: &Form) -> Result<Multivector> {
        if eta.degree() != self.order() - 1 {
            return Err(Error::DegreeMismatch(format!("sharp map takes a {}-form, got degree {}", self.order() - 1, eta.degree())));
        }
        interior_form(eta, &self.tensor)
    }

    /// `X_{f_1 … f_{n−1}} = Π♯(df_1 ∧ … ∧ df_{n−1})`.
    pub fn hamiltonian(&self, fs: &[RationalFunction]) -> Result<Multivector> {
        if fs.len() + 1 != self.order() {
            return Err(Error::DegreeMismatch(format!("hamiltonian of order {} takes {} functions, got {}", self.order(), self.order() - 1, fs.len())));
        }
        self.sharp(&differentials(self.chart(), fs)?)
    }

    /// The literal residual of the fundamental identity.
    pub fn fi_residual(&self, g: &[RationalFunction], f: &[RationalFunction]) -> Result<RationalFunction> {
        let with = |h: &RationalFunction| -> Result<RationalFunction> {
            let mut args = g.to_vec();
            args.push(h.clone());
            self.bracket(&args)
        };
        let mut r = with(&self.bracket(f)?)?;
        for k in 0..f.len() {
            let mut args = f.to_vec();
            args[k] = with(&f[k])?;
            r = &r - &self.bracket(&args)?;
        }
        Ok(r)
    }

    /// Decides the fundamental identity exactly; the verdict is cached.
    ///
    /// The residual equals `(L_{X_g} Π)(df_1, …, df_n)`, so it is tensorial
    /// in the `f`s and the coordinate functions suffice there. In the `g`s it
    /// depends on 2-jets, which antisymmetrized tuples of degree-≤2
    /// coordinate monomials realize at every point.
    pub fn check_fi(&self) -> &FiStatus {
        self.fi.get_or_init(|| self.decide_fi())
    }

    fn decide_fi(&self) -> FiStatus {
        let chart = self.chart();
        let n = self.order();
        if self.tensor.is_zero() {
            return FiStatus::Verified;
        }
        let monomials = low_degree_monomials(chart);
        let tuples = MultiIndex::all(monomials.len(), n - 1);
        let found = tuples.par_iter().find_map_first(|t| {
            let g: Vec<RationalFunction> = t.indices().map(|i| monomials[i].clone()).collect();
            let x = self.hamiltonian(&g).expect("degrees match");
            let l = lie_derivative_mv(&x, &self.tensor).expect("same chart");
            let w = l.terms().next().map(|(idx, c)| FiWitness {
                g: g.clone(),
                f: idx.indices().map(|i| chart.coordinate(i)).collect(),
                residual: c.clone(),
            });
            w
        });
        match found {
            None => FiStatus::Verified,
            Some(w) => FiStatus::Refuted(w),
        }
    }

    /// Plücker test of pointwise decomposability (orders `n ≥ 3`).
    pub fn check_decomposable(&self) -> Result<Decomposability> {
        let n = self.order();
        if n < 3 {
            return Err(Error::InvalidOrder { order: n, reason: "decomposability is only checked for n >= 3".into() });
        }
        Ok(plucker(&self.tensor))
    }

    /// `{α, β}_Π = L_{Π♯α} β − i_{Π♯β} dα`.
    pub fn leibniz_bracket(&self, alpha: &Form, beta: &Form) -> Result<Form> {
        let xa = self.sharp(alpha)?;
        let xb = self.sharp(beta)?;
        let da = exterior_d(alpha);
        Ok(&lie_derivative_form(&xa, beta)? - &interior(&xb, &da)?)
    }

    /// Whether the graph of `Π♯` is closed under the Dorfman bracket.
    ///
    /// The graph residual is tensorial in the second entry and depends on
    /// 1-jets of the first, so first entries `f·dx^I` with `f ∈ {1, x^k}`
    /// and second entries `dx^J` decide closure.
    pub fn graph_closed(&self) -> bool {
        self.graph_witness().is_none()
    }

    /// First failing pair `(f·dx^I, dx^J)` of the graph-closure check.
    pub fn graph_witness(&self) -> Option<(Form, Form)> {
        let chart = self.chart();
        let n = self.order();
        let basis = MultiIndex::all(chart.dim(), n - 1);
        let mut scalars = vec![chart.one()];
        scalars.extend((0..chart.dim()).map(|k| chart.coordinate(k)));
        let mut jobs = Vec::new();
        for i in &basis {
            for f in &scalars {
                for j in &basis {
                    jobs.push((Form::basis(chart, i.clone()).scale(f), Form::basis(chart, j.clone())));
                }
            }
        }
        jobs.into_par_iter().find_map_first(|(a, b)| {
            let ea = DorfmanPair::new(self.sharp(&a).expect("degree"), a.clone()).expect("chart");
            let eb = DorfmanPair::new(self.sharp(&b).expect("degree"), b.clone()).expect("chart");
            let r = dorfman(&ea, &eb).expect("same chart");
            let off = &r.vec - &self.sharp(&r.form).expect("degree");
            (!off.is_zero()).then_some((a, b))
        })
    }

    /// Subordinate structure `{f_1, …, f_{n−k}} = {F_1, …, F_k, f_1, …}`.
    pub fn subordinate(&self, fixed: &[RationalFunction]) -> Result<NambuStructure> {
        let n = self.order();
        let k = fixed.len();
        if k + 2 > n {
            return Err(Error::OrderTooSmall { order: n, k });
        }
        let eta = differentials(self.chart(), fixed)?;
        NambuStructure::new(interior_form(&eta, &self.tensor)?)
    }
}

/// Outcome of the Plücker test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposability {
    pub decomposable: bool,
    /// First failing relation `(S, T, value)`.
    pub failing: Option<(Vec<usize>, Vec<usize>, RationalFunction)>,
}

/// Plücker relations `Σ_l (−1)^l P_{S ∪ t_l} P_{T ∖ t_l} = 0` for all
/// `|S| = k − 1`, `|T| = k + 1`.
pub fn plucker(p: &Multivector) -> Decomposability {
    let k = p.degree();
    let m = p.chart().dim();
    let ok = Decomposability { decomposable: true, failing: None };
    if k <= 1 || k + 1 > m || p.is_zero() {
        return ok;
    }
    for s in MultiIndex::all(m, k - 1) {
        for t in MultiIndex::all(m, k + 1) {
            let mut acc = p.chart().zero();
            for l in 0..=k {
                let tl = t.get(l);
                let mut left = s.to_vec();
                left.push(tl);
                let a = p.coeff_at(&left);
                if a.is_zero() {
                    continue;
                }
                let b = p.coeff(&t.without_pos(l));
                if b.is_zero() {
                    continue;
                }
                let term = &a * &b;
                acc = if l % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            if !acc.is_zero() {
                return Decomposability { decomposable: false, failing: Some((s.to_vec(), t.to_vec(), acc)) };
            }
        }
    }
    ok
}

/// Section `(X, α)` of `TM ⊕ Λ^{n−1}T*M`.
#[derive(Clone, Debug, PartialEq)]
pub struct DorfmanPair {
    pub vec: Multivector,
    pub form: Form,
}

impl DorfmanPair {
    pub fn new(vec: Multivector, form: Form) -> Result<Self> {
        same_chart(vec.chart(), form.chart())?;
        if vec.degree() != 1 {
            return Err(Error::DegreeMismatch("first component must be a vector field".into()));
        }
        Ok(DorfmanPair { vec, form })
    }
}

/// `⟦(X, α), (Y, β)⟧ = ([X, Y], L_X β − i_Y dα)`.
pub fn dorfman(a: &DorfmanPair, b: &DorfmanPair) -> Result<DorfmanPair> {
    same_chart(a.vec.chart(), b.vec.chart())?;
    if a.form.degree() != b.form.degree() {
        return Err(Error::DegreeMismatch("Dorfman pairs of different orders".into()));
    }
    let v = lie_bracket(&a.vec, &b.vec)?;
    let lx = lie_derivative_form(&a.vec, &b.form)?;
    let iy = if a.form.degree() < a.form.chart().dim() {
        interior(&b.vec, &exterior_d(&a.form))?
    } else {
        Form::zero(a.form.chart(), a.form.degree())
    };
    Ok(DorfmanPair { vec: v, form: &lx - &iy })
}

/// `df_1 ∧ … ∧ df_k`.
pub fn differentials(chart: &Arc<Chart>, fs: &[RationalFunction]) -> Result<Form> {
    let ds: Vec<Form> = fs.iter().map(|f| differential(chart, f)).collect();
    Form::wedge_all(chart, &ds)
}

/// Coordinate monomials of degree 1 and 2: `x_a`, then `x_a x_b` (a ≤ b).
pub fn low_degree_monomials(chart: &Chart) -> Vec<RationalFunction> {
    let m = chart.dim();
    let nv = chart.nvars();
    let mut out: Vec<RationalFunction> = (0..m).map(|i| RationalFunction::var(i, nv)).collect();
    for a in 0..m {
        for b in a..m {
            let p = &MultiPoly::var(a, nv) * &MultiPoly::var(b, nv);
            out.push(RationalFunction::from_poly(p));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart4() -> Arc<Chart> {
        Chart::new(["x", "y", "z", "w"], []).unwrap()
    }

    fn idx(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    fn wxyz(c: &Arc<Chart>) -> NambuStructure {
        NambuStructure::new(Multivector::basis(c, idx(&[0, 1, 2])).scale(&c.coordinate(3))).unwrap()
    }

    fn sum6() -> NambuStructure {
        let c = Chart::new(["x1", "x2", "x3", "x4", "x5", "x6"], []).unwrap();
        NambuStructure::new(&Multivector::basis(&c, idx(&[0, 1, 2])) + &Multivector::basis(&c, idx(&[3, 4, 5]))).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let c = chart4();
        let p = wxyz(&c);
        let (x, y, z) = (c.coordinate(0), c.coordinate(1), c.coordinate(2));
        assert_eq!(p.bracket(&[x.clone(), y.clone(), z.clone()]).unwrap(), c.coordinate(3));
        let unit = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        assert!(unit.bracket(&[x.clone(), y.clone(), y.clone()]).unwrap().is_zero());
        let zz = &z * &z;
        assert_eq!(unit.bracket(&[x, y, zz]).unwrap(), &z + &z);
    }

    #[test]
    fn sharp_and_hamiltonian_examples() {
        let c = chart4();
        let unit = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        assert_eq!(unit.sharp(&Form::basis(&c, idx(&[0, 1]))).unwrap(), Multivector::coordinate(&c, 2));
        assert!(unit.sharp(&Form::basis(&c, idx(&[0, 3]))).unwrap().is_zero());
        let p = wxyz(&c);
        let w_dx = Multivector::coordinate(&c, 0).scale(&c.coordinate(3));
        assert_eq!(p.sharp(&Form::basis(&c, idx(&[1, 2]))).unwrap(), w_dx);
        assert_eq!(unit.hamiltonian(&[c.coordinate(0), c.coordinate(1)]).unwrap(), Multivector::coordinate(&c, 2));
        assert!(unit.hamiltonian(&[c.coordinate(0), c.coordinate(0)]).unwrap().is_zero());
        assert_eq!(p.hamiltonian(&[c.coordinate(1), c.coordinate(2)]).unwrap(), w_dx);
    }

    #[test]
    fn fi_examples() {
        let c = chart4();
        let unit = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        assert!(unit.check_fi().is_verified());
        assert!(wxyz(&c).check_fi().is_verified());
        let s = sum6();
        let w = s.check_fi().witness().expect("refuted").clone();
        assert!(!s.fi_residual(&w.g, &w.f).unwrap().is_zero());
        assert_eq!(s.fi_residual(&w.g, &w.f).unwrap(), w.residual);
    }

    #[test]
    fn decomposability_examples() {
        let c = chart4();
        let unit = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        assert!(unit.check_decomposable().unwrap().decomposable);
        assert!(wxyz(&c).check_decomposable().unwrap().decomposable);
        let d = sum6().check_decomposable().unwrap();
        assert!(!d.decomposable && d.failing.is_some());
        let poisson = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1]))).unwrap();
        assert!(matches!(poisson.check_decomposable(), Err(Error::InvalidOrder { .. })));
    }

    #[test]
    fn dorfman_examples() {
        let c = chart4();
        let zero2 = Form::zero(&c, 2);
        let zero_v = Multivector::zero(&c, 1);
        let dx = DorfmanPair::new(Multivector::coordinate(&c, 0), zero2.clone()).unwrap();
        let dy = DorfmanPair::new(Multivector::coordinate(&c, 1), zero2.clone()).unwrap();
        let r = dorfman(&dx, &dy).unwrap();
        assert!(r.vec.is_zero() && r.form.is_zero());
        let xdyz = DorfmanPair::new(zero_v, Form::basis(&c, idx(&[1, 2])).scale(&c.coordinate(0))).unwrap();
        let r = dorfman(&dx, &xdyz).unwrap();
        assert!(r.vec.is_zero());
        assert_eq!(r.form, Form::basis(&c, idx(&[1, 2])));
        let r = dorfman(&xdyz, &dx).unwrap();
        assert_eq!(r.form, -Form::basis(&c, idx(&[1, 2])));
    }

    #[test]
    fn leibniz_bracket_examples() {
        let c = chart4();
        let unit = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        let r = unit.leibniz_bracket(&Form::basis(&c, idx(&[0, 1])), &Form::basis(&c, idx(&[0, 2]))).unwrap();
        assert!(r.is_zero());
        let dyz = Form::basis(&c, idx(&[1, 2]));
        assert!(wxyz(&c).leibniz_bracket(&dyz, &dyz).unwrap().is_zero());
    }

    #[test]
    fn graph_closure_examples() {
        let c = chart4();
        assert!(wxyz(&c).graph_closed());
        assert!(!sum6().graph_closed());
        assert!(NambuStructure::new(Multivector::zero(&c, 3)).unwrap().graph_closed());
    }

    #[test]
    fn subordinate_examples() {
        let c = Chart::new(["x", "y", "z"], []).unwrap();
        let unit = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        let s = unit.subordinate(&[c.coordinate(0)]).unwrap();
        assert_eq!(s.tensor(), &Multivector::basis(&c, idx(&[1, 2])));
        let s = unit.subordinate(&[c.coordinate(2)]).unwrap();
        assert_eq!(s.tensor(), &Multivector::basis(&c, idx(&[0, 1])));
        assert!(unit.subordinate(&[c.one()]).unwrap().tensor().is_zero());
        assert!(matches!(unit.subordinate(&[c.coordinate(0), c.coordinate(1)]), Err(Error::OrderTooSmall { .. })));
    }
}
