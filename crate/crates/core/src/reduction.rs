//! Affine submanifolds, constant subbundles, reducibility criteria and the
//! reduced Nambu tensor.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::calculus::{apply_vector, change_coordinates, differential, lie_derivative_mv, AffineMap};
use crate::chart::{same_chart, Chart};
use crate::coeffs::{MultiPoly, Rational, RationalFunction};
use crate::error::{Error, Result};
use crate::exterior::{interior, pair, Form, Kind, MultiIndex, Multivector, Tensor};
use crate::linalg::{annihilator, rank_of, span_basis, Matrix};
use crate::nambu::NambuStructure;

fn unit(m: usize, i: usize) -> Vec<Rational> {
    (0..m).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn in_span(span: &[Vec<Rational>], v: &[Rational]) -> bool {
    let m = v.len();
    let mut all = span.to_vec();
    all.push(v.to_vec());
    rank_of(&all, m) == rank_of(span, m)
}

/// Constant vector field with the given components.
pub fn constant_vector(chart: &Arc<Chart>, comps: &[Rational]) -> Multivector {
    constant_tensor(chart, comps)
}

/// Constant 1-form with the given components.
pub fn constant_covector(chart: &Arc<Chart>, comps: &[Rational]) -> Form {
    constant_tensor(chart, comps)
}

fn constant_tensor<K: Kind>(chart: &Arc<Chart>, comps: &[Rational]) -> Tensor<K> {
    let nv = chart.nvars();
    Tensor::from_terms(chart, 1, comps.iter().enumerate().map(|(i, c)| (MultiIndex::single(i), RationalFunction::constant(c.clone(), nv))))
}

/// Components of a degree-1 tensor with constant coefficients.
fn constant_components<K: Kind>(t: &Tensor<K>) -> Option<Vec<Rational>> {
    t.components().iter().map(|c| c.constant_value()).collect()
}

/// Affine decomposition `Σ a_i x^i + c` of a polynomial of degree ≤ 1 in the
/// coordinates alone.
pub fn affine_parts(chart: &Chart, f: &RationalFunction) -> Option<(Vec<Rational>, Rational)> {
    if !f.is_polynomial() || f.numer().total_degree() > 1 {
        return None;
    }
    let m = chart.dim();
    let mut lin = vec![Rational::zero(); m];
    let mut constant = Rational::zero();
    for (mono, c) in f.numer().terms() {
        match mono.exponents().iter().position(|&e| e > 0) {
            None => constant = c.clone(),
            Some(i) if i < m => lin[i] = c.clone(),
            Some(_) => return None,
        }
    }
    Some((lin, constant))
}

/// Affine submanifold `N = {ℓ_j = 0}` with independent constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct Submanifold {
    chart: Arc<Chart>,
    rows: Vec<Vec<Rational>>,
    constants: Vec<Rational>,
    /// Ring-variable images realising the restriction to `N`.
    images: Vec<RationalFunction>,
    tangent: Vec<Vec<Rational>>,
}

impl Submanifold {
    pub fn whole(chart: &Arc<Chart>) -> Self {
        Self::new(chart, Vec::new()).expect("no constraints")
    }

    /// Constraints `a · x + c = 0`.
    pub fn new(chart: &Arc<Chart>, constraints: Vec<(Vec<Rational>, Rational)>) -> Result<Self> {
        let m = chart.dim();
        let nv = chart.nvars();
        if constraints.iter().any(|(a, _)| a.len() != m) {
            return Err(Error::InvalidSubmanifold);
        }
        let (rows, constants): (Vec<_>, Vec<_>) = constraints.into_iter().unzip();
        if rank_of(&rows, m) != rows.len() {
            return Err(Error::InvalidSubmanifold);
        }
        let mut images: Vec<RationalFunction> = (0..nv).map(|i| RationalFunction::var(i, nv)).collect();
        if !rows.is_empty() {
            let aug: Vec<Vec<Rational>> = rows.iter().zip(&constants).map(|(r, c)| {
                let mut v = r.clone();
                v.push(c.clone());
                v
            }).collect();
            let (r, pivots) = Matrix::from_rows(aug, Rational::zero()).rref();
            for (row, &p) in pivots.iter().enumerate() {
                let mut img = RationalFunction::constant(-r[(row, m)].clone(), nv);
                for f in 0..m {
                    if f != p && !r[(row, f)].is_zero() {
                        img = &img - &RationalFunction::var(f, nv).scale(&r[(row, f)]);
                    }
                }
                images[p] = img;
            }
        }
        let tangent = if rows.is_empty() {
            (0..m).map(|i| unit(m, i)).collect()
        } else {
            Matrix::from_rows(rows.clone(), Rational::zero()).nullspace()
        };
        Ok(Submanifold { chart: chart.clone(), rows, constants, images, tangent })
    }

    /// `N = {f_1 = … = f_k = 0}` for affine functions of the coordinates.
    pub fn from_functions(chart: &Arc<Chart>, fs: &[RationalFunction]) -> Result<Self> {
        let cs = fs.iter().map(|f| affine_parts(chart, f).ok_or(Error::InvalidSubmanifold)).collect::<Result<Vec<_>>>()?;
        Self::new(chart, cs)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn codim(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim() - self.rows.len()
    }

    /// Constraint gradients, a basis of the conormal space `(TN)⁰`.
    pub fn conormal(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn constants(&self) -> &[Rational] {
        &self.constants
    }

    pub fn tangent_basis(&self) -> &[Vec<Rational>] {
        &self.tangent
    }

    pub fn constraint_function(&self, j: usize) -> RationalFunction {
        let nv = self.chart.nvars();
        let mut f = RationalFunction::constant(self.constants[j].clone(), nv);
        for (i, a) in self.rows[j].iter().enumerate() {
            if !a.is_zero() {
                f = &f + &RationalFunction::var(i, nv).scale(a);
            }
        }
        f
    }

    /// `f|_N`, expressed in the free coordinates.
    pub fn restrict(&self, f: &RationalFunction) -> Result<RationalFunction> {
        if self.rows.is_empty() {
            return Ok(f.clone());
        }
        f.compose(&self.images, self.chart.nvars()).map_err(|_| Error::PoleOnSubmanifold)
    }

    pub fn restrict_tensor<K: Kind>(&self, t: &Tensor<K>) -> Result<Tensor<K>> {
        t.try_map_coeffs(|c| self.restrict(c))
    }

    pub fn contains_point(&self, p: &[Rational]) -> bool {
        self.rows.iter().zip(&self.constants).all(|(a, c)| (dot(a, &p[..a.len()]) + c).is_zero())
    }

    /// Moves a point onto `N` by overwriting the pivot coordinates.
    pub fn project_point(&self, p: &[Rational]) -> Result<Vec<Rational>> {
        self.images.iter().map(|f| f.evaluate(p)).collect()
    }
}

/// Constant-coefficient span of vector fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Subbundle {
    chart: Arc<Chart>,
    basis: Vec<Vec<Rational>>,
}

impl Subbundle {
    pub fn zero(chart: &Arc<Chart>) -> Self {
        Subbundle { chart: chart.clone(), basis: Vec::new() }
    }

    pub fn from_vectors(chart: &Arc<Chart>, vectors: &[Multivector]) -> Result<Self> {
        let mut rows = Vec::new();
        for v in vectors {
            same_chart(chart, v.chart())?;
            if v.degree() != 1 {
                return Err(Error::DegreeMismatch("a subbundle is spanned by vector fields".into()));
            }
            rows.push(constant_components(v).ok_or_else(|| Error::Precondition("spanning vectors must have constant coefficients".into()))?);
        }
        Self::from_rational(chart, rows)
    }

    pub fn from_rational(chart: &Arc<Chart>, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let m = chart.dim();
        if rank_of(&rows, m) != rows.len() {
            return Err(Error::DependentSpan);
        }
        Ok(Subbundle { chart: chart.clone(), basis: rows })
    }

    fn from_any(chart: &Arc<Chart>, rows: &[Vec<Rational>]) -> Self {
        Subbundle { chart: chart.clone(), basis: span_basis(rows, chart.dim()) }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn rational_basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<Multivector> {
        self.basis.iter().map(|r| constant_vector(&self.chart, r)).collect()
    }

    /// Basis of `E⁰`.
    pub fn annihilator(&self) -> Vec<Vec<Rational>> {
        annihilator(&self.basis, self.chart.dim())
    }

    pub fn contains_vector(&self, v: &[Rational]) -> bool {
        in_span(&self.basis, v)
    }

    pub fn contains(&self, other: &Subbundle) -> bool {
        other.basis.iter().all(|v| self.contains_vector(v))
    }

    /// `E ∩ TN`.
    pub fn intersect_tangent(&self, n: &Submanifold) -> Subbundle {
        if self.basis.is_empty() {
            return self.clone();
        }
        // Σ λ_j e_j with a · (Σ λ_j e_j) = 0 for every constraint a.
        let k = self.basis.len();
        let m = self.chart.dim();
        if n.rows.is_empty() {
            return self.clone();
        }
        let sys: Vec<Vec<Rational>> = n.rows.iter().map(|a| self.basis.iter().map(|e| dot(a, e)).collect()).collect();
        let lambdas = Matrix::from_rows(sys, Rational::zero()).nullspace();
        let vecs: Vec<Vec<Rational>> = lambdas
            .iter()
            .map(|l| (0..m).map(|i| (0..k).map(|j| &l[j] * &self.basis[j][i]).sum()).collect())
            .collect();
        Self::from_any(&self.chart, &vecs)
    }

    /// `E + TN`.
    pub fn plus_tangent(&self, n: &Submanifold) -> Subbundle {
        let mut rows = self.basis.clone();
        rows.extend(n.tangent.iter().cloned());
        Self::from_any(&self.chart, &rows)
    }
}

fn forms_from_vectors(chart: &Arc<Chart>, k: usize, vs: Vec<Vec<Rational>>) -> Vec<Form> {
    let basis = MultiIndex::all(chart.dim(), k);
    let nv = chart.nvars();
    vs.into_iter()
        .map(|v| Form::from_terms(chart, k, basis.iter().cloned().zip(v.into_iter().map(|c| RationalFunction::constant(c, nv)))))
        .collect()
}

/// Basis of `Ann¹E = {η ∈ Λ^{n−1}T*M : i_v η = 0 for v ∈ E}`.
pub fn ann1(e: &Subbundle, n: usize) -> Vec<Form> {
    let chart = e.chart();
    let m = chart.dim();
    let k = n - 1;
    let cols = MultiIndex::all(m, k);
    if e.basis.is_empty() {
        return cols.into_iter().map(|i| Form::basis(chart, i)).collect();
    }
    let mut sys = Vec::new();
    for v in &e.basis {
        for low in MultiIndex::all(m, k - 1) {
            // Coefficient of dx^low in i_v η.
            let row: Vec<Rational> = cols
                .iter()
                .map(|col| match col.split_off(&low) {
                    Some((_, rest)) => {
                        let j = rest.get(0);
                        let (s, _) = MultiIndex::merge(&rest, &low).expect("disjoint");
                        if s < 0 {
                            -v[j].clone()
                        } else {
                            v[j].clone()
                        }
                    }
                    None => Rational::zero(),
                })
                .collect();
            if row.iter().any(|c| !c.is_zero()) {
                sys.push(row);
            }
        }
    }
    let ns = if sys.is_empty() {
        (0..cols.len()).map(|i| unit(cols.len(), i)).collect()
    } else {
        Matrix::from_rows(sys, Rational::zero()).nullspace()
    };
    forms_from_vectors(chart, k, ns)
}

/// Basis of `Ann^{n−1}TN`: `(n−1)`-forms killed by every `(n−1)`-fold wedge
/// of tangent vectors.
pub fn ann_top(n_sub: &Submanifold, n: usize) -> Vec<Form> {
    let chart = n_sub.chart();
    let m = chart.dim();
    let k = n - 1;
    let cols = MultiIndex::all(m, k);
    let tangent: Vec<Multivector> = n_sub.tangent.iter().map(|t| constant_vector(chart, t)).collect();
    let mut sys = Vec::new();
    for sel in MultiIndex::all(tangent.len(), k) {
        let items: Vec<Multivector> = sel.indices().map(|i| tangent[i].clone()).collect();
        let w = Multivector::wedge_all(chart, &items).expect("same chart");
        let row: Vec<Rational> = cols.iter().map(|c| w.coeff(c).constant_value().expect("constant")).collect();
        sys.push(row);
    }
    if sys.is_empty() {
        return cols.into_iter().map(|i| Form::basis(chart, i)).collect();
    }
    forms_from_vectors(chart, k, Matrix::from_rows(sys, Rational::zero()).nullspace())
}

/// `E = Π♯(Ann^{n−1}TN)` along `N`, which must be a constant span of
/// certified constant rank.
pub fn canonical_bundle(pi: &NambuStructure, n_sub: &Submanifold) -> Result<Subbundle> {
    same_chart(pi.chart(), n_sub.chart())?;
    let chart = pi.chart();
    let m = chart.dim();
    let mut images = Vec::new();
    for eta in ann_top(n_sub, pi.order()) {
        let v = n_sub.restrict_tensor(&pi.sharp(&eta)?)?;
        if !v.is_zero() {
            images.push(v.components());
        }
    }
    if images.is_empty() {
        return Ok(Subbundle::zero(chart));
    }
    let mat = Matrix::from_rows(images.clone(), chart.zero());
    let (r, pivots) = mat.rref();
    let rank = pivots.len();
    let mut rows = Vec::new();
    for i in 0..rank {
        let row: Option<Vec<Rational>> = r.row(i).iter().map(|c| c.constant_value()).collect();
        rows.push(row.ok_or_else(|| Error::NonConstantRank(format!("the image span varies along N (row {})", i + 1)))?);
    }
    // Some maximal minor must be a nonzero constant, otherwise the rank can
    // drop somewhere on N.
    let certified = MultiIndex::all(images.len(), rank).iter().any(|rs| {
        MultiIndex::all(m, rank).iter().any(|cs| {
            let sub: Vec<Vec<RationalFunction>> = rs.indices().map(|i| cs.indices().map(|j| images[i][j].clone()).collect()).collect();
            let d = Matrix::from_rows(sub, chart.zero()).determinant();
            d.constant_value().is_some_and(|c| !c.is_zero())
        })
    });
    if !certified {
        return Err(Error::NonConstantRank(format!("no maximal minor of the rank-{rank} image is a nonzero constant")));
    }
    Subbundle::from_rational(chart, rows)
}

/// Whether `df` vanishes on `E` (along `N` when given).
pub fn in_ce(f: &RationalFunction, e: &Subbundle, n_sub: Option<&Submanifold>) -> Result<bool> {
    let chart = e.chart();
    let df = differential(chart, f);
    for v in e.vectors() {
        let mut c = interior(&v, &df)?.as_scalar();
        if let Some(n) = n_sub {
            same_chart(chart, n.chart())?;
            c = n.restrict(&c)?;
        }
        if !c.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The data of a reduction: `(Π, N, E)`, an optional intermediate
/// distribution `D` and an optional user-supplied adapted chart.
#[derive(Clone, Debug)]
pub struct ReductionProblem {
    pub pi: NambuStructure,
    pub submanifold: Submanifold,
    pub bundle: Subbundle,
    pub distribution: Option<Subbundle>,
    pub adapted: Option<(AffineMap, Arc<Chart>)>,
}

impl ReductionProblem {
    pub fn new(pi: NambuStructure, submanifold: Submanifold, bundle: Subbundle) -> Result<Self> {
        same_chart(pi.chart(), submanifold.chart())?;
        same_chart(pi.chart(), bundle.chart())?;
        Ok(ReductionProblem { pi, submanifold, bundle, distribution: None, adapted: None })
    }

    /// Adds `D` with `F ⊆ D ⊆ E`.
    pub fn with_distribution(mut self, d: Subbundle) -> Result<Self> {
        same_chart(self.pi.chart(), d.chart())?;
        let f = self.fibre();
        if !d.contains(&f) {
            return Err(Error::Precondition("F = E ∩ TN is not contained in D".into()));
        }
        if !self.bundle.contains(&d) {
            return Err(Error::Precondition("D is not contained in E".into()));
        }
        self.distribution = Some(d);
        Ok(self)
    }

    pub fn with_adapted_map(mut self, map: AffineMap, chart: Arc<Chart>) -> Self {
        self.adapted = Some((map, chart));
        self
    }

    pub fn order(&self) -> usize {
        self.pi.order()
    }

    /// `F = E ∩ TN`.
    pub fn fibre(&self) -> Subbundle {
        self.bundle.intersect_tangent(&self.submanifold)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharpTarget {
    /// `TN`
    Tangent,
    /// `TN + D`
    TangentPlusD,
    /// `TN + E`
    TangentPlusE,
}

impl fmt::Display for SharpTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SharpTarget::Tangent => "TN",
            SharpTarget::TangentPlusD => "TN+D",
            SharpTarget::TangentPlusE => "TN+E",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeWitness {
    pub form: Form,
    /// `Π♯η` restricted to `N`.
    pub image: Multivector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeCheck {
    pub holds: bool,
    pub witness: Option<RangeWitness>,
}

/// Whether `Π♯(Ann¹E)|_N` lies in the target span; the first failing
/// `Ann¹E` basis form is the witness.
pub fn check_sharp_range(problem: &ReductionProblem, target: SharpTarget) -> Result<RangeCheck> {
    let n_sub = &problem.submanifold;
    let extra = match target {
        SharpTarget::Tangent => Subbundle::zero(n_sub.chart()),
        SharpTarget::TangentPlusD => problem
            .distribution
            .clone()
            .ok_or_else(|| Error::Precondition("the TN+D range check needs a distribution D".into()))?,
        SharpTarget::TangentPlusE => problem.bundle.clone(),
    };
    let span = extra.plus_tangent(n_sub);
    let covectors = span.annihilator();
    for eta in ann1(&problem.bundle, problem.order()) {
        let image = n_sub.restrict_tensor(&problem.pi.sharp(&eta)?)?;
        let comps = image.components();
        let inside = covectors.iter().all(|c| {
            comps.iter().zip(c).filter(|(_, a)| !a.is_zero()).fold(n_sub.chart().zero(), |acc, (v, a)| &acc + &v.scale(a)).is_zero()
        });
        if !inside {
            return Ok(RangeCheck { holds: false, witness: Some(RangeWitness { form: eta, image }) });
        }
    }
    Ok(RangeCheck { holds: true, witness: None })
}

/// Which constant vector fields to differentiate along.
#[derive(Clone, Debug)]
pub enum Frame {
    /// A basis of `F = E ∩ TN`.
    Fibre,
    /// A basis of `D` (the distribution `θ_D`).
    Distribution,
    Explicit(Vec<Multivector>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LieWitness {
    pub vector: Multivector,
    /// `(L_X Π)|_N`.
    pub derivative: Multivector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LieCheck {
    pub holds: bool,
    pub witness: Option<LieWitness>,
}

/// Whether `Q ∈ E ∧ Λ^{n−1}TM` pointwise: `Q` must pair to zero with every
/// `n`-fold wedge of an `E⁰` basis.
pub fn in_bundle_wedge(e: &Subbundle, q: &Multivector) -> Result<bool> {
    let chart = e.chart();
    same_chart(chart, q.chart())?;
    let ann: Vec<Form> = e.annihilator().iter().map(|c| constant_covector(chart, c)).collect();
    for sel in MultiIndex::all(ann.len(), q.degree()) {
        let items: Vec<Form> = sel.indices().map(|i| ann[i].clone()).collect();
        let w = Form::wedge_all(chart, &items)?;
        if !pair(&w, q)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(L_X Π)|_N ⊆ E ∧ Λ^{n−1}TM|_N` for every frame vector `X`.
pub fn check_lie_criterion(problem: &ReductionProblem, frame: &Frame) -> Result<LieCheck> {
    let vectors = match frame {
        Frame::Fibre => problem.fibre().vectors(),
        Frame::Distribution => problem
            .distribution
            .as_ref()
            .ok_or_else(|| Error::Precondition("the distribution frame needs D".into()))?
            .vectors(),
        Frame::Explicit(v) => v.clone(),
    };
    for x in vectors {
        let l = problem.submanifold.restrict_tensor(&lie_derivative_mv(&x, problem.pi.tensor())?)?;
        if !in_bundle_wedge(&problem.bundle, &l)? {
            return Ok(LieCheck { holds: false, witness: Some(LieWitness { vector: x, derivative: l }) });
        }
    }
    Ok(LieCheck { holds: true, witness: None })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Canonicity {
    /// No counterexample among polynomials up to the degree bound.
    UpToBound,
    Counterexample { functions: Vec<RationalFunction>, bracket: RationalFunction },
}

/// Monomials in the given variables of total degree `1..=bound`, graded
/// then in variable order.
fn monomials_upto(vars: &[usize], nvars: usize, bound: u32) -> Vec<MultiPoly> {
    let mut out = Vec::new();
    let mut layer: Vec<(usize, MultiPoly)> = vec![(0, MultiPoly::one(nvars))];
    for _ in 0..bound {
        let mut next = Vec::new();
        for (start, p) in &layer {
            for (k, &v) in vars.iter().enumerate().skip(*start) {
                next.push((k, p * &MultiPoly::var(v, nvars)));
            }
        }
        out.extend(next.iter().map(|(_, p)| p.clone()));
        layer = next;
    }
    out
}

/// Basis of the polynomials of degree `1..=bound` lying in `C∞(M)_E`.
pub fn ce_polynomials(e: &Subbundle, n_sub: Option<&Submanifold>, bound: u32) -> Result<Vec<RationalFunction>> {
    let chart = e.chart();
    let nv = chart.nvars();
    let vars: Vec<usize> = (0..chart.dim()).collect();
    let monos = monomials_upto(&vars, nv, bound);
    if e.rank() == 0 {
        return Ok(monos.into_iter().map(RationalFunction::from_poly).collect());
    }
    // Row per (spanning vector, monomial of the derivative); column per monomial.
    let mut keyed: std::collections::BTreeMap<(usize, Vec<u16>), Vec<Rational>> = Default::default();
    for (col, mono) in monos.iter().enumerate() {
        let f = RationalFunction::from_poly(mono.clone());
        for (vi, v) in e.vectors().iter().enumerate() {
            let mut d = apply_vector(v, &f);
            if let Some(n) = n_sub {
                d = n.restrict(&d)?;
            }
            for (m, c) in d.numer().terms() {
                let row = keyed.entry((vi, m.exponents().to_vec())).or_insert_with(|| vec![Rational::zero(); monos.len()]);
                row[col] += c;
            }
        }
    }
    let rows: Vec<Vec<Rational>> = keyed.into_values().collect();
    let ns = if rows.is_empty() {
        (0..monos.len()).map(|i| unit(monos.len(), i)).collect()
    } else {
        Matrix::from_rows(rows, Rational::zero()).nullspace()
    };
    Ok(ns
        .into_iter()
        .map(|v| {
            let p = monos.iter().zip(v).filter(|(_, c)| !c.is_zero()).fold(MultiPoly::zero(nv), |acc, (m, c)| &acc + &m.scale(&c));
            RationalFunction::from_poly(p)
        })
        .collect())
}

/// Searches for `F_1, …, F_n ∈ C∞(M)_E` of degree `≤ bound` whose bracket
/// leaves `C∞(M)_E`.
pub fn falsify_canonicity(pi: &NambuStructure, e: &Subbundle, n_sub: Option<&Submanifold>, bound: u32) -> Result<Canonicity> {
    if bound == 0 {
        return Err(Error::Precondition("degree bound must be at least 1".into()));
    }
    same_chart(pi.chart(), e.chart())?;
    let basis = ce_polynomials(e, n_sub, bound)?;
    for sel in MultiIndex::all(basis.len(), pi.order()) {
        let fs: Vec<RationalFunction> = sel.indices().map(|i| basis[i].clone()).collect();
        let b = pi.bracket(&fs)?;
        if !in_ce(&b, e, n_sub)? {
            return Ok(Canonicity::Counterexample { functions: fs, bracket: b });
        }
    }
    Ok(Canonicity::UpToBound)
}

/// An affine chart in which `N` is a coordinate subspace and `E` a
/// coordinate span.
#[derive(Clone, Debug)]
pub struct Adaptation {
    pub map: AffineMap,
    pub chart: Arc<Chart>,
    /// Surviving coordinates (indices in `chart`).
    pub quotient: Vec<usize>,
    /// Coordinates along `F = E ∩ TN`.
    pub fibre: Vec<usize>,
    /// Coordinates vanishing on `N`.
    pub constraint: Vec<usize>,
    /// The chart of the quotient.
    pub quotient_chart: Arc<Chart>,
}

fn fresh_names(taken: &BTreeSet<String>, count: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut k = 1;
    while out.len() < count {
        let name = if k == 1 { "u".to_string() } else { format!("u{k}") };
        if !taken.contains(&name) {
            out.push(name);
        }
        k += 1;
    }
    out
}

impl Adaptation {
    /// Builds an adapted chart for `(N, E)`; the order of the new coordinates
    /// is quotient, fibre, transverse constraint, remaining constraint.
    pub fn auto(n_sub: &Submanifold, e: &Subbundle) -> Result<Self> {
        let chart = n_sub.chart();
        same_chart(chart, e.chart())?;
        let m = chart.dim();
        let k = n_sub.codim();
        let e0 = e.annihilator();
        // λ with Σ λ_j a_j ∈ E⁰.
        let in_e0: Vec<Vec<Rational>> = if k == 0 {
            Vec::new()
        } else if e.rank() == 0 {
            (0..k).map(|j| unit(k, j)).collect()
        } else {
            let sys: Vec<Vec<Rational>> = e.basis.iter().map(|v| n_sub.rows.iter().map(|a| dot(a, v)).collect()).collect();
            Matrix::from_rows(sys, Rational::zero()).nullspace()
        };
        let mut transverse = Vec::new();
        let mut lam_span = in_e0.clone();
        for j in 0..k {
            let u = unit(k, j);
            if !in_span(&lam_span, &u) {
                lam_span.push(u.clone());
                transverse.push(u);
            }
        }
        let combine = |l: &Vec<Rational>| -> (Vec<Rational>, Rational) {
            let cov = (0..m).map(|i| (0..k).map(|j| &l[j] * &n_sub.rows[j][i]).sum()).collect();
            let off = (0..k).map(|j| &l[j] * &n_sub.constants[j]).sum();
            (cov, off)
        };
        let inner: Vec<(Vec<Rational>, Rational)> = in_e0.iter().map(combine).collect();
        let outer: Vec<(Vec<Rational>, Rational)> = transverse.iter().map(combine).collect();

        let mut chosen: Vec<Vec<Rational>> = inner.iter().map(|(c, _)| c.clone()).collect();
        let mut quotient_rows = Vec::new();
        let target_q = e0.len() - inner.len();
        let mut candidates: Vec<Vec<Rational>> = (0..m).map(|i| unit(m, i)).filter(|u| e.basis.iter().all(|v| dot(u, v).is_zero())).collect();
        candidates.extend(e0.iter().cloned());
        for c in candidates {
            if quotient_rows.len() == target_q {
                break;
            }
            if !in_span(&chosen, &c) {
                chosen.push(c.clone());
                quotient_rows.push(c);
            }
        }
        chosen.extend(outer.iter().map(|(c, _)| c.clone()));
        let mut fibre_rows = Vec::new();
        for i in 0..m {
            let u = unit(m, i);
            if chosen.len() == m {
                break;
            }
            if !in_span(&chosen, &u) {
                chosen.push(u.clone());
                fibre_rows.push(u);
            }
        }
        debug_assert_eq!(chosen.len(), m);

        let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
        rows.extend(quotient_rows.into_iter().map(|r| (r, Rational::zero())));
        let nq = rows.len();
        rows.extend(fibre_rows.into_iter().map(|r| (r, Rational::zero())));
        let nf = rows.len() - nq;
        rows.extend(outer);
        rows.extend(inner);

        let taken: BTreeSet<String> = chart.var_names().into_iter().collect();
        let mut names = Vec::new();
        let mut pending = Vec::new();
        for (pos, (r, off)) in rows.iter().enumerate() {
            let coord = (0..m).find(|&i| *r == unit(m, i));
            match coord {
                Some(i) if off.is_zero() => names.push(Some(chart.coords()[i].clone())),
                _ => {
                    names.push(None);
                    pending.push(pos);
                }
            }
        }
        let fresh = fresh_names(&taken, pending.len());
        let names: Vec<String> = {
            let mut it = fresh.into_iter();
            names.into_iter().map(|n| n.unwrap_or_else(|| it.next().expect("enough names"))).collect()
        };
        let target = chart.with_coords(names)?;
        let (mat, off): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let map = AffineMap::new(mat, off)?;
        let quotient: Vec<usize> = (0..nq).collect();
        let fibre: Vec<usize> = (nq..nq + nf).collect();
        let constraint: Vec<usize> = (nq + nf..m).collect();
        Self::finish(map, target, quotient, fibre, constraint)
    }

    /// Validates a user-supplied chart `y = T(x)`.
    pub fn from_map(n_sub: &Submanifold, e: &Subbundle, map: &AffineMap, target: &Arc<Chart>) -> Result<Self> {
        let chart = n_sub.chart();
        let m = chart.dim();
        if map.dim() != m || target.dim() != m || target.params() != chart.params() {
            return Err(Error::NotAdapted("the map does not match the chart".into()));
        }
        let inv = map.inverse();
        // Constraints in new coordinates: a·A⁻¹ y + (c + a·b') with x = A⁻¹y + b'.
        let mut cons = Vec::new();
        for (a, c) in n_sub.rows.iter().zip(&n_sub.constants) {
            let cov: Vec<Rational> = (0..m).map(|j| (0..m).map(|i| &a[i] * &inv.matrix()[(i, j)]).sum()).collect();
            let off = c + dot(a, inv.offset());
            let mut row = cov;
            row.push(off);
            cons.push(row);
        }
        let mut constraint = Vec::new();
        if !cons.is_empty() {
            let (r, pivots) = Matrix::from_rows(cons, Rational::zero()).rref();
            for (i, &p) in pivots.iter().enumerate() {
                let ok = (0..=m).all(|j| if j == p { r[(i, j)].is_one() } else { r[(i, j)].is_zero() });
                if !ok || p == m {
                    return Err(Error::NotAdapted("N is not a coordinate subspace in the new chart".into()));
                }
                constraint.push(p);
            }
        }
        let mut span = Vec::new();
        if e.rank() > 0 {
            let pushed: Vec<Vec<Rational>> = e.basis.iter().map(|v| map.matrix().mul_vec(v)).collect();
            let (r, pivots) = Matrix::from_rows(pushed, Rational::zero()).rref();
            for (i, &p) in pivots.iter().enumerate() {
                if !(0..m).all(|j| if j == p { r[(i, j)].is_one() } else { r[(i, j)].is_zero() }) {
                    return Err(Error::NotAdapted("E is not a coordinate span in the new chart".into()));
                }
                span.push(p);
            }
        }
        let fibre: Vec<usize> = span.iter().copied().filter(|i| !constraint.contains(i)).collect();
        let quotient: Vec<usize> = (0..m).filter(|i| !constraint.contains(i) && !span.contains(i)).collect();
        constraint.sort_unstable();
        Self::finish(map.clone(), target.clone(), quotient, fibre, constraint)
    }

    fn finish(map: AffineMap, chart: Arc<Chart>, quotient: Vec<usize>, fibre: Vec<usize>, constraint: Vec<usize>) -> Result<Self> {
        let names: Vec<String> = quotient.iter().map(|&i| chart.coords()[i].clone()).collect();
        let quotient_chart = if names.is_empty() {
            // A point quotient; keep a placeholder-free chart by reusing the
            // first coordinate name (the reduced tensor is then zero).
            chart.with_coords(vec![chart.coords()[0].clone()])?
        } else {
            chart.with_coords(names)?
        };
        Ok(Adaptation { map, chart, quotient, fibre, constraint, quotient_chart })
    }

    /// Sends `N` to `{constraint coordinates = 0}` in the adapted ring.
    fn restrict_images(&self) -> Vec<RationalFunction> {
        let nv = self.chart.nvars();
        (0..nv)
            .map(|i| if self.constraint.contains(&i) { RationalFunction::zero(nv) } else { RationalFunction::var(i, nv) })
            .collect()
    }

    /// Moves an adapted-ring function into the quotient ring; `None` if it
    /// still depends on a non-quotient coordinate.
    pub fn to_quotient(&self, f: &RationalFunction) -> Result<Option<RationalFunction>> {
        let nv = self.chart.nvars();
        let g = f.compose(&self.restrict_images(), nv).map_err(|_| Error::PoleOnSubmanifold)?;
        if self.fibre.iter().any(|&i| g.depends_on(i)) {
            return Ok(None);
        }
        let m = self.chart.dim();
        let qn = self.quotient_chart.nvars();
        let qm = self.quotient_chart.dim();
        let map: Vec<Option<usize>> = (0..nv)
            .map(|i| {
                if i >= m {
                    Some(qm + (i - m))
                } else {
                    self.quotient.iter().position(|&q| q == i)
                }
            })
            .collect();
        Ok(Some(g.remap(&map, qn)))
    }

    /// `dπ(V|_N)` for a vector field given in the original chart.
    pub fn project_vector(&self, v: &Multivector) -> Result<Option<Multivector>> {
        let w = change_coordinates(&self.map, v, &self.chart)?;
        let comps = w.components();
        let mut out = Vec::new();
        for &q in &self.quotient {
            match self.to_quotient(&comps[q])? {
                Some(c) => out.push(c),
                None => return Ok(None),
            }
        }
        if self.quotient.is_empty() {
            return Ok(Some(Multivector::zero(&self.quotient_chart, 1)));
        }
        Ok(Some(Multivector::from_components(&self.quotient_chart, &out)))
    }

    /// `B̄`: a form on the original chart expressed in the adapted chart,
    /// restricted to `N`, with every term involving a non-quotient
    /// differential dropped. `None` when a surviving coefficient depends on a
    /// fibre coordinate.
    pub fn project_form(&self, omega: &Form) -> Result<Option<Form>> {
        let w = change_coordinates(&self.map, omega, &self.chart)?;
        let mut terms = Vec::new();
        for (idx, c) in w.terms() {
            let pos: Option<Vec<usize>> = idx.indices().map(|i| self.quotient.iter().position(|&q| q == i)).collect();
            let Some(pos) = pos else { continue };
            match self.to_quotient(c)? {
                Some(q) => terms.push((MultiIndex::new(&pos).expect("quotient order is increasing"), q)),
                None => return Ok(None),
            }
        }
        Ok(Some(Form::from_terms(&self.quotient_chart, omega.degree(), terms)))
    }

    /// A quotient-chart form written in the original coordinates through
    /// `dy_q = Σ A_{q i} dx^i` and `y = A x + b`.
    pub fn lift_form(&self, omega: &Form, original: &Arc<Chart>) -> Result<Form> {
        same_chart(omega.chart(), &self.quotient_chart)?;
        let m = original.dim();
        let nv = original.nvars();
        let qm = self.quotient_chart.dim();
        let mut images = Vec::with_capacity(self.quotient_chart.nvars());
        for &q in &self.quotient {
            let mut f = RationalFunction::constant(self.map.offset()[q].clone(), nv);
            for i in 0..m {
                let a = &self.map.matrix()[(q, i)];
                if !a.is_zero() {
                    f = &f + &RationalFunction::var(i, nv).scale(a);
                }
            }
            images.push(f);
        }
        for p in 0..self.quotient_chart.params().len() {
            images.push(RationalFunction::var(m + p, nv));
        }
        let dys: Vec<Form> = self
            .quotient
            .iter()
            .map(|&q| constant_covector(original, &(0..m).map(|i| self.map.matrix()[(q, i)].clone()).collect::<Vec<_>>()))
            .collect();
        let mut acc = Form::zero(original, omega.degree());
        if self.quotient.is_empty() {
            return Ok(acc);
        }
        debug_assert_eq!(qm, self.quotient.len());
        for (idx, c) in omega.terms() {
            let items: Vec<Form> = idx.indices().map(|i| dys[i].clone()).collect();
            let w = Form::wedge_all(original, &items)?;
            acc = &acc + &w.scale(&c.compose(&images, nv)?);
        }
        Ok(acc)
    }
}

/// `F ⊆ θ_D ⊆ E` and, in the adapted chart, every quotient monomial of
/// degree `≤ bound` has a constant extension in `C∞(M)_E ∩ C∞(M)_{θ_D}`.
pub fn check_compatible(theta: &Subbundle, e: &Subbundle, n_sub: &Submanifold, bound: u32) -> Result<bool> {
    let f = e.intersect_tangent(n_sub);
    if !theta.contains(&f) {
        return Err(Error::Precondition("F = E ∩ TN is not contained in the distribution".into()));
    }
    if !e.contains(theta) {
        return Err(Error::Precondition("the distribution is not contained in E".into()));
    }
    let ad = Adaptation::auto(n_sub, e)?;
    let nv = ad.chart.nvars();
    let pushed: Vec<Multivector> = theta
        .basis
        .iter()
        .chain(e.basis.iter())
        .map(|v| constant_vector(&ad.chart, &ad.map.matrix().mul_vec(v)))
        .collect();
    let restrict = ad.restrict_images();
    for mono in monomials_upto(&ad.quotient, nv, bound) {
        let g = RationalFunction::from_poly(mono);
        for v in &pushed {
            let d = apply_vector(v, &g).compose(&restrict, nv)?;
            if !d.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// `Π♯(Ann¹E) ⊆ TN` with the Lie criterion on an `F`-frame.
    TangentRange,
    /// `Π♯(Ann¹E) ⊆ TN + D`, the Lie criterion on a `D`-frame and
    /// compatibility of `D` with `E`.
    Distribution,
    /// `Π♯(Ann¹E) ⊆ TN + E`, descent of the coefficients and the
    /// fundamental identity of the result.
    Direct,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::TangentRange => "tangent-range",
            Route::Distribution => "distribution",
            Route::Direct => "direct",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteOutcome {
    pub route: Route,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl RouteOutcome {
    fn new(route: Route, checks: Vec<CheckOutcome>) -> Self {
        RouteOutcome { route, passed: checks.iter().all(|c| c.passed), checks }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisReport {
    pub routes: Vec<RouteOutcome>,
    pub licensed_by: Option<Route>,
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .routes
            .iter()
            .map(|r| {
                let cs: Vec<String> = r
                    .checks
                    .iter()
                    .map(|c| match &c.witness {
                        Some(w) => format!("{}={} [{}]", c.name, c.passed, w),
                        None => format!("{}={}", c.name, c.passed),
                    })
                    .collect();
                format!("{}: {} ({})", r.route, if r.passed { "pass" } else { "fail" }, cs.join(", "))
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Clone, Debug)]
pub struct ReducedStructure {
    pub tensor: NambuStructure,
    pub report: HypothesisReport,
    pub adaptation: Adaptation,
}

impl ReducedStructure {
    pub fn quotient_chart(&self) -> &Arc<Chart> {
        &self.adaptation.quotient_chart
    }

    pub fn render(&self) -> String {
        format!("{} on chart ({})", self.tensor.tensor().render(), self.quotient_chart().coords().join(", "))
    }
}

fn range_outcome(problem: &ReductionProblem, target: SharpTarget) -> Result<CheckOutcome> {
    let r = check_sharp_range(problem, target)?;
    Ok(CheckOutcome {
        name: format!("sharp-range({target})"),
        passed: r.holds,
        witness: r.witness.map(|w| format!("{} -> {}", w.form.render(), w.image.render())),
    })
}

fn lie_outcome(problem: &ReductionProblem, frame: Frame, name: &str) -> Result<CheckOutcome> {
    let r = check_lie_criterion(problem, &frame)?;
    Ok(CheckOutcome {
        name: name.to_string(),
        passed: r.holds,
        witness: r.witness.map(|w| format!("L_({}) = {}", w.vector.render(), w.derivative.render())),
    })
}

/// Candidate quotient tensor in the adapted chart, or the first coefficient
/// that fails to descend.
fn quotient_tensor(problem: &ReductionProblem, ad: &Adaptation) -> Result<std::result::Result<Multivector, String>> {
    let n = problem.order();
    let pi_y = change_coordinates(&ad.map, problem.pi.tensor(), &ad.chart)?;
    let qc = &ad.quotient_chart;
    let mut terms = Vec::new();
    if ad.quotient.len() >= n {
        for sel in MultiIndex::all(ad.quotient.len(), n) {
            let idx = MultiIndex::new(&sel.indices().map(|i| ad.quotient[i]).collect::<Vec<_>>()).expect("sorted");
            let c = pi_y.coeff(&idx);
            match ad.to_quotient(&c)? {
                Some(q) => terms.push((sel, q)),
                None => {
                    let names: Vec<String> = idx.indices().map(|i| ad.chart.coords()[i].clone()).collect();
                    return Ok(Err(format!("coefficient of ({}) depends on fibre coordinates", names.join(", "))));
                }
            }
        }
    }
    Ok(Ok(Multivector::from_terms(qc, n, terms)))
}

/// Reduces `Π` to `N / F`. Every licensing route is evaluated and recorded;
/// the first passing one, in the order tangent-range, distribution, direct,
/// licenses the result.
pub fn reduce(problem: &ReductionProblem) -> Result<ReducedStructure> {
    let ad = match &problem.adapted {
        Some((map, chart)) => Adaptation::from_map(&problem.submanifold, &problem.bundle, map, chart)?,
        None => Adaptation::auto(&problem.submanifold, &problem.bundle)?,
    };
    let mut routes = Vec::new();
    routes.push(RouteOutcome::new(
        Route::TangentRange,
        vec![range_outcome(problem, SharpTarget::Tangent)?, lie_outcome(problem, Frame::Fibre, "lie-criterion(F)")?],
    ));
    if let Some(d) = &problem.distribution {
        let compatible = check_compatible(d, &problem.bundle, &problem.submanifold, 2)?;
        routes.push(RouteOutcome::new(
            Route::Distribution,
            vec![
                range_outcome(problem, SharpTarget::TangentPlusD)?,
                lie_outcome(problem, Frame::Distribution, "lie-criterion(D)")?,
                CheckOutcome { name: "compatible(D, E)".into(), passed: compatible, witness: None },
            ],
        ));
    }
    let candidate = quotient_tensor(problem, &ad)?;
    let mut direct = vec![range_outcome(problem, SharpTarget::TangentPlusE)?];
    let structure = match &candidate {
        Ok(t) => {
            direct.push(CheckOutcome { name: "descent".into(), passed: true, witness: None });
            let s = NambuStructure::new(t.clone())?;
            let fi = s.check_fi();
            direct.push(CheckOutcome {
                name: "fi(quotient)".into(),
                passed: fi.is_verified(),
                witness: fi.witness().map(|w| w.residual.render(&ad.quotient_chart.var_names())),
            });
            Some(s)
        }
        Err(msg) => {
            direct.push(CheckOutcome { name: "descent".into(), passed: false, witness: Some(msg.clone()) });
            None
        }
    };
    routes.push(RouteOutcome::new(Route::Direct, direct));
    let licensed_by = routes.iter().find(|r| r.passed).map(|r| r.route);
    let report = HypothesisReport { routes, licensed_by };
    let Some(_) = licensed_by else {
        return Err(Error::HypothesesFailed(report.to_string()));
    };
    let tensor = structure.ok_or_else(|| Error::ReductionInconsistent(format!("licensed reduction does not descend: {report}")))?;
    if !tensor.check_fi().is_verified() {
        return Err(Error::FiRefutedOnQuotient);
    }
    Ok(ReducedStructure { tensor, report, adaptation: ad })
}

/// Subordinate structure of order `n − k`.
pub fn subordinate(pi: &NambuStructure, fixed: &[RationalFunction]) -> Result<NambuStructure> {
    pi.subordinate(fixed)
}
