//! Sparse exterior algebra over rational-function coefficients.
//!
//! A [`Multivector`] of degree `k` is a map from strictly increasing index
//! tuples `I` to coefficients of `∂_I = ∂_{i1} ∧ … ∧ ∂_{ik}`; a [`Form`] is the
//! same for `dx^I`. Degree 0 is a scalar stored under the empty index.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use smallvec::SmallVec;

use crate::chart::{same_chart, Chart};
use crate::coeffs::{Rational, RationalFunction};
use crate::error::{Error, Result};

/// Strictly increasing tuple of zero-based coordinate indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(SmallVec<[u8; 6]>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(SmallVec::new())
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(SmallVec::from_slice(&[i as u8]))
    }

    /// `None` unless `indices` is strictly increasing.
    pub fn new(indices: &[usize]) -> Option<Self> {
        if indices.windows(2).all(|w| w[0] < w[1]) {
            Some(MultiIndex(indices.iter().map(|&i| i as u8).collect()))
        } else {
            None
        }
    }

    /// Sorts an arbitrary tuple, returning the permutation sign, or `None`
    /// when an index repeats.
    pub fn sorted(indices: &[usize]) -> Option<(i8, Self)> {
        let mut v: SmallVec<[u8; 6]> = indices.iter().map(|&i| i as u8).collect();
        let mut sign = 1i8;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((sign, MultiIndex(v)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn get(&self, pos: usize) -> usize {
        self.0[pos] as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&(i as u8))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().map(|&i| i as usize)
    }

    /// Index with position `pos` removed.
    pub fn without_pos(&self, pos: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(pos);
        MultiIndex(v)
    }

    /// `a ∪ b` with the sign of the shuffle `(a, b) -> sorted`; `None` when
    /// they intersect.
    pub fn merge(a: &MultiIndex, b: &MultiIndex) -> Option<(i8, MultiIndex)> {
        let mut inversions = 0usize;
        let mut out: SmallVec<[u8; 6]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.0.len() || j < b.0.len() {
            if j == b.0.len() || (i < a.0.len() && a.0[i] < b.0[j]) {
                out.push(a.0[i]);
                i += 1;
            } else if i == a.0.len() || b.0[j] < a.0[i] {
                inversions += a.0.len() - i;
                out.push(b.0[j]);
                j += 1;
            } else {
                return None;
            }
        }
        Some((if inversions.is_multiple_of(2) { 1 } else { -1 }, MultiIndex(out)))
    }

    /// If `sub ⊆ self`, the complement `R` and the sign with
    /// `∂_sub ∧ ∂_R = sign · ∂_self`.
    pub fn split_off(&self, sub: &MultiIndex) -> Option<(i8, MultiIndex)> {
        if !sub.0.iter().all(|i| self.0.contains(i)) {
            return None;
        }
        let rest = MultiIndex(self.0.iter().copied().filter(|i| !sub.0.contains(i)).collect());
        let (sign, _) = MultiIndex::merge(sub, &rest).expect("disjoint by construction");
        Some((sign, rest))
    }

    /// All strictly increasing `k`-tuples from `0..m`, in lexicographic order.
    pub fn all(m: usize, k: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        if k > m {
            return out;
        }
        let mut cur: Vec<usize> = (0..k).collect();
        loop {
            out.push(MultiIndex(cur.iter().map(|&i| i as u8).collect()));
            let mut p = k;
            loop {
                if p == 0 {
                    return out;
                }
                p -= 1;
                if cur[p] < m - k + p {
                    cur[p] += 1;
                    for q in p + 1..k {
                        cur[q] = cur[q - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

/// Marker distinguishing tangent from cotangent tensors.
pub trait Kind: Clone + fmt::Debug + Send + Sync + 'static {
    /// Rendering prefix of a basis element, `D` or `d`.
    const PREFIX: char;
    /// Whether basis elements push forward (vectors) or pull back (forms).
    const CONTRAVARIANT: bool;
}

#[derive(Clone, Debug)]
pub struct Up;
#[derive(Clone, Debug)]
pub struct Down;

impl Kind for Up {
    const PREFIX: char = 'D';
    const CONTRAVARIANT: bool = true;
}

impl Kind for Down {
    const PREFIX: char = 'd';
    const CONTRAVARIANT: bool = false;
}

/// Homogeneous element of the exterior algebra of `TM` or `T*M`.
#[derive(Clone, Debug)]
pub struct Tensor<K: Kind> {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<MultiIndex, RationalFunction>,
    kind: PhantomData<K>,
}

pub type Multivector = Tensor<Up>;
pub type Form = Tensor<Down>;

impl<K: Kind> PartialEq for Tensor<K> {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && *self.chart == *other.chart && self.terms == other.terms
    }
}

impl<K: Kind> Eq for Tensor<K> {}

impl<K: Kind> Tensor<K> {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        Tensor { chart: chart.clone(), degree, terms: BTreeMap::new(), kind: PhantomData }
    }

    pub fn scalar(chart: &Arc<Chart>, f: RationalFunction) -> Self {
        Self::from_terms(chart, 0, [(MultiIndex::empty(), f)])
    }

    /// `∂_I` or `dx^I`.
    pub fn basis(chart: &Arc<Chart>, index: MultiIndex) -> Self {
        let k = index.len();
        Self::from_terms(chart, k, [(index, chart.one())])
    }

    /// `∂_i` or `dx^i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        Self::basis(chart, MultiIndex::single(i))
    }

    /// Degree-1 element from its components.
    pub fn from_components(chart: &Arc<Chart>, comps: &[RationalFunction]) -> Self {
        assert_eq!(comps.len(), chart.dim(), "one component per coordinate");
        Self::from_terms(chart, 1, comps.iter().enumerate().map(|(i, c)| (MultiIndex::single(i), c.clone())))
    }

    /// Builds from (index, coefficient) pairs; repeated indices accumulate
    /// and zero coefficients are dropped.
    ///
    /// Panics when an index has the wrong length or leaves the chart.
    pub fn from_terms(chart: &Arc<Chart>, degree: usize, terms: impl IntoIterator<Item = (MultiIndex, RationalFunction)>) -> Self {
        let mut t = Self::zero(chart, degree);
        for (idx, c) in terms {
            t.add_term(idx, &c);
        }
        t
    }

    fn add_term(&mut self, idx: MultiIndex, c: &RationalFunction) {
        assert_eq!(idx.len(), self.degree, "index length must equal the degree");
        assert!(idx.max_index().is_none_or(|i| i < self.chart.dim()), "index outside the chart");
        assert_eq!(c.nvars(), self.chart.nvars(), "coefficient ring does not match the chart");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(idx) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &RationalFunction)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> RationalFunction {
        self.terms.get(idx).cloned().unwrap_or_else(|| self.chart.zero())
    }

    /// Coefficient at an arbitrary (unsorted) tuple, with the antisymmetry
    /// sign applied.
    pub fn coeff_at(&self, indices: &[usize]) -> RationalFunction {
        match MultiIndex::sorted(indices) {
            Some((s, idx)) => {
                let c = self.coeff(&idx);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
            None => self.chart.zero(),
        }
    }

    /// Components of a degree-1 element.
    pub fn components(&self) -> Vec<RationalFunction> {
        assert_eq!(self.degree, 1, "components of a non-vector");
        (0..self.chart.dim()).map(|i| self.coeff(&MultiIndex::single(i))).collect()
    }

    /// The scalar value of a degree-0 element.
    pub fn as_scalar(&self) -> RationalFunction {
        assert_eq!(self.degree, 0, "scalar value of a positive-degree tensor");
        self.coeff(&MultiIndex::empty())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, f: &RationalFunction) -> Self {
        if f.is_zero() {
            return Self::zero(&self.chart, self.degree);
        }
        self.map_coeffs(|c| c * f)
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        self.map_coeffs(|c| c.scale(q))
    }

    /// Applies `f` to every coefficient on the same chart.
    pub fn map_coeffs(&self, f: impl Fn(&RationalFunction) -> RationalFunction) -> Self {
        Self::from_terms(&self.chart, self.degree, self.terms.iter().map(|(i, c)| (i.clone(), f(c))))
    }

    /// Applies a fallible coefficient map.
    pub fn try_map_coeffs(&self, f: impl Fn(&RationalFunction) -> Result<RationalFunction>) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, c) in &self.terms {
            terms.push((i.clone(), f(c)?));
        }
        Ok(Self::from_terms(&self.chart, self.degree, terms))
    }

    /// Moves the tensor to a chart of equal dimension and ring, keeping
    /// indices; coefficients are transformed by `f`.
    pub fn rechart(&self, chart: &Arc<Chart>, f: impl Fn(&RationalFunction) -> RationalFunction) -> Self {
        Self::from_terms(chart, self.degree, self.terms.iter().map(|(i, c)| (i.clone(), f(c))))
    }

    pub fn partial(&self, v: usize) -> Self {
        self.map_coeffs(|c| c.partial(v))
    }

    /// Coefficients evaluated at a point of the full ring (coordinates, then
    /// parameters).
    pub fn evaluate(&self, point: &[Rational]) -> Result<BTreeMap<MultiIndex, Rational>> {
        let mut out = BTreeMap::new();
        for (i, c) in &self.terms {
            let v = c.evaluate(point)?;
            if !num_traits::Zero::is_zero(&v) {
                out.insert(i.clone(), v);
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        same_chart(&self.chart, &other.chart)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(format!("cannot add degrees {} and {}", self.degree, other.degree)));
        }
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c);
        }
        Ok(out)
    }

    /// `self ∧ other`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        same_chart(&self.chart, &other.chart)?;
        let mut out = Self::zero(&self.chart, self.degree + other.degree);
        if out.degree > self.chart.dim() {
            return Ok(out);
        }
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                if let Some((s, k)) = MultiIndex::merge(i, j) {
                    let p = a * b;
                    out.add_term(k, &if s < 0 { -p } else { p });
                }
            }
        }
        Ok(out)
    }

    /// Wedge of a list, `1` for the empty list.
    pub fn wedge_all(chart: &Arc<Chart>, items: &[Self]) -> Result<Self> {
        let mut acc = Self::scalar(chart, chart.one());
        for it in items {
            acc = acc.wedge(it)?;
        }
        Ok(acc)
    }

    pub fn render(&self) -> String {
        let names = self.chart.var_names();
        let mut out = String::new();
        for (idx, c) in &self.terms {
            let mut term = if idx.is_empty() {
                c.render(&names)
            } else {
                let basis: Vec<String> = idx.indices().map(|i| format!("{}{}", K::PREFIX, self.chart.coords()[i])).collect();
                let basis = basis.join("^");
                if c.is_one() {
                    basis
                } else if (-c).is_one() {
                    format!("-{basis}")
                } else {
                    format!("{}*{basis}", c.render_factor(&names))
                }
            };
            if !out.is_empty() {
                if let Some(rest) = term.strip_prefix('-') {
                    out.push_str(" - ");
                    term = rest.to_string();
                } else {
                    out.push_str(" + ");
                }
            }
            out.push_str(&term);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

impl<K: Kind> fmt::Display for Tensor<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<K: Kind> Add for &Tensor<K> {
    type Output = Tensor<K>;
    /// Panics on chart or degree mismatch; use [`Tensor::checked_add`] for
    /// untrusted inputs.
    fn add(self, rhs: &Tensor<K>) -> Tensor<K> {
        self.checked_add(rhs).expect("tensor addition")
    }
}

impl<K: Kind> Sub for &Tensor<K> {
    type Output = Tensor<K>;
    fn sub(self, rhs: &Tensor<K>) -> Tensor<K> {
        self.checked_add(&-rhs).expect("tensor subtraction")
    }
}

impl<K: Kind> Neg for &Tensor<K> {
    type Output = Tensor<K>;
    fn neg(self) -> Tensor<K> {
        self.map_coeffs(|c| -c)
    }
}

impl<K: Kind> Add for Tensor<K> {
    type Output = Tensor<K>;
    fn add(self, rhs: Tensor<K>) -> Tensor<K> {
        &self + &rhs
    }
}

impl<K: Kind> Sub for Tensor<K> {
    type Output = Tensor<K>;
    fn sub(self, rhs: Tensor<K>) -> Tensor<K> {
        &self - &rhs
    }
}

impl<K: Kind> Neg for Tensor<K> {
    type Output = Tensor<K>;
    fn neg(self) -> Tensor<K> {
        -&self
    }
}

pub fn wedge<K: Kind>(a: &Tensor<K>, b: &Tensor<K>) -> Result<Tensor<K>> {
    a.wedge(b)
}

/// Determinant pairing `⟨α, P⟩`.
pub fn pair(alpha: &Form, p: &Multivector) -> Result<RationalFunction> {
    same_chart(alpha.chart(), p.chart())?;
    if alpha.degree() != p.degree() {
        return Err(Error::DegreeMismatch(format!("cannot pair a {}-form with a {}-vector", alpha.degree(), p.degree())));
    }
    let mut acc = alpha.chart().zero();
    for (i, a) in alpha.terms() {
        if let Some(b) = p.terms.get(i) {
            acc = &acc + &(a * b);
        }
    }
    Ok(acc)
}

/// Contraction `i_X ω` of a vector field into the first slot of a form.
pub fn interior(x: &Multivector, omega: &Form) -> Result<Form> {
    same_chart(x.chart(), omega.chart())?;
    if x.degree() != 1 {
        return Err(Error::DegreeMismatch(format!("interior needs a vector field, got degree {}", x.degree())));
    }
    if omega.degree() == 0 {
        return Err(Error::DegreeMismatch("cannot contract into a function".into()));
    }
    Ok(contract_first(x, omega))
}

/// Contraction `i_η P` of a form into the first slots of a multivector, so
/// that `⟨β, i_η P⟩ = ⟨η ∧ β, P⟩`.
pub fn interior_form(eta: &Form, p: &Multivector) -> Result<Multivector> {
    same_chart(eta.chart(), p.chart())?;
    if eta.degree() > p.degree() {
        return Err(Error::DegreeMismatch(format!("cannot contract a {}-form into a {}-vector", eta.degree(), p.degree())));
    }
    Ok(contract_first(eta, p))
}

/// Contraction of a multivector into the first slots of a form, so that
/// `⟨i_Q ω, R⟩ = ⟨ω, Q ∧ R⟩`.
pub fn interior_mv(q: &Multivector, omega: &Form) -> Result<Form> {
    same_chart(q.chart(), omega.chart())?;
    if q.degree() > omega.degree() {
        return Err(Error::DegreeMismatch(format!("cannot contract a {}-vector into a {}-form", q.degree(), omega.degree())));
    }
    Ok(contract_first(q, omega))
}

fn contract_first<A: Kind, B: Kind>(a: &Tensor<A>, b: &Tensor<B>) -> Tensor<B> {
    let mut out = Tensor::zero(b.chart(), b.degree() - a.degree());
    for (i, ca) in a.terms() {
        for (j, cb) in b.terms() {
            if let Some((s, rest)) = j.split_off(i) {
                let p = ca * cb;
                out.add_term(rest, &if s < 0 { -p } else { p });
            }
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

    #[test]
    fn wedge_antisymmetry_and_repeats() {
        let c = chart4();
        let dx = Form::coordinate(&c, 0);
        let dy = Form::coordinate(&c, 1);
        assert_eq!(dy.wedge(&dx).unwrap(), -dx.wedge(&dy).unwrap());
        assert!(dx.wedge(&dx).unwrap().is_zero());
        let w = c.coordinate(3);
        let dxy = Multivector::basis(&c, idx(&[0, 1])).scale(&w);
        let got = dxy.wedge(&Multivector::coordinate(&c, 2)).unwrap();
        assert_eq!(got, Multivector::basis(&c, idx(&[0, 1, 2])).scale(&w));
    }

    #[test]
    fn pairing_is_a_determinant() {
        let c = chart4();
        let f = |v: &[usize]| Form::basis(&c, idx(v));
        let m = |v: &[usize]| Multivector::basis(&c, idx(v));
        assert!(pair(&f(&[0, 1, 2]), &m(&[0, 1, 2])).unwrap().is_one());
        assert!(pair(&f(&[0, 1]), &m(&[0, 2])).unwrap().is_zero());
        let dyx = Multivector::coordinate(&c, 1).wedge(&Multivector::coordinate(&c, 0)).unwrap();
        assert_eq!(pair(&f(&[0, 1]), &dyx).unwrap(), -c.one());
        assert!(matches!(pair(&f(&[0]), &m(&[0, 1])), Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn interior_signs() {
        let c = chart4();
        let dxy = Form::basis(&c, idx(&[0, 1]));
        assert_eq!(interior(&Multivector::coordinate(&c, 0), &dxy).unwrap(), Form::coordinate(&c, 1));
        assert_eq!(interior(&Multivector::coordinate(&c, 1), &dxy).unwrap(), -Form::coordinate(&c, 0));
        let dxyz = Form::basis(&c, idx(&[0, 1, 2]));
        assert!(interior(&Multivector::coordinate(&c, 3), &dxyz).unwrap().is_zero());
    }

    #[test]
    fn interior_form_first_slots() {
        let c = chart4();
        let w = c.coordinate(3);
        let p = Multivector::basis(&c, idx(&[0, 1, 2])).scale(&w);
        let r = interior_form(&Form::basis(&c, idx(&[0, 1, 2])), &p).unwrap();
        assert_eq!(r.as_scalar(), w);
        let r = interior_form(&Form::basis(&c, idx(&[0, 1])), &Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        assert_eq!(r, Multivector::coordinate(&c, 2));
        let r = interior_form(&Form::coordinate(&c, 0), &Multivector::basis(&c, idx(&[0, 1]))).unwrap();
        assert_eq!(r, Multivector::coordinate(&c, 1));
    }

    #[test]
    fn adjunction_on_all_basis_elements() {
        let c = Chart::new(["a", "b", "c", "d"], []).unwrap();
        for k in 0..=4 {
            for l in 0..=4 - k {
                for eta in MultiIndex::all(4, k) {
                    for beta in MultiIndex::all(4, l) {
                        for p in MultiIndex::all(4, k + l) {
                            let e = Form::basis(&c, eta.clone());
                            let b = Form::basis(&c, beta.clone());
                            let pm = Multivector::basis(&c, p.clone());
                            let lhs = pair(&e.wedge(&b).unwrap(), &pm).unwrap();
                            let rhs = pair(&b, &interior_form(&e, &pm).unwrap()).unwrap();
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn all_indices_count_and_order() {
        let all = MultiIndex::all(4, 2);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], idx(&[0, 1]));
        assert_eq!(all[5], idx(&[2, 3]));
        assert_eq!(MultiIndex::all(3, 0), vec![MultiIndex::empty()]);
        assert!(MultiIndex::all(2, 3).is_empty());
    }

    #[test]
    fn rendering() {
        let c = chart4();
        let w = c.coordinate(3);
        let p = Multivector::basis(&c, idx(&[0, 1, 2])).scale(&w);
        assert_eq!(p.render(), "w*Dx^Dy^Dz");
        let x1 = &c.coordinate(0) + &c.one();
        let q = Form::basis(&c, idx(&[0, 1])).scale(&x1) - Form::coordinate(&c, 0).wedge(&Form::coordinate(&c, 3)).unwrap();
        assert_eq!(q.render(), "(x + 1)*dx^dy - dx^dw");
        assert_eq!(Form::zero(&c, 2).render(), "0");
    }
}
