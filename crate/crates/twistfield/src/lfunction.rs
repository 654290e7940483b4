//! Assembly of L-polynomials: Dirichlet L(chi, u), twisted L(E, chi, u),
//! functional-equation signs, completion of the coefficient list, and exact
//! analytic-rank extraction at the central point u = 1/q.
//!
//! Coefficients are computed as sums over monic polynomials,
//! c_n = sum_{deg f = n} a_f chi(f), which produce the L-function times the
//! local Euler factor at infinity; an exact division step removes that
//! factor whenever chi is unramified at infinity. Signs come from exact
//! cyclotomic arithmetic on the computed half of the coefficients — either
//! the closed product formula (conductor coprime to N_E, and chi even
//! whenever E is bad at infinity) or the middle-coefficient ratio procedure
//! for the remaining cases, where the degree is also shifted down by the
//! infinity conductor exponent and re-verified against the extra computed
//! coefficients.

use crate::characters::{OrderLCharacter, SymbolTable};
use crate::cyclotomic::CycNumber;
use crate::elliptic::{AfTable, ConstantCurve, CurveOverFqt, ReductionKind};
use crate::galois::{FieldCtx, FieldPoly, MonicSieve, Place};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::One;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// How the polynomial was produced.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Provenance {
    /// L(chi, u), functional equation in sqrt(q) normalization
    Dirichlet,
    /// L(E, chi, u) for a (possibly constant) curve, q normalization
    Twisted,
    /// product L(chi, alpha_1 u) L(chi, alpha_2 u) of a constant twist
    ConstantProduct,
}

/// The functional-equation sign. Every variant is exact; `MiddleRatio`
/// records that the sign came from the coefficient-ratio procedure rather
/// than the closed formula.
#[derive(Clone, Debug)]
pub enum FeSign {
    Exact(CycNumber),
    MiddleRatio(CycNumber),
    /// Dirichlet polynomials: the leading coefficient c_m; the sign itself
    /// is c_m / q^{m/2} and is only a cyclotomic number for even m.
    DirichletLeading(CycNumber),
}

impl FeSign {
    pub fn unit(&self) -> Option<&CycNumber> {
        match self {
            FeSign::Exact(w) | FeSign::MiddleRatio(w) => Some(w),
            FeSign::DirichletLeading(_) => None,
        }
    }

    /// Complex value of the sign in the k = 1 embedding.
    pub fn embed(&self, q: u64, m: usize) -> Complex64 {
        match self {
            FeSign::Exact(w) | FeSign::MiddleRatio(w) => w.embed(1),
            FeSign::DirichletLeading(c) => c.embed(1) / (q as f64).powf(m as f64 / 2.0),
        }
    }
}

/// An L-polynomial with exact cyclotomic coefficients, its declared degree,
/// sign, and provenance.
#[derive(Clone, Debug)]
pub struct LPoly {
    pub ell: u32,
    pub q: u64,
    pub coeffs: Vec<CycNumber>,
    pub nfrak: usize,
    pub sign: FeSign,
    pub provenance: Provenance,
}

impl LPoly {
    pub fn degree(&self) -> usize {
        self.nfrak
    }

    pub fn coeff(&self, n: usize) -> &CycNumber {
        &self.coeffs[n]
    }

    /// Galois conjugate polynomial (the L-function of chi^k).
    pub fn galois(&self, k: u32) -> LPoly {
        LPoly {
            ell: self.ell,
            q: self.q,
            coeffs: self.coeffs.iter().map(|c| c.galois(k)).collect(),
            nfrak: self.nfrak,
            sign: match &self.sign {
                FeSign::Exact(w) => FeSign::Exact(w.galois(k)),
                FeSign::MiddleRatio(w) => FeSign::MiddleRatio(w.galois(k)),
                FeSign::DirichletLeading(c) => FeSign::DirichletLeading(c.galois(k)),
            },
            provenance: self.provenance,
        }
    }
}

/// Exact multiplicity of the zero at u = 1/q.
pub fn analytic_rank(l: &LPoly) -> usize {
    let q = BigInt::from(l.q);
    let mut coeffs: Vec<CycNumber> = l.coeffs.clone();
    let mut rank = 0usize;
    loop {
        // value at 1/q, scaled by q^deg: sum c_n q^(deg - n)
        let deg = coeffs.len() - 1;
        let mut acc = CycNumber::zero(l.ell);
        let mut pow = BigInt::one();
        for n in (0..=deg).rev() {
            acc = acc.add(&coeffs[n].scale_int(&pow));
            pow *= &q;
        }
        if !acc.is_zero() {
            return rank;
        }
        if deg == 0 {
            // the zero polynomial never arises from c_0 = 1
            unreachable!("nonzero polynomial required");
        }
        // divide exactly by (1 - q u)
        let mut d: Vec<CycNumber> = Vec::with_capacity(deg);
        let mut prev = CycNumber::zero(l.ell);
        for n in 0..deg {
            let dn = coeffs[n].add(&prev.scale_int(&q));
            prev = dn.clone();
            d.push(dn);
        }
        debug_assert_eq!(coeffs[deg], d[deg - 1].scale_int(&q).neg());
        coeffs = d;
        rank += 1;
    }
}

/// Exact (or toleranced, for odd-degree Dirichlet polynomials)
/// functional-equation verification.
pub fn verify_fe(l: &LPoly) -> bool {
    let n = l.nfrak;
    if l.coeffs.len() != n + 1 {
        return false;
    }
    let q = BigInt::from(l.q);
    match l.provenance {
        Provenance::Twisted | Provenance::ConstantProduct => {
            let Some(w) = l.sign.unit() else { return false };
            if !w.is_unit_modulus() {
                return false;
            }
            for i in 0..=n {
                // q^(n - 2i) c_i = w conj(c_{n-i}) for i <= n/2, cleared of
                // denominators
                let lhs = l.coeffs[i].scale_int(&q.pow((n - i) as u32));
                let rhs = w
                    .mul(&l.coeffs[n - i].conjugate())
                    .scale_int(&q.pow(i as u32));
                if lhs != rhs {
                    return false;
                }
            }
            true
        }
        Provenance::Dirichlet => {
            let m = n;
            let lead = &l.coeffs[m];
            // |c_m|^2 = q^m exactly
            if lead.mul(&lead.conjugate()) != CycNumber::from_int(l.ell, q.pow(m as u32)) {
                return false;
            }
            if m % 2 == 0 {
                let w = lead.div_int(&q.pow((m / 2) as u32));
                for i in 0..=m {
                    let lhs = l.coeffs[i].scale_int(&q.pow((m - i) as u32));
                    let rhs = w
                        .mul(&l.coeffs[m - i].conjugate())
                        .scale_int(&q.pow((m / 2) as u32))
                        .scale_int(&q.pow(i as u32))
                        .div_int(&q.pow((m / 2) as u32));
                    if lhs != rhs {
                        return false;
                    }
                }
                true
            } else {
                // odd m: pairwise product identity
                // q^m c_i c_{m-i} = c_m^2 conj(c_i c_{m-i})
                let lead2 = lead.mul(lead);
                for i in 0..=m {
                    let prod = l.coeffs[i].mul(&l.coeffs[m - i]);
                    let lhs = prod.scale_int(&q.pow(m as u32));
                    let rhs = lead2.mul(&prod.conjugate());
                    if lhs != rhs {
                        return false;
                    }
                }
                // embedding check of the full relation within 1e-6
                let sq = (l.q as f64).sqrt();
                for k in 1..l.ell {
                    let wk = lead.embed(k) / sq.powi(m as i32);
                    for i in 0..=m {
                        let lhs = l.coeffs[i].embed(k);
                        let rhs = wk
                            * sq.powi(2 * i as i32 - m as i32)
                            * l.coeffs[m - i].embed(k).conj();
                        let scale = 1.0f64.max(lhs.norm()).max(rhs.norm());
                        if (lhs - rhs).norm() / scale > 1e-6 {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }
}

/// Functional-equation sign mode for twisted L-functions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SignPolicy {
    /// require the closed-formula hypotheses, reject otherwise
    ExactOnly,
    /// allow the middle-coefficient ("numeric") procedure when the closed
    /// formula does not apply (odd chi with E bad at infinity)
    AllowNumeric,
}

/// The local factor of the curve at infinity, as seen by an even character.
#[derive(Clone, Copy, Debug)]
enum InfinityFactor {
    Trivial,
    Linear(i64),
    Quadratic(i64),
}

/// A twist source: a non-constant curve with its trace table, or a constant
/// curve (all places good, trace depending only on the degree).
pub enum TwistSource<'a> {
    Curve(&'a CurveOverFqt, &'a AfTable),
    Constant(&'a ConstantCurve, &'a AfTable),
}

impl<'a> TwistSource<'a> {
    fn af(&self) -> &AfTable {
        match self {
            TwistSource::Curve(_, af) | TwistSource::Constant(_, af) => af,
        }
    }

    fn conductor_degree(&self) -> usize {
        match self {
            TwistSource::Curve(e, _) => e.conductor_degree(),
            TwistSource::Constant(_, _) => 0,
        }
    }

    fn infinity_exponent(&self) -> u32 {
        match self {
            TwistSource::Curve(e, _) => e.infinity_reduction().kind.conductor_exponent(),
            TwistSource::Constant(_, _) => 0,
        }
    }

    fn infinity_factor(&self) -> InfinityFactor {
        match self {
            TwistSource::Curve(e, _) => {
                let inf = e.infinity_reduction();
                match inf.kind {
                    ReductionKind::Good => InfinityFactor::Quadratic(inf.a_p),
                    ReductionKind::SplitMultiplicative
                    | ReductionKind::NonsplitMultiplicative => InfinityFactor::Linear(inf.a_p),
                    ReductionKind::Additive => InfinityFactor::Trivial,
                }
            }
            TwistSource::Constant(e0, _) => InfinityFactor::Quadratic(e0.trace()),
        }
    }

    fn bad_finite(&self) -> Vec<(FieldPoly, u32)> {
        match self {
            TwistSource::Curve(e, _) => e.conductor().0,
            TwistSource::Constant(_, _) => Vec::new(),
        }
    }
}

/// The engine: shares the monic sieve and cached per-conductor-prime symbol
/// columns across every character of a sweep.
pub struct LEngine {
    base: Arc<FieldCtx>,
    sieve: Arc<MonicSieve>,
    /// symbol exponents of every monic prime up to the sieve bound, per
    /// conductor prime (keyed by degree and monic index)
    columns: RwLock<HashMap<(usize, u64), Arc<SymbolColumn>>>,
}

/// For one conductor prime: the symbol exponent of each target prime,
/// indexed by degree and position in the sieve's prime list. u8::MAX marks
/// the conductor prime itself.
struct SymbolColumn {
    per_degree: Vec<Vec<u8>>,
}

impl LEngine {
    pub fn new(base: Arc<FieldCtx>, sieve: Arc<MonicSieve>) -> Self {
        LEngine { base, sieve, columns: RwLock::new(HashMap::new()) }
    }

    pub fn base(&self) -> &Arc<FieldCtx> {
        &self.base
    }

    pub fn sieve(&self) -> &Arc<MonicSieve> {
        &self.sieve
    }

    fn column(&self, chi: &OrderLCharacter, factor_idx: usize) -> Arc<SymbolColumn> {
        let fac = &chi.factors()[factor_idx];
        let key = (fac.prime.degree(), self.base.monic_index(&fac.prime));
        if let Some(col) = self.columns.read().unwrap().get(&key) {
            return col.clone();
        }
        let omega = chi.omega();
        let ext = omega.ext();
        let res_size = (ext.size() as u128).pow(fac.ext_factor.degree() as u32);
        let table = if res_size <= (1 << 22) {
            Some(SymbolTable::build(omega, &fac.ext_factor))
        } else {
            None
        };
        let mut per_degree = Vec::with_capacity(self.sieve.max_deg() + 1);
        per_degree.push(Vec::new());
        for d in 1..=self.sieve.max_deg() {
            let ids = self.sieve.prime_ids(d);
            let mut v = vec![u8::MAX; ids.len()];
            for (ord, &pid) in ids.iter().enumerate() {
                let (_, idx) = self.sieve.deg_index(pid);
                let target = self.base.monic_from_index(d, idx);
                let e = match &table {
                    Some(t) => t.exponent(omega, &target),
                    None => crate::characters::residue_symbol_exponent(
                        omega,
                        &fac.ext_factor,
                        &target,
                    ),
                };
                v[ord] = e.map(|x| x as u8).unwrap_or(u8::MAX);
            }
            per_degree.push(v);
        }
        let col = Arc::new(SymbolColumn { per_degree });
        self.columns.write().unwrap().insert(key, col.clone());
        col
    }

    /// chi exponents for every monic f up to max_deg: u8 value in 0..ell,
    /// u8::MAX when gcd(f, conductor) != 1.
    fn char_table(&self, chi: &OrderLCharacter, max_deg: usize) -> Vec<Vec<u8>> {
        assert!(max_deg <= self.sieve.max_deg());
        let ell = chi.ell() as u32;
        let cols: Vec<Arc<SymbolColumn>> =
            (0..chi.factors().len()).map(|i| self.column(chi, i)).collect();
        let exps: Vec<u32> = chi.factors().iter().map(|f| f.exponent).collect();
        let mut table: Vec<Vec<u8>> = Vec::with_capacity(max_deg + 1);
        table.push(vec![0u8]);
        for d in 1..=max_deg {
            let count = self.base.size().pow(d as u32) as usize;
            let mut layer = vec![u8::MAX; count];
            // primes first
            for (ord, &pid) in self.sieve.prime_ids(d).iter().enumerate() {
                let (_, idx) = self.sieve.deg_index(pid);
                let mut total = 0u32;
                let mut zero = false;
                for (col, &e) in cols.iter().zip(&exps) {
                    let v = col.per_degree[d][ord];
                    if v == u8::MAX {
                        zero = true;
                        break;
                    }
                    total += e * v as u32;
                }
                layer[idx as usize] = if zero { u8::MAX } else { (total % ell) as u8 };
            }
            // composites by the sieve decomposition; the smallest prime
            // factor of a composite always has strictly smaller degree
            for id in self.sieve.degree_range(d) {
                if self.sieve.is_prime(id) {
                    continue;
                }
                let (_, idx) = self.sieve.deg_index(id);
                let (spf, e, pfree) = self.sieve.decompose(id);
                let (dp, pidx) = self.sieve.deg_index(spf);
                let head = table[dp][pidx as usize];
                let (df, fidx) = self.sieve.deg_index(pfree);
                let tail = table[df][fidx as usize];
                layer[idx as usize] = if head == u8::MAX || tail == u8::MAX {
                    u8::MAX
                } else {
                    (((e as u32) * (head as u32) + tail as u32) % ell) as u8
                };
            }
            table.push(layer);
        }
        table
    }

    /// Coefficients of the monic Dirichlet series sum a_f chi(f) u^{deg f}
    /// (a_f = 1 when af is None), up to degree `upto`.
    fn series(
        &self,
        chi: &OrderLCharacter,
        af: Option<&AfTable>,
        upto: usize,
    ) -> Vec<CycNumber> {
        let ell = chi.ell();
        let table = self.char_table(chi, upto);
        let mut out = Vec::with_capacity(upto + 1);
        out.push(CycNumber::one(ell));
        for d in 1..=upto {
            let mut buckets = vec![0i64; ell as usize];
            let layer = &table[d];
            match af {
                Some(af) => {
                    for (idx, &e) in layer.iter().enumerate() {
                        if e != u8::MAX {
                            buckets[e as usize] += af.value_by_index(d, idx as u64);
                        }
                    }
                }
                None => {
                    for &e in layer.iter() {
                        if e != u8::MAX {
                            buckets[e as usize] += 1;
                        }
                    }
                }
            }
            out.push(from_buckets(ell, &buckets));
        }
        out
    }

    /// Remove the infinity Euler factor from a monic series: the series is
    /// L(u) times the infinity local factor whenever chi(infinity) = 1.
    fn strip_infinity(
        &self,
        series: &[CycNumber],
        chi_inf_is_one: bool,
        factor: InfinityFactor,
        q: u64,
    ) -> Vec<CycNumber> {
        if !chi_inf_is_one {
            return series.to_vec();
        }
        let qb = BigInt::from(q);
        let mut out: Vec<CycNumber> = Vec::with_capacity(series.len());
        for n in 0..series.len() {
            let mut v = series[n].clone();
            match factor {
                InfinityFactor::Trivial => {}
                InfinityFactor::Linear(a) => {
                    if n >= 1 {
                        v = v.add(&out[n - 1].scale_int(&BigInt::from(a)));
                    }
                }
                InfinityFactor::Quadratic(a) => {
                    if n >= 1 {
                        v = v.add(&out[n - 1].scale_int(&BigInt::from(a)));
                    }
                    if n >= 2 {
                        v = v.sub(&out[n - 2].scale_int(&qb));
                    }
                }
            }
            out.push(v);
        }
        out
    }

    /// L(chi, u): all coefficients by direct summation; degree
    /// deg F - 2 + delta; the infinity Euler factor is stripped for even
    /// characters (it contributes the trivial zero at u = 1).
    pub fn dirichlet_lpoly(&self, chi: &OrderLCharacter) -> Result<LPoly> {
        let d = chi.conductor().degree();
        let dd = d + chi.delta() as usize;
        let q = self.base.p();
        if dd < 2 {
            return Err(Error::Invalid("conductor too small for a primitive character".into()));
        }
        let m = dd - 2;
        if m > self.sieve.max_deg() {
            return Err(Error::Invalid(format!(
                "sieve bound {} < Dirichlet degree {m}",
                self.sieve.max_deg()
            )));
        }
        let series = self.series(chi, None, m);
        // the infinity Euler factor of an even character is (1 - u)
        let coeffs =
            self.strip_infinity(&series, chi.delta() == 0, InfinityFactor::Linear(1), q);
        let lead = coeffs[m].clone();
        if lead.mul(&lead.conjugate())
            != CycNumber::from_int(chi.ell(), BigInt::from(q).pow(m as u32))
        {
            return Err(Error::Invalid(
                "Dirichlet leading coefficient fails |c_m|^2 = q^m".into(),
            ));
        }
        Ok(LPoly {
            ell: chi.ell(),
            q,
            coeffs,
            nfrak: m,
            sign: FeSign::DirichletLeading(lead),
            provenance: Provenance::Dirichlet,
        })
    }

    /// The sign of L(chi, u) squared, exactly: c_m / conj(c_m).
    pub fn omega_chi_squared(&self, chi: &OrderLCharacter) -> Result<CycNumber> {
        let l = self.dirichlet_lpoly(chi)?;
        let FeSign::DirichletLeading(c) = &l.sign else { unreachable!() };
        Ok(c.div(&c.conjugate()))
    }

    /// L(E, u) as integer coefficients, together with omega_E. Also checks
    /// the degree by direct truncation (two coefficients past the end).
    pub fn curve_lpoly(&self, curve: &CurveOverFqt, af: &AfTable) -> Result<(Vec<i64>, i64)> {
        let nfrak = curve.conductor_degree() - 4;
        let q = self.base.p();
        let need = nfrak + 2;
        if need > af.max_deg() || need > self.sieve.max_deg() {
            return Err(Error::Invalid("table bound too small for the curve L-function".into()));
        }
        // integer series
        let mut series: Vec<i64> = vec![1];
        for d in 1..=need {
            let mut s = 0i64;
            for idx in 0..self.base.size().pow(d as u32) {
                s += af.value_by_index(d, idx);
            }
            series.push(s);
        }
        // strip infinity factor
        let mut l: Vec<i64> = Vec::with_capacity(series.len());
        let inf = curve.infinity_reduction();
        for n in 0..series.len() {
            let mut v = series[n];
            match inf.kind {
                ReductionKind::Good => {
                    if n >= 1 {
                        v += inf.a_p * l[n - 1];
                    }
                    if n >= 2 {
                        v -= q as i64 * l[n - 2];
                    }
                }
                ReductionKind::SplitMultiplicative | ReductionKind::NonsplitMultiplicative => {
                    if n >= 1 {
                        v += inf.a_p * l[n - 1];
                    }
                }
                ReductionKind::Additive => {}
            }
            l.push(v);
        }
        if l[nfrak + 1] != 0 || l[nfrak + 2] != 0 {
            return Err(Error::Invalid(format!(
                "curve L-polynomial does not truncate at degree {nfrak}"
            )));
        }
        l.truncate(nfrak + 1);
        // omega_E from the functional equation c_n = w q^{2n-nfrak} c_{nfrak-n}
        let omega_e = if nfrak == 0 {
            1
        } else {
            let mut w = None;
            for n in (nfrak + 1).div_ceil(2)..=nfrak {
                if l[n] != 0 {
                    let qp = (q as i64).pow((2 * n - nfrak) as u32);
                    let denom = qp * l[nfrak - n];
                    if denom != 0 && l[n] % denom == 0 {
                        w = Some(l[n] / denom);
                        break;
                    }
                }
            }
            w.ok_or_else(|| Error::IndeterminateSign("curve sign".into()))?
        };
        if omega_e != 1 && omega_e != -1 {
            return Err(Error::Invalid("omega_E must be +-1".into()));
        }
        Ok((l, omega_e))
    }

    /// L(E, chi, u) completed through the functional equation.
    ///
    /// Exact-sign mode applies when the conductor is coprime to N_E and
    /// either chi is even or E has good reduction at infinity; then
    /// omega = omega_chi^2 omega_E chi(N_E). Otherwise (odd chi, E bad at
    /// infinity) the caller must opt into the middle-ratio procedure; the
    /// degree drops by the infinity exponent of N_E and both it and the sign
    /// are re-verified against extra computed coefficients.
    pub fn twisted_lpoly(
        &self,
        source: &TwistSource,
        chi: &OrderLCharacter,
        policy: SignPolicy,
    ) -> Result<LPoly> {
        let q = self.base.p();
        let ell = chi.ell();
        let delta = chi.delta() as usize;
        let bad = source.bad_finite();
        for (p, _) in &bad {
            if self.base.poly_rem(chi.conductor(), p).is_zero() {
                return Err(Error::Rejected(
                    "conductor shares a place with the curve".into(),
                ));
            }
        }
        let inf_exp = source.infinity_exponent();
        let deg_n = source.conductor_degree();
        let d = chi.conductor().degree();
        let numeric_mode = delta == 1 && inf_exp > 0;
        if numeric_mode && policy == SignPolicy::ExactOnly {
            return Err(Error::Rejected(
                "odd character with a curve bad at infinity needs the numeric-sign mode".into(),
            ));
        }
        // degree: the closed formula adds 2 delta for the infinity conductor
        // exponent of the twist; when E is already bad at infinity that
        // exponent stays at 2, so the degree drops by what N_E contributes
        let nfrak_formula = deg_n + 2 * d - 4 + 2 * delta;
        let nfrak = if numeric_mode { nfrak_formula - inf_exp as usize } else { nfrak_formula };
        let computed_upto = nfrak_formula / 2 + 1;
        if computed_upto > source.af().max_deg() || computed_upto > self.sieve.max_deg() {
            return Err(Error::Invalid(format!(
                "tables cover degree {} but the twist needs {computed_upto}",
                source.af().max_deg().min(self.sieve.max_deg())
            )));
        }
        let series = self.series(chi, Some(source.af()), computed_upto);
        let partial =
            self.strip_infinity(&series, delta == 0, source.infinity_factor(), q);

        // sign
        let (sign, omega) = if numeric_mode {
            let w = middle_ratio_sign(&partial, nfrak, q, ell)?;
            (FeSign::MiddleRatio(w.clone()), w)
        } else {
            let w2 = self.omega_chi_squared(chi)?;
            let omega_e = match source {
                TwistSource::Curve(e, af) => self.curve_lpoly(e, af)?.1,
                TwistSource::Constant(_, _) => 1,
            };
            let mut chi_n = CycNumber::one(ell);
            for (p, e) in &bad {
                let v = chi.eval(&Place::Finite(p.clone()));
                for _ in 0..*e {
                    chi_n = chi_n.mul(&v);
                }
            }
            // infinity part of N_E: chi(P_inf) = 1 for even characters, and
            // odd characters only reach here when E is good at infinity
            let w = if omega_e == 1 { w2.mul(&chi_n) } else { w2.mul(&chi_n).neg() };
            (FeSign::Exact(w.clone()), w)
        };
        if !omega.is_unit_modulus() {
            return Err(Error::IndeterminateSign(
                "sign is not unit modulus; degree hypothesis violated".into(),
            ));
        }

        // complete via c_n = w q^{2n - nfrak} conj(c_{nfrak - n})
        let mut coeffs: Vec<CycNumber> = Vec::with_capacity(nfrak + 1);
        let qb = BigInt::from(q);
        for n in 0..=nfrak {
            if n <= nfrak / 2 {
                coeffs.push(partial[n].clone());
            } else {
                let v = omega
                    .mul(&partial[nfrak - n].conjugate())
                    .scale_int(&qb.pow((2 * n - nfrak) as u32));
                if !v.is_integral() {
                    return Err(Error::Invalid(
                        "completed coefficient not integral; degree hypothesis violated".into(),
                    ));
                }
                coeffs.push(v);
            }
        }
        // consistency: every computed coefficient beyond the half must match
        // the completion, and coefficients beyond the degree must vanish
        for n in (nfrak / 2 + 1)..=nfrak.min(partial.len() - 1) {
            if partial[n] != coeffs[n] {
                return Err(Error::Invalid(format!(
                    "computed c_{n} disagrees with the functional equation"
                )));
            }
        }
        for n in (nfrak + 1)..partial.len() {
            if !partial[n].is_zero() {
                return Err(Error::Invalid(format!(
                    "c_{n} nonzero beyond the declared degree {nfrak}"
                )));
            }
        }
        Ok(LPoly {
            ell,
            q,
            coeffs,
            nfrak,
            sign,
            provenance: Provenance::Twisted,
        })
    }

    /// Direct coefficients of the twisted series (after the infinity strip)
    /// up to `upto`, for truncation checks; requires tables to that degree.
    pub fn twisted_direct(
        &self,
        source: &TwistSource,
        chi: &OrderLCharacter,
        upto: usize,
    ) -> Result<Vec<CycNumber>> {
        if upto > source.af().max_deg() || upto > self.sieve.max_deg() {
            return Err(Error::Invalid("tables too small for direct computation".into()));
        }
        let series = self.series(chi, Some(source.af()), upto);
        Ok(self.strip_infinity(
            &series,
            chi.delta() == 0,
            source.infinity_factor(),
            self.base.p(),
        ))
    }

    /// Direct Dirichlet coefficients (after the infinity strip) up to `upto`.
    pub fn dirichlet_direct(&self, chi: &OrderLCharacter, upto: usize) -> Result<Vec<CycNumber>> {
        if upto > self.sieve.max_deg() {
            return Err(Error::Invalid("sieve too small".into()));
        }
        let series = self.series(chi, None, upto);
        Ok(self.strip_infinity(
            &series,
            chi.delta() == 0,
            InfinityFactor::Linear(1),
            self.base.p(),
        ))
    }
}

fn from_buckets(ell: u32, buckets: &[i64]) -> CycNumber {
    let mut acc = CycNumber::zero(ell);
    for (k, &v) in buckets.iter().enumerate() {
        if v != 0 {
            acc = acc.add(&CycNumber::zeta_pow(ell, k as i64).scale_int(&BigInt::from(v)));
        }
    }
    acc
}

/// The middle-coefficient ratio sign: the first usable pair
/// (c_n, c_{nfrak-n}) with both nonzero gives
/// omega = c_n / (q^{2n-nfrak} conj(c_{nfrak-n})).
fn middle_ratio_sign(
    partial: &[CycNumber],
    nfrak: usize,
    q: u64,
    _ell: u32,
) -> Result<CycNumber> {
    let qb = BigInt::from(q);
    let lowest = nfrak.div_ceil(2);
    for n in lowest..partial.len().min(nfrak + 1) {
        if n == nfrak - n && partial[n].is_zero() {
            continue;
        }
        if partial[n].is_zero() || partial[nfrak - n].is_zero() {
            continue;
        }
        let denom = partial[nfrak - n]
            .conjugate()
            .scale_int(&qb.pow((2 * n - nfrak) as u32));
        let w = partial[n].div(&denom);
        return Ok(w);
    }
    Err(Error::IndeterminateSign(
        "all probed middle coefficients vanish".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{enumerate_characters, OmegaChoice};

    fn engine(p: u64, max_deg: usize) -> LEngine {
        let base = Arc::new(FieldCtx::base(p));
        let sieve = Arc::new(MonicSieve::build(&base, max_deg));
        LEngine::new(base, sieve)
    }

    #[test]
    fn base_lpolys_match_published_values() {
        // L(E1, u) = 1 over F_5 and F_7; L(E2, u) = 1 - qu (q = 1 mod 4)
        // and 1 + qu (q = 3 mod 4)
        for (p, e2_c1) in [(5u64, -5i64), (7, 7), (11, 11), (13, -13)] {
            let eng = engine(p, 3);
            let base = eng.base().clone();
            let sieve = eng.sieve().clone();
            let e1 = CurveOverFqt::legendre(base.clone()).unwrap();
            let af1 = AfTable::build(&e1, &sieve, 3);
            let (l1, w1) = eng.curve_lpoly(&e1, &af1).unwrap();
            assert_eq!(l1, vec![1], "L(E1) = 1 over F_{p}");
            assert_eq!(w1, 1);
            let e2 = CurveOverFqt::e2(base.clone()).unwrap();
            let af2 = AfTable::build(&e2, &sieve, 3);
            let (l2, w2) = eng.curve_lpoly(&e2, &af2).unwrap();
            assert_eq!(l2, vec![1, e2_c1], "L(E2) over F_{p}");
            assert_eq!(w2, if p % 4 == 1 { -1 } else { 1 });
        }
    }

    #[test]
    fn dirichlet_degree_and_fe() {
        for (ell, p) in [(3u32, 5u64), (3, 7), (5, 11)] {
            let eng = engine(p, 4);
            let om = Arc::new(OmegaChoice::new(ell, p).unwrap());
            for d in 1..=2usize {
                for chi in enumerate_characters(&om, d, &[]) {
                    let l = eng.dirichlet_lpoly(&chi).unwrap();
                    assert_eq!(l.nfrak + 2, d + chi.delta() as usize);
                    assert!(verify_fe(&l), "Dirichlet FE for {}", chi.serialize());
                    // truncation: the stripped series vanishes past m
                    let direct = eng.dirichlet_direct(&chi, l.nfrak + 2).unwrap();
                    for n in (l.nfrak + 1)..direct.len() {
                        assert!(direct[n].is_zero(), "c_{n} must vanish");
                    }
                }
            }
        }
    }

    #[test]
    fn legendre_f5_d2_histogram() {
        // published row: conductor degree 2 over F_5 gives ranks (6, 4, 0)
        let eng = engine(5, 4);
        let base = eng.base().clone();
        let e1 = CurveOverFqt::legendre(base.clone()).unwrap();
        let af = AfTable::build(&e1, &eng.sieve().clone(), 4);
        let om = Arc::new(OmegaChoice::new(3, 5).unwrap());
        let chars = enumerate_characters(&om, 2, &e1.bad_finite_places());
        assert_eq!(chars.len(), 10);
        let src = TwistSource::Curve(&e1, &af);
        let mut hist = [0usize; 3];
        for chi in &chars {
            let l = eng.twisted_lpoly(&src, chi, SignPolicy::ExactOnly).unwrap();
            assert_eq!(l.nfrak, 4);
            assert!(verify_fe(&l));
            hist[analytic_rank(&l)] += 1;
        }
        assert_eq!(hist, [6, 4, 0]);
    }

    #[test]
    fn e2_f5_d2_histogram() {
        // published row: (8, 2, 0, 0)
        let eng = engine(5, 4);
        let base = eng.base().clone();
        let e2 = CurveOverFqt::e2(base.clone()).unwrap();
        let af = AfTable::build(&e2, &eng.sieve().clone(), 4);
        let om = Arc::new(OmegaChoice::new(3, 5).unwrap());
        let chars = enumerate_characters(&om, 2, &e2.bad_finite_places());
        assert_eq!(chars.len(), 10);
        let src = TwistSource::Curve(&e2, &af);
        let mut hist = [0usize; 4];
        for chi in &chars {
            let l = eng.twisted_lpoly(&src, chi, SignPolicy::ExactOnly).unwrap();
            assert_eq!(l.nfrak, 5);
            assert!(verify_fe(&l));
            hist[analytic_rank(&l)] += 1;
        }
        assert_eq!(hist, [8, 2, 0, 0]);
    }

    #[test]
    fn legendre_f7_d1_odd_numeric_mode() {
        // all five degree-1 characters over F_7 are odd; the Legendre curve
        // is additive at infinity, so the closed sign formula does not
        // apply; ranks are (5, 0, 0) and the effective degree is 2
        let eng = engine(7, 4);
        let base = eng.base().clone();
        let e1 = CurveOverFqt::legendre(base.clone()).unwrap();
        let af = AfTable::build(&e1, &eng.sieve().clone(), 4);
        let om = Arc::new(OmegaChoice::new(3, 7).unwrap());
        let chars = enumerate_characters(&om, 1, &e1.bad_finite_places());
        assert_eq!(chars.len(), 5);
        let src = TwistSource::Curve(&e1, &af);
        let mut rank0 = 0;
        for chi in &chars {
            assert!(chi.is_odd());
            assert!(eng
                .twisted_lpoly(&src, chi, SignPolicy::ExactOnly)
                .is_err());
            let l = eng.twisted_lpoly(&src, chi, SignPolicy::AllowNumeric).unwrap();
            assert_eq!(l.nfrak, 2, "degree drops to 2d for the ramified pair");
            assert!(verify_fe(&l));
            // truncation well past the degree
            let direct = eng.twisted_direct(&src, chi, 4).unwrap();
            assert!(direct[3].is_zero() && direct[4].is_zero());
            if analytic_rank(&l) == 0 {
                rank0 += 1;
            }
        }
        assert_eq!(rank0, 5);
    }

    #[test]
    fn exact_sign_agrees_with_middle_ratio() {
        // E2 over F_5, conductor degree 2: both sign routes must agree
        let eng = engine(5, 4);
        let base = eng.base().clone();
        let e2 = CurveOverFqt::e2(base.clone()).unwrap();
        let af = AfTable::build(&e2, &eng.sieve().clone(), 4);
        let om = Arc::new(OmegaChoice::new(3, 5).unwrap());
        let src = TwistSource::Curve(&e2, &af);
        for chi in enumerate_characters(&om, 2, &e2.bad_finite_places()) {
            let l = eng.twisted_lpoly(&src, &chi, SignPolicy::ExactOnly).unwrap();
            let FeSign::Exact(w) = &l.sign else { panic!("exact mode expected") };
            let direct = eng.twisted_direct(&src, &chi, l.nfrak / 2 + 1).unwrap();
            if let Ok(wm) = middle_ratio_sign(&direct, l.nfrak, 5, 3) {
                assert_eq!(*w, wm);
            }
        }
    }

    #[test]
    fn perturbed_polynomial_fails_fe() {
        let eng = engine(5, 4);
        let base = eng.base().clone();
        let e2 = CurveOverFqt::e2(base.clone()).unwrap();
        let af = AfTable::build(&e2, &eng.sieve().clone(), 4);
        let om = Arc::new(OmegaChoice::new(3, 5).unwrap());
        let chi = &enumerate_characters(&om, 2, &e2.bad_finite_places())[0];
        let src = TwistSource::Curve(&e2, &af);
        let mut l = eng.twisted_lpoly(&src, chi, SignPolicy::ExactOnly).unwrap();
        assert!(verify_fe(&l));
        l.coeffs[1] = l.coeffs[1].add(&CycNumber::one(3));
        assert!(!verify_fe(&l), "perturbation must break the FE");
    }

    #[test]
    fn conjugate_character_has_conjugate_coefficients() {
        let eng = engine(5, 4);
        let base = eng.base().clone();
        let e2 = CurveOverFqt::e2(base.clone()).unwrap();
        let af = AfTable::build(&e2, &eng.sieve().clone(), 4);
        let om = Arc::new(OmegaChoice::new(3, 5).unwrap());
        let src = TwistSource::Curve(&e2, &af);
        for chi in enumerate_characters(&om, 2, &e2.bad_finite_places()) {
            let l = eng.twisted_lpoly(&src, &chi, SignPolicy::ExactOnly).unwrap();
            let lbar = eng
                .twisted_lpoly(&src, &chi.power(2), SignPolicy::ExactOnly)
                .unwrap();
            for n in 0..=l.nfrak {
                assert_eq!(l.coeffs[n].conjugate(), lbar.coeffs[n]);
            }
            assert_eq!(analytic_rank(&l), analytic_rank(&lbar));
        }
    }

    #[test]
    fn explicit_rank_two_factorization() {
        // (1 + 5u)^2 (1 - 5u)^2 has rank 2 at u = 1/5
        let ell = 3;
        let mut coeffs = vec![CycNumber::zero(ell); 5];
        // (1 - 25 u^2)^2 = 1 - 50 u^2 + 625 u^4
        coeffs[0] = CycNumber::one(ell);
        coeffs[2] = CycNumber::from_int(ell, -50);
        coeffs[4] = CycNumber::from_int(ell, 625);
        let l = LPoly {
            ell,
            q: 5,
            coeffs,
            nfrak: 4,
            sign: FeSign::Exact(CycNumber::one(ell)),
            provenance: Provenance::Twisted,
        };
        assert_eq!(analytic_rank(&l), 2);
        assert!(verify_fe(&l));
    }
}
