//! Primitive Dirichlet characters of prime order `ell` over F_p(t):
//! residue symbols, evaluation, parity, enumeration, and Gauss-sum signs.
//!
//! A character of order `ell` lives on conductors that are square-free monic
//! products of n_q-divisible primes (n_q the order of p mod ell). Residue
//! symbols are computed in the residue field of a distinguished factor of
//! each conductor prime over F_{p^{n_q}}; the distinguished factor is the
//! lexicographically least one, so every value is reproducible.

use crate::cyclotomic::CycNumber;
use crate::galois::{
    factor_over_extension, factor_u64, lift_poly, multiplicative_order, place_order_key,
    FieldCtx, FieldElement, FieldPoly, Place,
};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// The fixed identification of ell-th roots of unity in F_{p^{n_q}} with
/// complex ell-th roots of unity: zeta_f = g^((p^{n_q}-1)/ell) corresponds
/// to exp(2 pi i / ell), where g is the canonical generator.
pub struct OmegaChoice {
    ell: u32,
    n_q: u32,
    base: Arc<FieldCtx>,
    ext: Arc<FieldCtx>,
    zeta_f: FieldElement,
    /// element index of zeta_f^k -> k
    root_exponent: HashMap<u64, u32>,
}

impl OmegaChoice {
    pub fn new(ell: u32, p: u64) -> Result<Self> {
        if p % ell as u64 == 0 {
            return Err(Error::Invalid(format!("ell = {ell} divides p = {p}")));
        }
        let n_q = multiplicative_order(p, ell as u64)?;
        let base = Arc::new(FieldCtx::base(p));
        let ext = if n_q == 1 {
            base.clone()
        } else {
            Arc::new(FieldCtx::extension(p, n_q as usize))
        };
        let size = ext.size();
        let zeta_f = ext.el_pow(ext.generator(), ((size - 1) / ell as u64) as u128);
        let mut root_exponent = HashMap::new();
        let mut cur = ext.el_one();
        for k in 0..ell {
            root_exponent.insert(ext.el_index(&cur), k);
            cur = ext.el_mul(&cur, &zeta_f);
        }
        assert_eq!(root_exponent.len(), ell as usize, "zeta_f must have exact order ell");
        Ok(OmegaChoice { ell, n_q, base, ext, zeta_f, root_exponent })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn n_q(&self) -> u32 {
        self.n_q
    }

    pub fn base(&self) -> &Arc<FieldCtx> {
        &self.base
    }

    pub fn ext(&self) -> &Arc<FieldCtx> {
        &self.ext
    }

    pub fn zeta_f(&self) -> &FieldElement {
        &self.zeta_f
    }

    /// Exponent k with x = zeta_f^k, if x is an ell-th root of unity.
    pub fn exponent_of(&self, x: &FieldElement) -> Option<u32> {
        self.root_exponent.get(&self.ext.el_index(x)).copied()
    }
}

/// One conductor prime with its exponent and distinguished extension factor.
#[derive(Clone)]
pub struct CharFactor {
    /// monic irreducible over F_p
    pub prime: FieldPoly,
    /// exponent in 1..ell
    pub exponent: u32,
    /// the lexicographically least factor of `prime` over F_{p^{n_q}}
    pub ext_factor: FieldPoly,
}

/// A primitive character of order ell with square-free monic conductor.
#[derive(Clone)]
pub struct OrderLCharacter {
    omega: Arc<OmegaChoice>,
    conductor: FieldPoly,
    factors: Vec<CharFactor>,
    delta: u8,
}

impl OrderLCharacter {
    /// Assemble a character from conductor primes and exponents. Primes are
    /// sorted by (degree, lex); the first exponent need not be 1 here.
    pub fn new(
        omega: Arc<OmegaChoice>,
        primes_exps: Vec<(FieldPoly, u32)>,
    ) -> Result<Self> {
        let base = omega.base().clone();
        let ext = omega.ext().clone();
        let ell = omega.ell();
        let n_q = omega.n_q() as usize;
        let mut pe = primes_exps;
        pe.sort_by(|a, b| place_order_key(&a.0).cmp(&place_order_key(&b.0)));
        let mut conductor = base.poly_one();
        let mut factors = Vec::with_capacity(pe.len());
        for (prime, e) in pe {
            if e == 0 || e >= ell {
                return Err(Error::Invalid(format!("exponent {e} out of 1..{ell}")));
            }
            if prime.degree() % n_q != 0 {
                return Err(Error::Rejected(format!(
                    "conductor prime of degree {} is not {}-divisible",
                    prime.degree(),
                    n_q
                )));
            }
            if !base.is_irreducible(&prime) {
                return Err(Error::Invalid("conductor factor not irreducible".into()));
            }
            if factors.iter().any(|f: &CharFactor| f.prime == prime) {
                return Err(Error::Invalid("repeated conductor prime".into()));
            }
            conductor = base.poly_mul(&conductor, &prime);
            let orbit = factor_over_extension(&base, &ext, &prime)?;
            factors.push(CharFactor { prime, exponent: e, ext_factor: orbit[0].clone() });
        }
        if factors.is_empty() {
            return Err(Error::Invalid("empty conductor".into()));
        }
        let delta = compute_delta(&omega, &factors);
        Ok(OrderLCharacter { omega, conductor, factors, delta })
    }

    /// Assemble from prevalidated factors (distinct primes already sorted by
    /// place order, with their distinguished extension factors).
    pub fn from_factors(omega: Arc<OmegaChoice>, factors: Vec<CharFactor>) -> Self {
        let base = omega.base().clone();
        let mut conductor = base.poly_one();
        for f in &factors {
            conductor = base.poly_mul(&conductor, &f.prime);
        }
        let delta = compute_delta(&omega, &factors);
        OrderLCharacter { omega, conductor, factors, delta }
    }

    pub fn omega(&self) -> &Arc<OmegaChoice> {
        &self.omega
    }

    pub fn ell(&self) -> u32 {
        self.omega.ell()
    }

    pub fn p(&self) -> u64 {
        self.omega.base().p()
    }

    pub fn n_q(&self) -> u32 {
        self.omega.n_q()
    }

    pub fn conductor(&self) -> &FieldPoly {
        &self.conductor
    }

    pub fn factors(&self) -> &[CharFactor] {
        &self.factors
    }

    /// Parity: 0 for even characters, 1 for odd. Characters are even
    /// whenever n_q > 1; in the Kummer case parity is decided by the
    /// exponent-weighted conductor degree mod ell.
    pub fn delta(&self) -> u8 {
        self.delta
    }

    pub fn is_odd(&self) -> bool {
        self.delta == 1
    }

    /// chi^k for 1 <= k <= ell-1 (same conductor, scaled exponents).
    pub fn power(&self, k: u32) -> Self {
        assert!(k >= 1 && k < self.ell());
        let ell = self.ell();
        let factors: Vec<CharFactor> = self
            .factors
            .iter()
            .map(|f| CharFactor {
                prime: f.prime.clone(),
                exponent: (f.exponent * k) % ell,
                ext_factor: f.ext_factor.clone(),
            })
            .collect();
        let delta = compute_delta(&self.omega, &factors);
        OrderLCharacter {
            omega: self.omega.clone(),
            conductor: self.conductor.clone(),
            factors,
            delta,
        }
    }

    /// The canonical representative among the powers of this character:
    /// exponents rescaled so the first (least) conductor prime carries
    /// exponent 1.
    pub fn normalized(&self) -> Self {
        let ell = self.ell() as u64;
        let e1 = self.factors[0].exponent as u64;
        if e1 == 1 {
            return self.clone();
        }
        let mut inv = 0u64;
        for k in 1..ell {
            if e1 * k % ell == 1 {
                inv = k;
                break;
            }
        }
        self.power(inv as u32)
    }

    /// chi(f) as the exponent k of zeta_ell^k, or None when
    /// gcd(f, conductor) != 1. Defined for any nonzero polynomial.
    pub fn exponent_of_poly(&self, f: &FieldPoly) -> Option<u32> {
        let mut total = 0u64;
        for fac in &self.factors {
            let k = residue_symbol_exponent(&self.omega, &fac.ext_factor, f)?;
            total += fac.exponent as u64 * k as u64;
        }
        Some((total % self.ell() as u64) as u32)
    }

    /// Evaluate at a polynomial or place; completely multiplicative, zero on
    /// non-units mod the conductor, and 1 - delta at infinity.
    pub fn eval(&self, at: &Place) -> CycNumber {
        let ell = self.ell();
        match at {
            Place::Infinity => {
                if self.delta == 0 {
                    CycNumber::one(ell)
                } else {
                    CycNumber::zero(ell)
                }
            }
            Place::Finite(f) => match self.exponent_of_poly(f) {
                None => CycNumber::zero(ell),
                Some(k) => CycNumber::zeta_pow(ell, k as i64),
            },
        }
    }

    /// Text form "ell;q;F-coefficients;(P_i,e_i) list;delta".
    pub fn serialize(&self) -> String {
        let coeffs = poly_coeff_string(self.omega.base(), &self.conductor);
        let facs: Vec<String> = self
            .factors
            .iter()
            .map(|f| {
                format!(
                    "({})^{}",
                    poly_coeff_string(self.omega.base(), &f.prime),
                    f.exponent
                )
            })
            .collect();
        format!(
            "{};{};{};{};{}",
            self.ell(),
            self.p(),
            coeffs,
            facs.join(","),
            self.delta
        )
    }
}

pub fn poly_coeff_string(ctx: &FieldCtx, f: &FieldPoly) -> String {
    let v: Vec<String> = f
        .0
        .iter()
        .map(|c| {
            if ctx.m() == 1 {
                c.0[0].to_string()
            } else {
                let inner: Vec<String> = c.0.iter().map(u64::to_string).collect();
                format!("[{}]", inner.join(" "))
            }
        })
        .collect();
    v.join(" ")
}

fn compute_delta(omega: &OmegaChoice, factors: &[CharFactor]) -> u8 {
    if omega.n_q() > 1 {
        return 0;
    }
    let ell = omega.ell() as u64;
    let weighted: u64 = factors
        .iter()
        .map(|f| f.exponent as u64 * f.prime.degree() as u64 % ell)
        .sum();
    if weighted % ell == 0 {
        0
    } else {
        1
    }
}

/// The order-ell residue symbol exponent at a distinguished factor:
/// k with a^((Q-1)/ell) = zeta_f^k mod ext_factor, or None when the factor
/// divides a. `a` has coefficients in the prime field.
pub fn residue_symbol_exponent(
    omega: &OmegaChoice,
    ext_factor: &FieldPoly,
    a: &FieldPoly,
) -> Option<u32> {
    let ext = omega.ext();
    let lifted = lift_poly(omega.base(), ext, a);
    residue_symbol_exponent_ext(omega, ext_factor, &lifted)
}

/// Same, for `a` already over the extension field.
pub fn residue_symbol_exponent_ext(
    omega: &OmegaChoice,
    ext_factor: &FieldPoly,
    a: &FieldPoly,
) -> Option<u32> {
    let ext = omega.ext();
    let r = ext.poly_rem(a, ext_factor);
    if r.is_zero() {
        return None;
    }
    let q_res: u128 = (ext.size() as u128).pow(ext_factor.degree() as u32);
    let e = (q_res - 1) / omega.ell() as u128;
    let w = ext.poly_powmod(&r, e, ext_factor);
    assert_eq!(w.degree(), 0, "symbol value must be a constant");
    let k = omega
        .exponent_of(&w.0[0])
        .expect("symbol value must be an ell-th root of unity");
    Some(k)
}

/// Public residue-symbol operation: the symbol at the canonical extension
/// factor of an n_q-divisible prime P, as a cyclotomic number (0 if P | a).
pub fn residue_symbol(
    omega: &Arc<OmegaChoice>,
    prime: &FieldPoly,
    a: &FieldPoly,
) -> Result<CycNumber> {
    let n_q = omega.n_q() as usize;
    if prime.degree() % n_q != 0 {
        return Err(Error::Rejected(format!(
            "prime of degree {} is not {}-divisible",
            prime.degree(),
            n_q
        )));
    }
    let orbit = factor_over_extension(omega.base(), omega.ext(), prime)?;
    Ok(match residue_symbol_exponent(omega, &orbit[0], a) {
        None => CycNumber::zero(omega.ell()),
        Some(k) => CycNumber::zeta_pow(omega.ell(), k as i64),
    })
}

/// Dense table of symbol exponents over the residue field of one extension
/// factor: table[residue index] = exponent, with u8::MAX marking non-units.
pub struct SymbolTable {
    pub ext_factor: FieldPoly,
    pub table: Vec<u8>,
}

impl SymbolTable {
    pub fn build(omega: &OmegaChoice, ext_factor: &FieldPoly) -> Self {
        let ext = omega.ext();
        let e = ext_factor.degree();
        let qe = ext.size();
        let q_res = qe.pow(e as u32);
        let mut table = vec![u8::MAX; q_res as usize];
        // find a generator of the residue field
        let fac = factor_u64(q_res - 1);
        let one = ext.poly_one();
        let mut gen = None;
        'cand: for idx in 1..q_res {
            let g = residue_from_index(ext, e, idx);
            if g.is_zero() {
                continue;
            }
            for &(r, _) in &fac {
                let t = ext.poly_powmod(&g, ((q_res - 1) / r) as u128, ext_factor);
                if t == one {
                    continue 'cand;
                }
            }
            gen = Some(g);
            break;
        }
        let gen = gen.expect("residue field has a generator");
        let w = ext.poly_powmod(&gen, ((q_res - 1) / omega.ell() as u64) as u128, ext_factor);
        assert_eq!(w.degree(), 0);
        let k0 = omega.exponent_of(&w.0[0]).expect("root of unity") as u64;
        let ell = omega.ell() as u64;
        let mut cur = one.clone();
        for j in 0..(q_res - 1) {
            let idx = residue_index(ext, e, &cur);
            table[idx as usize] = ((k0 * j) % ell) as u8;
            cur = ext.poly_rem(&ext.poly_mul(&cur, &gen), ext_factor);
        }
        SymbolTable { ext_factor: ext_factor.clone(), table }
    }

    /// Exponent of chi_{ext_factor}(a) for a over the prime field.
    pub fn exponent(&self, omega: &OmegaChoice, a: &FieldPoly) -> Option<u32> {
        let ext = omega.ext();
        let lifted = lift_poly(omega.base(), ext, a);
        let r = ext.poly_rem(&lifted, &self.ext_factor);
        let idx = residue_index(ext, self.ext_factor.degree(), &r);
        let v = self.table[idx as usize];
        if v == u8::MAX {
            None
        } else {
            Some(v as u32)
        }
    }
}

/// Dense index of a residue class (polynomial of degree < e over ext).
pub fn residue_index(ext: &FieldCtx, e: usize, r: &FieldPoly) -> u64 {
    let qe = ext.size();
    let mut idx = 0u64;
    for i in (0..e).rev() {
        let c = r.0.get(i).map(|c| ext.el_index(c)).unwrap_or(0);
        idx = idx * qe + c;
    }
    idx
}

pub fn residue_from_index(ext: &FieldCtx, e: usize, mut idx: u64) -> FieldPoly {
    let qe = ext.size();
    let mut v = Vec::with_capacity(e);
    for _ in 0..e {
        v.push(ext.el_from_index(idx % qe));
        idx /= qe;
    }
    let mut f = FieldPoly(v);
    while let Some(last) = f.0.last() {
        if ext.el_is_zero(last) {
            f.0.pop();
        } else {
            break;
        }
    }
    f
}

/// Enumerate one character per degree-ell cyclic extension with monic
/// square-free conductor of degree d supported on n_q-divisible primes
/// coprime to the finite places in `avoid`.
///
/// Conductors F = P_1 ... P_k (ordered by degree then lex) carry exponent 1
/// on P_1 and free exponents in 1..ell on the rest. Output is sorted by
/// conductor coefficients, then by exponent vector.
pub fn enumerate_characters(
    omega: &Arc<OmegaChoice>,
    d: usize,
    avoid: &[Place],
) -> Vec<OrderLCharacter> {
    let base = omega.base().clone();
    let n_q = omega.n_q() as usize;
    let ell = omega.ell();
    if d == 0 || d % n_q != 0 {
        return Vec::new();
    }
    let avoid_fin: Vec<&FieldPoly> = avoid
        .iter()
        .filter_map(|pl| match pl {
            Place::Finite(f) => Some(f),
            Place::Infinity => None,
        })
        .collect();
    let mut primes_by_deg: HashMap<usize, Vec<FieldPoly>> = HashMap::new();
    let mut ext_factor: HashMap<FieldPoly, FieldPoly> = HashMap::new();
    for deg in (n_q..=d).step_by(n_q) {
        let list: Vec<FieldPoly> = base
            .enumerate_monic_irreducibles(deg)
            .into_iter()
            .filter(|p| !avoid_fin.iter().any(|a| *a == p))
            .collect();
        for p in &list {
            let orbit = factor_over_extension(&base, omega.ext(), p)
                .expect("n_q-divisible prime factors over the extension");
            ext_factor.insert(p.clone(), orbit[0].clone());
        }
        primes_by_deg.insert(deg, list);
    }
    // all multisets of degrees summing to d
    fn shapes_rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, remaining: usize, min: usize, step: usize) {
        if remaining == 0 {
            out.push(cur.clone());
            return;
        }
        let mut deg = min;
        while deg <= remaining {
            cur.push(deg);
            shapes_rec(out, cur, remaining - deg, deg, step);
            cur.pop();
            deg += step;
        }
    }
    let mut shapes: Vec<Vec<usize>> = Vec::new();
    shapes_rec(&mut shapes, &mut Vec::new(), d, n_q, n_q);

    fn choose_rec(
        out: &mut Vec<Vec<FieldPoly>>,
        primes_by_deg: &HashMap<usize, Vec<FieldPoly>>,
        shape: &[usize],
        pos: usize,
        cur: &mut Vec<(usize, usize)>,
    ) {
        if pos == shape.len() {
            let picked: Vec<FieldPoly> = cur
                .iter()
                .map(|&(deg, i)| primes_by_deg[&deg][i].clone())
                .collect();
            out.push(picked);
            return;
        }
        let deg = shape[pos];
        let list = &primes_by_deg[&deg];
        let start = if pos > 0 && shape[pos - 1] == deg {
            cur.last().unwrap().1 + 1
        } else {
            0
        };
        for i in start..list.len() {
            cur.push((deg, i));
            choose_rec(out, primes_by_deg, shape, pos + 1, cur);
            cur.pop();
        }
    }
    let mut conductors: Vec<Vec<FieldPoly>> = Vec::new();
    for shape in shapes {
        choose_rec(&mut conductors, &primes_by_deg, &shape, 0, &mut Vec::new());
    }
    // sort by the conductor polynomial, lex on coefficients
    let mut keyed: Vec<(FieldPoly, Vec<FieldPoly>)> = conductors
        .into_iter()
        .map(|ps| {
            let mut f = base.poly_one();
            for p in &ps {
                f = base.poly_mul(&f, p);
            }
            (f, ps)
        })
        .collect();
    keyed.sort_by(|a, b| a.0 .0.cmp(&b.0 .0));

    let mut out = Vec::new();
    for (_f, mut ps) in keyed {
        ps.sort_by(|a, b| place_order_key(a).cmp(&place_order_key(b)));
        let k = ps.len();
        let mut exps = vec![1u32; k];
        loop {
            let factors: Vec<CharFactor> = ps
                .iter()
                .zip(exps.iter())
                .map(|(p, &e)| CharFactor {
                    prime: p.clone(),
                    exponent: e,
                    ext_factor: ext_factor[p].clone(),
                })
                .collect();
            out.push(OrderLCharacter::from_factors(omega.clone(), factors));
            // next exponent vector: positions 1..k run over 1..ell-1
            let mut done = true;
            for i in (1..k).rev() {
                if exps[i] + 1 < ell {
                    exps[i] += 1;
                    for e in exps.iter_mut().skip(i + 1) {
                        *e = 1;
                    }
                    done = false;
                    break;
                }
                exps[i] = 1;
            }
            if done {
                break;
            }
        }
    }
    out
}

/// The parity bit of a character.
pub fn parity(chi: &OrderLCharacter) -> u8 {
    chi.delta()
}

/// Numerically computed sign of the functional equation of L(chi, u), from
/// Gauss sums. Cross-check only; the engine derives exact signs from
/// coefficients.
pub fn gauss_sign(chi: &OrderLCharacter) -> Complex64 {
    let base = chi.omega().base();
    let p = base.p();
    let ell = chi.ell();
    let f = chi.conductor();
    let d = f.degree();
    let zeta_p = |c: u64| -> Complex64 {
        let th = 2.0 * PI * (c as f64) / (p as f64);
        Complex64::new(th.cos(), th.sin())
    };
    let embed = |k: Option<u32>| -> Complex64 {
        match k {
            None => Complex64::new(0.0, 0.0),
            Some(k) => {
                let th = 2.0 * PI * (k as f64) / (ell as f64);
                Complex64::new(th.cos(), th.sin())
            }
        }
    };
    // G(chi) = sum over residues a mod F of chi(a) e_q(a/F); the Hayes
    // exponential only sees the coefficient of t^(d-1) in a
    let mut g = Complex64::new(0.0, 0.0);
    let count = p.pow(d as u32);
    for idx in 0..count {
        let a = residue_from_index(base, d, idx);
        if a.is_zero() {
            continue;
        }
        let chi_a = embed(chi.exponent_of_poly(&a));
        if chi_a.norm_sqr() == 0.0 {
            continue;
        }
        let top = a.0.get(d - 1).map(|c| c.0[0]).unwrap_or(0);
        g += chi_a * zeta_p(top);
    }
    let unit = g / g.norm();
    if chi.delta() == 0 {
        unit
    } else {
        // odd case: multiply by sqrt(q)/tau(chi)
        let mut tau = Complex64::new(0.0, 0.0);
        for c in 1..p {
            let a = FieldPoly(vec![base.el_from_u64(c)]);
            tau += embed(chi.exponent_of_poly(&a)) * zeta_p(c);
        }
        (p as f64).sqrt() / tau * unit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega(ell: u32, p: u64) -> Arc<OmegaChoice> {
        Arc::new(OmegaChoice::new(ell, p).unwrap())
    }

    #[test]
    fn canonical_omega_for_f7() {
        let om = omega(3, 7);
        assert_eq!(om.n_q(), 1);
        // generator of F_7* is 3, zeta_f = 3^2 = 2
        assert_eq!(om.ext().el_index(om.zeta_f()), 2);
    }

    #[test]
    fn residue_symbol_frozen_example() {
        // p=7, ell=3, P=t, a=3: 3^2 = 2 = zeta_f^1, so the symbol is zeta_3
        let om = omega(3, 7);
        let base = om.base().clone();
        let t = base.poly_t();
        let a = base.poly_from_u64(&[3]);
        let s = residue_symbol(&om, &t, &a).unwrap();
        assert_eq!(s, CycNumber::zeta_pow(3, 1));
        assert_eq!(residue_symbol(&om, &t, &base.poly_one()).unwrap(), CycNumber::one(3));
        assert_eq!(residue_symbol(&om, &t, &base.poly_t()).unwrap(), CycNumber::zero(3));
        // rejects primes that are not n_q-divisible
        let om5 = omega(3, 5);
        let lin = om5.base().poly_t();
        assert!(residue_symbol(&om5, &lin, &a).is_err());
    }

    #[test]
    fn symbol_is_multiplicative_and_torsion() {
        let om = omega(3, 5);
        let base = om.base().clone();
        let p = base.poly_from_u64(&[2, 0, 1]); // t^2 + 2, 2-divisible
        for i in 0..1000u64 {
            let a = base.monic_from_index(2, i % 625);
            let b = base.monic_from_index(1, (i * 7 + 3) % 25);
            let sa = residue_symbol(&om, &p, &a).unwrap();
            let sb = residue_symbol(&om, &p, &b).unwrap();
            let sab = residue_symbol(&om, &p, &base.poly_mul(&a, &b)).unwrap();
            assert_eq!(sab, sa.mul(&sb));
            if !sa.is_zero() {
                let cube = sa.mul(&sa).mul(&sa);
                assert_eq!(cube, CycNumber::one(3), "nonzero symbols are cube roots of 1");
            }
        }
    }

    #[test]
    fn enumeration_counts_match_published_rows() {
        let base7 = FieldCtx::base(7);
        let om7 = omega(3, 7);
        let avoid = vec![
            Place::Finite(base7.poly_t()),
            Place::Finite(base7.poly_from_u64(&[6, 1])),
            Place::Infinity,
        ];
        assert_eq!(enumerate_characters(&om7, 1, &avoid).len(), 5);
        assert_eq!(enumerate_characters(&om7, 2, &avoid).len(), 41);
        assert_eq!(enumerate_characters(&om7, 3, &avoid).len(), 362);

        let om5 = omega(3, 5);
        assert_eq!(enumerate_characters(&om5, 1, &[]).len(), 0);
        assert_eq!(enumerate_characters(&om5, 2, &[]).len(), 10);
        assert_eq!(enumerate_characters(&om5, 4, &[]).len(), 240);
    }

    #[test]
    fn parity_examples() {
        // non-Kummer characters are even
        let om5 = omega(3, 5);
        for chi in enumerate_characters(&om5, 2, &[]) {
            assert_eq!(chi.delta(), 0);
        }
        // Kummer: F = t^2+1 over F_7 with e = 1 is odd (3 does not divide 2)
        let om7 = omega(3, 7);
        let base = om7.base().clone();
        let chi =
            OrderLCharacter::new(om7.clone(), vec![(base.poly_from_u64(&[1, 0, 1]), 1)])
                .unwrap();
        assert_eq!(chi.delta(), 1);
        let gen_val = chi
            .exponent_of_poly(&FieldPoly(vec![base.el_from_u64(3)]))
            .unwrap();
        assert_ne!(gen_val, 0, "odd characters are nontrivial on constants");
    }

    #[test]
    fn parity_matches_constant_restriction() {
        for (ell, p) in [(3u32, 7u64), (3, 13), (5, 11)] {
            let om = omega(ell, p);
            let base = om.base().clone();
            let g = FieldPoly(vec![base.generator().clone()]);
            for d in 1..=2usize {
                for chi in enumerate_characters(&om, d, &[]) {
                    let v = chi.exponent_of_poly(&g).unwrap();
                    assert_eq!(chi.delta() == 0, v == 0, "delta vs constants");
                }
            }
        }
    }

    #[test]
    fn enumeration_distinct_extensions() {
        // no two enumerated characters generate the same cyclic extension:
        // compare value vectors of all powers on monics of degree <= 2
        let om = omega(3, 7);
        let base = om.base().clone();
        let chars = enumerate_characters(&om, 2, &[]);
        let mut sigs: Vec<Vec<Vec<Option<u32>>>> = Vec::new();
        for chi in &chars {
            let mut family = Vec::new();
            for k in 1..3u32 {
                let pow = chi.power(k);
                let mut v = Vec::new();
                for d in 1..=2usize {
                    for f in base.monics(d) {
                        v.push(pow.exponent_of_poly(&f));
                    }
                }
                family.push(v);
            }
            sigs.push(family);
        }
        for i in 0..sigs.len() {
            for j in (i + 1)..sigs.len() {
                for a in &sigs[i] {
                    for b in &sigs[j] {
                        assert_ne!(a, b, "characters {i} and {j} share an extension");
                    }
                }
            }
        }
    }

    #[test]
    fn characters_per_conductor_count() {
        let om = omega(5, 11);
        let chars = enumerate_characters(&om, 2, &[]);
        let mut by_conductor: HashMap<Vec<FieldElement>, (usize, usize)> = HashMap::new();
        for chi in &chars {
            let e = by_conductor
                .entry(chi.conductor().0.clone())
                .or_insert((0, chi.factors().len()));
            e.0 += 1;
        }
        for (_f, (count, k)) in by_conductor {
            assert_eq!(count, 4usize.pow(k as u32 - 1), "(ell-1)^(k-1) per conductor");
        }
    }

    #[test]
    fn symbol_table_agrees_with_direct_symbols() {
        let om = omega(3, 5);
        let base = om.base().clone();
        let p = base.poly_from_u64(&[2, 0, 1]);
        let orbit = factor_over_extension(om.base(), om.ext(), &p).unwrap();
        let tab = SymbolTable::build(&om, &orbit[0]);
        for d in 1..=3usize {
            for f in base.monics(d) {
                assert_eq!(
                    tab.exponent(&om, &f),
                    residue_symbol_exponent(&om, &orbit[0], &f),
                );
            }
        }
    }

    #[test]
    fn gauss_sign_unitarity_and_conjugation() {
        for (ell, p) in [(3u32, 7u64), (3, 5)] {
            let om = omega(ell, p);
            for d in 1..=2usize {
                for chi in enumerate_characters(&om, d, &[]) {
                    let w = gauss_sign(&chi);
                    assert!((w.norm() - 1.0).abs() < 1e-9, "|omega| = 1");
                    let wbar = gauss_sign(&chi.power(ell - 1));
                    assert!((wbar - w.conj()).norm() < 1e-9, "conjugate character");
                }
            }
        }
    }

    #[test]
    fn serialization_shape() {
        let om = omega(3, 5);
        let chi = &enumerate_characters(&om, 2, &[])[0];
        let s = chi.serialize();
        assert!(s.starts_with("3;5;"));
        assert!(s.ends_with(";0"));
    }
}
