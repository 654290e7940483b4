//! Local data of elliptic curves y^2 = x^3 + a(t) x^2 + b(t) x + c(t) over
//! F_p(t): reduction types at every place including infinity, the conductor
//! divisor, trace coefficients a_P and their multiplicative extension a_f,
//! and constant curves over F_p.

pub mod pointcount;

use crate::galois::{place_order_key, FieldCtx, FieldPoly, MonicSieve, Place};
use crate::{Error, Result};
use pointcount::{trace_bsgs, trace_direct_residue, trace_generic, Elt, FqTables};
use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::sync::Arc;

/// Reduction type at a place.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ReductionKind {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

impl ReductionKind {
    pub fn conductor_exponent(self) -> u32 {
        match self {
            ReductionKind::Good => 0,
            ReductionKind::SplitMultiplicative | ReductionKind::NonsplitMultiplicative => 1,
            ReductionKind::Additive => 2,
        }
    }
}

/// Reduction data at one place: the kind and the trace a_P
/// (+1 / -1 / 0 at split / non-split / additive places).
#[derive(Clone, Debug)]
pub struct ReductionData {
    pub place: Place,
    pub kind: ReductionKind,
    pub a_p: i64,
}

/// An elliptic curve y^2 = x^3 + a(t) x^2 + b(t) x + c(t) over F_p(t),
/// p >= 5, with its per-place reduction data and conductor divisor.
pub struct CurveOverFqt {
    base: Arc<FieldCtx>,
    a: FieldPoly,
    b: FieldPoly,
    c: FieldPoly,
    disc: FieldPoly,
    /// reduction data at every prime dividing the discriminant
    disc_places: Vec<ReductionData>,
    /// reduction at infinity, via the s = 1/t model
    infinity: ReductionData,
    /// the s = 1/t model (A(s), B(s), C(s)), for fiber work at infinity
    infinity_model: (FieldPoly, FieldPoly, FieldPoly),
}

impl CurveOverFqt {
    pub fn new(base: Arc<FieldCtx>, a: FieldPoly, b: FieldPoly, c: FieldPoly) -> Result<Self> {
        if base.p() < 5 {
            return Err(Error::Rejected(format!(
                "characteristic {} < 5 not supported for curves",
                base.p()
            )));
        }
        if base.m() != 1 {
            return Err(Error::Invalid("curve base field must be prime".into()));
        }
        let disc = cubic_discriminant(&base, &a, &b, &c);
        if disc.is_zero() {
            return Err(Error::Rejected("singular generic fiber (zero discriminant)".into()));
        }
        let mut disc_places = Vec::new();
        for (prime, _) in base.factor(&disc) {
            let rd = reduce_at_finite(&base, &a, &b, &c, &prime)?;
            disc_places.push(rd);
        }
        disc_places.sort_by(|x, y| {
            let (Place::Finite(px), Place::Finite(py)) = (&x.place, &y.place) else {
                unreachable!()
            };
            place_order_key(px).cmp(&place_order_key(py))
        });
        let infinity_model = infinity_model(&base, &a, &b, &c);
        let mut inf_rd = reduce_at_finite(
            &base,
            &infinity_model.0,
            &infinity_model.1,
            &infinity_model.2,
            &base.poly_t(),
        )?;
        inf_rd.place = Place::Infinity;
        Ok(CurveOverFqt {
            base,
            a,
            b,
            c,
            disc,
            disc_places,
            infinity: inf_rd,
            infinity_model,
        })
    }

    /// The Legendre curve y^2 = x(x-1)(x-t).
    pub fn legendre(base: Arc<FieldCtx>) -> Result<Self> {
        let a = {
            let one_plus_t = base.poly_from_i64(&[1, 1]);
            base.poly_neg(&one_plus_t)
        };
        let b = base.poly_t();
        let c = base.poly_zero();
        Self::new(base, a, b, c)
    }

    /// The curve y^2 = (x-1)(x-2t^2-1)(x-t^2), good at infinity.
    pub fn e2(base: Arc<FieldCtx>) -> Result<Self> {
        // roots 1, 2t^2+1, t^2
        let r1 = base.poly_one();
        let r2 = base.poly_from_u64(&[1, 0, 2]);
        let r3 = base.poly_from_u64(&[0, 0, 1]);
        let a = base.poly_neg(&base.poly_add(&base.poly_add(&r1, &r2), &r3));
        let b = base.poly_add(
            &base.poly_add(&base.poly_mul(&r1, &r2), &base.poly_mul(&r1, &r3)),
            &base.poly_mul(&r2, &r3),
        );
        let c = base.poly_neg(&base.poly_mul(&base.poly_mul(&r1, &r2), &r3));
        Self::new(base, a, b, c)
    }

    pub fn base(&self) -> &Arc<FieldCtx> {
        &self.base
    }

    pub fn p(&self) -> u64 {
        self.base.p()
    }

    pub fn coefficients(&self) -> (&FieldPoly, &FieldPoly, &FieldPoly) {
        (&self.a, &self.b, &self.c)
    }

    pub fn discriminant(&self) -> &FieldPoly {
        &self.disc
    }

    /// Reduction data at any place.
    pub fn reduce_at_place(&self, place: &Place) -> Result<ReductionData> {
        match place {
            Place::Infinity => Ok(self.infinity.clone()),
            Place::Finite(prime) => {
                for rd in &self.disc_places {
                    if rd.place == *place {
                        return Ok(rd.clone());
                    }
                }
                // good reduction: count points in the residue field
                let a_p = trace_at_good_prime(&self.base, &self.a, &self.b, &self.c, prime);
                Ok(ReductionData { place: place.clone(), kind: ReductionKind::Good, a_p })
            }
        }
    }

    /// Bad places with conductor exponents: finite part plus the infinity
    /// exponent. The finite list is ordered by (degree, lex).
    pub fn conductor(&self) -> (Vec<(FieldPoly, u32)>, u32) {
        let finite: Vec<(FieldPoly, u32)> = self
            .disc_places
            .iter()
            .filter(|rd| rd.kind != ReductionKind::Good)
            .map(|rd| {
                let Place::Finite(p) = &rd.place else { unreachable!() };
                (p.clone(), rd.kind.conductor_exponent())
            })
            .collect();
        (finite, self.infinity.kind.conductor_exponent())
    }

    /// Total conductor degree (infinity counts with its exponent).
    pub fn conductor_degree(&self) -> usize {
        let (fin, inf) = self.conductor();
        fin.iter().map(|(p, e)| p.degree() * *e as usize).sum::<usize>() + inf as usize
    }

    /// Finite bad places as a Place list (for character enumeration).
    pub fn bad_finite_places(&self) -> Vec<Place> {
        self.disc_places
            .iter()
            .filter(|rd| rd.kind != ReductionKind::Good)
            .map(|rd| rd.place.clone())
            .collect()
    }

    pub fn infinity_reduction(&self) -> &ReductionData {
        &self.infinity
    }

    /// The rewritten model at infinity (coordinates s = 1/t).
    pub fn infinity_model(&self) -> (&FieldPoly, &FieldPoly, &FieldPoly) {
        (&self.infinity_model.0, &self.infinity_model.1, &self.infinity_model.2)
    }

    /// Map from bad finite prime index (by degree, monic index) to a_P.
    fn bad_ap_table(&self) -> HashMap<(usize, u64), i64> {
        self.disc_places
            .iter()
            .map(|rd| {
                let Place::Finite(p) = &rd.place else { unreachable!() };
                ((p.degree(), self.base.monic_index(p)), rd.a_p)
            })
            .collect()
    }

    /// Text key describing the curve, used in the cache header.
    pub fn cache_key(&self) -> String {
        format!(
            "a:{}|b:{}|c:{}",
            crate::characters::poly_coeff_string(&self.base, &self.a),
            crate::characters::poly_coeff_string(&self.base, &self.b),
            crate::characters::poly_coeff_string(&self.base, &self.c),
        )
    }
}

/// Discriminant of the cubic x^3 + a x^2 + b x + c (the curve discriminant
/// up to the unit 16).
fn cubic_discriminant(
    ctx: &FieldCtx,
    a: &FieldPoly,
    b: &FieldPoly,
    c: &FieldPoly,
) -> FieldPoly {
    // 18abc - 4a^3 c + a^2 b^2 - 4 b^3 - 27 c^2
    let t18 = ctx.poly_scale(
        &ctx.poly_mul(&ctx.poly_mul(a, b), c),
        &ctx.el_from_u64(18 % ctx.p()),
    );
    let a3c = ctx.poly_mul(&ctx.poly_mul(&ctx.poly_mul(a, a), a), c);
    let t4a3c = ctx.poly_scale(&a3c, &ctx.el_from_u64(4));
    let a2b2 = ctx.poly_mul(&ctx.poly_mul(a, a), &ctx.poly_mul(b, b));
    let b3 = ctx.poly_mul(&ctx.poly_mul(b, b), b);
    let t4b3 = ctx.poly_scale(&b3, &ctx.el_from_u64(4));
    let c2 = ctx.poly_mul(c, c);
    let t27c2 = ctx.poly_scale(&c2, &ctx.el_from_u64(27 % ctx.p()));
    let mut acc = ctx.poly_sub(&t18, &t4a3c);
    acc = ctx.poly_add(&acc, &a2b2);
    acc = ctx.poly_sub(&acc, &t4b3);
    ctx.poly_sub(&acc, &t27c2)
}

/// Classify reduction at a finite prime, after local minimalization of the
/// depressed model (valid in characteristic >= 5).
fn reduce_at_finite(
    ctx: &FieldCtx,
    a: &FieldPoly,
    b: &FieldPoly,
    c: &FieldPoly,
    prime: &FieldPoly,
) -> Result<ReductionData> {
    let p = ctx.p();
    // depress: x -> x - a/3 gives y^2 = x^3 + A x + B
    let inv3 = ctx.el_from_u64(mod_inverse(3 % p, p));
    let inv27 = ctx.el_mul(&ctx.el_mul(&inv3, &inv3), &inv3);
    let a2 = ctx.poly_mul(a, a);
    let cap_a = ctx.poly_sub(b, &ctx.poly_scale(&a2, &inv3));
    let a3 = ctx.poly_mul(&a2, a);
    let two27 = ctx.el_mul(&ctx.el_from_u64(2), &inv27);
    let ab3 = ctx.poly_scale(&ctx.poly_mul(a, b), &inv3);
    let cap_b = ctx.poly_add(&ctx.poly_sub(&ctx.poly_scale(&a3, &two27), &ab3), c);
    // minimalize at the prime
    let p4 = ctx.poly_pow(prime, 4);
    let p6 = ctx.poly_pow(prime, 6);
    let mut ca = cap_a;
    let mut cb = cap_b;
    loop {
        let (qa, ra) = if ca.is_zero() {
            (ctx.poly_zero(), ctx.poly_zero())
        } else {
            ctx.poly_divmod(&ca, &p4)
        };
        let (qb, rb) = if cb.is_zero() {
            (ctx.poly_zero(), ctx.poly_zero())
        } else {
            ctx.poly_divmod(&cb, &p6)
        };
        if ra.is_zero() && rb.is_zero() && !(ca.is_zero() && cb.is_zero()) {
            ca = qa;
            cb = qb;
        } else {
            break;
        }
    }
    // Delta = -(4A^3 + 27B^2) up to a unit
    let four_a3 = ctx.poly_scale(
        &ctx.poly_mul(&ctx.poly_mul(&ca, &ca), &ca),
        &ctx.el_from_u64(4),
    );
    let t27b2 = ctx.poly_scale(&ctx.poly_mul(&cb, &cb), &ctx.el_from_u64(27 % p));
    let delta = ctx.poly_add(&four_a3, &t27b2);
    let v_delta = valuation(ctx, &delta, prime);
    if v_delta == 0 {
        let a_p = trace_at_good_prime_depressed(ctx, &ca, &cb, prime);
        return Ok(ReductionData {
            place: Place::Finite(prime.clone()),
            kind: ReductionKind::Good,
            a_p,
        });
    }
    let v_a = valuation(ctx, &ca, prime);
    if v_a == 0 {
        // multiplicative: node at the double root x0 of x^3 + A x + B mod P;
        // the third root is -2 x0, so the tangent-cone discriminant is 3 x0
        let abar = ctx.poly_rem(&ca, prime);
        let bbar = ctx.poly_rem(&cb, prime);
        // double root of the cubic: root of gcd(cubic, derivative) over the
        // residue field. derivative = 3x^2 + A; gcd is linear here.
        // 3 x0^2 + A = 0 and x0^3 + A x0 + B = 0 => x0 = -3B/(2A)
        let q_res: u128 = (p as u128).pow(prime.degree() as u32);
        let rmul = |x: &FieldPoly, y: &FieldPoly| ctx.poly_rem(&ctx.poly_mul(x, y), prime);
        let rpow = |x: &FieldPoly, e: u128| ctx.poly_powmod(x, e, prime);
        let two_a = ctx.poly_scale(&abar, &ctx.el_from_u64(2));
        let inv_2a = rpow(&two_a, q_res - 2);
        let m3b = ctx.poly_scale(&bbar, &ctx.el_from_u64(p - 3 % p));
        let x0 = rmul(&m3b, &inv_2a);
        let disc_t = ctx.poly_rem(&ctx.poly_scale(&x0, &ctx.el_from_u64(3 % p)), prime);
        debug_assert!(!disc_t.is_zero());
        let chi = rpow(&disc_t, (q_res - 1) / 2);
        let split = ctx.poly_is_one(&chi);
        return Ok(ReductionData {
            place: Place::Finite(prime.clone()),
            kind: if split {
                ReductionKind::SplitMultiplicative
            } else {
                ReductionKind::NonsplitMultiplicative
            },
            a_p: if split { 1 } else { -1 },
        });
    }
    Ok(ReductionData {
        place: Place::Finite(prime.clone()),
        kind: ReductionKind::Additive,
        a_p: 0,
    })
}

fn valuation(ctx: &FieldCtx, f: &FieldPoly, prime: &FieldPoly) -> u32 {
    if f.is_zero() {
        return u32::MAX;
    }
    let mut v = 0;
    let mut cur = f.clone();
    loop {
        let (q, r) = ctx.poly_divmod(&cur, prime);
        if r.is_zero() {
            v += 1;
            cur = q;
        } else {
            return v;
        }
    }
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p prime
    let mut r = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    r
}

/// The model in the coordinate s = 1/t with (x, y) rescaled by s^{2m}, s^{3m}
/// for the least m clearing denominators.
fn infinity_model(
    ctx: &FieldCtx,
    a: &FieldPoly,
    b: &FieldPoly,
    c: &FieldPoly,
) -> (FieldPoly, FieldPoly, FieldPoly) {
    let da = if a.is_zero() { 0 } else { a.degree() };
    let db = if b.is_zero() { 0 } else { b.degree() };
    let dc = if c.is_zero() { 0 } else { c.degree() };
    let m = [(da + 1) / 2, (db + 3) / 4, (dc + 5) / 6].into_iter().max().unwrap();
    let lift = |f: &FieldPoly, weight: usize| -> FieldPoly {
        // s^{weight*m - deg f} * reverse(f)
        if f.is_zero() {
            return ctx.poly_zero();
        }
        let d = f.degree();
        let shift = weight * m - d;
        let mut v = vec![ctx.el_zero(); shift];
        for coef in f.0.iter().rev() {
            v.push(coef.clone());
        }
        ctx.poly_add(&FieldPoly(v), &ctx.poly_zero())
    };
    (lift(a, 2), lift(b, 4), lift(c, 6))
}

/// a_P at a good prime by point counting (dispatching on field size).
fn trace_at_good_prime(
    base: &FieldCtx,
    a: &FieldPoly,
    b: &FieldPoly,
    c: &FieldPoly,
    prime: &FieldPoly,
) -> i64 {
    let ra = base.poly_rem(a, prime);
    let rb = base.poly_rem(b, prime);
    let rc = base.poly_rem(c, prime);
    let d = prime.degree() as u32;
    let q = (base.p() as u128).pow(d);
    if q <= 4096 {
        trace_direct_residue(base, prime, &ra, &rb, &rc)
    } else {
        trace_generic(base, prime, &ra, &rb, &rc)
    }
}

fn trace_at_good_prime_depressed(
    base: &FieldCtx,
    ca: &FieldPoly,
    cb: &FieldPoly,
    prime: &FieldPoly,
) -> i64 {
    trace_at_good_prime(base, &base.poly_zero(), ca, cb, prime)
}

// ---------------- the a_f table ----------------

/// Multiplicative table of trace coefficients a_f for all monic f up to a
/// degree bound, with a_1 = 1, a_{fg} = a_f a_g on coprime arguments, and
/// prime powers through the standard recurrences.
pub struct AfTable {
    p: u64,
    max_deg: usize,
    /// one vector per degree, indexed by monic_index
    values: Vec<Vec<i64>>,
    header: String,
}

impl AfTable {
    /// Build the table for a curve, counting points layer by layer.
    pub fn build(curve: &CurveOverFqt, sieve: &MonicSieve, max_deg: usize) -> Self {
        assert!(sieve.max_deg() >= max_deg);
        let base = curve.base().clone();
        let bad = curve.bad_ap_table();
        let mut prime_ap: Vec<HashMap<u64, i64>> = Vec::with_capacity(max_deg + 1);
        prime_ap.push(HashMap::new());
        for d in 1..=max_deg {
            prime_ap.push(trace_layer(curve, sieve, d, &bad));
        }
        Self::assemble(
            &base,
            sieve,
            max_deg,
            &prime_ap,
            &bad,
            curve.cache_key(),
        )
    }

    /// Build the table for a constant curve: a_P depends only on deg P via
    /// the trace power sums.
    pub fn build_constant(e0: &ConstantCurve, sieve: &MonicSieve, max_deg: usize) -> Self {
        let base = e0.base().clone();
        let traces = e0.trace_power_sums(max_deg);
        let mut prime_ap: Vec<HashMap<u64, i64>> = Vec::with_capacity(max_deg + 1);
        prime_ap.push(HashMap::new());
        for d in 1..=max_deg {
            let mut layer = HashMap::new();
            for &pid in sieve.prime_ids(d) {
                let (_, idx) = sieve.deg_index(pid);
                layer.insert(idx, traces[d]);
            }
            prime_ap.push(layer);
        }
        let bad = HashMap::new();
        Self::assemble(&base, sieve, max_deg, &prime_ap, &bad, e0.cache_key())
    }

    fn assemble(
        base: &FieldCtx,
        sieve: &MonicSieve,
        max_deg: usize,
        prime_ap: &[HashMap<u64, i64>],
        bad: &HashMap<(usize, u64), i64>,
        curve_key: String,
    ) -> Self {
        let p = base.p();
        let mut values: Vec<Vec<i64>> = Vec::with_capacity(max_deg + 1);
        values.push(vec![1i64]);
        // per-prime powers a_{P^e}: recurrence differs at good and bad P
        let ppow = |d: usize, idx: u64, e: u8| -> i64 {
            let ap = prime_ap[d][&idx];
            let good = !bad.contains_key(&(d, idx));
            let qd = (p as i64).pow(d as u32);
            let mut s0: i64 = 1;
            let mut s1 = ap;
            for _ in 1..e {
                let nxt = ap * s1 - if good { qd * s0 } else { 0 };
                s0 = s1;
                s1 = nxt;
            }
            s1
        };
        for d in 1..=max_deg {
            let count = p.pow(d as u32) as usize;
            let mut layer = vec![0i64; count];
            for idx in 0..count as u64 {
                let id = sieve.id(d, idx);
                let (spf, e, pfree) = sieve.decompose(id);
                let (dp, pidx) = sieve.deg_index(spf);
                let head = ppow(dp, pidx, e);
                let (dfree, fidx) = sieve.deg_index(pfree);
                let tail = if pfree == 0 { 1 } else { values[dfree][fidx as usize] };
                layer[idx as usize] = head * tail;
            }
            values.push(layer);
        }
        let header = format!("twistfield-af v1; {}; {}; {}", p, curve_key, max_deg);
        AfTable { p, max_deg, values, header }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn max_deg(&self) -> usize {
        self.max_deg
    }

    pub fn value_by_index(&self, d: usize, idx: u64) -> i64 {
        self.values[d][idx as usize]
    }

    pub fn value(&self, ctx: &FieldCtx, f: &FieldPoly) -> i64 {
        self.values[f.degree()][ctx.monic_index(f) as usize]
    }

    pub fn header(&self) -> &str {
        &self.header
    }

    /// Write the cache file: the versioned header then one line per monic f
    /// in lexicographic order, "f-coefficients,a_f".
    pub fn save(&self, ctx: &FieldCtx, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", self.header)?;
        for d in 0..=self.max_deg {
            for f in ctx.monics(d) {
                let idx = ctx.monic_index(&f);
                let coeffs: Vec<String> = f.0.iter().map(|c| c.0[0].to_string()).collect();
                writeln!(w, "{},{}", coeffs.join(" "), self.values[d][idx as usize])?;
            }
        }
        Ok(())
    }

    /// Load a cache file, validating the header against the expected curve
    /// key and requested degree.
    pub fn load(
        ctx: &FieldCtx,
        path: &std::path::Path,
        curve_key: &str,
        max_deg: usize,
    ) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::CacheMismatch("empty cache file".into()))??;
        let parts: Vec<&str> = header.split(';').map(str::trim).collect();
        if parts.len() != 4 || parts[0] != "twistfield-af v1" {
            return Err(Error::CacheMismatch(format!("bad header: {header}")));
        }
        let p: u64 = parts[1]
            .parse()
            .map_err(|_| Error::CacheMismatch("bad p".into()))?;
        if p != ctx.p() || parts[2] != curve_key {
            return Err(Error::CacheMismatch("cache is for a different curve".into()));
        }
        let cached_deg: usize = parts[3]
            .parse()
            .map_err(|_| Error::CacheMismatch("bad max_deg".into()))?;
        if cached_deg < max_deg {
            return Err(Error::CacheMismatch(format!(
                "cache holds degrees <= {cached_deg}, need {max_deg}"
            )));
        }
        let mut values: Vec<Vec<i64>> = (0..=cached_deg)
            .map(|d| vec![0i64; p.pow(d as u32) as usize])
            .collect();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (coeffs, af) = line
                .rsplit_once(',')
                .ok_or_else(|| Error::CacheMismatch(format!("bad line: {line}")))?;
            let cf: Vec<u64> = coeffs
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| Error::CacheMismatch("bad coeff".into())))
                .collect::<Result<_>>()?;
            let f = ctx.poly_from_u64(&cf);
            let d = f.degree();
            if d > cached_deg {
                return Err(Error::CacheMismatch("degree out of range".into()));
            }
            values[d][ctx.monic_index(&f) as usize] = af
                .trim()
                .parse()
                .map_err(|_| Error::CacheMismatch("bad value".into()))?;
        }
        Ok(AfTable {
            p,
            max_deg: cached_deg,
            values,
            header: format!("twistfield-af v1; {}; {}; {}", p, curve_key, cached_deg),
        })
    }
}

/// a_P for every monic irreducible of one degree, by enumerating Frobenius
/// orbits of the abstract field F_{p^d} when tables pay off.
fn trace_layer(
    curve: &CurveOverFqt,
    sieve: &MonicSieve,
    d: usize,
    bad: &HashMap<(usize, u64), i64>,
) -> HashMap<u64, i64> {
    let base = curve.base();
    let p = base.p();
    let q = (p as u128).pow(d as u32);
    let (a, b, c) = curve.coefficients();
    let mut out = HashMap::new();
    if q <= 4096 || p >= 64 || d as u32 * 7 > 63 || q >= (1 << 31) {
        // per-prime strategies
        for &pid in sieve.prime_ids(d) {
            let (_, idx) = sieve.deg_index(pid);
            if let Some(&ap) = bad.get(&(d, idx)) {
                out.insert(idx, ap);
                continue;
            }
            let prime = base.monic_from_index(d, idx);
            out.insert(idx, trace_at_good_prime(base, a, b, c, &prime));
        }
        return out;
    }
    // shared tables + orbit enumeration
    let ctx = FieldCtx::extension(p, d);
    let tables = FqTables::build(&ctx);
    let eval = |poly: &FieldPoly, theta: Elt| -> Elt {
        let mut acc = tables.zero();
        for cf in poly.0.iter().rev() {
            acc = tables.add(tables.mul(acc, theta), tables.from_const(cf.0[0]));
        }
        acc
    };
    for dense in 0..q as u32 {
        let theta = tables.from_dense(dense);
        // orbit minimality and full degree
        let mut conj = theta;
        let mut is_min = true;
        let mut full_degree = true;
        let mut orbit = [tables.zero(); 16];
        for k in 0..d {
            orbit[k] = conj;
            conj = tables.frobenius(conj);
            if k > 0 && orbit[k].dense == theta.dense {
                full_degree = false;
                break;
            }
            if orbit[k].dense < theta.dense {
                is_min = false;
                break;
            }
        }
        if !(is_min && full_degree) || conj.dense != theta.dense {
            continue;
        }
        // minimal polynomial = prod (t - theta^(p^k)); coefficients in F_p
        let mut min_poly = vec![tables.one()];
        for item in orbit.iter().take(d) {
            let neg_r = tables.neg(*item);
            let mut next = vec![tables.zero(); min_poly.len() + 1];
            for (i, coef) in min_poly.iter().enumerate() {
                next[i + 1] = tables.add(next[i + 1], *coef);
                next[i] = tables.add(next[i], tables.mul(*coef, neg_r));
            }
            min_poly = next;
        }
        let mut idx = 0u64;
        for i in (0..d).rev() {
            let cd = min_poly[i].dense as u64;
            debug_assert!(cd < p, "minimal polynomial has prime-field coefficients");
            idx = idx * p + cd;
        }
        if let Some(&ap) = bad.get(&(d, idx)) {
            out.insert(idx, ap);
            continue;
        }
        let (ea, eb, ec) = (eval(a, theta), eval(b, theta), eval(c, theta));
        out.insert(idx, trace_bsgs(&tables, ea, eb, ec));
    }
    debug_assert_eq!(out.len(), sieve.prime_ids(d).len());
    out
}

// ---------------- constant curves ----------------

/// An elliptic curve over F_p viewed as a constant curve over F_p(t):
/// y^2 = x^3 + a2 x^2 + a4 x + a6 with coefficients in F_p.
#[derive(Clone)]
pub struct ConstantCurve {
    base: Arc<FieldCtx>,
    a2: u64,
    a4: u64,
    a6: u64,
    trace: i64,
}

impl ConstantCurve {
    pub fn new(base: Arc<FieldCtx>, a2: u64, a4: u64, a6: u64) -> Result<Self> {
        if base.p() < 5 || base.m() != 1 {
            return Err(Error::Rejected("constant curves need a prime field, p >= 5".into()));
        }
        let p = base.p();
        let ctx = &base;
        let disc = cubic_discriminant(
            ctx,
            &ctx.poly_from_u64(&[a2]),
            &ctx.poly_from_u64(&[a4]),
            &ctx.poly_from_u64(&[a6]),
        );
        if disc.is_zero() {
            return Err(Error::Rejected("singular constant curve".into()));
        }
        // direct count over F_p
        let mut count: i64 = 1; // point at infinity
        let sq: std::collections::HashSet<u64> = (0..p).map(|y| y * y % p).collect();
        for x in 0..p {
            let g = ((x * x % p * x) % p + a2 * x % p * x % p + a4 * x % p + a6) % p;
            if g == 0 {
                count += 1;
            } else if sq.contains(&g) {
                count += 2;
            }
        }
        let trace = p as i64 + 1 - count;
        Ok(ConstantCurve { base, a2, a4, a6, trace })
    }

    pub fn base(&self) -> &Arc<FieldCtx> {
        &self.base
    }

    pub fn p(&self) -> u64 {
        self.base.p()
    }

    pub fn trace(&self) -> i64 {
        self.trace
    }

    /// Coefficients (a2, a4, a6).
    pub fn coefficients(&self) -> (u64, u64, u64) {
        (self.a2, self.a4, self.a6)
    }

    /// s_k = alpha1^k + alpha2^k for k <= max, with s_0 = 2.
    pub fn trace_power_sums(&self, max: usize) -> Vec<i64> {
        let q = self.p() as i64;
        let mut s = vec![0i64; max + 1];
        s[0] = 2;
        if max >= 1 {
            s[1] = self.trace;
        }
        for k in 2..=max {
            s[k] = self.trace * s[k - 1] - q * s[k - 2];
        }
        s
    }

    /// #E0(F_{q^k}) = q^k + 1 - s_k; k = 1 is verified against the direct
    /// count at construction.
    pub fn count_points(&self, k: usize) -> i64 {
        assert!(k >= 1);
        let s = self.trace_power_sums(k);
        (self.p() as i64).pow(k as u32) + 1 - s[k]
    }

    pub fn cache_key(&self) -> String {
        format!("constant:{},{},{}", self.a2, self.a4, self.a6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> Arc<FieldCtx> {
        Arc::new(FieldCtx::base(5))
    }

    fn f7() -> Arc<FieldCtx> {
        Arc::new(FieldCtx::base(7))
    }

    #[test]
    fn legendre_conductor() {
        for base in [f5(), f7()] {
            let e = CurveOverFqt::legendre(base.clone()).unwrap();
            let (fin, inf) = e.conductor();
            // N = t (t-1) P_inf^2
            assert_eq!(inf, 2, "additive at infinity");
            assert_eq!(fin.len(), 2);
            assert_eq!(fin[0], (base.poly_t(), 1));
            assert_eq!(fin[1], (base.poly_from_i64(&[-1, 1]), 1));
            assert_eq!(e.conductor_degree(), 4);
        }
    }

    #[test]
    fn e2_conductor() {
        for base in [f5(), f7()] {
            let e = CurveOverFqt::e2(base.clone()).unwrap();
            let (fin, inf) = e.conductor();
            // N = t (t-1) (t+1) (t^2+1), good at infinity
            assert_eq!(inf, 0);
            let total: usize = fin.iter().map(|(p, e)| p.degree() * *e as usize).sum();
            assert_eq!(total, 5);
            assert!(fin.iter().all(|(_, e)| *e == 1), "all multiplicative");
            assert_eq!(e.conductor_degree(), 5);
        }
    }

    #[test]
    fn legendre_split_iff_minus_one_square() {
        // at P = t the node has tangent discriminant -1
        for (p, expect_split) in [(5u64, true), (7, false), (13, true), (11, false)] {
            let base = Arc::new(FieldCtx::base(p));
            let e = CurveOverFqt::legendre(base.clone()).unwrap();
            let rd = e.reduce_at_place(&Place::Finite(base.poly_t())).unwrap();
            let expected = if expect_split {
                ReductionKind::SplitMultiplicative
            } else {
                ReductionKind::NonsplitMultiplicative
            };
            assert_eq!(rd.kind, expected, "p = {p}");
            assert_eq!(rd.a_p, if expect_split { 1 } else { -1 });
            // smooth-locus count check: #smooth = q - a_P
            let mut smooth = 0i64;
            let sq: std::collections::HashSet<u64> = (0..p).map(|y| y * y % p).collect();
            for x in 0..p {
                // y^2 = x^2 (x - 1) has the singular point (x, y) = (0, 0)
                let g = x * x % p * ((x + p - 1) % p) % p;
                if x == 0 {
                    continue;
                }
                if g == 0 {
                    smooth += 1;
                } else if sq.contains(&g) {
                    smooth += 2;
                }
            }
            smooth += 1; // point at infinity
            assert_eq!(smooth, p as i64 - rd.a_p, "smooth-locus count at p = {p}");
        }
    }

    #[test]
    fn legendre_good_trace_frozen() {
        // E1 over F_5 at P = t-2: 8 projective points on y^2 = x(x-1)(x-2)
        let base = f5();
        let e = CurveOverFqt::legendre(base.clone()).unwrap();
        let rd = e
            .reduce_at_place(&Place::Finite(base.poly_from_i64(&[-2, 1])))
            .unwrap();
        assert_eq!(rd.kind, ReductionKind::Good);
        assert_eq!(rd.a_p, -2);
    }

    #[test]
    fn hasse_bound_at_good_places() {
        let base = f7();
        let e = CurveOverFqt::e2(base.clone()).unwrap();
        for d in 1..=2usize {
            for prime in base.enumerate_monic_irreducibles(d) {
                let rd = e.reduce_at_place(&Place::Finite(prime)).unwrap();
                if rd.kind == ReductionKind::Good {
                    let bound = 2.0 * (7f64).powf(d as f64 / 2.0);
                    assert!((rd.a_p.abs() as f64) <= bound);
                }
            }
        }
    }

    #[test]
    fn af_table_recurrence_and_multiplicativity() {
        let base = f5();
        let e = CurveOverFqt::legendre(base.clone()).unwrap();
        let sieve = MonicSieve::build(&base, 6);
        let af = AfTable::build(&e, &sieve, 6);
        // a_1 = 1
        assert_eq!(af.value(&base, &base.poly_one()), 1);
        // a_{(t-2)^2} = (-2)^2 - 5 = -1
        let p2 = base.poly_mul(&base.poly_from_i64(&[-2, 1]), &base.poly_from_i64(&[-2, 1]));
        assert_eq!(af.value(&base, &p2), -1);
        // multiplicativity on all coprime pairs of degree <= 3 each
        for i in 0..125u64 {
            let f = base.monic_from_index(3, i);
            for j in 0..25u64 {
                let g = base.monic_from_index(2, j * 5 % 25);
                if base.poly_gcd(&f, &g).degree() == 0 {
                    assert_eq!(
                        af.value(&base, &base.poly_mul(&f, &g)),
                        af.value(&base, &f) * af.value(&base, &g)
                    );
                }
            }
        }
    }

    #[test]
    fn af_agrees_with_point_counts_exhaustively() {
        // the character-sum formula equals q^d + 1 - #E(F_P) for all good
        // P of degree <= 2 over F_5 and F_7
        for base in [f5(), f7()] {
            let e = CurveOverFqt::legendre(base.clone()).unwrap();
            let sieve = MonicSieve::build(&base, 2);
            let af = AfTable::build(&e, &sieve, 2);
            for d in 1..=2usize {
                for prime in base.enumerate_monic_irreducibles(d) {
                    let rd = e.reduce_at_place(&Place::Finite(prime.clone())).unwrap();
                    if rd.kind != ReductionKind::Good {
                        continue;
                    }
                    // direct projective count over the residue field
                    let (a, b, c) = e.coefficients();
                    let direct = trace_direct_residue(
                        &base,
                        &prime,
                        &base.poly_rem(a, &prime),
                        &base.poly_rem(b, &prime),
                        &base.poly_rem(c, &prime),
                    );
                    assert_eq!(af.value(&base, &prime), direct);
                }
            }
        }
    }

    #[test]
    fn af_cache_round_trip() {
        let base = f5();
        let e = CurveOverFqt::e2(base.clone()).unwrap();
        let sieve = MonicSieve::build(&base, 3);
        let af = AfTable::build(&e, &sieve, 3);
        let dir = std::env::temp_dir().join("twistfield-test-cache");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("af-e2-5.txt");
        af.save(&base, &path).unwrap();
        let loaded = AfTable::load(&base, &path, &e.cache_key(), 3).unwrap();
        for d in 0..=3usize {
            for f in base.monics(d) {
                assert_eq!(af.value(&base, &f), loaded.value(&base, &f));
            }
        }
        // version/curve mismatch is an error
        let other = CurveOverFqt::legendre(base.clone()).unwrap();
        assert!(AfTable::load(&base, &path, &other.cache_key(), 3).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn constant_curve_supersingular_over_f5() {
        let e0 = ConstantCurve::new(f5(), 0, 0, 1).unwrap();
        assert_eq!(e0.count_points(1), 6);
        assert_eq!(e0.trace(), 0);
        // #E0(F_25) = 25 + 1 - (a^2 - 2q) = 36
        assert_eq!(e0.count_points(2), 36);
        assert!((e0.trace() * e0.trace()) as u64 <= 4 * 5);
    }

    #[test]
    fn trace_layer_hasse_bound_large_degree() {
        let base = f5();
        let e = CurveOverFqt::legendre(base.clone()).unwrap();
        let sieve = MonicSieve::build(&base, 5);
        let af = AfTable::build(&e, &sieve, 5);
        for &pid in sieve.prime_ids(5) {
            let (_, idx) = sieve.deg_index(pid);
            let ap = af.value_by_index(5, idx);
            assert!((ap * ap) as f64 <= 4.0 * 5f64.powi(5));
        }
    }
}
