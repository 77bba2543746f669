//! Exact arithmetic in real quadratic fields `Q(sqrt d)` with a float fallback.
//!
//! Angles of the reference ellipsoids live in `Q(sqrt 2)` and `Q(sqrt 5)`, so
//! floors and ceilings in the iteration formulas can be decided by sign tests
//! instead of floating-point guesses.

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

pub type Rational = Ratio<i128>;

/// `a + b*sqrt(d)` with `d` squarefree, or a rational when `b == 0` (then `d == 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    a: Rational,
    b: Rational,
    d: u32,
}

fn squarefree_split(d: u32) -> (i128, u32) {
    let mut out = 1i128;
    let mut rest = d;
    let mut f = 2u32;
    while f * f <= rest {
        while rest % (f * f) == 0 {
            rest /= f * f;
            out *= f as i128;
        }
        f += 1;
    }
    (out, rest)
}

fn cmul(x: &Rational, y: &Rational) -> Option<Rational> {
    x.checked_mul(y)
}

impl Surd {
    pub fn rational(q: Rational) -> Self {
        Surd { a: q, b: Rational::zero(), d: 0 }
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(Rational::from_integer(n as i128))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Self::rational(Rational::new(p as i128, q as i128))
    }

    /// `a + b*sqrt(d)`; square factors of `d` are pulled out.
    pub fn new(a: Rational, b: Rational, d: u32) -> Self {
        if b.is_zero() || d == 0 {
            return Self::rational(a);
        }
        let (s, core) = squarefree_split(d);
        let b = b * Rational::from_integer(s);
        if core == 1 {
            return Self::rational(a + b);
        }
        Surd { a, b, d: core }
    }

    pub fn sqrt(d: u32) -> Self {
        Self::new(Rational::zero(), Rational::one(), d)
    }

    /// The golden ratio `(1 + sqrt 5) / 2`.
    pub fn phi() -> Self {
        Self::new(Rational::new(1, 2), Rational::new(1, 2), 5)
    }

    pub fn rational_part(&self) -> Rational {
        self.a
    }

    pub fn surd_part(&self) -> Rational {
        self.b
    }

    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.b.is_zero() {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        if self.b.is_zero() {
            return a;
        }
        a + self.b.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt()
    }

    fn common_radicand(&self, o: &Surd) -> Option<u32> {
        match (self.d, o.d) {
            (0, d) | (d, 0) => Some(d),
            (x, y) if x == y => Some(x),
            _ => None,
        }
    }

    pub fn checked_add(&self, o: &Surd) -> Option<Surd> {
        let d = self.common_radicand(o)?;
        Some(Surd::new(self.a.checked_add(&o.a)?, self.b.checked_add(&o.b)?, d))
    }

    pub fn checked_sub(&self, o: &Surd) -> Option<Surd> {
        let d = self.common_radicand(o)?;
        Some(Surd::new(self.a.checked_sub(&o.a)?, self.b.checked_sub(&o.b)?, d))
    }

    pub fn checked_mul(&self, o: &Surd) -> Option<Surd> {
        let d = self.common_radicand(o)?;
        let dd = Rational::from_integer(d as i128);
        let bb = cmul(&cmul(&self.b, &o.b)?, &dd)?;
        let a = cmul(&self.a, &o.a)?.checked_add(&bb)?;
        let b = cmul(&self.a, &o.b)?.checked_add(&cmul(&self.b, &o.a)?)?;
        Some(Surd::new(a, b, d))
    }

    pub fn checked_recip(&self) -> Option<Surd> {
        if self.is_zero() {
            return None;
        }
        if self.b.is_zero() {
            return Some(Surd::rational(self.a.recip()));
        }
        let dd = Rational::from_integer(self.d as i128);
        let norm = cmul(&self.a, &self.a)?.checked_sub(&cmul(&cmul(&self.b, &self.b)?, &dd)?)?;
        Some(Surd::new(self.a / norm, -self.b / norm, self.d))
    }

    pub fn checked_div(&self, o: &Surd) -> Option<Surd> {
        self.checked_mul(&o.checked_recip()?)
    }

    pub fn neg(&self) -> Surd {
        Surd { a: -self.a, b: -self.b, d: self.d }
    }

    /// Exact sign, decided by comparing `a^2` with `b^2 d` when the parts disagree.
    pub fn signum(&self) -> Option<i32> {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 {
            return Some(sa);
        }
        if sa == 0 || sa == sb {
            return Some(sb);
        }
        let dd = Rational::from_integer(self.d as i128);
        let a2 = cmul(&self.a, &self.a)?;
        let b2d = cmul(&cmul(&self.b, &self.b)?, &dd)?;
        Some(if a2 > b2d { sa } else { sb })
    }

    pub fn checked_cmp(&self, o: &Surd) -> Option<Ordering> {
        let s = self.checked_sub(o)?.signum()?;
        Some(s.cmp(&0))
    }

    pub fn floor(&self) -> Option<i128> {
        if let Some(q) = self.as_rational() {
            return Some(q.floor().to_integer());
        }
        let mut n = self.to_f64().floor() as i128;
        loop {
            let below = Surd::rational(Rational::from_integer(n));
            if self.checked_cmp(&below)? == Ordering::Less {
                n -= 1;
                continue;
            }
            let above = Surd::rational(Rational::from_integer(n + 1));
            if self.checked_cmp(&above)? != Ordering::Less {
                n += 1;
                continue;
            }
            return Some(n);
        }
    }

    pub fn ceil(&self) -> Option<i128> {
        Some(-self.neg().floor()?)
    }
}

fn sign_of(q: &Rational) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            write!(f, "{}*sqrt({})", self.b, self.d)
        } else {
            let sign = if self.b.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}*sqrt({})", self.a, sign, self.b.abs(), self.d)
        }
    }
}

/// A real number that is exact when it can be, and a plain `f64` otherwise.
#[derive(Clone, Copy, Debug)]
pub enum Real {
    Exact(Surd),
    Float(f64),
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_real(other) == Some(Ordering::Equal)
    }
}

impl Real {
    pub fn int(n: i64) -> Self {
        Real::Exact(Surd::integer(n))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Real::Exact(Surd::ratio(p, q))
    }

    pub fn zero() -> Self {
        Real::int(0)
    }

    /// Dyadic floats such as 0.125 become exact rationals; everything else stays a float.
    pub fn from_f64(x: f64) -> Self {
        let scale = (1u64 << 30) as f64;
        let s = x * scale;
        if x.is_finite() && s.fract() == 0.0 && s.abs() < 1e30 {
            Real::Exact(Surd::rational(Rational::new(s as i128, 1i128 << 30)))
        } else {
            Real::Float(x)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(s) => s.to_f64(),
            Real::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn exact(&self) -> Option<&Surd> {
        match self {
            Real::Exact(s) => Some(s),
            Real::Float(_) => None,
        }
    }

    /// `Some(q)` when exactly rational, `None` when exactly irrational or a float.
    pub fn as_rational(&self) -> Option<Rational> {
        self.exact().and_then(|s| s.as_rational())
    }

    /// `Some(true)` for exact irrationals, `Some(false)` for exact rationals.
    pub fn is_irrational(&self) -> Option<bool> {
        self.exact().map(|s| s.as_rational().is_none())
    }

    fn lift(
        &self,
        o: &Real,
        exact: impl Fn(&Surd, &Surd) -> Option<Surd>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Real {
        if let (Real::Exact(a), Real::Exact(b)) = (self, o) {
            if let Some(r) = exact(a, b) {
                return Real::Exact(r);
            }
        }
        Real::Float(float(self.to_f64(), o.to_f64()))
    }

    pub fn add(&self, o: &Real) -> Real {
        self.lift(o, |a, b| a.checked_add(b), |x, y| x + y)
    }

    pub fn sub(&self, o: &Real) -> Real {
        self.lift(o, |a, b| a.checked_sub(b), |x, y| x - y)
    }

    pub fn mul(&self, o: &Real) -> Real {
        self.lift(o, |a, b| a.checked_mul(b), |x, y| x * y)
    }

    pub fn div(&self, o: &Real) -> Real {
        self.lift(o, |a, b| a.checked_div(b), |x, y| x / y)
    }

    pub fn scale(&self, k: i64) -> Real {
        self.mul(&Real::int(k))
    }

    pub fn neg(&self) -> Real {
        match self {
            Real::Exact(s) => Real::Exact(s.neg()),
            Real::Float(x) => Real::Float(-x),
        }
    }

    pub fn abs(&self) -> Real {
        if self.signum() < 0 {
            self.neg()
        } else {
            *self
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Real::Exact(s) => s.signum().unwrap_or_else(|| fsign(s.to_f64())),
            Real::Float(x) => fsign(*x),
        }
    }

    /// Exact comparison when both sides share a field, float comparison otherwise.
    pub fn cmp_real(&self, o: &Real) -> Option<Ordering> {
        if let (Real::Exact(a), Real::Exact(b)) = (self, o) {
            if let Some(c) = a.checked_cmp(b) {
                return Some(c);
            }
        }
        self.to_f64().partial_cmp(&o.to_f64())
    }

    pub fn lt(&self, o: &Real) -> bool {
        self.cmp_real(o) == Some(Ordering::Less)
    }

    /// Floor; floats within `guard` of an integer return `None`.
    pub fn floor_guarded(&self, guard: f64) -> Option<i64> {
        if let Real::Exact(s) = self {
            if let Some(n) = s.floor() {
                return i64::try_from(n).ok();
            }
        }
        let x = self.to_f64();
        if (x - x.round()).abs() < guard {
            return None;
        }
        Some(x.floor() as i64)
    }

    pub fn ceil_guarded(&self, guard: f64) -> Option<i64> {
        self.neg().floor_guarded(guard).map(|n| -n)
    }

    /// Fractional part in `[0, 1)`; exact when possible.
    pub fn fract(&self) -> Real {
        match self.floor_guarded(0.0) {
            Some(n) => self.sub(&Real::int(n)),
            None => Real::Float(0.0),
        }
    }

    /// Nearest integer when the value is an exact integer or a float within `tol` of one.
    pub fn snap_integer(&self, tol: f64) -> Option<i64> {
        if let Some(q) = self.as_rational() {
            return if q.is_integer() { i64::try_from(q.to_integer()).ok() } else { None };
        }
        if self.is_irrational() == Some(true) {
            return None;
        }
        let x = self.to_f64();
        if (x - x.round()).abs() <= tol {
            Some(x.round() as i64)
        } else {
            None
        }
    }

    /// Render as a string that [`parse_real`] reads back.
    pub fn to_token(&self) -> String {
        match self {
            Real::Exact(s) => s.to_string(),
            Real::Float(x) => format!("{:.17e}", x),
        }
    }
}

/// Whether two angles in turns agree modulo 1; exact when both are exact.
pub fn same_turns(a: &Real, b: &Real) -> bool {
    let d = a.sub(b).fract();
    if d.is_exact() {
        return d.signum() == 0;
    }
    let x = d.to_f64();
    x.min(1.0 - x) < 1e-9
}

fn fsign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(s) => write!(f, "{}", s),
            Real::Float(x) => write!(f, "{}", x),
        }
    }
}

impl From<Surd> for Real {
    fn from(s: Surd) -> Self {
        Real::Exact(s)
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().ok()?;
        let q: i128 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    s.parse::<i128>().ok().map(Rational::from_integer)
}

fn parse_atom(s: &str) -> Option<Real> {
    let s = s.trim();
    match s {
        "phi" => return Some(Real::Exact(Surd::phi())),
        "phi^2" => return Some(Real::Exact(Surd::phi().checked_mul(&Surd::phi())?)),
        _ => {}
    }
    if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let d: u32 = inner.trim().parse().ok()?;
        return Some(Real::Exact(Surd::sqrt(d)));
    }
    if let Some(q) = parse_rational(s) {
        return Some(Real::Exact(Surd::rational(q)));
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Real::from_f64)
}

/// Parse `phi`, `phi^2`, `sqrt(d)`, `p/q`, decimals, and `a+b*sqrt(d)` forms.
pub fn parse_real(s: &str) -> Option<Real> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    // split on a top-level + or - that is not the leading sign or an exponent sign
    let bytes = s.as_bytes();
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E' | '(') {
            let lhs = parse_real(&s[..i])?;
            let rhs = parse_term(&s[i + 1..])?;
            return Some(if c == '+' { lhs.add(&rhs) } else { lhs.sub(&rhs) });
        }
    }
    parse_term(s)
}

fn parse_term(s: &str) -> Option<Real> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('-') {
        return parse_term(rest).map(|r| r.neg());
    }
    let mut acc: Option<Real> = None;
    for factor in s.split('*') {
        let v = parse_atom(factor)?;
        acc = Some(match acc {
            None => v,
            Some(a) => a.mul(&v),
        });
    }
    acc
}
