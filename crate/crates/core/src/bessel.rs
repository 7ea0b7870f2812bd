//! Bessel functions of the first kind for real order and argument.

use crate::scalar::Real;
use crate::Error;

/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 60.0;

/// Below this argument the ascending series is used, above it the Hankel
/// asymptotic expansion.
const SERIES_LIMIT: f64 = 15.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `1 / Γ(z)`, zero at the poles.
pub(crate) fn recip_gamma<T: Real>(z: T) -> T {
    if z <= T::zero() && z == z.floor() {
        return T::zero();
    }
    if z < T::lit(0.5) {
        // reflection: 1/Γ(z) = sin(πz) Γ(1-z) / π
        return (T::PI() * z).sin() / (T::PI() * recip_gamma(T::one() - z));
    }
    let z = z - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (z + T::from_usize_lossy(i));
    }
    let t = z + T::lit(LANCZOS_G + 0.5);
    let gamma = (T::TAU()).sqrt() * t.powf(z + T::lit(0.5)) * (-t).exp() * acc;
    T::one() / gamma
}

/// Unevaluated sum `hi + lo` carrying about 32 significant digits; the
/// ascending series cancels heavily for moderate arguments.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        Self::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Self::new(-q1)));
        let q2 = r.hi / o.hi;
        Self::renorm(q1, q2)
    }
}

fn series<T: Real>(nu: T, x: T) -> T {
    let nu = nu.to_f64_lossy();
    let x = x.to_f64_lossy();
    let half = 0.5 * x;
    let start = if nu == 0.0 { 1.0 } else { half.powf(nu) } * recip_gamma(nu + 1.0);
    let q = DoubleDouble::new(half).mul(DoubleDouble::new(-half));
    let mut term = DoubleDouble::new(start);
    let mut sum = term;
    let mut m = 0.0;
    loop {
        m += 1.0;
        let denom = DoubleDouble::new(m).mul(DoubleDouble::two_sum(m, nu));
        term = term.mul(q).div(denom);
        sum = sum.add(term);
        if (term.hi.abs() <= 1e-18 * sum.hi.abs() && m > half) || m > 500.0 {
            break;
        }
    }
    T::lit(sum.hi + sum.lo)
}

fn hankel<T: Real>(nu: T, x: T) -> T {
    let mu = T::lit(4.0) * nu * nu;
    let mut p = T::one();
    let mut q = T::zero();
    let mut a = T::one();
    let mut last = T::infinity();
    for k in 1..200 {
        let kf = T::from_usize_lossy(k);
        let odd = T::lit(2.0) * kf - T::one();
        a = a * (mu - odd * odd) / (kf * T::lit(8.0) * x);
        if a.abs() >= last {
            break;
        }
        last = a.abs();
        // P takes the even terms with alternating sign, Q the odd ones
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < T::lit(1e-17) {
            break;
        }
    }
    let chi = x - (nu * T::lit(0.5) + T::lit(0.25)) * T::PI();
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `J_ν(x)` for any real order (negative integer orders by reflection).
pub(crate) fn j_value<T: Real>(nu: T, x: T) -> T {
    if nu < T::zero() && nu == nu.floor() {
        let n = -nu;
        let sign = if (n.to_f64_lossy() as i64) % 2 == 0 { T::one() } else { -T::one() };
        return sign * j_value(n, x);
    }
    if x == T::zero() {
        return if nu == T::zero() { T::one() } else { T::zero() };
    }
    if x < T::lit(SERIES_LIMIT) {
        series(nu, x)
    } else {
        hankel(nu, x)
    }
}

/// `(J_ξ(x), J'_ξ(x))` for `ξ ≥ 0`, `0 ≤ x ≤ 60`.
///
/// At `x = 0` the derivative is `1/2` for `ξ = 1`, `+∞` for `0 < ξ < 1` and
/// zero otherwise.
pub fn bessel_j<T: Real>(order: T, x: T) -> Result<(T, T), Error> {
    if !(order >= T::zero()) || !(x >= T::zero()) || x > T::lit(MAX_ARGUMENT) {
        return Err(Error::BesselDomain { order: order.to_f64_lossy(), x: x.to_f64_lossy() });
    }
    let j = j_value(order, x);
    if x == T::zero() {
        let d = if order == T::one() {
            T::lit(0.5)
        } else if order > T::zero() && order < T::one() {
            T::infinity()
        } else {
            T::zero()
        };
        return Ok((j, d));
    }
    let d = j_value(order - T::one(), x) - order / x * j;
    Ok((j, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_order(s: &str) -> f64 {
        match s.split_once('/') {
            Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
            None => s.parse().unwrap(),
        }
    }

    fn oracle() -> Vec<(f64, f64, f64, f64)> {
        include_str!("../tests/data/bessel_j.txt")
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                (parse_order(f[0]), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), (1.0, 0.0));
        assert_eq!(bessel_j(2.0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(bessel_j(1.0, 0.0).unwrap(), (0.0, 0.5));
        assert_eq!(bessel_j(2.0 / 3.0, 0.0).unwrap().1, f64::INFINITY);
    }

    #[test]
    fn two_thirds_at_one_matches_extended_precision() {
        let (j, _) = bessel_j(2.0f64 / 3.0, 1.0).unwrap();
        assert!((j - 0.597_949_973_673_628_506_225_472_743_053).abs() < 1e-12);
    }

    #[test]
    fn matches_reference_table() {
        for (nu, x, j, dj) in oracle() {
            if nu < 0.0 {
                assert!((j_value(nu, x) - j).abs() <= 1e-9, "J_{nu}({x})");
                continue;
            }
            let (v, d) = bessel_j(nu, x).unwrap();
            assert!((v - j).abs() <= 1e-9, "J_{nu}({x}) = {v}, want {j}");
            assert!((d - dj).abs() <= 1e-9, "J'_{nu}({x}) = {d}, want {dj}");
        }
    }

    #[test]
    fn satisfies_bessel_ode() {
        for &nu in &[0.0, 2.0 / 3.0, 1.0, 2.0] {
            for i in 1..120 {
                let x = 0.5 * i as f64;
                let (j, dj) = bessel_j(nu, x).unwrap();
                // J'' from J'_ν = J_{ν-1} - (ν/x) J_ν differentiated once more
                let jm1 = j_value(nu - 1.0, x);
                let djm1 = j_value(nu - 2.0, x) - (nu - 1.0) / x * jm1;
                let ddj = djm1 + nu / (x * x) * j - nu / x * dj;
                let residual = x * x * ddj + x * dj + (x * x - nu * nu) * j;
                assert!(residual.abs() <= 1e-7 * x.max(1.0), "ν = {nu}, x = {x}: {residual}");
            }
        }
    }

    #[test]
    fn branches_agree_at_switchover() {
        for &nu in &[0.0, 2.0 / 3.0, 2.0, 3.5] {
            let a = series(nu, SERIES_LIMIT);
            let b = hankel(nu, SERIES_LIMIT);
            assert!((a - b).abs() < 1e-10, "ν = {nu}: {a} vs {b}");
        }
    }

    #[test]
    fn recip_gamma_known_values() {
        assert!((recip_gamma(1.0f64) - 1.0).abs() < 1e-15);
        assert!((recip_gamma(5.0f64) - 1.0 / 24.0).abs() < 1e-16);
        assert!((recip_gamma(0.5f64) - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(recip_gamma(-2.0f64), 0.0);
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(bessel_j(-0.5, 1.0).is_err());
        assert!(bessel_j(1.0, 60.5).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
    }
}
