//! Arithmetic in the prime field of order 65537.

pub const P: u32 = 65_537;

#[inline]
pub fn add(a: u32, b: u32) -> u32 {
    let s = a + b;
    if s >= P {
        s - P
    } else {
        s
    }
}

#[inline]
pub fn sub(a: u32, b: u32) -> u32 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

#[inline]
pub fn mul(a: u32, b: u32) -> u32 {
    ((a as u64 * b as u64) % P as u64) as u32
}

pub fn pow(mut base: u32, mut exp: u32) -> u32 {
    let mut acc = 1u32;
    base %= P;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse; `a` must be nonzero.
pub fn inv(a: u32) -> u32 {
    debug_assert!(a % P != 0);
    pow(a, P - 2)
}

/// Horner evaluation of `coeffs[0] + coeffs[1]·x + ...`.
pub fn eval(coeffs: &[u32], x: u32) -> u32 {
    coeffs.iter().rev().fold(0, |acc, &c| add(mul(acc, x), c))
}

/// Coefficients of the Lagrange basis polynomials for the given points.
///
/// Row `j` holds the coefficients of `L_j`, the unique polynomial of degree
/// `xs.len() - 1` equal to 1 at `xs[j]` and 0 at every other point.
pub fn lagrange_basis(xs: &[u32]) -> Vec<Vec<u32>> {
    let m = xs.len();
    let mut rows = Vec::with_capacity(m);
    for (j, &xj) in xs.iter().enumerate() {
        let mut poly = vec![1u32];
        let mut denom = 1u32;
        for (i, &xi) in xs.iter().enumerate() {
            if i == j {
                continue;
            }
            // poly *= (x - xi)
            let mut next = vec![0u32; poly.len() + 1];
            for (d, &c) in poly.iter().enumerate() {
                next[d + 1] = add(next[d + 1], c);
                next[d] = sub(next[d], mul(c, xi));
            }
            poly = next;
            denom = mul(denom, sub(xj, xi));
        }
        let scale = inv(denom);
        for c in poly.iter_mut() {
            *c = mul(*c, scale);
        }
        debug_assert_eq!(poly.len(), m);
        rows.push(poly);
    }
    rows
}
