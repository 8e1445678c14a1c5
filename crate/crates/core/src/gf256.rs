//! Arithmetic over GF(2^8) with the reduction polynomial `x^8 + x^4 + x^3 +
//! x^2 + 1` (0x11d) and generator 2. Addition is XOR.

const POLY: u16 = 0x11d;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const TABLES: Tables = build_tables();

const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

static MUL: [[u8; 256]; 256] = build_mul();

const fn build_mul() -> [[u8; 256]; 256] {
    let mut t = [[0u8; 256]; 256];
    let mut a = 1;
    while a < 256 {
        let mut b = 1;
        while b < 256 {
            t[a][b] = TABLES.exp[TABLES.log[a] as usize + TABLES.log[b] as usize];
            b += 1;
        }
        a += 1;
    }
    t
}

pub fn mul(a: u8, b: u8) -> u8 {
    MUL[a as usize][b as usize]
}

/// Multiplicative inverse; `a` must be nonzero.
pub fn inv(a: u8) -> u8 {
    assert!(a != 0, "zero has no inverse in GF(256)");
    TABLES.exp[255 - TABLES.log[a as usize] as usize]
}

/// `dst += c * src`, element-wise.
pub fn mul_acc(dst: &mut [u8], src: &[u8], c: u8) {
    debug_assert_eq!(dst.len(), src.len());
    match c {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let row = &MUL[c as usize];
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= row[s as usize]);
        }
    }
}

pub fn scale(buf: &mut [u8], c: u8) {
    let row = &MUL[c as usize];
    buf.iter_mut().for_each(|b| *b = row[*b as usize]);
}

/// `(pivot, below)`: row `k` and every row after it.
fn split_pivot(m: &mut [Vec<u8>], k: usize) -> (&[u8], &mut [Vec<u8>]) {
    let (head, tail) = m.split_at_mut(k + 1);
    (&head[k], tail)
}

/// Rank of a row-major matrix.
pub fn rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| m[i][col] != 0) else { continue };
        m.swap(rank, p);
        let f = inv(m[rank][col]);
        scale(&mut m[rank][col..], f);
        let (pivot, below) = split_pivot(&mut m, rank);
        for row in below {
            let c = row[col];
            mul_acc(&mut row[col..], &pivot[col..], c);
        }
        rank += 1;
    }
    rank
}

/// Solves `A x = b` for a square `A` where every unknown and right-hand
/// side is a byte vector. Returns `None` when `A` is singular.
pub fn solve(mut a: Vec<Vec<u8>>, mut b: Vec<Vec<u8>>) -> Option<Vec<Vec<u8>>> {
    let n = a.len();
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let p = (col..n).find(|&i| a[i][col] != 0)?;
        a.swap(col, p);
        b.swap(col, p);
        let f = inv(a[col][col]);
        scale(&mut a[col][col..], f);
        scale(&mut b[col], f);
        let (pa, a_below) = split_pivot(&mut a, col);
        let (pb, b_below) = split_pivot(&mut b, col);
        for (ra, rb) in a_below.iter_mut().zip(b_below) {
            let c = ra[col];
            if c != 0 {
                mul_acc(&mut ra[col..], &pa[col..], c);
                mul_acc(rb, pb, c);
            }
        }
    }
    for col in (0..n).rev() {
        let (done, pending) = b.split_at_mut(col);
        let pb = &pending[0];
        for (i, rb) in done.iter_mut().enumerate() {
            mul_acc(rb, pb, a[i][col]);
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn slow_mul(mut a: u8, mut b: u8) -> u8 {
        let mut p = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                p ^= a;
            }
            let carry = a & 0x80 != 0;
            a <<= 1;
            if carry {
                a ^= (POLY & 0xff) as u8;
            }
            b >>= 1;
        }
        p
    }

    #[test]
    fn table_mul_matches_shift_and_add() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b));
            }
        }
    }

    #[test]
    fn inverses() {
        for a in 1..=255u8 {
            assert_eq!(mul(a, inv(a)), 1);
        }
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![vec![1, 2, 3], vec![2, 4, 6], vec![0, 0, 1]];
        // row 2 = 2 * row 1 in GF(256)
        assert_eq!(mul(2, 3), 6);
        assert_eq!(rank(&rows), 2);
        assert_eq!(rank(&[]), 0);
    }

    #[test]
    fn singular_solve_is_none() {
        let a = vec![vec![1, 1], vec![1, 1]];
        assert!(solve(a, vec![vec![0], vec![0]]).is_none());
    }

    proptest! {
        #[test]
        fn solve_inverts_products(
            n in 1usize..6,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<Vec<u8>> = (0..n).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
            let x: Vec<Vec<u8>> = (0..n).map(|_| (0..4).map(|_| rng.random()).collect()).collect();
            let b: Vec<Vec<u8>> = a
                .iter()
                .map(|row| {
                    let mut acc = vec![0u8; 4];
                    for (c, xi) in row.iter().zip(&x) {
                        mul_acc(&mut acc, xi, *c);
                    }
                    acc
                })
                .collect();
            match solve(a.clone(), b) {
                Some(sol) => prop_assert_eq!(sol, x),
                None => prop_assert!(rank(&a) < n),
            }
        }
    }
}
