//! Gate-level constructions over local qubit indices.

use crate::circuit::{Gate, GateBuf};
use std::f64::consts::PI;

/// MCX with `ctrls.len() - 2` dirty helpers (any state, restored).
/// Uses `4 (m - 2)` Toffolis for `m >= 3` controls.
pub fn mcx_dirty(b: &mut GateBuf, ctrls: &[usize], t: usize, dirty: &[usize]) {
    let m = ctrls.len();
    match m {
        0 => b.x(t),
        1 => b.cx(ctrls[0], t),
        2 => b.toffoli(ctrls[0], ctrls[1], t),
        _ => {
            assert!(dirty.len() >= m - 2, "mcx_dirty needs {} helpers, got {}", m - 2, dirty.len());
            let tgt = |k: usize| if k == m - 1 { t } else { dirty[k - 1] };
            let ladder = |b: &mut GateBuf, top: usize| {
                for k in (2..=top).rev() {
                    b.toffoli(ctrls[k], dirty[k - 2], tgt(k));
                }
                b.toffoli(ctrls[0], ctrls[1], dirty[0]);
                for k in 2..=top {
                    b.toffoli(ctrls[k], dirty[k - 2], tgt(k));
                }
            };
            ladder(b, m - 1);
            if m >= 4 {
                ladder(b, m - 2);
            } else {
                b.toffoli(ctrls[0], ctrls[1], dirty[0]);
            }
        }
    }
}

fn split(ctrls: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let k1 = ctrls.len().div_ceil(2);
    (ctrls[..k1].to_vec(), ctrls[k1..].to_vec())
}

/// MCX borrowing a single dirty qubit `d`; every sub-ladder borrows from the
/// other half of the controls.
pub fn mcx_one_dirty(b: &mut GateBuf, ctrls: &[usize], t: usize, d: usize) {
    if ctrls.len() <= 2 {
        mcx_dirty(b, ctrls, t, &[]);
        return;
    }
    let (a, rest) = split(ctrls);
    let mut first_helpers = rest.clone();
    first_helpers.push(t);
    let mut second = rest;
    second.push(d);
    for _ in 0..2 {
        mcx_dirty(b, &a, d, &first_helpers);
        mcx_dirty(b, &second, t, &a);
    }
}

/// MCX with one clean helper `c` (returned to |0>).
pub fn mcx_one_clean(b: &mut GateBuf, ctrls: &[usize], t: usize, c: usize) {
    if ctrls.len() <= 2 {
        mcx_dirty(b, ctrls, t, &[]);
        return;
    }
    let (a, rest) = split(ctrls);
    let mut first_helpers = rest.clone();
    first_helpers.push(t);
    let mut second = rest;
    second.push(c);
    mcx_dirty(b, &a, c, &first_helpers);
    mcx_dirty(b, &second, t, &a);
    mcx_dirty(b, &a, c, &first_helpers);
}

/// Clean V-chain: `m - 2` helpers, `2m - 3` Toffolis.
pub fn mcx_chain(b: &mut GateBuf, ctrls: &[usize], t: usize, aux: &[usize]) {
    let m = ctrls.len();
    if m <= 2 {
        mcx_dirty(b, ctrls, t, &[]);
        return;
    }
    assert!(aux.len() >= m - 2);
    let mut compute = GateBuf::new();
    compute.toffoli(ctrls[0], ctrls[1], aux[0]);
    for k in 2..m - 1 {
        compute.toffoli(ctrls[k], aux[k - 2], aux[k - 1]);
    }
    b.gates.extend_from_slice(&compute.gates);
    b.toffoli(ctrls[m - 1], aux[m - 3], t);
    b.extend_inverse(&compute.gates);
}

/// Phase `theta` on the all-ones state of `qs`, no helpers. Quadratic CX.
pub fn mcphase_noaux(b: &mut GateBuf, theta: f64, qs: &[usize]) {
    let m = qs.len();
    match m {
        0 => {}
        1 => b.phase(theta, qs[0]),
        2 => b.cphase(theta, qs[0], qs[1]),
        _ => {
            let bq = qs[m - 2];
            let t = qs[m - 1];
            let rest = &qs[..m - 2];
            b.cphase(theta / 2.0, bq, t);
            mcx_one_dirty(b, rest, bq, t);
            b.cphase(-theta / 2.0, bq, t);
            mcx_one_dirty(b, rest, bq, t);
            let mut sub = rest.to_vec();
            sub.push(t);
            mcphase_noaux(b, theta / 2.0, &sub);
        }
    }
}

pub fn mcx_noaux(b: &mut GateBuf, ctrls: &[usize], t: usize) {
    if ctrls.len() <= 2 {
        mcx_dirty(b, ctrls, t, &[]);
        return;
    }
    let mut qs = ctrls.to_vec();
    qs.push(t);
    b.h(t);
    mcphase_noaux(b, PI, &qs);
    b.h(t);
}

/// Multi-controlled phase computing the AND of all but the last qubit into
/// the clean helper `c` with the last qubit borrowed as dirty.
pub fn mcphase_one_clean(b: &mut GateBuf, theta: f64, qs: &[usize], c: usize) {
    let m = qs.len();
    let last = qs[m - 1];
    mcx_one_dirty(b, &qs[..m - 1], c, last);
    b.cphase(theta, c, last);
    mcx_one_dirty(b, &qs[..m - 1], c, last);
}

/// Multi-controlled phase through a clean V-chain; `aux[0]` holds the AND.
pub fn mcphase_chain(b: &mut GateBuf, theta: f64, qs: &[usize], aux: &[usize]) {
    let m = qs.len();
    let last = qs[m - 1];
    mcx_chain(b, &qs[..m - 1], aux[0], &aux[1..]);
    b.cphase(theta, aux[0], last);
    mcx_chain(b, &qs[..m - 1], aux[0], &aux[1..]);
}

/// QFT without output swaps: qubit `j` ends with relative phase
/// `2 pi x / 2^(j+1)` on |1>.
pub fn qft(b: &mut GateBuf, x: &[usize]) {
    for j in (0..x.len()).rev() {
        b.h(x[j]);
        for k in (0..j).rev() {
            b.cphase(PI / (1u64 << (j - k)) as f64, x[k], x[j]);
        }
    }
}

pub fn iqft(b: &mut GateBuf, x: &[usize]) {
    let mut f = GateBuf::new();
    qft(&mut f, x);
    b.extend_inverse(&f.gates);
}

fn reduced_angle(value: i64, j: usize) -> f64 {
    // 2 pi value / 2^(j+1), reduced mod 2 pi exactly on the integer side.
    let modulus = 1i128 << (j + 1);
    let r = (value as i128).rem_euclid(modulus);
    2.0 * PI * (r as f64) / (modulus as f64)
}

/// In-place `x += value mod 2^w` in Fourier space, optionally controlled.
pub fn add_const_qft(b: &mut GateBuf, ctrls: &[usize], x: &[usize], value: i64) {
    qft(b, x);
    for (j, &q) in x.iter().enumerate() {
        let angle = reduced_angle(value, j);
        if angle == 0.0 {
            continue;
        }
        let mut qs = ctrls.to_vec();
        qs.push(q);
        mcphase_noaux(b, angle, &qs);
    }
    iqft(b, x);
}

/// Toffoli up to a diagonal relative phase, three CX. Only valid in
/// compute/uncompute pairs whose controls are unchanged in between.
pub fn rccx(b: &mut GateBuf, a: usize, c: usize, t: usize) {
    use std::f64::consts::FRAC_PI_4;
    b.h(t);
    b.rz(FRAC_PI_4, t);
    b.cx(c, t);
    b.rz(-FRAC_PI_4, t);
    b.cx(a, t);
    b.rz(FRAC_PI_4, t);
    b.cx(c, t);
    b.rz(-FRAC_PI_4, t);
    b.h(t);
}

/// `t ^= maj(x, k, c)` where the addend bit `k` is either a classical bit or
/// the control qubit `ctrl` (when the classical bit is set).
fn carry(b: &mut GateBuf, x: usize, k: bool, ctrl: Option<usize>, c: usize, t: usize) {
    match (k, ctrl) {
        (false, _) => rccx(b, x, c, t),
        (true, None) => {
            // x or c by De Morgan.
            b.x(x);
            b.x(c);
            rccx(b, x, c, t);
            b.x(x);
            b.x(c);
            b.x(t);
        }
        (true, Some(s)) => {
            rccx(b, x, c, t);
            b.cx(c, x);
            rccx(b, s, x, t);
            b.cx(c, x);
        }
    }
}

/// Ripple-carry constant adder over an out-of-place carry chain of `w + 1`
/// clean qubits: `aux[0]` is the carry-in and `aux[w]` the carry-out.
/// At most one control.
pub fn add_const_ripple(b: &mut GateBuf, ctrls: &[usize], x: &[usize], value: i64, aux: &[usize]) {
    assert!(ctrls.len() <= 1, "ripple adder supports at most one control");
    let w = x.len();
    let v = (value as i128).rem_euclid(1i128 << w);
    let bit = |i: usize| (v >> i) & 1 == 1;
    let ctrl = ctrls.first().copied();
    let mut units: Vec<Vec<Gate>> = Vec::with_capacity(w);
    for i in 0..w {
        let mut u = GateBuf::new();
        carry(&mut u, x[i], bit(i), ctrl, aux[i], aux[i + 1]);
        b.gates.extend_from_slice(&u.gates);
        units.push(u.gates);
    }
    for i in (0..w).rev() {
        b.extend_inverse(&units[i]);
        b.cx(aux[i], x[i]);
        if bit(i) {
            match ctrl {
                Some(s) => b.cx(s, x[i]),
                None => b.x(x[i]),
            }
        }
    }
}
