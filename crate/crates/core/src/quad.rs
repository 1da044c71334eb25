//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands on a real
//! interval. Internal utility; tolerances are absolute.

use crate::Complex;

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss rule on the odd-indexed nodes. QUADPACK values.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex>(f: &F, a: f64, b: f64) -> (Complex, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += fsum * WGK[i];
        if i % 2 == 1 {
            gauss += fsum * WG[i / 2];
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex,
    err: f64,
    /// Set once the segment is at the rounding floor; no further splits.
    frozen: bool,
}

const MAX_SEGMENTS: usize = 4096;

/// Integrate `f` over [a, b] to absolute tolerance `tol`: repeatedly bisect
/// the segment with the largest error estimate until the global estimate
/// meets `tol`, every remaining segment is at the rounding floor, or the
/// segment budget is exhausted. Work is bounded by construction.
pub fn integrate<F: Fn(f64) -> Complex>(f: &F, a: f64, b: f64, tol: f64) -> Complex {
    if a == b {
        return Complex::new(0.0, 0.0);
    }
    let (value, err) = gk15(f, a, b);
    let mut segments = vec![Segment { a, b, value, err, frozen: false }];
    loop {
        let total_err: f64 = segments.iter().map(|s| s.err).sum();
        if total_err <= tol || segments.len() >= MAX_SEGMENTS {
            break;
        }
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.frozen)
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap());
        let Some((idx, _)) = worst else { break };
        let seg = &mut segments[idx];
        let width_floor = (seg.b - seg.a).abs() < 1e-13 * (seg.a.abs() + seg.b.abs() + 1e-300);
        let err_floor = seg.err <= 1e-15 * seg.value.norm();
        if width_floor || err_floor {
            seg.frozen = true;
            continue;
        }
        let (sa, sb) = (seg.a, seg.b);
        let mid = 0.5 * (sa + sb);
        let (v1, e1) = gk15(f, sa, mid);
        let (v2, e2) = gk15(f, mid, sb);
        segments[idx] = Segment { a: sa, b: mid, value: v1, err: e1, frozen: false };
        segments.push(Segment { a: mid, b: sb, value: v2, err: e2, frozen: false });
    }
    // Deterministic summation order.
    segments.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
    let mut acc = crate::util::KahanComplex::new();
    for s in &segments {
        acc.add(s.value);
    }
    acc.value()
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    integrate(&|x| Complex::new(f(x), 0.0), a, b, tol).re
}
