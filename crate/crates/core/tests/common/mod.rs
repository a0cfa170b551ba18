#![allow(dead_code)]

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `eps`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        eps: f64,
        whole: f64,
        m: f64,
        fm: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, eps / 2.0, left, lm, flm, depth - 1)
            + rec(f, m, fm, b, fb, eps / 2.0, right, rm, frm, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, eps, whole, m, fm, 40)
}

/// `1 - (1 - f) * (1 - g)(x)` for `f = e^{-a x}`, `g = e^{-b x}`, by quadrature.
///
/// Written as `e^{-a x} + int_0^x e^{-b (x - y)} a e^{-a y} dy` so that no
/// cancellation happens when the result is small.
pub fn convolve_by_quadrature(a: f64, b: f64, x: f64) -> f64 {
    let integrand = |y: f64| (-b * (x - y)).exp() * a * (-a * y).exp();
    let scale = (-a * x).exp().max((-b * x).exp());
    (-a * x).exp() + adaptive_simpson(&integrand, 0.0, x, 1e-11 * scale)
}
