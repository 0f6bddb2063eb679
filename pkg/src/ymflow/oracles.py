"""Abstract functional-inequality oracles on random admissible instances.

Each ``*_trial`` draws one instance from a seeded generator, evaluates both
sides by quadrature (or closed form where one exists) and returns the slack
``rhs - lhs`` together with the scale used for tolerances.  The statements are:

- convolution: if alpha(t) <= (1/t) int_0^t (t-s)^-c beta(s) ds then
  int_0^T t^b alpha^2 <= gamma int_0^T s^(b-2c) beta^2, with
  gamma = C(c, r) C(c, 1-(2c+r-b)) and C(mu, nu) = B(1-mu, 1-nu).
- action integral: int_0^T t^-b || int_0^t s^-mu L^alpha e^-(t-s)L g ds ||^2 dt
  <= T^(2 delta) C_{alpha,mu} int_0^T s^-b ||g||^2, delta = 1 - alpha - mu.
- kernel: || int_0^t s^-mu L^alpha e^-(t-s)L ds || <= t^delta (1-mu)^(alpha-1).
- initial behaviour: f' + g <= h gives
  t^(1-b) f(t) + int s^(1-b) g <= int s^(1-b) h + (1-b) int s^-b f,
  with equality when f' = -g and h = 0, and the power form
  (1-b) int f^q <= ((1-b) int s^-b f)^q, q = 1/(1-b), for non-increasing f.
- heat kernel: || L^(alpha/2) e^-tL || <= c_alpha t^(-alpha/2),
  c_alpha = (alpha/2)^(alpha/2) e^(-alpha/2).
"""
from __future__ import annotations

import numpy as np
from scipy import integrate, optimize, special

QUAD = {"epsabs": 0.0, "epsrel": 1e-11, "limit": 400}


def _quad(f, a, b, **kw):
    opts = dict(QUAD)
    opts.update(kw)
    return integrate.quad(f, a, b, **opts)[0]


def _quad0(f, t, m: int = 4):
    """int_0^t f(s) ds through s = t u^m, which softens power singularities at 0."""
    return _quad(lambda u: f(t * u**m) * t * m * u ** (m - 1), 0.0, 1.0) if t > 0 else 0.0


# constants ------------------------------------------------------------------------------


def beta_constant(mu: float, nu: float) -> float:
    """C(mu, nu) with (1/t) int_0^t (t-s)^-mu s^-nu ds = C(mu, nu) t^(-mu-nu)."""
    if mu >= 1 or nu >= 1:
        raise ValueError("need mu < 1 and nu < 1")
    return float(special.beta(1.0 - mu, 1.0 - nu))


def convolution_r(b: float, c: float) -> float:
    """r = 0 when b < 2c, otherwise midway between b - 2c and 1."""
    return 0.0 if b - 2.0 * c < 0 else 0.5 * (b - 2.0 * c + 1.0)


def convolution_gamma(b: float, c: float) -> float:
    if not 0.0 <= c < 1.0 or b >= 2.0 * c + 1.0:
        raise ValueError("need 0 <= c < 1 and b < 2c + 1")
    r = convolution_r(b, c)
    return beta_constant(c, r) * beta_constant(c, 1.0 - (2.0 * c + r - b))


def action_sup_constant(mu: float, delta: float) -> float:
    """C(mu, delta) = sup_tau tau^-delta int_0^tau s^-mu e^-s ds."""
    g = special.gamma(1.0 - mu)

    def val(x):
        tau = np.exp(x)
        return tau ** (-delta) * special.gammainc(1.0 - mu, tau) * g

    if delta <= 0.0:
        return float(g)
    xs = np.linspace(-40.0, 40.0, 4001)
    vs = val(xs)
    i = int(np.argmax(vs))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = optimize.minimize_scalar(lambda x: -val(x), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    return float(max(vs[i], -res.fun))


def action_constant(alpha: float, mu: float) -> float:
    """C_{alpha,mu} = (1-mu)^(alpha-1) C(mu, 1 - alpha - mu)."""
    delta = 1.0 - alpha - mu
    if not (0.0 <= alpha <= 1.0 and 0.0 <= mu < 1.0 and delta >= 0.0):
        raise ValueError("need 0 <= alpha <= 1, 0 <= mu < 1 and alpha + mu <= 1")
    return (1.0 - mu) ** (alpha - 1.0) * action_sup_constant(mu, delta)


def heat_constant(alpha: float) -> float:
    """c_alpha = sup_sigma sigma^(alpha/2) e^-sigma."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return 1.0
    return float((alpha / 2.0) ** (alpha / 2.0) * np.exp(-alpha / 2.0))


# kernel bound ---------------------------------------------------------------------------


def kernel_integral(lam, t: float, alpha: float, mu: float):
    """int_0^t s^-mu lam^alpha e^-(t-s)lam ds in closed form (Kummer function)."""
    lam = np.asarray(lam, dtype=float)
    base = t ** (1.0 - mu) / (1.0 - mu) * special.hyp1f1(1.0, 2.0 - mu, -t * lam)
    with np.errstate(divide="ignore"):
        pw = np.where(lam > 0, lam, 0.0) ** alpha if alpha > 0 else np.ones_like(lam)
    return pw * base


def kernel_trial(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.0, 0.95)
    alpha = rng.uniform(0.0, 1.0 - mu)
    delta = 1.0 - alpha - mu
    t = 10.0 ** rng.uniform(-3, 1)
    lam = np.concatenate([[0.0], 10.0 ** rng.uniform(-3, 4, size=15)])
    lhs = float(np.max(kernel_integral(lam, t, alpha, mu)))
    rhs = t**delta * (1.0 - mu) ** (alpha - 1.0)
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": rhs,
            "params": {"mu": mu, "alpha": alpha, "t": t}}


# convolution inequality -------------------------------------------------------------------


def convolution_trial(seed: int, T: float = 1.0) -> dict:
    """beta = sum_k w_k s^p_k, alpha = theta(t) (1/t) int (t-s)^-c beta with 0 <= theta <= 1."""
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.0, 0.9)
    b = rng.uniform(2.0 * c - 0.9, 2.0 * c + 0.9)
    k = rng.integers(1, 4)
    w = rng.uniform(0.1, 1.0, size=k)
    p = rng.uniform(0.0, 2.0, size=k)
    amp, freq, ph = rng.uniform(0.0, 0.5), rng.uniform(0.5, 10.0), rng.uniform(0, 2 * np.pi)
    conv_coef = w * special.beta(p + 1.0, 1.0 - c)

    def theta(t):
        return 1.0 - amp * (1.0 + np.cos(freq * t + ph))

    def alpha(t):
        return theta(t) * np.sum(conv_coef * t ** (p - c))

    def beta(s):
        return np.sum(w * s**p)

    lhs = _quad0(lambda t: t**b * alpha(t) ** 2, T)
    gam = convolution_gamma(b, c)
    rhs = gam * _quad0(lambda s: s ** (b - 2 * c) * beta(s) ** 2, T)
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": rhs,
            "params": {"b": b, "c": c, "gamma": gam}}


def convolution_beta_crosscheck(T: float = 1.0, beta0: float = 1.0) -> dict:
    """Constant beta, c = 3/4, b = 1: every quantity has a closed form.

    alpha(t) = 4 beta0 t^-3/4, lhs = 32 beta0^2 sqrt(T), rhs = 2 gamma beta0^2 sqrt(T)
    with gamma = 4 B(1/4, 1/2).  The quadrature values are compared to these.
    """
    c, b = 0.75, 1.0
    gamma_closed = 4.0 * special.beta(0.25, 0.5)
    # gamma from its two defining Beta integrals, evaluated by weighted quadrature
    c0 = _quad(lambda u: 1.0, 0.0, 1.0, weight="alg", wvar=(-c, 0.0))
    c1 = _quad(lambda u: 1.0, 0.0, 1.0, weight="alg", wvar=(-c, -0.5))
    gamma_quad = c0 * c1

    def alpha(t):
        return beta0 * _quad(lambda s: 1.0, 0.0, t, weight="alg", wvar=(0.0, -c)) / t

    lhs_quad = _quad0(lambda t: t**b * alpha(t) ** 2, T)
    rhs_quad = gamma_quad * beta0**2 * _quad(lambda s: 1.0, 0.0, T, weight="alg", wvar=(b - 2 * c, 0.0))
    lhs_closed = 32.0 * beta0**2 * np.sqrt(T)
    rhs_closed = 2.0 * gamma_closed * beta0**2 * np.sqrt(T)
    return {
        "gamma": gamma_closed,
        "gamma_function": convolution_gamma(b, c),
        "gamma_err": abs(gamma_quad - gamma_closed),
        "lhs_err": abs(lhs_quad - lhs_closed),
        "rhs_err": abs(rhs_quad - rhs_closed),
        "slack": rhs_closed - lhs_closed,
    }


# action integral inequality -------------------------------------------------------------


def _gauss_jacobi(n: int, expo: float, a: float, b: float):
    """Nodes and weights for int_a^b (s-a)^expo f(s) ds."""
    x, w = special.roots_jacobi(n, 0.0, expo)
    half = 0.5 * (b - a)
    return a + half * (1.0 + x), w * half ** (1.0 + expo)


def action_trial(seed: int, T: float = 1.0, dim: int = 6, n_inner: int = 160, n_outer: int = 120) -> dict:
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.0, 0.95)
    mu = rng.uniform(0.0, b)
    alpha = rng.uniform(0.0, 1.0 - mu)
    delta = 1.0 - alpha - mu
    lam = np.concatenate([[0.0], 10.0 ** rng.uniform(-2, 2, size=dim - 1)])
    nterm = 3
    coef = rng.standard_normal((dim, nterm))
    powers = rng.uniform(0.0, 2.0, size=nterm)
    freqs = rng.uniform(0.0, 8.0, size=nterm)

    def g(s):
        basis = s[..., None] ** powers * np.cos(freqs * s[..., None])
        return basis @ coef.T  # (..., dim)

    lam_a = np.where(lam > 0, lam, 0.0) ** alpha if alpha > 0 else np.ones(dim)
    ts, wt = _gauss_jacobi(n_outer, -b, 0.0, T)
    xi, wi = special.roots_jacobi(n_inner, 0.0, -mu)
    s = 0.5 * ts[:, None] * (1.0 + xi)  # inner nodes on (0, t) for every outer t
    ws = wi * (0.5 * ts[:, None]) ** (1.0 - mu)
    kern = lam_a * np.exp(-(ts[:, None] - s)[..., None] * lam)
    v = np.sum(ws[..., None] * kern * g(s), axis=1)
    lhs = float(np.sum(wt * np.sum(v**2, axis=1)))
    rhs_int = float(np.sum(wt * np.sum(g(ts) ** 2, axis=1)))
    const = action_constant(alpha, mu)
    rhs = T ** (2 * delta) * const * rhs_int
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": rhs,
            "params": {"b": b, "mu": mu, "alpha": alpha, "C": const}}


# initial-behaviour lemma ----------------------------------------------------------------


def _power_sum(w, p):
    """f(s) = sum w_k s^-p_k e^-r_k s and its derivative."""
    w, p = np.asarray(w), np.asarray(p)

    def make(r):
        def f(s):
            return float(np.sum(w * s ** (-p) * np.exp(-r * s)))

        def fp(s):
            return float(np.sum(w * s ** (-p) * np.exp(-r * s) * (-p / s - r)))

        return f, fp

    return make


def initial_behaviour_trial(seed: int, t: float = 1.0) -> dict:
    """Random f, g, h with f' + g <= h; f may be singular at 0 but s^-b f is integrable."""
    rng = np.random.default_rng(seed)
    b = rng.uniform(-1.0, 0.9)
    k = rng.integers(1, 4)
    w = rng.uniform(0.1, 1.0, size=k)
    p = rng.uniform(-1.0, 0.8 * (1.0 - b), size=k)
    r = rng.uniform(-1.0, 2.0, size=k)
    f, fp = _power_sum(w, p)(r)
    ga, gf = rng.uniform(0.0, 1.0), rng.uniform(0.5, 6.0)
    ea, ef = rng.uniform(0.0, 1.0), rng.uniform(0.5, 6.0)

    def g(s):
        return ga * (1.0 + np.sin(gf * s)) * (1.0 + s ** (-0.5 * max(p.max(), 0.0)))

    def h(s):
        # smooth, h >= |f'| + g >= max(f' + g, 0)
        return np.sqrt(fp(s) ** 2 + 0.01) + g(s) + ea * (1.0 + np.cos(ef * s))

    lhs = t ** (1 - b) * f(t) + _quad0(lambda s: s ** (1 - b) * g(s), t)
    rhs = _quad0(lambda s: s ** (1 - b) * h(s), t) + (1 - b) * _quad0(lambda s: s ** (-b) * f(s), t)
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": max(abs(lhs), abs(rhs)),
            "params": {"b": b}}


def _monotone_f(rng, b):
    k = rng.integers(1, 4)
    w = rng.uniform(0.1, 1.0, size=k)
    p = rng.uniform(0.0, 0.8 * (1.0 - b), size=k)
    r = rng.uniform(0.0, 2.0, size=k)
    return _power_sum(w, p)(r)


def equality_trial(seed: int, t: float = 1.0) -> dict:
    """Non-increasing f: t^(1-b) f(t) + int s^(1-b)(-f') = (1-b) int s^-b f."""
    rng = np.random.default_rng(seed)
    b = rng.uniform(-1.0, 0.9)
    f, fp = _monotone_f(rng, b)
    lhs = t ** (1 - b) * f(t) + _quad0(lambda s: -(s ** (1 - b)) * fp(s), t)
    rhs = (1 - b) * _quad0(lambda s: s ** (-b) * f(s), t)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs), "scale": abs(rhs), "params": {"b": b}}


def power_trial(seed: int, t: float = 1.0, b: float | None = None) -> dict:
    """(1-b) int f^q <= ((1-b) int s^-b f)^q, q = 1/(1-b), f non-increasing."""
    rng = np.random.default_rng(seed)
    if b is None:
        b = rng.uniform(0.0, 0.9)
    q = 1.0 / (1.0 - b)
    f, _ = _monotone_f(rng, b)
    lhs = (1 - b) * _quad0(lambda s: f(s) ** q, t)
    rhs = ((1 - b) * _quad0(lambda s: s ** (-b) * f(s), t)) ** q
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": rhs, "params": {"b": b}}


# heat kernel ---------------------------------------------------------------------------


def heat_trial(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 4.0)
    t = 10.0 ** rng.uniform(-3, 1)
    lam = np.concatenate([[0.0], 10.0 ** rng.uniform(-3, 4, size=31)])
    lhs = float(np.max(lam ** (alpha / 2.0) * np.exp(-t * lam)))
    rhs = heat_constant(alpha) * t ** (-alpha / 2.0)
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": rhs, "params": {"alpha": alpha, "t": t}}


def heat_constant_crosscheck(alpha: float) -> float:
    """|c_alpha - numerical sup_sigma sigma^(alpha/2) e^-sigma|."""
    res = optimize.minimize_scalar(lambda s: -(s ** (alpha / 2.0)) * np.exp(-s), bounds=(1e-12, 50.0),
                                   method="bounded", options={"xatol": 1e-12})
    return abs(heat_constant(alpha) + res.fun)


# battery -------------------------------------------------------------------------------

TRIALS = {
    "convolution": convolution_trial,
    "action_integral": action_trial,
    "kernel": kernel_trial,
    "initial_behaviour": initial_behaviour_trial,
    "power": power_trial,
    "heat_kernel": heat_trial,
}


def run_battery(n_trials: int = 100, seed: int = 0, tol: float = 1e-9) -> dict:
    """Minimum relative slack per oracle plus the equality and closed-form checks.

    A trial passes when slack >= -tol * scale; tol absorbs quadrature error only.
    """
    out = {}
    for name, fn in TRIALS.items():
        rel = []
        for i in range(n_trials):
            r = fn(seed + i)
            rel.append(r["slack"] / max(r["scale"], 1e-300))
        rel = np.asarray(rel)
        out[name] = {"min_rel_slack": float(rel.min()), "passed": bool(np.all(rel >= -tol))}
    eqs = [equality_trial(seed + i) for i in range(n_trials)]
    eq = np.asarray([r["residual"] / max(r["scale"], 1e-300) for r in eqs])
    out["equality"] = {"max_rel_residual": float(eq.max()), "passed": bool(np.all(eq <= 1e-8))}
    half = np.asarray([(lambda r: r["slack"] / r["scale"])(power_trial(seed + i, b=0.5))
                       for i in range(n_trials)])
    out["power_half"] = {"min_rel_slack": float(half.min()), "passed": bool(np.all(half >= -tol))}
    cc = convolution_beta_crosscheck()
    out["beta_crosscheck"] = {**cc, "passed": bool(max(cc["gamma_err"], cc["lhs_err"], cc["rhs_err"]) <= 1e-8
                                                and cc["slack"] >= 0
                                                and abs(cc["gamma_function"] - cc["gamma"]) <= 1e-12)}
    out["passed"] = all(v["passed"] for v in out.values() if isinstance(v, dict))
    return out
