"""High-precision reference values frozen into the Rust tests.

Evaluates the closed forms term by term with mpmath at 60 significant
digits. Run with `python3 highprec_oracle.py`; the printed literals are
pasted into tests/closed_forms.rs.
"""
from mpmath import mp, mpf, exp

mp.dps = 60


def pieces(lam, T, sigma, W, r, x):
    a = (1 - r) * exp(-lam * sigma * (1 - x))
    b = 1 - r * exp(-lam * T * (1 - x))
    u = b / a
    geom = sum(u ** i for i in range(W + 1))
    tail = (W + 1) * u ** W * (1 - u) / (1 - u ** (W + 1))
    return a, b, u, geom, tail


def greedy_rq(lam, T, sigma, W, r, x):
    _, _, _, _, tail = pieces(lam, T, sigma, W, r, x)
    pt = exp(-lam * T * (1 - x))
    ps = exp(-lam * sigma * (1 - x))
    R = pt / x - tail
    Q = 1 + (1 / x - r) * pt - (1 - r) * ps - tail
    return R, Q


def fair_rq(lam, T, sigma, W, r, x):
    _, _, _, _, tail = pieces(lam, T, sigma, W, r, x)
    pt = exp(-lam * T * (1 - x))
    ps = exp(-lam * sigma * (1 - x))
    R = r * pt / x + (1 - r) * ps - tail
    Q = 1 + r * (1 / x - 1) * pt - tail
    return R, Q


def f_v(T, sigma, W, r, s):
    f = (1 - r) * exp(-s * sigma) / (1 - r * exp(-s * T))
    v = exp(-s * T) * (f ** (W + 1) - 1) / ((W + 1) * (f - 1))
    return f, v


def show(name, value):
    print(f"{name} = {mp.nstr(value, 20)}")


lam, T, sigma, W, r = mpf("0.05"), mpf(1), mpf("0.05"), 4, mpf("0.3")
show("B_AT_0", 1 - r * exp(-lam * T))
_, _, _, geom, _ = pieces(lam, T, sigma, W, r, mpf("0.9"))
show("GEOM_SUM_AT_0_9", geom)
R, Q = greedy_rq(lam, T, sigma, W, r, mpf("0.95"))
show("GREEDY_R_AT_0_95", R)
show("GREEDY_Q_AT_0_95", Q)
f, v = f_v(T, sigma, W, r, mpf("0.1"))
show("F_AT_0_1", f)
show("V_AT_0_1", v)

lam, r = mpf("0.04"), mpf("0.4")
R, Q = fair_rq(lam, T, sigma, W, r, mpf("0.9"))
show("FAIR_RBAR_AT_0_9", R)
show("FAIR_QBAR_AT_0_9", Q)
