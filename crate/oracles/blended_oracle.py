"""Brute-force reference values for the blended model.

Independent of the Rust code: densities are written out directly and every
integral uses a tensor double-exponential rule on the open unit square.
Run with `python3 oracles/blended_oracle.py`.
"""
import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtri


def de_rule(a, b, h):
    t = np.arange(-3.6, 3.6 + h / 2, h)
    s = 0.5 * np.pi * np.sinh(t)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2 * 0.5
    lo = 1.0 / (1.0 + np.exp(2 * s))  # distance from a, as a fraction
    hi = 1.0 / (1.0 + np.exp(-2 * s))
    x = a + (b - a) * hi
    # complement 1 - x computed without cancellation when b == 1
    xc = (1.0 - b) + (b - a) * lo
    return x, xc, w * (b - a)


def gaussian_pdf(u, uc, v, vc, rho):
    x = np.where(u < 0.5, ndtri(u), -ndtri(uc))
    y = np.where(v < 0.5, ndtri(v), -ndtri(vc))
    r2 = 1 - rho * rho
    return np.exp(-(rho * rho * (x * x + y * y) - 2 * rho * x * y) / (2 * r2)) / np.sqrt(r2)


def neglog(u, uc):
    with np.errstate(divide="ignore"):
        return np.where(u < 0.5, -np.log(u), -np.log1p(-uc))


def gumbel_pdf(u, uc, v, vc, a):
    x, y = neglog(u, uc), neglog(v, vc)
    s = x ** a + y ** a
    A = s ** (1 / a)
    lc = -A + (a - 1) * (np.log(x) + np.log(y)) + (1 / a - 2) * np.log(s) + np.log(A + a - 1) + x + y
    return np.exp(lc)


def clayton_pdf(u, uc, v, vc, a):
    ls = np.log(u ** -a + v ** -a - 1)
    return np.exp(np.log1p(a) - (1 + a) * (np.log(u) + np.log(v)) - (1 / a + 2) * ls)


def power(u, uc, v, vc, th):
    return (u * v) ** th


def expc(u, uc, v, vc, th):
    return np.exp(-th * uc * vc)


class Model:
    def __init__(self, tail, body, weight, h):
        self.tail, self.body, self.weight, self.h = tail, body, weight, h
        self.K = self.mass(0.0, 1.0, 0.0, 1.0)

    def mix(self, u, uc, v, vc):
        p = self.weight(u, uc, v, vc)
        return p * self.tail(u, uc, v, vc) + (1 - p) * self.body(u, uc, v, vc)

    def mass(self, a0, a1, b0, b1):
        u, uc, wu = de_rule(a0, a1, self.h)
        v, vc, wv = de_rule(b0, b1, self.h)
        U, V = np.meshgrid(u, v, indexing="ij")
        UC, VC = np.meshgrid(uc, vc, indexing="ij")
        f = self.mix(U, UC, V, VC)
        return float(wu @ f @ wv)

    def g(self, x):
        v, vc, wv = de_rule(0.0, 1.0, self.h)
        xs = np.full_like(v, x)
        return float(self.mix(xs, 1 - xs, v, vc) @ wv)

    def F(self, x):
        if x < 0.5:
            return self.mass(0.0, x, 0.0, 1.0) / self.K
        return 1 - self.mass(x, 1.0, 0.0, 1.0) / self.K

    def quantile(self, q):
        return brentq(lambda x: self.F(x) - q, 1e-12, 1 - 1e-12, xtol=1e-13)

    def copula_logpdf(self, u, v):
        a, b = self.quantile(u), self.quantile(v)
        num = self.mix(np.array(a), np.array(1 - a), np.array(b), np.array(1 - b)) / self.K
        return float(np.log(num) - np.log(self.g(a) / self.K) - np.log(self.g(b) / self.K))


def main():
    for h in (0.02, 0.01):
        m = Model(lambda *p: gumbel_pdf(*p, 2.0), lambda *p: gaussian_pdf(*p, 0.6), lambda *p: power(*p, 1.5), h)
        print(f"h={h}")
        print(f"  K = {m.K:.12f}")
        print(f"  F_U(0.5) = {m.F(0.5):.12f}")
        print(f"  F_U^-1(0.95) = {m.quantile(0.95):.12f}")
        print(f"  C*(0.3,0.8) = {m.mass(0, 0.3, 0, 0.8) / m.K:.12f}")
        print(f"  S*(0.9,0.95) = {m.mass(0.9, 1, 0.95, 1) / m.K:.12e}")
        print(f"  S*(1-1e-6,1-1e-6) = {m.mass(1 - 1e-6, 1, 1 - 1e-6, 1) / m.K:.12e}")
        print(f"  c*(0.5,0.5) = {m.mix(np.array(0.5), np.array(0.5), np.array(0.5), np.array(0.5)) / m.K:.12f}")
        e = Model(lambda *p: gumbel_pdf(*p, 2.0), lambda *p: gaussian_pdf(*p, 0.6), lambda *p: expc(*p, 1.5), h)
        print(f"  expc K = {e.K:.12f}  f_U(0.9) = {e.g(0.9) / e.K:.12f}")
    rng = np.random.default_rng(20240501)
    pts = np.round(rng.uniform(0.02, 0.98, size=(50, 2)), 6)
    m = Model(lambda *p: gumbel_pdf(*p, 2.0), lambda *p: clayton_pdf(*p, 1.0), lambda *p: power(*p, 0.8), 0.02)
    ll = sum(m.copula_logpdf(u, v) for u, v in pts)
    print("likelihood points:")
    print(",\n".join(f"({u:.6f}, {v:.6f})" for u, v in pts))
    print(f"K = {m.K:.12f}  loglik = {ll:.10f}")


if __name__ == "__main__":
    main()
