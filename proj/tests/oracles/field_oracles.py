"""Symbolic reference values for the analytic field providers.

Evaluates each closed-form field with sympy and prints the derivatives the
C++ providers must reproduce. The printed numbers are frozen into
tests/unit/test_fields.cpp; rerun this script if a provider definition changes.
"""
import sympy as sp

x, y, z, t = sp.symbols("x y z t", real=True)
X = sp.Matrix([x, y, z])


def report(name, V, p, at):
    subs = dict(zip((x, y, z, t), at))
    gradV = sp.Matrix(3, 3, lambda i, j: sp.diff(V[j], X[i]))
    xi = sp.Matrix([sp.diff(V[2], y) - sp.diff(V[1], z),
                    sp.diff(V[0], z) - sp.diff(V[2], x),
                    sp.diff(V[1], x) - sp.diff(V[0], y)])
    g = sp.Matrix([sp.diff(p, s) for s in X])
    H = sp.hessian(p, X)
    gt = sp.diff(g, t)
    ev = lambda e: [sp.N(v.subs(subs), 20) for v in e]
    print(f"// {name} at {at}")
    print("V", ev(V))
    print("gradV", ev(gradV))
    print("xi", ev(xi))
    print("p1hat", sp.N(p.subs(subs), 20))
    print("grad", ev(g))
    print("hess", ev(H))
    print("dt_grad", ev(gt))


# Taylor-Green, decaying variant with default parameters.
A, k, nu, p0, q = 1, 1, sp.Rational(1, 20), 1, sp.Rational(1, 4)
F = sp.exp(-2 * nu * k**2 * t)
V = sp.Matrix([A * F * sp.cos(k * x) * sp.sin(k * y),
               -A * F * sp.sin(k * x) * sp.cos(k * y), 0])
p = p0 + A**2 / 4 * F**2 * (2 - sp.cos(2 * k * x) - sp.cos(2 * k * y)) + q * (1 - sp.cos(k * z))
report("taylor_green", V, p, (sp.pi / 4, sp.pi / 4, 0, 0))
report("taylor_green", V, p, (sp.Rational(3, 10), sp.Rational(-7, 10), sp.Rational(1, 2), sp.Rational(3, 2)))

# Lamb-Oseen with default parameters.
gam, nu, t0, w, p0, dp = 1, sp.Rational(1, 100), 10, sp.Rational(1, 10), 1, sp.Rational(1, 2)
s = x**2 + y**2
a = 4 * nu * (t + t0)
f = gam / (2 * sp.pi * s) * (1 - sp.exp(-s / a))
V = sp.Matrix([-y * f, x * f, w])
p = p0 - dp * sp.exp(-s / a)
report("lamb_oseen", V, p, (sp.Rational(3, 10), sp.Rational(-2, 5), sp.Rational(1, 5), sp.Rational(1, 2)))
