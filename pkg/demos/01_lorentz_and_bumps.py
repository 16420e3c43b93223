"""Lorentz norms and capacity bumps.

The log profile g*(t) = t^(-1/2) / log(e/t) sits in L^{2,2} but not in
L^{2,1}. That gap is what lets a Lipschitz bump keep height 1 at a point
while the Lorentz norm of its gradient becomes as small as we like.

Run with ``python demos/01_lorentz_and_bumps.py``.
"""

import math

import mpmath

from lipsharp.capacity import BumpSpec, bump_lip, eval_bump, lip_field_norm, make_bump, u_value
from lipsharp.lorentz import LogProfile, LorentzIndex, StepFunction, lorentz_norm


def section(title):
    print(f"\n== {title}")


section("step functions")
f = StepFunction.from_pieces([1, 2], [2, 1])
for Q, q in [(2, 1), (2, 2), (3, 1.5)]:
    print(f"||f||_{{{Q},{q}}} = {lorentz_norm(f, LorentzIndex(Q, q)).value:.6f}")

section("the log profile")
g = LogProfile(2)
for q in (2, 1.5, 1.1, 1):
    r = lorentz_norm(g, LorentzIndex(2, q))
    print(f"q = {q:<4} status = {r.status:<9} value = {r.value}")
print("u(r) = log log(e/r) grows without bound:")
for e in (10, 100, 300):
    r = 10.0 ** -e
    print(f"  u(1e-{e}) = {u_value(g, 2, r):.4f}")

section("bumps with shrinking budgets")
print(f"{'budget':>8} {'lambda':>10} {'log delta':>14} {'checked norm':>13}")
for budget in (0.2, 0.05, 0.01, 0.002):
    b = make_bump(BumpSpec((0, 0), 0.1, 1.0, 2, g, budget))
    print(f"{budget:>8} {b.lam:>10.5f} {mpmath.nstr(b.log_delta, 4):>14} {b.verified_norm:>13.6f}")
print("The plateau radius delta underflows long before the budget is met;")
print("it is carried as log delta, and the height stays 1 at the centre.")

section("profile of one bump")
b = make_bump(BumpSpec((0, 0), 0.1, 1.0, 2, g, 0.05))
for rho in (0.0, 1e-300, 1e-30, 1e-3, 0.02, 0.05):
    print(f"rho = {rho:<8g} phi = {eval_bump(b, (rho, 0.0)):.6f} Lip = {bump_lip(b, (rho, 0.0)):.4g}")
print(f"polar-quadrature ||Lip phi||_(2,2) = {lip_field_norm(b):.6f} <= 0.05")
print(f"C_N = 2 sqrt(pi) = {b.C_N:.6f} (check {2 * math.sqrt(math.pi):.6f})")
