"""Frozen reference values, derived by hand before the code that they check.

Each entry records the value and a one-line derivation. Tests import these
constants; they must never be regenerated from the implementation.
"""

# G_{2,1} at A0, e = offdiag(1): R(e, Je)Je = [[e, Je], Je] with Je = i[A0, e];
# the 2x2 block computation gives 4e, and h(e, e) = 1.
G21_HOLOMORPHIC_SECTIONAL = 4.0

# h(offdiag(E11), offdiag(E11)) = Re tr(E E^*) = 1 on G_{2,1}.
G21_UNIT_METRIC = 1.0

# S^1_{111} on G_{2,1} with the canonical frame: K/4 * (1 + 1) with K = 4.
G21_S1111 = 2.0

# s_const_k(2, 4) delta bookkeeping, S^j_{pqr} = (K/4)(d_pq d_rj + d_rq d_pj), 0-based [j,p,q,r]:
# [0,0,1,1]: d_rq d_pj fires -> 1;  [0,1,1,0]: d_pq d_rj fires -> 1;  [0,1,0,1]: neither -> 0.
CONSTK2_S0011 = 1.0
CONSTK2_S0110 = 1.0
CONSTK2_S0101 = 0.0

# s_grassmann(2, 2) at j=(1,1), p=(1,1), q=(2,1), r=(2,1) (1-based pairs);
# flattened 0-based with j = j2*k0 + j1 this is S[0, 0, 1, 1] = 1.
GRASS22_FIRST_DELTA = ((0, 0, 1, 1), 1.0)
# j=(1,1), p=(2,2) share neither row nor column: S[0, 3, 3, 0] = 0.
GRASS22_DISJOINT = ((0, 3, 3, 0), 0.0)

# Coefficients d1..d6 by substitution.
D_COEFFS_110 = (-2.0, 0.0, 2.0, -1.0, 0.0, 2.0)  # (a, b, c) = (1, 1, 0)
D_COEFFS_SPHERE_B0 = {"d1": -4.0, "d4": -3.0}  # (a, b, c) = (1, 0, 3/2)
D1_ENERGY_BETA1_GAMMA0 = -2.0  # d1 = -2 beta + 16 gamma

# Scalar fourth-order NLS at (gamma1, gamma2) = (1, -5/2).
DELTA_1, DELTA_2, DELTA_5 = -2.0, -0.5, -0.25

# ConstK n=1: contract(S=K/2, U=1, V=i, W=1) = S * (1*conj(i) - i*conj(1)) * 1 = -i K.
def constk1_contract(K: float) -> complex:
    return -1j * K


# Great circle u(x) = (cos x, sin x, 0) on the unit sphere, alpha=1, beta=gamma=0:
# E = (1/2) * length.
def great_circle_energy(length: float) -> float:
    return 0.5 * length


# Gamma integrand on G_{2,1}: h(R(u_x, J u_x) J u_x, u_x) = K |u_x|^4 with K = 4.
G21_GAMMA_FACTOR = 4.0
