"""Independent reference computations used by the tests.

Nothing here imports the library's formulas: thresholds come from root
finding on stability conditions, spectra from a cofactor-expanded
characteristic polynomial, fixed points from high-precision Newton
iteration.  ``python tests/oracles.py`` regenerates golden/derived.json.
"""
import json
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40

GOLDEN = Path(__file__).parent / "golden" / "derived.json"


def fizeau(omega, n, r, omega_a, lam, dn_dlam, sign=1):
    omega, n, r, omega_a, lam, dn_dlam = map(mp.mpf, (omega, n, r, omega_a, lam, dn_dlam))
    c = mp.mpf(299792458)
    return sign * omega * n * r * omega_a / c * (1 - 1 / n**2 - lam / n * dn_dlam)


def _det(m):
    """Cofactor expansion along the first row."""
    if len(m) == 1:
        return m[0][0]
    total = 0
    for j, a in enumerate(m[0]):
        if a == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * a * _det(minor)
    return total


def char_poly_4x4(m):
    """Coefficients ``[1, c3, c2, c1, c0]`` of det(lambda I - m), by principal minors."""
    import itertools
    n = 4
    coeffs = [mp.mpf(1)]
    for k in range(1, n + 1):
        s = 0
        for idx in itertools.combinations(range(n), k):
            s += _det([[mp.mpf(m[i][j]) for j in idx] for i in idx])
        coeffs.append((-1) ** k * s)
    return coeffs


def poly_roots(coeffs, iters=500):
    """Durand-Kerner iteration on a monic polynomial, polished by Newton steps."""
    deg = len(coeffs) - 1

    def p(z):
        acc = mp.mpc(0)
        for c in coeffs:
            acc = acc * z + c
        return acc

    def dp(z):
        acc = mp.mpc(0)
        for i, c in enumerate(coeffs[:-1]):
            acc = acc * z + c * (deg - i)
        return acc

    bound = 1 + max(abs(c) for c in coeffs[1:])
    roots = [mp.mpc(0.4, 0.9) ** k * bound for k in range(deg)]
    for _ in range(iters):
        new = []
        for i, z in enumerate(roots):
            den = mp.mpc(1)
            for j, w in enumerate(roots):
                if i != j:
                    den *= z - w
            new.append(z - p(z) / den if den != 0 else z)
        roots = new
    out = []
    for z in roots:
        for _ in range(5):
            d = dp(z)
            if d == 0:
                break
            z = z - p(z) / d
        out.append(z)
    return out


def eigenvalues(m):
    return poly_roots(char_poly_4x4(m))


def _linear_drift(j, g, gamma, kappa, da, dm):
    """Linearised drift about the unexcited state, built from the field equations."""
    # quadratures of dA/dt = -i(da - i kappa) A - i j M - i g A*, dM/dt = -i(dm - i gamma) M - i j A
    return [
        [-kappa, da - g, 0, j],
        [-da - g, -kappa, -j, 0],
        [0, j, -gamma, dm],
        [-j, 0, -dm, -gamma],
    ]


def onset_second_order(j, gamma, kappa, da, dm):
    """Drive at which the unexcited state loses stability through a real eigenvalue (det = 0)."""
    f = lambda g: _det([[mp.mpf(x) for x in row] for row in _linear_drift(j, g, gamma, kappa, da, dm)])  # noqa: E731
    return mp.findroot(f, (mp.mpf("0.5"), mp.sqrt(da**2 + kappa**2) - mp.mpf("1e-9")), solver="anderson")


def onset_first_order(j, gamma, kappa, da):
    """Drive where the nonzero-branch discriminant vanishes: |beta| G = gamma + beta kappa."""
    def f(g):
        b = j**2 / (da**2 + kappa**2 - g**2)
        return b * g - (gamma + b * kappa)
    return mp.findroot(f, (mp.mpf("0.1"), mp.sqrt(da**2 + kappa**2) - mp.mpf("1e-9")), solver="anderson")


def fixed_point(j, g, gamma, kappa, da, dm, guess):
    """Solve the four real steady-state equations (scaled Kerr term) by Newton iteration."""
    def eqs(ar, ai, mr, mi):
        a = mp.mpc(ar, ai)
        m = mp.mpc(mr, mi)
        ad = -1j * (da - 1j * kappa) * a - 1j * j * m - 1j * g * mp.conj(a)
        md = -1j * (dm - 1j * gamma + gamma * abs(m) ** 2) * m - 1j * j * a
        return [mp.re(ad), mp.im(ad), mp.re(md), mp.im(md)]
    sol = mp.findroot(eqs, guess)
    return [sol[i] for i in range(4)]


def derived_values():
    out = {}
    out["fizeau_hz_rad"] = float(fizeau(2 * mp.pi * 6.6e3, 1.4, 1.1e-3, 2 * mp.pi * 193e12, 1550e-9, 0))
    j, gamma, kappa, da = mp.mpf("2.5"), mp.mpf(1), mp.mpf(1), mp.mpf(3)
    for df in ("-0.3", "0", "0.3"):
        d = da + mp.mpf(df)
        out[f"g_c1[{df}]"] = float(onset_first_order(j, gamma, kappa, d))
        out[f"g_c2_dm4[{df}]"] = float(onset_second_order(j, gamma, kappa, d, mp.mpf(4)))
        out[f"g_c2_dm2.2[{df}]"] = float(onset_second_order(j, gamma, kappa, d, mp.mpf("2.2")))
    fp = fixed_point(j, mp.mpf("2.5"), gamma, kappa, da, mp.mpf(4), [1.0, -6.0, -1.0, 2.0])
    out["plus_n_g2.5_dm4"] = float(fp[2] ** 2 + fp[3] ** 2)
    out["plus_photons_g2.5_dm4"] = float(fp[0] ** 2 + fp[1] ** 2)
    out["isolation_4.2016_1.0"] = float(abs((mp.mpf("4.2016") - 1) / (mp.mpf("4.2016") + 1)))
    return out


if __name__ == "__main__":
    values = derived_values()
    GOLDEN.write_text(json.dumps(values, indent=1, sort_keys=True) + "\n")
    json.dump(values, sys.stdout, indent=1, sort_keys=True)
