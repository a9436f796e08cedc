"""Independent brute-force oracles shared by the tests."""

import numpy as np


def duffing_oracle(gam, A, steps_per_unit=2000):
    """Half period and action of ``q'' = -q + gam q^3`` from turning point
    ``A`` by fixed-step RK4 and bisection on the velocity sign change."""
    def rhs(s):
        return np.array([s[1], -s[0] + gam * s[0] ** 3])

    def rk4(s, h):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h * k2)
        k4 = rhs(s + h * k3)
        return s + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6

    h = 1.0 / steps_per_unit
    s = np.array([A, 0.0])
    t, action = 0.0, 0.0
    while True:
        s_new = rk4(s, h)
        if t > 0 and s_new[1] * s[1] < 0 or (s_new[1] > 0 and s[1] <= 0 and t > 0):
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if rk4(s, mid)[1] * s[1] > 0:
                    lo = mid
                else:
                    hi = mid
            s_end = rk4(s, lo)
            action += 0.5 * lo * (s[1] ** 2 + s_end[1] ** 2)
            t += lo
            break
        action += 0.5 * h * (s[1] ** 2 + s_new[1] ** 2)
        s, t = s_new, t + h
    return t, 2 * action
