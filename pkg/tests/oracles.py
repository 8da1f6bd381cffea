"""Independent reference computations used by the tests.

Plain ``math``/``cmath`` loops over the raw published numbers; nothing here
calls into the vectorized library paths it is used to check.
"""

import cmath
import math

C = 299_792_458.0

# Published phase table, degrees, columns at -20, -10, 0, 10, 20 deg.
PUBLISHED_ANGLES = (-20, -10, 0, 10, 20)
PUBLISHED_PSI = {
    ("ON", "reflect"): (-105, -135, -146, -135, -105),
    ("OFF", "reflect"): (11, -12, -20, -12, 11),
    ("ON", "refract"): (162, 133, 122, 133, 162),
    ("OFF", "refract"): (-32, -53, -62, -53, -32),
}


def interp_psi(state, mode, theta):
    """Piecewise-linear phase in |theta| over the non-negative published columns, held flat past 20."""
    xs = [0.0, 10.0, 20.0]
    ys = [float(v) for v in PUBLISHED_PSI[(state, mode)][2:]]
    t = abs(theta)
    if t >= xs[-1]:
        return ys[-1]
    for i in range(len(xs) - 1):
        if xs[i] <= t <= xs[i + 1]:
            w = (t - xs[i]) / (xs[i + 1] - xs[i])
            return ys[i] * (1 - w) + ys[i + 1] * w
    raise AssertionError("unreachable")


def elevation_deg(dx, dy, dz):
    return math.degrees(math.acos(abs(dz) / math.sqrt(dx * dx + dy * dy + dz * dz)))


def grid_positions(rows, cols, dx, dy):
    out = []
    for r in range(rows):
        for c in range(cols):
            out.append((-(cols - 1) * dx / 2 + c * dx, (rows - 1) * dy / 2 - r * dy, 0.0))
    return out


def element_gain(G, S, n, state, mode, th_i, th_r, psi_fn=interp_psi):
    """Unit-amplitude table, offset-product composition."""
    taper = math.cos(math.radians(th_i)) ** n * math.cos(math.radians(th_r)) ** n
    psi = psi_fn(state, mode, th_i) + psi_fn(state, mode, th_r) - psi_fn(state, mode, 0.0)
    return math.sqrt(G * taper * S) * cmath.exp(1j * math.radians(psi))


def effective_channel_downlink(freq, positions, bs, user, states, G, S, n, direct=None, psi_fn=interp_psi):
    """Term-by-term sum; ``bs``/``user`` are (x, y, z, gain, exponent)."""
    lam = C / freq
    total = 0j
    for (ex, ey, ez), st in zip(positions, states):
        d1 = math.dist((bs[0], bs[1], bs[2]), (ex, ey, ez))
        d2 = math.dist((user[0], user[1], user[2]), (ex, ey, ez))
        t1 = elevation_deg(bs[0] - ex, bs[1] - ey, bs[2] - ez)
        t2 = elevation_deg(user[0] - ex, user[1] - ey, user[2] - ez)
        mode = "reflect" if (bs[2] > 0) == (user[2] > 0) else "refract"
        f1 = bs[3] * math.cos(math.radians(t1)) ** bs[4]
        f2 = user[3] * math.cos(math.radians(t2)) ** user[4]
        h1 = math.sqrt(f1) / (math.sqrt(4 * math.pi) * d1) * cmath.exp(-2j * math.pi * d1 / lam)
        h2 = lam * math.sqrt(f2) / (4 * math.pi * d2) * cmath.exp(-2j * math.pi * d2 / lam)
        total += h1 * element_gain(G, S, n, st, mode, t1, t2, psi_fn) * h2
    if direct == "free-space":
        d = math.dist(bs[:3], user[:3])
        th = elevation_deg(user[0] - bs[0], user[1] - bs[1], user[2] - bs[2])
        f = bs[3] * math.cos(math.radians(th)) ** bs[4] * user[3] * math.cos(math.radians(th)) ** user[4]
        total += lam * math.sqrt(f) / (4 * math.pi * d) * cmath.exp(-2j * math.pi * d / lam)
    return total


def direction(theta, phi, sign):
    t, p = math.radians(theta), math.radians(phi)
    return (math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), sign * math.cos(t))


def far_field(freq, positions, states, G, S, n, inc, inc_sign, dep, dep_sign, psi_fn=interp_psi):
    """Naive plane-wave sum for one (incident, departure) pair of (theta, phi) tuples."""
    k = 2 * math.pi * freq / C
    ui = direction(inc[0], inc[1], inc_sign)
    ud = direction(dep[0], dep[1], dep_sign)
    mode = "reflect" if inc_sign == dep_sign else "refract"
    total = 0j
    for (x, y, z), st in zip(positions, states):
        phase = k * (ui[0] * x + ui[1] * y + ui[2] * z) + k * (ud[0] * x + ud[1] * y + ud[2] * z)
        total += cmath.exp(1j * phase) * element_gain(G, S, n, st, mode, inc[0], dep[0], psi_fn)
    return total
