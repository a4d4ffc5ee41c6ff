"""Complex gamma and parabolic cylinder functions in double precision.

``pcf_d(p, z)`` evaluates Whittaker's D_p(z) for complex order and argument.
Three evaluation routes are combined:

* the Maclaurin (even/odd Kummer) series near the origin,
* the large-|z| asymptotic expansions, including the Stokes term for
  pi/2 < |arg z| <= pi,
* Taylor-series continuation of Weber's equation along a few candidate
  paths (radial leg from the origin outward, or from an asymptotic anchor
  inward, then an arc), for the annulus where neither of the former is
  accurate.  Each path carries a transfer-matrix estimate of how much it
  amplifies rounding error, and the first path under 1e-12 is used.

When no double-precision route meets its own error estimate (large complex
orders with strong cancellation in the series) the Maclaurin series is
summed once more in multiprecision arithmetic with mpmath.  That fallback
is the exception; the orders met on the annealing-time grid (|p| < 2)
never reach it.
"""

import cmath
import math

from .errors import ConvergenceError, DomainError

__all__ = ["cgamma", "clgamma", "rgamma", "pcf_d", "pcf_d_and_derivative", "MAX_ABS_ORDER", "MAX_ABS_ARG"]

MAX_ABS_ORDER = 50.0
MAX_ABS_ARG = 50.0
# Beyond MAX_ABS_ARG only the asymptotic route is allowed, up to this radius.
MAX_ABS_ARG_ASYMPTOTIC = 1.0e4

_EPS = 2.220446049250313e-16
_SERIES_RTOL = 1e-13
_ASYM_RTOL = 1e-15
_LOG_MAX = 709.0

# Godfrey's g = 607/128 Lanczos coefficients.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _is_pole(z):
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _log_sin_pi(z):
    """log(sin(pi z)) without overflow for large |Im z| (branch irrelevant)."""
    if abs(z.imag) < 20.0:
        return cmath.log(cmath.sin(math.pi * z))
    if z.imag > 0.0:
        # sin(pi z) = (i/2) e^{-i pi z} (1 - e^{2 i pi z})
        return cmath.log(0.5j) - 1j * math.pi * z + cmath.log(1.0 - cmath.exp(2j * math.pi * z))
    return cmath.log(-0.5j) + 1j * math.pi * z + cmath.log(1.0 - cmath.exp(-2j * math.pi * z))


def _lgamma_right(z):
    w = z - 1.0
    s = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        s += _LANCZOS_C[k] / (w + k)
    t = w + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (w + 0.5) * cmath.log(t) - t + cmath.log(s)


def clgamma(z):
    """log Gamma(z) for complex z.

    Only ``exp(clgamma(z))`` is meaningful: the imaginary part is not
    reduced to the principal branch of log Gamma.
    """
    z = complex(z)
    if _is_pole(z):
        raise DomainError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return _LOG_PI - _log_sin_pi(z) - _lgamma_right(1.0 - z)
    return _lgamma_right(z)


def cgamma(z):
    """Gamma(z) for complex z (Lanczos with reflection)."""
    z = complex(z)
    if _is_pole(z):
        raise DomainError(f"Gamma has a pole at {z}")
    if z.imag == 0.0 and 0.0 < z.real <= 171.0 and z.real == math.floor(z.real):
        return complex(math.factorial(int(z.real) - 1))
    lg = clgamma(z)
    if lg.real > _LOG_MAX:
        raise ConvergenceError(f"Gamma({z}) overflows double precision")
    return cmath.exp(lg)


def rgamma(z):
    """1/Gamma(z); exactly zero at the poles of Gamma."""
    z = complex(z)
    if _is_pole(z):
        return 0j
    lg = clgamma(z)
    if -lg.real > _LOG_MAX:
        raise ConvergenceError(f"1/Gamma({z}) overflows double precision")
    return cmath.exp(-lg)


# ----------------------------------------------------------------------------
# parabolic cylinder function D_p(z)


def _check_args(p, z):
    p = complex(p)
    z = complex(z)
    for name, v in (("order", p), ("argument", z)):
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise DomainError(f"non-finite {name} {v}")
    if abs(p) > MAX_ABS_ORDER:
        raise DomainError(f"|p| = {abs(p):.6g} exceeds supported {MAX_ABS_ORDER}")
    if abs(z) > MAX_ABS_ARG_ASYMPTOTIC:
        raise DomainError(f"|z| = {abs(z):.6g} exceeds supported {MAX_ABS_ARG_ASYMPTOTIC}")
    return p, z


def _value_at_zero(p):
    """D_p(0) and D_p'(0)."""
    sqpi = math.sqrt(math.pi)
    d0 = 2.0 ** (p / 2.0) * sqpi * rgamma((1.0 - p) / 2.0)
    d1 = -(2.0 ** ((p + 1.0) / 2.0)) * sqpi * rgamma(-p / 2.0)
    return d0, d1


def _nonneg_integer_order(p):
    if p.imag != 0.0 or p.real < 0.0 or p.real != math.floor(p.real):
        return None
    return int(p.real)


def _hermite(n, z):
    """D_n(z) = exp(-z^2/4) He_n(z) and its derivative."""
    he_prev, he = 0j, 1.0 + 0j
    for k in range(n):
        he_prev, he = he, z * he - k * he_prev
    # He_n' = n He_{n-1}
    g = cmath.exp(-z * z / 4.0)
    return g * he, g * (n * he_prev - 0.5 * z * he)


def _maclaurin(p, z):
    """Even/odd power series about the origin.

    Returns (value, derivative, estimated relative error).
    """
    c0, c1 = _value_at_zero(p)
    a = -(p + 0.5)
    z2 = z * z
    # terms t_n = c_n z^n; recurrence steps by 2 and 4.
    t = [c0, c1 * z, a * c0 * z2 / 2.0, a * c1 * z * z2 / 6.0]
    total = sum(t)
    dtotal = (t[1] + 2 * t[2] + 3 * t[3]) / z
    biggest = max(abs(x) for x in t)
    n = 3
    quiet = 0
    while n < 4000:
        n += 1
        tn = (a * t[-2] * z2 + 0.25 * t[-4] * z2 * z2) / (n * (n - 1))
        t.append(tn)
        del t[0]
        total += tn
        dtotal += n * tn / z
        at = abs(tn)
        biggest = max(biggest, at)
        if at <= _EPS * 1e-2 * abs(total) and n > abs(z2):
            quiet += 1
            if quiet >= 4:
                break
        else:
            quiet = 0
    else:
        return total, dtotal, math.inf
    if total == 0:
        return total, dtotal, math.inf
    err = 8.0 * _EPS * biggest / abs(total) + 8.0 * _EPS * math.sqrt(n)
    return total, dtotal, err


def _asym_sum(first, ratio, z2):
    """Sum an asymptotic series given the term-ratio function.

    Returns (sum, relative error estimate).
    """
    total = first
    term = first
    s = 0
    while True:
        nxt = term * ratio(s) / z2
        if abs(nxt) >= abs(term) and s > 0:
            return total, abs(term) / max(abs(total), 1e-300)
        total += nxt
        if abs(nxt) <= _ASYM_RTOL * 0.01 * abs(total):
            return total, abs(nxt) / abs(total)
        term = nxt
        s += 1
        if s > 5000:
            return total, abs(term) / abs(total)


def _asym_parts(p, z):
    """Leading and Stokes series of D_p(z) for large |z|.

    Returns (S, T, err_S, err_T) with D_p(z) ~ exp(-z^2/4) z^p S [+ Stokes * T].
    """
    z2 = 2.0 * z * z
    mp_ = -p
    S, eS = _asym_sum(1.0 + 0j, lambda s: -(mp_ + 2 * s) * (mp_ + 2 * s + 1) / (s + 1), z2)
    T, eT = _asym_sum(1.0 + 0j, lambda s: (p + 1 + 2 * s) * (p + 2 + 2 * s) / (s + 1), z2)
    return S, T, eS, eT


def _asymptotic(p, z):
    """Asymptotic value as (mantissa, log_factor, rel_err); value = mantissa*exp(log_factor)."""
    logz = cmath.log(z)
    log_lead = -z * z / 4.0 + p * logz
    S, T, eS, eT = _asym_parts(p, z)
    phase = cmath.phase(z)
    if abs(phase) <= math.pi / 2:
        return S, log_lead, eS
    rg = rgamma(-p)
    if rg == 0:
        return S, log_lead, eS
    sign = 1j if phase > 0 else -1j
    # Stokes term relative to the leading exponential.
    log_stokes = math.log(math.sqrt(2.0 * math.pi)) + cmath.log(rg) + sign * math.pi * p + z * z / 4.0 - (p + 1.0) * logz
    rel = cmath.exp(log_stokes - log_lead) if (log_stokes - log_lead).real < _LOG_MAX else None
    if rel is None:
        # Stokes term dominates completely; express in its own scale.
        lead_rel = cmath.exp(log_lead - log_stokes) * S
        mant = lead_rel - T
        err = max(eT, eS * abs(lead_rel)) * max(abs(T), 1.0) / max(abs(mant), 1e-300)
        return mant, log_stokes, err
    mant = S - rel * T
    err = (eS * abs(S) + eT * abs(rel * T)) / max(abs(mant), 1e-300)
    return mant, log_lead, err


def _step_size(p, z0):
    a = abs(z0 * z0 / 4.0 - p - 0.5) + abs(z0) / 2.0 + 0.25
    return min(0.5, 1.2 / math.sqrt(a))


def _taylor_step(p, z0, u, du, h):
    """Advance Weber's equation u'' = (z^2/4 - p - 1/2) u from z0 to z0 + h."""
    A = z0 * z0 / 4.0 - p - 0.5
    Bh3 = (z0 / 2.0) * h ** 3
    Ah2 = A * h * h
    Ch4 = 0.25 * h ** 4
    d = [u, du * h, Ah2 * u / 2.0]
    val = d[0] + d[1] + d[2]
    dval = d[1] + 2.0 * d[2]
    scale = abs(u) + abs(du * h)
    n = 2
    quiet = 0
    while n < 400:
        m = n - 1  # computing d_{m+2} = d_{n+1}
        dm2 = d[-4] if len(d) >= 4 else 0.0
        nxt = (Ah2 * d[-2] + Bh3 * d[-3] + Ch4 * dm2) / ((m + 2) * (m + 1))
        n += 1
        d.append(nxt)
        if len(d) > 4:
            del d[0]
        val += nxt
        dval += n * nxt
        if abs(nxt) <= 1e-18 * (scale + abs(val)):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    else:
        raise ConvergenceError("Taylor continuation of Weber's equation did not converge")
    return val, dval / h


def _continue(p, waypoints, u, du, log_scale):
    """Integrate Weber's equation along a polyline.

    Returns (u, du, log_scale, amplification) where ``amplification`` bounds
    how much a relative perturbation anywhere on the path grows by the end
    point: max_k ||Phi(end, k)|| * ||v_k|| / ||v_end||.
    """
    transfers = []
    log_norms = []
    for z_from, z_to in zip(waypoints[:-1], waypoints[1:]):
        length = abs(z_to - z_from)
        if length == 0:
            continue
        direction = (z_to - z_from) / length
        done = 0.0
        z0 = z_from
        while done < length:
            hl = min(_step_size(p, z0), length - done)
            h = hl * direction
            a0, a1 = _taylor_step(p, z0, 1.0 + 0j, 0j, h)
            b0, b1 = _taylor_step(p, z0, 0j, 1.0 + 0j, h)
            log_norms.append(log_scale.real + math.log(math.hypot(abs(u), abs(du))))
            transfers.append((a0, b0, a1, b1))
            u, du = a0 * u + b0 * du, a1 * u + b1 * du
            done += hl
            z0 = z_from + done * direction if done < length else z_to
            s = max(abs(u), abs(du))
            if s == 0:
                raise ConvergenceError("solution vanished during continuation")
            if s > 1e50 or s < 1e-50:
                u /= s
                du /= s
                log_scale += math.log(s)
    log_end = log_scale.real + math.log(math.hypot(abs(u), abs(du)))
    # suffix products of the transfer matrices, kept normalised
    m00, m01, m10, m11 = 1.0, 0.0, 0.0, 1.0
    log_m = 0.0
    worst = 0.0
    for (a0, b0, a1, b1), ln_v in zip(reversed(transfers), reversed(log_norms)):
        m00, m01, m10, m11 = (m00 * a0 + m01 * a1, m00 * b0 + m01 * b1,
                              m10 * a0 + m11 * a1, m10 * b0 + m11 * b1)
        s = max(abs(m00), abs(m01), abs(m10), abs(m11))
        m00, m01, m10, m11 = m00 / s, m01 / s, m10 / s, m11 / s
        log_m += math.log(s)
        worst = max(worst, log_m + ln_v - log_end)
    return u, du, log_scale, math.exp(min(worst, 700.0)), len(transfers)


def _anchor(p, z):
    """Asymptotic (u, du, log_factor, rel_err) at z."""
    mant, logf, err = _asymptotic(p, z)
    mant1, logf1, err1 = _asymptotic(p + 1.0, z)
    du = 0.5 * z * mant - mant1 * cmath.exp(logf1 - logf) if (logf1 - logf).real < _LOG_MAX else None
    if du is None:
        return None
    return mant, du, logf, max(err, err1)


def _asymptotic_radius(p):
    """Smallest |z| at which the large-|z| expansions are trusted for order p."""
    return 2.0 * abs(p) + 6.0


def _anchor_on_ray(p, theta, r_min):
    unit = cmath.exp(1j * theta)
    radius = max(r_min, _asymptotic_radius(p))
    while radius <= _ANCHOR_MAX_RADIUS:
        a = _anchor(p, radius * unit)
        if a is not None and a[3] <= _ASYM_RTOL * 10:
            return radius * unit, a
        radius *= 1.15
    return None


def _arc(r, theta_from, theta_to):
    dtheta = theta_to - theta_from
    n = max(1, int(math.ceil(abs(dtheta) / 0.1)))
    return [r * cmath.exp(1j * (theta_from + dtheta * k / n)) for k in range(1, n + 1)]


def _candidate_paths(z):
    r = abs(z)
    theta = cmath.phase(z)
    rays = [theta] + [k * math.pi / 4 for k in (-3, -1, 1, 3)]
    seen = set()
    for i, phi in enumerate(rays):
        key = round(phi, 9)
        if i and (key in seen or abs(phi - theta) < 1e-9):
            continue
        seen.add(key)
        tail = [] if i == 0 else _arc(r, phi, theta)
        # outward from the origin along phi
        yield ("origin", phi, [0j, r * cmath.exp(1j * phi)] + tail)
        # inward from an asymptotic anchor on phi
        yield ("anchor", phi, [r * cmath.exp(1j * phi)] + tail)


_GOOD_ENOUGH = 1e-12
_ANCHOR_MAX_RADIUS = 80.0


def _continued(p, z):
    best = None
    r = abs(z)
    for kind, phi, path in _candidate_paths(z):
        if kind == "origin":
            u, du = _value_at_zero(p)
            init_err = 4 * _EPS
            logf = 0j
        else:
            found = _anchor_on_ray(p, phi, r)
            if found is None:
                continue
            za, (u, du, logf, init_err) = found
            path = [za] + path
        u, du, logf, amp, nsteps = _continue(p, path, u, du, logf)
        err = amp * (init_err + 16 * _EPS * math.sqrt(nsteps + 1))
        if best is None or err < best[0]:
            best = (err, u, du, logf)
        if err <= _GOOD_ENOUGH:
            return best[1], best[2], best[3]
    return None


def _maclaurin_mp(p, z):
    """Maclaurin series in multiprecision arithmetic (fallback route).

    Working precision is raised until the series' own cancellation leaves
    at least 16 significant digits.
    """
    import mpmath

    dps = 30
    while dps <= 1200:
        with mpmath.workdps(dps):
            pp = mpmath.mpc(p)
            zz = mpmath.mpc(z)
            sqpi = mpmath.sqrt(mpmath.pi)
            c0 = 2 ** (pp / 2) * sqpi * mpmath.rgamma((1 - pp) / 2)
            c1 = -(2 ** ((pp + 1) / 2)) * sqpi * mpmath.rgamma(-pp / 2)
            a = -(pp + mpmath.mpf(0.5))
            z2 = zz * zz
            t = [c0, c1 * zz, a * c0 * z2 / 2, a * c1 * zz * z2 / 6]
            total = t[0] + t[1] + t[2] + t[3]
            dtotal = (t[1] + 2 * t[2] + 3 * t[3]) / zz
            biggest = max(abs(x) for x in t)
            n = 3
            quiet = 0
            tiny = mpmath.mpf(10) ** (-dps)
            while True:
                n += 1
                tn = (a * t[-2] * z2 + t[-4] * z2 * z2 / 4) / (n * (n - 1))
                t.append(tn)
                del t[0]
                total += tn
                dtotal += n * tn / zz
                at = abs(tn)
                if at > biggest:
                    biggest = at
                if at <= tiny * abs(total) and n > abs(z2):
                    quiet += 1
                    if quiet >= 4:
                        break
                else:
                    quiet = 0
            if total != 0:
                lost = float(mpmath.log10(biggest / abs(total)))
                if dps - lost >= 20:
                    return complex(total), complex(dtotal)
                dps = int(lost) + 40
                continue
        dps *= 2
    raise ConvergenceError(f"D_{p}({z}): multiprecision series did not converge")


def _finish(mant, log_factor, what):
    if mant == 0:
        return 0j
    lg = log_factor + cmath.log(mant)
    if lg.real > _LOG_MAX:
        raise ConvergenceError(f"{what} overflows double precision")
    if lg.real < -745.0:
        return 0j
    return cmath.exp(lg)


def _evaluate(p, z, want_derivative):
    if z == 0:
        d0, d1 = _value_at_zero(p)
        return d0, d1

    n = _nonneg_integer_order(p)
    if n is not None:
        return _hermite(n, z)

    r = abs(z)
    if r <= 12.0:
        val, dval, err = _maclaurin(p, z)
        if err <= _SERIES_RTOL:
            return val, dval

    if r >= _asymptotic_radius(p):
        mant, logf, err = _asymptotic(p, z)
        if err <= _ASYM_RTOL * 100:
            val = _finish(mant, logf, f"D_{p}({z})")
            if not want_derivative:
                return val, None
            a = _anchor(p, z)
            if a is not None and a[3] <= _ASYM_RTOL * 100:
                return val, _finish(a[1], a[2], "derivative")

    if r > MAX_ABS_ARG:
        raise DomainError(
            f"|z| = {r:.6g} > {MAX_ABS_ARG} is only supported where the asymptotic expansion "
            f"converges (|z| >= {_asymptotic_radius(p):.4g} for p = {p})"
        )
    cont = _continued(p, z)
    if cont is not None:
        u, du, logf = cont
        return _finish(u, logf, f"D_{p}({z})"), _finish(du, logf, f"D'_{p}({z})")
    return _maclaurin_mp(p, z)


def pcf_d(p, z):
    """Parabolic cylinder function D_p(z).

    Supported region: |p| <= 50 and |z| <= 50; arguments up to |z| = 1e4 are
    accepted where the asymptotic expansion converges to full precision.

    >>> abs(pcf_d(0, 1.5) - cmath.exp(-1.5**2 / 4)) < 1e-15
    True
    """
    p, z = _check_args(p, z)
    val, _ = _evaluate(p, z, want_derivative=False)
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise ConvergenceError(f"D_{p}({z}) is not finite")
    return val


def pcf_d_and_derivative(p, z):
    """(D_p(z), dD_p/dz)."""
    p, z = _check_args(p, z)
    val, dval = _evaluate(p, z, want_derivative=True)
    for v in (val, dval):
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ConvergenceError(f"D_{p}({z}) is not finite")
    return val, dval
