"""Small shared helpers: scalar minimization and CSV formatting."""

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo, hi, tol=1e-12, max_iters=200):
    """Minimize a scalar function on [lo, hi] by golden-section search.

    Intended for functions that are convex (or at least unimodal) on the
    interval; the bracket shrinks below `tol`. Endpoints are compared
    explicitly so boundary minima are returned exactly. Ties go to the
    leftmost candidate.
    """
    if hi < lo:
        raise ValueError("empty interval")
    a, b = lo, hi
    c = b - (b - a) * _INVPHI
    d = a + (b - a) * _INVPHI
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol and it < max_iters:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INVPHI
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INVPHI
            fd = f(d)
        it += 1
    mid = 0.5 * (a + b)
    best_x, best_f = lo, f(lo)
    for x in (mid, hi):
        fx = f(x)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def fmt(value):
    """Render a CSV field; floats use 17 significant digits (round-trip exact)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def csv_lines(header, rows):
    """Build CSV text: comma-separated, UNIX newlines, header first."""
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(fmt(v) for v in row))
    return "\n".join(out) + "\n"
