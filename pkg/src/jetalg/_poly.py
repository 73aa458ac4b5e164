"""Sparse multivariate polynomials over Q.

A polynomial is a plain dict mapping a packed monomial to a nonzero
``gmpy2.mpq`` coefficient.  A monomial packs the exponent of generator ``i``
into bits ``[16*i, 16*i + 16)`` of a Python int, so multiplying monomials is
integer addition and comparing them as ints is a valid (lexicographic)
monomial order with the highest generator index most significant.
"""

from __future__ import annotations

import heapq
from functools import reduce

import gmpy2
from gmpy2 import mpq

BITS = 16
FIELD = (1 << BITS) - 1

ZERO_POLY: dict = {}
ONE = mpq(1)


def mono_items(m):
    """(generator index, exponent) pairs of a monomial, low index first."""
    out = []
    while m:
        low = (m & -m).bit_length() - 1
        i = low // BITS
        off = i * BITS
        e = (m >> off) & FIELD
        out.append((i, e))
        m -= e << off
    return out


def mono_exp(m, i):
    return (m >> (i * BITS)) & FIELD


def gen_mono(i, e=1):
    return e << (i * BITS)


def mono_divides(a, b):
    """True if monomial ``a`` divides monomial ``b``."""
    if a > b:
        return False
    for i, e in mono_items(a):
        if mono_exp(b, i) < e:
            return False
    return True


def field_mask(i):
    return FIELD << (i * BITS)


def p_const(c):
    c = mpq(c)
    return {0: c} if c else {}


def p_gen(i):
    return {gen_mono(i): ONE}


def p_occupancy(a):
    """OR of all monomials; field ``i`` is nonzero iff generator ``i`` occurs."""
    m = 0
    for k in a:
        m |= k
    return m


def p_gens(a):
    return [i for i, _ in mono_items(p_occupancy(a))]


def p_is_const(a):
    return not a or (len(a) == 1 and 0 in a)


def p_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    r = dict(a)
    for m, c in b.items():
        v = r.get(m)
        if v is None:
            r[m] = c
        else:
            v = v + c
            if v:
                r[m] = v
            else:
                del r[m]
    return r


def p_sub(a, b):
    r = dict(a)
    for m, c in b.items():
        v = r.get(m)
        if v is None:
            r[m] = -c
        else:
            v = v - c
            if v:
                r[m] = v
            else:
                del r[m]
    return r


def p_neg(a):
    return {m: -c for m, c in a.items()}


def p_scale(a, c):
    if not c:
        return {}
    if c == 1:
        return a
    return {m: v * c for m, v in a.items()}


def p_mul_term(a, mono, c):
    return {m + mono: v * c for m, v in a.items()}


def p_mul(a, b):
    if not a or not b:
        return {}
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 1:
        (mb, cb), = b.items()
        if mb == 0:
            return p_scale(a, cb)
        return {m + mb: v * cb for m, v in a.items()}
    r = {}
    get = r.get
    items_a = list(a.items())
    for mb, cb in b.items():
        for ma, ca in items_a:
            k = ma + mb
            v = get(k)
            r[k] = ca * cb if v is None else v + ca * cb
    return {m: c for m, c in r.items() if c}


def p_sum(polys):
    r = {}
    get = r.get
    for p in polys:
        for m, c in p.items():
            v = get(m)
            r[m] = c if v is None else v + c
    return {m: c for m, c in r.items() if c}


def p_pow(a, n):
    if n == 0:
        return {0: ONE}
    if len(a) == 1:
        (m, c), = a.items()
        return {m * n: c ** n}
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else p_mul(result, base)
        n >>= 1
        if n:
            base = p_mul(base, base)
    return result


def p_diff(a, i):
    off = i * BITS
    unit = 1 << off
    r = {}
    for m, c in a.items():
        e = (m >> off) & FIELD
        if e:
            r[m - unit] = c * e
    return r


def p_degree(a, i):
    off = i * BITS
    return max(((m >> off) & FIELD for m in a), default=0)


def p_min_exp(a, i):
    off = i * BITS
    return min(((m >> off) & FIELD for m in a), default=0)


def p_collect(a, i):
    """Split ``a`` by powers of generator ``i``: {e: coefficient poly}."""
    off = i * BITS
    out = {}
    for m, c in a.items():
        e = (m >> off) & FIELD
        out.setdefault(e, {})[m - (e << off)] = c
    return out


def p_split(a, mask):
    """Group terms by the part of the monomial selected by ``mask``."""
    out = {}
    for m, c in a.items():
        k = m & mask
        out.setdefault(k, {})[m - k] = c
    return out


def p_divexact(a, b):
    """Quotient ``a / b`` if ``b`` divides ``a`` exactly, else None."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if not a:
        return {}
    if len(b) == 1:
        (mb, cb), = b.items()
        out = {}
        for m, c in a.items():
            if not mono_divides(mb, m):
                return None
            out[m - mb] = c / cb
        return out
    lb = max(b)
    lc = b[lb]
    rest = [(m, c) for m, c in b.items() if m != lb]
    r = dict(a)
    heap = [-m for m in r]
    heapq.heapify(heap)
    q = {}
    while heap:
        m = -heapq.heappop(heap)
        c = r.pop(m, None)
        if c is None:
            continue
        if m < lb or not mono_divides(lb, m):
            return None
        qm = m - lb
        qc = c / lc
        q[qm] = qc
        for mb, cb in rest:
            t = qm + mb
            v = r.get(t)
            if v is None:
                r[t] = -qc * cb
                heapq.heappush(heap, -t)
            else:
                v = v - qc * cb
                if v:
                    r[t] = v
                else:
                    del r[t]
    return q


def p_content(a):
    """Rational content: ``a == content * primitive`` with integer primitive."""
    nums = [c.numerator for c in a.values()]
    dens = [c.denominator for c in a.values()]
    g = reduce(gmpy2.gcd, nums)
    l = reduce(gmpy2.lcm, dens)
    return mpq(g, l)


def p_eval(a, values):
    """Evaluate with ``values[i]`` for generator ``i``; values support + and *."""
    powers = {}
    total = 0
    for m, c in a.items():
        t = c
        for i, e in mono_items(m):
            key = (i, e)
            p = powers.get(key)
            if p is None:
                p = values[i] ** e
                powers[key] = p
            t = t * p
        total = total + t
    return total
