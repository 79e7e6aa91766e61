"""Permutation groups with a deterministic base and strong generating set.

Permutations act on 0-based points internally and are stored as image tuples;
all text I/O (cycle and image-list notation) is 1-based.  The Schreier-Sims
construction here is the plain deterministic one: build the stabilizer chain,
then audit every Schreier generator and repeat until the audit adds nothing.
That is slow for large degrees but exact and reproducible, which is what the
order assertions need; the groups in this package act on at most 16 points.
"""

from __future__ import annotations

import re
from math import gcd

from .engine import GroupEngine, SubgroupHandle
from .errors import InputError


def identity_perm(degree):
    return tuple(range(degree))


def p_mul(g, h):
    """Apply g first, then h."""
    return tuple(h[x] for x in g)


def p_inv(g):
    out = [0] * len(g)
    for i, j in enumerate(g):
        out[j] = i
    return tuple(out)


def is_identity(g):
    return all(i == j for i, j in enumerate(g))


def perm_order(g):
    seen = [False] * len(g)
    out = 1
    for i in range(len(g)):
        if seen[i] or g[i] == i:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = g[j]
            length += 1
        out = out * length // gcd(out, length)
    return out


def parse_permutation(text, degree):
    """Cycle notation `(1,2)(3,4)` or image list `[2,1,4,3]`, 1-based."""
    text = text.strip()
    if not text or text == "()":
        return identity_perm(degree)
    if text.startswith("["):
        try:
            images = [int(t) for t in text.strip("[]").replace(",", " ").split()]
        except ValueError:
            raise InputError(f"bad image list {text!r}")
        if sorted(images) != list(range(1, degree + 1)):
            raise InputError(f"image list {text!r} is not a permutation of 1..{degree}")
        return tuple(x - 1 for x in images)
    if not re.fullmatch(r"(\(\s*\d+(\s*,\s*\d+)*\s*\))+", text):
        raise InputError(f"bad cycle notation {text!r}")
    perm = list(range(degree))
    for cyc in re.findall(r"\(([^()]*)\)", text):
        pts = [int(t) - 1 for t in cyc.replace(",", " ").split()]
        if any(not 0 <= x < degree for x in pts):
            raise InputError(f"point out of range 1..{degree} in {text!r}")
        if len(set(pts)) != len(pts):
            raise InputError(f"repeated point in cycle {cyc!r}")
        step = {pts[k]: pts[(k + 1) % len(pts)] for k in range(len(pts))}
        perm = [step.get(x, x) for x in perm]
    return tuple(perm)


def format_permutation(g):
    seen = set()
    out = []
    for i in range(len(g)):
        if i in seen or g[i] == i:
            continue
        cyc = [i]
        j = g[i]
        while j != i:
            seen.add(j)
            cyc.append(j)
            j = g[j]
        out.append("(" + ",".join(str(x + 1) for x in cyc) + ")")
    return "".join(out) or "()"


class _Level:
    __slots__ = ("b", "gens", "orbit")

    def __init__(self, b, degree):
        self.b = b
        self.gens = []
        self.orbit = {b: identity_perm(degree)}


class BSGSGroup(GroupEngine):
    """Permutation group with base, strong generating set, and transversals."""

    def __init__(self, generators, degree):
        if degree < 1:
            raise InputError("degree must be >= 1")
        gens = []
        for g in generators:
            g = tuple(g)
            if len(g) != degree:
                raise InputError(
                    f"generator degree {len(g)} does not match group degree {degree}")
            if sorted(g) != list(range(degree)):
                raise InputError(f"{g!r} is not a permutation")
            if not is_identity(g) and g not in gens:
                gens.append(g)
        self.degree = degree
        self.input_gens = gens
        self._levels = []
        self._build()

    # -- construction -------------------------------------------------------

    def _gens_for(self, i):
        """Strong generators fixing the base prefix b_0..b_{i-1}."""
        return [g for lv in self._levels[i:] for g in lv.gens]

    def _rebuild_orbit(self, i):
        lv = self._levels[i]
        gens = self._gens_for(i)
        orbit = {lv.b: identity_perm(self.degree)}
        frontier = [lv.b]
        while frontier:
            pt = frontier.pop(0)
            u = orbit[pt]
            for s in gens:
                q = s[pt]
                if q not in orbit:
                    orbit[q] = p_mul(u, s)
                    frontier.append(q)
        lv.orbit = orbit

    def _sift_from(self, g, start):
        for i in range(start, len(self._levels)):
            lv = self._levels[i]
            pt = g[lv.b]
            if pt == lv.b:
                continue
            u = lv.orbit.get(pt)
            if u is None:
                return g, i
            g = p_mul(g, p_inv(u))
        return g, len(self._levels)

    def _add_gen_at(self, g, i):
        if i == len(self._levels):
            b = min(x for x in range(self.degree) if g[x] != x)
            self._levels.append(_Level(b, self.degree))
        self._levels[i].gens.append(g)
        for k in range(i + 1):
            self._rebuild_orbit(k)

    def _build(self):
        for g in self.input_gens:
            h, j = self._sift_from(g, 0)
            if not is_identity(h):
                self._add_gen_at(h, j)
        # audit every Schreier generator until a full pass adds nothing
        while True:
            added = False
            for i in range(len(self._levels)):
                lv = self._levels[i]
                gens = self._gens_for(i)
                for pt in sorted(lv.orbit):
                    u = lv.orbit[pt]
                    for s in gens:
                        v = lv.orbit.get(s[pt])
                        if v is None:
                            # orbit is stale relative to a deeper addition
                            self._rebuild_orbit(i)
                            v = lv.orbit[s[pt]]
                        schreier = p_mul(p_mul(u, s), p_inv(v))
                        h, j = self._sift_from(schreier, i + 1)
                        if not is_identity(h):
                            self._add_gen_at(h, j)
                            added = True
            if not added:
                return

    # -- queries --------------------------------------------------------------

    def base(self):
        return [lv.b for lv in self._levels]

    def strong_generators(self):
        out = []
        for lv in self._levels:
            for g in lv.gens:
                if g not in out:
                    out.append(g)
        return out

    def order(self):
        n = 1
        for lv in self._levels:
            n *= len(lv.orbit)
        return n

    def contains(self, g):
        g = tuple(g)
        if len(g) != self.degree:
            raise InputError("degree mismatch in membership test")
        h, _ = self._sift_from(g, 0)
        return is_identity(h)

    def elements(self):
        """Every element, via the transversal product; meant for small orders."""
        out = [identity_perm(self.degree)]
        for lv in reversed(self._levels):
            out = [p_mul(x, u) for x in out for u in lv.orbit.values()]
        return out

    # -- GroupEngine interface --------------------------------------------------

    def identity(self):
        return identity_perm(self.degree)

    def generators(self):
        return list(self.input_gens)

    def multiply(self, u, v):
        if len(u) != self.degree or len(v) != self.degree:
            raise InputError("degree mismatch")
        return p_mul(u, v)

    def inverse(self, u):
        return p_inv(u)

    def element_order(self, u):
        return perm_order(u)

    def subgroup(self, gens):
        gens = [tuple(g) for g in gens]
        for g in gens:
            if not self.contains(g):
                raise InputError("subgroup generator is not a member of the parent group")
        return PermSubgroup(self, gens)

    def __repr__(self):
        return f"BSGSGroup(degree={self.degree}, order={self.order()})"


class PermSubgroup(SubgroupHandle):
    def __init__(self, parent, gens):
        self._parent = parent
        seen = []
        for g in gens:
            if not is_identity(g) and g not in seen:
                seen.append(g)
        self._gens = seen
        self._bsgs = BSGSGroup(seen, parent.degree)

    @property
    def engine(self):
        return self._parent

    def order(self):
        return self._bsgs.order()

    def contains(self, x):
        return self._bsgs.contains(x)

    def gens(self):
        return list(self._gens)

    def bsgs(self):
        return self._bsgs

    def __repr__(self):
        return f"PermSubgroup(order={self.order()})"


def schreier_sims(gens, degree=None):
    """Build a verified BSGSGroup from a generator list."""
    gens = [tuple(g) for g in gens]
    if degree is None:
        if not gens:
            raise InputError("cannot infer the degree of an empty generator list")
        degree = len(gens[0])
    return BSGSGroup(gens, degree)


def sylow2_sym(m):
    """Sylow 2-subgroup of Sym(m) for m = 2^k: the iterated wreath product.

    Generators swap adjacent blocks of size 1, 2, 4, ... pointwise; the order
    is 2^(m-1).
    """
    if m < 2 or m & (m - 1):
        raise InputError(f"{m} is not a power of two >= 2")
    gens = []
    half = 1
    while half < m:
        g = list(range(m))
        for i in range(half):
            g[i], g[i + half] = g[i + half], g[i]
        gens.append(tuple(g))
        half *= 2
    return BSGSGroup(gens, m)
