"""Power-commutator presentations of finite p-groups with exact arithmetic.

A presentation on generators a1..an over the prime p stores
    a_i^p           = power tail   (a word in generators with index > i)
    [a_j, a_i]      = commutator tail for j > i (a word in index > j);
                      an absent pair means the generators commute.
Every group element has the unique normal form a1^e1 ... an^en with
0 <= e_i < p; arithmetic rewrites arbitrary words into that form by
collection from the left.

Conventions, used everywhere in this package:
    [x, y] = x^-1 y^-1 x y          and    a_j a_i = a_i a_j [a_j, a_i]  (j > i).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .engine import GroupEngine, SubgroupHandle
from .errors import (
    CollectionLimitError,
    InconsistentPresentationError,
    InputError,
    PresentationParseError,
)

# Elementary-step tripwire: consistent weighted presentations collect far below
# this; hitting it means a bad input presentation.
DEFAULT_STEP_CAP = 10**8


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    d = 3
    while d * d <= m:
        if m % d == 0:
            return False
        d += 2
    return True


def inverse_mod(a: int, p: int) -> int:
    return pow(a, p - 2, p)


def solve_affine_mod_p(rows, nvars, p):
    """Solve {a . t + c = 0 mod p} for t; rows are lists of length nvars+1.

    Returns None if inconsistent, else (particular, nullspace basis).
    """
    mat = [r[:] for r in rows]
    pivots = []
    rpos = 0
    for col in range(nvars):
        piv = next((r for r in range(rpos, len(mat)) if mat[r][col] % p), None)
        if piv is None:
            continue
        mat[rpos], mat[piv] = mat[piv], mat[rpos]
        inv = inverse_mod(mat[rpos][col] % p, p)
        mat[rpos] = [(v * inv) % p for v in mat[rpos]]
        for r in range(len(mat)):
            if r != rpos and mat[r][col] % p:
                f = mat[r][col]
                mat[r] = [(a - f * b) % p for a, b in zip(mat[r], mat[rpos])]
        pivots.append(col)
        rpos += 1
        if rpos == len(mat):
            break
    for r in range(rpos, len(mat)):
        if mat[r][nvars] % p and not any(v % p for v in mat[r][:nvars]):
            return None
    part = [0] * nvars
    for row, col in enumerate(pivots):
        part[col] = (-mat[row][nvars]) % p
    basis = []
    for f in range(nvars):
        if f in pivots:
            continue
        vec = [0] * nvars
        vec[f] = 1
        for row, col in enumerate(pivots):
            vec[col] = (-mat[row][f]) % p
        basis.append(vec)
    return part, basis


class ExponentWord(tuple):
    """Normal-form group element: the exponent vector (e1, ..., en)."""

    __slots__ = ()

    def lead(self):
        """0-based index of the first nonzero exponent, or None for identity."""
        for i, e in enumerate(self):
            if e:
                return i
        return None

    def syllables(self):
        return [(i, e) for i, e in enumerate(self) if e]

    def __repr__(self):
        body = " ".join(f"a{i + 1}^{e}" for i, e in enumerate(self) if e)
        return f"<{body or '1'}>"


def _as_vector(tail, n, p, what):
    exps = list(tail)
    if len(exps) != n:
        raise InputError(f"{what}: tail has length {len(exps)}, expected rank {n}")
    out = []
    for e in exps:
        if not isinstance(e, int):
            raise InputError(f"{what}: non-integer exponent {e!r}")
        out.append(e % p)
    return tuple(out)


class PcPresentation(GroupEngine):
    """A consistent-or-candidate pc presentation; also the pc GroupEngine.

    Immutable after construction; all arithmetic is pure, so one instance can
    be shared freely across threads.
    """

    def __init__(self, p, n, power_tails=None, commutator_tails=None, weights=None,
                 step_cap=DEFAULT_STEP_CAP):
        if not is_prime(p):
            raise InputError(f"p = {p} is not prime")
        if n < 0:
            raise InputError(f"rank n = {n} must be >= 0")
        self.p = p
        self.n = n
        self._step_cap = step_cap
        pow_vec = [None] * n
        for i, tail in (power_tails or {}).items():
            if not 1 <= i <= n:
                raise InputError(f"power tail index {i} out of range 1..{n}")
            vec = _as_vector(tail, n, p, f"pow {i}")
            if any(vec[k] for k in range(i)):
                raise InputError(f"pow {i}: tail must be supported on indices > {i}")
            pow_vec[i - 1] = vec if any(vec) else None
        comm_vec = [[None] * n for _ in range(n)]
        for (j, i), tail in (commutator_tails or {}).items():
            if not (1 <= i < j <= n):
                raise InputError(f"comm pair ({j}, {i}) must satisfy 1 <= i < j <= n")
            vec = _as_vector(tail, n, p, f"comm {j} {i}")
            if any(vec[k] for k in range(j)):
                raise InputError(f"comm {j} {i}: tail must be supported on indices > {j}")
            comm_vec[j - 1][i - 1] = vec if any(vec) else None
        self._pow_vec = tuple(pow_vec)
        self._comm_vec = tuple(tuple(row) for row in comm_vec)
        if weights is not None:
            weights = tuple(weights)
            if len(weights) != n or any(w < 1 for w in weights):
                raise InputError("weights must assign every generator a weight >= 1")
            if any(weights[i] > weights[i + 1] for i in range(n - 1)):
                raise InputError("generator ordering must be weight-compatible")
            for j in range(n):
                for i in range(j):
                    vec = self._comm_vec[j][i]
                    if vec is None:
                        continue
                    need = weights[j] + weights[i]
                    for k, e in enumerate(vec):
                        if e and weights[k] < need:
                            raise InputError(
                                f"comm {j + 1} {i + 1}: tail touches weight "
                                f"{weights[k]} < {need}")
        self.weights = weights
        # syllable forms of the tails, for the collector
        self._pow_syll = tuple(
            tuple((k, e) for k, e in enumerate(vec) if e) if vec is not None else None
            for vec in self._pow_vec)
        self._comm_syll = tuple(
            tuple(tuple((k, e) for k, e in enumerate(vec) if e) if vec is not None else None
                  for vec in row)
            for row in self._comm_vec)
        self._id = ExponentWord((0,) * n)
        self._gens = tuple(
            ExponentWord(tuple(1 if k == i else 0 for k in range(n))) for i in range(n))
        self._inv_cache = {}
        self._consistent = None

    # -- raw tail access (1-based), used by io/tests/enumeration ------------

    def power_tail(self, i):
        vec = self._pow_vec[i - 1]
        return ExponentWord(vec) if vec is not None else self._id

    def commutator_tail(self, j, i):
        vec = self._comm_vec[j - 1][i - 1]
        return ExponentWord(vec) if vec is not None else self._id

    def key(self):
        """Total-order key; 'lexicographically least presentation' uses this."""
        zero = (0,) * self.n
        return (self.p, self.n,
                tuple(v if v is not None else zero for v in self._pow_vec),
                tuple(tuple(v if v is not None else zero for v in row)
                      for row in self._comm_vec))

    # -- collection ----------------------------------------------------------

    def _collect(self, c, items):
        """Collect `prefix-in-normal-form c (list, consumed)` * `items` (syllables)."""
        p = self.p
        n = self.n
        comm = self._comm_syll
        powt = self._pow_syll
        stack = [ge for ge in reversed(items) if ge[1]]
        push = stack.append
        steps = 0
        cap = self._step_cap
        while stack:
            steps += 1
            if steps > cap:
                raise CollectionLimitError(
                    f"collection exceeded {cap} elementary steps; "
                    "presentation is inconsistent or not weight-compatible")
            g, e = stack.pop()
            # largest blocking letter above g that does not commute with a_g
            j = n - 1
            tail_jg = None
            while j > g:
                if c[j]:
                    t = comm[j][g]
                    if t is not None:
                        tail_jg = t
                        break
                j -= 1
            if j <= g:
                # merge a_g^e into position g (everything above commutes with it)
                t = c[g] + e
                if t < p:
                    c[g] = t
                else:
                    q, r = divmod(t, p)
                    c[g] = r
                    ptail = powt[g]
                    if ptail is not None:
                        while q:
                            q -= 1
                            for s in reversed(ptail):
                                push(s)
            else:
                # peel one a_j:   a_j a_g -> a_g a_j [a_j, a_g]
                # letters above j commute with a_g; they go back on the stack
                c[j] -= 1
                if e > 1:
                    pending = [(g, 1), (j, 1), *tail_jg, (g, e - 1)]
                else:
                    pending = [(g, 1), (j, 1), *tail_jg]
                for k in range(j + 1, n):
                    if c[k]:
                        pending.append((k, c[k]))
                        c[k] = 0
                for s in reversed(pending):
                    push(s)
        return ExponentWord(c)

    # -- GroupEngine interface ------------------------------------------------

    def order(self):
        return self.p ** self.n

    def element_count(self):
        """Order of the presented group (p^n for a consistent presentation)."""
        return self.order()

    def identity(self):
        return self._id

    def generators(self):
        return list(self._gens)

    def generator(self, i):
        """1-based generator access."""
        if not 1 <= i <= self.n:
            raise InputError(f"generator index {i} out of range 1..{self.n}")
        return self._gens[i - 1]

    def _check_operand(self, u):
        if len(u) != self.n:
            raise InputError(f"operand of rank {len(u)} in a rank-{self.n} presentation")

    def multiply(self, u, v):
        self._check_operand(u)
        self._check_operand(v)
        return self._collect(list(u), v.syllables() if isinstance(v, ExponentWord)
                             else [(i, e) for i, e in enumerate(v) if e])

    def inverse(self, u):
        self._check_operand(u)
        cached = self._inv_cache.get(u)
        if cached is not None:
            return cached
        p = self.p
        w = ExponentWord(tuple(u))
        exps = [0] * self.n
        for i in range(self.n):
            e = w[i]
            if e:
                f = p - e
                exps[i] = f
                w = self._collect(list(w), [(i, f)])
        v = ExponentWord(tuple(exps))
        self._inv_cache[u] = v
        return v

    def element_order(self, u):
        self._check_operand(u)
        k = 0
        w = u
        while w != self._id:
            w = self.power(w, self.p)
            k += 1
        return self.p ** k

    def prime_power(self):
        if self.n == 0:
            raise InputError("trivial group has no defining prime")
        return self.p, self.n

    def subgroup(self, gens):
        return PcSubgroup(self, gens)

    def normalize(self, word):
        """Normal form of a word given as (1-based generator, exponent) pairs.

        Exponents may be any integers; negative exponents use inverses.
        """
        res = self._id
        modulus = self.p ** self.n if self.n else 1
        for item in word:
            try:
                i, e = item
            except (TypeError, ValueError):
                raise InputError(f"word item {item!r} is not a (generator, exponent) pair")
            if not isinstance(i, int) or not 1 <= i <= self.n:
                raise InputError(f"generator index {i!r} out of range 1..{self.n}")
            if not isinstance(e, int):
                raise InputError(f"exponent {e!r} is not an integer")
            e %= modulus
            if e:
                res = self._collect(list(res), [(i - 1, e)])
        return res

    def word(self, exps):
        """Validate an exponent vector into an ExponentWord of this presentation."""
        vec = _as_vector(exps, self.n, self.p, "word")
        return ExponentWord(vec)

    # -- consistency -----------------------------------------------------------

    def consistency_check(self):
        """Run the full overlap test set; empty list means consistent."""
        violations = []
        n = self.n
        p = self.p

        def run(kind, indices, lhs_word, rhs_word):
            try:
                lhs = self._collect([0] * n, lhs_word)
                rhs = self._collect([0] * n, rhs_word)
            except CollectionLimitError:
                violations.append(ConsistencyViolation(kind, indices, None, None))
                return
            if lhs != rhs:
                violations.append(ConsistencyViolation(kind, indices, lhs, rhs))

        def comm_syll(j, i):
            t = self._comm_syll[j][i]
            return list(t) if t is not None else []

        def pow_syll(i):
            t = self._pow_syll[i]
            return list(t) if t is not None else []

        for k in range(2, n):
            for j in range(1, k):
                for i in range(j):
                    # a_k (a_j a_i)  vs  (a_k a_j) a_i
                    run("assoc", (k + 1, j + 1, i + 1),
                        [(k, 1), (i, 1), (j, 1), *comm_syll(j, i)],
                        [(j, 1), (k, 1), *comm_syll(k, j), (i, 1)])
        for j in range(1, n):
            for i in range(j):
                # (a_j^p) a_i  vs  a_j^{p-1} (a_j a_i)
                run("pow_right", (j + 1, i + 1),
                    [*pow_syll(j), (i, 1)],
                    [(j, p - 1), (i, 1), (j, 1), *comm_syll(j, i)])
                # a_j (a_i^p)  vs  (a_j a_i) a_i^{p-1}
                run("pow_left", (j + 1, i + 1),
                    [(j, 1), *pow_syll(i)],
                    [(i, 1), (j, 1), *comm_syll(j, i), (i, p - 1)])
        for i in range(n):
            # (a_i^p) a_i  vs  a_i (a_i^p)
            run("pow_self", (i + 1,),
                [*pow_syll(i), (i, 1)],
                [(i, 1), *pow_syll(i)])
        self._consistent = not violations
        return violations

    def is_consistent(self):
        if self._consistent is None:
            self.consistency_check()
        return self._consistent

    def checked(self):
        """Return self, raising if the presentation is inconsistent."""
        if not self.is_consistent():
            raise InconsistentPresentationError(
                "presentation fails the consistency check")
        return self

    def __reduce__(self):
        pows = {i + 1: vec for i, vec in enumerate(self._pow_vec) if vec is not None}
        comms = {(j + 1, i + 1): self._comm_vec[j][i]
                 for j in range(self.n) for i in range(j)
                 if self._comm_vec[j][i] is not None}
        return (PcPresentation, (self.p, self.n, pows, comms, self.weights))

    def truncated(self, r):
        """Cached quotient presentation on a1..ar."""
        cache = getattr(self, "_trunc_cache", None)
        if cache is None:
            cache = self._trunc_cache = {}
        if r not in cache:
            cache[r] = self if r == self.n else self.truncate(r)
        return cache[r]

    def truncate(self, r):
        """Quotient presentation on a1..ar (kills the normal tail subgroup)."""
        if not 0 <= r <= self.n:
            raise InputError(f"truncation rank {r} out of range 0..{self.n}")
        pows = {}
        comms = {}
        for i in range(1, r + 1):
            vec = self._pow_vec[i - 1]
            if vec is not None and any(vec[:r]):
                pows[i] = vec[:r]
        for j in range(2, r + 1):
            for i in range(1, j):
                vec = self._comm_vec[j - 1][i - 1]
                if vec is not None and any(vec[:r]):
                    comms[(j, i)] = vec[:r]
        w = self.weights[:r] if self.weights is not None else None
        return PcPresentation(self.p, r, pows, comms, weights=w)

    def __repr__(self):
        return f"PcPresentation(p={self.p}, n={self.n})"


@dataclass(frozen=True)
class ConsistencyViolation:
    kind: str
    indices: tuple
    lhs: ExponentWord | None
    rhs: ExponentWord | None

    def __str__(self):
        names = {
            "assoc": "overlap (a{0} a{1}) a{2} = a{0} (a{1} a{2})",
            "pow_right": "overlap (a{0}^p) a{1} = a{0}^(p-1) (a{0} a{1})",
            "pow_left": "overlap a{0} (a{1}^p) = (a{0} a{1}) a{1}^(p-1)",
            "pow_self": "overlap (a{0}^p) a{0} = a{0} (a{0}^p)",
        }
        if self.lhs is None and self.rhs is None:
            head = "collection diverged in " + names[self.kind].format(*self.indices)
        else:
            head = names[self.kind].format(*self.indices)
            head += f": {self.lhs!r} != {self.rhs!r}"
        return head


class PcSubgroup(SubgroupHandle):
    """Subgroup of a pc group via an echelonized induced generating sequence.

    One generator per occupied leading index, leading coefficient 1; sifting
    gives O(n)-multiplication membership tests and the exact order p^#slots.
    """

    def __init__(self, pres, gens):
        self._pres = pres
        self._slots = [None] * pres.n
        self._pow_cache = {}
        pend = []
        for g in gens:
            pres._check_operand(g)
            pend.append(g if isinstance(g, ExponentWord) else ExponentWord(tuple(g)))
        while pend:
            w = pend.pop()
            r = self.sift(w)
            lead = r.lead()
            if lead is None:
                continue
            lam = r[lead]
            if lam != 1:
                r = pres.power(r, inverse_mod(lam, pres.p))
            self._slots[lead] = r
            others = [x for x in self._slots if x is not None and x is not r]
            pend.append(pres.power(r, pres.p))
            for x in others:
                pend.append(pres.multiply(r, x))
                pend.append(pres.multiply(x, r))

    @property
    def engine(self):
        return self._pres

    def sift(self, w):
        """Reduce w by the echelon; identity residue means membership."""
        pres = self._pres
        p = pres.p
        while True:
            lead = w.lead()
            if lead is None:
                return w
            s = self._slots[lead]
            if s is None:
                return w
            w = pres.multiply(self._slot_power(lead, p - w[lead]), w)

    def _slot_power(self, lead, k):
        key = (lead, k)
        v = self._pow_cache.get(key)
        if v is None:
            v = self._pres.power(self._slots[lead], k)
            self._pow_cache[key] = v
        return v

    def order(self):
        return self._pres.p ** sum(1 for s in self._slots if s is not None)

    def contains(self, x):
        self._pres._check_operand(x)
        return self.sift(x if isinstance(x, ExponentWord) else ExponentWord(tuple(x))).lead() is None

    def gens(self):
        return [s for s in self._slots if s is not None]

    def leads(self):
        """Occupied leading indices (0-based), ascending."""
        return [i for i, s in enumerate(self._slots) if s is not None]

    def elements(self):
        """All elements; intended for small subgroups (tests, fingerprints)."""
        from itertools import product as iproduct
        pres = self._pres
        slots = self.gens()
        out = []
        for exps in iproduct(range(pres.p), repeat=len(slots)):
            w = pres.identity()
            for s, e in zip(slots, exps):
                if e:
                    w = pres.multiply(w, pres.power(s, e))
            out.append(w)
        return out

    def __repr__(self):
        return f"PcSubgroup(order=p^{sum(1 for s in self._slots if s is not None)})"


# -- sample presentations ------------------------------------------------------


def heisenberg(p):
    """Unitriangular 3x3 group over F_p: rank 3, [a2, a1] = a3, exponent p (p odd)."""
    tails = {(2, 1): (0, 0, 1)}
    return PcPresentation(p, 3, {}, tails, weights=(1, 1, 2))


def extraspecial_p2(p, u=1, v=0):
    """Extraspecial order-p^3 presentation with a1^p = a3^u, a2^p = a3^v."""
    pows = {}
    if u % p:
        pows[1] = (0, 0, u % p)
    if v % p:
        pows[2] = (0, 0, v % p)
    return PcPresentation(p, 3, pows, {(2, 1): (0, 0, 1)}, weights=(1, 1, 2))


def abelian(p, n, cyclic_chain=()):
    """Abelian rank-n presentation; indices in cyclic_chain get a_i^p = a_{i+1}."""
    pows = {}
    for i in cyclic_chain:
        if not 1 <= i < n:
            raise InputError("cyclic_chain indices must satisfy 1 <= i < n")
        pows[i] = tuple(1 if k == i else 0 for k in range(n))
    return PcPresentation(p, n, pows, {})


# -- text format ---------------------------------------------------------------

_WORD_FACTOR = re.compile(r"^a(\d+)(?:\^(-?\d+))?$")


def _parse_word(text, n, p, line_no):
    text = text.strip()
    if text == "1":
        return (0,) * n
    exps = [0] * n
    for factor in text.split():
        m = _WORD_FACTOR.match(factor)
        if not m:
            raise PresentationParseError(f"bad word factor {factor!r}", line_no)
        k = int(m.group(1))
        e = int(m.group(2)) if m.group(2) is not None else 1
        if not 1 <= k <= n:
            raise PresentationParseError(
                f"generator a{k} out of range 1..{n}", line_no)
        exps[k - 1] = (exps[k - 1] + e) % p
    return tuple(exps)


def parse_presentation(text):
    """Parse the line-oriented presentation format.

    Statements: `p <prime>`, `n <rank>`, `pow <i> = <word>`,
    `comm <j> <i> = <word>`; `<word>` is whitespace-separated `a<k>^<e>`
    factors or the literal `1`.  `#` starts a comment.
    """
    p = None
    n = None
    pows = {}
    comms = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        head = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        if head == "p":
            if p is not None:
                raise PresentationParseError("duplicate `p` statement", line_no)
            try:
                p = int(rest)
            except ValueError:
                raise PresentationParseError(f"bad prime {rest!r}", line_no)
            if not is_prime(p):
                raise PresentationParseError(f"{p} is not prime", line_no)
        elif head == "n":
            if n is not None:
                raise PresentationParseError("duplicate `n` statement", line_no)
            try:
                n = int(rest)
            except ValueError:
                raise PresentationParseError(f"bad rank {rest!r}", line_no)
            if n < 0:
                raise PresentationParseError("rank must be >= 0", line_no)
        elif head in ("pow", "comm"):
            if p is None or n is None:
                raise PresentationParseError(
                    "`p` and `n` must appear before pow/comm statements", line_no)
            if "=" not in rest:
                raise PresentationParseError("missing `=`", line_no)
            lhs, rhs = rest.split("=", 1)
            try:
                idx = [int(t) for t in lhs.split()]
            except ValueError:
                raise PresentationParseError(f"bad indices {lhs.strip()!r}", line_no)
            vec = _parse_word(rhs, n, p, line_no)
            if head == "pow":
                if len(idx) != 1:
                    raise PresentationParseError("pow takes one index", line_no)
                i = idx[0]
                if not 1 <= i <= n:
                    raise PresentationParseError(
                        f"generator a{i} out of range 1..{n}", line_no)
                if i in pows:
                    raise PresentationParseError(f"duplicate pow {i}", line_no)
                if any(vec[k] for k in range(i)):
                    raise PresentationParseError(
                        f"pow {i}: tail must be supported on indices > {i}", line_no)
                pows[i] = vec
            else:
                if len(idx) != 2:
                    raise PresentationParseError("comm takes two indices", line_no)
                j, i = idx
                if not (1 <= i < j <= n):
                    raise PresentationParseError(
                        f"comm {j} {i}: need 1 <= i < j <= n", line_no)
                if (j, i) in comms:
                    raise PresentationParseError(f"duplicate comm {j} {i}", line_no)
                if any(vec[k] for k in range(j)):
                    raise PresentationParseError(
                        f"comm {j} {i}: tail must be supported on indices > {j}", line_no)
                comms[(j, i)] = vec
        else:
            raise PresentationParseError(f"unknown statement {head!r}", line_no)
    if p is None or n is None:
        raise PresentationParseError("presentation must declare `p` and `n`")
    return PcPresentation(p, n, pows, comms)


def format_word(vec):
    body = " ".join(f"a{k + 1}^{e}" for k, e in enumerate(vec) if e)
    return body or "1"


def format_presentation(pres):
    lines = [f"p {pres.p}", f"n {pres.n}"]
    for i in range(1, pres.n + 1):
        vec = pres._pow_vec[i - 1]
        if vec is not None:
            lines.append(f"pow {i} = {format_word(vec)}")
    for j in range(2, pres.n + 1):
        for i in range(1, j):
            vec = pres._comm_vec[j - 1][i - 1]
            if vec is not None:
                lines.append(f"comm {j} {i} = {format_word(vec)}")
    return "\n".join(lines) + "\n"
