"""Isomorphism testing between pc-presented p-groups.

The fast path covers chain-scheme presentations (a_{i+1} = [a_i, a_1], the
shape every catalog entry has): an isomorphism is determined by the images
x, y of a_1, a_2, and the search walks the coordinate layers of (x, y),
testing all relations in the successive quotients G/<a_{r+1}, ...>.  A test
at rank r only depends on the first r-1 coordinates of x and y (the top
layer of a quotient is central there), so the tree is shallow and prunes
hard.  The generic path is a straightforward backtracking over images of
every pc generator, adequate for the small non-scheme groups in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .errors import BudgetExceededError, InputError
from .pc import ExponentWord, PcPresentation, solve_affine_mod_p
from . import series as _series


# -- invariants ------------------------------------------------------------------


def abelian_invariants(P: PcPresentation):
    """Invariant factors (>1) of G/G' via Smith normal form of the relation matrix."""
    n = P.n
    rows = []
    for i in range(n):
        row = [0] * n
        row[i] = P.p
        vec = P._pow_vec[i]
        if vec is not None:
            for k, e in enumerate(vec):
                row[k] -= e
        rows.append(row)
    for j in range(n):
        for i in range(j):
            vec = P._comm_vec[j][i]
            if vec is not None:
                rows.append(list(vec))
    m = [r[:] for r in rows]
    nr, nc = len(m), n
    invariants = []
    r = c = 0
    while r < nr and c < nc:
        # find smallest nonzero pivot in the remaining block
        piv = None
        for i in range(r, nr):
            for j in range(c, nc):
                if m[i][j] and (piv is None or abs(m[i][j]) < abs(m[piv[0]][piv[1]])):
                    piv = (i, j)
        if piv is None:
            break
        i0, j0 = piv
        m[r], m[i0] = m[i0], m[r]
        for row in m:
            row[c], row[j0] = row[j0], row[c]
        again = True
        while again:
            again = False
            for i in range(r + 1, nr):
                if m[i][c]:
                    q = m[i][c] // m[r][c]
                    for j in range(c, nc):
                        m[i][j] -= q * m[r][j]
                    if m[i][c]:
                        m[r], m[i] = m[i], m[r]
                        again = True
            for j in range(c + 1, nc):
                if m[r][j]:
                    q = m[r][j] // m[r][c]
                    for i in range(r, nr):
                        m[i][j] -= q * m[i][c]
                    if m[r][j]:
                        for i in range(nr):
                            m[i][c], m[i][j] = m[i][j], m[i][c]
                        again = True
        invariants.append(abs(m[r][c]))
        r += 1
        c += 1
    free = nc - len(invariants)
    out = [d for d in invariants if d > 1] + [0] * free
    return tuple(sorted(out))


def fingerprint_cheap(P: PcPresentation):
    """Fast isomorphism invariants: series profiles, abelianization, class."""
    cached = getattr(P, "_fp_cheap", None)
    if cached is not None:
        return cached
    der = _series.derived_series(P)
    lcs = _series.lower_central_series(P)
    fp = (
        P.p,
        P.n,
        tuple(_series.exponent_of(t.order(), P.p) for t in der),
        tuple(_series.exponent_of(t.order(), P.p) for t in lcs),
        abelian_invariants(P),
    )
    P._fp_cheap = fp
    return fp


def order_histogram(P: PcPresentation, elements):
    hist = {}
    for w in elements:
        o = P.element_order(w)
        hist[o] = hist.get(o, 0) + 1
    return tuple(sorted(hist.items()))


def fingerprint_strong(P: PcPresentation):
    """Escalation invariants: Frattini-subgroup order histogram, center data,
    and per-maximal-subgroup derived profiles."""
    cached = getattr(P, "_fp_strong", None)
    if cached is not None:
        return cached
    p = P.p
    gens = P.generators()
    frattini = P.subgroup([P.power(g, p) for g in gens]
                          + [P.commutator(a, b) for a in gens for b in gens])
    frat_elems = frattini.elements()
    hist = order_histogram(P, frat_elems)
    # center inside the Frattini subgroup (enough for 2-generated nonabelian groups)
    central = [w for w in frat_elems
               if all(P.commutator(w, g) == P.identity() for g in gens)]
    omega_central = sum(1 for w in central if P.power(w, p) == P.identity())
    # maximal subgroups: one per line of G/Frattini; profile their derived series
    profiles = []
    lines = []
    nflead = [g for g in gens if not frattini.contains(g)]
    if len(nflead) >= 2:
        a, b = nflead[0], nflead[1]
        lines = [[b]] + [[P.multiply(a, P.power(b, t))] for t in range(p)]
    elif nflead:
        lines = [[nflead[0]]]
    for extra in lines:
        M = P.subgroup(extra + frattini.gens())
        terms = [M]
        while terms[-1].order() > 1:
            D = _series.commutator_subgroup(P, terms[-1], terms[-1])
            if D.order() >= terms[-1].order():
                break
            terms.append(D)
        profiles.append(tuple(_series.exponent_of(t.order(), p) for t in terms))
    fp = (hist, len(central), omega_central, tuple(sorted(profiles)))
    P._fp_strong = fp
    return fp


# -- witnesses --------------------------------------------------------------------


@dataclass
class IsoWitness:
    """Either explicit generator images or an exhaustion certificate."""
    images: list | None = None
    exhaustion: dict | None = None

    def to_dict(self):
        if self.images is not None:
            return {"images": [list(w) for w in self.images]}
        return {"exhaustion": dict(self.exhaustion or {})}


@dataclass
class SearchStats:
    nodes: int = 0
    pruned: int = 0
    space: str = ""

    def certificate(self):
        return {"space": self.space, "nodes": self.nodes, "pruned": self.pruned}


def eval_word(B, images, vec):
    """Evaluate an exponent vector on images (images[i] maps generator i+1)."""
    w = B.identity()
    for k, e in enumerate(vec):
        if e:
            w = B.multiply(w, B.power(images[k], e))
    return w


def verify_witness(A: PcPresentation, B: PcPresentation, images) -> bool:
    """Images define a homomorphism honoring every A-relation and generate B."""
    if len(images) != A.n or A.p != B.p or A.n != B.n:
        return False
    p = A.p
    for i in range(A.n):
        lhs = B.power(images[i], p)
        if lhs != eval_word(B, images, P_pow(A, i)):
            return False
    for j in range(A.n):
        for i in range(j):
            lhs = B.commutator(images[j], images[i])
            if lhs != eval_word(B, images, P_comm(A, j, i)):
                return False
    return B.subgroup(images).order() == B.order()


def P_pow(P, i):
    vec = P._pow_vec[i]
    return vec if vec is not None else (0,) * P.n


def P_comm(P, j, i):
    vec = P._comm_vec[j][i]
    return vec if vec is not None else (0,) * P.n


# -- chain-scheme search -------------------------------------------------------------


def is_chain_scheme(P: PcPresentation) -> bool:
    """a_{i+1} = [a_i, a_1] for i = 2..n-1, [a_n, a_1] = 1, weight chain 1,1,2,..."""
    n = P.n
    if n < 3:
        return False
    if P.weights is not None and P.weights != (1, 1) + tuple(range(2, n)):
        return False
    if P.weights is None:
        return False
    for i in range(2, n):  # 1-based generator i
        unit = tuple(1 if k == i else 0 for k in range(n))
        if P._comm_vec[i - 1][0] != unit:
            return False
    if P._comm_vec[n - 1][0] is not None:
        return False
    for i in (0, 1):
        vec = P._pow_vec[i]
        if vec is not None and vec[1]:
            return False
    return True


class _TopAlgebra:
    """Arithmetic with one affine unknown layer in a rank-s chain quotient.

    Elements are triples (w, t, f) denoting w * z^t * a_s^f, where z = a_{s-1},
    w is a normal word with zero z- and a_s-coordinates, and t, f are affine
    forms (c_xi, c_eta, c_1) over F_p.  All commutators of z lie in <a_s>,
    which is central of order p, so multiplication, inversion and p-th powers
    stay in this shape with t, f affine; p must be odd for the p-th power rule.
    """

    def __init__(self, Bq):
        self.B = Bq
        self.p = Bq.p
        s = Bq.n
        self.zi = s - 2
        self.ai = s - 1
        gamma = [0] * s
        for j in range(self.zi):
            vec = Bq._comm_vec[self.zi][j]
            if vec is not None:
                gamma[j] = vec[self.ai]
        self.gamma = gamma
        powz = Bq._pow_vec[self.zi]
        self.zp = powz[self.ai] if powz is not None else 0

    def const(self, word):
        return self.split(word, (0, 0, 0), (0, 0, 0))

    def formal_gen(self, word, slot):
        t = (1, 0, 0) if slot == 0 else (0, 1, 0)
        return self.split(word, t, (0, 0, 0))

    def split(self, word, t, f):
        zc = word[self.zi]
        ac = word[self.ai]
        if zc or ac:
            lst = list(word)
            lst[self.zi] = 0
            lst[self.ai] = 0
            word = ExponentWord(tuple(lst))
            p = self.p
            if zc:
                t = (t[0], t[1], (t[2] + zc) % p)
            if ac:
                f = (f[0], f[1], (f[2] + ac) % p)
        return (word, t, f)

    def _gam(self, word):
        g = self.gamma
        return sum(g[j] * word[j] for j in range(len(word)) if word[j]) % self.p

    def mult(self, E1, E2):
        w1, t1, f1 = E1
        w2, t2, f2 = E2
        p = self.p
        G = self._gam(w2)
        f = tuple((a + b + G * c) % p for a, b, c in zip(f1, f2, t1))
        t = tuple((a + b) % p for a, b in zip(t1, t2))
        return self.split(self.B.multiply(w1, w2), t, f)

    def inv(self, E):
        w, t, f = E
        p = self.p
        wi = self.B.inverse(w)
        G = self._gam(wi)
        nt = tuple((-a) % p for a in t)
        nf = tuple((G * a - b) % p for a, b in zip(nt, f))
        return self.split(wi, nt, nf)

    def power_p(self, E):
        w, t, f = E
        p = self.p
        wp = self.B.power(w, p)
        nf = tuple((self.zp * a) % p for a in t)
        return self.split(wp, (0, 0, 0), nf)

    def power_small(self, E, e):
        out = self.const(self.B.identity())
        for _ in range(e):
            out = self.mult(out, E)
        return out

    def comm(self, E1, E2):
        return self.mult(self.mult(self.inv(E1), self.inv(E2)), self.mult(E1, E2))

    def eval_vec(self, images, vec):
        out = self.const(self.B.identity())
        for k, e in enumerate(vec):
            if e:
                out = self.mult(out, self.power_small(images[k], e))
        return out


class _SchemeSearch:
    """Layered DFS over the coordinates of the images (x, y) of (a1, a2).

    A relation test in the rank-s quotient only involves the first s-1
    coordinates of x and y, and the two coordinates entering at each descent
    sit on a generator whose commutators are central there, so each descent is
    an affine solve over F_p instead of a p^2-way branch.
    """

    def __init__(self, A, B, rooted=False, node_cap=None):
        self.A = A
        self.B = B
        self.p = A.p
        self.n = A.n
        self.rooted = rooted
        self.node_cap = node_cap
        self.stats = SearchStats(space=("images (x, y) of (a1, a2), x in a1^j*Frattini"
                                        if rooted else "images (x, y) of (a1, a2)"))

    def _test3(self, xs, ys):
        """Plain full-relation test in the rank-3 quotient (seed layer)."""
        Bq = self.B.truncated(3)
        Aq = self.A.truncated(3)
        p = self.p
        x = ExponentWord((xs[0], xs[1], 0))
        y = ExponentWord((ys[0], ys[1], 0))
        g = [x, y, Bq.commutator(y, x)]
        if Bq.commutator(g[2], x) != Bq.identity():
            return False
        if Bq.commutator(g[2], y) != Bq.identity():
            return False
        for i in range(3):
            if Bq.power(g[i], p) != eval_word(Bq, g, P_pow(Aq, i)):
                return False
        return True

    def _descend(self, xs, ys):
        """Affine solve for the next coordinate pair; children that pass the
        rank-(len+2) test are exactly the solutions."""
        s = len(xs) + 2
        Bq = self.B.truncated(s)
        Aq = self.A.truncated(s)
        alg = _TopAlgebra(Bq)
        p = self.p
        pad = (0,) * (s - len(xs))
        x = ExponentWord(tuple(xs) + pad)
        y = ExponentWord(tuple(ys) + pad)
        g = [alg.formal_gen(x, 0), alg.formal_gen(y, 1)]
        for m in range(1, s - 1):
            g.append(alg.comm(g[m], g[0]))
        rows = []

        def require(lhs, rhs):
            wl, tl, fl = lhs
            wr, tr, fr = rhs
            if wl != wr:
                return False
            r1 = [(a - b) % p for a, b in zip(tl, tr)]
            r2 = [(a - b) % p for a, b in zip(fl, fr)]
            if any(r1):
                rows.append(r1)
            if any(r2):
                rows.append(r2)
            return True

        ident = alg.const(Bq.identity())
        if not require(alg.comm(g[s - 1], g[0]), ident):
            return None
        for i in range(1, s + 1):
            if not require(alg.power_p(g[i - 1]), alg.eval_vec(g, P_pow(Aq, i - 1))):
                return None
        for i in range(3, s + 1):
            for j in range(2, i):
                if not require(alg.comm(g[i - 1], g[j - 1]),
                               alg.eval_vec(g, P_comm(Aq, i - 1, j - 1))):
                    return None
        sol = solve_affine_mod_p(rows, 2, p)
        if sol is None:
            return None
        part, basis = sol
        out = []
        for assign in product(range(p), repeat=len(basis)):
            xi, eta = part[0], part[1]
            for val, vec in zip(assign, basis):
                xi = (xi + val * vec[0]) % p
                eta = (eta + val * vec[1]) % p
            out.append((xs + (xi,), ys + (eta,)))
        out.sort()
        return out

    def run(self):
        p, n = self.p, self.n
        seeds = []
        for x1 in range(p):
            for x2 in range(p):
                if (x1, x2) == (0, 0) or (self.rooted and x2):
                    continue
                for y1 in range(p):
                    for y2 in range(p):
                        if (x1 * y2 - x2 * y1) % p == 0:
                            continue
                        seeds.append(((x1, x2), (y1, y2)))
        stack = []
        for seed in reversed(seeds):
            self.stats.nodes += 1
            if self._test3(*seed):
                stack.append(seed)
            else:
                self.stats.pruned += 1
        if n == 3:
            stack.reverse()
            return self._finish(*stack[0]) if stack else None
        while stack:
            xs, ys = stack.pop()
            self.stats.nodes += 1
            if self.node_cap and self.stats.nodes > self.node_cap:
                raise BudgetExceededError("isomorphism search node cap exceeded",
                                          progress=self.stats.certificate())
            children = self._descend(xs, ys)
            if children is None:
                self.stats.pruned += 1
                continue
            if len(xs) + 1 == n - 1:
                if children:
                    return self._finish(*children[0])
                self.stats.pruned += 1
            else:
                stack.extend(reversed(children))
        return None

    def _finish(self, xs, ys):
        B = self.B
        pad = (0,) * (self.n - len(xs))
        x = ExponentWord(tuple(xs) + pad)
        y = ExponentWord(tuple(ys) + pad)
        images = [x, y]
        for _ in range(2, self.n):
            images.append(B.commutator(images[-1], x))
        return images


def find_scheme_witness(A, B, rooted=False, node_cap=None):
    """Search for an isomorphism between chain-scheme presentations.

    Returns (images or None, SearchStats).  With rooted=True only isomorphisms
    mapping a1 into a1^j * Frattini are considered (the equivalence used while
    reducing intermediate tower stages).
    """
    if A.p != B.p or A.n != B.n:
        raise InputError("witness search needs matching (p, n)")
    if not (is_chain_scheme(A) and is_chain_scheme(B)):
        raise InputError("both presentations must be chain-scheme")
    if A.key() == B.key() and not rooted:
        return list(A.generators()), SearchStats(space="identity")
    search = _SchemeSearch(A, B, rooted=rooted, node_cap=node_cap)
    images = search.run()
    return images, search.stats


def rebase_scheme_presentation(B: PcPresentation, x, y):
    """Presentation of B on the new chain pcgs built from images (x, y).

    The pcgs is b1 = x, b2 = y, b_{i+1} = [b_i, b1]; raises InputError if the
    chain degenerates (x, y do not head a chain scheme of B).
    """
    p, n = B.p, B.n
    b = [None, ExponentWord(tuple(x)), ExponentWord(tuple(y))]
    for m in range(2, n):
        b.append(B.commutator(b[m], b[1]))
    det = (b[1][0] * b[2][1] - b[1][1] * b[2][0]) % p
    if det == 0:
        raise InputError("images do not generate modulo the Frattini subgroup")
    for i in range(3, n + 1):
        if b[i].lead() != i - 1:
            raise InputError("images do not head a chain scheme")

    from .pc import inverse_mod

    def coords(z):
        out = [0] * n
        m = [[b[1][0], b[1][1]], [b[2][0], b[2][1]]]
        dinv = inverse_mod((m[0][0] * m[1][1] - m[0][1] * m[1][0]) % p, p)
        e1 = ((z[0] * m[1][1] - z[1] * m[1][0]) * dinv) % p
        e2 = ((m[0][0] * z[1] - m[0][1] * z[0]) * dinv) % p
        out[0], out[1] = e1, e2
        rest = B.multiply(B.inverse(B.power(b[2], e2)),
                          B.multiply(B.inverse(B.power(b[1], e1)), z))
        while True:
            lead = rest.lead()
            if lead is None:
                break
            i = lead + 1  # b_i has leading index i-1
            assert i >= 3, "coordinate peel re-entered the head layer"
            e = (rest[lead] * inverse_mod(b[i][lead], p)) % p
            out[i - 1] = e
            rest = B.multiply(B.inverse(B.power(b[i], e)), rest)
        return tuple(out)

    pows = {}
    comms = {}
    for i in range(1, n + 1):
        vec = coords(B.power(b[i], p))
        if any(vec):
            pows[i] = vec
    for j in range(2, n + 1):
        for i in range(1, j):
            vec = coords(B.commutator(b[j], b[i]))
            if any(vec):
                comms[(j, i)] = vec
    return PcPresentation(p, n, pows, comms, weights=(1, 1) + tuple(range(2, n)))


# -- generic backtracking (non-scheme inputs) ----------------------------------------


def find_generic_witness(A, B, node_cap=200_000):
    """Backtracking over images of every pc generator; for small groups."""
    p, n = A.p, A.n
    stats = SearchStats(space="images of all pc generators")
    elements = _all_elements(B)
    order_of = {w: B.element_order(w) for w in elements}
    target_orders = [A.element_order(g) for g in A.generators()]
    pools = [[w for w in elements if order_of[w] == target_orders[i]] for i in range(n)]

    relations = []
    for i in range(n):
        relations.append(("pow", i, P_pow(A, i)))
    for j in range(n):
        for i in range(j):
            relations.append(("comm", j, i, P_comm(A, j, i)))

    def checkable(rel, depth):
        support = [k for k, e in enumerate(rel[-1]) if e]
        involved = set(support) | ({rel[1]} if rel[0] == "pow" else {rel[1], rel[2]})
        return max(involved) < depth

    images = []

    def ok(depth):
        for rel in relations:
            if not checkable(rel, depth):
                continue
            if rel[0] == "pow":
                lhs = B.power(images[rel[1]], p)
            else:
                lhs = B.commutator(images[rel[1]], images[rel[2]])
            if lhs != eval_word(B, images, rel[-1]):
                return False
        return True

    def dfs(depth):
        if depth == n:
            return B.subgroup(images).order() == B.order()
        for cand in pools[depth]:
            stats.nodes += 1
            if stats.nodes > node_cap:
                raise BudgetExceededError("generic isomorphism search node cap exceeded",
                                          progress=stats.certificate())
            images.append(cand)
            if ok(depth + 1) and dfs(depth + 1):
                return True
            images.pop()
            stats.pruned += 1
        return False

    if dfs(0):
        return list(images), stats
    return None, stats


def _all_elements(B):
    from itertools import product
    return [ExponentWord(t) for t in product(range(B.p), repeat=B.n)]


# -- public entry ----------------------------------------------------------------------


def is_isomorphic(A: PcPresentation, B: PcPresentation, node_cap=None):
    """Decide isomorphism; (True, witness with verified images) or
    (False, witness with an exhaustion/fingerprint certificate)."""
    A.checked()
    B.checked()
    if A.order() != B.order():
        return False, IsoWitness(exhaustion={"reason": "order mismatch",
                                             "orders": [A.order(), B.order()]})
    if A.key() == B.key():
        return True, IsoWitness(images=list(A.generators()))
    if fingerprint_cheap(A) != fingerprint_cheap(B):
        return False, IsoWitness(exhaustion={"reason": "fingerprint mismatch"})
    if is_chain_scheme(A) and is_chain_scheme(B):
        images, stats = find_scheme_witness(A, B, node_cap=node_cap)
    else:
        images, stats = find_generic_witness(A, B, node_cap=node_cap or 200_000)
    if images is not None:
        assert verify_witness(A, B, images), "witness failed verification"
        return True, IsoWitness(images=images)
    return False, IsoWitness(exhaustion=stats.certificate())
