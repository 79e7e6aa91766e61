"""Independent oracles used by the test suite.

Everything here deliberately avoids the production code paths it checks:
matrix arithmetic for the unitriangular groups, a rightmost-first rewriting
strategy as a second collector, and element-set (Cayley closure) subgroup
computations for small groups.
"""

from itertools import product

from derq.pc import ExponentWord

# -- unitriangular 3x3 matrix oracle -------------------------------------------
# A matrix [[1,a,b],[0,1,c],[0,0,1]] is stored as (a, c, b) mod p.

UT_ID = (0, 0, 0)


def ut_mul(x, y, p):
    a1, c1, b1 = x
    a2, c2, b2 = y
    return ((a1 + a2) % p, (c1 + c2) % p, (b1 + b2 + a1 * c2) % p)


def ut_inv(x, p):
    a, c, b = x
    return (-a % p, -c % p, (a * c - b) % p)


def heis_word_to_matrix(w, p):
    """Image of a1^e1 a2^e2 a3^e3 under a1 -> I+E12, a2 -> I+E23, a3 -> I-E13."""
    e1, e2, e3 = w
    return (e1 % p, e2 % p, (e1 * e2 - e3) % p)


def matrix_to_heis_word(m, p):
    a, c, b = m
    return ExponentWord((a % p, c % p, (a * c - b) % p))


def heis_eval_pairs(pairs, p):
    """Evaluate a (1-based generator, exponent) word in the matrix group."""
    gens = {1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, -1 % p)}
    acc = UT_ID
    for i, e in pairs:
        g = gens[i] if e >= 0 else ut_inv(gens[i], p)
        for _ in range(abs(e)):
            acc = ut_mul(acc, g, p)
    return acc


# -- second rewriting strategy: rightmost violation first -----------------------


def collect_rightmost(pres, pairs, cap=10**7):
    """Normalize a word by always rewriting the rightmost violation.

    Input pairs are (0-based generator, exponent >= 0).  Independent of the
    production collector, which works from the left.
    """
    p = pres.p
    n = pres.n
    word = [[g, e] for g, e in pairs if e]
    steps = 0
    while True:
        steps += 1
        if steps > cap:
            raise AssertionError("rightmost-first collection diverged")
        # merge adjacent equal generators
        merged = []
        for g, e in word:
            if merged and merged[-1][0] == g:
                merged[-1][1] += e
            elif e:
                merged.append([g, e])
        word = merged
        # rightmost violation: either an overfull syllable or a descending boundary
        vio = None  # (pos, kind)
        for idx, (g, e) in enumerate(word):
            if e >= p:
                vio = (idx, "pow")
        for idx in range(len(word) - 1):
            if word[idx][0] > word[idx + 1][0]:
                if vio is None or idx >= vio[0]:
                    vio = (idx, "swap")
        if vio is None:
            vec = [0] * n
            for g, e in word:
                vec[g] = e
            return ExponentWord(tuple(vec))
        idx, kind = vio
        if kind == "pow":
            g, e = word[idx]
            tail = pres._pow_syll[g]
            repl = []
            if e - p:
                repl.append([g, e - p])
            if tail is not None:
                repl.extend([a, b] for a, b in tail)
            word[idx:idx + 1] = repl
        else:
            (gj, ej), (gi, ei) = word[idx], word[idx + 1]
            tail = pres._comm_syll[gj][gi]
            repl = []
            if ej > 1:
                repl.append([gj, ej - 1])
            repl.append([gi, 1])
            repl.append([gj, 1])
            if tail is not None:
                repl.extend([a, b] for a, b in tail)
            if ei > 1:
                repl.append([gi, ei - 1])
            word[idx:idx + 2] = repl


# -- Cayley-closure subgroup machinery ------------------------------------------


def all_elements(pres):
    return [ExponentWord(t) for t in product(range(pres.p), repeat=pres.n)]


def set_closure(pres, gens):
    """Subgroup generated by gens, as a frozen element set (BFS closure)."""
    gens = [g for g in gens if g != pres.identity()]
    seen = {pres.identity()}
    frontier = [pres.identity()]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = pres.multiply(x, g)
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return frozenset(seen)


def set_commutator(pres, A, B):
    """[A, B] for element sets: closure of all pairwise commutators."""
    inv = {x: pres.inverse(x) for x in set(A) | set(B)}
    vals = set()
    for x in A:
        for y in B:
            if x == y:
                continue
            c = pres.multiply(pres.multiply(inv[x], inv[y]), pres.multiply(x, y))
            vals.add(c)
            vals.add(inv.setdefault(c, pres.inverse(c)))
    return set_closure(pres, vals)


def set_derived_series(pres):
    terms = [frozenset(all_elements(pres))]
    while len(terms[-1]) > 1:
        nxt = set_commutator(pres, terms[-1], terms[-1])
        if len(nxt) == len(terms[-1]):
            break
        terms.append(nxt)
    return terms


def set_lower_central_series(pres):
    full = frozenset(all_elements(pres))
    terms = [full]
    while len(terms[-1]) > 1:
        nxt = set_commutator(pres, terms[-1], full)
        if len(nxt) == len(terms[-1]):
            break
        terms.append(nxt)
    return terms


def random_pairs_word(rng, n, length, max_exp):
    """Random word as 1-based (generator, exponent) pairs, exponents possibly negative."""
    return [(rng.randrange(1, n + 1), rng.randrange(-max_exp, max_exp + 1))
            for _ in range(length)]
