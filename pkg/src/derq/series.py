"""Series computations and quotient analysis, generic over any GroupEngine.

Indexing conventions (used in every report):
    derived series      G^(0) = G,  G^(i+1) = [G^(i), G^(i)]
    lower central       gamma_1 = G,  gamma_{i+1} = [gamma_i, G]
A derived quotient G^(d)/G^(d+1) is *small* when G^(d+1) != 1 and
log_p |G^(d)/G^(d+1)| = 2^d + 1, the minimum allowed by Hall's bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .engine import GroupEngine, SubgroupHandle
from .errors import InputError, PreconditionError


class ChainClass(str, Enum):
    CH1 = "ch1"
    CH2 = "ch2"
    NEITHER = "neither"


def exponent_of(order: int, p: int) -> int:
    e = 0
    while order > 1:
        if order % p:
            raise InputError(f"order {order} is not a power of {p}")
        order //= p
        e += 1
    return e


# -- subgroup machinery ----------------------------------------------------------


def closure_normal_under(G: GroupEngine, seed, under) -> SubgroupHandle:
    """Smallest subgroup containing seed and closed under conjugation by `under`."""
    H = G.subgroup(seed)
    while True:
        new = []
        for w in H.gens():
            for g in under:
                c = G.conjugate(w, g)
                if not H.contains(c):
                    new.append(c)
        if not new:
            return H
        H = G.subgroup(H.gens() + new)


def normal_closure(G: GroupEngine, seed, under=None) -> SubgroupHandle:
    return closure_normal_under(G, list(seed), under if under is not None else G.generators())


def commutator_subgroup(G: GroupEngine, A: SubgroupHandle, B: SubgroupHandle) -> SubgroupHandle:
    """[A, B]: the normal closure in <A, B> of the generator commutators."""
    e = G.identity()
    seed = []
    for a in A.gens():
        for b in B.gens():
            c = G.commutator(a, b)
            if c != e:
                seed.append(c)
    if not seed:
        return G.subgroup([])
    return closure_normal_under(G, seed, A.gens() + B.gens())


def is_normal(G: GroupEngine, H: SubgroupHandle) -> bool:
    return all(H.contains(G.conjugate(w, g)) for w in H.gens() for g in G.generators())


def is_abelian_subgroup(G: GroupEngine, H: SubgroupHandle) -> bool:
    e = G.identity()
    gens = H.gens()
    return all(G.commutator(a, b) == e for i, a in enumerate(gens) for b in gens[i + 1:])


# -- series ----------------------------------------------------------------------


def derived_series(G: GroupEngine) -> list[SubgroupHandle]:
    """G = G^(0) >= G^(1) >= ... down to (and including) the trivial subgroup."""
    terms = [G.full_subgroup()]
    while terms[-1].order() > 1:
        D = commutator_subgroup(G, terms[-1], terms[-1])
        if D.order() >= terms[-1].order():
            break
        terms.append(D)
    return terms


def lower_central_series(G: GroupEngine) -> list[SubgroupHandle]:
    """gamma_1 = G, gamma_{i+1} = [gamma_i, G], down to the trivial subgroup."""
    full = G.full_subgroup()
    terms = [full]
    while terms[-1].order() > 1:
        N = commutator_subgroup(G, terms[-1], full)
        if N.order() >= terms[-1].order():
            break
        terms.append(N)
    return terms


def nilpotency_class(G: GroupEngine, lcs=None) -> int:
    lcs = lcs if lcs is not None else lower_central_series(G)
    return len(lcs) - 1


def rc_chain(G: GroupEngine, H: SubgroupHandle, n: int) -> list[SubgroupHandle]:
    """H, [H,G], [H,G,G], ...  (left-normed, n+1 terms).  H must be normal."""
    if n < 0:
        raise InputError("rc_chain needs n >= 0")
    if not is_normal(G, H):
        raise PreconditionError("not_normal", "rc_chain requires a normal subgroup")
    full = G.full_subgroup()
    chain = [H]
    for _ in range(n):
        chain.append(commutator_subgroup(G, chain[-1], full))
    return chain


def gamma_of_subgroup(G: GroupEngine, B: SubgroupHandle, i: int) -> SubgroupHandle:
    """gamma_i(B) computed inside the parent engine."""
    if i < 1:
        raise InputError("gamma index must be >= 1")
    term = B
    for _ in range(i - 1):
        term = commutator_subgroup(G, term, B)
    return term


# -- the scan ----------------------------------------------------------------------


@dataclass
class SeriesReport:
    p: int
    order_exp: int
    derived_exps: list
    lcs_exps: list
    small_ds: list
    chain_classes: dict          # d -> "ch1" | "ch2" | "neither"
    nilpotency_class: int
    metabelian: bool
    checks: dict                 # named invariant checks -> bool
    first_chain_quotient_exps: dict = field(default_factory=dict)  # d -> log_p |G^(d)/[G^(d),G]|

    def to_dict(self):
        return {
            "p": self.p,
            "order_exp": self.order_exp,
            "derived_exps": list(self.derived_exps),
            "lcs_exps": list(self.lcs_exps),
            "small_ds": list(self.small_ds),
            "chain_classes": {str(d): v for d, v in sorted(self.chain_classes.items())},
            "class": self.nilpotency_class,
            "metabelian": self.metabelian,
            "checks": dict(sorted(self.checks.items())),
            "first_chain_quotient_exps": {
                str(d): v for d, v in sorted(self.first_chain_quotient_exps.items())},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            p=d["p"],
            order_exp=d["order_exp"],
            derived_exps=list(d["derived_exps"]),
            lcs_exps=list(d["lcs_exps"]),
            small_ds=list(d["small_ds"]),
            chain_classes={int(k): v for k, v in d["chain_classes"].items()},
            nilpotency_class=d["class"],
            metabelian=d["metabelian"],
            checks=dict(d["checks"]),
            first_chain_quotient_exps={
                int(k): v for k, v in d.get("first_chain_quotient_exps", {}).items()},
        )

    def to_json(self, **kw):
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)

    def validate(self):
        """Assert the structural invariants every report must satisfy."""
        exps = self.derived_exps
        assert exps[-1] == 0 and all(a > b for a, b in zip(exps, exps[1:])), exps
        lexps = self.lcs_exps
        assert lexps[-1] == 0 and all(a > b for a, b in zip(lexps, lexps[1:])), lexps
        for d in self.small_ds:
            assert exps[d] - exps[d + 1] == 2 ** d + 1 and exps[d + 1] > 0
        return self


def _chain_data(G, d, Gd, Gd1, p, full):
    """Classify the repeated-commutator chain below G^(d) for a small quotient."""
    e_d = exponent_of(Gd.order(), p)
    e_d1 = exponent_of(Gd1.order(), p)
    K1 = commutator_subgroup(G, Gd, full)
    first_exp = e_d - exponent_of(K1.order(), p)
    if first_exp == 1:
        length = 2 ** d + 1
    elif first_exp == 2:
        length = 2 ** d
    else:
        return ChainClass.NEITHER, first_exp
    chain = [Gd, K1]
    for _ in range(length - 1):
        chain.append(commutator_subgroup(G, chain[-1], full))
    strict = all(chain[m].order() > chain[m + 1].order() for m in range(length))
    terminal = chain[length].equals(Gd1)
    if strict and terminal:
        return (ChainClass.CH1 if first_exp == 1 else ChainClass.CH2), first_exp
    return ChainClass.NEITHER, first_exp


def chain_classify(G: GroupEngine, d: int, *, _ctx=None) -> ChainClass:
    """Ch1 (chain ending at rc 2^d+1) or Ch2 (chain ending at rc 2^d) for a small d."""
    p, _ = G.prime_power()
    der = _ctx["derived"] if _ctx else derived_series(G)
    full = _ctx["full"] if _ctx else G.full_subgroup()
    if d < 0 or d + 1 >= len(der):
        raise PreconditionError("not_small", f"d = {d} is not a small derived quotient")
    Gd = der[d]
    # recomputed directly so the terminal-equality test is independent of the chain
    Gd1 = commutator_subgroup(G, Gd, Gd)
    e_d = exponent_of(Gd.order(), p)
    e_d1 = exponent_of(Gd1.order(), p)
    if e_d1 == 0 or e_d - e_d1 != 2 ** d + 1:
        raise PreconditionError("not_small", f"d = {d} is not a small derived quotient")
    cls, _ = _chain_data(G, d, Gd, Gd1, p, full)
    return cls


def small_quotient_scan(G: GroupEngine) -> SeriesReport:
    """Full scan: series, small derived quotients, chain classes, named checks."""
    p, order_exp = G.prime_power()
    full = G.full_subgroup()
    der = derived_series(G)
    lcs = lower_central_series(G)
    dexp = [exponent_of(t.order(), p) for t in der]
    lexp = [exponent_of(t.order(), p) for t in lcs]
    small_ds = [d for d in range(len(dexp) - 1)
                if dexp[d + 1] > 0 and dexp[d] - dexp[d + 1] == 2 ** d + 1]
    chain_classes = {}
    first_exps = {}
    checks = {}
    ctx = {"derived": der, "full": full}
    for d in small_ds:
        Gd = der[d]
        Gd1 = commutator_subgroup(G, Gd, Gd)
        cls, first_exp = _chain_data(G, d, Gd, Gd1, p, full)
        chain_classes[d] = cls.value
        first_exps[d] = first_exp

    checks["mann_at_most_two"] = len(small_ds) <= 2
    checks["small_chain_classified"] = all(
        v in (ChainClass.CH1.value, ChainClass.CH2.value) for v in chain_classes.values())
    # G^(d) <= gamma_{2^d} for every d
    ok = True
    trivial = G.subgroup([])
    for d in range(len(der)):
        m = 2 ** d
        gm = lcs[m - 1] if m - 1 < len(lcs) else trivial
        if not der[d].le(gm):
            ok = False
    checks["derived_in_gamma_2d"] = ok
    # a p^2 head quotient must be elementary abelian
    ok = True
    for d in small_ds:
        if first_exps.get(d) == 2:
            Gd = der[d]
            K1 = commutator_subgroup(G, Gd, full)
            if not all(K1.contains(G.power(g, p)) for g in Gd.gens()):
                ok = False
    checks["ch2_head_elementary_abelian"] = ok
    if p != 2:
        checks["theorem2_deep_smalls_ch1"] = all(
            chain_classes.get(d) == ChainClass.CH1.value and first_exps.get(d) == 1
            for d in small_ds if d >= 1)
    if len(small_ds) == 2:
        d0, d1 = small_ds
        checks["adjacent_smalls_ch2_then_ch1"] = (
            d1 == d0 + 1
            and chain_classes.get(d0) == ChainClass.CH2.value
            and chain_classes.get(d1) == ChainClass.CH1.value)

    return SeriesReport(
        p=p,
        order_exp=order_exp,
        derived_exps=dexp,
        lcs_exps=lexp,
        small_ds=small_ds,
        chain_classes=chain_classes,
        nilpotency_class=nilpotency_class(G, lcs),
        metabelian=len(dexp) <= 3,
        checks=checks,
        first_chain_quotient_exps=first_exps,
    ).validate()


# -- lemma / theorem checks ----------------------------------------------------------


@dataclass(frozen=True)
class HallCheck:
    passed: bool
    i: int
    order_exp: int              # log_p |H|
    abelianization_exp: int     # log_p |H/H'|

    def to_dict(self):
        return {"passed": self.passed, "i": self.i, "order_exp": self.order_exp,
                "abelianization_exp": self.abelianization_exp,
                "required_abelianization_exp": self.i + 1,
                "required_order_exp": self.i + 2}


def hall_check(G: GroupEngine, H: SubgroupHandle, i: int) -> HallCheck:
    """|H/H'| >= p^(i+1) and |H| >= p^(i+2) for non-abelian normal H <= gamma_i."""
    p, _ = G.prime_power()
    if is_abelian_subgroup(G, H):
        raise PreconditionError("abelian_h", "hall_check requires a non-abelian subgroup")
    if not is_normal(G, H):
        raise PreconditionError("not_normal", "hall_check requires a normal subgroup")
    lcs = lower_central_series(G)
    gi = lcs[i - 1] if i - 1 < len(lcs) else G.subgroup([])
    if not H.le(gi):
        raise PreconditionError("not_in_gamma",
                                f"subgroup is not contained in gamma_{i}")
    Hp = commutator_subgroup(G, H, H)
    eh = exponent_of(H.order(), p)
    ehp = exponent_of(Hp.order(), p)
    ok = (eh - ehp) >= i + 1 and eh >= i + 2
    return HallCheck(ok, i, eh, eh - ehp)


def cyclic_quotient_commutator_check(G: GroupEngine, H: SubgroupHandle,
                                     within: SubgroupHandle | None = None) -> bool:
    """A/H cyclic implies A' = [A, H]; checked exactly (both inclusions).

    `within` restricts the ambient group to a subgroup A (default: all of G).
    """
    p, _ = G.prime_power()
    A = within if within is not None else G.full_subgroup()
    if not H.le(A):
        raise PreconditionError("not_contained", "H must be contained in the ambient subgroup")
    if not all(H.contains(G.conjugate(h, g)) for h in H.gens() for g in A.gens()):
        raise PreconditionError("not_normal", "H must be normal in the ambient subgroup")
    Ader = commutator_subgroup(G, A, A)
    if not Ader.le(H):
        raise PreconditionError("not_cyclic", "A/H is not even abelian")
    # A/H is an abelian p-group: cyclic iff index of H.<p-th powers> is <= p
    S = G.subgroup(H.gens() + [G.power(a, p) for a in A.gens()])
    if A.order() > p * S.order():
        raise PreconditionError("not_cyclic", "A/H is not cyclic")
    AH = commutator_subgroup(G, A, H)
    return Ader.equals(AH)


def inclusion1_check(G: GroupEngine, A: SubgroupHandle, B: SubgroupHandle, i: int) -> bool:
    """[A, gamma_i(B)] <= [A, B, ..., B] (i copies); both sides computed separately."""
    if not (is_normal(G, A) and is_normal(G, B)):
        raise PreconditionError("not_normal", "inclusion check requires normal subgroups")
    gi = gamma_of_subgroup(G, B, i)
    lhs = commutator_subgroup(G, A, gi)
    rhs = A
    for _ in range(i):
        rhs = commutator_subgroup(G, rhs, B)
    return lhs.le(rhs)


def degree_of_commutativity_zero(G: GroupEngine) -> bool:
    """[gamma_2, gamma_3] = gamma_5 exactly; requires a group of maximal class."""
    p, n = G.prime_power()
    lcs = lower_central_series(G)
    if len(lcs) <= 2:
        raise PreconditionError("abelian", "degree of commutativity needs class >= 2")
    if nilpotency_class(G, lcs) != n - 1:
        raise PreconditionError("not_maximal_class",
                                f"class {nilpotency_class(G, lcs)} != {n - 1}")
    trivial = G.subgroup([])
    g2 = lcs[1]
    g3 = lcs[2] if len(lcs) > 2 else trivial
    g5 = lcs[4] if len(lcs) > 4 else trivial
    return commutator_subgroup(G, g2, g3).equals(g5)


_BOUNDS = {
    "hall": lambda d: 2 ** d + d,
    "mann": lambda d: 2 ** d + 2 * d - 2,
    "metabelian": lambda d: 2 ** d + 3 * d - 6,
}


def order_lower_bound(d: int, variant: str) -> int:
    """Exponent bound on log_p |G| for derived length d+1.

    The metabelian variant returns the exponent 2^d + 3d - 6: the source states
    the bound for |G| itself, but dimensional analysis of the surrounding text
    shows the logarithm is meant, so the exponent is what this returns.
    """
    if variant not in _BOUNDS:
        raise InputError(f"unknown bound variant {variant!r}")
    if d < 1:
        raise InputError("bounds are stated for d >= 1")
    return _BOUNDS[variant](d)
