import random

import pytest

from derq.errors import (
    CollectionLimitError,
    InconsistentPresentationError,
    InputError,
    PresentationParseError,
)
from derq.pc import (
    ExponentWord,
    PcPresentation,
    abelian,
    extraspecial_p2,
    format_presentation,
    heisenberg,
    parse_presentation,
)
from oracles import (
    collect_rightmost,
    heis_eval_pairs,
    heis_word_to_matrix,
    matrix_to_heis_word,
    random_pairs_word,
    set_closure,
    ut_mul,
)

SEED = 0xDE9


def test_normalize_identity_cases():
    H = heisenberg(5)
    assert H.normalize([]) == ExponentWord((0, 0, 0))
    # a2 * a1 = a1 a2 [a2,a1]
    assert H.normalize([(2, 1), (1, 1)]) == ExponentWord((1, 1, 1))
    # power relation with trivial tail
    assert H.normalize([(1, 5)]) == H.identity()


def test_multiply_commutator_power_basics():
    H = heisenberg(5)
    a1, a2, a3 = H.generators()
    assert H.commutator(a2, a1) == a3
    assert H.commutator(a2, a2) == H.identity()
    assert H.power(a1, 5) == H.identity()
    u = H.normalize([(1, 2), (2, 3), (3, 1)])
    assert H.commutator(u, u) == H.identity()
    assert H.multiply(u, H.inverse(u)) == H.identity()
    assert H.multiply(H.inverse(u), u) == H.identity()


def test_rank_mismatch_and_bad_indices():
    H = heisenberg(5)
    E = abelian(5, 2)
    with pytest.raises(InputError):
        H.multiply(H.identity(), E.identity())
    with pytest.raises(InputError):
        H.normalize([(4, 1)])
    with pytest.raises(InputError):
        H.normalize([(0, 1)])
    with pytest.raises(InputError):
        H.generator(7)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_heisenberg_matches_matrix_oracle_on_random_words(p):
    """Random 20-letter words agree with 3x3 unitriangular arithmetic."""
    H = heisenberg(p)
    rng = random.Random(SEED + p)
    for _ in range(300):
        pairs = random_pairs_word(rng, 3, length=20, max_exp=2 * p)
        got = H.normalize(pairs)
        want = matrix_to_heis_word(heis_eval_pairs(pairs, p), p)
        assert got == want


@pytest.mark.parametrize("p", [3, 5, 7])
def test_heisenberg_products_match_matrix_oracle(p):
    H = heisenberg(p)
    rng = random.Random(SEED * p)
    elements = [H.normalize(random_pairs_word(rng, 3, 6, p)) for _ in range(60)]
    for _ in range(1000):
        u = rng.choice(elements)
        v = rng.choice(elements)
        got = H.multiply(u, v)
        want = matrix_to_heis_word(
            ut_mul(heis_word_to_matrix(u, p), heis_word_to_matrix(v, p), p), p)
        assert got == want


def _strategy_groups():
    return [
        heisenberg(3),
        heisenberg(5),
        extraspecial_p2(5, 1, 2),
        maxclass_p4_sample(3),
        maxclass_p4_sample(5),
    ]


def maxclass_p4_sample(p):
    """A maximal-class rank-4 presentation: chain [a2,a1]=a3, [a3,a1]=a4."""
    comms = {(2, 1): (0, 0, 1, 0), (3, 1): (0, 0, 0, 1)}
    return PcPresentation(p, 4, {}, comms, weights=(1, 1, 2, 3))


@pytest.mark.parametrize("G", _strategy_groups(), ids=lambda g: f"p{g.p}n{g.n}")
def test_strategy_independence(G):
    """Leftmost and rightmost-first collection agree on random words."""
    assert G.consistency_check() == []
    rng = random.Random(SEED ^ (G.p * 31 + G.n))
    for _ in range(10_000):
        pairs = [(rng.randrange(G.n), rng.randrange(0, 2 * G.p))
                 for _ in range(rng.randrange(0, 9))]
        left = G._collect([0] * G.n, pairs)
        right = collect_rightmost(G, pairs)
        assert left == right


def test_normal_form_uniqueness_via_oracle():
    """Words equal in the matrix group normalize to identical vectors."""
    p = 5
    H = heisenberg(p)
    rng = random.Random(SEED + 99)
    by_matrix = {}
    for _ in range(800):
        pairs = random_pairs_word(rng, 3, 8, p)
        m = heis_eval_pairs(pairs, p)
        w = H.normalize(pairs)
        if m in by_matrix:
            assert by_matrix[m] == w
        else:
            by_matrix[m] = w


@pytest.mark.parametrize("G", _strategy_groups(), ids=lambda g: f"p{g.p}n{g.n}")
def test_associativity_sampling(G):
    rng = random.Random(SEED - G.p)
    elements = [G.normalize(random_pairs_word(rng, G.n, 5, G.p)) for _ in range(50)]
    for _ in range(10_000):
        u, v, w = (rng.choice(elements) for _ in range(3))
        assert G.multiply(G.multiply(u, v), w) == G.multiply(u, G.multiply(v, w))


def test_element_count():
    assert heisenberg(5).element_count() == 125
    comms = {(2, 1): (0, 0, 1, 0, 0, 0), (3, 1): (0, 0, 0, 1, 0, 0),
             (4, 1): (0, 0, 0, 0, 1, 0), (5, 1): (0, 0, 0, 0, 0, 1)}
    G = PcPresentation(5, 6, {}, comms, weights=(1, 1, 2, 3, 4, 5))
    assert G.element_count() == 15625
    assert PcPresentation(5, 0).element_count() == 1


def test_consistency_heisenberg_and_support_rule():
    assert heisenberg(5).consistency_check() == []
    # support violations are rejected at the invariant level, before any check
    with pytest.raises(InputError):
        PcPresentation(5, 3, {}, {(2, 1): (0, 1, 0)})
    with pytest.raises(InputError):
        PcPresentation(5, 3, {1: (1, 0, 0)}, {})


def test_inconsistent_presentation_detected():
    # C27 as a pc chain is consistent
    G = PcPresentation(3, 3, {1: (0, 1, 0), 2: (0, 0, 1)}, {})
    assert G.consistency_check() == []
    # but [a2,a1] = a3 with a2 = a1^3 is impossible: powers of a1 are central in <a1>
    B = PcPresentation(3, 3, {1: (0, 1, 0)}, {(2, 1): (0, 0, 1)})
    violations = B.consistency_check()
    assert violations
    assert all(v.kind in ("assoc", "pow_right", "pow_left", "pow_self")
               for v in violations)
    assert all(str(v) for v in violations)
    with pytest.raises(InconsistentPresentationError):
        B.checked()


def test_collection_step_cap_trips():
    G = PcPresentation(5, 3, {}, {(2, 1): (0, 0, 1)}, step_cap=3)
    with pytest.raises(CollectionLimitError):
        G.normalize([(2, 1), (1, 1), (2, 1), (1, 1)])


def test_subgroup_igs_membership_and_order():
    p = 5
    H = heisenberg(p)
    a1, a2, a3 = H.generators()
    Z = H.subgroup([a3])
    assert Z.order() == 5
    assert Z.contains(H.power(a3, 3))
    assert not Z.contains(a1)
    M = H.subgroup([a1, a3])
    assert M.order() == 25
    full = H.subgroup([a1, a2])
    assert full.order() == 125
    assert full.contains(a3)
    # against the element-set oracle
    for gens in ([a1], [a2, a3], [H.multiply(a1, a2)]):
        S = H.subgroup(gens)
        assert S.order() == len(set_closure(H, gens))


def test_subgroup_igs_against_closure_oracle_random():
    rng = random.Random(SEED + 5)
    for p in (3, 5):
        G = maxclass_p4_sample(p)
        for _ in range(20):
            gens = [G.normalize(random_pairs_word(rng, 4, 4, p))
                    for _ in range(rng.randrange(1, 3))]
            S = G.subgroup(gens)
            oracle = set_closure(G, gens)
            assert S.order() == len(oracle)
            for x in list(oracle)[:40]:
                assert S.contains(x)


def test_parser_roundtrip_and_errors():
    H = extraspecial_p2(7, 2, 1)
    text = format_presentation(H)
    H2 = parse_presentation(text)
    assert H2.key() == H.key()

    with pytest.raises(PresentationParseError) as err:
        parse_presentation("p 5\nn 3\ncomm 2 1 = a2^1\n")
    assert err.value.line == 3

    with pytest.raises(PresentationParseError) as err:
        parse_presentation("p 5\nn 3\npow 1 = a1^1\n")
    assert err.value.line == 3

    with pytest.raises(PresentationParseError) as err:
        parse_presentation("p 5\nn 3\nfrobnicate\n")
    assert err.value.line == 3

    with pytest.raises(PresentationParseError):
        parse_presentation("p 6\nn 2\n")

    with pytest.raises(PresentationParseError) as err:
        parse_presentation("n 2\npow 1 = 1\n")
    assert err.value.line == 2

    # comments and default exponents are accepted
    G = parse_presentation("# Heisenberg\np 5\nn 3\ncomm 2 1 = a3\n")
    assert G.key() == heisenberg(5).key()


def test_weights_validation():
    with pytest.raises(InputError):
        PcPresentation(5, 3, {}, {(2, 1): (0, 0, 1)}, weights=(1, 1, 1))
    with pytest.raises(InputError):
        PcPresentation(5, 3, {}, {}, weights=(2, 1, 1))


def test_truncate_quotient():
    G = maxclass_p4_sample(5)
    Q = G.truncate(3)
    assert Q.key() == heisenberg(5).key()
    assert Q.consistency_check() == []


def test_p2_groups_supported():
    # dihedral of order 8: a1=s, a2=r, a3=r^2
    D8 = PcPresentation(2, 3, {2: (0, 0, 1)}, {(2, 1): (0, 0, 1)})
    assert D8.consistency_check() == []
    s, r, z = D8.generators()
    assert D8.element_order(r) == 4
    assert D8.element_order(s) == 2
    Q8 = PcPresentation(2, 3, {1: (0, 0, 1), 2: (0, 0, 1)}, {(2, 1): (0, 0, 1)})
    assert Q8.consistency_check() == []
    assert D8.subgroup(D8.generators()).order() == 8
