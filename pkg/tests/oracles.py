"""Independent oracles the tests check production code against.

The rank oracle never looks at the symbolic tail machinery: it works on
two finite materializations (depth k and k+1) and detects accumulation
as strict growth of a node's surviving-child count between the depths.
Sound for eventually-constant tails, where every repeat copy of a block
is structurally identical: the copies appearing only at depth k+1 are
scored through their depth-k twins.
"""

import random
import re

from bigsurf.ordinal import (
    ClosedSetEncoding,
    ConstTail,
    SetNode,
    subtree_has_genus,
    truncate_encoding,
)


def rank_by_growth(s: ClosedSetEncoding, k: int = 4):
    """(nu, n) for a finite-rank, constant-tail encoding: rounds of
    deleting nodes whose alive-child count does not grow from depth k to
    depth k+1."""
    if k < 2:
        raise ValueError("need k >= 2 so twin copies exist")
    small = truncate_encoding(s, k)
    big = truncate_encoding(s, k + 1)
    kids_small = {v.tag: [c.tag for c in v.children] for v in small.walk()}
    kids_big = {v.tag: [c.tag for c in v.children] for v in big.walk()}
    ghost = re.compile(r"@%d(?=@|$)" % (k + 1))

    def twin(tag):
        return ghost.sub("@%d" % k, tag)

    alive = set(kids_small)
    rounds = 0
    while True:
        survivors = set()
        for tag in alive:
            n_small = sum(1 for c in kids_small[tag] if c in alive)
            n_big = sum(1 for c in kids_big[tag] if twin(c) in alive)
            if n_big > n_small:
                survivors.add(tag)
        if not survivors:
            return rounds, len(alive)
        alive = survivors
        rounds += 1


def material_tags(s: ClosedSetEncoding, k: int):
    return {v.tag for v in truncate_encoding(s, k).walk()}


def random_finite_rank_encoding(rng: random.Random, max_rank: int = 3,
                                budget: int = 40) -> ClosedSetEncoding:
    """Random encoding of rank at most max_rank, tails all eventually
    constant so every rank is finite.  `budget` caps the symbolic node
    count; once spent, subtrees close off as leaves."""
    remaining = [budget]

    def exact(rank: int) -> SetNode:
        remaining[0] -= 1
        genus = rng.random() < 0.2
        if rank == 0 or remaining[0] <= 0:
            return SetNode(genus=genus)
        block = [exact(rank - 1)]
        if rng.random() < 0.3:
            block.append(loose(rank - 1))
        children = tuple(loose(rng.randint(0, rank)) for _ in range(rng.randint(0, 2)))
        genus = genus or any(subtree_has_genus(b) for b in block)
        return SetNode(genus=genus, children=children, tail=ConstTail(tuple(block)))

    def loose(bound: int) -> SetNode:
        return exact(rng.randint(0, bound))

    return ClosedSetEncoding(exact(rng.randint(0, max_rank)))


def multitwist_dilatation_bounds(pairs, dps: int = 50):
    """High-precision evaluation of the multitwist dilatation window.
    `pairs` is a finite list of (cuff length, twisting power).  Kept free
    of the production module's float arithmetic: everything runs through
    mpmath at `dps` digits and only the final sups are returned."""
    import mpmath as mp

    with mp.workdps(dps):
        lo, hi = mp.mpf(1), mp.mpf(1)
        for length, n in pairs:
            ell, n = mp.mpf(length), abs(int(n))
            lo = max(lo, mp.sqrt(max(2 * n - 1, 0) * ell / mp.pi) + 1)
            theta = mp.pi - 2 * mp.atan(mp.sinh(ell / 2))
            t = n * ell / (2 * theta)
            hi = max(hi, (mp.sqrt(t * t + 1) + t) ** 2)
        return lo, hi
