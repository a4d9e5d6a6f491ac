"""Bag generation: orderings of a sign multiset licensed by a grammar.

The main generator runs a chart indexed by coverage bitmasks; edges
combine only when their coverage sets are disjoint, and each grammar
rule's daughter order fixes the concatenation order.  A brute-force
oracle tries every permutation of the bag and parses it; both must
agree on every bag small enough for the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .tfs import canonical, unify
from .signs import SignInst, cell_for, synthesize
from .chart import Combiner, Grammar, edge_fs_for


class GenerationLimitError(Exception):
    """The permutation oracle refuses bags above its size limit."""


@dataclass(eq=False)
class GenEdge:
    mask: int
    lineup: tuple            # bag indices in surface order
    interned: tuple

    @property
    def fs(self):
        return self.interned[1]


def _run_chart(bag, grammar: Grammar, comb: Combiner):
    """Exhaustive subset chart; returns every edge ever built."""
    edges: list = []
    seen = set()

    def add(mask, lineup, interned):
        key = (mask, lineup, interned[0])
        if key in seen:
            return None
        seen.add(key)
        e = GenEdge(mask, lineup, interned)
        edges.append(e)
        return e

    unary = [i for i, r in enumerate(grammar.rules) if r.arity == 1]
    binary = [i for i, r in enumerate(grammar.rules) if r.arity == 2]

    def close_unary(e):
        todo = [e]
        while todo:
            cur = todo.pop()
            for ri in unary:
                res = comb.apply(ri, cur.interned)
                if res is not None:
                    ne = add(cur.mask, cur.lineup, res)
                    if ne is not None:
                        todo.append(ne)

    for i, inst in enumerate(bag):
        e = add(1 << i, (i,), comb.intern(edge_fs_for(inst.fs)))
        if e is not None:
            close_unary(e)

    done = 0
    while done < len(edges):
        e1 = edges[done]
        done += 1
        for e2 in edges[:done]:
            if e1.mask & e2.mask:
                continue
            for first, second in ((e1, e2), (e2, e1)):
                for ri in binary:
                    res = comb.apply(ri, first.interned, second.interned)
                    if res is not None:
                        ne = add(first.mask | second.mask,
                                 first.lineup + second.lineup, res)
                        if ne is not None:
                            close_unary(ne)
    return edges


def _sequences_from_root(grammar, bag, root_edges):
    out, seen = [], set()
    for fs, lineup in root_edges:
        refined = unify(grammar.h, grammar.root_pattern, fs)
        if refined is None:
            continue
        key = (lineup, canonical(refined))
        if key in seen:
            continue
        seen.add(key)
        seq = [SignInst(bag[idx].sign, refined.feats[f"L{k + 1}"])
               for k, idx in enumerate(lineup)]
        out.append(seq)
    return out


def generate(bag, grammar: Grammar):
    """All bag orderings accepted by the grammar, as sign sequences.

    Duplicate bag elements are distinct indices; identical output
    strings are collapsed later, at realization.
    """
    if not bag:
        return []
    comb = Combiner(grammar)
    full = (1 << len(bag)) - 1
    edges = _run_chart(bag, grammar, comb)
    roots = [(e.fs, e.lineup) for e in edges if e.mask == full]
    return _sequences_from_root(grammar, bag, roots)


def largest_coverage(bag, grammar: Grammar):
    """Diagnostic: lemmas of a maximal-coverage edge's lineup."""
    comb = Combiner(grammar)
    edges = _run_chart(bag, grammar, comb)
    if not edges:
        return ()
    best = max(edges, key=lambda e: (bin(e.mask).count("1"), e.lineup))
    return tuple(bag[i].lemma for i in best.lineup)


def _oracle_cell(ids, comb, unary, binary, memo):
    """Parse results for one ordered leaf-id sequence (CKY + memo).

    A cell's content depends only on the structures of its leaves, so
    permutations share all their common subsequences.
    """
    got = memo.get(ids)
    if got is not None:
        return got
    base = {}
    if len(ids) == 1:
        e = comb.by_id(ids[0])
        base[e[0]] = e
    else:
        for cut in range(1, len(ids)):
            for le in _oracle_cell(ids[:cut], comb, unary, binary, memo):
                for re_ in _oracle_cell(ids[cut:], comb, unary, binary, memo):
                    for ri in binary:
                        res = comb.apply(ri, le, re_)
                        if res is not None:
                            base[res[0]] = res
    todo = list(base.values())
    while todo:
        cur = todo.pop()
        for ri in unary:
            res = comb.apply(ri, cur)
            if res is not None and res[0] not in base:
                base[res[0]] = res
                todo.append(res)
    out = tuple(base.values())
    memo[ids] = out
    return out


def brute_force_generate(bag, grammar: Grammar, limit: int = 8):
    """Oracle: parse every permutation of the bag, keep the accepted ones.

    Orderings are proposed blindly and checked by an ordinary string
    parser; the subset chart plays no part in the search.
    """
    if len(bag) > limit:
        raise GenerationLimitError(
            f"bag of {len(bag)} exceeds oracle limit {limit}")
    if not bag:
        return []
    comb = Combiner(grammar)
    interned = [comb.intern(edge_fs_for(inst.fs)) for inst in bag]
    unary = [i for i, r in enumerate(grammar.rules) if r.arity == 1]
    binary = [i for i, r in enumerate(grammar.rules) if r.arity == 2]
    memo: dict = {}
    out = []
    for perm in permutations(range(len(bag))):
        ids = tuple(interned[idx][0] for idx in perm)
        roots = [(e[1], perm)
                 for e in _oracle_cell(ids, comb, unary, binary, memo)]
        out.extend(_sequences_from_root(grammar, bag, roots))
    return out


def realize(seq, h) -> str:
    """Space-joined synthesized forms of a generated sign sequence."""
    words = []
    for inst in seq:
        cell = cell_for(h, inst.fs)
        words.append(synthesize(inst.sign, cell))
    return " ".join(words)


def string_set(seqs, h):
    """Realized strings of many sequences, deduplicated and sorted."""
    return sorted({realize(seq, h) for seq in seqs})
