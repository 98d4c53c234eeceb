"""Free group words, cyclic words, and the line-pattern rigidity scan.

Letters are nonzero integers: ``i+1`` is generator ``i`` and ``-(i+1)`` its
inverse.  In strings, generators are named by ``ALPHABET`` (lower case) and
inverses by the upper-case letter, so ``"xyX"`` is ``x y x^-1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .core import Graph, GraphWithFins, build_graph_with_fins, rose

ALPHABET = "xyzabcdefghijklmnopqrstuvw"


class EmptyWord(ValueError):
    pass


class CommensurableWords(ValueError):
    pass


def letter_key(a):
    return (abs(a), a < 0)


def parse_word(text):
    out = []
    for ch in text:
        i = ALPHABET.find(ch.lower())
        if i < 0:
            raise ValueError(f"unknown letter {ch!r}")
        out.append(-(i + 1) if ch.isupper() else i + 1)
    return tuple(out)


def format_word(w):
    return "".join(ALPHABET[abs(a) - 1].upper() if a < 0 else ALPHABET[a - 1] for a in w)


def reduce_word(w):
    out = []
    for a in w:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def inverse(w):
    return tuple(-a for a in reversed(w))


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word, compared up to rotation."""
    letters: tuple

    def canonical(self):
        w = self.letters
        keyed = [tuple(letter_key(a) for a in w[i:] + w[:i]) for i in range(len(w))]
        i = min(range(len(w)), key=keyed.__getitem__)
        return w[i:] + w[:i]

    def inverse(self):
        return CyclicWord(inverse(self.letters))

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, CyclicWord) and self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())


def cyclic_reduce(w):
    w = reduce_word(w)
    if not w:
        raise EmptyWord("word reduces to the identity")
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return CyclicWord(w[i:j + 1]), w[:i]


def primitive_root(cw):
    w = cw.letters
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w == w[:p] * (n // p):
            return CyclicWord(w[:p]), n // p
    raise AssertionError("unreachable")


def root_key(w):
    """Key shared by two nontrivial words iff they generate commensurable cyclic subgroups."""
    root, _ = primitive_root(cyclic_reduce(w)[0])
    return min(root.canonical(), root.inverse().canonical(), key=lambda t: [letter_key(a) for a in t])


def commensurable(w1, w2):
    return root_key(w1) == root_key(w2)


def reduced_triples(rank):
    letters = [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)]
    return {t for t in product(letters, repeat=3) if t[0] != -t[1] and t[1] != -t[2]}


def cyclic_triples(cw):
    w = cw.letters
    n = len(w)
    return {(w[i % n], w[(i + 1) % n], w[(i + 2) % n]) for i in range(n)}


def rigidity_sufficient(rank, words):
    if rank < 2:
        raise ValueError("rank must be at least 2")
    need = reduced_triples(rank)
    for w in words:
        if need <= cyclic_triples(cyclic_reduce(w)[0]):
            return "Sufficient"
    return "Unknown"


def random_reduced_word(rank, length, rng):
    letters = [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)]
    w = [rng.choice(letters)]
    while len(w) < length:
        w.append(rng.choice([a for a in letters if a != -w[-1]]))
    return tuple(w)


def triple_covering_word(rank=2):
    """A cyclically reduced word whose cyclic triples are all reduced triples.

    Eulerian circuit in the graph on reduced pairs, where ``(a,b) -> (b,c)`` is an
    edge for each reduced triple ``abc``.
    """
    triples = sorted(reduced_triples(rank), key=lambda t: [letter_key(a) for a in t])
    out = {}
    for a, b, c in triples:
        out.setdefault((a, b), []).append((b, c))
    for k in out:
        out[k].reverse()
    start = (triples[0][0], triples[0][1])
    stack, circuit = [start], []
    while stack:
        v = stack[-1]
        if out.get(v):
            stack.append(out[v].pop())
        else:
            circuit.append(stack.pop())
    circuit.reverse()
    return tuple(p[0] for p in circuit[:-1])


def word_to_cycle(w, letters=ALPHABET):
    return tuple(letters[abs(a) - 1] + ("+" if a > 0 else "-") for a in w)


def pattern_to_fins(rank, words, colouring=None) -> GraphWithFins:
    cyclic = [cyclic_reduce(w)[0] for w in words]
    keys = [root_key(c.letters) for c in cyclic]
    for i in range(len(keys)):
        for j in range(i):
            if keys[i] == keys[j]:
                raise CommensurableWords(
                    f"{format_word(words[j])} and {format_word(words[i])} are commensurable")
    for c in cyclic:
        if max(abs(a) for a in c.letters) > rank:
            raise ValueError("word uses a generator beyond the rank")
    g: Graph = rose(ALPHABET[:rank])
    return build_graph_with_fins(g, [word_to_cycle(c.letters) for c in cyclic], colouring)
