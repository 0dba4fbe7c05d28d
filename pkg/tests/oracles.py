"""Expected values computed by routes independent of the code under test.

Each helper recomputes a quantity straight from raw system data (edge
tuples, matrix entries) with its own loop structure, so agreement with
the library is evidence rather than tautology.
"""


def path_words(lgs, k):
    """All length-``k`` label sequences of paths starting at level 0."""
    out = set()

    def walk(l, i, acc):
        if len(acc) == k:
            out.add(tuple(acc))
            return
        for (_, a, j) in lgs.out_edges(l, i):
            walk(l + 1, j, acc + [a])

    for i in lgs.vertex_range(0):
        walk(0, i, [])
    return sorted(out, key=lgs.word_key)


def graph_words(graph, k):
    """All length-``k`` label sequences of walks on a labeled graph."""
    out = set()

    def walk(s, acc):
        if len(acc) == k:
            out.add(tuple(acc))
            return
        for (_, a, t) in graph.out_edges(s):
            walk(t, acc + [a])

    for s in range(1, graph.n + 1):
        walk(s, [])
    return sorted(out)


def past_class_count(graph, l, flen):
    """Distinct sets ``{nu in B_l : nu.w admissible}`` over length-``flen`` words ``w``.

    Works on the raw edge list by word enumeration, not by pre-set
    iteration, so it is an independent classifier.
    """
    all_states = set(range(1, graph.n + 1))

    def ends(word):
        cur = set(all_states)
        for a in word:
            cur = {t for (s, b, t) in graph.edges if b == a and s in cur}
        return cur

    def starts(word):
        cur = set(all_states)
        for a in reversed(word):
            cur = {s for (s, b, t) in graph.edges if b == a and t in cur}
        return cur

    pasts = graph_words(graph, l)
    end_of = {nu: ends(nu) for nu in pasts}
    classes = set()
    for w in graph_words(graph, flen):
        S = starts(w)
        classes.add(frozenset(nu for nu in pasts if end_of[nu] & S))
    return len(classes)


def multiset_products(s, l):
    """Both sides of ``M.I = I.M`` over the level pair ``(l, l+1)``.

    Returns two dicts keyed ``(i, j)`` (1-based) whose values are sorted
    label tuples; absent keys mean the empty multiset.
    """
    left = {}
    right = {}
    for i in range(1, s.m(l) + 1):
        for j in range(1, s.m(l + 2) + 1):
            acc = []
            for t in range(1, s.m(l + 1) + 1):
                if s.I[l + 1][t - 1, j - 1]:
                    acc.extend(s.entry(l, i, t))
            if acc:
                left[(i, j)] = tuple(sorted(acc))
            acc = []
            for t in range(1, s.m(l + 1) + 1):
                if s.I[l][i - 1, t - 1]:
                    acc.extend(s.entry(l + 1, t, j))
            if acc:
                right[(i, j)] = tuple(sorted(acc))
    return left, right


def product_mismatches(s):
    """Locations ``(l, i, j)`` where the intertwining identity fails."""
    bad = []
    for l in range(s.depth - 1):
        left, right = multiset_products(s, l)
        for key in sorted(set(left) | set(right)):
            if left.get(key) != right.get(key):
                bad.append((l,) + key)
    return bad


def pair_samples(lgs, pieces, xlen, zlen):
    """Point pairs covered by a family of basic bisections, truncated.

    Each triple ``(mu, v@l, nu)`` stands for the pairs ``(mu.t, nu.t)``
    over label tails ``t`` leaving ``v``; the tails are walked to the
    truncation depth and both words are cut to the requested lengths, so
    families living at different levels become comparable.
    """
    out = set()
    for b in pieces:
        for t in tails_of(lgs, b.level, b.index):
            x = (tuple(b.mu) + t)[:xlen]
            z = (tuple(b.nu) + t)[:zlen]
            out.add((x, z))
    return out


def tails_of(lgs, level, index):
    """Label words of the paths from ``v_index^level`` to the last level."""
    done = []

    def walk(l, i, acc):
        if l == lgs.depth:
            done.append(tuple(acc))
            return
        for (_, a, j) in lgs.out_edges(l, i):
            walk(l + 1, j, acc + [a])

    walk(level, index, [])
    return done


def sample_lengths(lgs, families):
    """Largest common cut lengths for :func:`pair_samples` comparisons."""
    xs, zs = [], []
    for pieces in families:
        for b in pieces:
            xs.append(len(b.mu) + lgs.depth - b.level)
            zs.append(len(b.nu) + lgs.depth - b.level)
    return (min(xs), min(zs)) if xs else (0, 0)


def element_count(lgs, d):
    """Number of admissible word pairs anchored at level ``d``.

    Counts, per vertex, the label words of length <= ``d`` carried by
    explicitly enumerated paths ending there, then sums the squares.
    """
    total = 0
    for i in range(1, lgs.m(d) + 1):
        seen = set()
        for k in range(d + 1):
            for start in range(1, lgs.m(d - k) + 1):
                stack = [(d - k, start, ())]
                while stack:
                    l, j, acc = stack.pop()
                    if l == d:
                        if j == i:
                            seen.add(acc)
                        continue
                    for (_, a, t) in lgs.out_edges(l, j):
                        stack.append((l + 1, t, acc + (a,)))
        total += len(seen) ** 2
    return total


def count_paths_between(lgs, l, i, k):
    """Number of length-``k`` paths out of ``v_i^l``, by explicit walk."""
    frontier = {i: 1}
    for step in range(k):
        nxt = {}
        for src, n in frontier.items():
            for (_, _a, j) in lgs.out_edges(l + step, src):
                nxt[j] = nxt.get(j, 0) + n
        frontier = nxt
    return sum(frontier.values())
