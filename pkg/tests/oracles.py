"""Independent oracles shared by unit and acceptance tests.

Each oracle restates its contract by a different construction than the
implementation: trust as a literal transcription of the update rule,
EER as a full per-threshold recount over numpy arrays, and routing as
exhaustive simple-path enumeration.
"""

import numpy as np

from carenet.fixedpoint import SCALE


def oracle_update(trust: int, score: int, thr: int, reward: int, penalty: int) -> int:
    if score < thr:
        return max(0, trust - penalty)
    if score > thr:
        return min(SCALE, trust + reward)
    return trust


def oracle_eer(genuine, impostor):
    """Recount FAR/FRR at every threshold; compare exact numerators."""
    gen = np.asarray(genuine, dtype=np.int64)
    imp = np.asarray(impostor, dtype=np.int64)
    n_gen, n_imp = len(gen), len(imp)
    best_t = None
    best_num = None
    for t in range(SCALE + 1):
        far_count = int((imp >= t).sum())
        frr_count = int((gen < t).sum())
        num = abs(far_count * n_gen - frr_count * n_imp)
        if best_num is None or num < best_num:
            best_num = num
            best_t = t
    far = int((imp >= best_t).sum()) / n_imp
    frr = int((gen < best_t).sum()) / n_gen
    return (far + frr) / 2.0, best_t


def oracle_route(adjacency, usable, src, dst):
    """Shortest simple path, ties by lexicographically smallest sequence."""
    if src not in usable or dst not in usable:
        return None
    best = None
    stack = [(src, [src])]
    while stack:
        node, path = stack.pop()
        if node == dst:
            candidate = (len(path), path)
            if best is None or candidate < best:
                best = candidate
            continue
        for nxt in adjacency.get(node, ()):
            if nxt in usable and nxt not in path:
                stack.append((nxt, path + [nxt]))
    return None if best is None else best[1]


def random_topology(rng, max_nodes=10):
    """Random connected sparse graph with a random slice over it."""
    n = rng.randint(2, max_nodes)
    names = [f"n{i:02d}" for i in range(n)]
    rng.shuffle(names)
    nodes = [(name, "edge") for name in names]
    links = []
    connected = [names[0]]
    for name in names[1:]:
        links.append((rng.choice(connected), name))
        connected.append(name)
    extra = rng.randint(0, min(4, n * (n - 1) // 2 - (n - 1)))
    tries = 0
    while extra > 0 and tries < 50:
        a, b = rng.sample(names, 2)
        tries += 1
        if a != b and frozenset((a, b)) not in {frozenset(l) for l in links}:
            links.append((a, b))
            extra -= 1
    members = rng.sample(names, rng.randint(2, n))
    return nodes, links, sorted(members)
