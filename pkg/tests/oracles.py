"""Brute-force reference implementations, written independently of the package code."""

import itertools
import math

from scipy import stats


def sgn(v):
    return (v > 0) - (v < 0)


def pettitt_brute(x):
    n = len(x)
    u = []
    for t in range(1, n):
        total = 0
        for i in range(t):
            for j in range(t, n):
                total += sgn(x[i] - x[j])
        u.append(total)
    k = max(abs(v) for v in u)
    tau = [abs(v) for v in u].index(k) + 1
    p = min(1.0, 2 * math.exp(-6 * k**2 / (n**3 + n**2)))
    return u, k, tau, p


def mann_kendall_brute(x):
    n = len(x)
    s = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            s += sgn(x[j] - x[i])
    groups = {}
    for v in x:
        groups[v] = groups.get(v, 0) + 1
    tie_term = sum(t * (t - 1) * (2 * t + 5) for t in groups.values())
    var = (n * (n - 1) * (2 * n + 5) - tie_term) / 18
    if var == 0:
        return s, 0.0, 0.0, 1.0
    if s > 0:
        z = (s - 1) / math.sqrt(var)
    elif s < 0:
        z = (s + 1) / math.sqrt(var)
    else:
        z = 0.0
    return s, var, z, 2 * stats.norm.sf(abs(z))


def _range(values):
    return max(values) - min(values)


def _variance(values):
    m = sum(values) / len(values)
    return sum((v - m) ** 2 for v in values) / len(values)


def decompose_brute(table: dict, counts, measure: str):
    """Cumulative decomposition from a dict keyed by scenario-index tuples.

    Enumerates every fixed trailing combination and every leading combination
    explicitly, following the definitions term by term.
    """
    fn = _range if measure == "range" else _variance
    Z = len(counts)
    cumulative = []
    for z in range(1, Z + 1):
        lead = list(itertools.product(*[range(n) for n in counts[:z]]))
        trail = list(itertools.product(*[range(n) for n in counts[z:]]))
        conditional = [fn([table[a + b] for a in lead]) for b in trail]
        cumulative.append(sum(conditional) / len(conditional))
    individual = [cumulative[0]] + [cumulative[k] - cumulative[k - 1] for k in range(1, Z)]
    return cumulative, individual


def anova_brute_3(table, counts):
    """Main and two-way effect variances of a 3-source table by explicit loops."""
    na, nb, nc = counts
    cells = list(itertools.product(range(na), range(nb), range(nc)))
    grand = sum(table[k] for k in cells) / len(cells)

    def cond_mean(fixed):
        keep = [k for k in cells if all(k[ax] == v for ax, v in fixed.items())]
        return sum(table[k] for k in keep) / len(keep)

    main = {}
    for ax, n in enumerate(counts):
        main[ax] = {i: cond_mean({ax: i}) - grand for i in range(n)}
    pair = {}
    for a, b in itertools.combinations(range(3), 2):
        pair[(a, b)] = {
            (i, j): cond_mean({a: i, b: j}) - main[a][i] - main[b][j] - grand
            for i in range(counts[a])
            for j in range(counts[b])
        }

    def var_of(effect):
        vals = list(effect.values())
        return sum(v * v for v in vals) / len(vals)

    return [var_of(main[ax]) for ax in range(3)], {k: var_of(v) for k, v in pair.items()}
