"""
Bayesian network model of BOA: BIC-scored greedy structure search, smoothed CPTs and
ancestral sampling over binary variables.

Parent configurations are indexed big-endian over the parent tuple, which is kept sorted.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from eda.bitstring import GENOME_DTYPE, Population, RandomSource, as_bit_matrix

logger = logging.getLogger(__name__)

DEFAULT_MAX_INDEGREE = 5
EXACT_JOINT_MAX_N = 16


class ScoredDataset:
    """Selected rows plus cached per-(node, parents) contingency counts."""

    def __init__(self, rows):
        self.rows = as_bit_matrix(rows)
        if self.rows.shape[0] < 1:
            raise ValueError('набор данных должен содержать хотя бы одну строку')
        self.rows.setflags(write=False)
        self._wide = self.rows.astype(np.int64)
        self._counts: Dict[Tuple[int, Tuple[int, ...]], np.ndarray] = {}

    @property
    def N(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n(self) -> int:
        return int(self.rows.shape[1])

    def configurations(self, parents: Sequence[int]) -> np.ndarray:
        """Big-endian parent-configuration index of every row."""
        if not parents:
            return np.zeros(self.N, dtype=np.int64)
        place = 1 << np.arange(len(parents) - 1, -1, -1)
        return self._wide[:, list(parents)] @ place

    def counts(self, node: int, parents: Sequence[int]) -> np.ndarray:
        """(2^|parents|, 2) table of counts of (configuration, x_node)."""
        key = (node, tuple(parents))
        table = self._counts.get(key)
        if table is None:
            index = self.configurations(parents) * 2 + self._wide[:, node]
            table = np.bincount(index, minlength=2 ** (len(parents) + 1)).reshape(-1, 2)
            self._counts[key] = table
        return table


def _as_parent_tuple(node: int, parents: Iterable[int]) -> Tuple[int, ...]:
    parents = tuple(sorted(int(p) for p in parents))
    if node in parents:
        raise ValueError(f'узел {node} не может быть собственным родителем')
    return parents


def conditional_entropy(data: ScoredDataset, node: int, parents: Iterable[int]) -> float:
    """H(X_node | parents) in bits, over observed configurations only."""
    parents = _as_parent_tuple(node, parents)
    counts = data.counts(node, parents)
    per_config = counts.sum(axis=1, keepdims=True)
    observed = counts > 0
    joint = counts[observed] / data.N
    conditional = counts[observed] / np.broadcast_to(per_config, counts.shape)[observed]
    return float(max(0.0, -np.sum(joint * np.log2(conditional))))


def bic_node_score(data: ScoredDataset, node: int, parents: Iterable[int]) -> float:
    """-H(X_i | Pi_i) * N - 2^|Pi_i| * log2(N) / 2."""
    parents = _as_parent_tuple(node, parents)
    penalty = (2 ** len(parents)) * math.log2(data.N) / 2
    return -conditional_entropy(data, node, parents) * data.N - penalty


@dataclass(frozen=True, eq=False)
class BayesianNetwork:
    n: int
    parents: Tuple[Tuple[int, ...], ...]
    cpts: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        parents = tuple(_as_parent_tuple(i, p) for i, p in enumerate(self.parents))
        if len(parents) != self.n:
            raise ValueError(f'ожидается {self.n} наборов родителей, получено {len(parents)}')
        for i, row in enumerate(parents):
            if any(not 0 <= p < self.n for p in row):
                raise ValueError(f'узел {i}: недопустимые родители {row}')
        object.__setattr__(self, 'parents', parents)
        if self.cpts is not None:
            cpts = tuple(np.array(t, dtype=np.float64) for t in self.cpts)
            for i, table in enumerate(cpts):
                if table.shape != (2 ** len(parents[i]),):
                    raise ValueError(f'узел {i}: CPT должна иметь {2 ** len(parents[i])} строк')
                if ((table < 0) | (table > 1)).any():
                    raise ValueError(f'узел {i}: вероятности CPT вне [0, 1]')
                table.setflags(write=False)
            object.__setattr__(self, 'cpts', cpts)
        topological_order(self)

    @classmethod
    def empty(cls, n: int) -> 'BayesianNetwork':
        return cls(n, tuple(() for _ in range(n)))

    @property
    def edge_count(self) -> int:
        return sum(len(p) for p in self.parents)

    def edges(self) -> List[Tuple[int, int]]:
        """(parent, child) pairs."""
        return [(p, child) for child, row in enumerate(self.parents) for p in row]

    def with_cpts(self, cpts) -> 'BayesianNetwork':
        return BayesianNetwork(self.n, self.parents, tuple(cpts))


def topological_order(net: BayesianNetwork) -> List[int]:
    """Kahn's algorithm, lowest index first among ready nodes."""
    indegree = [len(p) for p in net.parents]
    children: List[List[int]] = [[] for _ in range(net.n)]
    for child, row in enumerate(net.parents):
        for p in row:
            children[p].append(child)
    ready = sorted(i for i in range(net.n) if indegree[i] == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
        ready.sort()
    if len(order) != net.n:
        raise ValueError('граф сети содержит цикл')
    return order


def network_score(net: BayesianNetwork, data: ScoredDataset) -> float:
    return sum(bic_node_score(data, i, net.parents[i]) for i in range(net.n))


def greedy_build_network(data: ScoredDataset, max_indegree: int = DEFAULT_MAX_INDEGREE) -> BayesianNetwork:
    """
    Start empty, add the single edge with the largest positive BIC gain until none is left.

    Additions that close a cycle or exceed `max_indegree` are skipped. Equal gains go to
    the lowest (child, parent) pair. Only the gains of the child whose parent set changed
    are recomputed after each addition.
    """
    if data.N < 2:
        raise ValueError(f'нужно хотя бы 2 строки, получено N={data.N}')
    n = data.n
    parents: List[List[int]] = [[] for _ in range(n)]
    scores = np.array([bic_node_score(data, i, ()) for i in range(n)])
    # reach[a, b]: существует путь a -> ... -> b
    reach = np.zeros((n, n), dtype=bool)
    gains = np.full((n, n), -np.inf)

    def refresh(child: int):
        gains[child, :] = -np.inf
        if len(parents[child]) >= max_indegree:
            return
        for candidate in range(n):
            if candidate == child or candidate in parents[child]:
                continue
            gains[child, candidate] = bic_node_score(data, child, parents[child] + [candidate]) - scores[child]

    for child in range(n):
        refresh(child)

    while True:
        # ребро candidate -> child замкнёт цикл, если child уже достигает candidate
        legal = np.where(reach, -np.inf, gains)
        flat = int(np.argmax(legal))
        child, parent = divmod(flat, n)
        if not legal[child, parent] > 0:
            break
        parents[child].append(parent)
        parents[child].sort()
        scores[child] += gains[child, parent]
        ancestors = reach[:, parent].copy()
        ancestors[parent] = True
        descendants = reach[child, :].copy()
        descendants[child] = True
        reach |= np.outer(ancestors, descendants)
        refresh(child)

    net = BayesianNetwork(n, tuple(tuple(p) for p in parents))
    logger.debug('BOA: сеть на %d узлах, %d рёбер, N=%d', n, net.edge_count, data.N)
    return net


def estimate_cpts(net: BayesianNetwork, data: ScoredDataset) -> BayesianNetwork:
    """P(x_i = 1 | config) = (count(x_i=1, config) + 1) / (count(config) + 2)."""
    if data.n != net.n:
        raise ValueError(f'число переменных данных {data.n} != {net.n}')
    cpts = []
    for i, row in enumerate(net.parents):
        counts = data.counts(i, row)
        cpts.append((counts[:, 1] + 1.0) / (counts.sum(axis=1) + 2.0))
    return net.with_cpts(cpts)


def sample_network(net: BayesianNetwork, count: int, rng: RandomSource) -> Population:
    """Ancestral sampling in topological order."""
    if net.cpts is None:
        raise ValueError('CPT не оценены')
    if count < 1:
        raise ValueError(f'count должен быть >= 1, получено {count}')
    order = topological_order(net)
    samples = np.zeros((count, net.n), dtype=np.int64)
    for node in order:
        row = net.parents[node]
        if row:
            index = samples[:, list(row)] @ (1 << np.arange(len(row) - 1, -1, -1))
        else:
            index = np.zeros(count, dtype=np.int64)
        samples[:, node] = rng.uniform(count) < net.cpts[node][index]
    return Population(samples.astype(GENOME_DTYPE))


def exact_joint(net: BayesianNetwork) -> np.ndarray:
    """Joint P(x) over all 2^n genomes, indexed by big-endian code."""
    if net.cpts is None:
        raise ValueError('CPT не оценены')
    if net.n > EXACT_JOINT_MAX_N:
        raise ValueError(f'перебор ограничен n <= {EXACT_JOINT_MAX_N}, получено {net.n}')
    codes = np.arange(1 << net.n, dtype=np.int64)
    states = (codes[:, None] >> np.arange(net.n - 1, -1, -1)) & 1
    joint = np.ones(codes.size)
    for node, row in enumerate(net.parents):
        if row:
            index = states[:, list(row)] @ (1 << np.arange(len(row) - 1, -1, -1))
        else:
            index = np.zeros(codes.size, dtype=np.int64)
        p_one = net.cpts[node][index]
        joint *= np.where(states[:, node] == 1, p_one, 1.0 - p_one)
    return joint


def dump_network(net: BayesianNetwork) -> str:
    lines = []
    for node, row in enumerate(net.parents):
        lines.append(f'node {node} <- ' + ' '.join(str(p) for p in row))
        if net.cpts is not None:
            for config, p in enumerate(net.cpts[node]):
                bits = format(config, f'0{len(row)}b') if row else '-'
                lines.append(f'  {bits} {float(p):.6f}')
    return '\n'.join(lines) + '\n'
