"""
Federation directory: one static quote per cluster, ranked by price and by
speed. Lookups are local, but each query is charged ceil(log2 n) modeled
messages to stand in for a distributed index.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .economy import ClusterSpec


class DuplicateSubscription(ValueError):
    pass


class NotFound(KeyError):
    pass


@dataclass(frozen=True)
class Quote:
    cluster_id: int
    price: float
    speed: float
    procs: int
    bandwidth: float

    @classmethod
    def of(cls, cluster: ClusterSpec) -> "Quote":
        return cls(cluster.id, cluster.price, cluster.speed, cluster.procs, cluster.bandwidth)


@dataclass
class DirectoryStats:
    query_count: int = 0
    modeled_query_messages: int = 0


def query_cost(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


class Directory:
    def __init__(self):
        self._quotes: dict[int, Quote] = {}
        self._by_price: list[tuple[float, int]] = []
        self._by_speed: list[tuple[float, int]] = []  # keyed (-speed, id)
        self.stats = DirectoryStats()

    def __len__(self) -> int:
        return len(self._quotes)

    def __contains__(self, cluster_id: int) -> bool:
        return cluster_id in self._quotes

    def subscribe(self, quote: Quote) -> None:
        if quote.cluster_id in self._quotes:
            raise DuplicateSubscription(quote.cluster_id)
        self._quotes[quote.cluster_id] = quote
        bisect.insort(self._by_price, (quote.price, quote.cluster_id))
        bisect.insort(self._by_speed, (-quote.speed, quote.cluster_id))

    def unsubscribe(self, cluster_id: int) -> None:
        q = self._quotes.pop(cluster_id, None)
        if q is None:
            raise NotFound(cluster_id)
        self._by_price.remove((q.price, cluster_id))
        self._by_speed.remove((-q.speed, cluster_id))

    def quote(self, cluster_id: int) -> Quote:
        try:
            return self._quotes[cluster_id]
        except KeyError:
            raise NotFound(cluster_id) from None

    def _kth(self, index: list[tuple[float, int]], r: int) -> Quote | None:
        if r < 1:
            raise ValueError("r must be >= 1")
        self.stats.query_count += 1
        self.stats.modeled_query_messages += query_cost(len(self._quotes))
        if r > len(index):
            return None
        return self._quotes[index[r - 1][1]]

    def kth_cheapest(self, r: int) -> Quote | None:
        """r-th lowest price, ties by ascending cluster id."""
        return self._kth(self._by_price, r)

    def kth_fastest(self, r: int) -> Quote | None:
        """r-th highest speed, ties by ascending cluster id."""
        return self._kth(self._by_speed, r)
