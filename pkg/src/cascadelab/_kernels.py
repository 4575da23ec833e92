"""Compiled inner loops."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def propagate(offsets, neighbor, k, active, order):
    """Monotone threshold dynamics to the fixed point, in place on ``active``.

    A vertex activates once strictly more than ``k[v]`` of its incident
    half-edges lead to active vertices (parallel edges count separately,
    self-loops never count). Seeds are queued in ``order``; processing is
    FIFO, so ``level`` equals the synchronous activation round. Returns the
    number of rounds.
    """
    n = offsets.size - 1
    cnt = np.zeros(n, np.int64)
    level = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    head = 0
    tail = 0
    for i in range(order.size):
        v = order[i]
        if active[v]:
            queue[tail] = v
            tail += 1
    rounds = 0
    while head < tail:
        u = queue[head]
        head += 1
        for h in range(offsets[u], offsets[u + 1]):
            w = neighbor[h]
            if w == u or active[w]:
                continue
            cnt[w] += 1
            if cnt[w] > k[w]:
                active[w] = True
                level[w] = level[u] + 1
                if level[w] > rounds:
                    rounds = level[w]
                queue[tail] = w
                tail += 1
    return rounds
