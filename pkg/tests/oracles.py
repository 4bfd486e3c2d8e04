"""Brute-force graph oracles, independent of the chains module.

Everything here works on a plain boolean adjacency matrix built directly
from apply_map and the space metric, with reachability done by breadth-first
frontier expansion in numpy. Chains of length >= 1 throughout, matching the
"at least one step" convention for delta-chains.
"""

import numpy as np

from ifs_lab.spaces import coord_distance, distance, epsilon_net, points_to_coords
from ifs_lab.systems import apply_map


def net_adjacency(sys, delta, eps):
    """adj[u, v] iff d(f_l(net_u), net_v) < delta for some letter l."""
    net = epsilon_net(sys.space, eps)
    n = len(net)
    coords = points_to_coords(sys.space, net)
    adj = np.zeros((n, n), dtype=bool)
    for m in sys.maps:
        images = points_to_coords(sys.space, [apply_map(m, p) for p in net])
        if coords.ndim == 1:
            pair = coord_distance(sys.space, images.reshape(n, 1), coords.reshape(1, n))
        else:
            pair = coord_distance(
                sys.space, images[:, None, :], np.broadcast_to(coords[None, :, :], (n, n, 3))
            )
        adj |= pair < delta
    return net, coords, adj


def reach_from(adj, start):
    """Nodes reachable from start by a path of length >= 1."""
    seen = adj[start].copy()
    frontier = seen.copy()
    while frontier.any():
        nxt = adj[frontier].any(axis=0) & ~seen
        seen |= nxt
        frontier = nxt
    return seen


def recurrent_nodes(adj):
    return [u for u in range(adj.shape[0]) if reach_from(adj, u)[u]]


def all_pairs_transitive(adj):
    n = adj.shape[0]
    return all(reach_from(adj, u).all() for u in range(n))


def reachable(adj, i, j):
    return bool(reach_from(adj, i)[j])
