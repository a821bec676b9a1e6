"""Joint UE/AP/antenna permutation machinery and shared-weight structure checks.

The symmetry group acts on edge indices (k, m, n) by permuting UEs (k), APs
(m), and antennas within each AP (n, with an independent permutation per AP).
A linear layer respects the symmetry iff its matrix commutes with every such
permutation operator; the commutant of this group on the edge-index space has
exactly six degrees of freedom once N, M, K >= 2, which is verified here by a
brute-force null-space computation rather than taken on faith.

Permutations are stored as gather arrays: `out = x[p]`, i.e. target slot j
takes source slot p[j]; the matching matrix is eye(n)[p].
"""

import dataclasses

import numpy as np


@dataclasses.dataclass
class PermTriple:
    """One group element: a UE permutation, an AP permutation, and one
    antenna permutation per AP (indexed by the source AP)."""

    ue_perm: np.ndarray        # (K,)
    ap_perm: np.ndarray        # (M,)
    antenna_perms: np.ndarray  # (M, N), row m permutes AP m's antennas

    @property
    def shape_kmn(self):
        return (len(self.ue_perm), len(self.ap_perm),
                self.antenna_perms.shape[1])


def identity_triple(n_ues, n_aps, n_antennas):
    return PermTriple(
        ue_perm=np.arange(n_ues),
        ap_perm=np.arange(n_aps),
        antenna_perms=np.tile(np.arange(n_antennas), (n_aps, 1)),
    )


def random_triple(n_ues, n_aps, n_antennas, rng):
    return PermTriple(
        ue_perm=rng.permutation(n_ues),
        ap_perm=rng.permutation(n_aps),
        antenna_perms=np.stack([rng.permutation(n_antennas)
                                for _ in range(n_aps)]),
    )


def inverse_triple(t):
    """The group inverse: applying it after t restores the identity."""
    inv_ap = np.argsort(t.ap_perm)
    inv_ant = np.stack([np.argsort(t.antenna_perms[t.ap_perm[j]])
                        for j in range(len(t.ap_perm))])
    return PermTriple(ue_perm=np.argsort(t.ue_perm), ap_perm=inv_ap,
                      antenna_perms=inv_ant)


def perm_matrix(p):
    return np.eye(len(p))[p]


def build_antenna_ap_operator(triple):
    """The (N*M x N*M) row operator: antenna permutations within each AP
    block first, then the AP block permutation."""
    m_aps, n = triple.antenna_perms.shape
    blocks = np.zeros((m_aps * n, m_aps * n))
    for m in range(m_aps):
        sl = slice(m * n, (m + 1) * n)
        blocks[sl, sl] = perm_matrix(triple.antenna_perms[m])
    return np.kron(perm_matrix(triple.ap_perm), np.eye(n)) @ blocks


def build_edge_operator(triple):
    """The full (NMK x NMK) operator on vec(state), UE index slowest."""
    return np.kron(perm_matrix(triple.ue_perm),
                   build_antenna_ap_operator(triple))


def apply_3d_perm(x, triple):
    """Permute a (K, M, N[, ...]) tensor or a (K, M) matrix by the triple.

    Equivalent to A . X . Pi_K^T on the stacked (NM, K) matrix view; extra
    trailing axes (e.g. a feature axis) ride along untouched.
    """
    ue, ap, ant = triple.ue_perm, triple.ap_perm, triple.antenna_perms
    y = x[ue][:, ap]
    if x.ndim == 2:
        return y
    idx = ant[ap]  # (M, N): target (m, n) reads source antenna idx[m, n]
    shape = (1, idx.shape[0], idx.shape[1]) + (1,) * (x.ndim - 3)
    return np.take_along_axis(y, idx.reshape(shape), axis=2)


def apply_3d_perm_stacked(mat, triple):
    """Same action on the stacked (NM, K) matrix form."""
    a = build_antenna_ap_operator(triple)
    return a @ mat @ perm_matrix(triple.ue_perm).T


@dataclasses.dataclass
class SharedWeightSpec:
    """Six tied coefficients, one per orbit of index pairs ((k,m,n),(k',m',n')):
    same edge; same UE+AP, other antenna; same UE, other AP; other UE, same
    AP + antenna; other UE, same AP, other antenna; other UE, other AP."""

    n_antennas: int
    n_aps: int
    n_ues: int
    self_edge: complex
    same_pair_other_antenna: complex
    same_ue_other_ap: complex
    other_ue_same_antenna: complex
    other_ue_other_antenna: complex
    other_ue_other_ap: complex


def random_weight_spec(n_antennas, n_aps, n_ues, rng):
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    return SharedWeightSpec(n_antennas, n_aps, n_ues, *c)


def materialize_weight(spec):
    """Dense (NMK x NMK) matrix with entries constant on index-pair orbits.

    Flat index order: n fastest, then m, then k (matches vec of the stacked
    state).
    """
    n, m_aps, k_ues = spec.n_antennas, spec.n_aps, spec.n_ues
    size = n * m_aps * k_ues
    idx = np.arange(size)
    k = idx // (m_aps * n)
    m = (idx // n) % m_aps
    an = idx % n
    sk = k[:, None] == k[None, :]
    sm = m[:, None] == m[None, :]
    sn = an[:, None] == an[None, :]
    return np.select(
        [sk & sm & sn, sk & sm, sk, sm & sn, sm],
        [spec.self_edge, spec.same_pair_other_antenna, spec.same_ue_other_ap,
         spec.other_ue_same_antenna, spec.other_ue_other_antenna],
        default=spec.other_ue_other_ap,
    ).astype(complex)


def check_commutation(w, triple):
    """Max |G W - W G| over entries, G the full edge permutation operator.

    Exactly zero for matrices constant on orbits (G only reorders entries).
    """
    g = build_edge_operator(triple)
    if w.shape != g.shape:
        raise ValueError("weight matrix size does not match the triple")
    return float(np.abs(g @ w - w @ g).max())


def _generator_triples(n_antennas, n_aps, n_ues):
    """Adjacent transpositions per factor + per-AP antenna transpositions.

    These generate the whole hierarchical group (each factor's adjacent
    transpositions generate its symmetric group).
    """
    gens = []
    for i in range(n_ues - 1):
        t = identity_triple(n_ues, n_aps, n_antennas)
        t.ue_perm[[i, i + 1]] = t.ue_perm[[i + 1, i]]
        gens.append(t)
    for i in range(n_aps - 1):
        t = identity_triple(n_ues, n_aps, n_antennas)
        t.ap_perm[[i, i + 1]] = t.ap_perm[[i + 1, i]]
        gens.append(t)
    for m in range(n_aps):
        for i in range(n_antennas - 1):
            t = identity_triple(n_ues, n_aps, n_antennas)
            t.antenna_perms[m, [i, i + 1]] = t.antenna_perms[m, [i + 1, i]]
            gens.append(t)
    return gens


def commutant_dimension(n_antennas, n_aps, n_ues, max_size=12):
    """Dimension of {W : W commutes with every group operator}, brute force.

    Stacks the linear constraints G W - W G = 0 for a generating set and
    counts the null-space dimension of the stacked system by SVD (singular
    values below 1e-8 times the largest count as zero).
    """
    size = n_antennas * n_aps * n_ues
    if size > max_size:
        raise ValueError("dense commutant solve limited to NMK <= %d" % max_size)
    gens = _generator_triples(n_antennas, n_aps, n_ues)
    if not gens:
        return size * size
    eye = np.eye(size)
    rows = []
    for t in gens:
        g = build_edge_operator(t)
        # vec(G W - W G) = (I (x) G - G^T (x) I) vec(W), column-major vec
        rows.append(np.kron(eye, g) - np.kron(g.T, eye))
    sv = np.linalg.svd(np.vstack(rows), compute_uv=False)
    rank = int((sv > 1e-8 * sv[0]).sum())
    return size * size - rank


def orbit_count(n_antennas, n_aps, n_ues):
    """Independent oracle for commutant_dimension: count the orbits of the
    group action on ordered index pairs by breadth-first closure under the
    generators."""
    size = n_antennas * n_aps * n_ues
    gens = _generator_triples(n_antennas, n_aps, n_ues)
    perms = []
    for t in gens:
        g = build_edge_operator(t)
        # flat index action; generators are transpositions, so self-inverse
        perms.append(np.argmax(g, axis=1))
    labels = -np.ones(size * size, dtype=int)
    n_orbits = 0
    for start in range(size * size):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = n_orbits
        while stack:
            pair = stack.pop()
            i, j = divmod(pair, size)
            for p in perms:
                q = p[i] * size + p[j]
                if labels[q] < 0:
                    labels[q] = n_orbits
                    stack.append(q)
        n_orbits += 1
    return n_orbits


def check_policy_equivariance(policy, h_served, h_unserved, triple,
                              tol=1e-6):
    """Test a precoding policy (h_served, h_unserved) -> v for joint
    permutation equivariance: permuting the inputs must permute the output.

    All arrays are (K, M, N) tensors. Returns (passed, max relative
    deviation); the deviation is measured against the largest output entry.
    """
    base = policy(h_served, h_unserved)
    lhs = apply_3d_perm(base, triple)
    rhs = policy(apply_3d_perm(h_served, triple),
                 apply_3d_perm(h_unserved, triple))
    scale = max(np.abs(lhs).max(), 1e-300)
    dev = float(np.abs(lhs - rhs).max() / scale)
    return dev <= tol, dev
