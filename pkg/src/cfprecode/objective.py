"""SINR, sum rate, and per-AP power for cell-free downlink precoding.

Two SINR routes are provided: the direct association-gated form and the
masked-channel form that reconstructs the association from the split channel.
They agree to floating-point accuracy; the redundancy is the point (the second
form is what the learned model consumes).
"""

import numpy as np


def sinr_direct(h, assoc, v, noise_power):
    """Per-UE SINR from the gated channel/precoder products.

    gamma_k = |sum_m h_km^H d_km v_km|^2
              / (sum_{i != k} |sum_m h_km^H d_im v_im|^2 + noise).
    All of h, v are (K, M, N); assoc is (K, M). Returns (K,) real.
    """
    d = np.asarray(assoc, dtype=float)
    gated = d[:, :, None] * v
    # cross[k, i] = sum_m h_km^H d_im v_im
    cross = np.einsum("kmn,imn->ki", h.conj(), gated)
    sig = np.abs(np.diagonal(cross)) ** 2
    inter = (np.abs(cross) ** 2).sum(axis=1) - np.abs(np.diagonal(cross)) ** 2
    return sig / (inter + noise_power)


def sinr_masked(h_served, h_unserved, v, noise_power):
    """Per-UE SINR evaluated purely from the masked channel split.

    The serving indicator is reconstructed per (UE, AP) block as
    ||served|| / ||served + unserved|| with 0/0 -> 0; the desired-signal term
    uses the served part alone and the interference term uses the full channel
    times the reconstructed indicator.
    """
    full = h_served + h_unserved
    num = np.linalg.norm(h_served, axis=2)
    den = np.linalg.norm(full, axis=2)
    ratio = np.zeros_like(num)
    nz = den > 0
    ratio[nz] = num[nz] / den[nz]

    sig_amp = np.einsum("kmn,kmn->k", h_served.conj(), v)
    cross = np.einsum("kmn,imn->ki", full.conj(), ratio[:, :, None] * v)
    sig = np.abs(sig_amp) ** 2
    cross_pow = np.abs(cross) ** 2
    inter = cross_pow.sum(axis=1) - np.diagonal(cross_pow)
    return sig / (inter + noise_power)


def sum_rate(sinr):
    """Sum of per-UE rates ln(1 + gamma), in nats."""
    return float(np.log1p(np.asarray(sinr)).sum())


def rate_report(h, assoc, v, noise_power):
    """Convenience bundle: (sinr vector, rate vector, sum rate)."""
    s = sinr_direct(h, assoc, v, noise_power)
    rates = np.log1p(s)
    return s, rates, float(rates.sum())


def per_ap_power(v):
    """Transmit power per AP: sum_k ||v_km||^2. Returns (M,) real."""
    return (np.abs(v) ** 2).sum(axis=(0, 2))


def project_per_ap(v, p_budget):
    """Scale each AP violating the power budget back onto the constraint.

    Only violating APs are touched (scale min(1, sqrt(P/p_m))); zero-power APs
    stay as they are. Idempotent.
    """
    p = per_ap_power(v)
    scale = np.ones_like(p)
    hot = p > p_budget
    scale[hot] = np.sqrt(p_budget / p[hot])
    return v * scale[None, :, None]
