"""Association-aware permutation-equivariant GNN precoder.

The network operates on the edge state tensor x[k, m, n, :] (UE k, AP m,
antenna n, F feature channels). Each layer mixes, per association branch
(served vs unserved edges), four tied aggregates:

  self_mix   the edge's own state
  intra_ap   sum over the other antennas of the same (UE, AP) pair
  cross_ap   sum over the UE's edges at all other APs (all antennas)
  cross_ue   sum over the other UEs' edges at the same AP and antenna

Each name is an F x F complex matrix acting on the feature axis; F=1
reproduces the scalar tied-weight layer exactly. With attention enabled, the
layer instead forms a target vector t (self/intra/cross-AP terms) and
per-source vectors z (cross-UE terms), and combines them with complex scalar
gates alpha * <h, t> and beta * <h, z> built from the edge's own channel.

Everything runs through the local autodiff tape, so the training loss
differentiates end to end. The model is shape-polymorphic: no parameter
depends on K, M, or N.
"""

import dataclasses
import json
import math
import os

import numpy as np

from . import autodiff as ad
from . import scenario


@dataclasses.dataclass
class ModelConfig:
    n_layers: int = 3
    width: int = 8
    attention: bool = True
    activation: str = "leaky_relu_ri"   # or "none"
    leak_slope: float = 0.1
    power_mode: str = "full"            # "full" rescale or "clip" projection
    input_scale: float = 1.0            # fixed channel pre-scale, calibrated once
    seed: int = 0


@dataclasses.dataclass
class BranchParams:
    self_mix: np.ndarray
    intra_ap: np.ndarray
    cross_ap: np.ndarray
    cross_ue: np.ndarray


@dataclasses.dataclass
class LayerParams:
    served: BranchParams
    unserved: BranchParams
    attn_self: np.ndarray   # (F,) complex, gates <h,t>
    attn_cross: np.ndarray  # (F,) complex, gates <h,z>


@dataclasses.dataclass
class ModelParams:
    lift: np.ndarray        # (F,) input 1 -> F map
    collapse: np.ndarray    # (F,) output F -> 1 map
    layers: list


def _complex_normal(rng, shape, std):
    return std * (rng.standard_normal(shape)
                  + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def init_params(config, rng=None):
    """Fresh parameters: layer matrices complex Gaussian with entry std
    1/sqrt(F); lift starts as F plain copies of the channel; attention gates
    start at the real constant 0.1 (the channel pre-scale keeps the gated
    products O(1), see ModelConfig.input_scale)."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    f = config.width
    std = 1.0 / math.sqrt(f)

    def branch():
        return BranchParams(*(_complex_normal(rng, (f, f), std)
                              for _ in range(4)))

    layers = [LayerParams(served=branch(), unserved=branch(),
                          attn_self=np.full(f, 0.1, dtype=complex),
                          attn_cross=np.full(f, 0.1, dtype=complex))
              for _ in range(config.n_layers)]
    return ModelParams(lift=np.ones(f, dtype=complex),
                       collapse=_complex_normal(rng, (f,), std),
                       layers=layers)


def calibrate_input_scale(h):
    """1 / rms of the per-(UE, AP) channel norm over a training array.

    Applying this scale makes typical ||s*h_km||^2 about 1, so attention
    products and optimizer steps live at O(0.1..1).
    """
    h = np.asarray(h)
    block = (np.abs(h) ** 2).sum(axis=-1)  # ||h_km||^2 over antennas
    rms = math.sqrt(float(block.mean()))
    if rms == 0.0:
        raise ValueError("cannot calibrate on an all-zero channel set")
    return 1.0 / rms


def param_items(params):
    """Fixed-order (name, array) pairs; the optimizer and checkpoint key on
    these names."""
    items = [("lift", params.lift), ("collapse", params.collapse)]
    for i, layer in enumerate(params.layers):
        for branch_name in ("served", "unserved"):
            b = getattr(layer, branch_name)
            for field in ("self_mix", "intra_ap", "cross_ap", "cross_ue"):
                items.append(("layers.%d.%s.%s" % (i, branch_name, field),
                              getattr(b, field)))
        items.append(("layers.%d.attn_self" % i, layer.attn_self))
        items.append(("layers.%d.attn_cross" % i, layer.attn_cross))
    return items


def clone_params(params):
    def cb(b):
        return BranchParams(b.self_mix.copy(), b.intra_ap.copy(),
                            b.cross_ap.copy(), b.cross_ue.copy())
    return ModelParams(
        lift=params.lift.copy(), collapse=params.collapse.copy(),
        layers=[LayerParams(cb(l.served), cb(l.unserved),
                            l.attn_self.copy(), l.attn_cross.copy())
                for l in params.layers])


# ---------------------------------------------------------------------------
# forward graph
# ---------------------------------------------------------------------------

def make_param_vars(tape, params):
    """Register every parameter as a tape leaf; returns {name: Var}."""
    return {name: tape.leaf(arr) for name, arr in param_items(params)}


def _mix(x, mat):
    """Apply an (F, F) matrix Var to the trailing feature axis of x."""
    shape = x.shape
    flat = ad.reshape(x, (-1, shape[-1]))
    return ad.reshape(ad.matmul(flat, mat), shape)


def _bsum(terms):
    out = terms[0]
    for t in terms[1:]:
        out = ad.add(out, t)
    return out


def forward_graph(tape, pvars, config, h, assoc,
                  p_budget=scenario.DEFAULT_POWER):
    """Build the differentiable forward pass on an existing tape.

    h: (B, K, M, N) complex ndarray (constants), assoc: (B, K, M) 0/1.
    Returns the precoder Var of shape (B, K, M, N).
    """
    b, k_ues, m_aps, n_ant = h.shape
    f = config.width
    full = (b, k_ues, m_aps, n_ant, f)
    hs = config.input_scale * h

    d5 = np.broadcast_to(assoc[:, :, :, None, None], full)
    dmask = tape.leaf(d5)
    umask = tape.leaf(1.0 - d5)

    h_b = ad.broadcast_to(tape.leaf(hs[..., None]), full)
    hc_b = ad.broadcast_to(tape.leaf(hs.conj()[..., None]), full)
    lift = ad.broadcast_to(ad.reshape(pvars["lift"], (1, 1, 1, 1, f)), full)
    x = ad.mul(h_b, lift)

    def vec_b(pv):
        return ad.broadcast_to(ad.reshape(pv, (1, 1, 1, 1, f)),
                               (b, k_ues, m_aps, 1, f))

    for li in range(config.n_layers):
        prefix = "layers.%d." % li
        xs = ad.mul(x, dmask)
        xu = ad.mul(x, umask)

        def aggregates(xg):
            per_pair = ad.sum_axis(xg, 3, keepdims=True)       # sum over n
            intra = ad.sub(ad.broadcast_to(per_pair, full), xg)
            tot_ap = ad.sum_axis(xg, (2, 3), keepdims=True)    # sum over m, n
            cross_ap = ad.sub(ad.broadcast_to(tot_ap, full),
                              ad.broadcast_to(per_pair, full))
            per_ue = ad.sum_axis(xg, 1, keepdims=True)         # sum over k
            cross_ue = ad.sub(ad.broadcast_to(per_ue, full), xg)
            return intra, cross_ap, cross_ue

        intra_s, cross_ap_s, cross_ue_s = aggregates(xs)
        intra_u, cross_ap_u, cross_ue_u = aggregates(xu)

        target = _bsum([
            _mix(xs, pvars[prefix + "served.self_mix"]),
            _mix(intra_s, pvars[prefix + "served.intra_ap"]),
            _mix(cross_ap_s, pvars[prefix + "served.cross_ap"]),
            _mix(xu, pvars[prefix + "unserved.self_mix"]),
            _mix(intra_u, pvars[prefix + "unserved.intra_ap"]),
            _mix(cross_ap_u, pvars[prefix + "unserved.cross_ap"]),
        ])

        if config.attention:
            source = ad.add(_mix(xs, pvars[prefix + "served.cross_ue"]),
                            _mix(xu, pvars[prefix + "unserved.cross_ue"]))
            alpha = vec_b(pvars[prefix + "attn_self"])
            beta = vec_b(pvars[prefix + "attn_cross"])

            gate_self = ad.mul(ad.sum_axis(ad.mul(hc_b, target), 3,
                                           keepdims=True), alpha)
            self_term = ad.mul(ad.broadcast_to(gate_self, full), target)

            # all-pairs gates: receiver k at axis 1, source a at axis 2
            big = (b, k_ues, k_ues, m_aps, n_ant, f)
            src6 = ad.broadcast_to(
                ad.reshape(source, (b, 1, k_ues, m_aps, n_ant, f)), big)
            rcv6 = ad.broadcast_to(
                ad.reshape(hc_b, (b, k_ues, 1, m_aps, n_ant, f)), big)
            gates = ad.sum_axis(ad.mul(rcv6, src6), 4, keepdims=True)
            beta6 = ad.broadcast_to(
                ad.reshape(beta, (b, k_ues, 1, m_aps, 1, f)),
                (b, k_ues, k_ues, m_aps, 1, f))
            paired = ad.mul(ad.broadcast_to(ad.mul(gates, beta6), big), src6)
            all_sources = ad.sum_axis(paired, 2)

            # remove the a = k term to leave the a != k sum
            gate_own = ad.mul(ad.sum_axis(ad.mul(hc_b, source), 3,
                                          keepdims=True), beta)
            own_term = ad.mul(ad.broadcast_to(gate_own, full), source)
            x = ad.add(self_term, ad.sub(all_sources, own_term))
        else:
            x = _bsum([
                target,
                _mix(cross_ue_s, pvars[prefix + "served.cross_ue"]),
                _mix(cross_ue_u, pvars[prefix + "unserved.cross_ue"]),
            ])

        last = li == config.n_layers - 1
        if config.activation == "leaky_relu_ri" and not last:
            x = ad.leaky_relu_ri(x, config.leak_slope)

    v = ad.reshape(ad.matmul(ad.reshape(x, (-1, f)),
                             ad.reshape(pvars["collapse"], (f, 1))),
                   (b, k_ues, m_aps, n_ant))
    v = ad.mul(v, tape.leaf(np.broadcast_to(assoc[:, :, :, None], v.shape)))
    return _normalize_power(tape, v, config, p_budget)


def _normalize_power(tape, v, config, p_budget):
    """Per-AP output power handling on the tape.

    "full": every AP with nonzero output transmits at exactly P.
    "clip": APs over budget are scaled onto it, the rest are untouched.
    """
    powers = ad.sum_axis(ad.abs2(v), (1, 3), keepdims=True)  # (B, 1, M, 1)
    pval = powers.value.real
    if config.power_mode == "full":
        active = (pval > 0).astype(float)
        # dead APs: make the denominator 1 and zero the factor
        safe = ad.add(powers, tape.leaf(1.0 - active))
        num = tape.leaf(np.full(pval.shape, p_budget))
        factor = ad.mul(ad.sqrt(ad.div(num, safe)), tape.leaf(active))
    elif config.power_mode == "clip":
        hot = (pval > p_budget).astype(float)
        safe = ad.add(ad.mul(powers, tape.leaf(hot)),
                      tape.leaf((1.0 - hot) * p_budget))
        num = tape.leaf(np.full(pval.shape, p_budget))
        factor = ad.sqrt(ad.div(num, safe))
    else:
        raise ValueError("unknown power_mode %r" % (config.power_mode,))
    return ad.mul(v, ad.broadcast_to(factor, v.shape))


def forward(params, config, h, assoc, p_budget=scenario.DEFAULT_POWER):
    """Plain-array forward pass. h (K, M, N) or (B, K, M, N); returns the
    precoder with the same leading rank."""
    h = np.asarray(h, dtype=complex)
    assoc = np.asarray(assoc, dtype=float)
    single = h.ndim == 3
    if single:
        h, assoc = h[None], assoc[None]
    tape = ad.Tape()
    pvars = make_param_vars(tape, params)
    # graph is discarded once the value is read
    v = forward_graph(tape, pvars, config, h, assoc, p_budget)
    out = v.value
    return out[0] if single else out


def policy(params, config):
    """The model as a masked-channel policy (h_served, h_unserved) -> v,
    for the equivariance harness: association and the raw channel are
    reconstructed from the split."""
    def run(h_served, h_unserved):
        d = scenario.reconstruct_assoc(h_served, h_unserved)
        return forward(params, config, h_served + h_unserved, d)
    return run


# ---------------------------------------------------------------------------
# checkpoint io ("AAGNN v1"): JSON, complex arrays as nested [re, im] pairs.
# Values round-trip bit-exactly (floats are emitted with shortest repr).
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = "AAGNN v1"


def _encode(arr):
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode(obj):
    a = np.asarray(obj, dtype=float)
    return (a[..., 0] + 1j * a[..., 1]).astype(complex)


def checkpoint_dict(params, config):
    return {
        "format": CHECKPOINT_VERSION,
        "config": {
            "L": config.n_layers,
            "F": config.width,
            "activation": config.activation,
            "attention": config.attention,
            "seed": config.seed,
            "leak_slope": config.leak_slope,
            "power_mode": config.power_mode,
            "input_scale": config.input_scale,
        },
        "lift": _encode(params.lift),
        "collapse": _encode(params.collapse),
        "layers": [
            {
                "served": {f: _encode(getattr(layer.served, f))
                           for f in ("self_mix", "intra_ap", "cross_ap",
                                     "cross_ue")},
                "unserved": {f: _encode(getattr(layer.unserved, f))
                             for f in ("self_mix", "intra_ap", "cross_ap",
                                       "cross_ue")},
                "alpha": _encode(layer.attn_self),
                "beta": _encode(layer.attn_cross),
            }
            for layer in params.layers
        ],
    }


def params_from_dict(doc):
    if doc.get("format") != CHECKPOINT_VERSION:
        raise ValueError("unsupported checkpoint format: %r"
                         % doc.get("format"))
    c = doc["config"]
    config = ModelConfig(
        n_layers=int(c["L"]), width=int(c["F"]),
        attention=bool(c["attention"]), activation=str(c["activation"]),
        leak_slope=float(c["leak_slope"]), power_mode=str(c["power_mode"]),
        input_scale=float(c["input_scale"]), seed=int(c["seed"]))

    def branch(d):
        return BranchParams(*(_decode(d[f]) for f in
                              ("self_mix", "intra_ap", "cross_ap",
                               "cross_ue")))

    layers = [LayerParams(served=branch(l["served"]),
                          unserved=branch(l["unserved"]),
                          attn_self=_decode(l["alpha"]),
                          attn_cross=_decode(l["beta"]))
              for l in doc["layers"]]
    params = ModelParams(lift=_decode(doc["lift"]),
                         collapse=_decode(doc["collapse"]), layers=layers)
    return params, config


def save_checkpoint(params, config, path):
    blob = json.dumps(checkpoint_dict(params, config))
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path) as fh:
        return params_from_dict(json.load(fh))
