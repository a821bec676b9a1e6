"""Unsupervised training: maximize the batch-mean sum rate.

The loss is the negative mean sum rate of the network output, built end to
end on the autodiff tape (forward pass, SINR, log rates), so one backward
call yields every parameter gradient. The optimizer is the standard
adaptive-moment method with the moments tracked independently on the real
and imaginary coordinates of each complex parameter.

Evaluation reports the achieved sum rate normalized by a per-sample
reference computed once by the WMMSE baseline and cached to JSON. The cache
is keyed by the dataset content digest so a stale file cannot be reused
silently.
"""

import dataclasses
import json
import math
import os
import time

import numpy as np

from . import aagnn
from . import autodiff as ad
from . import baselines
from . import objective


@dataclasses.dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    train_path: str = ""        # informational; the CLI resolves paths
    eval_path: str = ""
    eval_every: int = 0         # 0: evaluate only after the last epoch
    grad_clip: float = 0.0      # 0 disables; else cap on the gradient 2-norm


@dataclasses.dataclass
class History:
    epoch: list
    train_loss: list
    eval_norm_rate: list        # nan on epochs without an evaluation pass
    seconds: list

    def rows(self):
        return list(zip(self.epoch, self.train_loss,
                        self.eval_norm_rate, self.seconds))


class TrainingDiverged(RuntimeError):
    """Raised when a batch loss stops being finite; carries the partial
    history. The caller's parameters are rolled back to the last finite
    epoch before this is raised."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def loss_graph(tape, pvars, config, h, assoc, p_budget, noise_power):
    """Negative batch-mean sum rate as a tape Var.

    h: (B, K, M, N) complex, assoc: (B, K, M). The SINR uses the gated
    products: cross[b, k, i] = sum_mn conj(h[b,k,m,n]) d[b,i,m] v[b,i,m,n].
    """
    v = aagnn.forward_graph(tape, pvars, config, h, assoc, p_budget)
    b, k_ues, m_aps, n_ant = h.shape
    gated = ad.mul(v, tape.leaf(
        np.broadcast_to(assoc[:, :, :, None], v.value.shape)))

    big = (b, k_ues, k_ues, m_aps, n_ant)
    rcv = tape.leaf(np.broadcast_to(h.conj()[:, :, None], big))
    src = ad.broadcast_to(ad.reshape(gated, (b, 1, k_ues, m_aps, n_ant)), big)
    cross = ad.sum_axis(ad.mul(rcv, src), (3, 4))        # (B, K, I)

    power = ad.abs2(cross)
    total = ad.sum_axis(power, 2)                        # (B, K)
    eye = tape.leaf(np.broadcast_to(np.eye(k_ues), (b, k_ues, k_ues)))
    sig = ad.sum_axis(ad.mul(power, eye), 2)
    inter = ad.sub(total, sig)
    sinr = ad.div(sig, ad.add(inter, tape.leaf(
        np.full((b, k_ues), float(noise_power)))))
    rates = ad.log1p(sinr)
    total_rate = ad.sum_axis(ad.reshape(rates, (b * k_ues,)), 0)
    return ad.scale(total_rate, -1.0 / b)


def loss(params, config, h, assoc, p_budget, noise_power):
    """Plain-number loss of a batch; h (B, K, M, N) or a single (K, M, N)."""
    h = np.asarray(h, dtype=complex)
    assoc = np.asarray(assoc, dtype=float)
    if h.ndim == 3:
        h, assoc = h[None], assoc[None]
    tape = ad.Tape()
    pvars = aagnn.make_param_vars(tape, params)
    lvar = loss_graph(tape, pvars, config, h, assoc, p_budget, noise_power)
    return float(lvar.value.reshape(()).real)


def batch_gradients(params, config, h, assoc, p_budget, noise_power,
                    chunk=16):
    """Loss and conjugate-slot gradients of the batch-mean sum rate.

    The batch mean is a chunk-size weighted mean of chunk means, so the
    graph for one micro-chunk at a time bounds memory while the result is
    that of the whole batch. Returns (loss, {name: slot}); a non-finite
    chunk loss returns (that loss, None).
    """
    b = h.shape[0]
    total = {name: np.zeros(arr.shape, dtype=complex)
             for name, arr in aagnn.param_items(params)}
    lsum = 0.0
    for start in range(0, b, chunk):
        hc = h[start:start + chunk]
        dc = assoc[start:start + chunk]
        weight = hc.shape[0] / b
        tape = ad.Tape()
        pvars = aagnn.make_param_vars(tape, params)
        lvar = loss_graph(tape, pvars, config, hc, dc, p_budget, noise_power)
        lval = float(lvar.value.reshape(()).real)
        if not np.isfinite(lval):
            return lval, None
        lsum += weight * lval
        tape.backward(lvar)
        for name, var in pvars.items():
            if var.grad is not None:
                total[name] += weight * var.grad
    return lsum, total


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class AdamState:
    step: int
    slots: dict     # name -> [mr, mi, vr, vi] float64 arrays


def adam_init(params):
    slots = {}
    for name, arr in aagnn.param_items(params):
        z = np.zeros(arr.shape)
        slots[name] = [z.copy(), z.copy(), z.copy(), z.copy()]
    return AdamState(step=0, slots=slots)


def adam_step(params, grads, state, config):
    """One in-place update. grads maps name -> conjugate-coordinate slot;
    the real-coordinate gradient is (2 Re slot, 2 Im slot)."""
    state.step += 1
    b1, b2, eps = config.beta1, config.beta2, config.adam_eps
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    lr = config.learning_rate

    if config.grad_clip > 0:
        sq = sum(float((np.abs(g) ** 2).sum()) for g in grads.values())
        norm = 2.0 * math.sqrt(sq)
        if norm > config.grad_clip:
            factor = config.grad_clip / norm
            grads = {n: g * factor for n, g in grads.items()}

    for name, arr in aagnn.param_items(params):
        g = grads[name]
        gr, gi = 2.0 * g.real, 2.0 * g.imag
        mr, mi, vr, vi = state.slots[name]
        mr *= b1
        mr += (1.0 - b1) * gr
        mi *= b1
        mi += (1.0 - b1) * gi
        vr *= b2
        vr += (1.0 - b2) * gr * gr
        vi *= b2
        vi += (1.0 - b2) * gi * gi
        arr -= lr * ((mr / bc1) / (np.sqrt(vr / bc2) + eps)
                     + 1j * ((mi / bc1) / (np.sqrt(vi / bc2) + eps)))


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def _restore(params, snapshot):
    for (name, arr), (_, good) in zip(aagnn.param_items(params),
                                      aagnn.param_items(snapshot)):
        arr[...] = good


def train(params, model_config, config, train_ds, eval_ds=None, cache=None):
    """Run the epoch loop in place on `params`; returns (params, History).

    Mini-batches are reshuffled every epoch from the config seed, so the
    whole trajectory is reproducible. A non-finite batch loss rolls the parameters
    back to the end of the last finite epoch and raises TrainingDiverged.
    """
    if config.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if config.learning_rate < 0:
        raise ValueError("learning_rate must be nonnegative")
    if config.epochs < 0:
        raise ValueError("epochs must be nonnegative")

    rng = np.random.default_rng(config.seed)
    state = adam_init(params)
    last_good = aagnn.clone_params(params)
    hist = History([], [], [], [])
    n = len(train_ds)

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            lval, grads = batch_gradients(
                params, model_config, train_ds.h[idx], train_ds.assoc[idx],
                train_ds.power_budget, train_ds.noise_power)
            if grads is None:
                _restore(params, last_good)
                raise TrainingDiverged(
                    "non-finite loss at epoch %d batch %d; parameters rolled "
                    "back to epoch %d" % (epoch, start // config.batch_size,
                                          epoch - 1), hist)
            adam_step(params, grads, state, config)
            batch_losses.append(lval)

        last_good = aagnn.clone_params(params)
        want_eval = eval_ds is not None and (
            epoch == config.epochs
            or (config.eval_every > 0 and epoch % config.eval_every == 0))
        if want_eval:
            norm_rate = evaluate(params, model_config, eval_ds, cache)[
                "mean_norm_rate"]
        else:
            norm_rate = float("nan")
        hist.epoch.append(epoch)
        hist.train_loss.append(float(np.mean(batch_losses)))
        hist.eval_norm_rate.append(norm_rate)
        hist.seconds.append(time.perf_counter() - t0)
    return params, hist


# ---------------------------------------------------------------------------
# evaluation against cached references
# ---------------------------------------------------------------------------

def forward_dataset(params, config, dataset, chunk=64):
    """Model outputs for every sample, chunked to bound graph memory."""
    outs = []
    for start in range(0, len(dataset), chunk):
        outs.append(aagnn.forward(params, config,
                                  dataset.h[start:start + chunk],
                                  dataset.assoc[start:start + chunk],
                                  dataset.power_budget))
    return np.concatenate(outs, axis=0)


def sample_sum_rates(v_all, dataset):
    """Achieved sum rate (nats) of precoder v_all[i] on sample i."""
    rates = np.empty(len(dataset))
    for i in range(len(dataset)):
        sinr = objective.sinr_direct(dataset.h[i], dataset.assoc[i],
                                     v_all[i], dataset.noise_power)
        rates[i] = objective.sum_rate(sinr)
    return rates


def normalized_ratios(v_all, dataset, cache):
    """Per-sample achieved/reference ratios against a digest-checked cache."""
    refs = cache_references(cache, dataset)
    return sample_sum_rates(v_all, dataset) / refs


def evaluate(params, config, dataset, cache):
    """Mean normalized sum rate of the model on a dataset."""
    v_all = forward_dataset(params, config, dataset)
    ratios = normalized_ratios(v_all, dataset, cache)
    return {"mean_norm_rate": float(ratios.mean()), "ratios": ratios}


# ---------------------------------------------------------------------------
# WMMSE reference cache
# ---------------------------------------------------------------------------

def _reference_rate(args):
    h, assoc, p_budget, noise, options = args
    v, _ = baselines.wmmse(h, assoc, p_budget, noise, options)
    sinr = objective.sinr_direct(h, assoc, v, noise)
    return float(objective.sum_rate(sinr))


def wmmse_cache_build(dataset, options=None, workers=1):
    """Solve WMMSE on every sample; returns the cache dict. workers > 1
    spreads samples over a process pool."""
    jobs = [(dataset.h[i], dataset.assoc[i], dataset.power_budget,
             dataset.noise_power, options) for i in range(len(dataset))]
    if workers > 1:
        import concurrent.futures
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            rates = list(pool.map(_reference_rate, jobs, chunksize=4))
    else:
        rates = [_reference_rate(j) for j in jobs]
    entries = [{"index": i, "sum_rate_nats": r} for i, r in enumerate(rates)]
    return {"digest": dataset.digest(), "entries": entries}


def cache_references(cache, dataset):
    """Reference sum rates aligned to dataset order; refuses a stale cache."""
    if cache is None:
        raise ValueError("no reference cache supplied")
    if cache.get("digest") != dataset.digest():
        raise ValueError("cache digest does not match the dataset; rebuild")
    by_index = {e["index"]: e["sum_rate_nats"] for e in cache["entries"]}
    refs = np.empty(len(dataset))
    for i in range(len(dataset)):
        if i not in by_index:
            raise ValueError("cache has no entry for sample %d" % i)
        refs[i] = by_index[i]
    return refs


def save_cache(cache, path):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(cache, fh)
    os.replace(tmp, path)


def load_cache(path):
    with open(path) as fh:
        return json.load(fh)
