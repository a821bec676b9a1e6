"""Command line entry point wiring every module together.

Commands
  gen-data   write train/test channel datasets plus a scenario sidecar
  verify     run the executable math checks; nonzero exit on any failure
  train      train a model; writes history.csv and checkpoint.json
  eval       evaluate a checkpoint against cached references; eval.csv
  baseline   run wmmse/mrt per sample; baseline.csv
  sweep      learning or generalization sweeps; sweep.csv

Every command accepts --config FILE (JSON) whose keys are the long flag
names with dashes turned into underscores; explicit flags override the
file, which overrides built-in defaults. The fully resolved configuration
is echoed into the output directory so a run can be reproduced from its
artifacts alone. CSV floats carry 12 significant digits and all files are
written atomically (temp file + rename).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import aagnn
from . import autodiff as ad
from . import baselines
from . import equivariance
from . import objective
from . import scenario
from . import training

# anchor configuration: small enough that the WMMSE references stay cheap
DESK_ANCHOR = {"k": 4, "m": 3, "n": 8, "p": 1.0, "edge_snr_db": 5.0,
               "n_train": 1000, "n_test": 200}
# full-scale configuration used by the reference experiments
PAPER_SCALE = {"k": 8, "m": 4, "n": 16, "n_train": 12800, "n_test": 1000,
               "sweep_k": (2, 16), "sweep_n": (8, 24), "sweep_m": (1, 7)}


# ---------------------------------------------------------------------------
# small io helpers
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float) or isinstance(x, np.floating):
        return "%.12g" % x
    return str(x)


def atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) for c in row))
    atomic_write(path, "\n".join(lines) + "\n")


def _echo_config(outdir, resolved):
    atomic_write(os.path.join(outdir, "config.json"),
                 json.dumps(resolved, indent=2, sort_keys=True) + "\n")


def _resolve(args, defaults):
    """defaults < json config file < explicit flags (flags parse to None
    when absent)."""
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise SystemExit("config file has unknown keys: %s"
                             % ", ".join(sorted(unknown)))
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _require_file(path, what):
    if not os.path.exists(path):
        raise SystemExit("%s not found: %s" % (what, path))
    return path


def _model_config(res, h):
    return aagnn.ModelConfig(
        n_layers=res["layers"], width=res["width"],
        attention=res["attention"] == "on", power_mode=res["power_mode"],
        input_scale=aagnn.calibrate_input_scale(h), seed=res["seed"])


def _train_config(res):
    return training.TrainConfig(
        epochs=res["epochs"], batch_size=res["batch_size"],
        learning_rate=res["learning_rate"], seed=res["seed"],
        eval_every=res["eval_every"], grad_clip=res["grad_clip"])


def _load_or_build_cache(cache_path, dataset, workers, default_path):
    """Load a digest-matching cache or build one; returns (cache, path)."""
    path = cache_path or default_path
    if cache_path and os.path.exists(cache_path):
        cache = training.load_cache(cache_path)
        if cache.get("digest") != dataset.digest():
            raise SystemExit("cache %s is stale for this dataset; delete it "
                             "or pass a fresh path" % cache_path)
        return cache, path
    cache = training.wmmse_cache_build(dataset, workers=workers)
    training.save_cache(cache, path)
    return cache, path


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

GEN_DEFAULTS = {"k": DESK_ANCHOR["k"], "m": DESK_ANCHOR["m"],
                "n": DESK_ANCHOR["n"], "p": DESK_ANCHOR["p"],
                "edge_snr_db": DESK_ANCHOR["edge_snr_db"],
                "isd": scenario.DEFAULT_ISD,
                "n_train": DESK_ANCHOR["n_train"],
                "n_test": DESK_ANCHOR["n_test"], "seed": 0}


def cmd_gen_data(args):
    res = _resolve(args, GEN_DEFAULTS)
    out = _ensure_out(args.out)
    train_ds = scenario.generate_dataset(
        res["n_train"], res["k"], res["m"], res["n"], seed=res["seed"],
        p_budget=res["p"], edge_snr_db=res["edge_snr_db"], isd=res["isd"])
    test_ds = scenario.generate_dataset(
        res["n_test"], res["k"], res["m"], res["n"], seed=res["seed"] + 1,
        p_budget=res["p"], edge_snr_db=res["edge_snr_db"], isd=res["isd"])
    train_path = os.path.join(out, "train.npz")
    test_path = os.path.join(out, "test.npz")
    scenario.save_dataset(train_ds, train_path)
    scenario.save_dataset(test_ds, test_path)
    sidecar = dict(res)
    sidecar.update({
        "format": scenario.CFDS_VERSION,
        "noise_power": train_ds.noise_power,
        "train_file": "train.npz", "test_file": "test.npz",
        "train_digest": train_ds.digest(), "test_digest": test_ds.digest(),
    })
    atomic_write(os.path.join(out, "scenario.json"),
                 json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    _echo_config(out, res)
    print("wrote %s (%d samples) and %s (%d samples)"
          % (train_path, len(train_ds), test_path, len(test_ds)))
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_checks(checkpoint=None):
    """Yield (check_name, passed, detail) for the executable math battery."""
    rng = np.random.default_rng(0)

    # masked-split SINR identity against the direct form
    worst = 0.0
    for _ in range(1000):
        k, m, n = (int(rng.integers(1, 5)) for _ in range(3))
        sc = scenario.make_scenario(k, m, n, rng)
        h = scenario.sample_channel(sc, rng)
        v = (rng.standard_normal((k, m, n))
             + 1j * rng.standard_normal((k, m, n)))
        hs, hu = scenario.masked_channels(h, sc.assoc)
        a = objective.sinr_direct(h, sc.assoc, v, sc.noise_power)
        b = objective.sinr_masked(hs, hu, v, sc.noise_power)
        denom = np.maximum(np.abs(a), 1e-300)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    yield ("masked_sinr_identity", worst <= 1e-10,
           "max rel dev %.3e over 1000 instances" % worst)

    # commutant dimensions against the orbit-counting oracle
    cases = [((2, 2, 2), 6), ((3, 2, 2), 6), ((2, 3, 2), 6), ((2, 2, 3), 6),
             ((1, 1, 2), 2), ((1, 1, 1), 1)]
    bad = []
    for (n, m, k), want in cases:
        got = equivariance.commutant_dimension(n, m, k)
        orbits = equivariance.orbit_count(n, m, k)
        if got != want or orbits != want:
            bad.append("(%d,%d,%d): null %d orbit %d want %d"
                       % (n, m, k, got, orbits, want))
    yield ("commutant_dimension", not bad,
           "; ".join(bad) if bad else "6 shapes match the orbit oracle")

    # tied-weight commutation with permutation operators
    worst = 0.0
    for _ in range(50):
        spec_w = equivariance.random_weight_spec(3, 3, 3, rng)
        w = equivariance.materialize_weight(spec_w)
        triple = equivariance.random_triple(3, 3, 3, rng)
        worst = max(worst, equivariance.check_commutation(w, triple))
    yield ("weight_commutation", worst == 0.0,
           "max residual %.3e over 50 triples" % worst)

    # end-to-end model equivariance, random parameters
    worst = 0.0
    for attention in (True, False):
        cfg = aagnn.ModelConfig(n_layers=2, width=4, attention=attention,
                                input_scale=1.0)
        params = aagnn.init_params(cfg, np.random.default_rng(1))
        pol = aagnn.policy(params, cfg)
        for _ in range(50):
            k, m, n = 3, 2, 4
            sc = scenario.make_scenario(k, m, n, rng)
            h = scenario.sample_channel(sc, rng)
            hs, hu = scenario.masked_channels(h, sc.assoc)
            triple = equivariance.random_triple(k, m, n, rng)
            _, dev = equivariance.check_policy_equivariance(
                pol, hs, hu, triple)
            worst = max(worst, dev)
    yield ("model_equivariance", worst <= 1e-6,
           "max rel dev %.3e over 100 triples" % worst)

    if checkpoint:
        params, cfg = aagnn.load_checkpoint(checkpoint)
        pol = aagnn.policy(params, cfg)
        worst = 0.0
        for _ in range(20):
            k, m, n = 3, 2, 4
            sc = scenario.make_scenario(k, m, n, rng)
            h = scenario.sample_channel(sc, rng)
            hs, hu = scenario.masked_channels(h, sc.assoc)
            triple = equivariance.random_triple(k, m, n, rng)
            _, dev = equivariance.check_policy_equivariance(
                pol, hs, hu, triple)
            worst = max(worst, dev)
        yield ("checkpoint_equivariance", worst <= 1e-6,
               "max rel dev %.3e over 20 triples" % worst)

    # full-model gradient vs finite differences
    worst = 0.0
    h = (rng.standard_normal((1, 2, 2, 2))
         + 1j * rng.standard_normal((1, 2, 2, 2))) / np.sqrt(2)
    assoc = np.ones((1, 2, 2))
    assoc[0, 0, 1] = 0.0
    for attention in (True, False):
        cfg = aagnn.ModelConfig(n_layers=2, width=2, attention=attention,
                                input_scale=1.0)
        params = aagnn.init_params(cfg, np.random.default_rng(6))
        names = [nm for nm, _ in aagnn.param_items(params)]
        arrays = [arr for _, arr in aagnn.param_items(params)]

        def fn(*leaves):
            pvars = dict(zip(names, leaves))
            return training.loss_graph(leaves[0].tape, pvars, cfg, h, assoc,
                                       1.0, 0.05)

        worst = max(worst, ad.grad_check(fn, arrays, eps=1e-5))
    yield ("gradient_check", worst <= 1e-5,
           "max rel err %.3e (attention on and off)" % worst)


def cmd_verify(args):
    rows = []
    failed = False
    for name, ok, detail in _verify_checks(args.checkpoint):
        status = "PASS" if ok else "FAIL"
        failed = failed or not ok
        rows.append((name, status, detail))
        print("%-26s %-4s %s" % (name, status, detail))
    if args.out:
        out = _ensure_out(args.out)
        write_csv(os.path.join(out, "verify.csv"),
                  ["check_name", "status", "detail"],
                  [(n, s, '"%s"' % d) for n, s, d in rows])
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

TRAIN_DEFAULTS = {"layers": 3, "width": 8, "attention": "on",
                  "power_mode": "full", "epochs": 50, "batch_size": 64,
                  "learning_rate": 0.005, "seed": 0, "eval_every": 0,
                  "grad_clip": 0.0, "workers": 1}


def cmd_train(args):
    res = _resolve(args, TRAIN_DEFAULTS)
    out = _ensure_out(args.out)
    train_ds = scenario.load_dataset(_require_file(args.train, "train dataset"))
    test_ds = None
    cache = None
    if args.test:
        test_ds = scenario.load_dataset(_require_file(args.test, "test dataset"))
        cache, cache_path = _load_or_build_cache(
            args.cache, test_ds, res["workers"],
            os.path.join(out, "cache.json"))
        res["cache_file"] = cache_path
    res["train_file"], res["test_file"] = args.train, args.test

    cfg = _model_config(res, train_ds.h)
    params = aagnn.init_params(cfg, np.random.default_rng(res["seed"]))
    try:
        _, hist = training.train(params, cfg, _train_config(res), train_ds,
                                 test_ds, cache)
    except training.TrainingDiverged as exc:
        print("training diverged: %s" % exc, file=sys.stderr)
        return 1
    write_csv(os.path.join(out, "history.csv"),
              ["epoch", "train_loss", "eval_norm_rate", "seconds"],
              hist.rows())
    aagnn.save_checkpoint(params, cfg, os.path.join(out, "checkpoint.json"))
    _echo_config(out, res)
    last_eval = [r for r in hist.eval_norm_rate if np.isfinite(r)]
    print("trained %d epochs; final loss %.6g%s"
          % (res["epochs"], hist.train_loss[-1] if hist.train_loss else
             float("nan"),
             "; eval norm rate %.4f" % last_eval[-1] if last_eval else ""))
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

EVAL_DEFAULTS = {"label": "aagnn", "workers": 1}


def cmd_eval(args):
    res = _resolve(args, EVAL_DEFAULTS)
    out = _ensure_out(args.out)
    ds = scenario.load_dataset(_require_file(args.data, "dataset"))
    params, cfg = aagnn.load_checkpoint(
        _require_file(args.checkpoint, "checkpoint"))
    cache, cache_path = _load_or_build_cache(
        args.cache, ds, res["workers"], os.path.join(out, "cache.json"))
    res.update({"checkpoint": args.checkpoint, "data": args.data,
                "cache_file": cache_path})

    v_all = training.forward_dataset(params, cfg, ds)
    rates = training.sample_sum_rates(v_all, ds)
    ratios = rates / training.cache_references(cache, ds)
    rows = [(i, res["label"], rates[i], ratios[i]) for i in range(len(ds))]
    write_csv(os.path.join(out, "eval.csv"),
              ["sample_id", "method", "sum_rate_nats", "norm_rate"], rows)
    _echo_config(out, res)
    print("mean norm rate %.6g over %d samples" % (ratios.mean(), len(ds)))
    return 0


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------

BASELINE_DEFAULTS = {"methods": "wmmse,mrt", "workers": 1}


def _wmmse_row(job):
    h, assoc, p, noise = job
    v, trace = baselines.wmmse(h, assoc, p, noise)
    sinr = objective.sinr_direct(h, assoc, v, noise)
    return (float(objective.sum_rate(sinr)), trace.converged, trace.iters)


def cmd_baseline(args):
    res = _resolve(args, BASELINE_DEFAULTS)
    out = _ensure_out(args.out)
    ds = scenario.load_dataset(_require_file(args.data, "dataset"))
    methods = [m.strip() for m in res["methods"].split(",") if m.strip()]
    unknown = set(methods) - {"wmmse", "mrt"}
    if unknown:
        raise SystemExit("unknown baseline methods: %s" % ", ".join(unknown))
    rows = []
    for method in methods:
        if method == "wmmse":
            jobs = [(ds.h[i], ds.assoc[i], ds.power_budget, ds.noise_power)
                    for i in range(len(ds))]
            if res["workers"] > 1:
                import concurrent.futures
                with concurrent.futures.ProcessPoolExecutor(
                        res["workers"]) as pool:
                    results = list(pool.map(_wmmse_row, jobs, chunksize=4))
            else:
                results = [_wmmse_row(j) for j in jobs]
            rows += [(i, "wmmse", r, c, it)
                     for i, (r, c, it) in enumerate(results)]
        else:
            for i in range(len(ds)):
                v = baselines.mrt(ds.h[i], ds.assoc[i], ds.power_budget)
                sinr = objective.sinr_direct(ds.h[i], ds.assoc[i], v,
                                             ds.noise_power)
                rows.append((i, "mrt", float(objective.sum_rate(sinr)),
                             True, 0))
    write_csv(os.path.join(out, "baseline.csv"),
              ["sample_id", "method", "sum_rate_nats", "converged", "iters"],
              rows)
    res["data"] = args.data
    _echo_config(out, res)
    print("wrote %d rows for %s" % (len(rows), ",".join(methods)))
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_DEFAULTS = {"k": DESK_ANCHOR["k"], "m": DESK_ANCHOR["m"],
                  "n": DESK_ANCHOR["n"], "p": DESK_ANCHOR["p"],
                  "edge_snr_db": DESK_ANCHOR["edge_snr_db"],
                  "n_eval": 25, "seed": 0, "workers": 1,
                  "layers": 3, "width": 8, "power_mode": "full",
                  "epochs": 50, "batch_size": 64, "learning_rate": 0.005,
                  "eval_every": 0, "grad_clip": 0.0}


def _ratio_stats(v_all, ds, refs):
    ratios = training.sample_sum_rates(v_all, ds) / refs
    return float(ratios.mean()), float(ratios.std())


def _sweep_eval_point(models, axis, value, res):
    """Evaluate trained models + mrt on one fresh dataset; yields rows."""
    dims = {"K": "k", "N": "n", "M": "m"}
    cfg_dims = {"k": res["k"], "m": res["m"], "n": res["n"]}
    cfg_dims[dims[axis]] = value
    seed = res["seed"] + 10000 + value
    ds = scenario.generate_dataset(
        res["n_eval"], cfg_dims["k"], cfg_dims["m"], cfg_dims["n"],
        seed=seed, p_budget=res["p"], edge_snr_db=res["edge_snr_db"])
    cache = training.wmmse_cache_build(ds, workers=res["workers"])
    refs = training.cache_references(cache, ds)
    rows = []
    for label, (params, mcfg) in models.items():
        v_all = training.forward_dataset(params, mcfg, ds)
        mean, std = _ratio_stats(v_all, ds, refs)
        rows.append((axis, value, label, mean, std, len(ds), seed))
    v_mrt = np.stack([baselines.mrt(ds.h[i], ds.assoc[i], ds.power_budget)
                      for i in range(len(ds))])
    mean, std = _ratio_stats(v_mrt, ds, refs)
    rows.append((axis, value, "mrt", mean, std, len(ds), seed))
    return rows


def cmd_sweep(args):
    res = _resolve(args, SWEEP_DEFAULTS)
    out = _ensure_out(args.out)
    values = [int(v) for v in args.values.split(",")]
    rows = []

    if args.axis == "samples":
        train_ds = scenario.load_dataset(
            _require_file(args.train, "train dataset"))
        test_ds = scenario.load_dataset(
            _require_file(args.test, "test dataset"))
        cache, cache_path = _load_or_build_cache(
            args.cache, test_ds, res["workers"],
            os.path.join(out, "cache.json"))
        refs = training.cache_references(cache, test_ds)
        res["cache_file"] = cache_path
        for count in values:
            if count > len(train_ds):
                raise SystemExit("requested %d samples; train set has %d"
                                 % (count, len(train_ds)))
            sub = scenario.Dataset(h=train_ds.h[:count],
                                   assoc=train_ds.assoc[:count],
                                   power_budget=train_ds.power_budget,
                                   noise_power=train_ds.noise_power)
            for label, attention in (("aagnn", "on"), ("aagnn_woa", "off")):
                sub_res = dict(res, attention=attention)
                cfg = _model_config(sub_res, sub.h)
                params = aagnn.init_params(cfg,
                                           np.random.default_rng(res["seed"]))
                training.train(params, cfg, _train_config(sub_res), sub)
                v_all = training.forward_dataset(params, cfg, test_ds)
                mean, std = _ratio_stats(v_all, test_ds, refs)
                rows.append(("samples", count, label, mean, std,
                             len(test_ds), res["seed"]))
            v_mrt = np.stack([baselines.mrt(test_ds.h[i], test_ds.assoc[i],
                                            test_ds.power_budget)
                              for i in range(len(test_ds))])
            mean, std = _ratio_stats(v_mrt, test_ds, refs)
            rows.append(("samples", count, "mrt", mean, std, len(test_ds),
                         res["seed"]))
    else:
        models = {}
        if args.checkpoint:
            models["aagnn"] = aagnn.load_checkpoint(args.checkpoint)
        if args.checkpoint_woa:
            models["aagnn_woa"] = aagnn.load_checkpoint(args.checkpoint_woa)
        if not models:
            raise SystemExit("generalization sweeps need --checkpoint "
                             "and/or --checkpoint-woa")
        for value in values:
            rows += _sweep_eval_point(models, args.axis, value, res)

    write_csv(os.path.join(out, "sweep.csv"),
              ["axis", "axis_value", "method", "mean_norm_rate", "std", "n",
               "seed"], rows)
    res.update({"axis": args.axis, "values": values})
    _echo_config(out, res)
    print("wrote %d sweep rows" % len(rows))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub, *names):
    if "config" in names:
        sub.add_argument("--config", help="JSON config file")
    if "out" in names:
        sub.add_argument("--out", required=True, help="output directory")


def build_parser():
    p = argparse.ArgumentParser(prog="cfprecode", description=__doc__)
    subs = p.add_subparsers(dest="command", required=True)

    g = subs.add_parser("gen-data", help="generate CFDS datasets")
    _add_common(g, "config", "out")
    for flag in ("k", "m", "n", "n_train", "n_test", "seed"):
        g.add_argument("--" + flag.replace("_", "-"), dest=flag, type=int)
    for flag in ("p", "edge_snr_db", "isd"):
        g.add_argument("--" + flag.replace("_", "-"), dest=flag, type=float)
    g.set_defaults(func=cmd_gen_data)

    v = subs.add_parser("verify", help="run the math check battery")
    v.add_argument("--out", help="directory for verify.csv")
    v.add_argument("--checkpoint", help="also check a trained model")
    v.set_defaults(func=cmd_verify)

    t = subs.add_parser("train", help="train a model")
    _add_common(t, "config", "out")
    t.add_argument("--train", required=True, help="training CFDS file")
    t.add_argument("--test", help="eval CFDS file")
    t.add_argument("--cache", help="WMMSE reference cache path")
    for flag in ("layers", "width", "epochs", "batch_size", "seed",
                 "eval_every", "workers"):
        t.add_argument("--" + flag.replace("_", "-"), dest=flag, type=int)
    for flag in ("learning_rate", "grad_clip"):
        t.add_argument("--" + flag.replace("_", "-"), dest=flag, type=float)
    t.add_argument("--attention", choices=["on", "off"])
    t.add_argument("--power-mode", dest="power_mode",
                   choices=["full", "clip"])
    t.set_defaults(func=cmd_train)

    e = subs.add_parser("eval", help="evaluate a checkpoint")
    _add_common(e, "config", "out")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True, help="CFDS file")
    e.add_argument("--cache", help="WMMSE reference cache path")
    e.add_argument("--label", help="method label for the CSV")
    e.add_argument("--workers", type=int)
    e.set_defaults(func=cmd_eval)

    b = subs.add_parser("baseline", help="run numerical baselines")
    _add_common(b, "config", "out")
    b.add_argument("--data", required=True, help="CFDS file")
    b.add_argument("--methods", help="comma list from {wmmse, mrt}")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_baseline)

    s = subs.add_parser("sweep", help="learning or generalization sweep")
    _add_common(s, "config", "out")
    s.add_argument("--axis", required=True,
                   choices=["samples", "K", "N", "M"])
    s.add_argument("--values", required=True, help="comma list of ints")
    s.add_argument("--checkpoint", help="trained attention model")
    s.add_argument("--checkpoint-woa", dest="checkpoint_woa",
                   help="trained no-attention model")
    s.add_argument("--train", help="training CFDS (samples axis)")
    s.add_argument("--test", help="test CFDS (samples axis)")
    s.add_argument("--cache", help="WMMSE reference cache path")
    for flag in ("k", "m", "n", "n_eval", "seed", "workers", "layers",
                 "width", "epochs", "batch_size", "eval_every"):
        s.add_argument("--" + flag.replace("_", "-"), dest=flag, type=int)
    for flag in ("p", "edge_snr_db", "learning_rate", "grad_clip"):
        s.add_argument("--" + flag.replace("_", "-"), dest=flag, type=float)
    s.add_argument("--power-mode", dest="power_mode",
                   choices=["full", "clip"])
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
