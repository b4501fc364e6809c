"""Experiment commands.

Every command is a pure function of its config file, seed, and input
files: rerunning with the same inputs produces byte-identical outputs.
Each command owns a fixed random stream id so its draws stay stable no
matter which other commands ran before it.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..diagnostics import (
    DiagnosticsReport,
    c2st,
    c2st_pvalue,
    ecdf_uniformity,
    sbc_ranks,
    write_report,
)
from ..errors import CheckpointError, ConfigError, DataError, NumericError
from ..household import PARAM_NAMES as HOUSEHOLD_PARAM_NAMES
from ..household.encode import read_dataset
from ..mcmc import chain_diagnostics, posterior_param_draws, write_chain_summary
from ..npe import (
    NpeArchitecture,
    TrainConfig,
    grad_check,
    init_params,
    load_checkpoint,
    make_batch,
    save_checkpoint,
)
from ..npe.checkpoint import FORMAT_VERSION
from ..randkit import RngStream
from .apps import get_app
from .config import ExperimentConfig
from .io import read_columns, read_tsv, write_kv, write_tsv

OUTPUT_ROOT_ENV = "SELBI_OUTPUT_ROOT"

# stream id per command: reruns of one command are byte-identical and
# no command's draws depend on which others ran first
STREAMS = {
    "simulate": 1,
    "train": 2,
    "infer": 3,
    "sbc": 4,
    "c2st": 5,
    "mcmc": 6,
    "gradcheck": 7,
}


def output_root(cfg: ExperimentConfig, out=None) -> Path:
    """Resolve the run directory: flag beats config, env var is the base."""
    base = Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
    chosen = Path(out) if out else Path(cfg.output_dir)
    return chosen if chosen.is_absolute() else base / chosen


def _rng(cfg: ExperimentConfig, command: str) -> RngStream:
    return RngStream(cfg.seed, STREAMS[command])


def _map_indexed(workers: int, fn, items: list) -> list:
    """fn(j, item) over items, optionally on a thread pool, order kept."""
    if workers <= 1:
        return [fn(j, item) for j, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(items)), items))


def _sims_dir(root) -> Path:
    return Path(root) / "sims"


def _load_manifest(root, app) -> list:
    path = _sims_dir(root) / "manifest.tsv"
    if not path.exists():
        raise DataError(f"missing dataset manifest {path}; run the simulate command first")
    return read_columns(path, "index", "file", *app.cond_columns)


def _load_theta(root, app) -> dict:
    path = _sims_dir(root) / "theta.tsv"
    header, rows = read_tsv(path)
    expected = ["index", *app.param_names]
    if header != expected:
        raise DataError(f"{path}: parameter columns {header} do not match {expected}")
    return {int(r[0]): np.array([float(v) for v in r[1:]]) for r in rows}


def _check_encoding(model, rows, cond) -> None:
    # a dataset encoded for a different application (or observation
    # scheme) must fail loudly, tagged with the checkpoint version
    arch = model.architecture_
    row_dim = int(np.asarray(rows).shape[1])
    cond_dim = 0 if cond is None else int(np.asarray(cond).size)
    if row_dim != arch.row_dim or cond_dim != arch.cond_dim:
        raise CheckpointError(
            f"checkpoint format v{FORMAT_VERSION} expects row dim {arch.row_dim} "
            f"and condition dim {arch.cond_dim}; dataset encodes row dim {row_dim} "
            f"and condition dim {cond_dim}"
        )


def cmd_simulate(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    app = get_app(cfg.application)
    sim = cfg.simulate
    sims = _sims_dir(root)
    entries = []
    if sim.n > 0:
        rng = _rng(cfg, "simulate")
        ctx = app.prepare(sim, rng.child(0))
        pair_rng = rng.child(1)

        def one(j, fields):
            pair = app.draw_pair(ctx, fields, pair_rng.child(j))
            fname = f"dataset_{j:05d}{app.file_suffix}"
            app.write_domain(sims / "datasets" / fname, pair)
            return pair, f"datasets/{fname}"

        fields_list = [app.cycle_fields(sim, j) for j in range(sim.n)]
        entries = _map_indexed(workers, one, fields_list)
    write_tsv(
        sims / "theta.tsv",
        ("index", *app.param_names),
        [[j, *pair.theta.tolist()] for j, (pair, _) in enumerate(entries)],
    )
    write_tsv(
        sims / "manifest.tsv",
        ("index", "file", *app.cond_columns),
        [[j, rel, *(pair.fields[c] for c in app.cond_columns)]
         for j, (pair, rel) in enumerate(entries)],
    )
    print(f"simulate: wrote {len(entries)} datasets under {sims}")


def cmd_train(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    app = get_app(cfg.application)
    sims = _sims_dir(root)
    meta = _load_manifest(root, app)
    theta_by_index = _load_theta(root, app)
    n_train = cfg.train.n_train or len(meta)
    if n_train > len(meta):
        raise DataError(f"train requested {n_train} pairs but only {len(meta)} are simulated")
    if n_train == 0:
        raise DataError("no simulated datasets to train on")
    subset = meta[:n_train]
    rows_list, conds, thetas = [], [], []
    for r in subset:
        rows, cond = app.load_rows(sims, r)
        rows_list.append(rows)
        conds.append(cond)
        thetas.append(theta_by_index[int(r["index"])])
    conditions = None if conds[0] is None else np.vstack(conds)
    t = cfg.train
    model = app.make_model(TrainConfig(
        epochs=t.epochs, batch_size=t.batch_size, learning_rate=t.learning_rate,
        weight_decay=t.weight_decay, dropout=t.dropout, val_fraction=t.val_fraction,
        early_stop=t.early_stop, patience=t.patience,
    ))
    model.fit(rows_list, np.vstack(thetas), conditions, _rng(cfg, "train"))
    ckpt = Path(root) / "model.ckpt"
    save_checkpoint(model, ckpt)
    trace = model.loss_trace_
    write_tsv(
        Path(root) / "train_log.tsv",
        ("epoch", "train_nll", "val_nll", "smoothed_val"),
        list(zip(range(len(trace.train)), trace.train, trace.val, trace.smoothed)),
    )
    stopped = ("early stop at epoch " + str(trace.stopped_epoch)
               if trace.stopped_epoch is not None
               else f"ran all {len(trace.train)} epochs")
    print(f"train: fitted on {len(subset)} pairs ({stopped}); checkpoint at {ckpt}")


def cmd_infer(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    app = get_app(cfg.application)
    sims = _sims_dir(root)
    model = load_checkpoint(Path(root) / "model.ckpt")
    meta = _load_manifest(root, app)
    n = cfg.infer.n_datasets or len(meta)
    if n > len(meta):
        raise DataError(f"infer requested {n} datasets but only {len(meta)} are simulated")
    subset = meta[:n]
    rng = _rng(cfg, "infer")
    pdir = Path(root) / "posterior"

    def one(j, row):
        rows, cond = app.load_rows(sims, row)
        _check_encoding(model, rows, cond)
        s = model.sample_posterior(rows, cfg.infer.n_draws, rng.child(j), condition=cond)
        fname = f"posterior_{int(row['index']):05d}.tsv"
        write_tsv(pdir / fname, (*app.param_names, "log_density"),
                  np.column_stack([s.samples, s.log_density]).tolist())
        return [row["index"], row["file"], fname]

    entries = _map_indexed(workers, one, subset)
    write_tsv(pdir / "manifest.tsv", ("index", "dataset", "posterior"), entries)
    print(f"infer: wrote {len(entries)} posterior files under {pdir}")


def cmd_sbc(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    app = get_app(cfg.application)
    model = load_checkpoint(Path(root) / "model.ckpt")
    rng = _rng(cfg, "sbc")
    ctx = app.prepare(cfg.simulate, rng.child(0))
    groups = app.groups(cfg.simulate)
    family = cfg.sbc.family_size or len(app.param_names) * len(groups)
    ranks_map, ecdf_map, summary_rows = {}, {}, []
    for g, (label, fields) in enumerate(groups):
        def simulator(r, fields=fields):
            pair = app.draw_pair(ctx, fields, r)
            return pair.theta, (app.encode(pair), pair.cond)

        def sampler(data, n, r):
            rows, cond = data
            _check_encoding(model, rows, cond)
            return model.sample_posterior(rows, n, r, condition=cond).samples

        ranks = sbc_ranks(sampler, simulator, cfg.sbc.n_sims, cfg.sbc.n_draws,
                          rng.child(g + 1), param_names=app.param_names)
        report = ecdf_uniformity(ranks, level=cfg.sbc.level, family_size=family)
        ranks_map[label] = ranks
        ecdf_map[label] = report
        for p, name in enumerate(app.param_names):
            summary_rows.append([label, name, report.sup_dev[p],
                                 report.halfwidth, int(report.inside[p])])
    sdir = Path(root) / "sbc"
    write_report(DiagnosticsReport(title=f"{cfg.application} calibration",
                                   ranks=ranks_map, ecdf=ecdf_map), sdir)
    write_tsv(sdir / "summary.tsv",
              ("group", "param", "sup_dev", "halfwidth", "inside"), summary_rows)
    n_outside = sum(1 for r in summary_rows if not r[4])
    print(f"sbc: {len(groups)} group(s), family size {family}; "
          f"{n_outside} rank curve(s) outside the {cfg.sbc.level:.0%} band")


def cmd_c2st(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    app = get_app(cfg.application)
    model = load_checkpoint(Path(root) / "model.ckpt")
    sim = cfg.simulate
    if cfg.application == "idm" and cfg.c2st.observation:
        sim = dataclasses.replace(sim, observation=cfg.c2st.observation)
    rng = _rng(cfg, "c2st")
    ctx = app.prepare(sim, rng.child(0))
    n_pairs = cfg.c2st.n_pairs
    pair_rng, draw_rng = rng.child(1), rng.child(2)
    thetas, draws, summaries, conds = [], [], [], []
    for i in range(n_pairs):
        pair = app.draw_pair(ctx, app.cycle_fields(sim, i), pair_rng.child(i))
        rows = app.encode(pair)
        _check_encoding(model, rows, pair.cond)
        thetas.append(pair.theta)
        draws.append(model.sample_posterior(rows, 1, draw_rng.child(i),
                                            condition=pair.cond).samples[0])
        summaries.append(model.summarize(rows))
        conds.append(pair.cond)
    # classify in the network's own coordinates: unconstrained
    # parameters next to learned summaries (plus the condition vector)
    summary = np.vstack(summaries)
    parts_joint = [model.transform.forward(np.vstack(thetas)), summary]
    parts_post = [model.transform.forward(np.vstack(draws)), summary]
    if conds[0] is not None:
        cond = np.vstack(conds)
        parts_joint.append(cond)
        parts_post.append(cond)
    joint_pairs = np.column_stack(parts_joint)
    post_pairs = np.column_stack(parts_post)
    c = cfg.c2st
    result = c2st(post_pairs, joint_pairs, folds=c.folds, rng=rng.child(3),
                  unit=c.unit, epochs=c.classifier_epochs, patience=c.patience)
    result = c2st_pvalue(post_pairs, joint_pairs, result,
                         n_permutations=c.permutations, rng=rng.child(4),
                         folds=c.folds, epochs=c.classifier_epochs, patience=c.patience)
    cdir = Path(root) / "c2st"
    write_kv(cdir / "report.tsv", [
        ("n_pairs", result.n_pairs),
        ("unit", result.unit),
        ("folds", c.folds),
        ("permutations", c.permutations),
        ("mean_accuracy", result.mean_accuracy),
        ("t_obs", result.t_obs),
        ("p_value", result.p_value),
        ("high_variance", int(result.high_variance)),
    ])
    write_tsv(cdir / "accuracies.tsv", ("fold", "accuracy"),
              list(enumerate(np.asarray(result.accuracies).tolist())))
    print(f"c2st: mean accuracy {result.mean_accuracy:.3f}, "
          f"p = {result.p_value:.3f} over {c.permutations} permutations")


def cmd_mcmc(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    if cfg.application != "household":
        raise ConfigError("the mcmc command requires the household application")
    app = get_app(cfg.application)
    meta = _load_manifest(root, app)
    idx = cfg.mcmc.dataset_index
    if not 0 <= idx < len(meta):
        raise DataError(f"mcmc.dataset_index={idx} out of range for {len(meta)} datasets")
    data = read_dataset(_sims_dir(root) / meta[idx]["file"])
    m = cfg.mcmc
    theta, chains = posterior_param_draws(
        data, m.n_draws, _rng(cfg, "mcmc"), n_chains=m.n_chains,
        burn_in=m.burn_in, thin=m.thin, return_chains=True)
    mdir = Path(root) / "mcmc"
    write_tsv(mdir / "posterior_theta.tsv", HOUSEHOLD_PARAM_NAMES, theta.tolist())
    n_params = len(HOUSEHOLD_PARAM_NAMES)
    per_chain = min(c.draws.shape[0] for c in chains)
    if m.n_chains >= 2 and per_chain >= 100:
        diag = chain_diagnostics([c.draws[:, :n_params] for c in chains],
                                 param_names=HOUSEHOLD_PARAM_NAMES)
        write_chain_summary(diag, mdir / "chain_summary.tsv", chains=chains)
        print(f"mcmc: {theta.shape[0]} draws for dataset {idx}; "
              f"max r_hat {np.nanmax(diag.r_hat):.3f}")
    else:
        print(f"mcmc: {theta.shape[0]} draws for dataset {idx}; "
              f"too few chains or draws for convergence diagnostics")


def cmd_gradcheck(cfg: ExperimentConfig, root, workers: int = 1) -> None:
    app = get_app(cfg.application)
    rng = _rng(cfg, "gradcheck")
    ctx = app.prepare(cfg.simulate, rng.child(0))
    pair_rng = rng.child(1)
    rows_list, thetas, conds = [], [], []
    for j in range(cfg.gradcheck.n_pairs):
        pair = app.draw_pair(ctx, app.cycle_fields(cfg.simulate, j), pair_rng.child(j))
        rows_list.append(app.encode(pair))
        thetas.append(pair.theta)
        conds.append(pair.cond)
    proto = app.make_model(None)
    arch = NpeArchitecture(
        row_dim=rows_list[0].shape[1], n_params=proto.transform.n_params,
        summary_dim=proto.summary_dim, cond_dim=proto.cond_dim,
        encoder_width=proto.encoder_width, trunk_width=proto.trunk_width,
        m_components=proto.m_components)
    params = init_params(arch, rng.child(2))
    batch = make_batch(rows_list, proto.transform.forward(np.vstack(thetas)),
                       None if conds[0] is None else np.vstack(conds))
    err = grad_check(params, arch, batch, eps=cfg.gradcheck.eps, rng=rng.child(3))
    ok = err < cfg.gradcheck.tol
    write_kv(Path(root) / "gradcheck.tsv", [
        ("n_pairs", cfg.gradcheck.n_pairs),
        ("eps", cfg.gradcheck.eps),
        ("tol", cfg.gradcheck.tol),
        ("max_rel_error", err),
        ("status", "pass" if ok else "fail"),
    ])
    if not ok:
        raise NumericError(f"gradient check failed: max relative error "
                           f"{err:.3e} >= {cfg.gradcheck.tol:g}")
    print(f"gradcheck: max relative error {err:.3e} < {cfg.gradcheck.tol:g}")


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "infer": cmd_infer,
    "sbc": cmd_sbc,
    "c2st": cmd_c2st,
    "mcmc": cmd_mcmc,
    "gradcheck": cmd_gradcheck,
}
