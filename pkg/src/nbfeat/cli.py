"""Command line interface.

Every command that writes a file also writes ``<file>.meta.json`` next
to it: the command name, its resolved options, the seed and the package
versions.  Outputs depend only on inputs and options, so reruns are
byte-identical.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import platform
import sys
from pathlib import Path

import click
import numpy as np
import scipy

from . import __version__
from .classify import Dataset, cross_validate, evaluate, nearest_centroid, split, train_svm
from .digraph import greedy_cover_count, load_edge_list, load_graph, write_edge_list
from .errors import NbfeatError
from .experiment import ExperimentConfig, features_for, run_experiment
from .params import REGISTRY, TABLE1_CODES, describe, parse_code
from .pipeline import (DEFAULT_M, BinSpec, parameter_table, rank_vertices, read_features,
                       read_spikes, write_features, write_spikes)
from .simdyn import LifConfig, StimulusProtocol, erdos_renyi, simulate
from .validation import VALIDATION_MODES, shuffled_activity

log = logging.getLogger("nbfeat")

SHARD_ROWS = 256


# helpers -------------------------------------------------------------------

def _versions() -> dict:
    return {"nbfeat": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_sidecar(path, command: str, config: dict, seed=None) -> None:
    meta = {"command": command, "config": config, "seed": seed, "versions": _versions()}
    with open(f"{path}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _codes(text: str) -> list[str]:
    codes = [c.strip() for c in text.split(",") if c.strip()]
    if not codes:
        raise click.BadParameter("no parameter codes given")
    for c in codes:
        try:
            parse_code(c)
        except NbfeatError as exc:
            raise click.BadParameter(str(exc)) from None
    return codes


def _code_list(ctx, param, value):
    if value is None:
        return None
    if value == "table1":
        return list(TABLE1_CODES)
    return _codes(value)


def _bins(ctx, param, value):
    try:
        return BinSpec.parse(value)
    except NbfeatError as exc:
        raise click.BadParameter(str(exc)) from None


def _graph(path, n_vertices=None):
    return load_edge_list(path, n_vertices) if n_vertices is not None else load_graph(path)


def _read_table_column(path, code: str, n: int) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if code not in header:
            raise click.UsageError(f"parameter table {path} has no column {code!r}")
        col = header.index(code)
        values = np.full(n, np.nan)
        for row in reader:
            values[int(row[0])] = float(row[col])
    if np.isnan(values).any():
        raise click.UsageError(f"parameter table {path} does not cover every vertex")
    return values


def _selection_values(g, code, table, threads):
    if table is not None:
        return _read_table_column(table, code, g.n_vertices)
    return parameter_table(g, [code], threads=threads)[:, 0]


seed_option = click.option("--seed", type=int, required=True, help="Random seed (mandatory).")
graph_n_option = click.option("--n-vertices", type=int, default=None,
                              help="Vertex count, if the edge list does not record it.")
bins_option = click.option("--bins", default="10:60:2", show_default=True, callback=_bins,
                           help="Time bins as START:STOP:K in ms.")


def _registry_help() -> str:
    return "\n".join(f"  {code:10s} {desc}" for code, desc in describe())


# commands ------------------------------------------------------------------

@click.group(help="Neighbourhood featurisation of binary dynamics on digraphs.\n\n"
                  "Parameter codes (gap codes also take _high/_low):\n\n\b\n" + _registry_help())
@click.option("--threads", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("-v", "--verbose", is_flag=True)
@click.version_option(__version__)
@click.pass_context
def cli(ctx, threads, verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"threads": max(1, threads)}


@cli.group(help="Per-vertex neighbourhood parameters.")
def params():
    pass


@params.command("list", help="Print the parameter registry.")
def params_list():
    for code, desc in describe():
        gap = " (_high/_low)" if REGISTRY[code].gap else ""
        click.echo(f"{code}\t{desc}{gap}")


@params.command("compute", help="Parameter table: one row per vertex, one column per code.")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("-c", "--codes", required=True, callback=_code_list,
              help="Comma separated codes, or 'table1'.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--vertices", default=None, help="Vertex range START:STOP (a shard).")
@click.option("--resume", is_flag=True, help="Skip vertices already present in OUT.")
@graph_n_option
@click.pass_context
def params_compute(ctx, graph, codes, out, vertices, resume, n_vertices):
    g = _graph(graph, n_vertices)
    click.echo(f"graph: {g.n_vertices} vertices, {g.n_edges} edges", err=True)
    lo, hi = 0, g.n_vertices
    if vertices:
        try:
            lo, hi = (int(x) for x in vertices.split(":"))
        except ValueError:
            raise click.BadParameter("expected START:STOP", param_hint="--vertices") from None
        lo, hi = max(0, lo), min(g.n_vertices, hi)
    header = ["vertex"] + codes
    todo = np.arange(lo, hi)
    mode = "w"
    if resume and os.path.exists(out):
        with open(out, newline="") as fh:
            text = fh.read()
        # a line without its newline was cut off mid-write and is recomputed
        complete = text[: text.rfind("\n") + 1]
        rows = list(csv.reader(complete.splitlines()))
        if rows and rows[0] != header:
            raise click.UsageError(f"{out} has different columns; cannot resume")
        done = {int(r[0]) for r in rows[1:] if len(r) == len(header)}
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(r for r in rows[1:] if len(r) == len(header))
        todo = np.array([v for v in todo if v not in done], dtype=np.int64)
        mode = "a"
    with open(out, mode, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            w.writerow(header)
        for start in range(0, len(todo), SHARD_ROWS):
            chunk = todo[start:start + SHARD_ROWS]
            table = parameter_table(g, codes, chunk, threads=ctx.obj["threads"])
            for v, row in zip(chunk.tolist(), table.tolist()):
                w.writerow([v] + [repr(x) for x in row])
            fh.flush()
            log.info("params: %d/%d vertices", start + len(chunk), len(todo))
    write_sidecar(out, "params compute", {"graph": graph, "codes": codes, "vertices": [lo, hi]})


@cli.command(help="Rank vertices by a parameter and write the chosen centres.")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("-p", "--selection", required=True, help="Selection parameter code.")
@click.option("-m", "--count", "m", type=int, default=DEFAULT_M, show_default=True)
@click.option("--end", type=click.Choice(["top", "bottom"]), default="top", show_default=True)
@click.option("--table", type=click.Path(exists=True), default=None,
              help="Precomputed parameter table from 'params compute'.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@graph_n_option
@click.pass_context
def select(ctx, graph, selection, m, end, table, out, n_vertices):
    _codes(selection)
    g = _graph(graph, n_vertices)
    if not 0 <= m <= g.n_vertices:
        raise click.BadParameter(f"cannot select {m} of {g.n_vertices} vertices", param_hint="-m")
    values = _selection_values(g, selection, table, ctx.obj["threads"])
    order = rank_vertices(values, end)[:m]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "vertex", selection])
        for r, v in enumerate(order.tolist(), start=1):
            w.writerow([r, v, repr(float(values[v]))])
    write_sidecar(out, "select", {"graph": graph, "selection": selection, "m": m, "end": end})


def _featurize_run(ctx, graph, spikes, selection, feature, m, end, bins, table, out,
                   n_vertices, validation=None, seed=0, command="featurize"):
    g = _graph(graph, n_vertices)
    ds = read_spikes(spikes, g.n_vertices)
    if len(ds) == 0:
        raise click.UsageError(f"{spikes} contains no trials")
    cfg = ExperimentConfig(selection=selection, feature=feature, m=m, end=end, bins=bins,
                           seed=seed, validation=validation)
    values = None
    if validation != "random_selection":
        values = _selection_values(g, selection, table, ctx.obj["threads"])
    feats = features_for(g, ds, cfg, values, ctx.obj["threads"])
    paths = []
    for i, (x, y) in enumerate(feats):
        path = out if len(feats) == 1 else _numbered(out, i)
        write_features(x, y, path)
        write_sidecar(path, command, {"graph": graph, "spikes": spikes, **cfg.to_dict()}, seed)
        paths.append(path)
    return paths


def _numbered(path: str, i: int) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{i:02d}{p.suffix}"))


@cli.command(help="Vector summaries of every trial (feature CSV).")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("spikes", type=click.Path(exists=True, dir_okay=False))
@click.option("-p", "--selection", required=True, help="Selection parameter code.")
@click.option("-q", "--feature", default="size", show_default=True, help="Feature parameter code.")
@click.option("-m", "--count", "m", type=int, default=DEFAULT_M, show_default=True)
@click.option("--end", type=click.Choice(["top", "bottom"]), default="top", show_default=True)
@bins_option
@click.option("--table", type=click.Path(exists=True), default=None)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@graph_n_option
@click.pass_context
def featurize(ctx, graph, spikes, selection, feature, m, end, bins, table, out, n_vertices):
    _codes(selection), _codes(feature)
    _featurize_run(ctx, graph, spikes, selection, feature, m, end, bins, table, out, n_vertices)


@cli.command("simulate", help="Erdos-Renyi graph plus simulated labelled spike trains.")
@click.option("-n", "--n-vertices", "n", type=int, default=1000, show_default=True)
@click.option("-p", "--density", type=float, default=0.01, show_default=True)
@click.option("--classes", type=int, default=8, show_default=True)
@click.option("--repeats", type=int, default=100, show_default=True)
@click.option("--receptors", type=int, default=100, show_default=True,
              help="Vertices driven by each stimulus class.")
@click.option("--stim-amplitude", type=float, default=StimulusProtocol.stim_amplitude, show_default=True)
@click.option("--noise", type=float, default=StimulusProtocol.noise_strength, show_default=True)
@click.option("--graph", "graph_in", type=click.Path(exists=True), default=None,
              help="Simulate on this edge list instead of a random graph.")
@seed_option
@click.option("-o", "--out-dir", required=True, type=click.Path(file_okay=False))
def simulate_cmd(n, density, classes, repeats, receptors, stim_amplitude, noise, graph_in, seed,
                 out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graph_seed, proto_seed, sim_seed = np.random.SeedSequence(seed).generate_state(3)
    g = load_graph(graph_in) if graph_in else erdos_renyi(n, density, int(graph_seed))
    proto = StimulusProtocol.random(g.n_vertices, int(proto_seed), n_classes=classes,
                                    receptor_count=receptors, repeats=repeats,
                                    stim_amplitude=stim_amplitude, noise_strength=noise)
    lif = LifConfig()
    ds = simulate(g, proto, lif, int(sim_seed))
    config = {"n_vertices": g.n_vertices, "density": density, "graph": graph_in,
              "protocol": proto.to_dict(), "lif": lif.__dict__ | {"weight": lif.synaptic_weight(g)}}
    write_edge_list(g, out / "graph.txt")
    write_sidecar(out / "graph.txt", "simulate", {"n_vertices": g.n_vertices, "density": density,
                                                  "graph": graph_in}, seed)
    write_spikes(ds, out / "spikes.csv")
    write_sidecar(out / "spikes.csv", "simulate", config, seed)
    write_json(out / "protocol.json", config)
    click.echo(f"{len(ds)} trials, {sum(t.n_spikes for t in ds)} spikes -> {out}", err=True)



@cli.command(help="Train/test SVM and cross-validation on a feature CSV.")
@click.argument("features", type=click.Path(exists=True, dir_okay=False))
@seed_option
@click.option("--train-fraction", type=float, default=0.6, show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("-C", "c", type=float, default=1.0, show_default=True)
@click.option("--baseline", is_flag=True, help="Also report the nearest-centroid baseline.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def classify(features, seed, train_fraction, folds, c, baseline, out):
    x, y = read_features(features)
    ds = Dataset(x, y)
    train, test = split(ds, train_fraction, seed)
    report = evaluate(train_svm(train, c=c), test).to_dict()
    report["cv"] = cross_validate(ds, folds, seed, c=c).to_dict()
    if baseline:
        report["nearest_centroid"] = nearest_centroid(train, test).accuracy
    write_json(out, report)
    write_sidecar(out, "classify", {"features": features, "train_fraction": train_fraction,
                                    "folds": folds, "C": c}, seed)
    click.echo(f"accuracy {report['accuracy']:.4f}  cv [{report['cv']['min']:.4f}, "
               f"{report['cv']['max']:.4f}]", err=True)


@cli.command(help="Accuracy grid over selection x feature codes, optionally simulating first.")
@click.option("--graph", type=click.Path(exists=True), default=None)
@click.option("--spikes", type=click.Path(exists=True), default=None)
@click.option("--simulate", "do_sim", is_flag=True,
              help="Generate graph and spikes with the 'simulate' defaults first.")
@click.option("--repeats", type=int, default=100, show_default=True)
@click.option("-p", "--selection", default="table1", show_default=True, callback=_code_list,
              help="Selection codes (comma separated or 'table1').")
@click.option("-q", "--feature", default="size", show_default=True, callback=_code_list,
              help="Feature codes (comma separated or 'table1').")
@click.option("-m", "--count", "m", type=int, default=DEFAULT_M, show_default=True)
@click.option("--end", type=click.Choice(["top", "bottom", "both"]), default="top", show_default=True)
@bins_option
@click.option("--validation", type=click.Choice(VALIDATION_MODES), default=None)
@seed_option
@click.option("-o", "--out-dir", required=True, type=click.Path(file_okay=False))
@graph_n_option
@click.pass_context
def experiment(ctx, graph, spikes, do_sim, repeats, selection, feature, m, end, bins, validation,
               seed, out_dir, n_vertices):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = ctx.obj["threads"]
    if do_sim:
        ctx.invoke(simulate_cmd, n=1000, density=0.01, classes=8, repeats=repeats, receptors=100,
                   stim_amplitude=StimulusProtocol.stim_amplitude,
                   noise=StimulusProtocol.noise_strength, graph_in=graph, seed=seed,
                   out_dir=str(out))
        graph, spikes = str(out / "graph.txt"), str(out / "spikes.csv")
    if graph is None or spikes is None:
        raise click.UsageError("give --graph and --spikes, or --simulate")
    g = _graph(graph, n_vertices)
    ds = read_spikes(spikes, g.n_vertices)
    if len(ds) == 0:
        raise click.UsageError(f"{spikes} contains no trials")
    table = parameter_table(g, selection, threads=threads)
    ends = ["top", "bottom"] if end == "both" else [end]
    rows = []
    for e in ends:
        for i, p in enumerate(selection):
            for q in feature:
                cfg = ExperimentConfig(selection=p, feature=q, m=m, end=e, bins=bins, seed=seed,
                                       validation=validation)
                res = run_experiment(g, ds, cfg, values=table[:, i], threads=threads)
                for k, (x, y) in enumerate(res.features):
                    name = f"features_{e}_{p}_{q}" + (f"_{k:02d}" if len(res.features) > 1 else "")
                    write_features(x, y, out / f"{name}.csv")
                rows.append(res.summary())
                log.info("%s %s/%s: %.4f", e, p, q, rows[-1]["accuracy"])
    config = {"selection": selection, "feature": feature, "m": m, "end": end,
              "bins": [bins.start, bins.stop, bins.n_bins], "validation": validation, "seed": seed}
    write_json(out / "report.json", {"config": config, "grid": rows})
    write_sidecar(out / "report.json", "experiment",
                  {"graph": graph, "spikes": spikes, "simulated": do_sim, **config}, seed)
    for r in rows:
        click.echo(f"{r['end']}\t{r['selection']}\t{r['feature']}\t{r['accuracy']:.4f}\t"
                   f"[{r['cv_min']:.4f}, {r['cv_max']:.4f}]")


@cli.command(help="Number of top-ranked centres whose neighbourhoods cover a vertex fraction.")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("-p", "--selection", default="size", show_default=True)
@click.option("--fraction", type=float, default=0.9, show_default=True)
@click.option("--end", type=click.Choice(["top", "bottom"]), default="top", show_default=True)
@click.option("--table", type=click.Path(exists=True), default=None)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@graph_n_option
@click.pass_context
def cover(ctx, graph, selection, fraction, end, table, out, n_vertices):
    _codes(selection)
    g = _graph(graph, n_vertices)
    values = _selection_values(g, selection, table, ctx.obj["threads"])
    count = greedy_cover_count(g, rank_vertices(values, end), fraction)
    click.echo(str(count))
    if out:
        write_json(out, {"selection": selection, "end": end, "fraction": fraction,
                         "n_vertices": g.n_vertices, "centres": count})
        write_sidecar(out, "cover", {"graph": graph, "selection": selection, "end": end,
                                     "fraction": fraction})


@cli.command(help="Feature CSVs for one of the control experiments.")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("spikes", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(VALIDATION_MODES), required=True)
@click.option("-p", "--selection", required=True)
@click.option("-q", "--feature", default="size", show_default=True)
@click.option("-m", "--count", "m", type=int, default=DEFAULT_M, show_default=True)
@click.option("--end", type=click.Choice(["top", "bottom"]), default="top", show_default=True)
@bins_option
@click.option("--sigma", type=click.Path(exists=True), default=None,
              help="shuffled_activity: explicit permutation, one id per line.")
@seed_option
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@graph_n_option
@click.pass_context
def validate(ctx, graph, spikes, mode, selection, feature, m, end, bins, sigma, seed, out,
             n_vertices):
    _codes(selection), _codes(feature)
    if mode != "shuffled_activity" or sigma is None:
        if sigma is not None:
            raise click.UsageError("--sigma only applies to shuffled_activity")
        _featurize_run(ctx, graph, spikes, selection, feature, m, end, bins, None, out,
                       n_vertices, validation=mode, seed=seed, command="validate")
        if mode == "shuffled_activity":
            g = _graph(graph, n_vertices)
            _, s, inv = shuffled_activity(read_spikes(spikes), g.n_vertices, seed=seed)
            _write_perm(out, s, inv)
        return
    g = _graph(graph, n_vertices)
    perm = np.loadtxt(sigma, dtype=np.int64, ndmin=1)
    shuffled, s, inv = shuffled_activity(read_spikes(spikes, g.n_vertices), g.n_vertices, sigma=perm)
    tmp = Path(f"{out}.spikes.csv")
    write_spikes(shuffled, tmp)
    try:
        _featurize_run(ctx, graph, str(tmp), selection, feature, m, end, bins, None, out,
                       n_vertices, seed=seed, command="validate")
    finally:
        tmp.unlink()
    _write_perm(out, s, inv)


def _write_perm(out, sigma, inverse):
    np.savetxt(f"{out}.sigma.txt", sigma, fmt="%d")
    np.savetxt(f"{out}.sigma_inv.txt", inverse, fmt="%d")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="nbfeat", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except NbfeatError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
