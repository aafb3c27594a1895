"""Command-line workflows: simulate, fit, test, predict, classify, validate
and the regularization sweep.

Every command takes --seed and is byte-deterministic given it; results are
written as JSON plus plot-ready CSV tables.  Failures exit nonzero with a
category prefix: 2 I/O, 3 validation, 4 estimation, 5 inference.
"""

import functools
import json
import math
import os
import sys

import click
import numpy as np

from . import rng as streams
from .errors import EstimationError, InferenceError, IOFormatError, ValidationError
from .fitting import METHODS, fit_resbm
from .inference import STATISTICS, adjust_pvalues, permutation_test
from .io import read_fit, read_sample, write_csv, write_fit, write_matrix_csv, write_sample
from .metrics import align_fit, correct_classification_rate, nmi, t_error, t_median_abs
from .predict import SINGLE_METHODS, classify_subject, expected_assignment, prediction_error
from .simulate import SimConfig, simulate

EXIT_CODES = {
    IOFormatError: 2,
    OSError: 2,
    ValidationError: 3,
    EstimationError: 4,
    InferenceError: 5,
}
CATEGORY = {2: "io", 3: "validation", 4: "estimation", 5: "inference"}


def _categorized(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except tuple(EXIT_CODES) as exc:
            code = next(code for typ, code in EXIT_CODES.items() if isinstance(exc, typ))
            click.echo(f"{CATEGORY[code]} error: {exc}", err=True)
            sys.exit(code)

    return wrapper


def _dump_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fit_kwargs(method, restarts, max_iter, tol, lam, gamma, freeze_transition):
    kwargs = {}
    if restarts is not None and method in ("varem", "co-osntf"):
        kwargs["restarts"] = restarts
    if max_iter is not None and method in ("varem", "co-osntf", "co-spectral"):
        kwargs["max_iter"] = max_iter
    if tol is not None and method in ("varem", "co-osntf", "co-spectral"):
        kwargs["tol"] = tol
    if lam is not None and method == "co-osntf":
        kwargs["lam"] = lam
    if gamma is not None and method == "co-spectral":
        kwargs["gamma"] = gamma
    if freeze_transition and method == "varem":
        kwargs["freeze_transition"] = True
    return kwargs


@click.group()
def main():
    """Random effects block models for samples of networks."""


@main.command()
@click.option("--n", type=int, required=True, help="Nodes per network.")
@click.option("--k", type=int, required=True, help="Number of communities.")
@click.option("--members", "n_members", type=int, required=True, help="Sample size M.")
@click.option("--kappa", type=float, default=0.0, show_default=True, help="Variation factor.")
@click.option("--a", type=float, default=0.4, show_default=True)
@click.option("--b", type=float, default=0.6, show_default=True)
@click.option("--rho", type=float, default=2.0, show_default=True, help="Signal-to-noise divisor.")
@click.option("--degree-target", type=float, default=None, help="Expected average degree.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@_categorized
def simulate_cmd(n, k, n_members, kappa, a, b, rho, degree_target, seed, out):
    """Generate a sample plus its ground truth."""
    config = SimConfig(
        n=n, k=k, n_members=n_members, kappa=kappa, a=a, b=b, rho=rho,
        degree_target=degree_target, seed=seed,
    )
    sample, truth = simulate(config)
    manifest = write_sample(sample, out, k_hint=k)
    write_fit(truth, os.path.join(out, "truth.json"))
    write_matrix_csv(truth.t.matrix, os.path.join(out, "t_true.csv"))
    summary = {
        "manifest": "manifest.json",
        "truth": "truth.json",
        "config": {
            "n": n, "k": k, "M": n_members, "kappa": kappa, "a": a, "b": b,
            "rho": rho, "degree_target": degree_target, "seed": seed,
        },
    }
    _dump_json(summary, os.path.join(out, "summary.json"))
    click.echo(manifest)


@main.command("fit")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, required=True)
@click.option("--method", type=click.Choice(METHODS), default="varem", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Fit artifact path.")
@click.option("--truth", type=click.Path(exists=True), default=None, help="Ground-truth fit for metrics.")
@click.option("--restarts", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--lam", type=float, default=None, help="Co-regularization weight (co-osntf).")
@click.option("--gamma", type=float, default=None, help="Co-regularization weight (co-spectral).")
@click.option("--freeze-transition", is_flag=True, help="Pin the transition matrix to identity (varem).")
@_categorized
def fit_cmd(manifest, k, method, seed, out, truth, restarts, max_iter, tol, lam, gamma, freeze_transition):
    """Fit one estimator to a sample."""
    sample = read_sample(manifest)
    kwargs = _fit_kwargs(method, restarts, max_iter, tol, lam, gamma, freeze_transition)
    fit = fit_resbm(sample, k, method, seed=seed, **kwargs)
    write_fit(fit, out)
    if truth is not None:
        truth_fit = read_fit(truth)
        aligned = align_fit(fit, truth_fit.z_bar)
        member_nmis = [nmi(z, zt) for z, zt in zip(aligned.z_members, truth_fit.z_members)]
        rows = [
            (
                method,
                k,
                seed,
                float(np.mean(member_nmis)),
                nmi(aligned.z_bar, truth_fit.z_bar),
                t_error(aligned.t.matrix, truth_fit.t.matrix),
                t_median_abs(aligned.t.matrix, truth_fit.t.matrix),
                correct_classification_rate(truth_fit.z_bar, aligned.z_bar),
            )
        ]
        header = [
            "method", "k", "seed", "member_nmi_mean", "zbar_nmi",
            "t_frobenius", "t_median_abs", "zbar_classification_rate",
        ]
        write_csv(os.path.splitext(out)[0] + ".metrics.csv", header, rows)
    click.echo(out)


@main.command("test")
@click.option("--manifest-a", type=click.Path(exists=True), required=True)
@click.option("--manifest-b", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, required=True)
@click.option("--method", type=click.Choice(METHODS), default="varem", show_default=True)
@click.option("--statistic", type=click.Choice(STATISTICS), default="muv", show_default=True)
@click.option("--resamples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=None, help="Resample worker count (env RESBM_WORKERS).")
@click.option("--level", type=float, default=0.05, show_default=True, help="Correction level for node tests.")
@click.option("--out", type=click.Path(), required=True, help="Result JSON path.")
@click.option("--restarts", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--tol", type=float, default=None)
@_categorized
def test_cmd(manifest_a, manifest_b, k, method, statistic, resamples, seed, workers, level, out, restarts, max_iter, tol):
    """Permutation test for a difference between two samples."""
    sample_a = read_sample(manifest_a)
    sample_b = read_sample(manifest_b)
    kwargs = _fit_kwargs(method, restarts, max_iter, tol, None, None, False)
    result = permutation_test(
        sample_a, sample_b, k,
        estimator=method, statistic=statistic, n_resamples=resamples,
        seed=seed, parallelism=workers, **kwargs,
    )
    payload = {
        "estimator": method,
        "statistic_name": statistic,
        "k": k,
        "seed": seed,
        "n_resamples": result.n_resamples,
        "n_skipped": result.n_skipped,
    }
    stem = os.path.splitext(out)[0]
    if statistic == "muv-node":
        p = np.asarray(result.p_value)
        bh_adj, bh_rej = adjust_pvalues(p, "bh-fdr", level)
        holm_adj, holm_rej = adjust_pvalues(p, "holm-fwer", level)
        result = result.with_correction("bh-fdr", bh_adj).with_correction("holm-fwer", holm_adj)
        payload.update(
            statistic=[float(x) for x in np.asarray(result.statistic)],
            p_value=[float(x) for x in p],
            corrected={
                name: [float(x) for x in values] for name, values in result.corrected.items()
            },
            rejected={
                "bh-fdr": [bool(x) for x in bh_rej],
                "holm-fwer": [bool(x) for x in holm_rej],
            },
            level=level,
            null_samples=[[float(x) for x in row] for row in result.null_samples],
        )
        node_labels = sample_a.node_labels or [str(i) for i in range(sample_a.n)]
        rows = [
            (
                i,
                node_labels[i],
                float(np.asarray(result.statistic)[i]),
                float(p[i]),
                float(bh_adj[i]),
                int(bh_rej[i]),
                float(holm_adj[i]),
                int(holm_rej[i]),
            )
            for i in range(sample_a.n)
        ]
        header = ["node", "label", "statistic", "p_value", "bh_fdr", "bh_reject", "holm_fwer", "holm_reject"]
        write_csv(stem + ".nodes.csv", header, rows)
    else:
        payload.update(
            statistic=float(result.statistic),
            p_value=float(result.p_value),
            null_samples=[float(x) for x in result.null_samples],
        )
        write_csv(
            stem + ".pvalues.csv",
            ["estimator", "statistic", "observed", "p_value", "n_resamples", "n_skipped"],
            [(method, statistic, float(result.statistic), float(result.p_value), result.n_resamples, result.n_skipped)],
        )
    _dump_json(payload, out)
    if statistic == "muv-node":
        click.echo(f"min node p-value: {float(np.min(result.p_value))}")
    else:
        click.echo(f"p-value: {float(result.p_value)}")


@main.command("predict")
@click.option("--fit", "fit_path", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True, help="Held-out subjects.")
@click.option("--k", type=int, required=True)
@click.option("--single-method", type=click.Choice(SINGLE_METHODS), default="osntf", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_categorized
def predict_cmd(fit_path, manifest, k, single_method, seed, out):
    """Prediction error of a fit on held-out subjects."""
    fit = read_fit(fit_path)
    test_sample = read_sample(manifest)
    err = prediction_error(fit, test_sample, k, single_method=single_method, seed=seed)
    expected = expected_assignment(fit)
    stem = os.path.splitext(out)[0]
    node_labels = test_sample.node_labels or [str(i) for i in range(test_sample.n)]
    rows = [
        (i, node_labels[i], int(fit.z_bar.labels[i]), *[float(x) for x in expected.matrix[i]])
        for i in range(fit.n)
    ]
    header = ["node", "label", "mean_community"] + [f"p_community_{q}" for q in range(fit.k)]
    write_csv(stem + ".expected.csv", header, rows)
    _dump_json(
        {
            "prediction_error": err,
            "single_method": single_method,
            "k": k,
            "seed": seed,
            "n_test_subjects": test_sample.n_members,
        },
        out,
    )
    click.echo(f"prediction error: {err}")


@main.command("classify")
@click.option("--fit-a", type=click.Path(exists=True), required=True)
@click.option("--fit-b", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True, help="Subjects to classify.")
@click.option("--k", type=int, required=True)
@click.option("--rule", type=click.Choice(["loglik", "muv"]), default="loglik", show_default=True)
@click.option("--single-method", type=click.Choice(SINGLE_METHODS), default="osntf", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Per-subject CSV path.")
@_categorized
def classify_cmd(fit_a, fit_b, manifest, k, rule, single_method, seed, out):
    """Assign each subject network to population A or B."""
    from .predict import _cluster_subject

    group_a = read_fit(fit_a)
    group_b = read_fit(fit_b)
    subjects = read_sample(manifest)
    rows = []
    for m in range(subjects.n_members):
        u = _cluster_subject(
            subjects.member(m), k, single_method, streams.stream_seed(seed, streams.PREDICT, m)
        )
        result = classify_subject(u, group_a, group_b, rule=rule)
        member_id = subjects.member_ids[m] if subjects.member_ids else str(m)
        rows.append((member_id, result.label, int(result.tie), result.score_a, result.score_b))
    write_csv(out, ["subject", "label", "tie", "score_a", "score_b"], rows)
    click.echo(out)


@main.command("validate")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, required=True)
@click.option("--method", type=click.Choice(METHODS), default="co-osntf", show_default=True)
@click.option("--repeats", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Per-split CSV path.")
@click.option("--restarts", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@_categorized
def validate_cmd(manifest, k, method, repeats, seed, out, restarts, max_iter):
    """Split-sample stability of the mean structure and transition matrix."""
    sample = read_sample(manifest)
    if sample.n_members < 4:
        raise ValidationError("validation needs at least four member networks")
    kwargs = _fit_kwargs(method, restarts, max_iter, None, None, None, False)
    rows = []
    for rep in range(repeats):
        order = streams.substream(seed, streams.SPLIT, rep).permutation(sample.n_members)
        half = sample.n_members // 2
        part_a = sample.subset(order[:half])
        part_b = sample.subset(order[half:])
        fit_a = fit_resbm(part_a, k, method, seed=streams.stream_seed(seed, streams.SPLIT, rep, 0), **kwargs)
        fit_b = fit_resbm(part_b, k, method, seed=streams.stream_seed(seed, streams.SPLIT, rep, 1), **kwargs)
        fit_b = align_fit(fit_b, fit_a.z_bar)
        rows.append(
            (
                rep,
                half,
                sample.n_members - half,
                correct_classification_rate(fit_a.z_bar, fit_b.z_bar),
                t_median_abs(fit_a.t.matrix, fit_b.t.matrix),
            )
        )
    write_csv(out, ["repeat", "n_a", "n_b", "classification_rate", "t_median_abs"], rows)
    means = np.mean([[r[3], r[4]] for r in rows], axis=0)
    click.echo(f"mean classification rate: {float(means[0])}; mean |T| difference: {float(means[1])}")


@main.command("sweep-lambda")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, required=True)
@click.option("--lambdas", type=str, default="0.001,0.003,0.01,0.03,0.1", show_default=True)
@click.option("--holdout", type=int, default=None, help="Test subjects per split (default: M//5, at least 1).")
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--single-method", type=click.Choice(SINGLE_METHODS), default="osntf", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="CV error CSV path.")
@click.option("--restarts", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@_categorized
def sweep_lambda_cmd(manifest, k, lambdas, holdout, repeats, single_method, seed, out, restarts, max_iter):
    """Cross-validated prediction error across co-regularization weights."""
    sample = read_sample(manifest)
    try:
        grid = [float(x) for x in lambdas.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse --lambdas: {exc}") from exc
    if not grid:
        raise ValidationError("--lambdas is empty")
    n_hold = holdout if holdout is not None else max(1, sample.n_members // 5)
    if n_hold >= sample.n_members:
        raise ValidationError("holdout size must leave at least one training subject")
    kwargs = _fit_kwargs("co-osntf", restarts, max_iter, None, None, None, False)
    rows = []
    for rep in range(repeats):
        order = streams.substream(seed, streams.SPLIT, rep).permutation(sample.n_members)
        test = sample.subset(order[:n_hold])
        train = sample.subset(order[n_hold:])
        for lam in grid:
            fit = fit_resbm(
                train, k, "co-osntf",
                seed=streams.stream_seed(seed, streams.SPLIT, rep, 2), lam=lam, **kwargs,
            )
            err = prediction_error(fit, test, k, single_method=single_method, seed=seed)
            rows.append((lam, math.log10(lam), rep, err))
    write_csv(out, ["lam", "log10_lam", "repeat", "prediction_error"], rows)
    by_lam = {}
    for lam, _, _, err in rows:
        by_lam.setdefault(lam, []).append(err)
    best = min(by_lam, key=lambda key: float(np.mean(by_lam[key])))
    click.echo(f"best lambda: {best}")


if __name__ == "__main__":
    main()
