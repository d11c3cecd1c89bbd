"""Command-line interface binding all modules."""

from __future__ import annotations

import functools
import json
import sys

import click
import numpy as np

from . import bdp, harness, metrics
from .errors import InsertkitError
from .losses import DEFAULT_LAMBDA_FACE, HbafBatch, ffip_loss, hbaf_loss
from .masks import BinaryMask, load_boxes_json, rasterize_union, to_latent
from .matching import load_faceset_json, match_faces, match_result_to_dict
from .metrics import evaluate_run, format_percent, ids_score
from .numerics import Tensor, read_itsr, write_itsr
from .schedule import ScheduleConfig, emit_schedule_curve


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InsertkitError, FileNotFoundError, ValueError) as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}")

    return wrapper


def schedule_options(fn):
    for deco in reversed(
        [
            click.option("--lambda-max", type=float, default=2.5, show_default=True),
            click.option("--lambda-min", type=float, default=1.0, show_default=True),
            click.option("--t-start", type=int, default=900, show_default=True),
            click.option("--t-end", type=int, default=808, show_default=True),
            click.option("--t-max", type=int, default=1000, show_default=True),
        ]
    ):
        fn = deco(fn)
    return fn


def build_schedule(lambda_max, lambda_min, t_start, t_end, t_max) -> ScheduleConfig:
    return ScheduleConfig(
        lambda_max=lambda_max, lambda_min=lambda_min, t_start=t_start, t_end=t_end, t_max=t_max
    )


@click.group()
def main():
    """Person-insertion training objectives, metrics, and pairing tooling."""


@main.command()
@schedule_options
@click.option("--stride", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def schedule(lambda_max, lambda_min, t_start, t_end, t_max, stride, out):
    """Emit the (t, lambda) weight curve as CSV."""
    cfg = build_schedule(lambda_max, lambda_min, t_start, t_end, t_max)
    rows = emit_schedule_curve(cfg, stride, out)
    click.echo(f"wrote {len(rows)} rows to {out}")


@main.command()
@click.option("--boxes", "boxes_path", type=click.Path(exists=True), required=True)
@click.option("--factor", type=int, default=8, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def mask(boxes_path, factor, out):
    """Rasterize person boxes and downsample to latent resolution."""
    boxes, height, width = load_boxes_json(boxes_path)
    pixel = rasterize_union(boxes, height, width)
    latent = to_latent(pixel, factor)
    write_itsr(out, latent.to_tensor())
    click.echo(f"wrote {latent.height}x{latent.width} mask to {out}")


@main.group()
def loss():
    """Loss evaluation on tensors/face files."""


@loss.command("hbaf")
@click.option("--pred", type=click.Path(exists=True), required=True)
@click.option("--target", type=click.Path(exists=True), required=True)
@click.option("--mask", "mask_path", type=click.Path(exists=True), required=True)
@click.option("--t", type=int, required=True)
@schedule_options
@click.option("--grad-out", type=click.Path(), default=None)
@handle_errors
def loss_hbaf(pred, target, mask_path, t, lambda_max, lambda_min, t_start, t_end, t_max, grad_out):
    """Region-weighted denoising loss; prints the value."""
    cfg = build_schedule(lambda_max, lambda_min, t_start, t_end, t_max)
    batch = HbafBatch(
        prediction=read_itsr(pred),
        target=read_itsr(target),
        latent_mask=BinaryMask(read_itsr(mask_path).to_f64()),
        t=t,
        cfg=cfg,
    )
    result = hbaf_loss(batch, with_grad=grad_out is not None)
    if grad_out is not None:
        write_itsr(grad_out, Tensor(result.grad))
    click.echo(repr(result.value))


@loss.command("ffip")
@click.option("--pred-faces", type=click.Path(exists=True), required=True)
@click.option("--src-faces", type=click.Path(exists=True), required=True)
@handle_errors
def loss_ffip(pred_faces, src_faces):
    """Matched-face identity loss; prints the value."""
    pred = load_faceset_json(pred_faces)
    src = load_faceset_json(src_faces)
    matches = match_faces(pred, src)
    result = ffip_loss(pred.embeddings, src.embeddings, matches)
    click.echo(repr(result.value))


@main.command()
@click.option("--pred", type=click.Path(exists=True), required=True)
@click.option("--src", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def match(pred, src, out):
    """Optimal one-to-one face matching; writes pairs, similarities, total."""
    result = match_faces(load_faceset_json(pred), load_faceset_json(src))
    with open(out, "w") as fh:
        json.dump(match_result_to_dict(result), fh, indent=2)
        fh.write("\n")
    click.echo(f"matched {len(result.pairs)} pairs, total {result.total!r}")


@main.command()
@click.option("--gen", type=click.Path(exists=True), required=True)
@click.option("--src", type=click.Path(exists=True), required=True)
@handle_errors
def ids(gen, src):
    """Identity similarity score between generated and source face sets."""
    click.echo(repr(ids_score(load_faceset_json(gen), load_faceset_json(src))))


@main.command()
@click.option("--run", "run_path", type=click.Path(exists=True), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@handle_errors
def evaluate(run_path, report_path):
    """Aggregate failure rates and identity scores over a run file."""
    report = evaluate_run(run_path)
    with open(report_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    click.echo(
        "FR {}% (BM {}%, PCE {}%, BD {}%, BL {}%), IDS {} over {} samples".format(
            format_percent(report.fr),
            format_percent(report.bm),
            format_percent(report.pce),
            format_percent(report.bd),
            format_percent(report.bl),
            "n/a" if report.ids_mean is None else f"{report.ids_mean:.4f}",
            report.n_samples,
        )
    )


@main.group()
def manifest():
    """Bidirectional pairing manifests."""


def _manifest_build(builder, a, b, c, out, exclude):
    excluded = [s.strip() for s in exclude.split(",") if s.strip()] if exclude else []
    result = builder(a, b, c, exclude=excluded)
    bdp.write_manifest(bdp.PairManifest(records=list(result.records)), out)
    click.echo(f"wrote {len(result.records)} records to {out}")
    for stem in result.unmatched:
        click.echo(f"unmatched stem: {stem}", err=True)


@manifest.command("build-forward")
@click.option("--a", "a", type=click.Path(exists=True), required=True, help="real human source dir")
@click.option("--b", "b", type=click.Path(exists=True), required=True, help="web background dir")
@click.option("--c", "c", type=click.Path(exists=True), required=True, help="synthetic ground-truth dir")
@click.option("--out", type=click.Path(), required=True)
@click.option("--exclude", default="", help="comma-separated stems to skip")
@handle_errors
def manifest_forward(a, b, c, out, exclude):
    """Forward path: real src, web bg, synthetic gt."""
    _manifest_build(bdp.build_forward, a, b, c, out, exclude)


@manifest.command("build-reverse")
@click.option("--a", "a", type=click.Path(exists=True), required=True, help="real ground-truth dir")
@click.option("--b", "b", type=click.Path(exists=True), required=True, help="inpainted background dir")
@click.option("--c", "c", type=click.Path(exists=True), required=True, help="synthetic source dir")
@click.option("--out", type=click.Path(), required=True)
@click.option("--exclude", default="", help="comma-separated stems to skip")
@handle_errors
def manifest_reverse(a, b, c, out, exclude):
    """Reverse path: synthetic src, inpainted bg, real gt."""
    _manifest_build(
        lambda gt, bg, src, exclude: bdp.build_reverse(src, bg, gt, exclude=exclude),
        a, b, c, out, exclude,
    )


@manifest.command("validate")
@click.argument("manifest_path", type=click.Path(exists=True))
@click.option("--no-files", is_flag=True, help="skip file-existence checks")
@handle_errors
def manifest_validate(manifest_path, no_files):
    """Check a manifest; exit nonzero if any violation is found."""
    violations = bdp.validate(bdp.read_manifest(manifest_path), check_files=not no_files)
    for v in violations:
        click.echo(f"{v.record_id}: {v.kind}: {v.detail}")
    if violations:
        sys.exit(1)
    click.echo("ok")


@main.group()
def demo():
    """Toy end-to-end training."""


@demo.command("train")
@click.option("--steps", type=int, default=500, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@schedule_options
@click.option("--lambda-face", type=float, default=DEFAULT_LAMBDA_FACE, show_default=True)
@click.option("--no-ffip", is_flag=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def demo_train(steps, lr, lambda_max, lambda_min, t_start, t_end, t_max, lambda_face, no_ffip, seed, out):
    """Train the toy denoiser and write the per-step CSV log."""
    cfg = build_schedule(lambda_max, lambda_min, t_start, t_end, t_max)
    config = harness.TrainConfig(
        steps=steps,
        lr=lr,
        schedule=cfg,
        lambda_face=lambda_face,
        use_ffip=not no_ffip,
        seed=seed,
    )
    rows, _ = harness.train_demo(config, log_path=out)
    click.echo(f"trained {len(rows)} steps, final total {rows[-1]['total']!r}, log at {out}")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=1e-5, show_default=True)
@handle_errors
def gradcheck(seed, tol):
    """Verify every analytic gradient against central differences."""
    reports = harness.gradcheck_all(seed=seed, tol=tol)
    failed = False
    for name, report in reports.items():
        status = "pass" if report.passed else "FAIL"
        click.echo(f"{name}: {status} (max_rel_err={report.max_rel_err:.3e})")
        failed = failed or not report.passed
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
