"""Operator command line: project setup, batch localization, export, serving.

Exit codes: 0 success, 1 usage errors (bad flags, unknown ids), 2 IO or
parse failures, 3 when localization ran but produced at least one failed
annotation (details on stderr).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .casting import CastConfig
from .errors import (
    ParseError,
    SchemaVersionMismatchError,
    UnsupportedCameraModelError,
    UnsupportedFormatError,
)
from .pipeline import localize_project
from .store import (
    apply_config_overrides,
    dangling_paths,
    export_poi_report,
    init_project,
    load_project,
    load_project_config,
    persist_project,
)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_LOCALIZE_FAILED = 3

_IO_ERRORS = (
    ParseError,
    UnsupportedCameraModelError,
    UnsupportedFormatError,
    SchemaVersionMismatchError,
    FileNotFoundError,
    NotADirectoryError,
    PermissionError,
    json.JSONDecodeError,
)


@click.group()
def cli():
    """Cast 2D indoor annotations into oriented 3D boxes on a scene mesh."""


@cli.command()
@click.argument("directory", type=click.Path(path_type=Path))
@click.option("--mesh", "mesh_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--frames", "frames_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--colmap", "colmap_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--depths", "depths_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--axis-flip", is_flag=True, help="convert a Y-up scene to Z-up at import")
@click.option("--name", default=None)
def init(directory, mesh_path, frames_dir, colmap_dir, depths_dir, axis_flip, name):
    """Assemble a project directory from reconstruction outputs."""
    project, warnings = init_project(
        directory,
        mesh_path,
        frames_dir,
        colmap_dir=colmap_dir,
        depths_dir=depths_dir,
        axis_flip=axis_flip,
        name=name,
    )
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    missing = project.missing_pose_frames()
    click.echo(
        f"initialized {project.id}: {len(project.frames)} frames, "
        f"{len(missing)} without pose"
    )


@cli.command()
@click.argument("project_path", type=click.Path(exists=True, path_type=Path))
@click.option("--annotation", "annotation_ids", multiple=True, help="localize only these ids")
@click.option("--all", "localize_all", is_flag=True, default=False, help="localize every annotation (default)")
@click.option("--threshold", type=float, default=None, help="contact fraction threshold override")
@click.option("--growth", type=float, default=None, help="scale growth factor override")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
def localize(project_path, annotation_ids, localize_all, threshold, growth, jobs, as_json):
    """Cast annotations into boxes: mask -> cloud -> contact search -> fit."""
    project = load_project(project_path)
    apply_config_overrides(project, load_project_config(project.root))
    for rel in dangling_paths(project):
        click.echo(f"warning: referenced file missing: {rel}", err=True)

    overrides = {}
    if threshold is not None:
        overrides["contact_threshold"] = threshold
    if growth is not None:
        overrides["growth_factor"] = growth
    if overrides:
        merged = project.cast_config.to_dict()
        merged.update(overrides)
        project.cast_config = CastConfig.from_dict(merged)

    ids = list(annotation_ids) or None
    if ids:
        known = {a.id for a in project.annotations}
        unknown = [a for a in ids if a not in known]
        if unknown:
            raise click.UsageError(f"unknown annotation id(s): {', '.join(unknown)}")
    if not project.annotations:
        raise click.UsageError("project has no annotations to localize")

    outcomes = localize_project(project, annotation_ids=ids, jobs=jobs)

    # the run's effective configuration is provenance; record it
    project.touch()
    persist_project(project)

    failed = [o for o in outcomes if o.poi.status != "cast"]
    if as_json:
        click.echo(json.dumps(
            [
                {"poi": o.poi.to_dict(), "frames": [d.to_dict() for d in o.frames]}
                for o in outcomes
            ],
            indent=2,
        ))
    else:
        header = f"{'annotation':<24} {'status':<10} {'scale':>9} {'iters':>6} {'support':>8}"
        click.echo(header)
        click.echo("-" * len(header))
        for o in outcomes:
            scales = [d.accepted_scale for d in o.frames if d.accepted_scale is not None]
            iters = [d.iterations for d in o.frames if d.iterations is not None]
            scale_s = f"{scales[0]:.4f}" if scales else "-"
            iter_s = str(iters[0]) if iters else "-"
            status = o.poi.status if o.poi.status == "cast" else f"failed:{o.poi.failure_reason}"
            click.echo(f"{o.poi.id:<24} {status:<10} {scale_s:>9} {iter_s:>6} {o.poi.support_count:>8}")
    for o in failed:
        click.echo(f"failed: {o.poi.id}: {o.poi.failure_reason}", err=True)
        for d in o.frames:
            if d.status != "cast":
                click.echo(f"  {d.frame_id}: {d.status} {d.note}", err=True)
    if failed:
        sys.exit(EXIT_LOCALIZE_FAILED)


@cli.command()
@click.argument("project_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def export(project_path, out_dir):
    """Write pois.json, report.json (success rate), and boxes.obj."""
    project = load_project(project_path)
    report = export_poi_report(project, out_dir)
    rate = report["success_rate_percent"]
    click.echo(
        f"exported {report['total_annotations']} annotations to {out_dir} "
        f"(success rate: {rate if rate is not None else 'n/a'}%)"
    )


@cli.command()
@click.argument("project_paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--provider", "provider_url", default=None, help="remote segmentation endpoint")
@click.option("--workers", type=int, default=2, show_default=True)
@click.option("--cors-origin", default="*", show_default=True)
def serve(project_paths, port, host, provider_url, workers, cors_origin):
    """Run the annotation/review HTTP service for one or more projects."""
    import uvicorn

    from .service import create_app

    projects = [load_project(p) for p in project_paths]
    app = create_app(projects, provider_url=provider_url, workers=workers, cors_origin=cors_origin)
    click.echo(f"serving {len(projects)} project(s) on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.group()
def synth():
    """Synthetic-scene oracle workflows."""


@synth.command("make-fixture")
@click.argument("directory", type=click.Path(path_type=Path))
@click.option("--hidden-scale", type=float, default=1.0, show_default=True,
              help="hidden factor multiplying emitted depth maps")
@click.option("--holes", type=float, default=0.0, show_default=True,
              help="fraction of mesh faces removed from the reconstruction")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--frames-annotated", type=int, default=3, show_default=True)
def synth_make_fixture(directory, hidden_scale, holes, seed, frames_annotated):
    """Build the standard synthetic room project with known ground truth."""
    from .synth import make_fixture

    project, scene = make_fixture(
        directory,
        hidden_scale=hidden_scale,
        hole_fraction=holes,
        seed=seed,
        annotate_frames=frames_annotated,
    )
    click.echo(
        f"fixture {project.id}: {len(project.frames)} frames, "
        f"{len(project.annotations)} annotation(s), mesh "
        f"{len(scene.recon_triangles)}/{len(scene.triangles)} faces"
    )


@synth.command("score")
@click.argument("project_path", type=click.Path(exists=True, path_type=Path))
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
def synth_score(project_path, truth_path, out_dir):
    """Score a localized project against fixture ground truth (volume IoU)."""
    from .synth import load_truth, score_project, write_scorecard

    project = load_project(project_path)
    rows = score_project(project.pois, load_truth(truth_path))
    for row in rows:
        iou = row["iou"]
        click.echo(f"{row['poi_id']:<24} {row['status']:<8} IoU={iou if iou is not None else '-'}")
    if out_dir is not None:
        write_scorecard(rows, out_dir)
        click.echo(f"scorecard written to {out_dir}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    except _IO_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except SystemExit:
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
