"""Command-line front end.

``heraldsim analyze`` runs the analysis in-process by default; with
``--server`` it becomes a thin HTTP client posting the same request the
service accepts. ``heraldsim serve`` starts the HTTP service. Exit codes:
0 operationally unitary, 2 valid device but not operationally unitary,
1 parse/validation/runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from .analysis import analyze_device
from .catalog import BUILTIN_BUILDERS, build_builtin
from .devicefile import (
    ReportFile,
    exit_code_for,
    export_report,
    parse_device,
    render_text,
    report_from_analysis,
)
from .errors import HeraldsimError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heraldsim",
        description="Simulate conditional linear-optical devices and decide operational unitarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze a device description")
    analyze.add_argument("device", nargs="?", help="path to a device description file")
    analyze.add_argument(
        "--builtin",
        choices=sorted(BUILTIN_BUILDERS),
        help="analyze a built-in device instead of a file",
    )
    analyze.add_argument("--tol", type=float, default=1e-9, help="verdict tolerance (default 1e-9)")
    analyze.add_argument("--t-eff", type=float, default=1.0, help="device operation time (default 1)")
    analyze.add_argument("--photon-cap", type=int, default=8, help="photon-number cap (default 8)")
    analyze.add_argument("--format", choices=("text", "json"), default="text")
    analyze.add_argument("--out", help="write the report to this path instead of stdout")
    analyze.add_argument("--server", help="send the request to a running service at this base URL")

    serve = sub.add_parser("serve", help="start the HTTP analysis service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _analyze_local(args: argparse.Namespace) -> ReportFile:
    if args.builtin:
        dev = build_builtin(args.builtin)
    else:
        dev = parse_device(Path(args.device).read_text())
    analysis = analyze_device(dev, tol=args.tol, t_eff=args.t_eff, photon_cap=args.photon_cap)
    return report_from_analysis(analysis)


def _analyze_remote(args: argparse.Namespace) -> ReportFile:
    import httpx

    base = args.server.rstrip("/")
    options = {"tol": args.tol, "t_eff": args.t_eff, "photon_cap": args.photon_cap}
    if args.builtin:
        response = httpx.post(f"{base}/devices/{args.builtin}/analyze", json=options)
    else:
        import json

        device = json.loads(Path(args.device).read_text())
        response = httpx.post(f"{base}/analyze", json={"device": device, "options": options})
    if response.status_code != 200:
        raise HeraldsimError(f"server returned {response.status_code}: {response.text}")
    return ReportFile.model_validate(response.json())


def _write_atomic(path: str, content: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_analyze(args: argparse.Namespace) -> int:
    if bool(args.device) == bool(args.builtin):
        print("analyze needs exactly one of a device file or --builtin", file=sys.stderr)
        return 1
    report = _analyze_remote(args) if args.server else _analyze_local(args)
    rendered = export_report(report) if args.format == "json" else render_text(report)
    if args.out:
        _write_atomic(args.out, rendered)
    else:
        sys.stdout.write(rendered)
    return exit_code_for(report)


def _run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("heraldsim.service:app", host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            return _run_analyze(args)
        return _run_serve(args)
    except HeraldsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
