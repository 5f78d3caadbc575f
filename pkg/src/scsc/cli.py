"""Command-line client for the analysis service.

Subcommands mirror the service endpoints (analyze, describe, gradcheck,
train-toy, sweep) plus tensor file utilities (dump, load) and ``serve`` to
run the HTTP service.  By default requests are executed in-process against
the same handlers the server uses; pass ``--server URL`` to talk to a
running instance instead.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .service import models as m

_RESPONSE_MODELS = {
    "/analyze": m.AnalyzeResponse,
    "/describe": m.DescribeResponse,
    "/gradcheck": m.GradCheckResponse,
    "/train": m.TrainResponse,
    "/sweep": m.SweepResponse,
}


class Client:
    """Dispatches request models in-process or over HTTP."""

    def __init__(self, server: str | None = None):
        self.server = server.rstrip("/") if server else None

    def post(self, path: str, request):
        if self.server is None:
            from fastapi import HTTPException

            from .service.app import HANDLERS

            try:
                return HANDLERS[path](request)
            except HTTPException as e:
                raise SystemExit(f"error: {e.detail}")
        import httpx

        resp = httpx.post(f"{self.server}{path}", json=request.model_dump(), timeout=None)
        if resp.status_code != 200:
            raise SystemExit(f"error: {resp.status_code} {resp.text}")
        return _RESPONSE_MODELS[path].model_validate(resp.json())


def _arch_argument(value: str) -> str:
    """Preset name, or the contents of a config file if the argument is a path."""
    p = Path(value)
    if p.is_file():
        return p.read_text()
    if p.suffix in (".ini", ".cfg", ".txt"):
        raise SystemExit(f"error: config file {value} not found")
    return value


def _parse_hw(value: str | None):
    if value is None:
        return None
    h, _, w = value.lower().partition("x")
    return (int(h), int(w or h))


def cmd_analyze(args, client: Client) -> int:
    req = m.AnalyzeRequest(
        arch=_arch_argument(args.arch),
        input_hw=_parse_hw(args.input),
        include_fusion=not args.no_fusion,
    )
    resp = client.post("/analyze", req)
    sys.stdout.write(resp.records if args.format == "records" else resp.text)
    return 0


def cmd_describe(args, client: Client) -> int:
    resp = client.post("/describe", m.DescribeRequest(arch=_arch_argument(args.arch), input_hw=_parse_hw(args.input)))
    sys.stdout.write(resp.text)
    if args.config:
        sys.stdout.write("\n" + resp.config)
    return 0


def cmd_gradcheck(args, client: Client) -> int:
    req = m.GradCheckRequest(seed=args.seed, tol=args.tol, cases=args.cases)
    resp = client.post("/gradcheck", req)
    for case in resp.cases:
        status = "pass" if case.passed else "FAIL"
        print(f"{status}  max_rel_err={case.max_rel_err:.3e}  {case.name}")
    print("all passed" if resp.all_passed else "FAILURES above")
    return 0 if resp.all_passed else 1


def cmd_train_toy(args, client: Client) -> int:
    req = m.TrainRequest(
        task=args.task,
        preset=args.preset,
        steps=args.steps,
        seed=args.seed,
        lr=args.lr,
        batch_size=args.batch_size,
        width_scale=args.width_scale,
        image_size=args.image_size,
    )
    resp = client.post("/train", req)
    if args.curve_out:
        Path(args.curve_out).write_text(resp.curve_text)
        print(f"wrote {len(resp.curve)} steps to {args.curve_out}")
    else:
        sys.stdout.write(resp.curve_text)
    print(f"final loss {resp.curve[-1][1]:.6f}  final accuracy {resp.final_accuracy:.4f}")
    return 0


def cmd_sweep(args, client: Client) -> int:
    req = m.SweepRequest(
        axis=args.axis,
        preset=args.preset,
        steps=args.steps,
        seed=args.seed,
        width_scale=args.width_scale,
        image_size=args.image_size,
    )
    resp = client.post("/sweep", req)
    sys.stdout.write(resp.text)
    return 0


def cmd_dump(args, client: Client) -> int:
    shape = tuple(int(s) for s in args.shape.split(","))
    if len(shape) != 4:
        raise SystemExit("error: --shape must be n,c,h,w")
    rng = np.random.default_rng(args.seed)
    x = np.zeros(shape) if args.zeros else rng.normal(size=shape)
    serialize.dump_tensor(args.file, x)
    print(f"wrote tensor {shape} to {args.file}")
    return 0


def cmd_load(args, client: Client) -> int:
    x = serialize.load_tensor(args.file)
    print(f"shape {x.shape}  min {x.min():.6g}  max {x.max():.6g}  mean {x.mean():.6g}")
    return 0


def cmd_serve(args, client: Client) -> int:
    import uvicorn

    from .service import app as fastapi_app

    uvicorn.run(fastapi_app, host=args.host, port=args.port)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scsc", description=__doc__)
    parser.add_argument("--server", default=None, help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="parameter/multiply-add report for a preset or config file")
    p.add_argument("arch", help="preset name or path to an arch config")
    p.add_argument("--input", default=None, help="input size HxW (default: the arch's native size)")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.add_argument("--no-fusion", action="store_true", help="exclude the gate-fusion matmul from madds")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("describe", help="per-stage architecture table")
    p.add_argument("arch")
    p.add_argument("--input", default=None)
    p.add_argument("--config", action="store_true", help="also print the serialized config")
    p.set_defaults(fn=cmd_describe)

    p = sub.add_parser("gradcheck", help="finite-difference gradient battery over random blocks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--cases", type=int, default=3)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("train-toy", help="train a width-reduced preset on a synthetic task")
    p.add_argument("--task", choices=("local", "longrange", "mixed"), default="local")
    p.add_argument("--preset", default="resnet-scsc-v1")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--width-scale", type=float, default=0.25)
    p.add_argument("--image-size", type=int, default=16)
    p.add_argument("--curve-out", default=None, help="write the (step, loss) curve to this file")
    p.set_defaults(fn=cmd_train_toy)

    p = sub.add_parser("sweep", help="ablation sweep over gate groups or kernel sizes")
    p.add_argument("--axis", choices=("g", "kernel"), required=True)
    p.add_argument("--preset", default="resnet-scsc-v1")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width-scale", type=float, default=0.25)
    p.add_argument("--image-size", type=int, default=16)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("dump", help="write a tensor file (random or zeros)")
    p.add_argument("file")
    p.add_argument("--shape", required=True, help="n,c,h,w")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zeros", action="store_true")
    p.set_defaults(fn=cmd_dump)

    p = sub.add_parser("load", help="read a tensor file and print a summary")
    p.add_argument("file")
    p.set_defaults(fn=cmd_load)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.fn(args, Client(args.server))


if __name__ == "__main__":
    raise SystemExit(main())
