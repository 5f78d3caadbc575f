"""FastAPI service exposing the library; the CLI is a thin client of these handlers.

Every endpoint is a stateless request/response wrapper around the core
package, so the handlers are also callable in-process (which is how the
CLI runs without a server).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import complexity, training
from ..arch import ArchSpec, describe, preset, preset_names, spec_from_text, spec_to_text
from ..tensor import ShapeError
from . import models as m

app = FastAPI(title="scsc", description="cross-scale convolution analysis service")


def _resolve_arch(text: str) -> ArchSpec:
    if text.lstrip().startswith("[net]"):
        return spec_from_text(text)
    try:
        return preset(text.strip())
    except KeyError as e:
        raise HTTPException(status_code=404, detail=str(e))


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.get("/presets", response_model=m.PresetsResponse)
def presets() -> m.PresetsResponse:
    return m.PresetsResponse(presets=preset_names())


@app.post("/analyze", response_model=m.AnalyzeResponse)
def analyze(req: m.AnalyzeRequest) -> m.AnalyzeResponse:
    spec = _resolve_arch(req.arch)
    try:
        report = complexity.analyze(spec, req.input_hw, req.include_fusion)
    except ShapeError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return m.AnalyzeResponse(
        arch=report.arch,
        input_hw=report.input_hw,
        rows=[
            m.LayerCostModel(name=r.name, params=r.params, madds=r.madds, out_shape=list(r.out_shape))
            for r in report.rows
        ],
        total_params=report.total_params,
        total_madds=report.total_madds,
        reference=complexity.reference_deltas(report),
        text=complexity.render_report(report),
        records=complexity.report_records(report),
    )


@app.post("/describe", response_model=m.DescribeResponse)
def describe_arch(req: m.DescribeRequest) -> m.DescribeResponse:
    spec = _resolve_arch(req.arch)
    try:
        text = describe(spec, req.input_hw)
    except ShapeError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return m.DescribeResponse(text=text, config=spec_to_text(spec))


@app.post("/gradcheck", response_model=m.GradCheckResponse)
def gradcheck(req: m.GradCheckRequest) -> m.GradCheckResponse:
    from ..gradcheck import block_gradient_cases

    reports = block_gradient_cases(seed=req.seed, count=req.cases, h=req.step, tol=req.tol)
    cases = [
        m.GradCheckCase(
            name=name,
            max_rel_err=rep.max_error,
            passed=rep.passed,
            errors={k: float(v) for k, v in rep.errors.items()},
        )
        for name, _, rep in reports
    ]
    return m.GradCheckResponse(cases=cases, all_passed=all(c.passed for c in cases))


@app.post("/train", response_model=m.TrainResponse)
def train_toy(req: m.TrainRequest) -> m.TrainResponse:
    try:
        task = training.SynthTask(kind=req.task, image_size=req.image_size, seed=req.seed)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))
    net = training.toy_network(req.preset, task, width_scale=req.width_scale, seed=req.seed)
    cfg = training.SgdConfig(
        lr=req.lr,
        momentum=req.momentum,
        weight_decay=req.weight_decay,
        steps=req.steps,
        batch_size=req.batch_size,
        seed=req.seed,
    )
    try:
        res = training.train(net, task, cfg)
    except training.TrainingError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return m.TrainResponse(
        curve=[(s, l) for s, l in res.curve],
        final_accuracy=res.final_accuracy,
        curve_text=res.curve_text(),
    )


@app.post("/sweep", response_model=m.SweepResponse)
def sweep_toy(req: m.SweepRequest) -> m.SweepResponse:
    try:
        report = training.ablation_sweep(
            req.axis,
            preset_name=req.preset,
            steps=req.steps,
            seed=req.seed,
            width_scale=req.width_scale,
            image_size=req.image_size,
        )
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return m.SweepResponse(
        axis=report.axis,
        rows=[
            m.SweepRowModel(
                setting=r.setting,
                final_loss=r.final_loss,
                final_accuracy=r.final_accuracy,
                params=r.params,
            )
            for r in report.rows
        ],
        text=report.render(),
    )


# in-process dispatch table for thin clients (the CLI uses this by default)
HANDLERS = {
    "/analyze": analyze,
    "/describe": describe_arch,
    "/gradcheck": gradcheck,
    "/train": train_toy,
    "/sweep": sweep_toy,
}
