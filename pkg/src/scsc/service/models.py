"""Request/response models for the analysis service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class LayerCostModel(BaseModel):
    name: str
    params: int
    madds: int
    out_shape: list[int]


class AnalyzeRequest(BaseModel):
    arch: str = Field(description="preset name, or a full arch config as text")
    input_hw: tuple[int, int] | None = None
    include_fusion: bool = True


class AnalyzeResponse(BaseModel):
    arch: str
    input_hw: tuple[int, int]
    rows: list[LayerCostModel]
    total_params: int
    total_madds: int
    reference: dict | None = None
    text: str
    records: str


class DescribeRequest(BaseModel):
    arch: str
    input_hw: tuple[int, int] | None = None


class DescribeResponse(BaseModel):
    text: str
    config: str


class GradCheckRequest(BaseModel):
    seed: int = 0
    tol: float = 1e-4
    cases: int = 3
    step: float = 1e-5


class GradCheckCase(BaseModel):
    name: str
    max_rel_err: float
    passed: bool
    errors: dict[str, float]


class GradCheckResponse(BaseModel):
    cases: list[GradCheckCase]
    all_passed: bool


class TrainRequest(BaseModel):
    task: str = "local"
    preset: str = "resnet-scsc-v1"
    steps: int = 300
    seed: int = 0
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    batch_size: int = 16
    width_scale: float = 0.25
    image_size: int = 16


class TrainResponse(BaseModel):
    curve: list[tuple[int, float]]
    final_accuracy: float
    curve_text: str


class SweepRequest(BaseModel):
    axis: str = "g"
    preset: str = "resnet-scsc-v1"
    steps: int = 300
    seed: int = 0
    width_scale: float = 0.25
    image_size: int = 16


class SweepRowModel(BaseModel):
    setting: str
    final_loss: float
    final_accuracy: float
    params: int


class SweepResponse(BaseModel):
    axis: str
    rows: list[SweepRowModel]
    text: str


class PresetsResponse(BaseModel):
    presets: list[str]
