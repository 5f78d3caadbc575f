"""Cross-scale gated depthwise convolution blocks with exact reverse-mode gradients.

Subpackages/modules:

- ``tensor``      rank-4 NCHW array primitives (convolutions, norms, pooling)
- ``tape``        reverse-mode differentiation over recorded tensor programs
- ``ops``         one forward implementation, three execution backends
                  (plain numpy / gradient tape / multiply-add counting)
- ``block``       the four-step cross-scale block: reduce, multi-kernel
                  depthwise encode, sigmoid-gated fusion, recover
- ``arch``        declarative network specs, presets, instantiated networks
- ``complexity``  analytic parameter / multiply-add reports plus an
                  instrumented counting oracle
- ``training``    synthetic tasks, SGD loop, ablation sweeps
- ``serialize``   binary tensor files and parameter checkpoints
- ``service``     FastAPI app exposing the library; ``cli`` is a thin client
"""

__version__ = "0.1.0"

from .tensor import ConvSpec, PadMode, ShapeError, as_tensor4
from .block import ScscConfig, ScscParams, scsc_block_forward
from .arch import ArchSpec, StageSpec, build, preset, preset_names
from .complexity import analyze, count_madds, count_params, oracle_count

__all__ = [
    "ConvSpec",
    "PadMode",
    "ShapeError",
    "as_tensor4",
    "ScscConfig",
    "ScscParams",
    "scsc_block_forward",
    "ArchSpec",
    "StageSpec",
    "build",
    "preset",
    "preset_names",
    "analyze",
    "count_madds",
    "count_params",
    "oracle_count",
    "__version__",
]
