"""Synthetic tasks, a deterministic SGD loop, and ablation sweeps.

The tasks are desk-scale stand-ins for image classification:

- ``local``: the label is carried by a fixed 3x3 center pattern whose sign
  flips with the class; linearly separable from raw pixels by design.
- ``longrange``: two 3x3 markers at least 9 pixels apart; the label is
  whether their signs agree (an XOR, so no linear rule works and the cue
  spans a long spatial range).
- ``mixed``: each sample draws one of the two cue types.

Everything is deterministic given the task/config seeds: batches come from
per-index child generators, the loop is single-threaded, and replaying a
run reproduces the loss curve bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .arch import Network, preset, scale_widths, with_head
from .ops import NumpyOps, TapeOps
from .tape import Tape

MARKER_DISTANCE = 9


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthTask:
    kind: str = "local"  # local | longrange | mixed
    image_size: int = 16
    channels: int = 3
    classes: int = 2
    noise: float = 0.1
    amplitude: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("local", "longrange", "mixed"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.kind in ("longrange", "mixed") and self.image_size < MARKER_DISTANCE + 3:
            raise ValueError(
                f"image size {self.image_size} too small for markers {MARKER_DISTANCE}px apart"
            )
        if self.classes != 2:
            raise ValueError("synthetic tasks are two-class")

    def _rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.seed, 77, int(index) % 2**63)))

    def batch(self, index: int, batch_size: int):
        """Deterministic batch #index: images (b, c, s, s) and labels (b,).

        Labels are balanced within +/-1 sample and shuffled.
        """
        rng = self._rng(index)
        labels = np.arange(batch_size) % self.classes
        rng.shuffle(labels)
        x = rng.normal(
            0.0, self.noise, size=(batch_size, self.channels, self.image_size, self.image_size)
        )
        for i, y in enumerate(labels):
            kind = self.kind
            if kind == "mixed":
                kind = "local" if rng.integers(2) == 0 else "longrange"
            if kind == "local":
                self._stamp_local(x[i], int(y))
            else:
                self._stamp_longrange(x[i], int(y), rng)
        return x, labels

    def _stamp_local(self, img, label):
        c = self.image_size // 2 - 1
        sign = 1.0 if label == 0 else -1.0
        patch = np.zeros((3, 3))
        patch[1, :] = patch[:, 1] = sign * self.amplitude  # plus-shaped stamp
        img[0, c : c + 3, c : c + 3] += patch

    def _stamp_longrange(self, img, label, rng):
        s = self.image_size
        sa = 1.0 if rng.integers(2) == 0 else -1.0
        sb = sa if label == 0 else -sa  # agree -> class 0
        if rng.integers(2) == 0:  # horizontal or vertical separation
            r = int(rng.integers(0, s - 2))
            c0 = int(rng.integers(0, s - 2 - MARKER_DISTANCE))
            pa, pb = (r, c0), (r, c0 + MARKER_DISTANCE)
        else:
            c0 = int(rng.integers(0, s - 2))
            r = int(rng.integers(0, s - 2 - MARKER_DISTANCE))
            pa, pb = (r, c0), (r + MARKER_DISTANCE, c0)
        for (rr, cc), sign in ((pa, sa), (pb, sb)):
            img[0, rr : rr + 3, cc : cc + 3] += sign * self.amplitude

    def eval_set(self, samples: int = 256):
        return self.batch(-1, samples)


@dataclass(frozen=True)
class SgdConfig:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    steps: int = 300
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")


def cross_entropy(logits: np.ndarray, labels) -> float:
    """Mean negative log-softmax of the true class (max-subtracted)."""
    return float(NumpyOps().cross_entropy(np.asarray(logits, dtype=np.float64), labels))


def sgd_step(params: dict, grads: dict, state: dict, cfg: SgdConfig):
    """Momentum SGD with decoupled weight decay; returns new params/state.

    v <- momentum*v + grad;  p <- p - lr*v - lr*wd*p.  Pure: inputs are not
    mutated.  Aborts on any non-finite gradient.
    """
    new_params, new_state = {}, {}
    for name, p in params.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name!r}")
        v = cfg.momentum * state.get(name, np.zeros_like(p)) + g
        new_state[name] = v
        new_params[name] = p - cfg.lr * v - cfg.lr * cfg.weight_decay * p
    return new_params, new_state


@dataclass
class TrainResult:
    curve: list = field(default_factory=list)  # (step, loss) pairs
    final_accuracy: float = 0.0
    params: dict = field(default_factory=dict)

    def curve_text(self) -> str:
        """Two-column plain text: step and loss per line."""
        return "\n".join(f"{s} {l:.12g}" for s, l in self.curve) + "\n"


def loss_and_grads(net: Network, params: dict, x: np.ndarray, labels):
    """One taped forward/backward; returns (loss, grads keyed like params)."""
    tape = Tape()
    ops = TapeOps(tape)
    vparams = {k: tape.leaf(v, name=k) for k, v in params.items()}
    logits = net.forward_with(ops, vparams, tape.leaf(x, name="input"))
    loss = ops.cross_entropy(logits, labels)
    grads = tape.backward(loss)
    return float(loss.value), {k: grads[v.nid] for k, v in vparams.items()}


def accuracy(net: Network, params: dict, x: np.ndarray, labels) -> float:
    logits = net.forward_with(NumpyOps(), params, x)
    return float((logits.argmax(axis=1) == np.asarray(labels)).mean())


def train(net: Network, task: SynthTask, cfg: SgdConfig, eval_samples: int = 256) -> TrainResult:
    """Run the SGD loop; deterministic for a fixed seed, aborts on divergence."""
    if net.params is None:
        raise TrainingError("network has no parameters; call initialize() first")
    head_dim = net.spec.head_dim
    if head_dim != task.classes:
        raise TrainingError(f"head emits {head_dim} values but the task has {task.classes} classes")
    params = dict(net.params)
    state: dict = {}
    result = TrainResult()
    for step in range(cfg.steps):
        x, labels = task.batch(step, cfg.batch_size)
        loss, grads = loss_and_grads(net, params, x, labels)
        if not np.isfinite(loss) or loss > 1e6:
            raise TrainingError(f"divergence at step {step}: loss = {loss!r}")
        result.curve.append((step, loss))
        params, state = sgd_step(params, grads, state, cfg)
    xe, ye = task.eval_set(eval_samples)
    result.final_accuracy = accuracy(net, params, xe, ye)
    result.params = params
    return result


# ---------------------------------------------------------------------------
# width-reduced preset training and ablation sweeps


def toy_network(
    preset_name: str,
    task: SynthTask,
    width_scale: float = 0.25,
    seed: int = 0,
    g: int | None = None,
    kernels=None,
) -> Network:
    """A preset scaled down for desk-scale runs, head swapped to the task classes."""
    spec = preset(preset_name)
    if width_scale != 1.0:
        spec = scale_widths(spec, width_scale)
    if g is not None or kernels is not None:
        stages = tuple(
            replace(
                st,
                g=g if g is not None else st.g,
                kernels=tuple(kernels) if kernels is not None else st.kernels,
            )
            for st in spec.stages
        )
        spec = replace(spec, stages=stages)
    spec = with_head(spec, f"classify:{task.classes}")
    return Network(spec).initialize(seed)


G_SWEEP = (2, 4, 8)  # default g is 4
KERNEL_SWEEP = (3, 5, 7, 9, 11, 13, "scsc-set")


@dataclass
class SweepRow:
    setting: str
    final_loss: float
    final_accuracy: float
    params: int


@dataclass
class SweepReport:
    axis: str
    rows: list

    def render(self) -> str:
        from .textutil import format_table

        table = [
            [r.setting, f"{r.final_loss:.4f}", f"{r.final_accuracy:.3f}", str(r.params)]
            for r in self.rows
        ]
        return f"ablation sweep: axis={self.axis}\n" + format_table(
            ["setting", "final loss", "final acc", "params"], table, right_align={1, 2, 3}
        )


def ablation_sweep(
    axis: str,
    preset_name: str = "resnet-scsc-v1",
    steps: int = 300,
    seed: int = 0,
    width_scale: float = 0.25,
    batch_size: int = 16,
    lr: float = 0.01,
    image_size: int = 16,
) -> SweepReport:
    """One training run per setting of the chosen axis, on the mixed task.

    ``g`` sweeps the gate-group counts (2, 4, 8); ``kernel`` sweeps single
    depthwise kernel sizes 3..13 (branch count collapses to one) plus the
    preset's own kernel sets.  Each run gets an independent child seed
    derived from (seed, index), so runs are reproducible yet decorrelated.
    Outcomes are reported, not judged.
    """
    from .complexity import enumerate_params

    if axis == "g":
        settings = [(f"g={g}", {"g": g}) for g in G_SWEEP]
    elif axis == "kernel":
        settings = [
            ((f"kernel={k}", {"kernels": (k,)}) if isinstance(k, int) else ("scsc-set", {}))
            for k in KERNEL_SWEEP
        ]
    else:
        raise ValueError(f"unknown sweep axis {axis!r}; expected 'g' or 'kernel'")

    rows = []
    for idx, (label, overrides) in enumerate(settings):
        run_seed = int(np.random.SeedSequence((seed, idx)).generate_state(1)[0] % 2**31)
        task = SynthTask(kind="mixed", image_size=image_size, seed=run_seed)
        net = toy_network(
            preset_name,
            task,
            width_scale=width_scale,
            seed=run_seed,
            g=overrides.get("g"),
            kernels=overrides.get("kernels"),
        )
        cfg = SgdConfig(lr=lr, steps=steps, batch_size=batch_size, seed=run_seed)
        res = train(net, task, cfg)
        rows.append(SweepRow(label, res.curve[-1][1], res.final_accuracy, enumerate_params(net)))
    return SweepReport(axis, rows)
