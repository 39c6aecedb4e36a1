"""Behavior cloning with action chunking, in plain numpy.

Two small tanh encoders (tactile delta and end-effector position) feed a
decoder that predicts a chunk of H future position deltas; at rollout
the policy replans every K ticks and executes the head of the chunk.
Training is full-batch gradient descent with momentum, with analytic
gradients (finite-difference checked in the tests).

Policies persist to a versioned flat file: a JSON header holding shapes
and normalization statistics, then the weights row-major as little-
endian float64 — loadable from any language without a pickle machine.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .episode import EpisodeLog, Observation, run_episode
from .errors import ConfigError, ShapeError, TrainingDivergedError
from .geometry import Force3, Torque3, Wrench
from .haptics import BaselineState, PipelineConfig, compute_delta, update_baseline
from .presets import pipeline_config, task_config
from .sim import TaskConfig

MAGIC = b"FCPOL\n"
FORMAT_VERSION = 1
STD_FLOOR = 1e-8

# parameter names in serialization order; shapes depend on (hidden, horizon)
PARAM_ORDER = ("w1t", "b1t", "w2t", "b2t",
               "w1p", "b1p", "w2p", "b2p",
               "wd1", "bd1", "wd2", "bd2")


@dataclass(frozen=True)
class Normalization:
    """Per-dimension affine whitening, with a variance floor so constant
    inputs stay finite. Round-trips exactly to numerical precision."""

    in_mean: np.ndarray   # (6,)
    in_std: np.ndarray    # (6,)
    act_mean: np.ndarray  # (3,)
    act_std: np.ndarray   # (3,)

    def normalize_in(self, x: np.ndarray) -> np.ndarray:
        return (x - self.in_mean) / self.in_std

    def denormalize_in(self, x: np.ndarray) -> np.ndarray:
        return x * self.in_std + self.in_mean

    def normalize_act(self, a: np.ndarray) -> np.ndarray:
        return (a - self.act_mean) / self.act_std

    def denormalize_act(self, a: np.ndarray) -> np.ndarray:
        return a * self.act_std + self.act_mean

    @classmethod
    def fit(cls, inputs: np.ndarray, actions: np.ndarray) -> "Normalization":
        return cls(
            in_mean=inputs.mean(axis=0),
            in_std=np.maximum(inputs.std(axis=0), STD_FLOOR),
            act_mean=actions.mean(axis=0),
            act_std=np.maximum(actions.std(axis=0), STD_FLOOR),
        )


@dataclass(frozen=True)
class BcPolicy:
    params: dict[str, np.ndarray]
    norm: Normalization
    horizon: int = 10
    replan: int = 5
    hidden: int = 64

    def __post_init__(self):
        if not 0 < self.replan <= self.horizon:
            raise ConfigError("replan interval must be in [1, horizon]")
        expected = param_shapes(self.hidden, self.horizon)
        for name in PARAM_ORDER:
            if name not in self.params:
                raise ShapeError(f"policy missing parameter {name!r}")
            got = self.params[name].shape
            if got != expected[name]:
                raise ShapeError(
                    f"parameter {name} has shape {got}, expected {expected[name]}"
                )


def param_shapes(hidden: int, horizon: int) -> dict[str, tuple[int, ...]]:
    return {
        "w1t": (3, hidden), "b1t": (hidden,),
        "w2t": (hidden, hidden), "b2t": (hidden,),
        "w1p": (3, hidden), "b1p": (hidden,),
        "w2p": (hidden, hidden), "b2p": (hidden,),
        "wd1": (2 * hidden, hidden), "bd1": (hidden,),
        "wd2": (hidden, 3 * horizon), "bd2": (3 * horizon,),
    }


def init_params(hidden: int, horizon: int, seed: int) -> dict[str, np.ndarray]:
    """Scaled-uniform initialization, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(hidden, horizon).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


# ---------------------------------------------------------------------------
# forward / backward


def _forward(params: dict[str, np.ndarray], xt: np.ndarray, xp: np.ndarray):
    """Returns the network output and the activations backprop needs."""
    h1t = np.tanh(xt @ params["w1t"] + params["b1t"])
    h2t = np.tanh(h1t @ params["w2t"] + params["b2t"])
    h1p = np.tanh(xp @ params["w1p"] + params["b1p"])
    h2p = np.tanh(h1p @ params["w2p"] + params["b2p"])
    z = np.concatenate([h2t, h2p], axis=1)
    hd = np.tanh(z @ params["wd1"] + params["bd1"])
    y = hd @ params["wd2"] + params["bd2"]
    return y, (xt, xp, h1t, h2t, h1p, h2p, z, hd)


def loss_and_grads(
    params: dict[str, np.ndarray],
    xt: np.ndarray,
    xp: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean-squared error over every chunk element, with gradients."""
    y, (xt, xp, h1t, h2t, h1p, h2p, z, hd) = _forward(params, xt, xp)
    diff = y - targets
    loss = float(np.mean(diff * diff))

    dy = 2.0 * diff / diff.size
    g: dict[str, np.ndarray] = {}
    g["wd2"] = hd.T @ dy
    g["bd2"] = dy.sum(axis=0)
    dhd = (dy @ params["wd2"].T) * (1.0 - hd * hd)
    g["wd1"] = z.T @ dhd
    g["bd1"] = dhd.sum(axis=0)
    dz = dhd @ params["wd1"].T
    hidden = h2t.shape[1]

    dh2t = dz[:, :hidden] * (1.0 - h2t * h2t)
    g["w2t"] = h1t.T @ dh2t
    g["b2t"] = dh2t.sum(axis=0)
    dh1t = (dh2t @ params["w2t"].T) * (1.0 - h1t * h1t)
    g["w1t"] = xt.T @ dh1t
    g["b1t"] = dh1t.sum(axis=0)

    dh2p = dz[:, hidden:] * (1.0 - h2p * h2p)
    g["w2p"] = h1p.T @ dh2p
    g["b2p"] = dh2p.sum(axis=0)
    dh1p = (dh2p @ params["w2p"].T) * (1.0 - h1p * h1p)
    g["w1p"] = xp.T @ dh1p
    g["b1p"] = dh1p.sum(axis=0)
    return loss, g


def predict_chunks(policy: BcPolicy, inputs: np.ndarray) -> np.ndarray:
    """Map raw observations (N, 6) to action chunks (N, H, 3) in meters."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[None, :]
    if inputs.shape[1] != 6:
        raise ShapeError(f"expected 6 observation dims, got {inputs.shape[1]}")
    xn = policy.norm.normalize_in(inputs)
    y, _ = _forward(policy.params, xn[:, :3], xn[:, 3:])
    chunks = y.reshape(len(inputs), policy.horizon, 3)
    return policy.norm.denormalize_act(chunks)


# ---------------------------------------------------------------------------
# datasets from demonstration logs


@dataclass(frozen=True)
class Dataset:
    """(tactile_delta ++ ee_position) inputs and H-step action chunks.

    Every frame of every demo yields one sample; chunks that run off the
    end of an episode are zero-padded, so the final frame teaches "hold
    still".
    """

    inputs: np.ndarray    # (N, 6)
    chunks: np.ndarray    # (N, H, 3)
    horizon: int

    def __post_init__(self):
        if len(self.inputs) != len(self.chunks):
            raise ShapeError("inputs and chunks disagree on sample count")
        if len(self.inputs) == 0:
            raise ShapeError("dataset is empty")


def tactile_deltas(log: EpisodeLog, cfg: PipelineConfig) -> np.ndarray:
    """Replay the recalibrating baseline over a log's frames and return
    the per-frame tactile deltas, exactly as the live pipeline saw them."""
    state = BaselineState()
    out = np.empty((len(log.frames), 3))
    for i, f in enumerate(log.frames):
        state = update_baseline(state, f.wrench, f.tactile, f.t, cfg)
        d = compute_delta(f.tactile, state)
        out[i] = (d.x, d.y, d.z)
    return out


def extract_dataset(
    logs: Sequence[EpisodeLog],
    cfg: PipelineConfig,
    horizon: int = 10,
) -> Dataset:
    if not logs:
        raise ShapeError("no demonstration logs given")
    inputs, chunks = [], []
    for log in logs:
        deltas = tactile_deltas(log, cfg)
        acts = np.array(log.actions, dtype=float).reshape(-1, 3)
        for i, f in enumerate(log.frames):
            inputs.append(np.concatenate([deltas[i], f.ee_pos.as_tuple()]))
            chunk = np.zeros((horizon, 3))
            take = acts[i: i + horizon]
            chunk[: len(take)] = take
            chunks.append(chunk)
    return Dataset(np.array(inputs), np.array(chunks), horizon)


# ---------------------------------------------------------------------------
# training


def train_bc(
    dataset: Dataset,
    *,
    seed: int,
    hidden: int = 64,
    replan: int = 5,
    epochs: int = 500,
    lr: float = 1e-3,
    momentum: float = 0.9,
) -> tuple[BcPolicy, list[float]]:
    """Full-batch gradient descent with momentum; deterministic per seed.

    Returns the trained policy and the per-epoch loss curve (normalized
    units). Raises TrainingDivergedError if the loss goes non-finite.
    """
    horizon = dataset.horizon
    norm = Normalization.fit(dataset.inputs,
                             dataset.chunks.reshape(-1, 3))
    xn = norm.normalize_in(dataset.inputs)
    xt, xp = xn[:, :3], xn[:, 3:]
    targets = norm.normalize_act(dataset.chunks).reshape(len(dataset.inputs), -1)

    params = init_params(hidden, horizon, seed)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    curve: list[float] = []
    for epoch in range(epochs):
        loss, grads = loss_and_grads(params, xt, xp, targets)
        curve.append(loss)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch, curve)
        for k in params:
            velocity[k] = momentum * velocity[k] - lr * grads[k]
            params[k] = params[k] + velocity[k]
    return BcPolicy(params=params, norm=norm, horizon=horizon,
                    replan=replan, hidden=hidden), curve


def gradient_check(
    dataset: Dataset,
    *,
    seed: int = 0,
    hidden: int = 8,
    n_coords: int = 60,
    eps: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference
    gradients over a random sample of coordinates."""
    norm = Normalization.fit(dataset.inputs, dataset.chunks.reshape(-1, 3))
    xn = norm.normalize_in(dataset.inputs)
    xt, xp = xn[:, :3], xn[:, 3:]
    targets = norm.normalize_act(dataset.chunks).reshape(len(dataset.inputs), -1)
    params = init_params(hidden, dataset.horizon, seed)
    _, grads = loss_and_grads(params, xt, xp, targets)

    rng = np.random.default_rng(seed)
    worst = 0.0
    names = list(PARAM_ORDER)
    for _ in range(n_coords):
        name = names[int(rng.integers(len(names)))]
        flat_idx = int(rng.integers(params[name].size))
        idx = np.unravel_index(flat_idx, params[name].shape)
        orig = params[name][idx]
        params[name][idx] = orig + eps
        up, _ = loss_and_grads(params, xt, xp, targets)
        params[name][idx] = orig - eps
        dn, _ = loss_and_grads(params, xt, xp, targets)
        params[name][idx] = orig
        fd = (up - dn) / (2.0 * eps)
        an = grads[name][idx]
        denom = max(abs(fd), abs(an), 1e-8)
        worst = max(worst, abs(fd - an) / denom)
    return worst


# ---------------------------------------------------------------------------
# serialization: versioned header + row-major little-endian weights


def save_policy(policy: BcPolicy, path: str, config: Optional[dict] = None) -> None:
    header = {
        "version": FORMAT_VERSION,
        "hidden": policy.hidden,
        "horizon": policy.horizon,
        "replan": policy.replan,
        "shapes": {k: list(policy.params[k].shape) for k in PARAM_ORDER},
        "norm": {
            "in_mean": policy.norm.in_mean.tolist(),
            "in_std": policy.norm.in_std.tolist(),
            "act_mean": policy.norm.act_mean.tolist(),
            "act_std": policy.norm.act_std.tolist(),
        },
    }
    if config is not None:
        header["config"] = config
    head = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(head)))
        fh.write(head)
        for name in PARAM_ORDER:
            fh.write(np.ascontiguousarray(policy.params[name], dtype="<f8").tobytes())


def load_policy(path: str) -> BcPolicy:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(MAGIC)] != MAGIC:
        raise ShapeError("not a policy file (bad magic)")
    version, head_len = struct.unpack_from("<II", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ShapeError(f"unsupported policy format version {version}")
    at = len(MAGIC) + 8
    try:
        header = json.loads(data[at: at + head_len])
    except json.JSONDecodeError as exc:
        raise ShapeError(f"corrupt policy header: {exc.msg}") from None
    at += head_len
    params: dict[str, np.ndarray] = {}
    for name in PARAM_ORDER:
        shape = tuple(header["shapes"][name])
        n = int(np.prod(shape)) * 8
        if at + n > len(data):
            raise ShapeError(f"policy file truncated in parameter {name}")
        params[name] = np.frombuffer(data[at: at + n], dtype="<f8").reshape(shape).copy()
        at += n
    if at != len(data):
        raise ShapeError(f"{len(data) - at} stray bytes after weights")
    norm = Normalization(
        in_mean=np.array(header["norm"]["in_mean"]),
        in_std=np.array(header["norm"]["in_std"]),
        act_mean=np.array(header["norm"]["act_mean"]),
        act_std=np.array(header["norm"]["act_std"]),
    )
    return BcPolicy(params=params, norm=norm, horizon=header["horizon"],
                    replan=header["replan"], hidden=header["hidden"])


# ---------------------------------------------------------------------------
# demonstrations and rollouts

REACTIVE = "reactive"
NONREACTIVE = "nonreactive"
DEMO_TASK = "key-easy"


def scripted_expert(
    mode: str,
    cfg: PipelineConfig,
    seed: int,
    *,
    speed: float = 0.0025,
    noise_sigma: float = 1e-4,
    gain: float = 4e-4,
    react_eps: float = 0.5,
    backoff: float = 0.5,
) -> Callable[[Observation], tuple]:
    """Demonstrator for the pre-aligned key task, in two flavors.

    Both steer toward the nominal keyhole axis and descend at ``speed``
    with small seeded lateral noise. The reactive flavor additionally
    responds to contact: when the lateral tactile delta exceeds
    ``react_eps`` it shifts away from the contact force (``gain`` meters
    per newton) and eases back upward instead of pressing on. The
    nonreactive flavor ignores the sensor entirely.
    """
    if mode not in (REACTIVE, NONREACTIVE):
        raise ConfigError(f"unknown demonstrator mode: {mode!r}")
    rng = np.random.default_rng(seed + 0xBC)
    state = {"baseline": BaselineState()}

    def act(obs: Observation):
        frame_wrench = Wrench(obs.tactile, Torque3(0.0, 0.0, 0.0))
        state["baseline"] = update_baseline(state["baseline"], frame_wrench,
                                            obs.tactile, obs.t, cfg)
        d = compute_delta(obs.tactile, state["baseline"])
        ax = min(speed, max(-speed, -obs.pos.x))
        ay = min(speed, max(-speed, -obs.pos.y))
        if noise_sigma > 0.0:
            ax += rng.normal(0.0, noise_sigma)
            ay += rng.normal(0.0, noise_sigma)
        dz = -speed
        if mode == REACTIVE and np.sqrt(d.x * d.x + d.y * d.y) > react_eps:
            ax -= gain * d.x
            ay -= gain * d.y
            dz = backoff * speed
        return (ax, ay, dz)

    return act


def collect_demos(
    mode: str,
    *,
    n_demos: int = 10,
    task_name: str = DEMO_TASK,
    seed_start: int = 0,
    max_seed_scan: int = 2000,
) -> list[EpisodeLog]:
    """First ``n_demos`` successful demonstrator episodes found scanning
    seeds upward; failures are discarded, as with human demo curation."""
    task = task_config(task_name)
    cfg = pipeline_config(task_name)
    condition = "C4" if mode == REACTIVE else "C1"
    demos: list[EpisodeLog] = []
    for seed in range(seed_start, seed_start + max_seed_scan):
        log = run_episode(task, scripted_expert(mode, cfg, seed), seed=seed,
                          condition=condition, pipeline=cfg)
        if log.terminal is not None and log.terminal.kind == "success":
            demos.append(log)
            if len(demos) == n_demos:
                return demos
    raise ConfigError(
        f"found only {len(demos)}/{n_demos} successful demos scanning "
        f"{max_seed_scan} seeds for {task_name} ({mode})"
    )


def make_rollout_policy(policy: BcPolicy, cfg: PipelineConfig,
                        max_step: float) -> Callable[[Observation], tuple]:
    """Wrap a trained policy for the episode runner.

    Recomputes the tactile baseline online (the simulator's tactile and
    wrist force sensors read the same contact force, so tactile alone
    recovers the training-time deltas) and replans every ``replan``
    ticks, executing the head of the latest chunk with the simulator's
    step clamp applied.
    """
    state = {"baseline": BaselineState(), "chunk": None, "at": 0}

    def act(obs: Observation):
        frame_wrench = Wrench(obs.tactile, Torque3(0.0, 0.0, 0.0))
        state["baseline"] = update_baseline(state["baseline"], frame_wrench,
                                            obs.tactile, obs.t, cfg)
        d = compute_delta(obs.tactile, state["baseline"])
        if state["chunk"] is None or state["at"] >= policy.replan:
            x = np.array([d.x, d.y, d.z, obs.pos.x, obs.pos.y, obs.pos.z])
            state["chunk"] = predict_chunks(policy, x)[0]
            state["at"] = 0
        a = state["chunk"][state["at"]]
        state["at"] += 1
        n = float(np.sqrt(a @ a))
        if n > max_step:
            a = a * (max_step / n)
        return (float(a[0]), float(a[1]), float(a[2]))

    return act


def rollout(
    policy: BcPolicy,
    task: TaskConfig,
    *,
    seed: int,
    pipeline: Optional[PipelineConfig] = None,
    condition: str = "C1",
) -> EpisodeLog:
    """One closed-loop evaluation episode.

    Rollouts run under C1 by default: the learned policy feels tactile
    deltas directly, and no scripted cue logic interferes.
    """
    cfg = pipeline or PipelineConfig()
    return run_episode(task, make_rollout_policy(policy, cfg, task.max_step),
                       seed=seed, condition=condition, pipeline=cfg)
