"""Bilateral mode-domain predictor.

Per-mode causal TCN encoders (weights shared across sides), cross-mode
self-attention within each side, cross-side cross-attention whose keys and
values come from the opposite side with a parallel linear-coupling branch,
and per-mode TCN decoders ending in a linear map to the prediction horizon.
Everything runs in float64 so training runs are bit-reproducible and
finite-difference checks are meaningful.
"""
import math
from dataclasses import dataclass

import torch
from torch import nn

from .config import PredictorConfig
from .errors import InvalidInputError, ShapeError


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ShapeError(message)


class CausalConv1d(nn.Module):
    """1-D convolution padded on the left only, so outputs never see the
    future."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 dilation: int):
        super().__init__()
        self.left_pad = (kernel - 1) * dilation
        self.conv = nn.Conv1d(in_channels, out_channels, kernel, dilation=dilation)

    def forward(self, x):
        return self.conv(nn.functional.pad(x, (self.left_pad, 0)))


class TcnEncoder(nn.Module):
    """Dilated causal stack over one mode's history window.

    Stages are conv -> ReLU -> per-position layer norm; a 1x1 projection of
    the raw input is added on top (the skip), and the final time step is the
    mode latent. Modes are folded into the batch so one weight set serves
    every mode and both sides.
    """

    def __init__(self, d: int, dilations=(1, 2, 4), kernel: int = 3):
        super().__init__()
        self.d = d
        convs = []
        for i, dilation in enumerate(dilations):
            convs.append(CausalConv1d(1 if i == 0 else d, d, kernel, dilation))
        self.convs = nn.ModuleList(convs)
        self.norms = nn.ModuleList([nn.LayerNorm(d) for _ in dilations])
        self.skip = nn.Conv1d(1, d, kernel_size=1)

    def forward(self, windows):
        _require(windows.dim() == 3, f"expected (batch, modes, window), got "
                                     f"shape {tuple(windows.shape)}")
        batch, k, w = windows.shape
        _require(w >= 1, "empty window")
        flat = windows.reshape(batch * k, 1, w)
        y = flat
        for conv, norm in zip(self.convs, self.norms):
            y = torch.relu(conv(y))
            y = norm(y.transpose(1, 2)).transpose(1, 2)
        y = y + self.skip(flat)
        return y[:, :, -1].reshape(batch, k, self.d)


def _split_heads(x, heads: int):
    batch, tokens, d = x.shape
    return x.reshape(batch, tokens, heads, d // heads).transpose(1, 2)


def _merge_heads(x):
    batch, heads, tokens, dh = x.shape
    return x.transpose(1, 2).reshape(batch, tokens, heads * dh)


def _attend(q, k, v, heads: int):
    """Scaled dot-product attention; returns (context, row-stochastic
    weights)."""
    qh, kh, vh = (_split_heads(t, heads) for t in (q, k, v))
    scores = qh @ kh.transpose(-1, -2) / math.sqrt(qh.shape[-1])
    weights = torch.softmax(scores, dim=-1)
    return _merge_heads(weights @ vh), weights


class CrossModeSelfAttention(nn.Module):
    """Attention over the K mode tokens of one side.

    Learned mode-identity embeddings are added before the projections (the
    tokens are otherwise unordered); the toggle exists so their effect can be
    ablated. Projections carry no bias, keeping a zero token inert.
    """

    def __init__(self, d: int, heads: int, k: int, use_embeddings: bool = True):
        super().__init__()
        self.heads = heads
        self.k = k
        self.use_embeddings = use_embeddings
        self.mode_embeddings = nn.Parameter(torch.randn(k, d) * 0.02)
        self.wq = nn.Linear(d, d, bias=False)
        self.wk = nn.Linear(d, d, bias=False)
        self.wv = nn.Linear(d, d, bias=False)
        self.wo = nn.Linear(d, d, bias=False)
        self.norm_attn = nn.LayerNorm(d)
        self.norm_ff = nn.LayerNorm(d)
        self.ff = nn.Sequential(nn.Linear(d, 4 * d), nn.ReLU(),
                                nn.Linear(4 * d, d))

    def forward(self, latents, return_weights: bool = False):
        _require(latents.dim() == 3, f"expected (batch, modes, d), got shape "
                                     f"{tuple(latents.shape)}")
        _require(latents.shape[1] == self.k,
                 f"built for {self.k} modes, got {latents.shape[1]}")
        tokens = latents + self.mode_embeddings if self.use_embeddings else latents
        context, weights = _attend(self.wq(tokens), self.wk(tokens),
                                   self.wv(tokens), self.heads)
        y = self.norm_attn(latents + self.wo(context))
        out = self.norm_ff(y + self.ff(y))
        if return_weights:
            return out, weights
        return out


class CrossSideFusion(nn.Module):
    """Cross-attention against the opposite side plus a linear coupling.

    Queries come from this side, keys and values from the other. The
    attention output is summed with W_c applied to this side's tokens and
    layer-normalized, so gradient reaches the own-side input even when the
    attention weights saturate. Bias-free projections keep an all-zero
    opposite side contributing exactly nothing through the attention path.
    """

    def __init__(self, d: int, heads: int):
        super().__init__()
        self.heads = heads
        self.wq = nn.Linear(d, d, bias=False)
        self.wk = nn.Linear(d, d, bias=False)
        self.wv = nn.Linear(d, d, bias=False)
        self.wo = nn.Linear(d, d, bias=False)
        self.coupling = nn.Linear(d, d, bias=False)
        self.norm_fuse = nn.LayerNorm(d)
        self.norm_ff = nn.LayerNorm(d)
        self.ff = nn.Sequential(nn.Linear(d, 4 * d), nn.ReLU(),
                                nn.Linear(4 * d, d))

    def forward(self, own, other, return_weights: bool = False):
        _require(own.shape == other.shape,
                 f"side shapes differ: {tuple(own.shape)} vs {tuple(other.shape)}")
        _require(own.dim() == 3, f"expected (batch, modes, d), got shape "
                                 f"{tuple(own.shape)}")
        context, weights = _attend(self.wq(own), self.wk(other), self.wv(other),
                                   self.heads)
        y = self.norm_fuse(self.wo(context) + self.coupling(own))
        out = self.norm_ff(y + self.ff(y))
        if return_weights:
            return out, weights
        return out


class TcnDecoder(nn.Module):
    """Inverted dilated stack over the latent, then a linear map to the
    horizon. The latent vector is treated as a length-d single-channel
    sequence with an identity skip around the stack."""

    def __init__(self, d: int, horizon: int, dilations=(4, 2, 1),
                 kernel: int = 3):
        super().__init__()
        self.d = d
        self.horizon = horizon
        last = len(dilations) - 1
        convs = []
        for i, dilation in enumerate(dilations):
            convs.append(CausalConv1d(1 if i == 0 else d,
                                      1 if i == last else d, kernel, dilation))
        self.convs = nn.ModuleList(convs)
        # final stage stays linear, so it carries no norm
        self.norms = nn.ModuleList([nn.LayerNorm(d) for _ in range(last)])
        self.project = nn.Linear(d, horizon)

    def forward(self, latents):
        _require(latents.dim() == 3, f"expected (batch, modes, d), got shape "
                                     f"{tuple(latents.shape)}")
        _require(latents.shape[2] == self.d,
                 f"latent width {latents.shape[2]} != {self.d}")
        batch, k, d = latents.shape
        flat = latents.reshape(batch * k, 1, d)
        y = flat
        for i, conv in enumerate(self.convs):
            y = conv(y)
            if i < len(self.convs) - 1:
                y = torch.relu(y)
                y = self.norms[i](y.transpose(1, 2)).transpose(1, 2)
        y = (y + flat).squeeze(1)
        return self.project(y).reshape(batch, k, self.horizon)


class MdaPredictor(nn.Module):
    """The full bilateral network; forward takes both sides at once."""

    SIDES = ("human", "robot")

    def __init__(self, config: PredictorConfig):
        super().__init__()
        self.config = config
        self.encoder = TcnEncoder(config.d, config.encoder_dilations)
        self.self_attention = nn.ModuleDict({
            side: CrossModeSelfAttention(config.d, config.heads, config.k,
                                         config.mode_embeddings)
            for side in self.SIDES})
        self.fusion = nn.ModuleDict({
            side: CrossSideFusion(config.d, config.heads) for side in self.SIDES})
        self.decoder = nn.ModuleDict({
            side: TcnDecoder(config.d, config.h, config.decoder_dilations)
            for side in self.SIDES})
        self.double()

    def forward(self, human, robot):
        _require(human.shape == robot.shape,
                 f"side shapes differ: {tuple(human.shape)} vs {tuple(robot.shape)}")
        _require(human.dim() == 3 and human.shape[1] == self.config.k,
                 f"expected (batch, {self.config.k}, window), got shape "
                 f"{tuple(human.shape)}")
        latent_h = self.encoder(human)
        latent_r = self.encoder(robot)
        tokens_h = self.self_attention["human"](latent_h)
        tokens_r = self.self_attention["robot"](latent_r)
        fused_h = self.fusion["human"](tokens_h, tokens_r)
        fused_r = self.fusion["robot"](tokens_r, tokens_h)
        return self.decoder["human"](fused_h), self.decoder["robot"](fused_r)


@dataclass(frozen=True)
class RestoredTrajectory:
    """Autoregressive rollout: per-mode trajectories and their mode sums."""

    human_modes: torch.Tensor
    robot_modes: torch.Tensor

    @property
    def human_signal(self) -> torch.Tensor:
        return self.human_modes.sum(dim=0)

    @property
    def robot_signal(self) -> torch.Tensor:
        return self.robot_modes.sum(dim=0)


def autoregressive_restore(model: MdaPredictor, human_history, robot_history,
                           steps: int) -> RestoredTrajectory:
    """Roll the model forward for `steps` samples with no ground truth.

    Each hop predicts the full horizon from the trailing w samples of the
    rolling history and appends its own output; a single hop (steps <= h)
    is exactly the one-shot teacher-forced prediction.
    """
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    w = model.config.w
    histories = []
    for name, value in (("human", human_history), ("robot", robot_history)):
        tensor = torch.as_tensor(value, dtype=torch.float64)
        if tensor.dim() != 2 or tensor.shape[0] != model.config.k:
            raise ShapeError(f"{name} history must be ({model.config.k}, >=w), "
                             f"got shape {tuple(tensor.shape)}")
        if tensor.shape[1] < w:
            raise InvalidInputError(f"{name} history has {tensor.shape[1]} "
                                    f"samples, needs at least {w}")
        histories.append(tensor)
    human_roll, robot_roll = histories
    outputs = ([], [])
    produced = 0
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            while produced < steps:
                pred_h, pred_r = model(human_roll[None, :, -w:],
                                       robot_roll[None, :, -w:])
                pred_h, pred_r = pred_h[0], pred_r[0]
                outputs[0].append(pred_h)
                outputs[1].append(pred_r)
                human_roll = torch.cat([human_roll, pred_h], dim=1)
                robot_roll = torch.cat([robot_roll, pred_r], dim=1)
                produced += pred_h.shape[1]
    finally:
        if was_training:
            model.train()
    human_modes = torch.cat(outputs[0], dim=1)[:, :steps]
    robot_modes = torch.cat(outputs[1], dim=1)[:, :steps]
    return RestoredTrajectory(human_modes=human_modes, robot_modes=robot_modes)
