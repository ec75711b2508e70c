"""Training loop: scheduled sampling, four-component loss, best-validation
checkpointing, metrics CSV.

Determinism contract: with a fixed seed the whole run is bit-reproducible on
one platform. All randomness (parameter init, epoch shuffles, sampling draws)
flows from the single seed argument; nothing reads the wall clock except the
operator-facing progress line, and no timestamp lands in any artifact.
"""
import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import PredictorConfig
from .data import build_windows, split_items
from .errors import DataError, InvalidInputError
from .loss import LossComponents, predicted_gram, total_loss
from .model import MdaPredictor

METRICS_COLUMNS = ("epoch", "loss_total", "loss_pred", "loss_recon",
                   "loss_orth", "loss_rel", "val_loss", "val_accuracy",
                   "tf_ratio")
CHECKPOINT_NAME = "checkpoint.pt"
METRICS_NAME = "metrics.csv"


def teacher_forcing_ratio(epoch: int, total_epochs: int) -> float:
    """Fraction of items fed ground-truth inputs at this epoch: 1 - e/E."""
    if total_epochs <= 0:
        raise InvalidInputError("total_epochs must be positive")
    if epoch < 0 or epoch > total_epochs:
        raise InvalidInputError(f"epoch {epoch} outside [0, {total_epochs}]")
    return 1.0 - epoch / total_epochs


@dataclass(frozen=True)
class TrainResult:
    rows: list
    metrics_path: Path
    checkpoint_path: Path
    best_epoch: int
    best_val_loss: float
    train_rmse: float
    split_sizes: tuple


def _stack(items, attr) -> torch.Tensor:
    return torch.from_numpy(np.stack([getattr(item, attr) for item in items]))


def _side_loss(pred, target, config: PredictorConfig) -> LossComponents:
    return total_loss(pred, target, pred.sum(dim=1), target.sum(dim=1),
                      predicted_gram(pred),
                      weights=(config.lambda1, config.lambda2, config.lambda3),
                      tau=config.tau)


def _both_sides_loss(model, human_in, robot_in, human_tgt, robot_tgt,
                     config) -> tuple:
    pred_h, pred_r = model(human_in, robot_in)
    loss_h = _side_loss(pred_h, human_tgt, config)
    loss_r = _side_loss(pred_r, robot_tgt, config)
    merged = LossComponents(
        total=0.5 * (loss_h.total + loss_r.total),
        pred=0.5 * (loss_h.pred + loss_r.pred),
        recon=0.5 * (loss_h.recon + loss_r.recon),
        orth=0.5 * (loss_h.orth + loss_r.orth),
        rel=0.5 * (loss_h.rel + loss_r.rel))
    return merged, pred_h, pred_r


def _batches(count: int, batch_size: int):
    for start in range(0, count, batch_size):
        yield start, min(start + batch_size, count)


def _scheduled_inputs(model, batch, ratio: float, generator) -> tuple:
    """Teacher-forced inputs, except items drawn for free-running get their
    input tail rebuilt from the model's own previous-window prediction.

    Items without a previous window stay teacher-forced; the draw is shared
    by both sides so the pair remains coherent. Predictions enter as data
    (no gradient), standard scheduled-sampling practice.
    """
    human_in = _stack(batch, "human_in")
    robot_in = _stack(batch, "robot_in")
    draws = torch.rand(len(batch), generator=generator, dtype=torch.float64)
    free = [i for i, item in enumerate(batch)
            if item.prev_human is not None and float(draws[i]) >= ratio]
    if not free:
        return human_in, robot_in
    prev_h = _stack([batch[i] for i in free], "prev_human")
    prev_r = _stack([batch[i] for i in free], "prev_robot")
    with torch.no_grad():
        pred_h, pred_r = model(prev_h, prev_r)
    tail = min(model.config.h, model.config.w)
    for j, i in enumerate(free):
        human_in[i, :, -tail:] = pred_h[j, :, -tail:]
        robot_in[i, :, -tail:] = pred_r[j, :, -tail:]
    return human_in, robot_in


def evaluate(model, items, config: PredictorConfig) -> dict:
    """Loss components and signal-level accuracy on teacher-forced inputs."""
    if not items:
        raise DataError("nothing to evaluate")
    sums = dict.fromkeys(("total", "pred", "recon", "orth", "rel"), 0.0)
    accuracy_sum = 0.0
    accuracy_count = 0
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for start, stop in _batches(len(items), config.batch_size):
                batch = items[start:stop]
                human_in = _stack(batch, "human_in")
                robot_in = _stack(batch, "robot_in")
                human_tgt = _stack(batch, "human_tgt")
                robot_tgt = _stack(batch, "robot_tgt")
                merged, pred_h, pred_r = _both_sides_loss(
                    model, human_in, robot_in, human_tgt, robot_tgt, config)
                weight = len(batch)
                for name, value in merged.detached().items():
                    sums[name] += value * weight
                for pred, target in ((pred_h, human_tgt), (pred_r, robot_tgt)):
                    pred_signal = pred.sum(dim=1)
                    true_signal = target.sum(dim=1)
                    err = torch.linalg.norm(pred_signal - true_signal, dim=1)
                    ref = torch.clamp(torch.linalg.norm(true_signal, dim=1),
                                      min=1e-12)
                    accuracy = torch.clamp(100.0 * (1.0 - err / ref), max=100.0)
                    accuracy_sum += float(accuracy.sum())
                    accuracy_count += weight
    finally:
        if was_training:
            model.train()
    out = {name: value / len(items) for name, value in sums.items()}
    out["accuracy"] = accuracy_sum / accuracy_count
    return out


def save_checkpoint(path, model, config: PredictorConfig, extra: dict) -> None:
    """Write-temp-rename, so a crash never leaves a torn checkpoint."""
    path = Path(path)
    payload = {"state": model.state_dict(), "config": config.to_dict()}
    payload.update(extra)
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple:
    """Returns (model in eval mode, checkpoint metadata dict)."""
    try:
        payload = torch.load(path, weights_only=True)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint: {exc}") from exc
    config = PredictorConfig.from_dict(payload["config"])
    model = MdaPredictor(config)
    model.load_state_dict(payload["state"])
    model.eval()
    meta = {key: value for key, value in payload.items() if key != "state"}
    return model, meta


def train(data_dir, config: PredictorConfig, out_dir, human: str = "human",
          robot: str = "robot", seed: int = 2024, stride: int = 0,
          resume=None, log=None) -> TrainResult:
    """Run the full schedule and leave metrics.csv plus the best-validation
    checkpoint in out_dir.

    resume loads model weights from an earlier checkpoint (its config must
    match) and then trains the usual number of epochs on top.
    """
    torch.manual_seed(seed)
    items = build_windows(data_dir, human, robot, config.w, config.h, stride)
    train_items, val_items, test_items = split_items(items)
    model = MdaPredictor(config)
    if resume is not None:
        previous, meta = load_checkpoint(resume)
        if PredictorConfig.from_dict(meta["config"]) != config:
            raise InvalidInputError("checkpoint config does not match this run")
        model.load_state_dict(previous.state_dict())
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr,
                                 weight_decay=config.weight_decay)
    sampler = torch.Generator().manual_seed(seed + 1)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / CHECKPOINT_NAME
    rows = []
    best_epoch = -1
    best_val = float("inf")
    best_rmse = float("nan")
    for epoch in range(config.epochs):
        ratio = teacher_forcing_ratio(epoch, config.epochs)
        order = torch.randperm(len(train_items), generator=sampler).tolist()
        shuffled = [train_items[i] for i in order]
        sums = dict.fromkeys(("total", "pred", "recon", "orth", "rel"), 0.0)
        square_error = 0.0
        signal_count = 0
        model.train()
        for start, stop in _batches(len(shuffled), config.batch_size):
            batch = shuffled[start:stop]
            human_in, robot_in = _scheduled_inputs(model, batch, ratio, sampler)
            human_tgt = _stack(batch, "human_tgt")
            robot_tgt = _stack(batch, "robot_tgt")
            merged, pred_h, pred_r = _both_sides_loss(
                model, human_in, robot_in, human_tgt, robot_tgt, config)
            optimizer.zero_grad()
            merged.total.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm)
            optimizer.step()
            weight = len(batch)
            for name, value in merged.detached().items():
                sums[name] += value * weight
            with torch.no_grad():
                for pred, target in ((pred_h, human_tgt), (pred_r, robot_tgt)):
                    diff = pred.sum(dim=1) - target.sum(dim=1)
                    square_error += float((diff ** 2).sum())
                    signal_count += diff.numel()
        means = {name: value / len(train_items) for name, value in sums.items()}
        train_rmse = (square_error / signal_count) ** 0.5
        val = evaluate(model, val_items, config)
        row = {"epoch": epoch, "loss_total": means["total"],
               "loss_pred": means["pred"], "loss_recon": means["recon"],
               "loss_orth": means["orth"], "loss_rel": means["rel"],
               "val_loss": val["total"], "val_accuracy": val["accuracy"],
               "tf_ratio": ratio}
        rows.append(row)
        if log is not None:
            log("epoch %d/%d loss %.6f val %.6f acc %.2f%%"
                % (epoch + 1, config.epochs, means["total"], val["total"],
                   val["accuracy"]))
        if val["total"] < best_val:
            best_val = val["total"]
            best_epoch = epoch
            best_rmse = train_rmse
            save_checkpoint(checkpoint_path, model, config,
                            {"epoch": epoch, "val_loss": val["total"],
                             "train_rmse": train_rmse, "seed": seed,
                             "human": human, "robot": robot})
    metrics_path = out_dir / METRICS_NAME
    with open(metrics_path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=METRICS_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: repr(value) if isinstance(value, float)
                             else value for key, value in row.items()})
    return TrainResult(rows=rows, metrics_path=metrics_path,
                       checkpoint_path=checkpoint_path, best_epoch=best_epoch,
                       best_val_loss=best_val, train_rmse=best_rmse,
                       split_sizes=(len(train_items), len(val_items),
                                    len(test_items)))
