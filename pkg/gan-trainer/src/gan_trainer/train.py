"""Deterministic unpaired translation training loop.

One step updates the generator pair (adversarial + weighted cycle + weighted
identity), then both discriminators on detached fakes. Checkpoints land every
``checkpoint_every`` epochs plus at the end, written atomically; every step
appends a loss row to ``loss_log.csv``.
"""

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import torch

from .config import LossRecord, TrainConfig
from .data import UnpairedFolders
from .losses import loss_adversarial, loss_cycle, loss_identity
from .networks import Discriminator, Generator

# keep post-sigmoid scores off exact 0/1 so the log losses stay finite
_SCORE_EPS = 1e-6


@dataclass(frozen=True)
class TrainResult:
    checkpoint_path: Path
    log_path: Path
    records: list


def _squash(scores):
    return scores.clamp(_SCORE_EPS, 1.0 - _SCORE_EPS)


def _atomic_save(payload, path):
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    try:
        torch.save(payload, tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _checkpoint_payload(cfg, nets):
    return {
        "config": cfg.as_dict(),
        "arch": {"base_width": cfg.base_width, "n_res_blocks": cfg.n_res_blocks},
        "g_ab": nets["g_ab"].state_dict(),
        "g_ba": nets["g_ba"].state_dict(),
        "d_a": nets["d_a"].state_dict(),
        "d_b": nets["d_b"].state_dict(),
    }


def train(cfg: TrainConfig) -> TrainResult:
    dataset = UnpairedFolders(cfg.dataset_dir)  # validates before any step
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(cfg.seed)
    torch.set_num_threads(1)
    sampler = torch.Generator().manual_seed(cfg.seed)

    nets = {
        "g_ab": Generator(cfg.base_width, cfg.n_res_blocks),
        "g_ba": Generator(cfg.base_width, cfg.n_res_blocks),
        "d_a": Discriminator(cfg.base_width),
        "d_b": Discriminator(cfg.base_width),
    }
    g_ab, g_ba, d_a, d_b = nets["g_ab"], nets["g_ba"], nets["d_a"], nets["d_b"]
    opt_g = torch.optim.Adam(
        list(g_ab.parameters()) + list(g_ba.parameters()),
        lr=cfg.lr, betas=tuple(cfg.betas))
    opt_d = torch.optim.Adam(
        list(d_a.parameters()) + list(d_b.parameters()),
        lr=cfg.lr, betas=tuple(cfg.betas))

    records = []
    log_path = out_dir / "loss_log.csv"
    step = 0
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LossRecord.FIELDS)
        for epoch in range(1, cfg.epochs + 1):
            for _ in range(dataset.steps_per_epoch):
                step += 1
                a, b = dataset.sample(sampler, cfg.batch_size)

                # generator update
                opt_g.zero_grad()
                fake_b = g_ab(a)
                fake_a = g_ba(b)
                gen_ab, _ = loss_adversarial(
                    _squash(d_b(fake_b)), _squash(d_b(b)), cfg.least_squares)
                gen_ba, _ = loss_adversarial(
                    _squash(d_a(fake_a)), _squash(d_a(a)), cfg.least_squares)
                cyc = loss_cycle(a, g_ba(fake_b), b, g_ab(fake_a))
                idt = loss_identity(b, g_ab(b), a, g_ba(a))
                g_objective = (gen_ab + gen_ba
                               + cfg.cycle_weight * cyc
                               + cfg.identity_weight * idt)
                g_objective.backward()
                opt_g.step()

                # discriminator update on detached fakes; these joint losses
                # are the per-direction adversarial objectives of the record
                opt_d.zero_grad()
                _, adv_ab = loss_adversarial(
                    _squash(d_b(fake_b.detach())), _squash(d_b(b)),
                    cfg.least_squares)
                _, adv_ba = loss_adversarial(
                    _squash(d_a(fake_a.detach())), _squash(d_a(a)),
                    cfg.least_squares)
                (adv_ab + adv_ba).backward()
                opt_d.step()

                adv_ab_v, adv_ba_v = adv_ab.item(), adv_ba.item()
                cyc_v, idt_v = cyc.item(), idt.item()
                record = LossRecord(
                    step=step,
                    adv_ab=adv_ab_v, adv_ba=adv_ba_v,
                    gen_ab=gen_ab.item(), gen_ba=gen_ba.item(),
                    cycle=cyc_v, identity=idt_v,
                    total=(adv_ab_v + adv_ba_v
                           + cfg.cycle_weight * cyc_v
                           + cfg.identity_weight * idt_v),
                )
                if not math.isfinite(record.total):
                    raise RuntimeError(
                        f"non-finite loss at step {step} "
                        f"(epoch {epoch}): {record.row()}")
                records.append(record)
                writer.writerow(record.row())

            if epoch % cfg.checkpoint_every == 0 and epoch != cfg.epochs:
                _atomic_save(_checkpoint_payload(cfg, nets),
                             out_dir / f"checkpoint_{epoch:04d}.pt")

    final = out_dir / "checkpoint_final.pt"
    _atomic_save(_checkpoint_payload(cfg, nets), final)
    return TrainResult(checkpoint_path=final, log_path=log_path, records=records)
