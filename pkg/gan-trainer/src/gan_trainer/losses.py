"""Adversarial, cycle and identity objectives.

The adversarial pair works on post-sigmoid scores and uses the log form by
default: the generator minimizes -log D(fake) (non-saturating, so a perfect
generator sits at exactly zero) and the discriminator minimizes
-log D(real) - log(1 - D(fake)). A least-squares variant is available behind
a flag for parity with the common open-source training recipe.
"""

import torch


def _check_scores(name, scores):
    if not torch.is_tensor(scores) or scores.numel() == 0:
        raise ValueError(f"{name} must be a non-empty tensor")
    if not torch.all((scores > 0) & (scores < 1)):
        raise ValueError(f"{name} must lie strictly in (0, 1); "
                         "pass scores through the discriminator sigmoid")


def loss_adversarial(fake_scores, real_scores, least_squares=False):
    """(generator loss, discriminator loss) for one translation direction."""
    _check_scores("fake_scores", fake_scores)
    _check_scores("real_scores", real_scores)
    if least_squares:
        gen = torch.mean((fake_scores - 1.0) ** 2)
        disc = torch.mean((real_scores - 1.0) ** 2) + torch.mean(fake_scores**2)
    else:
        gen = -torch.log(fake_scores).mean()
        disc = -torch.log(real_scores).mean() - torch.log1p(-fake_scores).mean()
    return gen, disc


def _check_pair(name_x, x, name_y, y):
    if x.shape != y.shape:
        raise ValueError(f"{name_x} {tuple(x.shape)} and {name_y} "
                         f"{tuple(y.shape)} must share a shape")


def loss_cycle(a, rec_a, b, rec_b):
    """Sum of mean L1 reconstruction errors for both directions."""
    _check_pair("a", a, "rec_a", rec_a)
    _check_pair("b", b, "rec_b", rec_b)
    return (rec_a - a).abs().mean() + (rec_b - b).abs().mean()


def loss_identity(b, gab_of_b, a, gba_of_a):
    """Sum of mean L1 deviations from identity on same-domain inputs."""
    _check_pair("b", b, "gab_of_b", gab_of_b)
    _check_pair("a", a, "gba_of_a", gba_of_a)
    return (gab_of_b - b).abs().mean() + (gba_of_a - a).abs().mean()
