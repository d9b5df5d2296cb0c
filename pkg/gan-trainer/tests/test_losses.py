import math

import pytest
import torch

from gan_trainer.losses import loss_adversarial, loss_cycle, loss_identity


def test_uninformative_discriminator_costs_two_log_two():
    # a discriminator answering 0.5 everywhere pays log 2 for the real
    # half and log 2 for the fake half of every sample
    half = torch.full((7,), 0.5)
    gen, disc = loss_adversarial(half, half)
    assert disc.item() == pytest.approx(2.0 * math.log(2.0), rel=1e-6)
    assert gen.item() == pytest.approx(math.log(2.0), rel=1e-6)


def test_perfect_discriminator_loss_vanishes():
    real = torch.full((5,), 1.0 - 1e-7)
    fake = torch.full((5,), 1e-7)
    _, disc = loss_adversarial(fake, real)
    assert disc.item() < 1e-5


def test_fooled_discriminator_zeroes_generator_loss():
    fake = torch.full((5,), 1.0 - 1e-7)
    gen, _ = loss_adversarial(fake, torch.full((5,), 0.5))
    assert gen.item() < 1e-5


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.25, 1.25])
def test_scores_outside_open_interval_rejected(bad):
    good = torch.full((3,), 0.5)
    spiked = good.clone()
    spiked[1] = bad
    with pytest.raises(ValueError):
        loss_adversarial(spiked, good)
    with pytest.raises(ValueError):
        loss_adversarial(good, spiked)


def test_empty_scores_rejected():
    with pytest.raises(ValueError):
        loss_adversarial(torch.empty(0), torch.full((2,), 0.5))


def test_least_squares_variant():
    half = torch.full((4,), 0.5)
    gen, disc = loss_adversarial(half, half, least_squares=True)
    assert gen.item() == pytest.approx(0.25)
    assert disc.item() == pytest.approx(0.5)
    real = torch.full((4,), 1.0 - 1e-7)
    fake = torch.full((4,), 1e-7)
    gen, disc = loss_adversarial(fake, real, least_squares=True)
    assert disc.item() < 1e-5
    gen, _ = loss_adversarial(real, half, least_squares=True)
    assert gen.item() < 1e-5


def test_cycle_zero_for_perfect_reconstruction():
    a = torch.rand(2, 1, 8, 8)
    b = torch.rand(2, 1, 8, 8)
    assert loss_cycle(a, a.clone(), b, b.clone()).item() == 0.0


def test_cycle_constant_offset_sums_both_directions():
    a = torch.zeros(1, 1, 6, 6)
    b = torch.zeros(1, 1, 6, 6)
    val = loss_cycle(a, a + 0.1, b, b + 0.1)
    assert val.item() == pytest.approx(0.2, rel=1e-6)


def test_cycle_nonnegative():
    g = torch.Generator().manual_seed(3)
    for _ in range(20):
        a = torch.rand(1, 1, 5, 5, generator=g)
        b = torch.rand(1, 1, 5, 5, generator=g)
        ra = torch.rand(1, 1, 5, 5, generator=g)
        rb = torch.rand(1, 1, 5, 5, generator=g)
        assert loss_cycle(a, ra, b, rb).item() >= 0.0


def test_cycle_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        loss_cycle(torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 5, 5),
                   torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 4, 4))


def test_identity_zero_for_identity_generators():
    a = torch.rand(3, 3)
    b = torch.rand(3, 3)
    assert loss_identity(b, b.clone(), a, a.clone()).item() == 0.0


def test_identity_zero_map_on_unit_inputs_costs_two():
    ones = torch.ones(2, 4, 4)
    zeros = torch.zeros(2, 4, 4)
    assert loss_identity(ones, zeros, ones, zeros).item() == 2.0


def test_identity_symmetric_in_branch_order():
    g = torch.Generator().manual_seed(9)
    b, gb = torch.rand(4, 4, generator=g), torch.rand(4, 4, generator=g)
    a, ga = torch.rand(4, 4, generator=g), torch.rand(4, 4, generator=g)
    assert (loss_identity(b, gb, a, ga).item()
            == loss_identity(a, ga, b, gb).item())


def test_identity_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        loss_identity(torch.zeros(2, 2), torch.zeros(2, 3),
                      torch.zeros(2, 2), torch.zeros(2, 2))
