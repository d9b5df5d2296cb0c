"""Training configuration and the per-step loss record."""

from dataclasses import asdict, dataclass


@dataclass
class TrainConfig:
    """Knobs for one unpaired translation run.

    ``dataset_dir`` follows the emitter layout (trainA/trainB/testA/testB of
    raw angiograms). ``cycle_weight`` and ``identity_weight`` scale the
    reconstruction and identity terms against the adversarial pair.
    """

    dataset_dir: str
    out_dir: str
    epochs: int = 200
    lr: float = 2e-4
    betas: tuple = (0.5, 0.999)
    batch_size: int = 1
    cycle_weight: float = 10.0
    identity_weight: float = 5.0
    seed: int = 0
    least_squares: bool = False
    checkpoint_every: int = 50
    base_width: int = 16
    n_res_blocks: int = 2

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (self.lr > 0):
            raise ValueError("lr must be positive")
        if self.cycle_weight < 0 or self.identity_weight < 0:
            raise ValueError("loss weights must be >= 0")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ValueError("betas must be two values in [0, 1)")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.base_width < 1 or self.n_res_blocks < 0:
            raise ValueError("base_width >= 1 and n_res_blocks >= 0 required")

    def as_dict(self):
        # plain JSON-ready types only; checkpoints embed this dict and must
        # stay loadable under torch.load(weights_only=True)
        d = asdict(self)
        d["dataset_dir"] = str(self.dataset_dir)
        d["out_dir"] = str(self.out_dir)
        d["betas"] = list(self.betas)
        return d


@dataclass(frozen=True)
class LossRecord:
    """One optimization step of the translation objective.

    ``adv_ab``/``adv_ba`` are the per-direction adversarial objectives in
    their joint (discriminator-side) form, the quantity that sits at
    2*log(2) per sample when the discriminator answers 0.5 everywhere.
    ``gen_ab``/``gen_ba`` are the non-saturating generator-side terms the
    generator update actually follows. ``total`` is
    adv_ab + adv_ba + cycle_weight*cycle + identity_weight*identity, so with
    identity generators it reduces to the adversarial terms alone.
    """

    step: int
    adv_ab: float
    adv_ba: float
    gen_ab: float
    gen_ba: float
    cycle: float
    identity: float
    total: float

    def __post_init__(self):
        if self.cycle < 0 or self.identity < 0:
            raise ValueError("cycle and identity terms are L1 norms, >= 0")

    FIELDS = ("step", "adv_ab", "adv_ba", "gen_ab", "gen_ba",
              "cycle", "identity", "total")

    def row(self):
        return [getattr(self, name) for name in self.FIELDS]
