"""lcmix: latent class models with a continuous external variable (LCreg, LCdist, LCcw)."""

__version__ = "0.1.0"
