"""Memory-efficient two-stage 3D GAN with a CRF embedding critic.

Subpackages: tensor (autodiff core), models (networks), training (loop and
instrumentation), data (volumes and phantoms), metrics (FID/MMD), study
(2AFC rating service), plus the ``crfgan`` command line entry point.
"""

__version__ = "0.1.0"
