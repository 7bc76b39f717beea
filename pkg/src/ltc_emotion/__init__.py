"""Multimodal emotion recognition with liquid time-constant networks.

Subpackages: ``dsp`` (signal conditioning), ``features`` (per-epoch feature
bundles and datasets), ``autograd`` (tensors and reverse-mode gradients),
``ltc`` (the recurrent cell), ``nn`` (the full model), ``train`` (loss,
optimiser, metrics, loop) and ``analysis`` (post-hoc statistics).
"""
__version__ = "0.1.0"
