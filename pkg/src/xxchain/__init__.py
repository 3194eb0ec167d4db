"""Non-Hermitian open XX chain: spectra, metric operator, perturbation series and symmetry algebras."""

__version__ = "0.1.0"
