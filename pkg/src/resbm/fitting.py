"""Uniform access to the four estimators by name.

Used by the hypothesis-testing machinery and the CLI so every consumer
agrees on method names and defaults.
"""

from .baselines import ind_spectral, spectral_k
from .errors import ValidationError
from .twostep import _assemble_two_step_fit, fit_co_osntf, fit_co_spectral
from .types import NetworkSample, ResbmFit
from .varem import fit_varem

METHODS = ("varem", "co-osntf", "co-spectral", "spectralk")


def fit_spectralk(sample: NetworkSample, k: int, seed: int = 0) -> ResbmFit:
    """Kernel-mean consensus plus independent member clustering.

    Member labels are aligned to the consensus before the transition matrix
    is estimated, since independent clusterings carry arbitrary labels.
    """
    z_bar = spectral_k(sample, k, seed)
    members = ind_spectral(sample, k, seed)
    return _assemble_two_step_fit(z_bar, members, None, None, (), True, 0)


def fit_resbm(
    sample: NetworkSample, k: int, method: str, seed: int = 0, **kwargs
) -> ResbmFit:
    """Fit ``sample`` with one of the named estimators."""
    if method == "varem":
        return fit_varem(sample, k, seed=seed, **kwargs)
    if method == "co-osntf":
        return fit_co_osntf(sample, k, seed=seed, **kwargs)
    if method == "co-spectral":
        return fit_co_spectral(sample, k, seed=seed, **kwargs)
    if method == "spectralk":
        if kwargs:
            raise ValidationError(f"spectralk takes no extra options, got {sorted(kwargs)}")
        return fit_spectralk(sample, k, seed=seed)
    raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
