"""Named spectral measures used by the experiments."""
import math
import re

from . import spectral as sp
from .bernoulli import LambdaSequence

NAMES = ("degenerate_cos", "two_atoms", "uniform_sinc", "gaussian",
         "bernoulli_geometric(a)", "bernoulli_factorial")

_GEOM = re.compile(r"^bernoulli_geometric\(\s*([0-9.eE+-]+)\s*\)$")


def raw_preset(name):
    """The preset before normalization."""
    if name == "degenerate_cos":
        return sp.Atomic.of([(1.0, 1.0)])
    if name == "two_atoms":
        return sp.Atomic.of([(1.0, 0.5), (math.sqrt(2.0), 0.5)])
    if name == "uniform_sinc":
        return sp.Density.uniform(1.0)
    if name == "gaussian":
        return sp.Density.gaussian(1.0)
    if name == "bernoulli_factorial":
        return sp.CosineProduct(LambdaSequence.factorial())
    m = _GEOM.match(name)
    if m:
        return sp.CosineProduct(LambdaSequence.geometric(float(m.group(1))))
    raise KeyError(f"unknown preset {name!r}; known: {', '.join(NAMES)}")


def preset(name, raw=False):
    """``(measure, record)``; normalized to ``C(0) = 1, -C''(0) = 1`` unless ``raw``."""
    mu = raw_preset(name)
    if raw:
        return mu, sp.NormalizationRecord(1.0, 1.0)
    return sp.normalize(mu)


def is_preset(name):
    try:
        raw_preset(name)
    except (KeyError, ValueError):
        return False
    return True
