"""Carnot groups in exponential coordinates: rigidity, pliability and Whitney extension of horizontal curves."""

__version__ = "0.1.0"

from .lie_core import (StratifiedAlgebra, LieVector, Covector, HallElement, bracket, quotient,
                       build_free_nilpotent, ad_power_span, parse_preset, load_group)
from .group_ops import GroupPoint, product, inverse, dilate, gauge, gauge_distance, point, identity
from .rigidity import abnormal_family, goh_form, q_form, rigidity_test
from .pliability import (lifted_bracket, bianchini_stefani, pliability_test, reachability_probe,
                         zero_pliable, no_abnormal_certificate)
from .whitney import WhitneyData, whitney_modulus, build_counterexample, extend_step2, lusin_demo
