"""Paired comparison statistics: sign test, Wilcoxon signed ranks, two-stage FDR."""
from .bky import bky_correct
from .signtest import NOT_SIGNIFICANT, SIGNIFICANT_REFERENT, SIGNIFICANT_TL, sign_test, sign_test_critical
from .wilcoxon import EXACT_MAX_N, PairedSample, wilcoxon

__all__ = [
    "EXACT_MAX_N", "NOT_SIGNIFICANT", "PairedSample", "SIGNIFICANT_REFERENT", "SIGNIFICANT_TL",
    "bky_correct", "sign_test", "sign_test_critical", "wilcoxon",
]
