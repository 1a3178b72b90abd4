"""Numerical experiments on the operator model: moment conditions, CLT, positivity."""
from .clt import CltConfig, CltResult, clt_run
from .suites import SUITES, ConfigError, VerifyConfig, run_suite, run_verify

__all__ = ["CltConfig", "CltResult", "clt_run", "SUITES", "ConfigError", "VerifyConfig", "run_suite", "run_verify"]
