"""Weakly supervised accept/reject gates with distribution-free bounds.

Thin wrapper over the compiled _abstain module. Structured reports cross the
boundary as JSON text; this layer parses them into plain dicts.
"""

import json

try:
    from . import _abstain  # wheel layout: extension inside the package
except ImportError:  # build tree: extension sits next to the package
    import _abstain

MODEL_SCHEMA_VERSION = _abstain.MODEL_SCHEMA_VERSION
CorrectorModel = _abstain.CorrectorModel
Decision = _abstain.Decision
EmpiricalCdf = _abstain.EmpiricalCdf
InputError = _abstain.InputError
NumericError = _abstain.NumericError
bound_curve = _abstain.bound_curve
dkw_failure = _abstain.dkw_failure
fit = _abstain.fit
invert_gamma_target = _abstain.invert_gamma_target
load = _abstain.load
load_json = _abstain.load_json
psi = _abstain.psi
read_dataset = _abstain.read_dataset
rho = _abstain.rho
write_dataset = _abstain.write_dataset

__all__ = [
    "MODEL_SCHEMA_VERSION",
    "CorrectorModel",
    "Decision",
    "EmpiricalCdf",
    "InputError",
    "NumericError",
    "bound_curve",
    "compare",
    "dkw_failure",
    "evaluate",
    "fit",
    "generate",
    "invert_gamma_target",
    "load",
    "load_json",
    "psi",
    "read_dataset",
    "rho",
    "validate",
    "write_dataset",
]


def evaluate(model, samples):
    """Confusion counts, rates, and bound checks per class, as a dict."""
    return json.loads(_abstain.evaluate_json(model, samples))


def compare(model, samples):
    """Corrector recall against the accept-everything baseline, as a dict."""
    return json.loads(_abstain.compare_json(model, samples))


def generate(spec):
    """One (fit, test) draw from a synthetic spec given as a dict or JSON text."""
    return _abstain.generate(_spec_text(spec))


def validate(spec, **kwargs):
    """Monte Carlo bound validation over a synthetic spec, as a dict."""
    return json.loads(_abstain.validate_json(_spec_text(spec), **kwargs))


def _spec_text(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)
