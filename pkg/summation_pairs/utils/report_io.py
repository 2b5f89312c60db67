import json
import logging

import numpy as np
import pandas as pd

from summation_pairs.exceptions import DomainError
from summation_pairs.utils.numpy_encoder import NumpyEncoder
from summation_pairs.utils.qseries import guinand_coeffs, r3_sequence, theta_coeffs

logger = logging.getLogger(__name__)

COEFF_FAMILIES = ("guinand", "theta", "r3")


def flat_report(value, target=None, **params):
    """value_re/value_im (+ target and abs_residual when a target exists) followed by params."""
    value = complex(value)
    report = {"value_re": value.real, "value_im": value.imag}
    if target is not None:
        target = complex(target)
        report.update(
            {"target_re": target.real, "target_im": target.imag, "abs_residual": abs(value - target)}
        )
    report.update(params)
    return report


def dumps(payload):
    return json.dumps(payload, cls=NumpyEncoder, indent=4)


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, cls=NumpyEncoder, indent=4)
        f.write("\n")
    logger.debug(f"report written to {path}")


def coefficient_table(family, n, c=None):
    """Coefficient table with columns n and alpha_n (r3_n for the r3 family)."""
    if family == "guinand":
        if c is None:
            raise DomainError("the guinand family needs c")
        values, column = guinand_coeffs(c, n).coeffs, "alpha_n"
    elif family == "theta":
        values, column = theta_coeffs(n).coeffs, "alpha_n"
    elif family == "r3":
        values, column = r3_sequence(n).values, "r3_n"
    else:
        raise DomainError(f"Unknown coefficient family {family!r}; expected one of {COEFF_FAMILIES}")
    return pd.DataFrame({"n": np.arange(values.size), column: values})


def write_csv(path, table):
    table.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    logger.debug(f"{len(table)} rows written to {path}")
