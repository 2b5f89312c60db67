import logging
import os

import json5
from django.conf import settings

logger = logging.getLogger(__name__)


def load_overrides(path):
    """Read a json5 override file for the FSPAIR settings block."""
    if not path:
        return {}
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config override file not found: {path}")
    with open(path) as json_file:
        overrides = json5.load(json_file)
    if not isinstance(overrides, dict):
        raise ValueError(f"Config override file {path} must hold an object")
    unknown = set(overrides) - set(settings.FSPAIR)
    if unknown:
        raise ValueError(f"Unknown config keys in {path}: {sorted(unknown)}")
    return overrides


def get_config(path=None):
    """FSPAIR defaults merged with the json5 override file, if any."""
    config = dict(settings.FSPAIR)
    override_path = path or getattr(settings, 'FSPAIR_CONFIG', None)
    overrides = load_overrides(override_path)
    if overrides:
        logger.debug(f"Config overrides loaded from {override_path}: {overrides}")
    config.update(overrides)
    return config
