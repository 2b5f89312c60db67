import dataclasses

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder


class NumpyEncoder(DjangoJSONEncoder):
    """JSON encoder for numpy values, complex numbers ([re, im]) and dataclasses."""

    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, (complex, np.complexfloating)):
            return [float(obj.real), float(obj.imag)]
        if isinstance(obj, np.ndarray):
            if np.iscomplexobj(obj):
                return np.stack([obj.real, obj.imag], axis=-1).tolist()
            return obj.tolist()
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return dataclasses.asdict(obj)
        return super().default(obj)
