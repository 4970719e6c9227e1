import numpy as np
import pytest

from berger_cgc import make_params


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(params=[0.5, 0.75, 1.0, 1.3, 2.0])
def params(request):
    return make_params(request.param)


def random_ambient_point(rng):
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    from berger_cgc import AmbientPoint

    return AmbientPoint(complex(v[0], v[1]), complex(v[2], v[3]))


def random_tangent(rng, p):
    from berger_cgc.geometry import tangent_projection

    return tangent_projection(p, rng.normal(size=4))
