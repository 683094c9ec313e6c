import numpy as np
import pytest

from fraclab.assembly import build_assembly
from fraclab.kernels import DomainGeometry
from fraclab.mesh import CoefficientField, build_mesh


@pytest.fixture(scope="session")
def geom():
    return DomainGeometry(-1.0, 1.0, 4.0)


@pytest.fixture(scope="session")
def mesh16(geom):
    return build_mesh(geom, 2.0 ** -4)


@pytest.fixture(scope="session")
def mesh32(geom):
    return build_mesh(geom, 2.0 ** -5)


@pytest.fixture(scope="session")
def mesh64(geom):
    return build_mesh(geom, 2.0 ** -6)


@pytest.fixture(scope="session")
def asm32(mesh32):
    return build_assembly(mesh32, 0.7, 0.4)


@pytest.fixture(scope="session")
def asm64(mesh64):
    return build_assembly(mesh64, 0.7, 0.4)


@pytest.fixture(scope="session")
def coef_edges():
    return np.array([-0.75, -0.375, 0.0, 0.375, 0.75])


@pytest.fixture(scope="session")
def b_field(coef_edges):
    return CoefficientField(edges=coef_edges, values=np.array([0.8, 0.3, 0.0, 0.5]), name="b")


@pytest.fixture(scope="session")
def q_field(coef_edges):
    return CoefficientField(edges=coef_edges, values=np.array([0.4, -0.2, 0.6, 0.1]), name="q")
