import pytest

from mhbound.kernel import MhKernel
from mhbound.models import DensityModel, ProposalModel


@pytest.fixture(scope="session")
def laplace_tri():
    return MhKernel(DensityModel.laplace(), ProposalModel.triangular())


@pytest.fixture(scope="session")
def gauss_tri():
    return MhKernel(DensityModel.gauss(), ProposalModel.triangular())


@pytest.fixture(scope="session", params=["laplace", "gauss"])
def builtin_kernel(request, laplace_tri, gauss_tri):
    return laplace_tri if request.param == "laplace" else gauss_tri
