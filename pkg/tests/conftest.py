"""Shared fixtures: the six reference sites and a small Gaussian target."""

import numpy as np
import pytest

from hierpool.data.models import REFERENCE_SITES
from hierpool.models import ModelInterface, SiteSummary


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help="Run the long reproduction fits")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


class GaussianModel(ModelInterface):
    """Independent normal target with the given means and standard deviations"""

    def __init__(self, mean, sd):
        self.mean = np.asarray(mean, dtype=float)
        self.sd = np.asarray(sd, dtype=float)

    @property
    def dimension(self):
        return self.mean.size

    @property
    def parameter_names(self):
        return [f"x[{i + 1}]" for i in range(self.dimension)]

    def log_density(self, z):
        z = self.check_dimension(z)
        standardized = (z - self.mean) / self.sd
        return -0.5 * np.sum(standardized * standardized)

    def log_density_and_gradient(self, z):
        z = self.check_dimension(np.asarray(z, dtype=float))
        return float(self.log_density(z)), -(z - self.mean) / self.sd ** 2

    def constrain(self, z):
        return np.asarray(z, dtype=float)

    def unconstrain(self, params):
        return np.asarray(params, dtype=float)

    def constrained_vector(self, z):
        return np.asarray(z, dtype=float).copy()


class BrokenModel(GaussianModel):
    """Target whose density is never finite"""

    def log_density_and_gradient(self, z):
        return -np.inf, np.full(self.dimension, np.nan)


@pytest.fixture
def reference_sites():
    return [SiteSummary(name, tau_hat, sigma_hat) for name, tau_hat, sigma_hat in REFERENCE_SITES]


@pytest.fixture
def gaussian_model():
    return GaussianModel(mean=[0.0, 1.0, -2.0], sd=[1.0, 2.0, 0.5])


@pytest.fixture
def sites_csv(tmp_path):
    path = tmp_path / 'sites.csv'
    rows = ["site,tau_hat,sigma_hat"] + [f"{name},{tau_hat},{sigma_hat}" for name, tau_hat, sigma_hat in
                                         REFERENCE_SITES]
    path.write_text('\n'.join(rows) + '\n', encoding='utf-8')
    return str(path)
