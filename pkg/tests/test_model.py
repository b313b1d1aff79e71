import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elapsed_neurons.model import (AffineThreshold, ConfigError, ConstantThreshold, Custom, DomainError,
                                   Exponential, InitialDataError, LinearStationary, ModelConfig,
                                   PaperThreshold, TruncationError, UnitBlock, firing_indicator,
                                   n_minus_plus, sigma_eval, validate_initial)


def test_n_minus_plus_at_ln2():
    lo, hi = n_minus_plus(math.log(2))
    assert lo == pytest.approx(1 / 3, abs=1e-15)
    assert hi == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.2, 0.5, math.log(2), 1.0, 3.0])
def test_n_minus_plus_identities(alpha):
    lo, hi = n_minus_plus(alpha)
    assert hi * math.exp(-alpha) == pytest.approx(lo, rel=1e-14)
    # prefix mass of the sawtooth equals the mass still waiting
    assert hi * (1 - math.exp(-alpha)) == pytest.approx(1 - hi, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, -1.0])
def test_n_minus_plus_rejects_nonpositive(alpha):
    with pytest.raises(DomainError):
        n_minus_plus(alpha)


def test_paper_threshold_branches():
    sp = PaperThreshold(1.0)
    lo, hi = sp.n_minus, sp.n_plus
    assert sp(0.0) == 2.0
    assert sp(lo) == pytest.approx(2.0, abs=1e-15)
    assert sp(hi) == pytest.approx(1.0, abs=1e-15)
    assert sp(0.99) == 1.0
    mid = math.sqrt(lo * hi)
    assert sp(mid) == pytest.approx(2.0 - math.log(mid / lo))
    assert sp.sigma_minus == 1.0 and sp.sigma_plus == 2.0
    assert sp.lipschitz == pytest.approx(2 * math.e - 1)


def test_paper_threshold_derivative():
    sp = PaperThreshold(1.0)
    x = 0.5 * (sp.n_minus + sp.n_plus)
    h = 1e-6
    fd = (sp(x + h) - sp(x - h)) / (2 * h)
    assert sp.derivative(x) == pytest.approx(fd, rel=1e-6)
    assert sp.derivative(0.9) == 0.0
    assert sp.derivative(0.01) == 0.0


def test_constant_and_affine():
    c = ConstantThreshold(0.5)
    assert c(0.3) == 0.5 and c.lipschitz == 0.0
    a = AffineThreshold(0.5, 0.1, 0.4)
    assert a(0.0) == 0.5
    assert a(0.5) == pytest.approx(0.45)
    assert a(5.0) == 0.4
    assert (a.sigma_minus, a.sigma_plus, a.lipschitz) == (0.4, 0.5, 0.1)


def test_vectorized_evaluation_and_scalar_output():
    sp = PaperThreshold(3.0)
    xs = np.linspace(0, 1, 7)
    vals = sigma_eval(sp, xs)
    assert isinstance(vals, np.ndarray) and vals.shape == (7,)
    assert isinstance(sp(0.2), float)


def test_negative_activity_rejected():
    with pytest.raises(DomainError):
        PaperThreshold(1.0)(-0.1)
    with pytest.raises(DomainError):
        ConstantThreshold(0.5)(np.array([0.1, -1e-9]))


def test_constructor_domains():
    with pytest.raises(DomainError):
        ConstantThreshold(0.0)
    with pytest.raises(DomainError):
        AffineThreshold(0.5, -0.1, 0.4)
    with pytest.raises(DomainError):
        AffineThreshold(0.3, 0.1, 0.4)


def test_firing_indicator_is_strict():
    sp = ConstantThreshold(0.5)
    assert firing_indicator(sp, 1.0, 0.5, 0.2) == 0
    assert firing_indicator(sp, 1.0, 0.5000001, 0.2) == 1
    assert list(firing_indicator(sp, 1.0, np.array([0.1, 0.6]), 0.2)) == [0, 1]
    with pytest.raises(DomainError):
        firing_indicator(sp, 1.0, -0.1, 0.2)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.05, 5.0), x=st.floats(0.0, 2.0), y=st.floats(0.0, 2.0))
def test_paper_threshold_monotone_and_bounded(alpha, x, y):
    sp = PaperThreshold(alpha)
    lo, hi = sorted((x, y))
    assert sp(hi) <= sp(lo) + 1e-12
    assert sp.sigma_minus - 1e-12 <= sp(x) <= sp.sigma_plus + 1e-12


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.05, 5.0), x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0))
def test_paper_threshold_lipschitz(alpha, x, y):
    sp = PaperThreshold(alpha)
    assert abs(sp(x) - sp(y)) <= sp.lipschitz * abs(x - y) * (1 + 1e-9) + 1e-12


def test_unit_block_cells_exact():
    cells = validate_initial(UnitBlock(), 12.0, 0.25)
    assert np.all(cells[:4] == 1.0) and np.all(cells[4:] == 0.0)
    assert 0.25 * cells.sum() == 1.0


def test_exponential_and_stationary_mass():
    for d in (Exponential(), LinearStationary(0.5)):
        cells = validate_initial(d, 30.0, 1e-3)
        assert 1e-3 * cells.sum() == pytest.approx(1.0, abs=1e-13)
        assert cells.max() <= 1 + 1e-12


def test_linear_stationary_cells_match_profile():
    ds = 1e-3
    cells = validate_initial(LinearStationary(0.5), 30.0, ds)
    centers = ds * (np.arange(len(cells)) + 0.5)
    profile = np.where(centers < 0.5, 2 / 3, 2 / 3 * np.exp(-(centers - 0.5)))
    assert np.max(np.abs(cells - profile)) < 1e-3


def test_custom_density_quadrature():
    cells = validate_initial(Custom(lambda s: np.where(s < 2.0, 0.5, 0.0)), 12.0, 0.01)
    assert np.allclose(cells[:200], 0.5) and np.allclose(cells[200:], 0.0)


def test_initial_density_errors():
    with pytest.raises(InitialDataError):
        validate_initial(Custom(lambda s: 2.0 * np.ones_like(s)), 12.0, 0.1)
    with pytest.raises(TruncationError):
        validate_initial(Exponential(rate=0.01), 12.0, 0.1)
    with pytest.raises(InitialDataError):
        # a block narrower than 1 cannot carry unit mass below one
        validate_initial(UnitBlock(width=0.5), 12.0, 0.1)


def test_model_config_defaults_and_validation():
    cfg = ModelConfig(PaperThreshold(3.0))
    assert cfg.s_max == 26.0 and cfg.ds == 1e-3 and cfg.dt == cfg.ds
    assert cfg.replace(J=2.0).J == 2.0
    bad = [dict(J=-1.0), dict(delay=-1.0), dict(ds=0.0), dict(t_max=-1.0), dict(s_max=10.0),
           dict(delay=1e-4), dict(J=math.inf)]
    for kw in bad:
        with pytest.raises(ConfigError):
            ModelConfig(PaperThreshold(3.0), **kw)
