import numpy as np
import pytest

from semigroup_analysis.measurements.chains import (
    CHAIN_ALIASES,
    ChainCheckRecord,
    chain_check,
    chains,
)
from semigroup_analysis.measurements.families import standard_members

EPS_GRID = np.geomspace(0.25, 16, 7)
T_GRID = [0.5, 1.0, 2.0, 4.0]


@pytest.fixture
def two_point_members():
    return [np.array([1.0, 0.0]), np.ones(2), np.array([np.e, 1.0])]


class TestChainCheckRecord:
    def test_margins(self):
        record = ChainCheckRecord("UC=>LS", {})
        assert record.passed
        record.add(1.0, 0.5, t=1)
        record.add(2.0, 2.0 + 1e-10, t=2)
        assert record.points[0] == {"t": 1, "predicted": 1.0, "measured": 0.5, "margin": 0.5}
        assert record.worst_margin == pytest.approx(-1e-10)
        assert record.passed
        record.add(1.0, 1.1, t=3)
        assert not record.passed


class TestTwoPoint:
    def test_uc_to_ls(self, k2, two_point_members):
        record = chain_check(k2, "UC=>LS", members=two_point_members, eps_grid=[0.25, 1, 4])
        assert len(record.points) == 9
        assert record.passed

    def test_ls_to_uc(self, k2):
        members = [np.array([1.0, 0.0]), np.ones(2)]
        record = chain_check(k2, "LS=>UC", members=members, eps_grid=EPS_GRID, t_grid=T_GRID)
        assert record.passed
        assert [point["t"] for point in record.points] == T_GRID
        first = record.points[0]
        assert first["measured"] == pytest.approx(np.sqrt((1 + np.exp(-2)) / 2))
        assert first["predicted"] == pytest.approx(0.76, abs=0.01)

    def test_uc_to_nash(self, k2, two_point_members):
        record = chain_check(k2, "c", members=two_point_members, t_grid=T_GRID, mu=2)
        assert record.tag == "UC=>N"
        stages = {point["stage"] for point in record.points}
        assert stages == {"cue", "nash"}
        assert record.passed

    def test_nash_to_uc(self, k2, two_point_members):
        record = chain_check(k2, "d", members=two_point_members, t_grid=T_GRID, mu=2)
        assert record.passed
        assert record.inputs["c1"] == pytest.approx(np.sqrt(record.inputs["c2"]))


class TestChainCheck:
    def test_aliases(self):
        assert set(CHAIN_ALIASES.values()) == set(chains)

    def test_unknown_chain(self, k2):
        with pytest.raises(ValueError, match="Unknown chain"):
            chain_check(k2, "e", members=[np.ones(2)])

    def test_missing_input(self, k2):
        with pytest.raises(ValueError, match="Missing input"):
            chain_check(k2, "a", members=[np.ones(2)])

    def test_empty_grid(self, k2):
        with pytest.raises(ValueError, match="nonempty"):
            chain_check(k2, "a", members=[np.ones(2)], eps_grid=[])

    @pytest.mark.parametrize("tag", ["LS=>UC", "UC=>N", "N=>UC"])
    def test_constant_family_is_vacuous(self, k2, tag):
        with pytest.warns(UserWarning, match="vacuous"):
            record = chain_check(
                k2, tag, members=[np.ones(2)], eps_grid=EPS_GRID, t_grid=T_GRID, mu=2
            )
        assert record.degenerate

    def test_accepts_family_members(self, cycle8):
        members = standard_members(cycle8, budget=2)
        record = chain_check(cycle8, "UC=>LS", members=members, eps_grid=[0.5, 2.0])
        assert len(record.points) == 2 * len(members)
        assert record.passed

    def test_deterministic(self, lazy_cycle8):
        members = standard_members(lazy_cycle8, seed=3)
        first = chain_check(lazy_cycle8, "N=>UC", members=members, t_grid=T_GRID, mu=1)
        second = chain_check(lazy_cycle8, "N=>UC", members=members, t_grid=T_GRID, mu=1)
        assert first.points == second.points


@pytest.mark.slow
@pytest.mark.parametrize("tag", sorted(chains))
def test_chains_on_lazy_torus(lazy_torus_32_2, tag):
    members = standard_members(lazy_torus_32_2, budget=2)
    record = chain_check(
        lazy_torus_32_2,
        tag,
        members=members,
        eps_grid=EPS_GRID,
        t_grid=np.geomspace(0.5, 8, 5),
        mu=2,
    )
    assert not record.degenerate
    assert record.passed


def test_constant_family_passes_chain_a_vacuously(k2):
    with pytest.warns(UserWarning, match="vacuous"):
        record = chain_check(k2, "a", members=[np.ones(2), np.full(2, 3.0)], eps_grid=[0.5, 2.0])
    assert record.degenerate
    assert record.passed
