import json

import pytest

from cadplan.analysis import group_experiments, main_effects
from cadplan.plan_io import aggregate_series
from cadplan.sim import Interaction, ProfileError, ResponseModel, emit_series, load_profile, run_plan

from conftest import HELLO, PROFILES


@pytest.fixture
def paper_like():
    return load_profile(PROFILES / "paper_like.json")


class TestRunPlan:
    def test_flat(self, table2):
        res = run_plan(table2, ResponseModel(base=0.42))
        assert set(res.entries.values()) == {0.42}
        assert res.ids == list(range(1, 17))

    def test_planted_hello15(self, table2):
        rm = ResponseModel(base=0.6, contributions={HELLO: {"15": -0.5}})
        res = run_plan(table2, rm)
        low = {eid for eid, v in res.entries.items() if v == pytest.approx(0.1)}
        assert low == {9, 10, 11, 12}
        assert all(v == 0.6 for eid, v in res.entries.items() if eid not in low)

    def test_paper_like_memberships(self, table2, paper_like):
        res = run_plan(table2, paper_like)
        rep = group_experiments(res, "threshold", thresholds=[0.15, 0.3, 0.5], plan=table2)
        assert rep.worst.members == [12, 13, 14, 15]
        assert rep.best.members == [9, 10, 11]
        assert rep.best.common_levels == {HELLO: "15"}
        assert [g.members for g in group_experiments(res).groups] == [g.members for g in rep.groups]

    def test_interaction_applies_only_to_matching_rows(self, table2):
        rm = ResponseModel(
            base=0.0,
            interactions=[Interaction((HELLO, "IP_forwarding_Class"), ("15", "network-control"), 1.0)],
        )
        res = run_plan(table2, rm)
        assert [eid for eid, v in res.entries.items() if v] == [12]

    def test_clamped_at_zero(self, table2):
        res = run_plan(table2, ResponseModel(base=0.1, contributions={HELLO: {"3": -1.0}}))
        assert all(res.entries[i] == 0.0 for i in (13, 14, 15, 16))

    def test_noise_bounded_and_deterministic(self, table2):
        rm = ResponseModel(base=5.0, noise_scale=0.5, seed=99)
        a, b = run_plan(table2, rm), run_plan(table2, rm)
        assert a.entries == b.entries
        assert all(4.5 <= v <= 5.5 for v in a.entries.values())
        assert len(set(a.entries.values())) == 16
        other = run_plan(table2, ResponseModel(base=5.0, noise_scale=0.5, seed=100))
        assert other.entries != a.entries

    def test_unit_noise_range(self):
        rm = ResponseModel(seed=3)
        draws = [rm.unit_noise(i) for i in range(2000)]
        assert -1.0 <= min(draws) < -0.9 and 0.9 < max(draws) <= 1.0


class TestProfiles:
    def test_round_trip(self, paper_like):
        assert ResponseModel.from_dict(json.loads(json.dumps(paper_like.to_dict()))) == paper_like

    def test_flat_profile(self, table2):
        res = run_plan(table2, load_profile(PROFILES / "flat.json"))
        assert len(set(res.entries.values())) == 1

    def test_negative_noise(self):
        with pytest.raises(ProfileError):
            ResponseModel(noise_scale=-1)

    def test_nonfinite_offset(self):
        with pytest.raises(ProfileError):
            ResponseModel(contributions={"a": {"x": float("inf")}})

    def test_bad_interaction(self):
        with pytest.raises(ProfileError, match="interaction 0"):
            ResponseModel.from_dict({"interactions": [{"factors": ["a"], "levels": ["x"], "offset": 1}]})


class TestEmitSeries:
    def test_matches_scalar(self, table2, paper_like):
        scalars = run_plan(table2, paper_like).entries
        series = emit_series(table2, paper_like)
        for eid, s in series.items():
            assert aggregate_series(s) == pytest.approx(scalars[eid], abs=1e-6)

    def test_duration_not_multiple_of_step(self, table2, paper_like):
        scalars = run_plan(table2, paper_like).entries
        series = emit_series(table2, paper_like, duration=1000.0, step=7.0)
        assert aggregate_series(series[9], 1000.0) == pytest.approx(scalars[9], abs=1e-6)

    def test_constant_rate(self, table2):
        series = emit_series(table2, ResponseModel(base=0.25), duration=600, step=10)
        assert aggregate_series(series[1], 600) == pytest.approx(0.25, abs=1e-12)

    def test_zero_rate(self, table2):
        series = emit_series(table2, ResponseModel(base=0.0), duration=600, step=10)
        assert all(v == 0.0 for v in series[5].values)

    @pytest.mark.parametrize("duration, step", [(10, 10), (10, 0), (5, 10)])
    def test_invalid(self, table2, duration, step):
        with pytest.raises(ProfileError):
            emit_series(table2, ResponseModel(), duration, step)


@pytest.mark.parametrize(
    "factor, level",
    [
        ("Load_Balancing", "Based on Packets"),
        ("TCP_parameter", "Disable"),
        (HELLO, "15"),
        ("IP_forwarding_Class", "expedited-forwarding"),
        ("Receive_Buffer", "default"),
    ],
)
def test_planted_factor_recovered(table2, factor, level):
    hits = 0
    for seed in range(100):
        rm = ResponseModel(base=0.5, contributions={factor: {level: 0.3}}, noise_scale=0.1, seed=seed)
        hits += main_effects(table2, run_plan(table2, rm)).ranking[0] == factor
    assert hits == 100
