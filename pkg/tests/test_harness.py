import math

import pytest

from cramerstab.bounds import BoundInputs, get_spec
from cramerstab.distributions import normal, uniform
from cramerstab.harness import (
    FAMILY_IDS,
    ConfigError,
    FamilySpec,
    estimate_constant,
    generate_family,
    lemma43_grid,
    run_suite,
    standard_families,
)


class TestFamilies:
    def test_ids(self):
        assert set(FAMILY_IDS) == {"two_point", "uniform", "contaminated_normal", "gaussian_mixture_random",
                                   "convolved_pair", "regularized_pair"}

    def test_two_point(self):
        (m,) = generate_family(FamilySpec("two_point", {"a": [1.5]}))
        assert list(m.x.atom_locations) == [-1.5, 1.5]
        assert m.x.variance == pytest.approx(2.25)

    def test_uniform(self):
        (m,) = generate_family(FamilySpec("uniform"))
        assert m.x.mean == pytest.approx(0.0, abs=1e-15) and m.x.variance == pytest.approx(1.0, abs=1e-12)

    def test_contaminated_is_standardized(self):
        # raw law 0.8 N(0,1) + 0.2 N(0,4) has variance 1.6; members are rescaled to unit variance
        (m,) = generate_family(FamilySpec("contaminated_normal", {"w": [0.2], "tau": [2.0]}))
        assert m.x.variance == pytest.approx(1.0, abs=1e-12)
        sd = math.sqrt(0.8 + 0.2 * 4)
        assert m.x.pdf(0.0) == pytest.approx(sd * (0.8 + 0.2 / 2) / math.sqrt(2 * math.pi), rel=1e-12)

    def test_random_mixture_deterministic(self):
        a = generate_family(FamilySpec("gaussian_mixture_random", {"draws": [3]}, rng_seed=7))
        b = generate_family(FamilySpec("gaussian_mixture_random", {"draws": [3]}, rng_seed=7))
        c = generate_family(FamilySpec("gaussian_mixture_random", {"draws": [3]}, rng_seed=8))
        assert [m.x.continuous_part.components for m in a] == [m.x.continuous_part.components for m in b]
        assert a[0].x.continuous_part.components != c[0].x.continuous_part.components
        assert all(m.x.variance == pytest.approx(1.0, abs=1e-12) for m in a)

    def test_convolved_pair_split(self):
        (m,) = generate_family(FamilySpec("convolved_pair", {"base": ["uniform"], "split": [0.25]}))
        assert m.kind == "sum"
        assert m.x.variance + m.y.variance == pytest.approx(1.0, abs=1e-12)
        assert m.x.variance == pytest.approx(0.25, abs=1e-12)

    def test_regularized_pair(self):
        ms = generate_family(FamilySpec("regularized_pair", {"base": ["two_point"], "sigma": [0.5, 1.0]}))
        assert [m.sigma for m in ms] == [0.5, 1.0]

    @pytest.mark.parametrize("kw", [
        {"family_id": "cauchy"},
        {"family_id": "uniform", "params": {"scale": [1]}},
        {"family_id": "uniform", "params": {"var": []}},
        {"family_id": "uniform", "rng_seed": -1},
    ])
    def test_invalid_spec(self, kw):
        with pytest.raises(ConfigError):
            FamilySpec(**kw)

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            generate_family(FamilySpec("uniform", {"var": [-1.0]}))
        with pytest.raises(ConfigError):
            generate_family(FamilySpec("convolved_pair", {"split": [1.0]}))


def test_lemma43_grid():
    grid = lemma43_grid()
    assert (0.0, 0.05) in grid and (0.0, 1.0) in grid
    assert all(v > s and v * v - s * s <= 1 + 1e-12 and v <= 1.5 + 1e-12 for s, v in grid)


class TestSuite:
    def test_chain_over_standard_families(self):
        rep = run_suite(["CHAIN"], [FamilySpec("uniform"), FamilySpec("two_point")])
        assert rep.reports and not rep.violations
        assert all(r.status == "evaluated" for r in rep.reports)

    def test_skip_reasons_are_requirement_strings(self):
        rep = run_suite(["P61", "P62"], FamilySpec("two_point", {"a": [2.0]}), t_grid=(1.0, 3.0))
        reasons = {(r.bound_id, r.reason) for r in rep.reports}
        assert reasons == {("P61", "Var(X)=1"), ("P62", "Var(X)=1")}
        for bid, reason in reasons:
            assert reason in get_spec(bid).requires

    def test_p61_uniform(self):
        rep = run_suite(["P61"], FamilySpec("uniform"))
        assert len(rep.reports) == 5 and not rep.violations
        assert {r.input_descriptor for r in rep.reports} == {f"uniform(var=1);T={t:g}" for t in
                                                              (0.5, 1, 2, 3, 4)}

    def test_scalar_bounds_without_family(self):
        rep = run_suite(["NORMAL_SHIFT_K"], [])
        assert len(rep.reports) == 9
        assert not rep.violations

    def test_empty_family(self):
        with pytest.raises(ConfigError):
            run_suite(["P61"], [])

    def test_custom_input(self):
        custom = [("P61", BoundInputs(x=uniform(-2, 2), t=1.0, label="wide"))]
        rep = run_suite(["P61"], [], custom_inputs=custom)
        (r,) = rep.reports
        assert r.status == "skipped" and r.reason == "Var(X)=1"
        assert rep.config["custom_inputs"] == ["wide"]

    def test_constant_mode_sup(self):
        rep = run_suite(["LEMMA31"], FamilySpec("uniform"))
        ratios = [r.ratio for r in rep.reports if r.status == "evaluated"]
        assert rep.empirical_constants["LEMMA31"] == max(ratios)

    def test_deterministic_json(self):
        a = run_suite(["P61", "LEMMA31"], standard_families(3), t_grid=(2.0,)).as_dict()
        b = run_suite(["P61", "LEMMA31"], standard_families(3), t_grid=(2.0,)).as_dict()
        assert a == b
        assert "wall_time" not in a


class TestEstimate:
    def test_explicit_entry_rejected(self):
        with pytest.raises(ConfigError):
            estimate_constant("LEMMA43", standard_families(0))

    def test_too_few_members(self):
        with pytest.raises(ConfigError):
            estimate_constant("T23", FamilySpec("uniform"))

    def test_levels(self):
        est = estimate_constant("LEMMA31", FamilySpec("contaminated_normal"), refinement_levels=2)
        assert len(est.level_constants) == 2
        assert est.empirical_c == est.level_constants[-1]
        assert est.stability is not None and est.stability < 0.05
        assert {row[3] for row in est.rows} == {0, 1}
