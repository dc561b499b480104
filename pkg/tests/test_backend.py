import pytest

from mdevsp.backend import BackendError, HighsModel, SolveStatus, get_backend


def knapsack_model():
    m = HighsModel("knap")
    x = [m.add_binary(f"x{i}") for i in range(4)]
    values = [6.0, 10.0, 12.0, 7.0]
    weights = [1.0, 2.0, 3.0, 2.0]
    m.set_objective({ref: -v for ref, v in zip(x, values)})  # maximize value
    m.add_le({ref: w for ref, w in zip(x, weights)}, 5.0, name="cap")
    return m, x


class TestHighsModel:
    def test_knapsack_optimum(self):
        m, x = knapsack_model()
        res = m.solve()
        assert res.status == SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(-23.0)  # items 0, 1, 3
        assert [round(res.values[ref]) for ref in x] == [1, 1, 0, 1]

    def test_infeasible(self):
        m = HighsModel()
        x = m.add_binary("x")
        m.add_ge({x: 1.0}, 2.0)
        res = m.solve()
        assert res.status == SolveStatus.INFEASIBLE
        assert not res.has_solution

    def test_relaxation(self):
        m = HighsModel()
        x = m.add_binary("x")
        m.add_le({x: 2.0}, 1.0)
        m.set_objective({x: -1.0})
        res = m.solve(relax=True)
        assert res.status == SolveStatus.OPTIMAL
        assert res.values[x] == pytest.approx(0.5)

    def test_rows_added_after_solve_keep_var_refs(self):
        m, x = knapsack_model()
        first = m.solve()
        m.add_le({x[1]: 1.0, x[2]: 1.0}, 1.0, name="conflict")
        second = m.solve()
        assert second.status == SolveStatus.OPTIMAL
        # objective can only get worse when rows are added
        assert second.objective >= first.objective - 1e-9
        assert len(second.values) == len(first.values)

    def test_equal_bounds_fix_variable(self):
        m = HighsModel()
        x = m.add_continuous("x", 3.0, 3.0)
        y = m.add_continuous("y", 0.0, 10.0)
        m.add_ge({y: 1.0, x: -1.0}, 0.0)
        m.set_objective({y: 1.0})
        res = m.solve()
        assert res.values[x] == pytest.approx(3.0)
        assert res.values[y] == pytest.approx(3.0)

    def test_bad_row_rejected(self):
        m = HighsModel()
        m.add_binary("x")
        with pytest.raises(BackendError):
            m.add_constraint({0: 1.0}, 2.0, 1.0)

    def test_best_bound_at_optimum(self):
        m, _ = knapsack_model()
        res = m.solve()
        assert res.best_bound == pytest.approx(res.objective, abs=1e-6)


class TestLpExport:
    def test_written_file_structure(self, tmp_path):
        m, x = knapsack_model()
        m.add_continuous("eps", 0.0, 10.0)
        path = tmp_path / "model.lp"
        m.write_lp(path)
        text = path.read_text()
        assert text.startswith("\\ knap")
        assert "Minimize" in text and "Subject To" in text and "Binaries" in text
        assert "cap_u" in text
        assert "x0" in text and "eps" in text
        assert text.rstrip().endswith("End")


class TestBackendRegistry:
    def test_default_backend(self):
        backend = get_backend()
        assert backend.name == "highs"
        assert backend.supports_incumbent_callbacks is False

    def test_env_var_selection(self, monkeypatch):
        monkeypatch.setenv("MDEVSP_BACKEND", "highs")
        assert get_backend().name == "highs"

    def test_unknown_backend_rejected(self, monkeypatch):
        monkeypatch.setenv("MDEVSP_BACKEND", "cplex")
        with pytest.raises(BackendError):
            get_backend()
