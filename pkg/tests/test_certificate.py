import numpy as np
import pytest

from vilab.certificate import (
    PAPER_G11,
    PAPER_M,
    SDPInstance,
    factorization_search,
    paper_instance,
    solve_certificate,
    verify_feasible,
)


@pytest.fixture(scope="module")
def paper_solution():
    inst = paper_instance()
    val, G = solve_certificate(inst)
    return inst, val, G


class TestSolve:
    def test_reference_value(self, paper_solution):
        _, val, _ = paper_solution
        assert val == pytest.approx(PAPER_G11, abs=1e-3)

    def test_attaining_point_feasible(self, paper_solution):
        inst, val, G = paper_solution
        assert verify_feasible(inst, G, tol=1e-8)
        assert G[0, 0] == pytest.approx(val)

    def test_certifies_induction_cap(self, paper_solution):
        _, val, _ = paper_solution
        assert val < 2.0  # the boundedness induction closes

    def test_identity_trivial_instance(self):
        inst = SDPInstance(M=np.eye(3), trace_bound=1.0, diag_caps=(None, None, None))
        val, G = solve_certificate(inst, n_starts=16)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_tighter_caps_certify_smaller_bound(self):
        val12, G = solve_certificate(paper_instance(cap=1.2))
        assert val12 <= 1.2 + 1e-8
        assert verify_feasible(paper_instance(cap=1.2), G, tol=1e-8)

    def test_cap_monotonicity(self, paper_solution):
        # loosening a diagonal cap never decreases the optimum
        _, val, _ = paper_solution
        loose, _ = solve_certificate(paper_instance(cap=4.0))
        assert loose >= val - 1e-6

    def test_tol_positive(self):
        with pytest.raises(ValueError):
            solve_certificate(paper_instance(), tol=0.0)


class TestVerifyFeasible:
    def test_zero_always_feasible(self):
        assert verify_feasible(paper_instance(), np.zeros((3, 3)))

    def test_cap_violation(self):
        G = np.diag([0.1, 3.0, 0.1])
        assert not verify_feasible(paper_instance(), G)

    def test_psd_violation(self):
        G = np.diag([0.1, 0.1, -0.5])
        assert not verify_feasible(paper_instance(), G)

    def test_trace_violation(self):
        G = np.diag([1.0, 0.0, 0.0])  # tr(GM) = 4 > 1
        assert not verify_feasible(paper_instance(), G)

    def test_asymmetric_rejected(self):
        G = np.zeros((3, 3))
        G[0, 1] = 1.0
        assert not verify_feasible(paper_instance(), G)


class TestOracleAgreement:
    def test_factorization_search_matches_solver(self, paper_solution):
        _, val, _ = paper_solution
        oracle = factorization_search(paper_instance())
        assert abs(oracle - val) <= 1e-3

    def test_oracle_output_feasible_by_construction(self):
        # the oracle only reports values of feasibility-scaled candidates,
        # so its best value can never exceed the true optimum materially
        oracle = factorization_search(paper_instance(), n_starts=8, steps=2000)
        assert oracle <= PAPER_G11 + 1e-3


class TestInstanceValidation:
    def test_matrix_must_be_symmetric(self):
        M = PAPER_M.copy()
        M[0, 1] = 0.0
        with pytest.raises(ValueError):
            SDPInstance(M=M)

    def test_caps_positive(self):
        with pytest.raises(ValueError):
            SDPInstance(M=PAPER_M, diag_caps=(None, -1.0, 2.0))
