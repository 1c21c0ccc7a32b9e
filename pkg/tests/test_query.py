import numpy as np
import pytest

from halfwsne import (
    BimatrixGame,
    CountingOracle,
    MatrixOracle,
    MixedStrategy,
    PartialGame,
    approximate_wsne_query,
    build_queried_subgame,
    sample_k_uniform,
    sampling_size,
    solve_zero_sum,
    wsne_report,
    zero_sum_wsne_via_queries,
)
from halfwsne.gamefile import generate
from halfwsne.query import UnqueriedEntryError, branch_bound


def test_sampling_size_examples():
    assert sampling_size(100, 0.2) == 1593
    assert sampling_size(20, 0.2) == 1122
    assert sampling_size(1, 0.5) >= 1
    assert sampling_size(10, 0.999) <= sampling_size(10, 0.5)
    with pytest.raises(ValueError):
        sampling_size(10, 1.0)


def test_sample_point_mass():
    e = MixedStrategy.pure(1, 3)
    assert sample_k_uniform(e, 17, 4).to_list() == e.to_list()


def test_sample_support_containment():
    x = MixedStrategy(np.array([0.0, 0.3, 0.0, 0.7]))
    for seed in range(50):
        assert set(sample_k_uniform(x, 9, seed).support) <= {1, 3}


def test_sample_mean():
    x = MixedStrategy.uniform(2)
    draws = [sample_k_uniform(x, 4, s).probs for s in range(100_000)]
    vals = {tuple(d) for d in draws}
    assert vals <= {(i / 4, 1 - i / 4) for i in range(5)}
    assert np.allclose(np.mean(draws, axis=0), [0.5, 0.5], atol=0.01)


def test_counting_and_phases(pennies):
    oracle = CountingOracle(MatrixOracle(pennies))
    with pytest.raises(RuntimeError):
        oracle.query(0, 0)
    with oracle.phase("subgame"):
        oracle.query(0, 0)
        oracle.query(0, 0)
    s = oracle.stats
    assert s.total == 2 == s.phase_subgame
    memo = CountingOracle(MatrixOracle(pennies), memoize=True)
    with memo.phase("audit"):
        memo.query(1, 1)
        memo.query(1, 1)
    assert memo.stats.total == 1


def test_partial_game_rejects_unknown_cells():
    pg = PartialGame(2, 2)
    pg.reveal(0, 0, 0.1, 0.2)
    assert pg.entry(0, 0) == (0.1, 0.2)
    with pytest.raises(UnqueriedEntryError):
        pg.entry(1, 0)
    with pytest.raises(UnqueriedEntryError):
        pg.block([0])


def test_subgame_query_counts():
    g = generate("uniform", 12, 10, 0)
    _, d = build_queried_subgame(CountingOracle(MatrixOracle(g)), [1, 4, 7])
    assert d.total == d.phase_subgame == 30
    _, d = build_queried_subgame(CountingOracle(MatrixOracle(g)), range(12))
    assert d.total == 120
    memo = CountingOracle(MatrixOracle(g), memoize=True)
    known, _ = build_queried_subgame(memo, [2, 3])
    _, d = build_queried_subgame(memo, [2, 3], known)
    assert d.total == 0


def test_exact_zero_sum_via_queries(pennies):
    oracle = CountingOracle(MatrixOracle(pennies))
    with oracle.phase("zero_sum_R"):
        est = zero_sum_wsne_via_queries(oracle, "row", 0.1)
    assert est.value == pytest.approx(0.5)
    assert np.allclose(est.profile.row.probs, 0.5) and np.allclose(est.profile.col.probs, 0.5)
    assert oracle.stats.total == 4
    g = generate("uniform", 5, 7, 2)
    oracle = CountingOracle(MatrixOracle(g))
    with oracle.phase("zero_sum_C"):
        est = zero_sum_wsne_via_queries(oracle, "col", 0.1)
    assert oracle.stats.total == 35
    assert est.value == pytest.approx(solve_zero_sum(g.C.T).value, abs=1e-9)


def test_mwu_calibration():
    ok = 0
    for seed in range(30):
        g = generate("uniform", 50, 50, seed)
        oracle = CountingOracle(MatrixOracle(g))
        with oracle.phase("zero_sum_R"):
            est = zero_sum_wsne_via_queries(oracle, "row", 0.3, seed, impl="mwu")
        zs = BimatrixGame(g.R, 1 - g.R)
        true_eps = wsne_report(zs, est.profile).wsne_epsilon
        assert est.achieved_epsilon == pytest.approx(true_eps, abs=1e-9)
        # each round reveals one full row and one full column
        assert oracle.stats.total == est.rounds * 100
        ok += true_eps <= 0.3
    assert ok >= 27


def test_query_algorithm_examples(pennies, ones):
    out, stats = approximate_wsne_query(MatrixOracle(pennies), 0.1, 0.5, audit=True)
    assert out.branch == "3a" and out.audited_epsilon == pytest.approx(0, abs=1e-9)
    assert np.allclose(out.profile.row.probs, 0.5) and np.allclose(out.profile.col.probs, 0.5)
    assert stats.phase_zero_sum_R + stats.phase_zero_sum_C == 8
    assert stats.phase_subgame == 2 * len(out.diagnostics.sampled_support)
    out, _ = approximate_wsne_query(MatrixOracle(ones), 0.1, 0.5, audit=True)
    assert out.branch == "3c" and out.audited_epsilon == 0
    assert len(out.profile.row.support) == 1 and len(out.profile.col.support) == 1


def test_query_accounting_and_support():
    for seed in range(10):
        g = generate("uniform", 20, 20, seed)
        out, st = approximate_wsne_query(MatrixOracle(g), 0.2, 0.5, seed=seed, audit=True)
        assert st.phase_subgame == len(out.diagnostics.sampled_support) * 20
        assert st.total == st.phase_zero_sum_R + st.phase_zero_sum_C + st.phase_subgame + st.phase_audit
        assert st.phase_audit == 400
        base = solve_zero_sum(g.R) if out.branch[0] == "3" else solve_zero_sum(g.C.T)
        assert set(out.diagnostics.sampled_support) <= set(base.x.support)
        assert out.audited_epsilon <= min(1.0, 0.5 + 0.6 + 0.5) + 1e-6


def test_query_deterministic():
    g = generate("uniform", 15, 15, 4)
    a, sa = approximate_wsne_query(MatrixOracle(g), 0.2, 0.5, seed=9)
    b, sb = approximate_wsne_query(MatrixOracle(g), 0.2, 0.5, seed=9)
    assert a.profile.row.to_list() == b.profile.row.to_list()
    assert a.profile.col.to_list() == b.profile.col.to_list()
    assert sa == sb and a.branch == b.branch


def test_branch_bound():
    assert branch_bound("3a", 0.2, 0.5) == 0.5
    assert branch_bound("4b", 0.2, 0.5) == pytest.approx(0.6)
    assert branch_bound("3c", 0.2, 0.5, tier=0.5) == 0.5
    assert branch_bound("3c", 0.1, 0.2) == pytest.approx(1.0)
    assert branch_bound("4c", 0.2, 0.5) == 1.0


def test_rejects_bad_parameters(pennies):
    with pytest.raises(ValueError):
        approximate_wsne_query(MatrixOracle(pennies), 0.0, 0.5)
    with pytest.raises(ValueError):
        approximate_wsne_query(MatrixOracle(pennies), 0.2, 0.5, retries=0)
