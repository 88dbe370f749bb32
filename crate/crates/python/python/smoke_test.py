"""Smoke test for the prior_rewire extension.

Build and install first, e.g. `maturin develop` or
`maturin build -o dist && pip install dist/*.whl` from crates/python.
"""

import math

import prior_rewire as pr


def main():
    assert [pr.cayley_size(n) for n in range(2, 6)] == [6, 24, 48, 120]
    assert pr.minimal_n_for(50) == 5

    c = pr.trimmed_cayley(30)
    assert c.num_nodes == 30 and c.is_connected()
    path = pr.Graph(30, [(i, i + 1) for i in range(29)])
    assert pr.average_commute_time(c) < pr.average_commute_time(path)
    assert pr.diameter(path) == 29
    assert math.isclose(pr.effective_resistance(pr.Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]), 0, 1), 0.75)
    assert math.isclose(pr.commute_time(path, 0, 2), 2 * 29 * 2)
    assert pr.spectral_gap(pr.build_cayley(5)) > 0

    rewired, schedule = pr.rewire_graph(path, "aligned-cayley", d=5)
    assert schedule == ["base", "rewired", "base", "rewired", "base"]
    pairs = path.pairs_at_distance(5)
    assert pr.captured_pairs(rewired, pairs) >= 0
    mapping = pr.greedy_align(path, pr.trimmed_cayley(30))
    assert sorted(mapping) == list(range(30))

    coloured = pr.Graph(4, [(0, 1), (1, 2), (2, 3)], colours=[0, None, 0, 1])
    clusters, _ = pr.rewire_graph(coloured, "cayley-clusters")
    assert clusters.has_edge(0, 2)
    vals = [0.1, 0.2, 0.3, 0.4]
    want = 0.5 * sum(math.exp(vals[i] + vals[j]) for i, j in coloured.edges()) + 0.5 * math.exp(0.1 + 0.3)
    assert math.isclose(pr.target_data_b(coloured, vals, 0.5, 0.5), want, rel_tol=1e-12)

    train, held_out = pr.generate_dataset("a", "train_count = 10\neval_count = 4")
    assert len(train) == 10 and len(held_out) == 4
    assert all(g.num_nodes < 30 for g, _, _ in train)
    assert all(g.num_nodes >= 30 for g, _, _ in held_out)

    rows = pr.sweep(
        "a",
        "train_count = 16\neval_count = 8\nepochs = 2\nwarmup_epochs = 1\n"
        "ratios = 0.1\nc3_values = 0.2\nseeds = 0\nrewirers = base-graph-only, cayley",
    )
    assert [r[0] for r in rows] == ["base-graph-only", "cayley"]
    assert rows[0][5] == 1.0 and all(math.isfinite(r[5]) for r in rows)
    print("python smoke test passed")


if __name__ == "__main__":
    main()
