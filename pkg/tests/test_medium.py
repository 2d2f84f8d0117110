import pytest

from protoforge import (
    InvalidParams,
    MediumParams,
    NotWellPosed,
    drop_prob,
    feasibility_sweep,
    parse_spec,
    sweep_csv,
)


def test_two_cars_baseline():
    # r = 0, so delta = 1 / (1 + a).
    assert drop_prob(MediumParams(2, 500, 5)) == pytest.approx(0.2, abs=1e-12)


def test_zero_rate_makes_delta_constant():
    for n in (2, 5, 9):
        for dm in (10, 500):
            for tau in (1, 7):
                assert drop_prob(MediumParams(n, dm, tau, a=4.0, b=0.0)) == pytest.approx(0.2)


def test_delta_increases_toward_one():
    prev = 0.0
    for n in (2, 4, 8, 16):
        d = drop_prob(MediumParams(n, 1000, 1))
        assert prev < d < 1.0
        prev = d
    assert prev > 0.999


def test_delta_monotone_in_each_parameter():
    base = MediumParams(5, 400, 4)
    assert drop_prob(MediumParams(6, 400, 4)) > drop_prob(base)
    assert drop_prob(MediumParams(5, 500, 4)) > drop_prob(base)
    assert drop_prob(MediumParams(5, 400, 5)) < drop_prob(base)


def test_invalid_params():
    with pytest.raises(InvalidParams):
        MediumParams(1, 100, 1)
    with pytest.raises(InvalidParams):
        MediumParams(3, -1, 1)
    with pytest.raises(InvalidParams):
        MediumParams(3, 100, 0)
    with pytest.raises(InvalidParams):
        MediumParams(3, 100, 1, a=0)
    with pytest.raises(InvalidParams):
        MediumParams(3, 100, 1, b=-0.1)


def test_single_point_sweep_realizable(example_spec):
    # At N=2 the drop bound is 0.2 and the published requirements are easy.
    rows = feasibility_sweep(example_spec.protocol, [2], [500.0], [5.0])
    assert len(rows) == 1
    row = rows[0]
    assert row.delta == pytest.approx(0.2)
    assert row.realizable
    assert row.sum_bounds is not None and row.sum_bounds > 0


def test_sweep_zero_requirements_always_realizable():
    spec = parse_spec("delta 0; cars A B; snd A->B(d) . ack B->A : 0")
    rows = feasibility_sweep(spec.protocol, [2, 50, 5000], [1000.0], [1.0])
    assert all(row.realizable and row.sum_bounds == 0 for row in rows)


def test_sweep_rejects_ill_posed():
    spec = parse_spec("delta 0; cars A B; e A->B : 0.5")
    with pytest.raises(NotWellPosed):
        feasibility_sweep(spec.protocol, [2], [1.0], [1.0])


def hard_spec():
    return parse_spec(
        "delta 0.35; cars A B; snd A->B(d) . (ack B->A : 0.9 | nack B->A : 0.9)"
    ).protocol


def test_sweep_flips_at_most_once_per_axis():
    spec = hard_spec()
    ns = [2, 3, 4, 5, 6, 7]
    dmaxes = [50.0, 100.0, 150.0, 200.0]
    taus = [1.0, 2.0, 3.0]
    rows = feasibility_sweep(spec, ns, dmaxes, taus)
    table = {(r.n_cars, r.d_max, r.tau_min): r.realizable for r in rows}
    seen_true = seen_false = False
    for dm in dmaxes:
        for tau in taus:
            line = [table[(n, dm, tau)] for n in ns]
            assert line == sorted(line, reverse=True)  # True..True False..False
            seen_true |= any(line)
            seen_false |= not all(line)
    for n in ns:
        for tau in taus:
            line = [table[(n, dm, tau)] for dm in dmaxes]
            assert line == sorted(line, reverse=True)
        for dm in dmaxes:
            line = [table[(n, dm, tau)] for tau in taus]
            assert line == sorted(line)  # realizability grows with slower load
    assert seen_true and seen_false  # the grid actually straddles the boundary


def test_csv_shape(example_spec):
    rows = feasibility_sweep(hard_spec(), [2, 40], [500.0], [1.0])
    csv = sweep_csv(rows)
    lines = csv.strip().split("\n")
    assert lines[0] == "N,d_max,tau_min,r,delta,realizable,sum_bounds"
    assert len(lines) == 3
    assert lines[1].startswith("2,")
    feasible_cells = lines[1].split(",")
    assert feasible_cells[5] == "true"
    assert feasible_cells[6] != ""
    infeasible_cells = lines[2].split(",")
    assert infeasible_cells[5] == "false"
    assert infeasible_cells[6] == ""
