from __future__ import annotations

import json

import pytest

from regret_forge.adversaries import build_geometric_sl, build_lsdet, build_lsrand, build_lsrandpp, parse_adversary
from regret_forge.core import EtaSchedule, Horizon, RegretReport
from regret_forge.errors import SerializationError
from regret_forge.regret import ReportRow, read_rows, write_rows
from regret_forge.serialize import dumps, from_dict, loads, to_dict


@pytest.mark.parametrize(
    "adv",
    [
        build_lsdet(30, 2, 7),
        build_lsdet(30, 3, 6),
        build_geometric_sl(4),
        build_lsrand(30, 2, 5),
        build_lsrandpp(30, 4, 5, 0.866),
        parse_adversary("0.25: L*2 S; 0.75: I S*4", 2),
    ],
)
def test_adversary_round_trip(adv):
    back = loads(dumps(adv))
    assert back == adv or back.support == adv.support


def test_infinite_values_survive():
    rep = RegretReport(float("inf"), 0.0, float("inf"), float("inf"))
    assert loads(dumps(rep)).regret == float("inf")


def test_errors():
    with pytest.raises(SerializationError):
        loads("{not json")
    with pytest.raises(SerializationError):
        from_dict({"schema": "other/9", "type": "Horizon"})
    with pytest.raises(SerializationError):
        from_dict({**to_dict(Horizon.finite(3)), "type": "Nope"})
    with pytest.raises(SerializationError):
        dumps(EtaSchedule.arbitrary(lambda t: 0.1))
    with pytest.raises(SerializationError):
        dumps(object())
    with pytest.raises(SerializationError):
        loads(json.dumps({"schema": "regret-forge/1", "type": "GameConfig"}))


def test_csv_round_trip_at_full_precision():
    rows = [
        ReportRow(Horizon.finite(12), 2, "single", "0.5", "L*4 S*4", RegretReport.from_parts(0.1 + 0.2, 1 / 3, Horizon.finite(12))),
        ReportRow(Horizon.finite(7), 3, "random", "x,y", 'quote"d', RegretReport.from_parts(1e-300, 2.0**60, Horizon.finite(7))),
    ]
    text = write_rows(rows)
    assert read_rows(text) == rows
    assert write_rows(read_rows(text)) == text


def test_csv_extra_columns_and_errors():
    rep = RegretReport.from_parts(1.0, 2.0, Horizon.geometric(0.5))
    row = ReportRow(Horizon.geometric(0.5), 2, "single", "0.1", "loop", rep, (("mc_estimate", "2.9"), ("seed", "4")))
    assert read_rows(write_rows([row])) == [row]
    with pytest.raises(SerializationError):
        write_rows([])
    with pytest.raises(SerializationError):
        read_rows("a,b\n1,2\n")
    with pytest.raises(SerializationError):
        write_rows([row, ReportRow(Horizon.finite(3), 2, "single", "0.1", "L", rep)])
