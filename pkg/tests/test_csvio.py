import numpy as np
import pytest

from btcabm import csvio


def test_read_price_csv(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("Date,Close\n1,2.5\n2,3.0\n3,\n")
    assert csvio.read_price_csv(p).tolist() == [2.5, 3.0]
    q = tmp_path / "q.csv"
    q.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="price"):
        csvio.read_price_csv(q)
    e = tmp_path / "e.csv"
    e.write_text("")
    with pytest.raises(ValueError):
        csvio.read_price_csv(e)


def test_read_run_csv_errors(tmp_path):
    e = tmp_path / "e.csv"
    e.write_text("")
    with pytest.raises(ValueError, match="empty"):
        csvio.read_run_csv(e)
    m = tmp_path / "m.csv"
    m.write_text("step\n1\n")
    with pytest.raises(ValueError, match="close"):
        csvio.read_run_csv(m)


def test_float_format_round_trips():
    for x in (0.1, 1e-300, 123456789.123456789, 0.0649):
        assert float(csvio._fmt(x)) == x
    assert csvio._fmt(np.int64(5)) == "5"


def test_seed_from_name():
    assert csvio.seed_from_name("out/run_17.csv") == "17"
    assert csvio.seed_from_name("prices.csv") == "prices"
