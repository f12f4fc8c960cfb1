import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from reserve_insure.errors import DataError
from reserve_insure.ingest import (
    fit_wind, fmt, load_prices, read_lmp, read_matrix, read_prices, read_wind, write_csv, write_lmp,
    write_matrix,
)


def price_file(path, hours=range(24), date=None, value=lambda h: 20.0 + h):
    head = "hour,price_usd_per_mwh" + (",date" if date else "")
    rows = [f"{h},{value(h)}" + (f",{date}" if date else "") for h in hours]
    path.write_text("\n".join([head] + rows) + "\n")
    return path


def wind_file(path, rows):
    path.write_text("timestamp,power_mw\n" + "".join(f"{t},{p}\n" for t, p in rows))
    return path


def full_month(month=6, days=3, value=lambda d, h: 10.0 + h + d):
    return [(f"2018-{month:02d}-{d:02d}T{h:02d}:00:00", value(d, h)) for d in range(1, days + 1) for h in range(24)]


class TestPrices:
    def test_single_day(self, tmp_path):
        out = read_prices(price_file(tmp_path / "p.csv"))
        assert list(out) == [""]
        assert_allclose(out[""], 20.0 + np.arange(24))

    def test_dated_days(self, tmp_path):
        p = tmp_path / "p.csv"
        a = price_file(tmp_path / "a.csv", date="2018-07-01").read_text()
        b = price_file(tmp_path / "b.csv", date="2018-07-02", value=lambda h: 5.0).read_text()
        p.write_text(a + b.split("\n", 1)[1])
        out = read_prices(p)
        assert list(out) == ["2018-07-01", "2018-07-02"]
        assert_allclose(out["2018-07-02"], 5.0)

    def test_missing_hour_named(self, tmp_path):
        p = price_file(tmp_path / "p.csv", hours=[h for h in range(24) if h != 13])
        with pytest.raises(DataError, match=r"missing hour\(s\) \[13\]"):
            read_prices(p)

    def test_non_finite_line_number(self, tmp_path):
        p = price_file(tmp_path / "p.csv", value=lambda h: "nan" if h == 4 else 30.0)
        with pytest.raises(DataError) as info:
            read_prices(p)
        # header is line 1, hour 0 is line 2
        assert info.value.line == 6
        assert ":6:" in str(info.value)

    @pytest.mark.parametrize("hours, match", [
        (list(range(24)) + [5], "duplicate hour 5"),
        (list(range(23)) + [24], "outside 0-23"),
    ])
    def test_bad_hours(self, tmp_path, hours, match):
        with pytest.raises(DataError, match=match):
            read_prices(price_file(tmp_path / "p.csv", hours=hours))

    def test_missing_column(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("hour,cost\n0,1\n")
        with pytest.raises(DataError, match="missing column"):
            read_prices(p)

    def test_text_price(self, tmp_path):
        p = price_file(tmp_path / "p.csv", value=lambda h: "abc" if h == 0 else 1.0)
        with pytest.raises(DataError, match="not a number"):
            read_prices(p)

    def test_load_with_ratio(self, tmp_path):
        days = load_prices(price_file(tmp_path / "p.csv"), ratio=0.4)
        assert days[""].lambda_p == pytest.approx(43.0 / 0.4)
        with pytest.raises(ValueError):
            load_prices(tmp_path / "p.csv", penalty=100.0, ratio=0.4)


class TestWind:
    def test_negative_reading_warned(self, tmp_path):
        rows = full_month()
        rows[5] = (rows[5][0], -1.0)
        with pytest.warns(RuntimeWarning, match="1 negative wind reading"):
            groups, rejected = read_wind(wind_file(tmp_path / "w.csv", rows))
        assert rejected == 1
        assert len(groups[(6, 5)]) == 2

    def test_fit_matches_sample_statistics(self, tmp_path):
        rows = full_month()
        models = fit_wind(wind_file(tmp_path / "w.csv", rows), capacity=60.0)
        m = models[6]
        by_hour = np.array([[p for t, p in rows if int(t[11:13]) == h] for h in range(24)])
        assert_allclose(m.mu, by_hour.mean(axis=1))
        assert_allclose(m.sigma, by_hour.std(axis=1, ddof=1))
        assert m.capacity == 60.0

    def test_missing_hour(self, tmp_path):
        rows = [r for r in full_month() if not r[0].endswith("T07:00:00")]
        with pytest.raises(DataError, match=r"month 6 has no readings for hour\(s\) \[7\]"):
            fit_wind(wind_file(tmp_path / "w.csv", rows))

    def test_bad_timestamp(self, tmp_path):
        with pytest.raises(DataError, match="ISO 8601") as info:
            read_wind(wind_file(tmp_path / "w.csv", [("yesterday", 3.0)]))
        assert info.value.line == 2


class TestWriters:
    def test_fmt_round_trip(self):
        for x in (0.1, 1 / 3, 1e-300, 12345.678901234567, -2.5):
            assert float(fmt(x)) == x
        assert fmt(3) == "3"
        assert fmt(np.True_) == "1"

    def test_lmp_round_trip(self, tmp_path):
        lmp = np.random.default_rng(1).uniform(10, 50, (24, 3))
        write_lmp(tmp_path / "lmp.csv", [2, 5, 9], lmp)
        buses, back = read_lmp(tmp_path / "lmp.csv")
        assert buses == [2, 5, 9]
        assert_array_equal(back, lmp)

    def test_matrix_round_trip(self, tmp_path):
        grid = np.random.default_rng(2).random((4, 4)) > 0.5
        write_matrix(tmp_path / "m.csv", [1, 2, 3, 4], grid)
        buses, back = read_matrix(tmp_path / "m.csv")
        assert buses == [1, 2, 3, 4]
        assert_array_equal(back, grid)
        assert (tmp_path / "m.csv").read_text().startswith("wind_bus,1,2,3,4\n")

    def test_write_csv_bytes_stable(self, tmp_path):
        rows = [("a", 0.1, 2), ("b", 1e-9, 3)]
        write_csv(tmp_path / "x.csv", ("k", "v", "n"), rows)
        assert (tmp_path / "x.csv").read_bytes() == b"k,v,n\na,0.1,2\nb,1e-09,3\n"
