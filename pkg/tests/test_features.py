"""Feature values against hand arithmetic, forward-drawdown label semantics,
train-range standardization, truncation invariance, and CSV round-trips."""

import numpy as np
import pytest

from srr.errors import DataError
from srr.features import (FeaturePanel, Standardization, apply_standardization,
                          attach_labels, compute_features, compute_labels,
                          feature_names, read_features_csv, read_graph_labels_csv,
                          standardize, write_features_csv, write_graph_labels_csv)
from srr.market_data import PricePanel, log_returns
from srr.synthetic import business_days, planted_regime_panel


def panel_from(prices, start="2020-01-01"):
    arr = np.asarray(prices, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    tickers = [f"T{i}" for i in range(arr.shape[0])]
    return PricePanel(tickers=tickers, dates=business_days(start, arr.shape[1]),
                      prices=arr)


SMALL = dict(vol_windows=(2,), dd_windows=(2,), mom_windows=(1,))


class TestFeatureValues:
    def test_names_default_order(self):
        assert feature_names() == ["ret_1d", "vol_20", "vol_60", "dd_20",
                                   "dd_60", "mom_10", "mom_30"]

    def test_hand_computed_small_panel(self):
        prices = panel_from([100.0, 110.0, 99.0, 104.5])
        fp = compute_features(log_returns(prices), prices, **SMALL)
        assert fp.names == ["ret_1d", "vol_2", "dd_2", "mom_1"]
        assert fp.dates == prices.dates[2:]
        r1, r2, r3 = np.log(1.1), np.log(0.9), np.log(104.5 / 99.0)
        # price index 2 (p=99)
        assert abs(fp.features[0, 0, 0] - r2) < 1e-15
        assert abs(fp.features[0, 0, 1] - abs(r1 - r2) / np.sqrt(2)) < 1e-15
        assert abs(fp.features[0, 0, 2] - (99.0 / 110.0 - 1.0)) < 1e-15
        assert abs(fp.features[0, 0, 3] - (99.0 / 110.0 - 1.0)) < 1e-15
        # price index 3 (p=104.5)
        assert abs(fp.features[0, 1, 0] - r3) < 1e-15
        assert abs(fp.features[0, 1, 1] - abs(r2 - r3) / np.sqrt(2)) < 1e-15
        assert fp.features[0, 1, 2] == 0.0  # at the 2-day rolling max
        assert abs(fp.features[0, 1, 3] - (104.5 / 99.0 - 1.0)) < 1e-15

    def test_increasing_prices_zero_drawdown(self):
        prices = panel_from(np.linspace(100, 200, 80))
        fp = compute_features(log_returns(prices), prices)
        dd_cols = [fp.names.index("dd_20"), fp.names.index("dd_60")]
        assert np.all(fp.features[:, :, dd_cols] == 0.0)

    def test_constant_prices_zero_vol_and_momentum(self):
        prices = panel_from(np.full(80, 42.0))
        fp = compute_features(log_returns(prices), prices)
        for name in ("ret_1d", "vol_20", "vol_60", "mom_10", "mom_30"):
            assert np.all(fp.features[:, :, fp.names.index(name)] == 0.0)

    def test_insufficient_history(self):
        prices = panel_from(np.linspace(100, 110, 60))  # needs > 60 dates
        with pytest.raises(DataError, match="need more than 60"):
            compute_features(log_returns(prices), prices)

    def test_truncation_invariance(self):
        dates, tickers, prices = planted_regime_panel(n_tickers=4, n_days=150, seed=3)
        full = PricePanel(tickers=tickers, dates=dates, prices=prices)
        cut = PricePanel(tickers=tickers, dates=dates[:100], prices=prices[:, :100])
        f_full = compute_features(log_returns(full), full)
        f_cut = compute_features(log_returns(cut), cut)
        n_cut = len(f_cut.dates)
        assert f_full.dates[:n_cut] == f_cut.dates
        assert np.array_equal(f_full.features[:, :n_cut, :], f_cut.features)


class TestLabels:
    def test_boundary_is_inclusive(self):
        # 75/100 and 0.25 are exact binary fractions, so the forward return
        # lands exactly on -threshold and the <= rule must fire.
        prices = panel_from([100.0, 100.0, 100.0, 75.0, 95.0, 100.0])
        node, graph, valid = compute_labels(prices, threshold=0.25, horizon=2)
        assert node[0].tolist() == [0, 1, 1, 0, 0, 0]
        assert graph.tolist() == [0, 1, 1, 0, 0, 0]  # single ticker: same rule
        assert valid.tolist() == [True, True, True, True, False, False]

    def test_just_above_boundary_is_negative(self):
        prices = panel_from([100.0, 90.001, 100.0])
        node, _, _ = compute_labels(prices, threshold=0.10, horizon=1)
        assert node[0, 0] == 0

    def test_portfolio_label_catches_joint_drawdown(self):
        # Neither ticker admits a -10% alone... except A; the equal-weight
        # portfolio still crosses because both fall together.
        prices = PricePanel(tickers=["A", "B"], dates=business_days("2020-01-01", 3),
                            prices=np.array([[100.0, 85.0, 100.0],
                                             [100.0, 94.0, 100.0]]))
        node, graph, valid = compute_labels(prices, threshold=0.10, horizon=2)
        assert valid.tolist() == [True, False, False]
        assert node[:, 0].tolist() == [1, 0]  # A -15%, B only -6%
        assert graph[0] == 1  # portfolio (0.85 + 0.94) / 2 = 0.895 -> -10.5%

    def test_portfolio_label_ignores_hedged_crash(self):
        prices = PricePanel(tickers=["A", "B"], dates=business_days("2020-01-01", 3),
                            prices=np.array([[100.0, 80.0, 100.0],
                                             [100.0, 105.0, 100.0]]))
        node, graph, _ = compute_labels(prices, threshold=0.10, horizon=2)
        assert node[:, 0].tolist() == [1, 0]
        assert graph[0] == 0  # portfolio worst point is -7.5%

    def test_renormalizes_at_every_entry_date(self):
        # A long slide: each date loses 4%. From any entry, two days forward
        # is ~ -7.8% (no label at horizon 2), yet from the first date the
        # cumulative fall is far past 10%: entry-relative, not path-relative.
        series = 100.0 * (0.96 ** np.arange(8))
        prices = panel_from(series)
        _, graph, valid = compute_labels(prices, threshold=0.10, horizon=2)
        assert np.all(graph[valid] == 0)

    def test_attach_aligns_on_feature_dates(self):
        dates, tickers, raw = planted_regime_panel(n_tickers=3, n_days=120, seed=1)
        prices = PricePanel(tickers=tickers, dates=dates, prices=raw)
        fp = compute_features(log_returns(prices), prices)
        attach_labels(fp, prices, threshold=0.10, horizon=20)
        node, graph, valid = compute_labels(prices, threshold=0.10, horizon=20)
        offset = len(dates) - len(fp.dates)
        for k in (5, 17, 40):
            assert fp.graph_labels[k] == graph[offset + k]
            assert fp.label_valid[k] == valid[offset + k]
            assert np.array_equal(fp.node_labels[:, k], node[:, offset + k])

    def test_label_param_validation(self):
        prices = panel_from([100.0, 90.0, 80.0])
        with pytest.raises(DataError):
            compute_labels(prices, threshold=0.0)
        with pytest.raises(DataError):
            compute_labels(prices, horizon=0)


def tiny_panel(values, names=("f0",)):
    """FeaturePanel over one ticker with explicit per-date feature values."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    t, f = values.shape
    return FeaturePanel(tickers=["A"], dates=business_days("2020-01-01", t),
                        features=values[None, :, :], names=list(names))


class TestStandardization:
    def test_two_point_train_maps_to_unit_scores(self):
        panel = tiny_panel([0.0, 2.0, 5.0])
        out = standardize(panel, (panel.dates[0], panel.dates[1]))
        # ddof=0 on train cells {0, 2}: mean 1, std 1
        assert np.allclose(out.features[0, :, 0], [-1.0, 1.0, 4.0], atol=1e-15)
        stats = out.standardization
        assert stats.mean[0] == 1.0 and stats.std[0] == 1.0

    def test_train_cells_have_exact_zero_mean_unit_std(self):
        rng = np.random.default_rng(2)
        panel = tiny_panel(rng.uniform(-3, 3, size=(10, 3)), names=["a", "b", "c"])
        out = standardize(panel, (panel.dates[0], panel.dates[6]))
        cells = out.features[:, :7, :]
        assert np.allclose(cells.mean(axis=(0, 1)), 0.0, atol=1e-12)
        assert np.allclose(cells.std(axis=(0, 1)), 1.0, atol=1e-12)

    def test_zero_variance_feature_warns_and_uses_unit_std(self):
        panel = tiny_panel(np.column_stack([np.ones(4), np.arange(4.0)]),
                           names=["flat", "live"])
        with pytest.warns(UserWarning, match="flat"):
            out = standardize(panel, (panel.dates[0], panel.dates[3]))
        assert out.standardization.degenerate == ["flat"]
        assert out.standardization.std[0] == 1.0
        assert np.all(out.features[0, :, 0] == 0.0)  # (1 - 1) / 1

    def test_apply_matches_fit(self):
        rng = np.random.default_rng(4)
        panel = tiny_panel(rng.uniform(size=(6, 2)), names=["a", "b"])
        fitted = standardize(panel, (panel.dates[0], panel.dates[3]))
        applied = apply_standardization(panel, fitted.standardization)
        assert np.array_equal(fitted.features, applied.features)

    def test_statistics_round_trip(self):
        stats = Standardization(mean=np.array([1.5]), std=np.array([0.25]),
                                train_start="2020-01-01", train_end="2020-02-01",
                                degenerate=["x"])
        back = Standardization.from_dict(stats.to_dict())
        assert np.array_equal(back.mean, stats.mean)
        assert np.array_equal(back.std, stats.std)
        assert back.degenerate == ["x"]

    def test_empty_train_range_errors(self):
        panel = tiny_panel([1.0, 2.0])
        with pytest.raises(DataError, match="no panel dates"):
            standardize(panel, ("1999-01-01", "1999-01-02"))


class TestCsvRoundTrips:
    def _labeled_panel(self):
        dates, tickers, raw = planted_regime_panel(n_tickers=3, n_days=120, seed=9)
        prices = PricePanel(tickers=tickers, dates=dates, prices=raw)
        fp = compute_features(log_returns(prices), prices)
        return attach_labels(fp, prices, threshold=0.10, horizon=20)

    def test_features_csv_bit_exact(self, tmp_path):
        fp = self._labeled_panel()
        path = str(tmp_path / "features.csv")
        write_features_csv(fp, path)
        back = read_features_csv(path)
        assert back.dates == fp.dates
        assert back.tickers == fp.tickers
        assert back.names == fp.names
        assert np.array_equal(back.features, fp.features)
        assert np.array_equal(back.node_labels[:, back.label_valid],
                              fp.node_labels[:, fp.label_valid])
        assert np.array_equal(back.label_valid, fp.label_valid)

    def test_graph_labels_csv_round_trip(self, tmp_path):
        fp = self._labeled_panel()
        path = str(tmp_path / "labels.csv")
        write_graph_labels_csv(fp, path)
        dates, labels, valid = read_graph_labels_csv(path)
        assert dates == fp.dates
        assert np.array_equal(valid, fp.label_valid)
        assert np.array_equal(labels[valid], fp.graph_labels[fp.label_valid])
