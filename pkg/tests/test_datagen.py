"""Scenario generation, link budget accounting and dataset I/O."""

from __future__ import annotations

import math

import numpy as np
import pytest

from skylink import (
    A2GParams,
    CSV_HEADER,
    ConfigurationError,
    Dataset,
    DomainError,
    FadingSpec,
    HataParams,
    LinkBudget,
    LinkGeometry,
    RicianParams,
    SchemaError,
    budget_from_dict,
    elevation_angle,
    fading_draw_db,
    features_targets,
    gen_altitude_waypoints,
    gen_distance_sweep,
    generate_from_metadata,
    hata_path_loss,
    mean_path_loss,
    metadata_path_for,
    plos_sigmoid,
    read_curve_csv,
    read_dataset,
    rss_from_path_loss,
    slant_distance,
    split,
    write_curve_csv,
    write_dataset,
)


class TestLinkBudget:
    def test_rss_accounting(self):
        budget = LinkBudget(tx_power_dbm=30.0, tx_gain_dbi=5.0, rx_gain_dbi=5.0)
        assert rss_from_path_loss(budget, 110.0) == -70.0

    def test_extra_loss_subtracts_linearly(self):
        budget = LinkBudget(tx_power_dbm=20.0)
        base = rss_from_path_loss(budget, 100.0)
        assert rss_from_path_loss(budget, 103.5) == base - 3.5

    def test_fading_off_ignores_draw(self):
        budget = LinkBudget(tx_power_dbm=20.0)
        assert rss_from_path_loss(budget, 100.0, draw_db=7.0) == (
            rss_from_path_loss(budget, 100.0)
        )

    def test_nonfinite_loss_rejected(self):
        budget = LinkBudget(tx_power_dbm=20.0)
        with pytest.raises(DomainError):
            rss_from_path_loss(budget, math.inf)

    def test_fading_spec_validation(self):
        with pytest.raises(ConfigurationError):
            FadingSpec(kind="nakagami")
        with pytest.raises(ConfigurationError):
            FadingSpec(kind="rician")
        with pytest.raises(ConfigurationError):
            FadingSpec(kind="gaussian_shadow", sigma_db=-1.0)

    def test_budget_dict_round_trip(self):
        budgets = [
            LinkBudget(tx_power_dbm=30.0, seed=4),
            LinkBudget(
                tx_power_dbm=27.0,
                fading=FadingSpec(kind="gaussian_shadow", sigma_db=3.0),
            ),
            LinkBudget(
                tx_power_dbm=25.0,
                fading=FadingSpec(
                    kind="rician", rician=RicianParams(s=1.0, delta=0.4)
                ),
            ),
        ]
        from skylink.datagen import _budget_to_dict

        for budget in budgets:
            assert budget_from_dict(_budget_to_dict(budget)) == budget


class TestFadingDraws:
    def test_off_draws_zero(self):
        budget = LinkBudget(tx_power_dbm=30.0)
        assert fading_draw_db(budget, 0) == 0.0
        assert fading_draw_db(budget, 99) == 0.0

    def test_deterministic_per_index(self):
        budget = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(kind="gaussian_shadow", sigma_db=4.0),
            seed=3,
        )
        assert fading_draw_db(budget, 7) == fading_draw_db(budget, 7)
        assert fading_draw_db(budget, 7) != fading_draw_db(budget, 8)

    def test_draws_do_not_depend_on_visit_order(self):
        budget = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(kind="gaussian_shadow", sigma_db=4.0),
            seed=3,
        )
        forward = [fading_draw_db(budget, i) for i in range(20)]
        backward = [fading_draw_db(budget, i) for i in reversed(range(20))]
        assert forward == backward[::-1]

    def test_different_seeds_decorrelate(self):
        a = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(kind="gaussian_shadow", sigma_db=4.0),
            seed=1,
        )
        b = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(kind="gaussian_shadow", sigma_db=4.0),
            seed=2,
        )
        assert fading_draw_db(a, 0) != fading_draw_db(b, 0)

    def test_shadowing_moments(self):
        sigma = 4.0
        budget = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(kind="gaussian_shadow", sigma_db=sigma),
            seed=5,
        )
        n = 20000
        draws = np.array([fading_draw_db(budget, i) for i in range(n)])
        assert abs(draws.mean()) < 3.0 * sigma / math.sqrt(n)
        assert draws.std() == pytest.approx(sigma, rel=0.05)

    def test_rician_draw_is_mean_power_neutral(self):
        budget = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(
                kind="rician", rician=RicianParams(s=1.0, delta=0.5)
            ),
            seed=6,
        )
        n = 20000
        # draw = -10 log10(power ratio), so the linear ratio must average 1.
        ratios = np.array(
            [10.0 ** (-fading_draw_db(budget, i) / 10.0) for i in range(n)]
        )
        se = ratios.std(ddof=1) / math.sqrt(n)
        assert abs(ratios.mean() - 1.0) < 3.0 * se


class TestDistanceSweep:
    def test_row_layout(self, urban):
        distances = [float(d) for d in np.linspace(100.0, 2000.0, 25)]
        ds = gen_distance_sweep(urban, h_fixed=100.0, distances=distances)
        assert len(ds.samples) == 25
        assert [s.index for s in ds.samples] == list(range(25))
        assert all(s.scenario == "distance_sweep" for s in ds.samples)
        assert all(s.h_m == 100.0 for s in ds.samples)
        assert [s.d_m for s in ds.samples] == distances

    def test_rss_decays_without_fading(self, urban):
        distances = [float(d) for d in np.linspace(100.0, 2000.0, 40)]
        ds = gen_distance_sweep(urban, h_fixed=100.0, distances=distances)
        rss = [s.rss_dbm for s in ds.samples]
        assert all(b < a for a, b in zip(rss, rss[1:]))

    def test_channel_columns_match_models(self, urban):
        ds = gen_distance_sweep(
            urban, h_fixed=120.0, distances=[200.0, 800.0, 1500.0]
        )
        params = A2GParams(f_c=2000.0 * 1e6, env=urban)
        for s in ds.samples:
            geom = LinkGeometry(h=s.h_m, r=s.d_m)
            assert s.plos == plos_sigmoid(urban, elevation_angle(geom))
            assert s.pl_db == mean_path_loss(
                params, geom, "sigmoid", rx_height_m=1.5
            )
            assert s.rss_dbm == 30.0 - s.pl_db

    def test_hata_rows_use_altitude_as_base_height(self, urban):
        ds = gen_distance_sweep(
            urban, h_fixed=50.0, distances=[500.0, 1200.0],
            f_mhz=900.0, pl_model="hata",
        )
        for s in ds.samples:
            hp = HataParams(f_mhz=900.0, h_b=50.0, h_m=1.5)
            d_km = slant_distance(LinkGeometry(h=50.0, r=s.d_m)) / 1000.0
            assert s.pl_db == hata_path_loss(hp, d_km)

    def test_requires_increasing_distances(self, urban):
        with pytest.raises(ConfigurationError):
            gen_distance_sweep(urban, 100.0, [500.0, 400.0])
        with pytest.raises(ConfigurationError):
            gen_distance_sweep(urban, 100.0, [500.0, 500.0])
        with pytest.raises(ConfigurationError):
            gen_distance_sweep(urban, 100.0, [])

    def test_bad_geometry_names_the_row(self, urban):
        with pytest.raises(DomainError) as excinfo:
            gen_distance_sweep(urban, 100.0, [-5.0, 100.0])
        assert "row 0" in str(excinfo.value)


class TestAltitudeWaypoints:
    def test_default_waypoints(self, urban):
        ds = gen_altitude_waypoints(urban)
        assert [s.h_m for s in ds.samples] == [float(h) for h in range(20, 201, 20)]
        assert all(s.d_m == 500.0 for s in ds.samples)
        assert all(s.scenario == "altitude_waypoints" for s in ds.samples)

    def test_los_odds_improve_with_altitude(self, urban):
        ds = gen_altitude_waypoints(urban)
        plos = [s.plos for s in ds.samples]
        assert all(b > a for a, b in zip(plos, plos[1:]))

    def test_channel_columns_match_models(self, suburban):
        ds = gen_altitude_waypoints(suburban, altitudes=[30.0, 90.0, 180.0])
        params = A2GParams(f_c=2000.0 * 1e6, env=suburban)
        for s in ds.samples:
            geom = LinkGeometry(h=s.h_m, r=s.d_m)
            assert s.plos == plos_sigmoid(suburban, elevation_angle(geom))
            assert s.pl_db == mean_path_loss(
                params, geom, "sigmoid", rx_height_m=1.5
            )

    def test_rejects_bad_altitudes(self, urban):
        with pytest.raises(ConfigurationError):
            gen_altitude_waypoints(urban, altitudes=[])
        with pytest.raises(ConfigurationError):
            gen_altitude_waypoints(urban, altitudes=[50.0, -10.0])


class TestSplit:
    def make_dataset(self, urban, n=10):
        distances = [float(d) for d in np.linspace(100.0, 1000.0, n)]
        return gen_distance_sweep(urban, 100.0, distances)

    def test_sizes_and_partition(self, urban):
        ds = self.make_dataset(urban)
        train, test = split(ds, 0.8, seed=13)
        assert len(train.samples) == 8
        assert len(test.samples) == 2
        got = sorted(s.index for s in train.samples + test.samples)
        assert got == list(range(10))

    def test_each_side_stays_ordered(self, urban):
        ds = self.make_dataset(urban, n=30)
        train, test = split(ds, 0.7, seed=5)
        for side in (train, test):
            idx = [s.index for s in side.samples]
            assert idx == sorted(idx)

    def test_deterministic_per_seed(self, urban):
        ds = self.make_dataset(urban, n=20)
        a_train, _ = split(ds, 0.8, seed=13)
        b_train, _ = split(ds, 0.8, seed=13)
        assert [s.index for s in a_train.samples] == [
            s.index for s in b_train.samples
        ]
        c_train, _ = split(ds, 0.8, seed=14)
        assert [s.index for s in a_train.samples] != [
            s.index for s in c_train.samples
        ]

    def test_metadata_records_roles(self, urban):
        ds = self.make_dataset(urban)
        train, test = split(ds, 0.8, seed=13)
        assert train.metadata["split"]["role"] == "train"
        assert test.metadata["split"]["role"] == "test"
        assert train.metadata["split"]["seed"] == 13

    def test_rejects_empty_sides(self, urban):
        ds = self.make_dataset(urban)
        with pytest.raises(ConfigurationError):
            split(ds, 0.01, seed=0)
        with pytest.raises(ConfigurationError):
            split(ds, 1.0, seed=0)
        with pytest.raises(ConfigurationError):
            split(ds, 0.0, seed=0)


class TestFeaturesTargets:
    def test_column_layout(self, urban):
        ds = gen_distance_sweep(urban, 100.0, [200.0, 700.0])
        X, Y = features_targets(ds)
        assert X.shape == (2, 4)
        assert Y.shape == (2, 1)
        s = ds.samples[1]
        np.testing.assert_array_equal(X[1], [s.d_m, s.h_m, s.f_mhz, s.pl_db])
        assert Y[1, 0] == s.rss_dbm


class TestDatasetIO:
    def test_round_trip_is_exact(self, tmp_path, urban):
        distances = [float(d) for d in np.linspace(100.0, 2000.0, 15)]
        budget = LinkBudget(
            tx_power_dbm=30.0,
            fading=FadingSpec(kind="gaussian_shadow", sigma_db=2.0),
            seed=9,
        )
        ds = gen_distance_sweep(urban, 100.0, distances, budget=budget)
        path = tmp_path / "data.csv"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert back.samples == ds.samples
        assert back.metadata == ds.metadata

    def test_unix_line_endings_and_header(self, tmp_path, urban):
        ds = gen_distance_sweep(urban, 100.0, [200.0, 700.0])
        path = tmp_path / "data.csv"
        write_dataset(ds, path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.split(b"\n")[0].decode() == ",".join(CSV_HEADER)

    def test_sidecar_path_convention(self, tmp_path, urban):
        ds = gen_distance_sweep(urban, 100.0, [200.0, 700.0])
        path = tmp_path / "data.csv"
        sidecar = write_dataset(ds, path)
        assert sidecar == metadata_path_for(path)
        assert sidecar.endswith("data.json")

    def test_regeneration_from_sidecar_is_bit_identical(self, tmp_path, urban):
        budget = LinkBudget(
            tx_power_dbm=27.0,
            fading=FadingSpec(
                kind="rician", rician=RicianParams(s=1.0, delta=0.3)
            ),
            seed=21,
        )
        ds = gen_altitude_waypoints(urban, budget=budget)
        path = tmp_path / "data.csv"
        write_dataset(ds, path)
        rebuilt = generate_from_metadata(read_dataset(path).metadata)
        assert rebuilt.samples == ds.samples

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
        with pytest.raises(SchemaError) as excinfo:
            read_dataset(path)
        assert ":1:" in str(excinfo.value)

    def test_rejects_bad_field_with_line_number(self, tmp_path, urban):
        ds = gen_distance_sweep(urban, 100.0, [200.0, 700.0])
        path = tmp_path / "data.csv"
        write_dataset(ds, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[2] = lines[2].replace(lines[2].split(",")[2], "not-a-number", 1)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError) as excinfo:
            read_dataset(path)
        assert ":3:" in str(excinfo.value)

    def test_rejects_out_of_range_plos(self, tmp_path, urban):
        ds = gen_distance_sweep(urban, 100.0, [200.0, 700.0])
        path = tmp_path / "data.csv"
        write_dataset(ds, path)
        text = path.read_text(encoding="utf-8")
        s = ds.samples[0]
        text = text.replace(repr(s.plos), "1.5", 1)
        path.write_text(text, encoding="utf-8")
        with pytest.raises(SchemaError) as excinfo:
            read_dataset(path)
        assert "PLOS" in str(excinfo.value)

    def test_rejects_duplicate_indexes(self, tmp_path, urban):
        ds = gen_distance_sweep(urban, 100.0, [200.0, 700.0])
        path = tmp_path / "data.csv"
        write_dataset(ds, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[2] = "0" + lines[2][1:]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError) as excinfo:
            read_dataset(path)
        assert "duplicate" in str(excinfo.value)

    def test_rejects_header_only_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(CSV_HEADER) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError):
            read_dataset(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_dataset(tmp_path / "nope.csv")


class TestCurveCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "curve.csv"
        rows = [[0.0, 1.0], [0.5, 0.25], [1.0, 0.0625]]
        write_curve_csv(
            path, ["skylink test", "config_sha256=abc"], ["x", "y"], rows
        )
        comments, header, back = read_curve_csv(path)
        assert comments == ["skylink test", "config_sha256=abc"]
        assert header == ["x", "y"]
        assert back == rows

    def test_comment_prefix_format(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve_csv(path, ["note"], ["x"], [[1.0]])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# note"
        assert lines[1] == "x"
