#!/usr/bin/env python3
"""Generates the bundled synthetic dataset under data/synthetic/.

Deterministic (fixed seed). The demand generator mimics the structure of
Japanese area-level load: a stable base level, annual seasonality with
winter and summer peaks, weekday/holiday factors taken from the real
holiday table, smooth AR(1) weather noise shared across areas, and a
multiplicative post-event effect path that differs by area. The exact
injected per-period effects are written to truth.json next to the data.

Run from the repository root:  python3 tools/make_synthetic.py
"""

import datetime as dt
import json
import math
import os
import random

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "data", "synthetic")

START = dt.date(2015, 4, 1)
END = dt.date(2021, 3, 31)
EVENT = dt.date(2020, 4, 1)

AREAS = [
    # (area_id, base MWh/day, effect scale)
    ("tokyo", 820000.0, 1.10),
    ("kansai", 450000.0, 1.00),
    ("chubu", 400000.0, 0.90),
]

# Prefecture rows present in the mobility file: a deliberate subset of each
# area's prefecture list so the weighted aggregation renormalizes, with
# Shizuoka feeding both the tokyo and chubu areas.
PREFS = ["Tokyo", "Kanagawa", "Saitama", "Aichi", "Shizuoka", "Osaka", "Hyogo"]

MOBILITY_START = dt.date(2020, 2, 15)

PERIODS = [
    ("Apr01-Jul31", (4, 1), (7, 31)),
    ("Aug01-Sep15", (8, 1), (9, 15)),
    ("Sep16-Dec15", (9, 16), (12, 15)),
    ("Dec16-Jan15", (12, 16), (1, 15)),
    ("Jan16-Mar31", (1, 16), (3, 31)),
]


def load_holidays():
    holidays = set()
    with open(os.path.join(ROOT, "data", "holidays_jp.txt")) as f:
        for line in f:
            line = line.split("#")[0].strip()
            if line:
                holidays.add(dt.date.fromisoformat(line))
    return holidays


HOLIDAYS = load_holidays()


def is_holiday(d):
    return d.weekday() >= 5 or d in HOLIDAYS


def day_factor(d):
    if d.weekday() == 6:
        return 0.86
    if d.weekday() == 5:
        return 0.91
    if d in HOLIDAYS:
        return 0.875
    return 1.0


def annual_season(d):
    doy = d.timetuple().tm_yday
    winter = 0.10 * math.cos(2 * math.pi * (doy - 15) / 365.25)
    summer = 0.09 * math.exp(-(((doy - 212) / 52.0) ** 2))
    return 1.0 + winter + summer


def effect_path(d):
    """Injected multiplicative effect for dates on/after the event.

    Deep spring drop, gradual recovery through autumn, and a mild increase
    in winter. Returns 0 before the event.
    """
    if d < EVENT:
        return 0.0
    md = (d.month, d.day)
    anchors = [
        ((4, 1), -0.040),
        ((4, 20), -0.100),
        ((5, 31), -0.095),
        ((6, 30), -0.050),
        ((7, 31), -0.035),
        ((8, 31), -0.022),
        ((9, 30), -0.015),
        ((10, 31), -0.010),
        ((11, 30), -0.005),
        ((12, 15), 0.000),
        ((12, 31), 0.018),
    ]
    jan_anchors = [
        ((1, 1), 0.022),
        ((1, 15), 0.020),
        ((2, 15), 0.014),
        ((3, 31), 0.008),
    ]
    table = anchors if d.month >= 4 else jan_anchors
    if md <= table[0][0]:
        return table[0][1]
    for (a, va), (b, vb) in zip(table, table[1:]):
        if a <= md <= b:
            # linear interpolation in day counts within one non-leap year
            ya = dt.date(2001, *a)
            yb = dt.date(2001, *b)
            yd = dt.date(2001, *md)
            t = (yd - ya).days / max(1, (yb - ya).days)
            return va + t * (vb - va)
    return table[-1][1]


def gen_demand():
    rng_weather = random.Random(90210)
    weather = {}
    w = 0.0
    d = START
    while d <= END:
        w = 0.6 * w + rng_weather.gauss(0.0, 0.0025)
        weather[d] = w
        d += dt.timedelta(days=1)

    rows = []
    truth = {}
    area_seed = {"tokyo": 101, "kansai": 202, "chubu": 303}
    for area_id, base, scale in AREAS:
        rng = random.Random(area_seed[area_id])
        noise = 0.0
        counterfactual = {}
        actual = {}
        d = START
        while d <= END:
            level = base
            noise = 0.3 * noise + rng.gauss(0.0, 0.003)
            cf = level * annual_season(d) * day_factor(d) * (
                1.0 + weather[d] + noise)
            eff = scale * effect_path(d)
            counterfactual[d] = cf
            actual[d] = cf * (1.0 + eff)
            rows.append((area_id, d, actual[d]))
            d += dt.timedelta(days=1)

        # Exact injected relative effect per reporting period over the
        # weekday evaluation stream (the quantity the pipeline estimates).
        per_period = {}
        for label, (sm, sd_), (em, ed_) in PERIODS:
            s_actual = 0.0
            s_cf = 0.0
            d = EVENT
            while d <= END:
                md = (d.month, d.day)
                start, end = (sm, sd_), (em, ed_)
                inside = (start <= md <= end) if start <= end else (
                    md >= start or md <= end)
                if inside and not is_holiday(d):
                    s_actual += actual[d]
                    s_cf += counterfactual[d]
                d += dt.timedelta(days=1)
            per_period[label] = (s_actual - s_cf) / s_cf
        truth[area_id] = per_period

    with open(os.path.join(OUT, "demand_daily.csv"), "w", newline="\n") as f:
        f.write("area_id,date,demand,unit\n")
        for area_id, d, v in rows:
            f.write(f"{area_id},{d.isoformat()},{v:.17g},MWh\n")
    with open(os.path.join(OUT, "truth.json"), "w", newline="\n") as f:
        json.dump({"injected_relative_effect_by_period": truth}, f, indent=2)
        f.write("\n")


def mobility_trend(d):
    """Workplace mobility percent change: two emergency-period dips."""
    if d < dt.date(2020, 3, 1):
        base = -1.0
    elif d < dt.date(2020, 4, 7):
        t = (d - dt.date(2020, 3, 1)).days / 37.0
        base = -1.0 - 14.0 * t
    elif d < dt.date(2020, 5, 25):
        base = -33.0
    elif d < dt.date(2020, 8, 1):
        t = (d - dt.date(2020, 5, 25)).days / 68.0
        base = -33.0 + 21.0 * t
    elif d < dt.date(2021, 1, 8):
        base = -11.0
    elif d < dt.date(2021, 3, 22):
        base = -19.0
    else:
        base = -9.0
    return base


def gen_mobility():
    rng = random.Random(4571)
    path = os.path.join(OUT, "mobility.csv")
    cols = [
        "country_region_code", "country_region", "sub_region_1",
        "sub_region_2", "date",
        "retail_and_recreation_percent_change_from_baseline",
        "grocery_and_pharmacy_percent_change_from_baseline",
        "parks_percent_change_from_baseline",
        "transit_stations_percent_change_from_baseline",
        "workplaces_percent_change_from_baseline",
        "residential_percent_change_from_baseline",
    ]
    pref_offset = {p: rng.uniform(-3.0, 3.0) for p in PREFS}
    with open(path, "w", newline="\n") as f:
        f.write(",".join(cols) + "\n")
        d = MOBILITY_START
        while d <= END:
            # country-level row (no sub_region_1): ignored by the parser
            wrk_c = mobility_trend(d)
            f.write(f"JP,Japan,,,{d.isoformat()},{round(-0.8 * wrk_c)},"
                    f"{round(-0.2 * wrk_c)},,,{round(wrk_c)},"
                    f"{round(-0.45 * wrk_c)}\n")
            for p in PREFS:
                wrk = mobility_trend(d) + pref_offset[p] + rng.gauss(0, 2.0)
                resi = -0.45 * wrk + rng.gauss(0, 1.0)
                retl = 0.9 * wrk - 4.0 + rng.gauss(0, 2.5)
                grcy = 0.15 * wrk + rng.gauss(0, 1.5)
                # occasional missing cells, as in real exports
                if rng.random() < 0.004:
                    f.write(f"JP,Japan,{p},,{d.isoformat()},,,,,,\n")
                else:
                    f.write(f"JP,Japan,{p},,{d.isoformat()},{round(retl)},"
                            f"{round(grcy)},,,{round(wrk)},{round(resi)}\n")
            # a city-level row and an unmapped-name row for parser texture
            if d == dt.date(2020, 4, 1):
                f.write(f"JP,Japan,Tokyo,Shinjuku City,{d.isoformat()},"
                        f"-40,-8,,,-45,18\n")
                f.write(f"JP,Japan,Tokyo Metropolis,,{d.isoformat()},"
                        f"-38,-7,,,-41,17\n")
            d += dt.timedelta(days=1)


def gen_voltage():
    rng = random.Random(1199)
    path = os.path.join(OUT, "voltage_monthly.csv")
    classes = {
        "extra_high": (9000000.0, -0.12),
        "high": (8000000.0, -0.08),
        "low": (3500000.0, -0.05),
        "lighting": (7500000.0, 0.045),
    }
    with open(path, "w", newline="\n") as f:
        f.write("month,voltage_class,demand\n")
        for year in (2019, 2020, 2021):
            months = range(4, 13) if year == 2019 else (
                range(1, 13) if year == 2020 else range(1, 4))
            for m in months:
                for cls, (base, shock) in classes.items():
                    season = 1.0 + 0.12 * math.cos(2 * math.pi * (m - 1) / 12)
                    v = base * season * (1.0 + rng.gauss(0, 0.01))
                    in_shock = dt.date(year, m, 1) >= dt.date(2020, 4, 1)
                    if in_shock:
                        fade = min(1.0, max(0.3, 1.5 - 0.1 * (
                            (year - 2020) * 12 + m - 4)))
                        v *= 1.0 + shock * fade
                    f.write(f"{year}-{m:02d},{cls},{v:.17g}\n")


def gen_seasons():
    rng = random.Random(33550336)
    path = os.path.join(OUT, "temperature_groups.csv")
    groups = [
        ("spring", 92, 14.0, 4.2),
        ("summer", 92, 26.5, 2.1),
        ("autumn", 91, 17.0, 4.9),
        ("winter", 90, 6.0, 2.6),
    ]
    with open(path, "w", newline="\n") as f:
        f.write("label,value\n")
        for label, n, mu, sd in groups:
            for _ in range(n):
                f.write(f"{label},{rng.gauss(mu, sd):.2f}\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    gen_demand()
    gen_mobility()
    gen_voltage()
    gen_seasons()
    print("wrote", OUT)


if __name__ == "__main__":
    main()
